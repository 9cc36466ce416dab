//! Distances between a second-chaos law and `G(nu)`.

pub mod d2;
pub mod family;
pub mod kummer;
pub mod two_eig;

pub use d2::{d2_lower_estimate, D2Method, DistanceEstimate};
pub use family::{build_test_family, FamilyMember, TestFamily};
pub use kummer::kummer_1f1_half;
pub use two_eig::{tv_distance_two_eig, two_eig_density};
