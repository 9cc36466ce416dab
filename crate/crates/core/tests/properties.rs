use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

use wgl_core::bounds::{identity_cumulant_combinations, malliavin_stein_upper, BoundReport};
use wgl_core::chaos::{char_function, cumulant_spectral, cumulant_target, spectral_from_kernel};
use wgl_core::distance::kummer_1f1_half;
use wgl_core::experiments::{gen_ar1, gen_ar2, gen_holder_qf, ustat_kernel, HolderBasis};
use wgl_core::gamma_ops::{var_combined, var_gamma_diff_cumulant, var_gamma_diff_trace};
use wgl_core::stein::{apply_s, default_grid, random_lipschitz_corpus};
use wgl_core::{GammaTarget, GridFunction, GridSpec, KernelMatrix, SpectralForm};

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 1..=10).prop_filter("nonzero", |c| c.iter().any(|&c| c.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn second_cumulant_is_twice_the_mass(c in spectrum()) {
        let f = SpectralForm::new(c).unwrap();
        let k2 = cumulant_spectral(&f, 2).unwrap();
        let want = 2.0 * f.sum_sq();
        prop_assert!((k2 - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn cumulants_are_homogeneous(c in spectrum(), alpha in -2.0..2.0f64, p in 2u32..8) {
        prop_assume!(alpha.abs() > 1e-2);
        let f = SpectralForm::new(c).unwrap();
        let g = f.scaled(alpha).unwrap();
        let lhs = cumulant_spectral(&g, p).unwrap();
        let rhs = alpha.powi(p as i32) * cumulant_spectral(&f, p).unwrap();
        let abs = SpectralForm::new(f.eigenvalues().iter().map(|c| c.abs()).collect()).unwrap();
        let scale = alpha.abs().powi(p as i32) * cumulant_spectral(&abs, p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn char_function_is_hermitian(c in spectrum(), t in -5.0..5.0f64) {
        let f = SpectralForm::new(c).unwrap();
        let a = char_function(&f, t);
        let b = char_function(&f, -t).conj();
        prop_assert!((a - b).norm() <= 1e-14);
    }

    #[test]
    fn diagonal_kernel_returns_its_entries(c in spectrum()) {
        let n = c.len();
        let k = KernelMatrix::from_lower(n, |i, j| if i == j { c[i] } else { 0.0 }).unwrap();
        let mut got = spectral_from_kernel(&k, k.default_tol()).unwrap().to_f64();
        let mut want: Vec<f64> = c.iter().copied().filter(|c| c.abs() > 1e-12 * k.frobenius_sq().sqrt()).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn variance_routes_agree(c in spectrum(), r in 1u32..=4) {
        let f = SpectralForm::new(c).unwrap();
        let a = var_gamma_diff_trace(&f, r).unwrap();
        let b = var_gamma_diff_cumulant(&f, r).unwrap();
        // the cumulant route subtracts terms of size up to 2^{2r+1} sum c^{2r} (|c| + 1)^2
        let scale: f64 = 2f64.powi(2 * r as i32 + 1)
            * f.eigenvalues().iter().map(|c| c.powi(2 * r as i32) * (c.abs() + 1.0).powi(2)).sum::<f64>();
        prop_assert!((a - b).abs() <= 1e-10 * scale.max(a.abs()), "{a} vs {b}");
    }

    #[test]
    fn variance_chain(c in spectrum()) {
        let f = SpectralForm::new(c).unwrap();
        let nu = f.sum_sq();
        for r in 1..=3 {
            let lo = var_gamma_diff_trace(&f, r + 1).unwrap();
            let hi = 4.0 * nu * var_gamma_diff_trace(&f, r).unwrap();
            prop_assert!(lo <= hi * (1.0 + 1e-10) + 1e-300);
        }
        let v1 = var_gamma_diff_trace(&f, 1).unwrap();
        prop_assert!(var_combined(&f) <= 2.0 * v1 * v1 * (1.0 + 1e-10));
    }

    #[test]
    fn report_terms_are_consistent(c in spectrum(), nu in 0.3..6.0f64) {
        let f = SpectralForm::new(c).unwrap().normalized(nu).unwrap().0;
        let t = GammaTarget::new(nu).unwrap();
        let rep = malliavin_stein_upper(&f, &t).unwrap();
        prop_assert_eq!(rep.m, rep.term_kappa3.max(rep.term_kappa4));
        prop_assert!(rep.d2_upper_shape >= rep.term_kappa3 + rep.term_kappa4);
        for v in [rep.term_var1, rep.term_cross, rep.term_combined, rep.term_suboptimal, rep.m, rep.sqrt_m] {
            prop_assert!(v.is_finite() && v >= 0.0);
        }
        prop_assert!(rep.term_cross.powi(2) <= 4.0 * nu * rep.term_var1.powi(2) * (1.0 + 1e-10) + 1e-300);
        let json = serde_json::to_string(&rep).unwrap();
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, rep);
    }

    #[test]
    fn normalization_hits_the_variance(c in spectrum(), nu in 0.1..10.0f64) {
        let (f, _) = SpectralForm::new(c).unwrap().normalized(nu).unwrap();
        prop_assert!((2.0 * f.sum_sq() - 2.0 * nu).abs() <= 1e-12);
    }

    #[test]
    fn spectral_json_round_trip(c in spectrum()) {
        let f = SpectralForm::new(c).unwrap();
        let back: SpectralForm = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn kummer_identity(z in -30.0..30.0f64) {
        let lhs = kummer_1f1_half(z);
        let rhs = z.exp() * kummer_1f1_half(-z);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
    }

    #[test]
    fn gamma_combinations_vanish_exactly(p in 1i64..200, q in 1i64..50) {
        let nu = BigRational::new(BigInt::from(p), BigInt::from(q));
        let k = |r| cumulant_target(&nu, r).unwrap();
        let (a, b) = identity_cumulant_combinations(&k(2), &k(3), &k(4));
        prop_assert!(a.is_zero() && b.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stein_operator_is_linear(seed in 0u64..1000, a in -3.0..3.0f64, b in -3.0..3.0f64, nu in 0.5..5.0f64) {
        let t = GammaTarget::new(nu).unwrap();
        let grid = default_grid(&t);
        let hs = random_lipschitz_corpus(grid, 2, seed).unwrap();
        let mix = hs[0].combine(a, &hs[1], b).unwrap();
        let s_mix = apply_s(&mix, &t).unwrap();
        let s0 = apply_s(&hs[0], &t).unwrap();
        let s1 = apply_s(&hs[1], &t).unwrap();
        let want = s0.combine(a, &s1, b).unwrap();
        let err = s_mix.values().iter().zip(want.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8, "err {err}");
    }

    #[test]
    fn grid_function_json_round_trip(lo in -10.0..0.0f64, width in 1.0..20.0f64, n in 16usize..64) {
        let grid = GridSpec::new(lo, lo + width, n).unwrap();
        let f = grid.sample(|x| x.sin() * x).unwrap();
        let back: GridFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn generated_kernels_keep_their_mass(n in 3usize..60, theta in 0.2..3.0f64, which in 0usize..3) {
        let k = match which {
            0 => ustat_kernel(n).unwrap(),
            1 => gen_ar2(n, theta).unwrap().matrix,
            _ => gen_holder_qf(n.max(4), 2, 1.0, HolderBasis::Trig).unwrap(),
        };
        let f = spectral_from_kernel(&k, k.default_tol()).unwrap();
        let total = f.sum_sq() + f.discarded_mass();
        prop_assert!((total - k.frobenius_sq()).abs() <= 1e-10 * k.frobenius_sq());
    }
}

#[test]
fn ar1_without_drift_is_the_ustat_kernel() {
    for n in [2, 5, 17, 40] {
        let a = gen_ar1(n, 0.0).unwrap();
        let b = ustat_kernel(n).unwrap();
        assert_eq!(a.as_slice(), b.as_slice(), "n = {n}");
    }
}

#[test]
fn gamma_combinations_in_floating_point() {
    for nu in [0.5, 1.0, 2.0] {
        let k = |r| cumulant_target(&nu, r).unwrap();
        assert_eq!(identity_cumulant_combinations(&k(2), &k(3), &k(4)), (0.0, 0.0));
    }
    let nu = BigRational::new(BigInt::from(73), BigInt::from(10));
    let k = |r| cumulant_target(&nu, r).unwrap();
    let (a, b) = identity_cumulant_combinations(&k(2), &k(3), &k(4));
    assert!(a.is_zero() && b.is_zero());
}
