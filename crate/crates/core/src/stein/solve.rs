use serde::{Deserialize, Serialize};

use super::operator::{SteinBasis, SteinEval};
use crate::chaos::GammaTarget;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

/// Probability mass of `G(nu)` allowed outside a grid.
pub const TAIL_MASS_LIMIT: f64 = 1e-8;

/// Default grid `[-nu - 6, hi]` with 2048 nodes, where `hi` is the larger of
/// `-nu + 14 sqrt(nu)` and the `1 - 1e-10` quantile of `G(nu)`.
pub fn default_grid(target: &GammaTarget) -> GridSpec {
    let nu = target.nu();
    let hi = (-nu + 14.0 * nu.sqrt()).max(target.upper_quantile(1e-10));
    GridSpec::new(-nu - 6.0, hi, 2048).expect("valid default grid")
}

fn check_tails(grid: &GridSpec, target: &GammaTarget) -> Result<()> {
    let outside = target.cdf(grid.lo) + target.sf(grid.hi);
    if outside > TAIL_MASS_LIMIT {
        return Err(Error::TailMass(format!(
            "grid [{}, {}] leaves mass {outside:e} of G({}) outside (limit {TAIL_MASS_LIMIT:e})",
            grid.lo,
            grid.hi,
            target.nu()
        )));
    }
    Ok(())
}

/// `E[h(G(nu))]` for the piecewise-linear interpolant of `h`, integrated exactly.
pub fn target_expectation(h: &GridFunction, target: &GammaTarget) -> Result<f64> {
    check_tails(h.grid(), target)?;
    let basis = SteinBasis::shared(*h.grid(), *target)?;
    Ok(basis.prepare(h.values())?.expectation())
}

/// Solution of the Stein equation on the grid of `h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteinSolution {
    pub solution: GridFunction,
    pub derivative: GridFunction,
    pub target: GammaTarget,
    /// `E[h(G(nu))]`.
    pub expectation: f64,
    /// Largest ODE residual measured independently at segment midpoints.
    pub quadrature_error_estimate: f64,
}

/// Solves the Stein equation for `h`.
pub fn solve_stein(h: &GridFunction, target: &GammaTarget) -> Result<SteinSolution> {
    check_tails(h.grid(), target)?;
    let basis = SteinBasis::shared(*h.grid(), *target)?;
    let ev: SteinEval = basis.prepare(h.values())?;
    let residual = ev.ode_residual();
    let limit = 1e-6 * (1.0 + h.b_norm());
    if !(residual <= limit) {
        return Err(Error::numerical(format!(
            "Stein ODE residual {residual:e} exceeds {limit:e} on grid [{}, {}] with {} nodes",
            h.grid().lo,
            h.grid().hi,
            h.grid().n_points
        )));
    }
    Ok(SteinSolution {
        solution: GridFunction::new(*h.grid(), ev.node_solution().to_vec())?,
        derivative: GridFunction::new(*h.grid(), ev.node_derivative())?,
        target: *target,
        expectation: ev.expectation(),
        quadrature_error_estimate: residual,
    })
}

/// `S(h)` on the grid of `h`, without the residual diagnostics.
pub fn apply_s(h: &GridFunction, target: &GammaTarget) -> Result<GridFunction> {
    check_tails(h.grid(), target)?;
    let basis = SteinBasis::shared(*h.grid(), *target)?;
    let (v, _) = basis.apply_nodes(h.values())?;
    GridFunction::new(*h.grid(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectations() {
        let t = GammaTarget::new(2.0).unwrap();
        let g = default_grid(&t);
        let one = g.sample(|_| 1.0).unwrap();
        assert!((target_expectation(&one, &t).unwrap() - 1.0).abs() < 1e-14);
        let id = g.sample(|x| x).unwrap();
        assert!(target_expectation(&id, &t).unwrap().abs() < 1e-12);
        // x^2 is not piecewise linear: the interpolation error is O(dx^2)
        let sq = g.sample(|x| x * x).unwrap();
        let e = target_expectation(&sq, &t).unwrap();
        assert!((e - 4.0).abs() < 2e-3, "{e}");
    }

    #[test]
    fn narrow_grid_rejected() {
        let t = GammaTarget::new(2.0).unwrap();
        let g = GridSpec::new(-2.0, 5.0, 64).unwrap();
        let h = g.sample(|x| x).unwrap();
        assert!(matches!(target_expectation(&h, &t), Err(Error::TailMass(_))));
    }

    #[test]
    fn boundary_value() {
        let t = GammaTarget::new(3.0).unwrap();
        let g = GridSpec::new(-9.0, 60.0, 70).unwrap();
        let h = g.sample(|x| (0.3 * x).sin()).unwrap();
        let sol = solve_stein(&h, &t).unwrap();
        let k = 6;
        assert_eq!(g.x(k), -3.0);
        let expected = (h.values()[k] - sol.expectation) / 3.0;
        assert_eq!(sol.solution.values()[k], expected);
    }
}
