//! Named and randomly generated test functions on grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

/// Parses `identity`, `sin:w` or `ramp:a,b` (the identity clipped to `[a, b]`).
pub fn named_function(spec: &str, grid: GridSpec) -> Result<GridFunction> {
    let bad = || Error::validation(format!("unknown test function '{spec}' (expected identity, sin:w or ramp:a,b)"));
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
    };
    match (name, nums.as_slice()) {
        ("identity", []) => grid.sample(|x| x),
        ("sin", [w]) => grid.sample(|x| (w * x).sin()),
        ("ramp", [a, b]) if a < b => grid.sample(|x| x.clamp(*a, *b)),
        _ => Err(bad()),
    }
}

/// Random C^1 piecewise-cubic functions (cubic Hermite on 12 knots) sampled on `grid`.
pub fn random_lipschitz_corpus(grid: GridSpec, count: usize, seed: u64) -> Result<Vec<GridFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const KNOTS: usize = 12;
    (0..count)
        .map(|_| {
            let amp = rng.random_range(0.2..3.0);
            let width = (grid.hi - grid.lo) / (KNOTS - 1) as f64;
            let vals: Vec<f64> = (0..KNOTS).map(|_| amp * rng.random_range(-1.0..1.0)).collect();
            let ders: Vec<f64> = (0..KNOTS).map(|_| amp * rng.random_range(-1.0..1.0)).collect();
            grid.sample(|x| {
                let t = ((x - grid.lo) / width).clamp(0.0, (KNOTS - 1) as f64);
                let k = (t.floor() as usize).min(KNOTS - 2);
                let s = t - k as f64;
                let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
                let h10 = s.powi(3) - 2.0 * s * s + s;
                let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
                let h11 = s.powi(3) - s * s;
                h00 * vals[k] + h10 * width * ders[k] + h01 * vals[k + 1] + h11 * width * ders[k + 1]
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        let g = GridSpec::new(-5.0, 5.0, 101).unwrap();
        assert!((named_function("identity", g).unwrap().eval(1.5) - 1.5).abs() < 1e-14);
        assert!((named_function("sin:2", g).unwrap().values()[0] - (-10.0f64).sin()).abs() < 1e-15);
        let r = named_function("ramp:-1,2", g).unwrap();
        assert_eq!(r.values()[0], -1.0);
        assert!(named_function("ramp:2,1", g).is_err());
        assert!(named_function("cos:1", g).is_err());
    }

    #[test]
    fn corpus_is_reproducible() {
        let g = GridSpec::new(-3.0, 30.0, 256).unwrap();
        let a = random_lipschitz_corpus(g, 3, 9).unwrap();
        let b = random_lipschitz_corpus(g, 3, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|f| f.lip_norm() > 0.0));
    }
}
