//! The functional equation `g + lambda S(g) = h` on a grid.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operator::SteinBasis;
use crate::chaos::GammaTarget;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

/// Largest accepted 1-norm condition estimate of `I + lambda S`.
pub const MAX_CONDITION: f64 = 1e12;

/// Dense matrix of `S` acting on node values: column `j` is `S` of the `j`-th hat function.
pub struct DenseStein {
    basis: Arc<SteinBasis>,
    /// Row-major `n x n`.
    matrix: Vec<f64>,
    /// Factorizations of `I + lambda S` keyed by the bits of `lambda`.
    factors: RwLock<HashMap<u64, Arc<Factored>>>,
}

struct Factored {
    lu: Lu,
    condition: f64,
}

impl std::fmt::Debug for DenseStein {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseStein").field("n", &self.n()).finish_non_exhaustive()
    }
}

impl DenseStein {
    pub fn new(grid: GridSpec, target: GammaTarget) -> Result<Self> {
        let basis = SteinBasis::shared(grid, target)?;
        let n = grid.n_points;
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                basis.apply_nodes(&e).map(|(v, _)| v)
            })
            .collect::<Result<_>>()?;
        let mut matrix = vec![0.0; n * n];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                matrix[i * n + j] = *v;
            }
        }
        Ok(Self { basis, matrix, factors: RwLock::new(HashMap::new()) })
    }

    /// Shared matrix for `(grid, target)`.
    pub fn shared(grid: GridSpec, target: GammaTarget) -> Result<Arc<Self>> {
        type Key = (u64, u64, usize, u64);
        static CACHE: OnceLock<RwLock<HashMap<Key, Arc<DenseStein>>>> = OnceLock::new();
        let key = (grid.lo.to_bits(), grid.hi.to_bits(), grid.n_points, target.nu().to_bits());
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(m) = cache.read().get(&key) {
            return Ok(m.clone());
        }
        let built = Arc::new(Self::new(grid, target)?);
        Ok(cache.write().entry(key).or_insert(built).clone())
    }

    pub fn n(&self) -> usize {
        self.basis.grid().n_points
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n() + j]
    }

    pub fn basis(&self) -> &Arc<SteinBasis> {
        &self.basis
    }

    fn factored(&self, lambda: f64) -> Result<Arc<Factored>> {
        if let Some(f) = self.factors.read().get(&lambda.to_bits()) {
            return Ok(f.clone());
        }
        let n = self.n();
        let mut a: Vec<f64> = self.matrix.iter().map(|v| lambda * v).collect();
        for i in 0..n {
            a[i * n + i] += 1.0;
        }
        let norm1 = (0..n).map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max);
        let lu = Lu::factor(a, n)?;
        let condition = norm1 * lu.inverse_norm_estimate();
        let f = Arc::new(Factored { lu, condition });
        Ok(self.factors.write().entry(lambda.to_bits()).or_insert(f).clone())
    }

    /// 1-norm condition estimate of `I + lambda S`.
    pub fn condition_estimate(&self, lambda: f64) -> Result<f64> {
        Ok(self.factored(lambda)?.condition)
    }
}

/// LU factors with partial pivoting, row-major.
struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .expect("non-empty");
            let piv = a[p * n + k];
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::numerical(format!("I + lambda S is singular at pivot {k}")));
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let (top, rest) = a.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..];
            rest.par_chunks_mut(n).for_each(|row| {
                let l = row[k] / piv;
                row[k] = l;
                if l != 0.0 {
                    for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *x -= l * u;
                    }
                }
            });
        }
        Ok(Self { n, a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.a[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, x)| a * x).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.a[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(a, x)| a * x).sum();
            x[i] = (x[i] - s) / self.a[i * n + i];
        }
        x
    }

    /// Solves `A^T x = b`.
    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        // U^T y = b
        for i in 0..n {
            y[i] /= self.a[i * n + i];
            let yi = y[i];
            for j in i + 1..n {
                y[j] -= self.a[i * n + j] * yi;
            }
        }
        // L^T z = y
        for i in (0..n).rev() {
            let yi = y[i];
            for j in 0..i {
                y[j] -= self.a[i * n + j] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    /// Hager's estimate of `||A^{-1}||_1`.
    fn inverse_norm_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
        }
        est
    }
}

/// Solution of the functional equation with its diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FredholmSolution {
    pub g: GridFunction,
    /// `max_k |g + lambda S(g) - h|` at the nodes, with `S(g)` evaluated pointwise.
    pub residual: f64,
    /// 1-norm condition estimate of `I + lambda S`.
    pub condition_estimate: f64,
}

/// Solves `g + lambda S(g) = h` by collocation at the nodes of `h`.
pub fn solve_functional_equation(h: &GridFunction, lambda: f64, target: &GammaTarget) -> Result<FredholmSolution> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::validation(format!("lambda must be finite and nonzero, got {lambda}")));
    }
    let grid = *h.grid();
    let dense = DenseStein::shared(grid, *target)?;
    let factored = dense.factored(lambda)?;
    let condition = factored.condition;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::numerical(format!(
            "I + lambda S is ill-conditioned (estimate {condition:e}) for lambda = {lambda} on {} nodes; \
             the condition grows with |lambda| and with the node count",
            h.grid().n_points
        )));
    }
    let g = factored.lu.solve(h.values());

    let ev = dense.basis.prepare(&g)?;
    let residual = grid
        .nodes()
        .iter()
        .zip(&g)
        .zip(h.values())
        .map(|((&x, gk), hk)| (gk + lambda * ev.value(x) - hk).abs())
        .fold(0.0, f64::max);
    let limit = 1e-6 * h.b_norm().max(1.0);
    if !(residual <= limit) {
        return Err(Error::numerical(format!(
            "functional equation residual {residual:e} exceeds {limit:e}"
        )));
    }
    Ok(FredholmSolution { g: GridFunction::new(grid, g)?, residual, condition_estimate: condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(-8.0, 40.0, 200).unwrap()
    }

    #[test]
    fn matrix_matches_operator() {
        let t = GammaTarget::new(2.0).unwrap();
        let d = DenseStein::new(grid(), t).unwrap();
        let h = grid().sample(|x| (0.3 * x).sin()).unwrap();
        let (direct, _) = d.basis().apply_nodes(h.values()).unwrap();
        for i in 0..200 {
            let mv: f64 = (0..200).map(|j| d.get(i, j) * h.values()[j]).sum();
            assert!((mv - direct[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn small_lambda_returns_h() {
        let t = GammaTarget::new(2.0).unwrap();
        let h = grid().sample(|x| (0.3 * x).cos()).unwrap();
        let s = solve_functional_equation(&h, 1e-15, &t).unwrap();
        let diff = s.g.values().iter().zip(h.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert!(solve_functional_equation(&h, 0.0, &t).is_err());
    }

    #[test]
    fn identity_has_closed_form() {
        // S(x) = -1, so g = x + lambda solves g + lambda S(g) = x
        let t = GammaTarget::new(3.0).unwrap();
        let h = grid().sample(|x| x).unwrap();
        let s = solve_functional_equation(&h, 0.5, &t).unwrap();
        for (x, g) in grid().nodes().iter().zip(s.g.values()) {
            assert!((g - x - 0.5).abs() < 1e-9, "{x} {g}");
        }
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn lu_transpose_solve() {
        let a = vec![4.0, 1.0, 2.0, 0.5, 3.0, 1.0, 2.0, -1.0, 5.0];
        let lu = Lu::factor(a.clone(), 3).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve_transpose(&b);
        for j in 0..3 {
            let s: f64 = (0..3).map(|i| a[i * 3 + j] * x[i]).sum();
            assert!((s - b[j]).abs() < 1e-12);
        }
    }
}
