//! Exact evaluation of the Stein solution for piecewise-linear test functions.
//!
//! With `h` linear on each grid segment, every integral in the explicit
//! solution reduces to incomplete gamma functions (right of `-nu`) or to a
//! Poisson-weighted series (left of `-nu`), so no numerical quadrature is
//! involved.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;

use crate::chaos::GammaTarget;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::stats::NeumaierSum;

/// Distance to `-nu` inside which the derivative uses its limiting value.
const EDGE_BAND: f64 = 3e-8;

#[derive(Debug, Clone, Copy)]
enum Node {
    /// `x > -nu`: distribution, survival and tail weight at the node.
    Above { cdf: f64, sf: f64, w: f64 },
    /// `x < -nu`, with `u = -(x + nu)` and the scaled series `A_0(u)`, `A_1(u)`.
    Below { u: f64, a0: f64, a1: f64 },
    /// The node sits on `-nu`.
    Edge,
}

/// Node tables that depend only on the grid and the target.
#[derive(Debug)]
pub struct SteinBasis {
    grid: GridSpec,
    target: GammaTarget,
    nodes: Vec<Node>,
    /// Index of the segment that contains `-nu` in its interior or at its left end, if any.
    edge_segment: Option<usize>,
}

fn edge_tol(nu: f64) -> f64 {
    1e-12 * nu.max(1.0)
}

/// `A_j(u) = u^{-s} e^{-u/2} int_0^u w^{s-1+j} e^{w/2} dw` for `j = 0, 1`.
fn scaled_series(s: f64, u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (1.0 / s, 0.0);
    }
    let lam = 0.5 * u;
    if lam > 700.0 {
        // far outside any grid used in practice; fall back to the leading asymptotics
        return (2.0 / u * (1.0 + 2.0 * (1.0 - s) / u), 2.0 * (1.0 + 2.0 * (-s) / u));
    }
    let mut pk = (-lam).exp();
    let mut s0 = NeumaierSum::new();
    let mut s1 = NeumaierSum::new();
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let t0 = pk / (s + kf);
        let t1 = pk / (s + 1.0 + kf);
        s0.add(t0);
        s1.add(t1);
        if kf > lam && t0 < 1e-17 * s0.value() {
            break;
        }
        k += 1;
        pk *= lam / k as f64;
        if k > 100_000 {
            break;
        }
    }
    (s0.value(), u * s1.value())
}

impl SteinBasis {
    pub fn new(grid: GridSpec, target: GammaTarget) -> Result<Self> {
        let nu = target.nu();
        if grid.hi <= -nu {
            return Err(Error::validation(format!("grid upper end {} must exceed -nu = {}", grid.hi, -nu)));
        }
        let s = target.shape();
        let nodes: Vec<Node> = grid
            .nodes()
            .into_iter()
            .map(|x| {
                let d = x + nu;
                if d.abs() <= edge_tol(nu) {
                    Node::Edge
                } else if d > 0.0 {
                    Node::Above { cdf: target.cdf(x), sf: target.sf(x), w: target.tail_weight(x) }
                } else {
                    let u = -d;
                    let (a0, a1) = scaled_series(s, u);
                    Node::Below { u, a0, a1 }
                }
            })
            .collect();
        let edge_segment = (0..grid.n_points - 1).find(|&k| grid.x(k) <= -nu && grid.x(k + 1) > -nu);
        Ok(Self { grid, target, nodes, edge_segment })
    }

    /// Shared instance for `(grid, target)`.
    pub fn shared(grid: GridSpec, target: GammaTarget) -> Result<Arc<Self>> {
        type Key = (u64, u64, usize, u64);
        static CACHE: OnceLock<RwLock<HashMap<Key, Arc<SteinBasis>>>> = OnceLock::new();
        let key = (grid.lo.to_bits(), grid.hi.to_bits(), grid.n_points, target.nu().to_bits());
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(b) = cache.read().get(&key) {
            return Ok(b.clone());
        }
        let built = Arc::new(Self::new(grid, target)?);
        Ok(cache.write().entry(key).or_insert(built).clone())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn target(&self) -> &GammaTarget {
        &self.target
    }

    fn above_info(&self, x: f64) -> (f64, f64, f64) {
        let t = &self.target;
        (t.cdf(x), t.sf(x), t.tail_weight(x))
    }

    fn node_above(&self, k: usize) -> (f64, f64, f64) {
        match self.nodes[k] {
            Node::Above { cdf, sf, w } => (cdf, sf, w),
            _ => (0.0, 1.0, 0.0),
        }
    }

    /// Prepares pointwise evaluation of `S(h)` for node values `values`.
    pub fn prepare(self: &Arc<Self>, values: &[f64]) -> Result<SteinEval> {
        SteinEval::new(self.clone(), values)
    }

    /// `S(h)` at the nodes in linear time.
    pub fn apply_nodes(self: &Arc<Self>, values: &[f64]) -> Result<(Vec<f64>, f64)> {
        let ev = self.prepare(values)?;
        Ok((ev.node_solution.clone(), ev.expectation))
    }
}

/// Mass of `G(nu)` between two points right of `-nu`, picking the accurate tail.
fn mass(c1: f64, s1: f64, c2: f64, s2: f64) -> f64 {
    if c2 <= 0.5 {
        c2 - c1
    } else {
        s1 - s2
    }
}

/// Piecewise-linear function with precomputed Stein partial integrals.
#[derive(Debug, Clone)]
pub struct SteinEval {
    basis: Arc<SteinBasis>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    expectation: f64,
    /// `int_{-nu}^{x_k} (h - E h) p` for nodes right of `-nu`.
    lower: Vec<f64>,
    /// `int_{x_k}^inf (h - E h) p` for nodes right of `-nu`.
    upper: Vec<f64>,
    /// `2 S(h)(x_k)` for nodes left of `-nu`, as the scaled integral `V`.
    below: Vec<f64>,
    node_solution: Vec<f64>,
}

impl SteinEval {
    fn new(basis: Arc<SteinBasis>, values: &[f64]) -> Result<Self> {
        let grid = basis.grid;
        let n = grid.n_points;
        if values.len() != n {
            return Err(Error::validation(format!("expected {n} node values, got {}", values.len())));
        }
        let nu = basis.target.nu();
        let dx = grid.spacing();
        let slopes: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
        let alpha = |k: usize| values[k] - slopes[k] * grid.x(k);

        // pieces right of -nu: (lo info, hi info, segment)
        let first_above = (0..n).find(|&k| grid.x(k) + nu > edge_tol(nu)).ok_or_else(|| {
            Error::validation("grid has no node right of -nu")
        })?;
        let edge_info = (0.0, 1.0, 0.0);

        let piece = |lo: (f64, f64, f64), hi: (f64, f64, f64), seg: usize, e: f64| -> f64 {
            (alpha(seg) - e) * mass(lo.0, lo.1, hi.0, hi.1) + slopes[seg] * (lo.2 - hi.2)
        };

        // expectation: all mass right of -nu
        let mut acc = NeumaierSum::new();
        {
            let seg0 = first_above.saturating_sub(1);
            acc.add(piece(edge_info, basis.node_above(first_above), seg0, 0.0));
            for k in first_above..n - 1 {
                acc.add(piece(basis.node_above(k), basis.node_above(k + 1), k, 0.0));
            }
            let last = basis.node_above(n - 1);
            acc.add(alpha(n - 2) * last.1 + slopes[n - 2] * last.2);
        }
        let e = acc.value();

        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let seg0 = first_above.saturating_sub(1);
        let mut run = NeumaierSum::new();
        run.add(piece(edge_info, basis.node_above(first_above), seg0, e));
        lower[first_above] = run.value();
        for k in first_above..n - 1 {
            run.add(piece(basis.node_above(k), basis.node_above(k + 1), k, e));
            lower[k + 1] = run.value();
        }
        let last = basis.node_above(n - 1);
        let mut run = NeumaierSum::new();
        run.add((alpha(n - 2) - e) * last.1 + slopes[n - 2] * last.2);
        upper[n - 1] = run.value();
        for k in (first_above..n - 1).rev() {
            run.add(piece(basis.node_above(k), basis.node_above(k + 1), k, e));
            upper[k] = run.value();
        }

        // left of -nu: march away from the edge
        let s = basis.target.shape();
        let mut below = vec![0.0; n];
        let mut prev = (0.0f64, 1.0 / s, 0.0f64, 0.0f64); // (u, a0, a1, V)
        for k in (0..first_above).rev() {
            if let Node::Below { u, a0, a1 } = basis.nodes[k] {
                let seg = k.min(n - 2);
                let beta = alpha(seg) - e - slopes[seg] * nu;
                let v = step_below(s, prev, (u, a0, a1), beta, slopes[seg]);
                below[k] = v;
                prev = (u, a0, a1, v);
            }
        }

        let mut ev = Self {
            basis,
            values: values.to_vec(),
            slopes,
            expectation: e,
            lower,
            upper,
            below,
            node_solution: Vec::new(),
        };
        ev.node_solution = (0..n).map(|k| ev.node_value(k)).collect();
        Ok(ev)
    }

    pub fn expectation(&self) -> f64 {
        self.expectation
    }

    pub fn node_solution(&self) -> &[f64] {
        &self.node_solution
    }

    pub fn basis(&self) -> &Arc<SteinBasis> {
        &self.basis
    }

    fn node_value(&self, k: usize) -> f64 {
        let nu = self.basis.target.nu();
        match self.basis.nodes[k] {
            Node::Edge => (self.values[k] - self.expectation) / nu,
            Node::Above { cdf, w, .. } => self.finish_above(cdf, w, self.lower[k], self.upper[k], k),
            Node::Below { .. } => 0.5 * self.below[k],
        }
    }

    fn finish_above(&self, cdf: f64, w: f64, lower: f64, upper: f64, k_hint: usize) -> f64 {
        if w > 0.0 && w.is_finite() {
            if cdf <= 0.5 {
                lower / w
            } else {
                -upper / w
            }
        } else {
            // tail weight underflowed: leading behaviour of the bounded solution
            let x = self.basis.grid.x(k_hint);
            -(self.h(x) - self.expectation) / x
        }
    }

    /// Interpolated test function.
    pub fn h(&self, x: f64) -> f64 {
        let g = &self.basis.grid;
        let k = g.segment(x);
        self.values[k] + self.slopes[k] * (x - g.x(k))
    }

    fn slope_at(&self, x: f64) -> f64 {
        self.slopes[self.basis.grid.segment(x)]
    }

    /// `S(h)(x)` at any real `x`.
    pub fn value(&self, x: f64) -> f64 {
        let b = &self.basis;
        let g = &b.grid;
        let nu = b.target.nu();
        let n = g.n_points;
        let d = x + nu;
        if d.abs() <= edge_tol(nu) {
            return (self.h(-nu) - self.expectation) / nu;
        }
        let k = g.segment(x);
        let e = self.expectation;
        let alpha = self.values[k] - self.slopes[k] * g.x(k);
        if d > 0.0 {
            let here = b.above_info(x);
            if here.2 <= 0.0 || !here.2.is_finite() {
                return -(self.h(x) - e) / x;
            }
            let piece = |lo: (f64, f64, f64), hi: (f64, f64, f64)| {
                (alpha - e) * mass(lo.0, lo.1, hi.0, hi.1) + self.slopes[k] * (lo.2 - hi.2)
            };
            if here.0 <= 0.5 {
                // lower form from the left end of the segment (or from -nu)
                let xk = g.x(k);
                let (start, acc) = if x < g.lo || xk + nu <= edge_tol(nu) {
                    ((0.0, 1.0, 0.0), 0.0)
                } else {
                    (b.node_above(k), self.lower[k])
                };
                (acc + piece(start, here)) / here.2
            } else if x > g.hi {
                let tail = (alpha - e) * here.1 + self.slopes[k] * here.2;
                -tail / here.2
            } else {
                let stop = b.node_above(k + 1);
                -(self.upper[k + 1] + piece(here, stop)) / here.2
            }
        } else {
            let s = b.target.shape();
            let u = -d;
            let (a0, a1) = scaled_series(s, u);
            // nearest node between x and -nu
            let start = if k + 1 < n && g.x(k + 1) + nu < -edge_tol(nu) && x >= g.lo {
                match b.nodes[k + 1] {
                    Node::Below { u, a0, a1 } => (u, a0, a1, self.below[k + 1]),
                    _ => (0.0, 1.0 / s, 0.0, 0.0),
                }
            } else if x < g.lo {
                match b.nodes[0] {
                    Node::Below { u, a0, a1 } => (u, a0, a1, self.below[0]),
                    _ => (0.0, 1.0 / s, 0.0, 0.0),
                }
            } else {
                (0.0, 1.0 / s, 0.0, 0.0)
            };
            let beta = alpha - e - self.slopes[k] * nu;
            0.5 * step_below(s, start, (u, a0, a1), beta, self.slopes[k])
        }
    }

    /// `S(h)'(x)` from the differential equation, with the limiting value next to `-nu`.
    pub fn derivative(&self, x: f64) -> f64 {
        let sx = self.value(x);
        self.derivative_with(x, sx)
    }

    /// Derivative given an already computed `S(h)(x)`.
    pub fn derivative_with(&self, x: f64, sx: f64) -> f64 {
        let nu = self.basis.target.nu();
        let d = x + nu;
        if d.abs() < EDGE_BAND {
            let s_edge = (self.h(-nu) - self.expectation) / nu;
            return (self.slope_at(x) + s_edge) / (nu + 2.0);
        }
        (self.h(x) - self.expectation + x * sx) / (2.0 * d)
    }

    /// Derivative at the nodes.
    pub fn node_derivative(&self) -> Vec<f64> {
        let g = &self.basis.grid;
        (0..g.n_points).map(|k| self.derivative_with(g.x(k), self.node_solution[k])).collect()
    }

    /// Largest ODE residual `|2(x+nu) S' - x S - (h - E h)|` at segment midpoints,
    /// with `S'` from a Richardson-extrapolated central difference.
    pub fn ode_residual(&self) -> f64 {
        let g = &self.basis.grid;
        let nu = self.basis.target.nu();
        let step = (0.25 * g.spacing()).min(0.02);
        let mut worst = 0.0f64;
        for k in 0..g.n_points - 1 {
            if Some(k) == self.basis.edge_segment {
                continue;
            }
            let x = g.x(k) + 0.5 * g.spacing();
            let d1 = (self.value(x + step) - self.value(x - step)) / (2.0 * step);
            let d2 = (self.value(x + 0.5 * step) - self.value(x - 0.5 * step)) / step;
            let deriv = (4.0 * d2 - d1) / 3.0;
            let r = 2.0 * (x + nu) * deriv - x * self.value(x) - (self.h(x) - self.expectation);
            worst = worst.max(r.abs());
        }
        worst
    }
}

/// Moves the scaled left-of-edge integral from `prev.0` to `next.0` across one linear piece.
fn step_below(s: f64, prev: (f64, f64, f64, f64), next: (f64, f64, f64), beta: f64, slope: f64) -> f64 {
    let (u1, a0_1, a1_1, v1) = prev;
    let (u2, a0_2, a1_2) = next;
    let rho = if u1 <= 0.0 { 0.0 } else { (s * (u1 / u2).ln() - 0.5 * (u2 - u1)).exp() };
    rho * v1 + beta * (a0_2 - rho * a0_1) - slope * (a1_2 - rho * a1_1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::grid::GridFunction;

    #[test]
    fn series_matches_quadrature() {
        for &(s, u) in &[(0.25, 0.7), (1.0, 3.0), (2.5, 6.0)] {
            let exact0 = integrate(|w: f64| w.powf(s - 1.0) * (0.5 * (w - u)).exp(), 0.0, u, 1e-13, 0.0).unwrap();
            let exact1 = integrate(|w: f64| w.powf(s) * (0.5 * (w - u)).exp(), 0.0, u, 1e-13, 0.0).unwrap();
            let (a0, a1) = scaled_series(s, u);
            let scale = u.powf(-s);
            assert!((a0 - scale * exact0.value).abs() < 1e-10, "{s} {u}");
            assert!((a1 - scale * exact1.value).abs() < 1e-10, "{s} {u}");
        }
    }

    #[test]
    fn identity_maps_to_minus_one() {
        let t = GammaTarget::new(2.0).unwrap();
        let g = GridSpec::new(-8.0, 40.0, 97).unwrap();
        let b = SteinBasis::shared(g, t).unwrap();
        let h: Vec<f64> = g.nodes();
        let ev = b.prepare(&h).unwrap();
        assert!(ev.expectation().abs() < 1e-13);
        for &v in ev.node_solution() {
            assert!((v + 1.0).abs() < 1e-10, "{v}");
        }
        for &x in &[-9.5, -7.3, -2.0000001, -1.3, 0.77, 39.0, 45.0] {
            assert!((ev.value(x) + 1.0).abs() < 1e-9, "{x}: {}", ev.value(x));
            assert!(ev.derivative(x).abs() < 1e-6, "{x}: {}", ev.derivative(x));
        }
    }

    #[test]
    fn unused_grid_function_type_is_compatible() {
        let g = GridSpec::new(-3.0, 20.0, 64).unwrap();
        let f = GridFunction::new(g, vec![1.0; 64]).unwrap();
        let b = SteinBasis::shared(g, GammaTarget::new(1.0).unwrap()).unwrap();
        let ev = b.prepare(f.values()).unwrap();
        assert!(ev.node_solution().iter().all(|v| v.abs() < 1e-12));
    }
}
