//! Exact contraction constants `c_q(r_1, ..., r_s)` of the Gamma operators on the q-th chaos.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which recursion defines the constants for `s >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantVariant {
    /// Leading factor `sq - 2(r_1 + ... + r_{s-1})`.
    New,
    /// Leading factor `q`.
    Classical,
}

/// Index tuple `(q; r_1, ..., r_s)` checked for admissibility on construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaConstantKey {
    q: u32,
    indices: Vec<u32>,
}

impl GammaConstantKey {
    /// Checks every range and indicator constraint of the sum in which the constant appears.
    ///
    /// `r_j` ranges over `1..=min(jq - 2(r_1 + ... + r_{j-1}), q)`, and for `j < s`
    /// the indicator `r_1 + ... + r_j < (j + 1) q / 2` must hold.
    pub fn new(q: u32, indices: Vec<u32>) -> Result<Self> {
        if q < 1 {
            return Err(Error::Domain("chaos order q must be at least 1".into()));
        }
        if indices.is_empty() {
            return Err(Error::Domain("index tuple is empty".into()));
        }
        let s = indices.len();
        let mut prefix: u64 = 0;
        for (j0, &r) in indices.iter().enumerate() {
            let j = j0 as u64 + 1;
            let q64 = q as u64;
            let cap = (j * q64).saturating_sub(2 * prefix).min(q64);
            if r < 1 || r as u64 > cap {
                return Err(Error::Domain(format!(
                    "r_{j} = {r} outside its range 1..={cap} (q = {q}, r_1 + ... + r_{} = {prefix})",
                    j - 1
                )));
            }
            prefix += r as u64;
            if j0 + 1 < s && 2 * prefix >= (j + 1) * q64 {
                return Err(Error::Domain(format!(
                    "indicator r_1 + ... + r_{j} < {}q/2 fails: sum is {prefix} with q = {q}",
                    j + 1
                )));
            }
        }
        Ok(Self { q, indices })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exact value of `c_q(r_1, ..., r_s)` under the chosen recursion.
pub fn gamma_constants(key: &GammaConstantKey, variant: ConstantVariant) -> BigRational {
    let q = key.q as u64;
    let r = &key.indices;
    let r1 = r[0] as u64;
    let mut value = BigInt::from(q) * factorial(r1 - 1) * binomial(q - 1, r1 - 1).pow(2);
    let mut prefix = r1;
    for (j0, &rs) in r.iter().enumerate().skip(1) {
        let s = j0 as u64 + 1;
        let rs = rs as u64;
        let free = s * q - 2 * prefix;
        let lead = match variant {
            ConstantVariant::New => BigInt::from(free),
            ConstantVariant::Classical => BigInt::from(q),
        };
        value = value * lead * factorial(rs - 1) * binomial(free - 1, rs - 1) * binomial(q - 1, rs - 1);
        prefix += rs;
    }
    BigRational::from_integer(value)
}

/// Every admissible tuple of length `s` for chaos order `q`.
pub fn admissible_tuples(q: u32, s: usize) -> Vec<GammaConstantKey> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(s);
    fn rec(q: u32, s: usize, cur: &mut Vec<u32>, out: &mut Vec<GammaConstantKey>) {
        if cur.len() == s {
            if let Ok(k) = GammaConstantKey::new(q, cur.clone()) {
                out.push(k);
            }
            return;
        }
        for r in 1..=q {
            cur.push(r);
            rec(q, s, cur, out);
            cur.pop();
        }
    }
    if s > 0 && q > 0 {
        rec(q, s, &mut cur, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn small_values() {
        let k = GammaConstantKey::new(2, vec![1]).unwrap();
        assert_eq!(gamma_constants(&k, ConstantVariant::New), int(2));
        assert_eq!(gamma_constants(&k, ConstantVariant::Classical), int(2));
        let k = GammaConstantKey::new(2, vec![1, 1]).unwrap();
        assert_eq!(gamma_constants(&k, ConstantVariant::New), int(4));
        let k = GammaConstantKey::new(3, vec![1, 1]).unwrap();
        let a = gamma_constants(&k, ConstantVariant::New);
        let b = gamma_constants(&k, ConstantVariant::Classical);
        assert_eq!(a / b, BigRational::new(BigInt::from(4), BigInt::from(3)));
    }

    #[test]
    fn indicator_violations_are_named() {
        let e = GammaConstantKey::new(2, vec![2, 1]).unwrap_err().to_string();
        assert!(e.contains("indicator"), "{e}");
        let e = GammaConstantKey::new(2, vec![3]).unwrap_err().to_string();
        assert!(e.contains("range"), "{e}");
        assert!(GammaConstantKey::new(2, vec![]).is_err());
    }

    #[test]
    fn q_two_tuples() {
        // for q = 2 only (1, ..., 1, r_s) with r_s in {1, 2} survive
        for s in 1..=5 {
            let t = admissible_tuples(2, s);
            assert_eq!(t.len(), 2, "s = {s}");
            for k in &t {
                assert!(k.indices()[..s - 1].iter().all(|&r| r == 1));
            }
        }
    }
}
