use serde::{Deserialize, Serialize};

use super::jacobi::symmetric_eigenvalues;
use super::spectral::SpectralForm;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric coefficient matrix of the quadratic form `sum_{i,j} a_ij Z_i Z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawKernel<T>",
    into = "RawKernel<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct KernelMatrix<T: Scalar = f64> {
    n: usize,
    entries: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct RawKernel<T> {
    n: usize,
    entries: Vec<Vec<T>>,
}

impl<T: Scalar> TryFrom<RawKernel<T>> for KernelMatrix<T> {
    type Error = Error;

    fn try_from(raw: RawKernel<T>) -> Result<Self> {
        if raw.entries.len() != raw.n {
            return Err(Error::validation(format!(
                "declared n = {} but {} rows given",
                raw.n,
                raw.entries.len()
            )));
        }
        KernelMatrix::from_rows(raw.entries)
    }
}

impl<T: Scalar> From<KernelMatrix<T>> for RawKernel<T> {
    fn from(k: KernelMatrix<T>) -> Self {
        RawKernel { n: k.n, entries: k.entries.chunks(k.n).map(<[T]>::to_vec).collect() }
    }
}

impl<T: Scalar> KernelMatrix<T> {
    /// Builds from rows, requiring a square matrix that is exactly symmetric.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::validation("kernel matrix is empty"));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::validation(format!("row {i} has length {}, expected {n}", r.len())));
        }
        let entries: Vec<T> = rows.into_iter().flatten().collect();
        Self::from_vec(n, entries)
    }

    /// Builds from row-major storage.
    pub fn from_vec(n: usize, entries: Vec<T>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::validation(format!("need {} entries for n = {n}", n * n)));
        }
        if let Some(x) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::validation(format!("non-finite entry {x}")));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::validation(format!(
                        "matrix not symmetric at ({i}, {j}): {} vs {}",
                        entries[i * n + j],
                        entries[j * n + i]
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// Symmetric matrix from a lower-triangle rule `f(i, j)` with `i >= j`.
    pub fn from_lower(n: usize, f: impl Fn(usize, usize) -> T) -> Result<Self> {
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self::from_vec(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn frobenius_sq(&self) -> T {
        self.entries.iter().map(|&x| x * x).sum()
    }

    /// Multiplies all entries by `alpha`.
    pub fn scaled(&self, alpha: T) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|&x| x * alpha).collect() }
    }

    /// `tr(A^p)` by repeated dense products, for cross-checking trace formulas.
    pub fn trace_power(&self, p: u32) -> T {
        let n = self.n;
        if p == 0 {
            return T::lit(n as f64);
        }
        let mut acc = self.entries.clone();
        for _ in 1..p {
            let mut next = vec![T::zero(); n * n];
            for i in 0..n {
                for k in 0..n {
                    let a = acc[i * n + k];
                    if a.is_zero() {
                        continue;
                    }
                    let row = &self.entries[k * n..(k + 1) * n];
                    for (dst, &b) in next[i * n..(i + 1) * n].iter_mut().zip(row) {
                        *dst += a * b;
                    }
                }
            }
            acc = next;
        }
        (0..n).map(|i| acc[i * n + i]).sum()
    }

    /// Default eigenvalue cutoff: `1e-12` times the Frobenius norm.
    pub fn default_tol(&self) -> T {
        T::lit(1e-12) * self.frobenius_sq().sqrt()
    }

    /// Spectrum with the default cutoff.
    pub fn spectrum(&self) -> Result<SpectralForm<T>> {
        spectral_from_kernel(self, self.default_tol())
    }
}

/// Eigenvalues of the kernel with `|c| > tol`, largest magnitude first.
///
/// The squared mass of the dropped eigenvalues is kept on the returned form.
pub fn spectral_from_kernel<T: Scalar>(matrix: &KernelMatrix<T>, tol: T) -> Result<SpectralForm<T>> {
    if !(tol >= T::zero()) {
        return Err(Error::validation(format!("tolerance must be non-negative, got {tol}")));
    }
    let n = matrix.n;
    let mut eig = symmetric_eigenvalues(&matrix.entries, n)?;
    eig.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).expect("finite eigenvalues"));
    let (kept, dropped): (Vec<T>, Vec<T>) = eig.into_iter().partition(|c| c.abs() > tol && !c.is_zero());
    if kept.is_empty() {
        return Err(Error::validation("kernel has no eigenvalue above the cutoff"));
    }
    let discarded: T = dropped.iter().map(|&c| c * c).sum();
    let kept_sq: T = kept.iter().map(|&c| c * c).sum();
    let frob = matrix.frobenius_sq();
    let slack = (tol * T::lit(n as f64)).max(T::lit(64.0 + 16.0 * n as f64) * T::epsilon() * frob);
    if (kept_sq - frob).abs() > slack {
        return Err(Error::numerical(format!(
            "eigenvalue mass {kept_sq} differs from Frobenius mass {frob} by more than {slack}"
        )));
    }
    Ok(SpectralForm::new(kept)?.with_discarded_mass(discarded))
}
