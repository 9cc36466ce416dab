//! Reproducible Gaussian sampling on independent ChaCha streams.
//!
//! Draw `k` lives in chunk `k / CHUNK`, and every chunk has its own stream
//! keyed by `(seed, chunk)`. Results therefore do not depend on the thread
//! schedule, and a longer run extends a shorter one.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectral::SpectralForm;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::normal_quantile;

/// Number of draws sharing one RNG stream.
pub const CHUNK: usize = 1 << 16;

const MAGIC: &[u8; 4] = b"WGL1";

/// Stream of standard normals for one chunk.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, chunk: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        Self { rng }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        normal_quantile(self.uniform())
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.normal();
        }
    }
}

/// Applies `f` to `count` vectors of `dim` standard normals, in draw order.
pub fn map_draws<R, F>(dim: usize, count: usize, seed: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(&[f64]) -> R + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<R>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(count - c * CHUNK);
            let mut stream = NormalStream::new(seed, c as u64);
            let mut z = vec![0.0; dim];
            (0..len)
                .map(|_| {
                    stream.fill(&mut z);
                    f(&z)
                })
                .collect()
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

/// Folds `count` normal vectors chunk by chunk; returns one accumulator per chunk, in chunk order.
pub fn fold_draws<A, I, F>(dim: usize, count: usize, seed: u64, init: I, f: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &[f64]) + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(count - c * CHUNK);
            let mut stream = NormalStream::new(seed, c as u64);
            let mut z = vec![0.0; dim];
            let mut acc = init();
            for _ in 0..len {
                stream.fill(&mut z);
                f(&mut acc, &z);
            }
            acc
        })
        .collect()
}

/// Realizations of a second-chaos variable together with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub draws: Vec<f64>,
    pub seed: u64,
    pub count: usize,
}

/// `F = sum c (z^2 - 1)` evaluated on one normal vector.
pub fn evaluate(c: &[f64], z: &[f64]) -> f64 {
    c.iter().zip(z).map(|(c, z)| c * (z * z - 1.0)).sum()
}

/// Draws `count` independent copies of `F`.
pub fn sample<T: Scalar>(form: &SpectralForm<T>, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::validation("sample count must be at least 1"));
    }
    let c = form.to_f64();
    let draws = map_draws(c.len(), count, seed, |z| evaluate(&c, z));
    Ok(SampleBatch { draws, seed, count })
}

impl SampleBatch {
    /// Writes the header `WGL1`, four zero bytes, the count as `u64`, then the draws, all little endian.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&[0u8; 4])?;
        w.write_all(&(self.count as u64).to_le_bytes())?;
        for x in &self.draws {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file written by [`SampleBatch::write_binary`]; the seed is not stored.
    pub fn read_binary(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != MAGIC {
            return Err(Error::validation("not a WGL1 sample file"));
        }
        let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != count * 8 {
            return Err(Error::validation(format!(
                "header says {count} draws but payload holds {} bytes",
                bytes.len()
            )));
        }
        let draws = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        Ok(Self { draws, seed, count })
    }
}
