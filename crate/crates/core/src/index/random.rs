//! Seeded random nondegenerate paths generated by trigonometric loops `S(t)`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::path::{Mat2, SymmetricLoop, SymplecticPath};
use super::{cz_geometric, CzValue};
use crate::error::{Error, Result};

/// Paths with `|det(φ(1) − I)|` below this are skipped.
pub const CORPUS_DEGENERACY_FILTER: f64 = 1e-4;

/// A loop `S(t) = A0 + Σ_{m=1,2} (A_m cos 2πmt + B_m sin 2πmt)` and the path it generates.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub coefficients: Vec<Mat2>,
    pub generator: SymmetricLoop,
    pub path: SymplecticPath,
}

impl CorpusEntry {
    pub fn eval(coefficients: &[Mat2], t: f64) -> Mat2 {
        let mut s = coefficients[0];
        for m in 1..=(coefficients.len() - 1) / 2 {
            let (sn, cs) = (TAU * m as f64 * t).sin_cos();
            s += coefficients[2 * m - 1] * cs + coefficients[2 * m] * sn;
        }
        s
    }

    /// Geometric index of the pointwise inverse path, refining its grid on request.
    pub fn inverse_index(&self, max_grid: usize) -> Result<CzValue> {
        let mut n = self.path.grid();
        loop {
            let inv = SymplecticPath::inverse_from_generator(n, |t| Self::eval(&self.coefficients, t))?;
            match cz_geometric(&inv) {
                Err(Error::GridTooCoarse { .. }) if 2 * n <= max_grid => n *= 2,
                r => return r,
            }
        }
    }
}

pub struct CorpusOptions {
    pub degree: usize,
    pub amplitude: f64,
    pub path_grid: usize,
    pub loop_grid: usize,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            degree: 2,
            amplitude: 5.0,
            path_grid: 512,
            loop_grid: 64,
        }
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, amp: f64) -> Mat2 {
    let a = rng.random_range(-amp..=amp);
    let b = rng.random_range(-amp..=amp);
    let c = rng.random_range(-amp..=amp);
    Mat2::new(a, b, b, c)
}

/// `count` nondegenerate corpus entries from `seed`.
pub fn corpus(seed: u64, count: usize, opts: &CorpusOptions) -> Result<Vec<CorpusEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let coefficients: Vec<Mat2> = (0..2 * opts.degree + 1)
            .map(|_| random_symmetric(&mut rng, opts.amplitude))
            .collect();
        let path = SymplecticPath::from_generator(opts.path_grid, |t| CorpusEntry::eval(&coefficients, t))?;
        if path.det_endpoint_minus_identity().abs() < CORPUS_DEGENERACY_FILTER {
            continue;
        }
        let generator = SymmetricLoop::from_fn(opts.loop_grid, |t| CorpusEntry::eval(&coefficients, t))?;
        out.push(CorpusEntry {
            coefficients,
            generator,
            path,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic() {
        let a = corpus(7, 3, &CorpusOptions::default()).unwrap();
        let b = corpus(7, 3, &CorpusOptions::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.path, y.path);
            assert!(x.path.det_endpoint_minus_identity().abs() >= CORPUS_DEGENERACY_FILTER);
        }
    }
}
