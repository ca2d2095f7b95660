use std::f64::consts::TAU;

use nalgebra::linalg::SymmetricTridiagonal;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::path::SymmetricLoop;
use super::winding::unwrap_winding;
use super::{CzValue, DEGENERACY_TOL};
use crate::error::{Error, Result};

/// Discretization parameters for `L_S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Fourier modes `k ∈ [−modes, modes]`.
    pub modes: usize,
    /// Resampling grid for eigenvector windings.
    pub winding_grid: usize,
    /// Minimum of `min|u| / max|u|` accepted for an eigenvector.
    pub amplitude_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            modes: 128,
            winding_grid: 1024,
            amplitude_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub nu: f64,
    pub wind: i64,
    /// `min|u| / max|u|` over the resampling grid.
    pub min_amplitude: f64,
}

/// Eigenvalues of `L_S` nearest zero with the windings of their eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    /// Sorted by eigenvalue.
    pub eigenpairs: Vec<Eigenpair>,
    pub wind_neg: i64,
    pub wind_nonneg: i64,
    pub parity: i64,
    pub degenerate: bool,
}

impl SpectralData {
    pub fn cz(&self) -> i64 {
        2 * self.wind_neg + self.parity
    }
}

pub fn spectrum(s: &SymmetricLoop, window: usize) -> Result<SpectralData> {
    spectrum_with(s, window, &SpectralOptions::default())
}

/// Galerkin discretization of `L_S = −i∂_t − S(t)` in the basis `e^{2πikt}`, `|k| ≤ modes`.
///
/// Writing `S u = α u + β ū` with `α = (s11 + s22)/2` and `β = (s11 − s22)/2 + i s12`,
/// the operator acts on coefficients by `c ↦ 2πk c − α̂ ∗ c − β̂ ∗ c̄`, which is
/// real symmetric in the unknowns `(Re c_k, Im c_k)`.
pub fn spectrum_with(s: &SymmetricLoop, window: usize, opts: &SpectralOptions) -> Result<SpectralData> {
    if window == 0 {
        return Err(Error::Precondition("window must be at least 1".into()));
    }
    let m = opts.modes as i64;
    if m < 4 * window as i64 {
        return Err(Error::Precondition(
            "too few Fourier modes for the requested window".into(),
        ));
    }
    let coeffs = s.entry_coefficients(2 * opts.modes);
    let off = 2 * opts.modes as i64;
    let alpha = |j: i64| -> (f64, f64) {
        let c = coeffs[(j + off) as usize];
        ((c[0].0 + c[2].0) / 2.0, (c[0].1 + c[2].1) / 2.0)
    };
    let beta = |j: i64| -> (f64, f64) {
        let c = coeffs[(j + off) as usize];
        ((c[0].0 - c[2].0) / 2.0 - c[1].1, (c[0].1 - c[2].1) / 2.0 + c[1].0)
    };

    let dim = 2 * (2 * opts.modes + 1);
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    for k in -m..=m {
        let r = 2 * (k + m) as usize;
        mat[(r, r)] += TAU * k as f64;
        mat[(r + 1, r + 1)] += TAU * k as f64;
        for j in -m..=m {
            let c = 2 * (j + m) as usize;
            let a = alpha(k - j);
            mat[(r, c)] -= a.0;
            mat[(r, c + 1)] += a.1;
            mat[(r + 1, c)] -= a.1;
            mat[(r + 1, c + 1)] -= a.0;
            let b = beta(k + j);
            mat[(r, c)] -= b.0;
            mat[(r, c + 1)] -= b.1;
            mat[(r + 1, c)] -= b.1;
            mat[(r + 1, c + 1)] += b.0;
        }
    }
    let sym = (&mat + mat.transpose()) * 0.5;
    let (q, diag, off) = SymmetricTridiagonal::new(sym).unpack();
    let tri = Tridiagonal {
        d: diag.as_slice(),
        e: off.as_slice(),
    };

    // near-zero eigenvalues count as nonnegative (limit convention), and are flagged
    let first_nonneg = tri.count_below(-DEGENERACY_TOL);
    let w = 2 * window;
    if first_nonneg < w || first_nonneg + w > dim {
        return Err(Error::Discretization("spectral window exceeds truncation".into()));
    }
    let degenerate = tri.count_below(DEGENERACY_TOL) > first_nonneg;
    let nus: Vec<f64> = (first_nonneg - w..first_nonneg + w)
        .map(|i| tri.eigenvalue(i))
        .collect();
    let ys = tri.eigenvectors(&nus);
    let grid = opts.winding_grid;
    let mut eigenpairs = Vec::with_capacity(2 * w);
    for (&nu, y) in nus.iter().zip(&ys) {
        let v = &q * DVector::from_column_slice(y);
        let samples: Vec<(f64, f64)> = (0..grid)
            .map(|n| {
                let t = n as f64 / grid as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for k in -m..=m {
                    let idx = 2 * (k + m) as usize;
                    let (sn, cs) = (TAU * k as f64 * t).sin_cos();
                    let (cr, ci) = (v[idx], v[idx + 1]);
                    re += cr * cs - ci * sn;
                    im += cr * sn + ci * cs;
                }
                (re, im)
            })
            .collect();
        let amps: Vec<f64> = samples.iter().map(|c| c.0.hypot(c.1)).collect();
        let max = amps.iter().cloned().fold(0.0, f64::max);
        let min = amps.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = min / max;
        if !(ratio >= opts.amplitude_tol) {
            return Err(Error::Discretization(format!(
                "eigenvector for ν = {nu} nearly vanishes (ratio {ratio:e})"
            )));
        }
        let turns = unwrap_winding(&samples, std::f64::consts::FRAC_PI_2)?;
        eigenpairs.push(Eigenpair {
            nu,
            wind: turns.round() as i64,
            min_amplitude: ratio,
        });
    }
    if eigenpairs.windows(2).any(|p| p[1].wind < p[0].wind) {
        return Err(Error::Discretization(
            "eigenvector windings are not monotone in the eigenvalue".into(),
        ));
    }
    let wind_neg = eigenpairs[w - 1].wind;
    let wind_nonneg = eigenpairs[w].wind;
    Ok(SpectralData {
        eigenpairs,
        wind_neg,
        wind_nonneg,
        parity: if wind_neg == wind_nonneg { 0 } else { 1 },
        degenerate,
    })
}

/// A symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`.
struct Tridiagonal<'a> {
    d: &'a [f64],
    e: &'a [f64],
}

impl Tridiagonal<'_> {
    fn norm(&self) -> f64 {
        let n = self.d.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.e[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { self.e[i].abs() } else { 0.0 };
                self.d[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues below `x` (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.norm());
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let e2 = if i > 0 { self.e[i - 1] * self.e[i - 1] } else { 0.0 };
            q = self.d[i] - x - e2 / q;
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue, by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let r = self.norm();
        let (mut lo, mut hi) = (-r - 1.0, r + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T − λ) x = b` by Gaussian elimination with partial pivoting, replacing
    /// vanishing pivots so that shifts at eigenvalues stay solvable.
    fn shifted_solve(&self, lambda: f64, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let eps = f64::EPSILON * (1.0 + self.norm());
        // rows as (sub, diag, sup, sup2) after pivoting
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut rhs = b.to_vec();
        let mut cur = (self.d[0] - lambda, if n > 1 { self.e[0] } else { 0.0 }, 0.0);
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if cur.0.abs() < eps { eps } else { cur.0 };
                break;
            }
            let sub = self.e[i];
            let next = (
                self.d[i + 1] - lambda,
                if i + 2 < n { self.e[i + 1] } else { 0.0 },
            );
            if cur.0.abs() >= sub.abs() {
                let piv = if cur.0.abs() < eps { eps } else { cur.0 };
                let m = sub / piv;
                u0[i] = piv;
                u1[i] = cur.1;
                u2[i] = cur.2;
                rhs[i + 1] -= m * rhs[i];
                cur = (next.0 - m * cur.1, next.1 - m * cur.2, 0.0);
            } else {
                let m = cur.0 / sub;
                u0[i] = sub;
                u1[i] = next.0;
                u2[i] = next.1;
                rhs.swap(i, i + 1);
                rhs[i + 1] -= m * rhs[i];
                cur = (cur.1 - m * next.0, cur.2 - m * next.1, 0.0);
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        x
    }

    /// Unit eigenvectors for the ascending eigenvalues `nus`, by inverse iteration.
    /// Vectors of eigenvalues closer than `1e-3 ‖T‖` are kept mutually orthogonal.
    fn eigenvectors(&self, nus: &[f64]) -> Vec<Vec<f64>> {
        let n = self.d.len();
        let cluster = 1e-3 * self.norm();
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(nus.len());
        for (j, &nu) in nus.iter().enumerate() {
            let mut x: Vec<f64> = (0..n)
                .map(|i| 1.0 + 0.5 * ((i * 7 + j * 13) % 11) as f64 / 11.0)
                .collect();
            let close: Vec<usize> = (0..j).filter(|&i| (nus[i] - nu).abs() < cluster).collect();
            for _ in 0..4 {
                x = self.shifted_solve(nu, &x);
                for &i in &close {
                    let dot: f64 = x.iter().zip(&out[i]).map(|(a, b)| a * b).sum();
                    x.iter_mut().zip(&out[i]).for_each(|(a, b)| *a -= dot * b);
                }
                let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                x.iter_mut().for_each(|a| *a /= norm);
            }
            out.push(x);
        }
        out
    }
}

/// `μ_CZ = 2 wind^{<0} + p`.
pub fn cz_spectral(s: &SymmetricLoop) -> Result<CzValue> {
    let d = spectrum(s, 1)?;
    Ok(CzValue {
        mu: d.cz(),
        degenerate: d.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::super::path::Mat2;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_loop_pi() {
        let d = spectrum(&SymmetricLoop::constant(PI, 64).unwrap(), 2).unwrap();
        assert_eq!((d.wind_neg, d.wind_nonneg, d.parity), (0, 1, 1));
        assert!(!d.degenerate);
        for e in &d.eigenpairs {
            assert!((e.nu - (TAU * e.wind as f64 - PI)).abs() < 1e-10);
        }
        assert_eq!(
            cz_spectral(&SymmetricLoop::constant(PI, 64).unwrap()).unwrap().mu,
            1
        );
    }

    #[test]
    fn constant_loop_three_pi() {
        let l = SymmetricLoop::constant(3.0 * PI, 64).unwrap();
        let d = spectrum(&l, 1).unwrap();
        assert_eq!((d.wind_neg, d.wind_nonneg, d.parity), (1, 2, 1));
        assert_eq!(cz_spectral(&l).unwrap().mu, 3);
        assert_eq!(
            cz_spectral(&SymmetricLoop::constant(-PI, 64).unwrap())
                .unwrap()
                .mu,
            -1
        );
    }

    #[test]
    fn zero_loop_is_degenerate() {
        let d = spectrum(&SymmetricLoop::constant(0.0, 64).unwrap(), 1).unwrap();
        assert!(d.degenerate);
    }

    #[test]
    fn hyperbolic_loop_has_even_index() {
        // S = [[0, −λ], [−λ, 0]] generates diag(e^{λt}, e^{−λt})
        let l = SymmetricLoop::from_fn(64, |_| Mat2::new(0.0, -0.7, -0.7, 0.0)).unwrap();
        let d = spectrum(&l, 2).unwrap();
        assert_eq!(d.parity, 0);
        assert_eq!(d.cz(), 0);
        // each winding appears at most twice
        for w in d.eigenpairs.windows(3) {
            assert!(!(w[0].wind == w[1].wind && w[1].wind == w[2].wind));
        }
    }

    #[test]
    fn window_validation() {
        let l = SymmetricLoop::constant(1.0, 64).unwrap();
        assert!(spectrum(&l, 0).is_err());
        let opts = SpectralOptions {
            modes: 3,
            ..Default::default()
        };
        assert!(spectrum_with(&l, 1, &opts).is_err());
    }
}
