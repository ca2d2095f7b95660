use std::f64::consts::TAU;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};

pub type Mat2 = Matrix2<f64>;

const DET_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-12;
const FRAME_SYMMETRY_TOL: f64 = 1e-6;
pub(crate) const MIN_GRID: usize = 64;

pub(crate) fn j0() -> Mat2 {
    Mat2::new(0.0, -1.0, 1.0, 0.0)
}

pub(crate) fn rot(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c, -s, s, c)
}

fn to_rows(m: &Mat2) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn from_rows(r: &[[f64; 2]; 2]) -> Mat2 {
    Mat2::new(r[0][0], r[0][1], r[1][0], r[1][1])
}

/// A path `φ: [0,1] → Sp(2)` sampled at `t_n = n/N`, `n = 0..=N`, with `φ(0) = I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[[f64; 2]; 2]>", into = "Vec<[[f64; 2]; 2]>")]
pub struct SymplecticPath {
    samples: Vec<Mat2>,
}

impl TryFrom<Vec<[[f64; 2]; 2]>> for SymplecticPath {
    type Error = Error;
    fn try_from(v: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        SymplecticPath::new(v.iter().map(from_rows).collect())
    }
}

impl From<SymplecticPath> for Vec<[[f64; 2]; 2]> {
    fn from(p: SymplecticPath) -> Self {
        p.samples.iter().map(to_rows).collect()
    }
}

impl SymplecticPath {
    /// Validates grid size, `φ(0) = I` and `det φ = 1`.
    pub fn new(samples: Vec<Mat2>) -> Result<Self> {
        if samples.len() < MIN_GRID + 1 {
            return Err(Error::Precondition(format!(
                "path needs at least {} samples, got {}",
                MIN_GRID + 1,
                samples.len()
            )));
        }
        if samples[0] != Mat2::identity() {
            return Err(Error::Precondition("path must start at the identity".into()));
        }
        for (n, m) in samples.iter().enumerate() {
            let d = m.determinant();
            if !((d - 1.0).abs() <= DET_TOL) {
                return Err(Error::Precondition(format!(
                    "sample {n} has determinant {d}, not 1"
                )));
            }
        }
        Ok(Self { samples })
    }

    /// Sample `f` on a grid of `n` intervals; `f(0)` is replaced by the identity.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Mat2) -> Result<Self> {
        let mut samples: Vec<Mat2> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        samples[0] = Mat2::identity();
        Self::new(samples)
    }

    /// Rotation path `t ↦ e^{i·angle·t}`.
    pub fn rotation(angle: f64, n: usize) -> Result<Self> {
        Self::from_fn(n, |t| rot(angle * t))
    }

    /// `diag(e^{λt}, e^{−λt})`.
    pub fn hyperbolic(lambda: f64, n: usize) -> Result<Self> {
        Self::from_fn(n, |t| {
            Mat2::new((lambda * t).exp(), 0.0, 0.0, (-lambda * t).exp())
        })
    }

    /// Solve `φ' = J0 S(t) φ`, `φ(0) = I`, and sample on `n` intervals.
    pub fn from_generator(n: usize, s: impl Fn(f64) -> Mat2) -> Result<Self> {
        let j = j0();
        Self::solve(n, |t, phi| j * s(t) * phi)
    }

    /// Pointwise inverse of the path generated by `s`, solving `ψ' = −ψ J0 S(t)`.
    /// Its directions can turn much faster than those of `φ`, so it usually needs a finer grid.
    pub fn inverse_from_generator(n: usize, s: impl Fn(f64) -> Mat2) -> Result<Self> {
        let j = j0();
        Self::solve(n, |t, psi| -(psi * j * s(t)))
    }

    fn solve(n: usize, rhs: impl Fn(f64, Mat2) -> Mat2) -> Result<Self> {
        let times: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let opts = OdeOptions {
            h_init: 1.0 / n as f64,
            ..OdeOptions::with_tol(1e-12)
        };
        let states = ode::integrate_dense(
            |t, y, dy| {
                let d = rhs(t, Mat2::new(y[0], y[1], y[2], y[3]));
                dy.copy_from_slice(&[d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]]);
                Ok(())
            },
            0.0,
            &[1.0, 0.0, 0.0, 1.0],
            &times,
            opts,
            |_| {},
        )?;
        let mut samples = Vec::with_capacity(n + 1);
        samples.push(Mat2::identity());
        samples.extend(states.iter().map(|y| Mat2::new(y[0], y[1], y[2], y[3])));
        Self::new(samples)
    }

    /// Path generated by a symmetric loop, integrated with trigonometric interpolation of its samples.
    pub fn from_loop(s: &SymmetricLoop, n: usize) -> Result<Self> {
        let interp = s.interpolant();
        Self::from_generator(n, |t| interp.eval(t))
    }

    pub fn samples(&self) -> &[Mat2] {
        &self.samples
    }

    /// Number of grid intervals `N`.
    pub fn grid(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn monodromy(&self) -> Mat2 {
        self.samples[self.grid()]
    }

    /// `det(φ(1) − I)`.
    pub fn det_endpoint_minus_identity(&self) -> f64 {
        (self.monodromy() - Mat2::identity()).determinant()
    }

    pub fn is_degenerate(&self) -> bool {
        self.det_endpoint_minus_identity().abs() < super::DEGENERACY_TOL
    }

    /// `φ_k(t) = φ(kt − j) φ(1)^j` for `t ∈ [j/k, (j+1)/k]`, sampled exactly on `kN` intervals.
    pub fn iterate(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("iterate count must be positive".into()));
        }
        let n = self.grid();
        let a = self.monodromy();
        let mut samples = Vec::with_capacity(k * n + 1);
        let mut power = Mat2::identity();
        for _ in 0..k {
            for i in 0..n {
                samples.push(self.samples[i] * power);
            }
            power = a * power;
        }
        samples.push(power);
        samples[0] = Mat2::identity();
        Self::new(samples)
    }

    /// Pointwise inverse `t ↦ φ(t)^{-1}`.
    pub fn inverse(&self) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|m| Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / m.determinant())
            .collect::<Vec<_>>();
        let mut s = samples;
        s[0] = Mat2::identity();
        Self::new(s)
    }

    /// Conjugation by the reflection `C = diag(1, −1)`.
    pub fn reflect(&self) -> Result<Self> {
        let c = Mat2::new(1.0, 0.0, 0.0, -1.0);
        let mut s: Vec<Mat2> = self.samples.iter().map(|m| c * m * c).collect();
        s[0] = Mat2::identity();
        Self::new(s)
    }

    /// `t ↦ e^{2πimt} φ(t)`: prepends `m` full turns.
    pub fn with_turns(&self, m: i64) -> Result<Self> {
        let n = self.grid() as f64;
        let mut s: Vec<Mat2> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, p)| rot(TAU * m as f64 * i as f64 / n) * p)
            .collect();
        s[0] = Mat2::identity();
        Self::new(s)
    }

    /// `S(t) = −J0 φ'(t) φ(t)^{-1}`, with `φ'` by eighth-order central differences
    /// on the periodically extended path `φ(t+1) = φ(t)φ(1)`.
    pub fn generator(&self) -> Result<SymmetricLoop> {
        const W: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let n = self.grid();
        let a = self.monodromy();
        let a_inv = a
            .try_inverse()
            .ok_or_else(|| Error::Singular("monodromy not invertible".into()))?;
        let at = |i: isize| -> Mat2 {
            let ni = n as isize;
            if i >= ni {
                self.samples[(i - ni) as usize] * a
            } else if i < 0 {
                self.samples[(i + ni) as usize] * a_inv
            } else {
                self.samples[i as usize]
            }
        };
        let h = 1.0 / n as f64;
        let mj = -j0();
        let mut out = Vec::with_capacity(n);
        let mut defect: f64 = 0.0;
        for i in 0..n as isize {
            let mut d = Mat2::zeros();
            for (m, w) in W.iter().enumerate() {
                let m = m as isize + 1;
                d += (at(i + m) - at(i - m)) * *w;
            }
            d /= h;
            let phi = self.samples[i as usize];
            let inv = Mat2::new(phi[(1, 1)], -phi[(0, 1)], -phi[(1, 0)], phi[(0, 0)]);
            let s = mj * d * inv / phi.determinant();
            let scale = s.abs().max().max(1.0);
            defect = defect.max((s[(0, 1)] - s[(1, 0)]).abs() / scale);
            out.push(s);
        }
        if defect > FRAME_SYMMETRY_TOL {
            return Err(Error::FrameNotUnitary(defect));
        }
        Ok(SymmetricLoop::symmetrized(out))
    }
}

/// A 1-periodic loop of symmetric matrices sampled at `t_n = n/N`, `n = 0..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[[f64; 2]; 2]>", into = "Vec<[[f64; 2]; 2]>")]
pub struct SymmetricLoop {
    samples: Vec<Mat2>,
}

impl TryFrom<Vec<[[f64; 2]; 2]>> for SymmetricLoop {
    type Error = Error;
    fn try_from(v: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        SymmetricLoop::new(v.iter().map(from_rows).collect())
    }
}

impl From<SymmetricLoop> for Vec<[[f64; 2]; 2]> {
    fn from(s: SymmetricLoop) -> Self {
        s.samples.iter().map(to_rows).collect()
    }
}

impl SymmetricLoop {
    pub fn new(samples: Vec<Mat2>) -> Result<Self> {
        if samples.len() < 8 {
            return Err(Error::Precondition("loop needs at least 8 samples".into()));
        }
        for (n, m) in samples.iter().enumerate() {
            let d = (m[(0, 1)] - m[(1, 0)]).abs();
            if !(d < SYMMETRY_TOL) || !m.iter().all(|x| x.is_finite()) {
                return Err(Error::Precondition(format!(
                    "sample {n} is not symmetric (defect {d})"
                )));
            }
        }
        Ok(Self { samples })
    }

    pub(crate) fn symmetrized(samples: Vec<Mat2>) -> Self {
        Self {
            samples: samples.into_iter().map(|m| (m + m.transpose()) * 0.5).collect(),
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> Mat2) -> Result<Self> {
        let samples = (0..n).map(|i| f(i as f64 / n as f64)).collect::<Vec<_>>();
        if n < 8 {
            return Err(Error::Precondition("loop needs at least 8 samples".into()));
        }
        Ok(Self::symmetrized(samples))
    }

    pub fn constant(c: f64, n: usize) -> Result<Self> {
        Self::from_fn(n, |_| Mat2::identity() * c)
    }

    pub fn samples(&self) -> &[Mat2] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `2π + R S R^{-1}` with `R = e^{2πit}`: generator of the path with one turn prepended.
    pub fn with_turn(&self) -> Self {
        let n = self.samples.len() as f64;
        Self::symmetrized(
            self.samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let r = rot(TAU * i as f64 / n);
                    Mat2::identity() * TAU + r * s * r.transpose()
                })
                .collect(),
        )
    }

    /// `−C S C` with `C = diag(1, −1)`: generator of the reflected path `CφC`.
    pub fn reflected_negative(&self) -> Self {
        let c = Mat2::new(1.0, 0.0, 0.0, -1.0);
        Self::symmetrized(self.samples.iter().map(|s| -(c * s * c)).collect())
    }

    /// `t ↦ k S(kt)`, the generator of the `k`-th iterate, on the same grid size.
    pub fn iterate(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("iterate count must be positive".into()));
        }
        let n = self.samples.len();
        let interp = self.interpolant();
        Self::from_fn(n * k, |t| interp.eval((k as f64 * t).fract()) * k as f64)
    }

    /// Trigonometric interpolant through the samples.
    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::new(&self.samples)
    }

    /// Complex Fourier coefficients of the three entries `(s11, s12, s22)`, for `|m| ≤ max_mode`.
    pub(crate) fn entry_coefficients(&self, max_mode: usize) -> Vec<[(f64, f64); 3]> {
        let n = self.samples.len();
        let mut out = Vec::with_capacity(2 * max_mode + 1);
        for m in -(max_mode as i64)..=(max_mode as i64) {
            let mut acc = [(0.0, 0.0); 3];
            if (m.unsigned_abs() as usize) <= n / 2 {
                for (i, s) in self.samples.iter().enumerate() {
                    let (sn, cs) = (-TAU * m as f64 * i as f64 / n as f64).sin_cos();
                    for (e, v) in [s[(0, 0)], s[(0, 1)], s[(1, 1)]].iter().enumerate() {
                        acc[e].0 += v * cs;
                        acc[e].1 += v * sn;
                    }
                }
                // split the Nyquist mode evenly between ±N/2
                let w = if n.is_multiple_of(2) && m.unsigned_abs() as usize == n / 2 {
                    0.5
                } else {
                    1.0
                };
                for a in acc.iter_mut() {
                    a.0 *= w / n as f64;
                    a.1 *= w / n as f64;
                }
            }
            out.push(acc);
        }
        out
    }
}

/// Real trigonometric interpolation of a sampled periodic matrix function.
pub struct TrigInterpolant {
    // (mode, cos coefficient, sin coefficient)
    terms: Vec<(f64, Mat2, Mat2)>,
}

impl TrigInterpolant {
    fn new(samples: &[Mat2]) -> Self {
        let n = samples.len();
        let half = n / 2;
        let mut terms = Vec::with_capacity(half + 1);
        for m in 0..=half {
            let mut a = Mat2::zeros();
            let mut b = Mat2::zeros();
            for (i, s) in samples.iter().enumerate() {
                let (sn, cs) = (TAU * (m * i) as f64 / n as f64).sin_cos();
                a += s * cs;
                b += s * sn;
            }
            let w = if m == 0 || (n.is_multiple_of(2) && m == half) {
                1.0
            } else {
                2.0
            };
            terms.push((m as f64, a * (w / n as f64), b * (w / n as f64)));
        }
        Self { terms }
    }

    pub fn eval(&self, t: f64) -> Mat2 {
        let mut out = Mat2::zeros();
        for (m, a, b) in &self.terms {
            let (s, c) = (TAU * m * t).sin_cos();
            out += a * c + b * s;
        }
        out
    }
}
