//! Rational unknots in lens spaces: monodromy, self-linking, the explicit p-disk
//! and the arithmetic of the lens-space classification.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{deck_power_between, gcd, global_xi_section, lambda0_raw, LensParams, Point4};
use crate::index::wind_relative;

/// Class of `w` in `Z_p`, represented in `{0, …, p−1}`.
pub fn monodromy_from_winding(p: u32, w: i64) -> Result<u32> {
    if p == 0 {
        return Err(Error::Precondition("p must be at least 1".into()));
    }
    Ok(w.rem_euclid(p as i64) as u32)
}

/// Monodromy `−q` of the binding of `L(p,q)`, as a representative in `{0, …, p−1}`.
pub fn lens_binding_monodromy(lens: &LensParams) -> u32 {
    (-(lens.q() as i64)).rem_euclid(lens.p() as i64) as u32
}

/// `sl = p · wind`.
pub fn self_linking_from_winding(p: u32, wind: i64) -> Result<i64> {
    if p == 0 {
        return Err(Error::Precondition("p must be at least 1".into()));
    }
    Ok(p as i64 * wind)
}

/// Algebraic intersection `|p′q − pq′|` of the torus curves of slopes `(p, q)` and `(p′, q′)`.
pub fn slope_intersection(p: i64, q: i64, p2: i64, q2: i64) -> u64 {
    (p2 * q - p * q2).unsigned_abs()
}

fn check_same_p(p: u32, q1: u32, q2: u32) -> Result<()> {
    LensParams::new(p, q1)?;
    LensParams::new(p, q2)?;
    Ok(())
}

/// `L(p,q1) ≅ L(p,q2)` iff `q1 ≡ ±q2` or `q1 q2 ≡ ±1 (mod p)`.
pub fn lens_homeomorphic(p: u32, q1: u32, q2: u32) -> Result<bool> {
    check_same_p(p, q1, q2)?;
    let p = p as i64;
    let (a, b) = (q1 as i64, q2 as i64);
    let eq = |x: i64, y: i64| (x - y).rem_euclid(p) == 0;
    Ok(eq(a, b) || eq(a, -b) || eq(a * b, 1) || eq(a * b, -1))
}

/// `L(p,q1) ≃ L(p,q2)` iff `q1 ≡ ±k² q2 (mod p)` for some `k`.
pub fn lens_homotopy_equivalent(p: u32, q1: u32, q2: u32) -> Result<bool> {
    check_same_p(p, q1, q2)?;
    if p == 1 {
        return Ok(true);
    }
    let p = p as i64;
    let (a, b) = (q1 as i64, q2 as i64);
    Ok((1..p).any(|k| {
        let r = (k * k % p) * b;
        (a - r).rem_euclid(p) == 0 || (a + r).rem_euclid(p) == 0
    }))
}

/// Homeomorphism and homotopy-equivalence matrices over the residues coprime to `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationTable {
    pub p: u32,
    pub residues: Vec<u32>,
    pub homeomorphic: Vec<Vec<bool>>,
    pub homotopy_equivalent: Vec<Vec<bool>>,
    /// Homeomorphism classes as lists of residues.
    pub homeomorphism_classes: Vec<Vec<u32>>,
}

pub fn classification_table(p: u32) -> Result<ClassificationTable> {
    if p < 2 {
        return Err(Error::Precondition(format!(
            "classification needs p ≥ 2, got {p}"
        )));
    }
    let residues: Vec<u32> = (1..p).filter(|&q| gcd(p as u64, q as u64) == 1).collect();
    let mut homeomorphic = Vec::with_capacity(residues.len());
    let mut homotopy = Vec::with_capacity(residues.len());
    for &a in &residues {
        homeomorphic.push(
            residues
                .iter()
                .map(|&b| lens_homeomorphic(p, a, b))
                .collect::<Result<Vec<_>>>()?,
        );
        homotopy.push(
            residues
                .iter()
                .map(|&b| lens_homotopy_equivalent(p, a, b))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let mut classes: Vec<Vec<u32>> = Vec::new();
    for (i, &a) in residues.iter().enumerate() {
        if classes.iter().any(|c| c.contains(&a)) {
            continue;
        }
        classes.push(
            residues
                .iter()
                .enumerate()
                .filter(|(j, _)| homeomorphic[i][*j])
                .map(|(_, &b)| b)
                .collect(),
        );
    }
    Ok(ClassificationTable {
        p,
        residues,
        homeomorphic,
        homotopy_equivalent: homotopy,
        homeomorphism_classes: classes,
    })
}

/// Which principal circle bounds the disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Binding {
    /// The `z`-circle `{w = 0}`.
    #[serde(rename = "K")]
    ZCircle,
    /// The `w`-circle `{z = 0}`.
    #[serde(rename = "K'")]
    WCircle,
}

/// The p-disk `re^{iθ} ↦ Π(f(r)e^{iθ}, √(1 − f(r)²))` of `L(p,q)`, or its mirror
/// with the two factors swapped when the binding is the `w`-circle.
///
/// The radial profile is `f(r) = r` near `0` and `f(r) = cos(π/2 (1 − r))` near `1`,
/// blended by a cubic smoothstep on `[blend_start, blend_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PDisk {
    pub lens: LensParams,
    pub binding: Binding,
    pub blend_start: f64,
    pub blend_end: f64,
}

/// A point of the disk as a lift to `S^3` together with the lens space it lives in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensPoint {
    pub lift: Point4,
    pub lens: LensParams,
}

impl LensPoint {
    /// Deck power carrying `self` to `other` within `tol`, if they define the same point.
    pub fn deck_power_to(&self, other: &LensPoint, tol: f64) -> Option<i64> {
        deck_power_between(&self.lens, &self.lift, &other.lift, tol)
    }
}

fn smoothstep(x: f64) -> (f64, f64) {
    let x = x.clamp(0.0, 1.0);
    (x * x * (3.0 - 2.0 * x), 6.0 * x * (1.0 - x))
}

impl PDisk {
    pub fn new(lens: LensParams, binding: Binding) -> Self {
        Self {
            lens,
            binding,
            blend_start: 0.2,
            blend_end: 0.8,
        }
    }

    /// `(f(r), f′(r))`.
    pub fn profile(&self, r: f64) -> (f64, f64) {
        let (a, b) = (self.blend_start, self.blend_end);
        let (s, ds) = smoothstep((r - a) / (b - a));
        let ds = ds / (b - a);
        let g = (FRAC_PI_2 * (1.0 - r)).cos();
        let dg = FRAC_PI_2 * (FRAC_PI_2 * (1.0 - r)).sin();
        ((1.0 - s) * r + s * g, (1.0 - s) + s * dg + ds * (g - r))
    }

    /// `(√(1 − f²), d/dr √(1 − f²))`, using the closed-form germ where `f = cos(π/2 (1 − r))`.
    fn cofactor(&self, r: f64) -> (f64, f64) {
        if r >= self.blend_end {
            let a = FRAC_PI_2 * (1.0 - r);
            (a.sin(), -FRAC_PI_2 * a.cos())
        } else {
            let (f, df) = self.profile(r);
            let c = (1.0 - f * f).max(0.0).sqrt();
            (c, -f * df / c)
        }
    }

    fn assemble(&self, a: (f64, f64), b: (f64, f64)) -> [f64; 4] {
        match self.binding {
            Binding::ZCircle => [a.0, a.1, b.0, b.1],
            Binding::WCircle => [b.0, b.1, a.0, a.1],
        }
    }

    fn check_r(r: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Precondition(format!("radius {r} outside [0, 1]")));
        }
        Ok(())
    }

    /// The lifted point `ũ(r, θ)` on `S^3`.
    pub fn lift(&self, r: f64, theta: f64) -> Result<Point4> {
        Self::check_r(r)?;
        let (f, _) = self.profile(r);
        let (c, _) = self.cofactor(r);
        let (s, co) = theta.sin_cos();
        Point4::normalized(self.assemble((f * co, f * s), (c, 0.0)))
    }

    /// `∂_r ũ` and `∂_θ ũ`.
    pub fn derivatives(&self, r: f64, theta: f64) -> Result<([f64; 4], [f64; 4])> {
        Self::check_r(r)?;
        let (f, df) = self.profile(r);
        let (_, dc) = self.cofactor(r);
        let (s, co) = theta.sin_cos();
        let dr = self.assemble((df * co, df * s), (dc, 0.0));
        let dt = self.assemble((-f * s, f * co), (0.0, 0.0));
        Ok((dr, dt))
    }

    /// The point `Π(ũ(r, θ))` of `L(p,q)`. The boundary loop covers the binding `p` times.
    pub fn point(&self, r: f64, theta: f64) -> Result<LensPoint> {
        Ok(LensPoint {
            lift: self.lift(r, theta)?,
            lens: self.lens,
        })
    }

    /// Checks that `f` is strictly increasing from `0` to `1` and that `ũ` is an
    /// immersion on `0 < r < 1`, by sampling.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let (f0, _) = self.profile(0.0);
        let (f1, _) = self.profile(1.0);
        if f0.abs() > 1e-15 || (f1 - 1.0).abs() > 1e-15 {
            return Err(Error::Inconsistent("profile must map 0 ↦ 0 and 1 ↦ 1".into()));
        }
        for i in 1..samples {
            let r = i as f64 / samples as f64;
            let (_, df) = self.profile(r);
            if !(df > 0.0) {
                return Err(Error::Inconsistent(format!("profile not increasing at r = {r}")));
            }
            let (dr, dt) = self.derivatives(r, 0.7 * i as f64)?;
            // Gram determinant of the two tangent vectors
            let g11: f64 = dr.iter().map(|x| x * x).sum();
            let g22: f64 = dt.iter().map(|x| x * x).sum();
            let g12: f64 = dr.iter().zip(&dt).map(|(a, b)| a * b).sum();
            if !(g11 * g22 - g12 * g12 > 1e-14) {
                return Err(Error::Inconsistent(format!("disk not immersed at r = {r}")));
            }
        }
        Ok(())
    }
}

const COLLAR_SAMPLES: usize = 4096;
const COLLAR_RADIUS: f64 = 1.0 - 1e-3;

/// Self-linking of the binding from the disk: `p · wind(X, N)`, where `X = (−w̄, z̄)`
/// (mirrored for the `w`-circle) is the global section of `ξ_std` and `N` is the
/// projection of `∂_r ũ` to `ξ_std` along the collar `r = 1 − 10^{-3}`.
pub fn binding_sl_numeric(disk: &PDisk) -> Result<i64> {
    disk.validate(64)?;
    let mut xs = Vec::with_capacity(COLLAR_SAMPLES);
    let mut ns = Vec::with_capacity(COLLAR_SAMPLES);
    for i in 0..COLLAR_SAMPLES {
        let theta = TAU * i as f64 / COLLAR_SAMPLES as f64;
        let pt = disk.lift(COLLAR_RADIUS, theta)?;
        let (dr, _) = disk.derivatives(COLLAR_RADIUS, theta)?;
        let c = pt.coords();
        // ξ_std is the complex orthogonal complement of the point
        let l = lambda0_raw(&c, &dr);
        let reeb = [-2.0 * c[1], 2.0 * c[0], -2.0 * c[3], 2.0 * c[2]];
        let n: Vec<f64> = (0..4).map(|k| dr[k] - l * reeb[k]).collect();
        let x = global_xi_section(&pt);
        // complex coordinate of N in the frame X: ⟨X, N⟩_C / |X|²
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let re = (x[0] * n[0] + x[1] * n[1] + x[2] * n[2] + x[3] * n[3]) / xx;
        let im = (x[0] * n[1] - x[1] * n[0] + x[2] * n[3] - x[3] * n[2]) / xx;
        xs.push((1.0, 0.0));
        ns.push((re, im));
    }
    // wind(X, N) is the winding of X measured against N
    let wind = wind_relative(&ns, &xs)?;
    self_linking_from_winding(disk.lens.p(), wind)
}
