use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::path::{Mat2, SymplecticPath};
use super::{mu_tilde, CzValue};
use crate::error::{Error, Result};
use crate::geometry::wrap_pi;

const DIRECTION_SAMPLES: usize = 720;
const GOLDEN_ITERS: usize = 60;

/// `Δ_φ(ζ)`: winding (in turns) of `t ↦ φ(t)ζ`, by phase unwrapping along the grid.
pub fn delta_phi(path: &SymplecticPath, zeta: [f64; 2]) -> Result<f64> {
    let n = zeta[0].hypot(zeta[1]);
    if !(n > 0.0) {
        return Err(Error::Precondition("direction must be nonzero".into()));
    }
    check_resolution(path)?;
    Ok(delta_at_angle(path, zeta[1].atan2(zeta[0])))
}

/// Every grid step `E_n = φ(t_{n+1}) φ(t_n)^{-1}` must turn directions by less than a
/// quarter turn, measured by `tr E_n > 0`. The trace is conjugation invariant, so a
/// step with positive trace cannot carry any direction to its negative and the
/// wrapped phase increment is exact for every direction at once.
fn check_resolution(path: &SymplecticPath) -> Result<()> {
    for w in path.samples().windows(2) {
        let a = w[0];
        let inv = Mat2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]);
        let tr = (w[1] * inv).trace();
        if !(tr > 0.0) {
            let jump = if tr.abs() <= 2.0 { (tr / 2.0).acos() } else { PI };
            return Err(Error::GridTooCoarse { jump });
        }
    }
    Ok(())
}

fn delta_at_angle(path: &SymplecticPath, s: f64) -> f64 {
    let (sn, cs) = s.sin_cos();
    let mut prev = s;
    let mut total = 0.0;
    for m in &path.samples()[1..] {
        let v = (m[(0, 0)] * cs + m[(0, 1)] * sn, m[(1, 0)] * cs + m[(1, 1)] * sn);
        let a = v.1.atan2(v.0);
        total += wrap_pi(a - prev);
        prev = a;
    }
    total / TAU
}

fn golden_extremum(path: &SymplecticPath, mut lo: f64, mut hi: f64, sign: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let f = |s: f64| sign * delta_at_angle(path, s);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERS {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    sign * f1.max(f2)
}

/// `I_φ = [min Δ_φ, max Δ_φ]` over unit directions.
pub fn interval_of_windings(path: &SymplecticPath) -> Result<(f64, f64)> {
    check_resolution(path)?;
    // Δ(−ζ) = Δ(ζ), so directions in [0, π) suffice
    let h = PI / DIRECTION_SAMPLES as f64;
    let vals: Vec<f64> = (0..DIRECTION_SAMPLES)
        .map(|i| delta_at_angle(path, i as f64 * h))
        .collect();
    let (imin, _) = vals.iter().enumerate().fold(
        (0, f64::INFINITY),
        |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc },
    );
    let (imax, _) =
        vals.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc },
        );
    let s_min = imin as f64 * h;
    let s_max = imax as f64 * h;
    let lo = golden_extremum(path, s_min - h, s_min + h, -1.0).min(vals[imin]);
    let hi = golden_extremum(path, s_max - h, s_max + h, 1.0).max(vals[imax]);
    Ok((lo, hi))
}

/// `μ_CZ(φ) = μ̃(I_φ)`, with the degeneracy flag `|det(φ(1) − I)| < 1e−9`.
pub fn cz_geometric(path: &SymplecticPath) -> Result<CzValue> {
    let (a, b) = interval_of_windings(path)?;
    let mu = mu_tilde(a, b)
        .map_err(|_| Error::Inconsistent(format!("winding interval [{a}, {b}] has length ≥ 1/2")))?;
    Ok(CzValue {
        mu,
        degenerate: path.is_degenerate(),
    })
}

/// Rotation number with an error bar from the Birkhoff estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationNumber {
    pub value: f64,
    pub error_bar: f64,
    /// `false` when the exact fractional part could not be matched to the Birkhoff estimate.
    pub converged: bool,
}

/// Rotation number `ρ = lim f^k(s)/k` of the lifted circle map `f(s) = s + Δ_φ(s)`.
///
/// The Birkhoff average over `iterates` steps is Richardson-extrapolated from the
/// half-length run. Its integer part is then combined with the fractional part
/// read off exactly from the conjugacy class of `φ(1)`.
pub fn rotation_number(path: &SymplecticPath, iterates: usize) -> Result<RotationNumber> {
    if iterates < 8 {
        return Err(Error::Precondition(format!(
            "rotation number needs at least 8 iterates, got {iterates}"
        )));
    }
    check_resolution(path)?;
    let a = path.monodromy();
    let delta0 = delta_at_angle(path, 0.0);
    // all Δ values lie within 1/2 of each other, which fixes the branch of the lift
    let lift = |s: f64| -> f64 {
        let ang = TAU * s;
        let (sn, cs) = ang.sin_cos();
        let v = (a[(0, 0)] * cs + a[(0, 1)] * sn, a[(1, 0)] * cs + a[(1, 1)] * sn);
        let frac = wrap_pi(v.1.atan2(v.0) - ang) / TAU;
        s + frac + (delta0 - frac).round()
    };
    let half = iterates / 2;
    let mut x = 0.0;
    let mut x_half = 0.0;
    for k in 1..=iterates {
        x = lift(x);
        if k == half {
            x_half = x;
        }
    }
    let est = (x - x_half) / (iterates - half) as f64;
    let error_bar = ((x / iterates as f64) - est).abs().max(4.0 / iterates as f64);

    let tr = a.trace();
    let frac = if tr.abs() < 2.0 {
        let theta = (tr / 2.0).acos();
        let theta = if a[(1, 0)] < 0.0 { TAU - theta } else { theta };
        theta / TAU
    } else if tr > 0.0 {
        0.0
    } else {
        0.5
    };
    let polished = frac + (est - frac).round();
    if (polished - est).abs() <= error_bar + 1e-9 {
        Ok(RotationNumber {
            value: polished,
            error_bar: 0.0,
            converged: true,
        })
    } else {
        Ok(RotationNumber {
            value: est,
            error_bar,
            converged: false,
        })
    }
}
