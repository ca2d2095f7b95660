use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_pi;

const AMPLITUDE_TOL: f64 = 1e-9;

/// Total phase change (in turns) of a closed sampled curve in `C`, closing the
/// last sample back to the first. Fails if a step exceeds `max_jump` radians.
pub fn unwrap_winding(samples: &[(f64, f64)], max_jump: f64) -> Result<f64> {
    let mut total = 0.0;
    let n = samples.len();
    for i in 0..n {
        let a = samples[i];
        let b = samples[(i + 1) % n];
        let d = wrap_pi(b.1.atan2(b.0) - a.1.atan2(a.0));
        if d.abs() > max_jump {
            return Err(Error::GridTooCoarse { jump: d.abs() });
        }
        total += d;
    }
    Ok(total / TAU)
}

/// `wind(W, Z)`: the winding of `W` measured in the frame completing `Z`, i.e.
/// the winding of the quotient `W/Z`. Both loops are sampled on the same closed grid.
pub fn wind_relative(z: &[(f64, f64)], w: &[(f64, f64)]) -> Result<i64> {
    if z.len() != w.len() || z.len() < 3 {
        return Err(Error::Precondition(
            "loops must share a grid of at least 3 samples".into(),
        ));
    }
    for s in [z, w] {
        let amps: Vec<f64> = s.iter().map(|c| c.0.hypot(c.1)).collect();
        let max = amps.iter().cloned().fold(0.0, f64::max);
        let min = amps.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > AMPLITUDE_TOL * max.max(1e-300)) {
            return Err(Error::IllConditioned(format!(
                "loop amplitude ratio {} below threshold",
                min / max
            )));
        }
    }
    let q: Vec<(f64, f64)> = z
        .iter()
        .zip(w)
        .map(|(a, b)| (b.0 * a.0 + b.1 * a.1, b.1 * a.0 - b.0 * a.1))
        .collect();
    let turns = unwrap_winding(&q, std::f64::consts::FRAC_PI_2)?;
    Ok(turns.round() as i64)
}

/// Homotopy class of a trivialization, recorded as its winding against a fixed reference class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameClass {
    pub offset: i64,
}

impl FrameClass {
    pub fn reference() -> Self {
        Self { offset: 0 }
    }

    /// The class obtained by twisting by `m` full turns.
    pub fn twisted(&self, m: i64) -> Self {
        Self {
            offset: self.offset + m,
        }
    }

    /// `wind(self, other)`.
    pub fn wind_against(&self, other: &FrameClass) -> i64 {
        self.offset - other.offset
    }
}
