//! Conley–Zehnder indices of paths in `Sp(2)`, rotation numbers and relative windings.
//!
//! `R^2` is identified with `C` and `J0 = [[0, −1], [1, 0]]` is multiplication by `i`.
//! A path solves `φ' = J0 S(t) φ`, so the loop `S ≡ c·I` generates the rotation
//! `e^{ict}` and the operator `L_S = −i∂_t − S` has eigenvalues `2πk − c` with
//! eigenvectors of winding `k`.

mod geometric;
mod path;
pub mod random;
mod spectral;
mod winding;

pub use geometric::{cz_geometric, delta_phi, interval_of_windings, rotation_number, RotationNumber};
pub use path::{Mat2, SymmetricLoop, SymplecticPath};
pub use spectral::{cz_spectral, spectrum, spectrum_with, Eigenpair, SpectralData, SpectralOptions};
pub use winding::{unwrap_winding, wind_relative, FrameClass};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degeneracy threshold for `det(φ(1) − I)` and for `dist(0, spectrum)`.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// An index together with the degeneracy flag of its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CzValue {
    pub mu: i64,
    pub degenerate: bool,
}

/// `μ̃` of a closed interval `[a, b]` of length below `1/2`.
///
/// Returns `2k` if the integer `k` lies in the interval and `2k + 1` if the
/// interval sits inside `(k, k+1)`. An integer right endpoint is resolved by
/// the limit `μ̃(J − ε)`, `ε → 0⁺`.
pub fn mu_tilde(a: f64, b: f64) -> Result<i64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidInterval(b - a));
    }
    if b - a >= 0.5 {
        return Err(Error::InvalidInterval(b - a));
    }
    let k = a.ceil();
    if k < b {
        return Ok(2 * k as i64);
    }
    // J − ε lies in (m, m + 1)
    let m = b.ceil() - 1.0;
    Ok(2 * m as i64 + 1)
}
