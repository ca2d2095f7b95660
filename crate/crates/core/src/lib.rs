//! Invariants of Reeb flows on the three-sphere and on lens spaces.
//!
//! The crate covers the round and ellipsoidal contact forms on `S^3` together
//! with their `Z_p` quotients `L(p,q)`:
//!
//! * [`geometry`]: the Liouville form, Reeb vector fields, flows and the deck group.
//! * [`index`]: Conley–Zehnder indices of paths in `Sp(2)` (spectral and
//!   geometric definitions), rotation numbers and relative winding numbers.
//! * [`orbits`]: closed-orbit catalogs, linearized flows and asymptotic operators.
//! * [`knots`]: monodromy, self-linking numbers, p-disks and lens-space arithmetic.
//! * [`section`]: pages of the rational open book, return maps and the
//!   global-surface-of-section verifier.
//! * [`bookkeeping`]: period gaps, winding relations and bubbling-tree validation.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bookkeeping;
pub mod error;
pub mod geometry;
pub mod index;
pub mod knots;
pub mod ode;
pub mod orbits;
pub mod report;
pub mod section;

pub use error::{Error, Result};
pub use geometry::{ContactSystem, Family, LensParams, Point4, Tangent4};
pub use index::{SpectralData, SymmetricLoop, SymplecticPath};
pub use orbits::{ClosedOrbit, OrbitLabel};
