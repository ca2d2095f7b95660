//! Closed Reeb orbits of the ellipsoid family, their transverse linearized flow
//! and Conley–Zehnder indices in the capping-disk trivialization.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    deck_action, flow_closed_form, global_xi_section, mul_i, project_sphere, reeb_at, scale4, ContactSystem,
    Family, LensParams, Point4,
};
use crate::index::{
    cz_geometric, cz_spectral, rotation_number, unwrap_winding, FrameClass, Mat2, SymmetricLoop,
    SymplecticPath,
};
use crate::knots::{Binding, PDisk};
use crate::ode::{self, OdeOptions};

/// Closure tolerance for catalogued orbits.
const CLOSURE_TOL: f64 = 1e-8;
/// Distance from an integer below which a rotation is treated as degenerate.
const DEGENERACY_TOL: f64 = 1e-9;
/// Determinant drift allowed along the variational integration.
const DET_DRIFT_TOL: f64 = 1e-6;
/// Finite-difference step for the derivative of the Reeb field.
const FD_STEP: f64 = 2e-5;
/// Grid intervals per lifted turn of the orbit.
const GRID_PER_TURN: usize = 256;

/// The two principal circles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitLabel {
    /// `K = {w = 0}`.
    #[serde(rename = "K")]
    K,
    /// `K′ = {z = 0}`.
    #[serde(rename = "K'")]
    KPrime,
}

impl OrbitLabel {
    pub fn binding(&self) -> Binding {
        match self {
            OrbitLabel::K => Binding::ZCircle,
            OrbitLabel::KPrime => Binding::WCircle,
        }
    }
}

/// A closed Reeb orbit `P^m`: a prime orbit through `anchor` traversed `multiplicity` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbit {
    pub system: ContactSystem,
    pub label: Option<OrbitLabel>,
    pub anchor: Point4,
    pub prime_period: f64,
    pub multiplicity: u32,
    /// The deck power identifying the endpoint of the lifted prime trajectory with its start.
    pub deck_power: u32,
}

impl ClosedOrbit {
    /// Validates that the lifted trajectory closes up after the deck action.
    pub fn new(
        system: ContactSystem,
        anchor: Point4,
        prime_period: f64,
        multiplicity: u32,
        deck_power: u32,
    ) -> Result<Self> {
        if !(prime_period > 0.0) || multiplicity == 0 {
            return Err(Error::Precondition(
                "period and multiplicity must be positive".into(),
            ));
        }
        let o = Self {
            system,
            label: None,
            anchor,
            prime_period,
            multiplicity,
            deck_power,
        };
        let gap = o.closure_defect();
        if gap > CLOSURE_TOL {
            return Err(Error::Precondition(format!(
                "trajectory does not close up (defect {gap:e})"
            )));
        }
        Ok(o)
    }

    /// One of the two principal circles of an ellipsoid system, with multiplicity `m`.
    pub fn principal(system: ContactSystem, label: OrbitLabel, m: u32) -> Result<Self> {
        let lens = system.lens_or_sphere();
        let (ta, tb) = system.principal_periods();
        let p = lens.p() as f64;
        let (anchor, period, deck) = match label {
            OrbitLabel::K => (Point4::new([1.0, 0.0, 0.0, 0.0])?, ta / p, 1 % lens.p()),
            OrbitLabel::KPrime => (
                Point4::new([0.0, 0.0, 1.0, 0.0])?,
                tb / p,
                if lens.p() == 1 { 0 } else { lens.q_inverse() },
            ),
        };
        let mut o = Self::new(system, anchor, period, m, deck)?;
        o.label = Some(label);
        Ok(o)
    }

    pub fn lens(&self) -> LensParams {
        self.system.lens_or_sphere()
    }

    /// `T = m · T_min`, which is also the action `∫_P λ`.
    pub fn period(&self) -> f64 {
        self.multiplicity as f64 * self.prime_period
    }

    /// The same prime orbit with multiplicity `k`.
    pub fn iterate(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("iterate must be positive".into()));
        }
        Ok(Self {
            multiplicity: k,
            ..*self
        })
    }

    /// `|φ_{T_min}(anchor) − g^{deck}(anchor)|`.
    pub fn closure_defect(&self) -> f64 {
        let end = flow_closed_form(&self.system, &self.anchor, self.prime_period);
        deck_action(&self.lens(), self.deck_power as i64, &self.anchor).distance(&end)
    }

    /// Whether `P^k` lifts to a closed loop in `S^3`, i.e. is contractible in `L(p,q)`.
    pub fn is_contractible(&self, k: u32) -> bool {
        (k as u64 * self.deck_power as u64).is_multiple_of(self.lens().p() as u64)
    }

    /// Number of times the lift of `P^k` runs around its circle in `S^3`.
    fn lifted_turns(&self, k: u32) -> f64 {
        k as f64 * self.prime_period / self.lifted_prime_period()
    }

    fn lifted_prime_period(&self) -> f64 {
        let (ta, tb) = self.system.principal_periods();
        match self.label {
            Some(OrbitLabel::K) => ta,
            Some(OrbitLabel::KPrime) => tb,
            None => self.prime_period * self.lens().p() as f64,
        }
    }

    /// Transverse rotation (in turns) of the linearized return map of `P^k`
    /// relative to its lifted tangent circle, for principal orbits.
    fn transverse_turns(&self, k: u32) -> Option<f64> {
        let lens = self.lens();
        let (p, q) = (lens.p() as f64, lens.q() as f64);
        let (ta, tb) = self.system.principal_periods();
        let k = k as f64;
        match self.label? {
            OrbitLabel::K => Some(k * (ta / tb - q) / p),
            OrbitLabel::KPrime => {
                let qi = if lens.p() == 1 {
                    1.0
                } else {
                    lens.q_inverse() as f64
                };
                Some(k * (tb / ta - qi) / p)
            }
        }
    }

    /// Whether `P^k` is degenerate (linearized return map has eigenvalue 1).
    pub fn is_degenerate(&self, k: u32) -> bool {
        match self.transverse_turns(k) {
            Some(x) => (x - x.round()).abs() < DEGENERACY_TOL,
            None => true,
        }
    }
}

/// All iterates of the two principal circles with period at most `c`, sorted by period.
pub fn catalog(sys: &ContactSystem, c: f64) -> Result<Vec<ClosedOrbit>> {
    if let Family::Round = sys.family() {
        return Err(Error::Degenerate("orbit families not isolated".into()));
    }
    if !(c > 0.0) {
        return Err(Error::Precondition(format!(
            "action bound must be positive, got {c}"
        )));
    }
    let mut out = Vec::new();
    for label in [OrbitLabel::K, OrbitLabel::KPrime] {
        let prime = ClosedOrbit::principal(*sys, label, 1)?;
        let mut k = 1u32;
        while k as f64 * prime.prime_period <= c * (1.0 + 1e-12) {
            if prime.is_degenerate(k) {
                return Err(Error::Degenerate(format!(
                    "iterate {k} of {label:?} has a resonant return map"
                )));
            }
            out.push(prime.iterate(k)?);
            k += 1;
        }
    }
    out.sort_by(|a, b| a.period().total_cmp(&b.period()));
    Ok(out)
}

/// How a trivialization of `ξ` along the lifted orbit is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    /// The global section `W = (−w̄, z̄)` of `ξ`. It extends over every capping disk in `S^3`.
    Global,
    /// The outward normal `∂_r ũ` of the p-disk bounded by the orbit.
    DiskNormal,
    /// `W` turned by `m` full turns per traversal of the lifted loop.
    Twisted(i64),
}

/// A `dλ`-unitary trivialization along the lifted loop of `P^k`, sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct TransverseFrame {
    pub kind: FrameKind,
    /// `(e1, e2)` with `e2 = i e1` and `dλ(e1, e2) = 1`, at `s = n/N`, `n = 0..=N`.
    pub samples: Vec<([f64; 4], [f64; 4])>,
    /// Winding of this frame against the capping-disk class.
    pub class: FrameClass,
    period: f64,
}

impl TransverseFrame {
    /// Builds the frame along the lift of `P^k` (which must be contractible).
    pub fn build(orbit: &ClosedOrbit, k: u32, kind: FrameKind) -> Result<Self> {
        if !orbit.is_contractible(k) {
            return Err(Error::NotContractible(format!(
                "iterate {k} does not lift to a closed loop in S^3"
            )));
        }
        let turns = orbit.lifted_turns(k);
        let n = (GRID_PER_TURN as f64 * turns.max(1.0)).round() as usize;
        let period = k as f64 * orbit.prime_period;
        let sys = &orbit.system;
        let disk = orbit.label.map(|l| PDisk::new(orbit.lens(), l.binding()));
        let mut samples = Vec::with_capacity(n + 1);
        let mut offsets = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let x = flow_closed_form(sys, &orbit.anchor, s * period);
            let w = global_xi_section(&x);
            let raw = match kind {
                FrameKind::Global => w,
                FrameKind::Twisted(m) => {
                    let (sn, cs) = (TAU * m as f64 * s).sin_cos();
                    let iw = mul_i(&w);
                    std::array::from_fn(|j| cs * w[j] + sn * iw[j])
                }
                FrameKind::DiskNormal => {
                    let disk = disk
                        .ok_or_else(|| Error::Unsupported("disk framing needs a principal orbit".into()))?;
                    let (a, b) = match disk.binding {
                        Binding::ZCircle => x.z(),
                        Binding::WCircle => x.w(),
                    };
                    let (dr, _) = disk.derivatives(1.0, b.atan2(a))?;
                    sys.project_to_xi(&x, &dr)
                }
            };
            let norm2 = sys.dlambda(&x, &raw, &mul_i(&raw));
            if !(norm2 > 1e-12) {
                return Err(Error::Singular("frame vector degenerate in ξ".into()));
            }
            let e1 = scale4(1.0 / norm2.sqrt(), &raw);
            let e2 = mul_i(&e1);
            // complex coordinate of e1 against W
            let ww: f64 = w.iter().map(|v| v * v).sum();
            let re = w.iter().zip(&e1).map(|(a, b)| a * b).sum::<f64>() / ww;
            let iw = mul_i(&w);
            let im = iw.iter().zip(&e1).map(|(a, b)| a * b).sum::<f64>() / ww;
            offsets.push((re, im));
            samples.push((e1, e2));
        }
        offsets.pop();
        let offset = unwrap_winding(&offsets, std::f64::consts::FRAC_PI_2)?.round() as i64;
        Ok(Self {
            kind,
            samples,
            class: FrameClass::reference().twisted(offset),
            period,
        })
    }

    pub fn grid(&self) -> usize {
        self.samples.len() - 1
    }

    /// Coordinates `(dλ(v, e2), dλ(e1, v))` of `v` in the frame at sample `i`.
    fn coordinates(&self, sys: &ContactSystem, x: &Point4, i: usize, v: &[f64; 4]) -> (f64, f64) {
        let (e1, e2) = &self.samples[i];
        (sys.dlambda(x, v, e2), sys.dlambda(x, e1, v))
    }
}

/// Transverse linearized flow of `P^k` in `frame`, integrated numerically from the
/// variational equation `V' = DR(x) V` alongside the flow.
pub fn linearized_path(orbit: &ClosedOrbit, k: u32, frame: &TransverseFrame) -> Result<SymplecticPath> {
    let sys = orbit.system;
    let n = frame.grid();
    let period = frame.period;
    if (period - k as f64 * orbit.prime_period).abs() > 1e-12 * period {
        return Err(Error::Precondition(
            "frame was built for a different iterate".into(),
        ));
    }
    let x0 = orbit.anchor.coords();
    let (e1, e2) = frame.samples[0];
    let mut y0 = Vec::with_capacity(12);
    y0.extend_from_slice(&x0);
    y0.extend_from_slice(&e1);
    y0.extend_from_slice(&e2);
    let times: Vec<f64> = (1..=n).map(|i| i as f64 * period / n as f64).collect();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let x = [y[0], y[1], y[2], y[3]];
        dy[..4].copy_from_slice(&reeb_at(&sys, &x)?);
        for j in 0..2 {
            let v = &y[4 + 4 * j..8 + 4 * j];
            let plus: [f64; 4] = std::array::from_fn(|c| x[c] + FD_STEP * v[c]);
            let minus: [f64; 4] = std::array::from_fn(|c| x[c] - FD_STEP * v[c]);
            let rp = reeb_at(&sys, &plus)?;
            let rm = reeb_at(&sys, &minus)?;
            for c in 0..4 {
                dy[4 + 4 * j + c] = (rp[c] - rm[c]) / (2.0 * FD_STEP);
            }
        }
        Ok(())
    };
    let states = ode::integrate_dense(
        rhs,
        0.0,
        &y0,
        &times,
        OdeOptions {
            h_init: period / n as f64,
            ..OdeOptions::with_tol(1e-11)
        },
        |y: &mut [f64]| project_sphere(&mut y[..4]),
    )?;
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(Mat2::identity());
    for (i, y) in states.iter().enumerate() {
        let x = Point4::normalized([y[0], y[1], y[2], y[3]])?;
        let v1 = [y[4], y[5], y[6], y[7]];
        let v2 = [y[8], y[9], y[10], y[11]];
        let (a, c) = frame.coordinates(&sys, &x, i + 1, &v1);
        let (b, d) = frame.coordinates(&sys, &x, i + 1, &v2);
        let m = Mat2::new(a, b, c, d);
        let drift = (m.determinant() - 1.0).abs();
        if drift > DET_DRIFT_TOL {
            return Err(Error::Integration(format!(
                "symplecticity drift {drift:e} at sample {}",
                i + 1
            )));
        }
        // remove the residual drift before handing the path on
        samples.push(m / m.determinant().sqrt());
    }
    SymplecticPath::new(samples)
}

/// The loop `S(t)` of the asymptotic operator `L_S = −i∂_t − S` of `P^k` in `frame`.
pub fn asymptotic_loop(orbit: &ClosedOrbit, k: u32, frame: &TransverseFrame) -> Result<SymmetricLoop> {
    linearized_path(orbit, k, frame)?.generator()
}

/// Index data of one iterate, in the capping-disk class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitIndex {
    pub iterate: u32,
    pub period: f64,
    pub mu: i64,
    pub rho: f64,
    pub degenerate: bool,
    /// The spectral index, when requested.
    pub mu_spectral: Option<i64>,
    /// Winding of the working frame against the disk class.
    pub frame_offset: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexOptions {
    pub frame: FrameKind,
    pub spectral: bool,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            frame: FrameKind::DiskNormal,
            spectral: false,
        }
    }
}

/// `μ_CZ` and `ρ` of `P^k` with respect to the capping-disk trivialization.
pub fn orbit_index(orbit: &ClosedOrbit, k: u32) -> Result<OrbitIndex> {
    orbit_index_with(orbit, k, &IndexOptions::default())
}

/// As [`orbit_index`], computing in `opts.frame` and shifting by its class:
/// `μ(β_disk) = μ(β) + 2 wind(β, β_disk)` and `ρ(β_disk) = ρ(β) + wind(β, β_disk)`.
pub fn orbit_index_with(orbit: &ClosedOrbit, k: u32, opts: &IndexOptions) -> Result<OrbitIndex> {
    if k == 0 {
        return Err(Error::Precondition("iterate must be positive".into()));
    }
    if orbit.label.is_none() && opts.frame == FrameKind::DiskNormal {
        return Err(Error::Unsupported(
            "disk framing is only available for the principal circles".into(),
        ));
    }
    let frame = TransverseFrame::build(orbit, k, opts.frame)?;
    let offset = frame.class.wind_against(&FrameClass::reference());
    let path = linearized_path(orbit, k, &frame)?;
    let g = cz_geometric(&path)?;
    let rho = rotation_number(&path, 4096)?;
    let mu_spectral = if opts.spectral {
        Some(cz_spectral(&path.generator()?)?.mu + 2 * offset)
    } else {
        None
    };
    Ok(OrbitIndex {
        iterate: k,
        period: k as f64 * orbit.prime_period,
        mu: g.mu + 2 * offset,
        rho: rho.value + offset as f64,
        degenerate: g.degenerate || orbit.is_degenerate(k),
        mu_spectral,
        frame_offset: offset,
    })
}
