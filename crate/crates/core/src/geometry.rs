//! The unit sphere `S^3 ⊂ C^2`, the Liouville form, toric contact forms and the `Z_p` deck group.
//!
//! Coordinates are `(x1, y1, x2, y2)` with `z = x1 + i y1`, `w = x2 + i y2`. The
//! Liouville form is `λ0 = ½(x1 dy1 − y1 dx1 + x2 dy2 − y2 dx2)`, which is the
//! complex expression `(1/4i)(z̄dz − zdz̄ + w̄dw − wdw̄)` written out in real terms.
//!
//! Every supported contact form is `λ = λ0 / H` with the quadratic weight
//! `H = ½(ωz|z|² + ωw|w|²)`. This is the pullback of `λ0` from the ellipsoid
//! `{H = 1}` under radial projection, so the Reeb flow rotates the two complex
//! planes at the constant rates `ωz` and `ωw`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};

const SPHERE_TOL: f64 = 1e-12;
const TANGENT_TOL: f64 = 1e-10;

/// A point of `S^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Point4([f64; 4]);

impl Point4 {
    pub fn new(c: [f64; 4]) -> Result<Self> {
        let n2: f64 = c.iter().map(|x| x * x).sum();
        if (n2 - 1.0).abs() > SPHERE_TOL || !n2.is_finite() {
            return Err(Error::Precondition(format!(
                "point {c:?} is not on S^3 (|p|^2 = {n2})"
            )));
        }
        Ok(Self(c))
    }

    /// Radial projection of a nonzero vector onto the sphere.
    pub fn normalized(c: [f64; 4]) -> Result<Self> {
        let n = norm4(&c);
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::Precondition("cannot normalize the zero vector".into()));
        }
        Ok(Self(c.map(|x| x / n)))
    }

    /// `(z, w) = (r1 e^{iθ1}, r2 e^{iθ2})`, normalized.
    pub fn from_polar(r1: f64, t1: f64, r2: f64, t2: f64) -> Result<Self> {
        Self::normalized([r1 * t1.cos(), r1 * t1.sin(), r2 * t2.cos(), r2 * t2.sin()])
    }

    pub fn coords(&self) -> [f64; 4] {
        self.0
    }

    pub fn z(&self) -> (f64, f64) {
        (self.0[0], self.0[1])
    }

    pub fn w(&self) -> (f64, f64) {
        (self.0[2], self.0[3])
    }

    pub fn z_abs2(&self) -> f64 {
        self.0[0] * self.0[0] + self.0[1] * self.0[1]
    }

    pub fn w_abs2(&self) -> f64 {
        self.0[2] * self.0[2] + self.0[3] * self.0[3]
    }

    pub fn distance(&self, other: &Point4) -> f64 {
        norm4(&sub4(&self.0, &other.0))
    }
}

impl TryFrom<[f64; 4]> for Point4 {
    type Error = Error;
    fn try_from(c: [f64; 4]) -> Result<Self> {
        // serialized points carry 12 significant digits; reproject after parsing
        let n2: f64 = c.iter().map(|x| x * x).sum();
        if (n2 - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!("point {c:?} is not on S^3")));
        }
        Point4::normalized(c)
    }
}

impl From<Point4> for [f64; 4] {
    fn from(p: Point4) -> Self {
        p.0
    }
}

/// A tangent vector to `S^3` at `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent4 {
    pub base: Point4,
    pub v: [f64; 4],
}

impl Tangent4 {
    pub fn new(base: Point4, v: [f64; 4]) -> Result<Self> {
        check_tangent(&base, &v)?;
        Ok(Self { base, v })
    }
}

fn check_tangent(base: &Point4, v: &[f64; 4]) -> Result<()> {
    let ip = dot4(&base.0, v);
    if ip.abs() > TANGENT_TOL * norm4(v).max(1.0) {
        return Err(Error::NotTangent(ip));
    }
    Ok(())
}

/// `L(p,q)` parameters: `p ≥ 1`, `1 ≤ q ≤ p`, `gcd(p,q) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LensRepr")]
pub struct LensParams {
    p: u32,
    q: u32,
}

#[derive(Deserialize)]
struct LensRepr {
    p: u32,
    q: u32,
}

impl TryFrom<LensRepr> for LensParams {
    type Error = Error;
    fn try_from(r: LensRepr) -> Result<Self> {
        LensParams::new(r.p, r.q)
    }
}

impl LensParams {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p == 0 || q == 0 || q > p || gcd(p as u64, q as u64) != 1 {
            return Err(Error::Precondition(format!(
                "invalid lens parameters (p, q) = ({p}, {q})"
            )));
        }
        Ok(Self { p, q })
    }

    /// `L(1,1) = S^3`.
    pub fn sphere() -> Self {
        Self { p: 1, q: 1 }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// The inverse of `q` in `Z_p` (`0` when `p = 1`).
    pub fn q_inverse(&self) -> u32 {
        let p = self.p as i64;
        if p == 1 {
            return 0;
        }
        mod_inverse(self.q as i64, p).expect("q is a unit mod p") as u32
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    let (mut r0, mut r1) = (a.rem_euclid(m), m);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `λ0` itself: Hopf flow with period `π`.
    Round,
    /// Ellipsoid form: the `z`-circle has period `a`, the `w`-circle period `b`.
    Ellipsoid { a: f64, b: f64 },
}

/// A contact form on `S^3`, optionally taken modulo the `Z_p` action of `L(p,q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct ContactSystem {
    family: Family,
    lens: Option<LensParams>,
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lens: Option<LensParams>,
}

impl TryFrom<SystemRepr> for ContactSystem {
    type Error = Error;
    fn try_from(r: SystemRepr) -> Result<Self> {
        let family = match r.family.as_str() {
            "round" => Family::Round,
            "ellipsoid" => match (r.a, r.b) {
                (Some(a), Some(b)) => Family::Ellipsoid { a, b },
                _ => {
                    return Err(Error::Precondition(
                        "ellipsoid family requires both a and b".into(),
                    ))
                }
            },
            other => return Err(Error::Precondition(format!("unknown family '{other}'"))),
        };
        ContactSystem::new(family, r.lens)
    }
}

impl From<ContactSystem> for SystemRepr {
    fn from(s: ContactSystem) -> Self {
        let (family, a, b) = match s.family {
            Family::Round => ("round".to_string(), None, None),
            Family::Ellipsoid { a, b } => ("ellipsoid".to_string(), Some(a), Some(b)),
        };
        SystemRepr {
            family,
            a,
            b,
            lens: s.lens,
        }
    }
}

impl ContactSystem {
    pub fn new(family: Family, lens: Option<LensParams>) -> Result<Self> {
        if let Family::Ellipsoid { a, b } = family {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(Error::Precondition(format!(
                    "ellipsoid parameters must be positive, got a = {a}, b = {b}"
                )));
            }
        }
        Ok(Self { family, lens })
    }

    pub fn round() -> Self {
        Self {
            family: Family::Round,
            lens: None,
        }
    }

    pub fn ellipsoid(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Ellipsoid { a, b }, None)
    }

    pub fn with_lens(mut self, lens: LensParams) -> Self {
        self.lens = Some(lens);
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn lens(&self) -> Option<LensParams> {
        self.lens
    }

    /// Lens parameters, with `S^3` reported as `L(1,1)`.
    pub fn lens_or_sphere(&self) -> LensParams {
        self.lens.unwrap_or_else(LensParams::sphere)
    }

    /// Angular velocities of the Reeb flow in the `z`- and `w`-planes.
    pub fn rates(&self) -> (f64, f64) {
        match self.family {
            Family::Round => (2.0, 2.0),
            Family::Ellipsoid { a, b } => (TAU / a, TAU / b),
        }
    }

    /// Prime periods of the two principal circles on the lift `S^3`.
    pub fn principal_periods(&self) -> (f64, f64) {
        let (wz, ww) = self.rates();
        (TAU / wz, TAU / ww)
    }

    fn weight_h(&self, c: &[f64; 4]) -> f64 {
        let (wz, ww) = self.rates();
        0.5 * (wz * (c[0] * c[0] + c[1] * c[1]) + ww * (c[2] * c[2] + c[3] * c[3]))
    }

    fn weight_h_grad(&self, c: &[f64; 4]) -> [f64; 4] {
        let (wz, ww) = self.rates();
        [wz * c[0], wz * c[1], ww * c[2], ww * c[3]]
    }

    /// `λ = λ0 / H` at `pt` applied to `v`. No tangency check.
    pub fn lambda(&self, pt: &Point4, v: &[f64; 4]) -> f64 {
        lambda0_raw(&pt.0, v) / self.weight_h(&pt.0)
    }

    /// `dλ(u, v)` at `pt`.
    pub fn dlambda(&self, pt: &Point4, u: &[f64; 4], v: &[f64; 4]) -> f64 {
        let c = &pt.0;
        let h = self.weight_h(c);
        let gh = self.weight_h_grad(c);
        // d(1/H) = -dH / H^2
        let dg_u = -dot4(&gh, u) / (h * h);
        let dg_v = -dot4(&gh, v) / (h * h);
        omega0(u, v) / h + dg_u * lambda0_raw(c, v) - dg_v * lambda0_raw(c, u)
    }

    /// Reeb vector field in closed form: `(iωz z, iωw w)`.
    pub fn reeb_closed_form(&self, pt: &Point4) -> [f64; 4] {
        let (wz, ww) = self.rates();
        let c = &pt.0;
        [-wz * c[1], wz * c[0], -ww * c[3], ww * c[2]]
    }

    /// Projection of `v` onto the contact plane along the Reeb direction.
    pub fn project_to_xi(&self, pt: &Point4, v: &[f64; 4]) -> [f64; 4] {
        let r = self.reeb_closed_form(pt);
        let l = self.lambda(pt, v);
        [v[0] - l * r[0], v[1] - l * r[1], v[2] - l * r[2], v[3] - l * r[3]]
    }
}

/// The standard orthonormal frame `{iP, W, iW}` of `T_P S^3`, with `W = (−w̄, z̄)`.
pub fn sphere_frame(pt: &Point4) -> [[f64; 4]; 3] {
    let [x1, y1, x2, y2] = pt.0;
    [[-y1, x1, -y2, x2], [-x2, y2, x1, -y1], [-y2, -x2, y1, x1]]
}

/// `W(z,w) = (−w̄, z̄)`, a global non-vanishing section of `ξ_std`.
pub fn global_xi_section(pt: &Point4) -> [f64; 4] {
    sphere_frame(pt)[1]
}

/// Multiplication by `i` on `C^2`.
pub fn mul_i(v: &[f64; 4]) -> [f64; 4] {
    [-v[1], v[0], -v[3], v[2]]
}

pub(crate) fn lambda0_raw(c: &[f64; 4], v: &[f64; 4]) -> f64 {
    0.5 * (c[0] * v[1] - c[1] * v[0] + c[2] * v[3] - c[3] * v[2])
}

pub(crate) fn omega0(u: &[f64; 4], v: &[f64; 4]) -> f64 {
    u[0] * v[1] - u[1] * v[0] + u[2] * v[3] - u[3] * v[2]
}

pub(crate) fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub(crate) fn norm4(a: &[f64; 4]) -> f64 {
    dot4(a, a).sqrt()
}

pub(crate) fn sub4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub(crate) fn axpy4(alpha: f64, x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    [
        alpha * x[0] + y[0],
        alpha * x[1] + y[1],
        alpha * x[2] + y[2],
        alpha * x[3] + y[3],
    ]
}

pub(crate) fn scale4(alpha: f64, x: &[f64; 4]) -> [f64; 4] {
    x.map(|c| alpha * c)
}

/// The Liouville form `λ0` at `pt` evaluated on a tangent vector `v`.
pub fn lambda0_eval(pt: &Point4, v: &[f64; 4]) -> Result<f64> {
    check_tangent(pt, v)?;
    Ok(lambda0_raw(&pt.0, v))
}

/// Solve `i_R dλ = 0`, `λ(R) = 1` on `T_P S^3`.
///
/// In the frame `{e1, e2, e3}` the restriction of `dλ` is an antisymmetric 3×3
/// matrix `Ω`; its kernel is spanned by the axial vector `(Ω23, Ω31, Ω12)`,
/// which is then normalized by `λ`.
pub fn reeb_vector(sys: &ContactSystem, pt: &Point4) -> Result<Tangent4> {
    let e = sphere_frame(pt);
    let om = |i: usize, j: usize| sys.dlambda(pt, &e[i], &e[j]);
    let k = [om(1, 2), om(2, 0), om(0, 1)];
    let mut r = [0.0; 4];
    for (ki, ei) in k.iter().zip(&e) {
        r = axpy4(*ki, ei, &r);
    }
    let kn = norm4(&r);
    if kn < 1e-14 {
        return Err(Error::Singular(format!("dλ vanishes on T_P S^3 at {:?}", pt.0)));
    }
    let l = sys.lambda(pt, &r);
    if l.abs() < 1e-14 * kn {
        return Err(Error::Singular("kernel of dλ lies in ker λ".into()));
    }
    Ok(Tangent4 {
        base: *pt,
        v: scale4(1.0 / l, &r),
    })
}

/// Reeb field evaluated at the radial projection of an arbitrary nonzero vector.
pub(crate) fn reeb_at(sys: &ContactSystem, c: &[f64; 4]) -> Result<[f64; 4]> {
    let p = Point4::normalized(*c)?;
    Ok(reeb_vector(sys, &p)?.v)
}

/// Reeb flow `φ_t(pt)` in closed form (toric rotation). Deck-group independent.
pub fn flow(sys: &ContactSystem, pt: &Point4, t: f64, tol: f64) -> Result<Point4> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(flow_closed_form(sys, pt, t))
}

pub(crate) fn flow_closed_form(sys: &ContactSystem, pt: &Point4, t: f64) -> Point4 {
    let (wz, ww) = sys.rates();
    let [x1, y1, x2, y2] = pt.0;
    let (sz, cz) = (wz * t).sin_cos();
    let (sw, cw) = (ww * t).sin_cos();
    Point4([
        cz * x1 - sz * y1,
        sz * x1 + cz * y1,
        cw * x2 - sw * y2,
        sw * x2 + cw * y2,
    ])
}

pub(crate) fn project_sphere(y: &mut [f64]) {
    let n = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]).sqrt();
    for c in y.iter_mut().take(4) {
        *c /= n;
    }
}

/// Reeb flow by adaptive integration of the solved Reeb field, projecting back to
/// `S^3` after every step. `tol` is the per-step relative and absolute tolerance.
pub fn flow_numeric(sys: &ContactSystem, pt: &Point4, t: f64, tol: f64) -> Result<Point4> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if t == 0.0 {
        return Ok(*pt);
    }
    let y = ode::integrate(
        |_t, y, dy| {
            let r = reeb_at(sys, &[y[0], y[1], y[2], y[3]])?;
            dy.copy_from_slice(&r);
            Ok(())
        },
        0.0,
        &pt.0,
        t,
        OdeOptions::with_tol(tol),
        project_sphere,
    )?;
    Point4::normalized([y[0], y[1], y[2], y[3]])
}

/// Generator power `k` of the `Z_p` action: `(e^{2πik/p} z, e^{2πikq/p} w)`.
pub fn deck_action(lens: &LensParams, k: i64, pt: &Point4) -> Point4 {
    let p = lens.p as i64;
    let k = k.rem_euclid(p);
    let q = lens.q as i64;
    let az = TAU * k as f64 / p as f64;
    let aw = TAU * ((k * q).rem_euclid(p)) as f64 / p as f64;
    let [x1, y1, x2, y2] = pt.0;
    let (sz, cz) = az.sin_cos();
    let (sw, cw) = aw.sin_cos();
    Point4([
        cz * x1 - sz * y1,
        sz * x1 + cz * y1,
        cw * x2 - sw * y2,
        sw * x2 + cw * y2,
    ])
}

/// The deck power mapping `pt1` to `pt2` within `tol`, if any.
pub fn deck_power_between(lens: &LensParams, pt1: &Point4, pt2: &Point4, tol: f64) -> Option<i64> {
    (0..lens.p as i64).find(|&k| deck_action(lens, k, pt1).distance(pt2) <= tol)
}

/// Whether `pt1` and `pt2` project to the same point of `L(p,q)`.
pub fn lens_equivalent(lens: &LensParams, pt1: &Point4, pt2: &Point4, tol: f64) -> bool {
    deck_power_between(lens, pt1, pt2, tol).is_some()
}

/// `arg` of a complex number given as a pair, in `(−π, π]`.
pub(crate) fn arg(c: (f64, f64)) -> f64 {
    c.1.atan2(c.0)
}

/// Wrap an angle increment into `(−π, π]`.
pub(crate) fn wrap_pi(mut a: f64) -> f64 {
    while a > PI {
        a -= TAU;
    }
    while a <= -PI {
        a += TAU;
    }
    a
}
