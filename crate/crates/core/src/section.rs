//! Disk-like pages of the rational open book bounded by a principal circle,
//! their return maps, and a numerical verifier for the conditions under which
//! the binding bounds a disk-like global surface of section of order `p`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{arg, project_sphere, reeb_at, wrap_pi, ContactSystem, LensParams, Point4};
use crate::knots::{binding_sl_numeric, lens_binding_monodromy, Binding, PDisk};
use crate::ode::{self, OdeOptions};
use crate::orbits::{catalog, orbit_index, ClosedOrbit, OrbitLabel};

/// Per side of the transversality sample grid (`100² = 10⁴` points).
const TRANSVERSALITY_GRID: usize = 100;
/// Time resolution of crossing detection.
const BISECTION_TOL: f64 = 1e-10;
/// Phase defect allowed for a point to count as lying on a page.
const ON_PAGE_TOL: f64 = 1e-8;
/// Return-time budget in units of the longest principal period.
const BUDGET_FACTOR: f64 = 100.0;
const ODE_TOL: f64 = 1e-12;
/// Crossing speeds below this are treated as tangential.
const TANGENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

fn binding_coord(b: Binding, c: &[f64; 4]) -> (f64, f64) {
    match b {
        Binding::ZCircle => (c[0], c[1]),
        Binding::WCircle => (c[2], c[3]),
    }
}

fn other_coord(b: Binding, c: &[f64; 4]) -> (f64, f64) {
    match b {
        Binding::ZCircle => (c[2], c[3]),
        Binding::WCircle => (c[0], c[1]),
    }
}

/// Rotates the coordinate transverse to the binding by `angle`.
fn rotate_other(b: Binding, c: &[f64; 4], angle: f64) -> [f64; 4] {
    let (s, co) = angle.sin_cos();
    let rot = |x: f64, y: f64| (co * x - s * y, s * x + co * y);
    match b {
        Binding::ZCircle => {
            let (x, y) = rot(c[2], c[3]);
            [c[0], c[1], x, y]
        }
        Binding::WCircle => {
            let (x, y) = rot(c[0], c[1]);
            [x, y, c[2], c[3]]
        }
    }
}

/// A page `{arg o = phase (mod 2π/p)}` of the open book, where `o` is the coordinate
/// transverse to the binding. It is the image of the p-disk rotated to the given phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub system: ContactSystem,
    pub disk: PDisk,
    pub phase: f64,
    /// Sign of the Reeb field's crossing speed through the page.
    pub orientation: i8,
    /// Smallest `|d(arg o)(R)|` over the transversality sample.
    pub min_transverse_speed: f64,
}

/// The page bounded by the `z`-circle at the given phase of `arg w`.
pub fn build_page(sys: &ContactSystem, phase: f64) -> Result<Page> {
    build_page_for(sys, Binding::ZCircle, phase)
}

/// The page bounded by either principal circle.
pub fn build_page_for(sys: &ContactSystem, binding: Binding, phase: f64) -> Result<Page> {
    if !phase.is_finite() {
        return Err(Error::Precondition("page phase must be finite".into()));
    }
    let disk = PDisk::new(sys.lens_or_sphere(), binding);
    disk.validate(256)?;
    let mut page = Page {
        system: *sys,
        disk,
        phase,
        orientation: 1,
        min_transverse_speed: 0.0,
    };
    let mut min = f64::INFINITY;
    let mut signs = (false, false);
    for i in 0..TRANSVERSALITY_GRID {
        let r = (i as f64 + 0.5) / TRANSVERSALITY_GRID as f64;
        for j in 0..TRANSVERSALITY_GRID {
            let theta = TAU * j as f64 / TRANSVERSALITY_GRID as f64;
            let s = page.phase_speed(&page.lift(r, theta)?)?;
            min = min.min(s.abs());
            if s > 0.0 {
                signs.0 = true;
            } else {
                signs.1 = true;
            }
        }
    }
    if !(min > 0.0) || (signs.0 && signs.1) {
        return Err(Error::Inconsistent(format!(
            "Reeb field not transverse to the page interior (min speed {min:e})"
        )));
    }
    page.orientation = if signs.0 { 1 } else { -1 };
    page.min_transverse_speed = min;
    Ok(page)
}

impl Page {
    pub fn lens(&self) -> LensParams {
        self.system.lens_or_sphere()
    }

    pub fn binding(&self) -> Binding {
        self.disk.binding
    }

    /// Angular spacing `2π/p` between consecutive sheets of the page on `S^3`.
    pub fn sheet_spacing(&self) -> f64 {
        TAU / self.lens().p() as f64
    }

    /// The binding as a prime closed orbit.
    pub fn binding_orbit(&self) -> Result<ClosedOrbit> {
        let label = match self.binding() {
            Binding::ZCircle => OrbitLabel::K,
            Binding::WCircle => OrbitLabel::KPrime,
        };
        ClosedOrbit::principal(self.system, label, 1)
    }

    /// The lifted point of the page with coordinates `(r, θ)`.
    pub fn lift(&self, r: f64, theta: f64) -> Result<Point4> {
        let x = self.disk.lift(r, theta)?;
        Point4::normalized(rotate_other(self.binding(), &x.coords(), self.phase))
    }

    /// `∂_r` and `∂_θ` of [`Page::lift`].
    pub fn derivatives(&self, r: f64, theta: f64) -> Result<([f64; 4], [f64; 4])> {
        let (dr, dt) = self.disk.derivatives(r, theta)?;
        let b = self.binding();
        Ok((rotate_other(b, &dr, self.phase), rotate_other(b, &dt, self.phase)))
    }

    /// The page point with Cartesian coordinates `r e^{iθ}`.
    pub fn cartesian_lift(&self, u: [f64; 2]) -> Result<Point4> {
        let r = u[0].hypot(u[1]);
        if r >= 1.0 {
            return Err(Error::Precondition(format!("point {u:?} outside the open page")));
        }
        self.lift(r, u[1].atan2(u[0]))
    }

    /// `d(arg o)(R)` at `x`: the speed at which the Reeb field crosses the sheets.
    pub fn phase_speed(&self, x: &Point4) -> Result<f64> {
        let c = x.coords();
        let r = reeb_at(&self.system, &c)?;
        let o = other_coord(self.binding(), &c);
        let ro = other_coord(self.binding(), &r);
        let n = o.0 * o.0 + o.1 * o.1;
        if !(n > 0.0) {
            return Err(Error::Precondition("point lies on the binding".into()));
        }
        Ok((o.0 * ro.1 - o.1 * ro.0) / n)
    }

    fn phase_of(&self, c: &[f64; 4]) -> f64 {
        arg(other_coord(self.binding(), c))
    }

    /// Page coordinates `(r, θ)` of a lifted point lying on some sheet of the page.
    pub fn coordinates(&self, x: &Point4) -> Result<(f64, f64)> {
        let c = x.coords();
        let o = other_coord(self.binding(), &c);
        if !(o.0.hypot(o.1) > 1e-14) {
            return Err(Error::Precondition("point lies on the binding".into()));
        }
        let delta = self.sheet_spacing();
        let g = wrap_pi(self.phase_of(&c) - self.phase);
        let m = (g / delta).round();
        let defect = (g - m * delta).abs();
        if defect > ON_PAGE_TOL {
            return Err(Error::Precondition(format!(
                "point is off the page by phase {defect:e}"
            )));
        }
        // rotate the transverse phase back onto the reference sheet
        let lens = self.lens();
        let p = lens.p() as i64;
        let m = (m as i64).rem_euclid(p);
        let step = match self.binding() {
            Binding::ZCircle => lens.q() as i64,
            Binding::WCircle => 1,
        };
        let k = (0..p)
            .find(|k| (k * step + m).rem_euclid(p) == 0)
            .ok_or_else(|| Error::Inconsistent("no deck element reaches the sheet".into()))?;
        let y = crate::geometry::deck_action(&lens, k, x).coords();
        let b = binding_coord(self.binding(), &y);
        let r = invert_profile(&self.disk, b.0.hypot(b.1));
        Ok((r, arg(b)))
    }

    /// Cartesian page coordinates `r e^{iθ}` of a lifted point on the page.
    pub fn cartesian_coordinates(&self, x: &Point4) -> Result<[f64; 2]> {
        let (r, t) = self.coordinates(x)?;
        Ok([r * t.cos(), r * t.sin()])
    }

    fn budget(&self) -> f64 {
        let (ta, tb) = self.system.principal_periods();
        BUDGET_FACTOR * ta.max(tb)
    }

    fn chunk(&self) -> f64 {
        let (wz, ww) = self.system.rates();
        self.sheet_spacing() / (4.0 * wz.abs().max(ww.abs()))
    }
}

fn invert_profile(disk: &PDisk, f: f64) -> f64 {
    let f = f.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if disk.profile(mid).0 < f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn flow_by(sys: &ContactSystem, y: &[f64; 4], dt: f64, sign: f64) -> Result<[f64; 4]> {
    if dt == 0.0 {
        return Ok(*y);
    }
    let out = ode::integrate(
        |_t, s, ds| {
            let r = reeb_at(sys, &[s[0], s[1], s[2], s[3]])?;
            for (d, v) in ds.iter_mut().zip(r) {
                *d = sign * v;
            }
            Ok(())
        },
        0.0,
        y,
        dt,
        OdeOptions {
            h_init: dt / 4.0,
            ..OdeOptions::with_tol(ODE_TOL)
        },
        project_sphere,
    )?;
    Ok([out[0], out[1], out[2], out[3]])
}

/// First return of the trajectory through `x0` (on the page) to the page, in time
/// `|t|`. Crossings are sign changes of the unwrapped transverse phase against the
/// sheet levels, refined by bisection to `tol`.
fn first_return(page: &Page, x0: &Point4, dir: Direction, tol: f64) -> Result<(f64, Point4)> {
    let sys = &page.system;
    let sign = dir.sign();
    let delta = page.sheet_spacing();
    let dt = page.chunk();
    let budget = page.budget();
    let speed0 = sign * page.phase_speed(x0)?;
    if speed0.abs() < TANGENCY_TOL {
        return Err(Error::Degenerate("trajectory starts tangent to the page".into()));
    }
    let cell: i64 = if speed0 > 0.0 { 0 } else { -1 };
    let mut t = 0.0;
    let mut y = x0.coords();
    let mut g = 0.0;
    while t < budget {
        let y1 = flow_by(sys, &y, dt, sign)?;
        let g1 = g + wrap_pi(page.phase_of(&y1) - page.phase_of(&y));
        let cell1 = (g1 / delta).floor() as i64;
        if cell1 != cell {
            let level = if cell1 > cell {
                delta * (cell + 1) as f64
            } else {
                delta * cell as f64
            };
            let side = (g - level).signum();
            let (mut lo, mut hi) = (0.0, dt);
            let (mut y_lo, mut g_lo) = (y, g);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let ym = flow_by(sys, &y_lo, mid - lo, sign)?;
                let gm = g_lo + wrap_pi(page.phase_of(&ym) - page.phase_of(&y_lo));
                if (gm - level).signum() == side {
                    lo = mid;
                    y_lo = ym;
                    g_lo = gm;
                } else {
                    hi = mid;
                }
            }
            let end = Point4::normalized(flow_by(sys, &y_lo, hi - lo, sign)?)?;
            let o = other_coord(page.binding(), &end.coords());
            if !(o.0.hypot(o.1) > 1e-12) {
                return Err(Error::ReturnFailure("trajectory ran into the binding".into()));
            }
            let speed = page.phase_speed(&end)?;
            if speed.abs() < TANGENCY_TOL {
                return Err(Error::Degenerate(format!(
                    "tangential crossing at t = {}",
                    t + hi
                )));
            }
            return Ok((t + hi, end));
        }
        t += dt;
        y = y1;
        g = g1;
    }
    Err(Error::ReturnFailure(format!(
        "no {dir:?} return within time budget {budget}"
    )))
}

/// One evaluation of the return map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnRecord {
    /// `(r, θ)` of the start.
    pub start: (f64, f64),
    pub return_time: f64,
    /// `(r, θ)` of the landing point.
    pub image: (f64, f64),
    pub direction: Direction,
    /// The landing point on the lift, on the sheet the trajectory actually reached.
    pub endpoint: Point4,
}

/// Return map from the interior point `(r, θ)` of the page.
pub fn return_map(page: &Page, start: (f64, f64), direction: Direction, tol: f64) -> Result<ReturnRecord> {
    let (r, theta) = start;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Precondition(format!("start radius {r} not in (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let x0 = page.lift(r, theta)?;
    let (return_time, endpoint) = first_return(page, &x0, direction, tol)?;
    Ok(ReturnRecord {
        start,
        return_time,
        image: page.coordinates(&endpoint)?,
        direction,
        endpoint,
    })
}

/// A fixed point of the forward return map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    /// Cartesian page coordinates `r e^{iθ}`.
    pub point: [f64; 2],
    pub displacement: f64,
    pub return_time: f64,
    pub iterations: usize,
}

const NEWTON_MAX_ITERS: usize = 40;
const NEWTON_FD_STEP: f64 = 1e-6;

/// Damped Newton iteration on the displacement field `F(u) − u` in Cartesian page
/// coordinates, with a finite-difference Jacobian.
pub fn fixed_point(page: &Page, tol: f64) -> Result<FixedPoint> {
    fixed_point_from(page, [0.3, 0.1], tol)
}

pub fn fixed_point_from(page: &Page, guess: [f64; 2], tol: f64) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let map = |u: [f64; 2]| -> Result<([f64; 2], f64)> {
        let x0 = page.cartesian_lift(u)?;
        let (t, end) = first_return(page, &x0, Direction::Forward, BISECTION_TOL)?;
        let v = page.cartesian_coordinates(&end)?;
        Ok(([v[0] - u[0], v[1] - u[1]], t))
    };
    let norm = |d: [f64; 2]| d[0].hypot(d[1]);
    let mut u = guess;
    let (mut d, mut t) = map(u)?;
    let mut trace = vec![norm(d)];
    for it in 0..NEWTON_MAX_ITERS {
        if norm(d) < tol {
            return Ok(FixedPoint {
                point: u,
                displacement: norm(d),
                return_time: t,
                iterations: it,
            });
        }
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let mut up = u;
            up[j] += NEWTON_FD_STEP;
            let (dp, _) = map(up)?;
            for i in 0..2 {
                jac[i][j] = (dp[i] - d[i]) / NEWTON_FD_STEP;
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 1e-12) {
            return Err(Error::NoConvergence(format!(
                "singular displacement Jacobian; displacement norms {}",
                fmt_trace(&trace)
            )));
        }
        let step = [
            -(jac[1][1] * d[0] - jac[0][1] * d[1]) / det,
            -(-jac[1][0] * d[0] + jac[0][0] * d[1]) / det,
        ];
        let mut damping = 1.0;
        loop {
            let cand = [u[0] + damping * step[0], u[1] + damping * step[1]];
            if norm(cand) < 0.99 {
                let (dc, tc) = map(cand)?;
                if norm(dc) < norm(d) {
                    u = cand;
                    d = dc;
                    t = tc;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-6 {
                return Err(Error::NoConvergence(format!(
                    "line search failed; displacement norms {}",
                    fmt_trace(&trace)
                )));
            }
        }
        trace.push(norm(d));
    }
    Err(Error::NoConvergence(format!(
        "displacement norms {}",
        fmt_trace(&trace)
    )))
}

fn fmt_trace(trace: &[f64]) -> String {
    let parts: Vec<String> = trace.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Signed number of sheet crossings of `orbit` through the page over its period,
/// which is its linking number with the binding.
pub fn linking_with_binding(orbit: &ClosedOrbit, page: &Page) -> Result<i64> {
    if orbit.system != page.system {
        return Err(Error::Precondition(
            "orbit and page belong to different systems".into(),
        ));
    }
    let c0 = orbit.anchor.coords();
    let o = other_coord(page.binding(), &c0);
    if !(o.0.hypot(o.1) > 1e-9) {
        return Err(Error::Precondition("orbit meets the binding".into()));
    }
    let delta = page.sheet_spacing();
    let period = orbit.period();
    let steps = (period / page.chunk()).ceil().max(1.0) as usize;
    let dt = period / steps as f64;
    // snap so that a start or end lying exactly on a sheet counts consistently
    let cell = |g: f64| (g / delta + 1e-7).floor() as i64;
    let mut y = c0;
    let mut g = wrap_pi(page.phase_of(&c0) - page.phase);
    let mut c = cell(g);
    let mut count = 0;
    for _ in 0..steps {
        let y1 = flow_by(&page.system, &y, dt, 1.0)?;
        let g1 = g + wrap_pi(page.phase_of(&y1) - page.phase_of(&y));
        let c1 = cell(g1);
        if c1 != c {
            let s = page.phase_speed(&Point4::normalized(y1)?)?;
            if s.abs() < TANGENCY_TOL {
                return Err(Error::Degenerate("orbit crosses the page tangentially".into()));
            }
            count += c1 - c;
        }
        y = y1;
        g = g1;
        c = c1;
    }
    Ok(count)
}

/// `∫ u*dλ` over the page and related quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskIntegral {
    pub signed: f64,
    pub absolute: f64,
    /// Extremes of the density `dλ(∂_r, ∂_θ)` over interior quadrature nodes.
    pub min_density: f64,
    pub max_density: f64,
    /// `∮ λ` over the boundary, which equals `signed` by Stokes.
    pub boundary_action: f64,
    /// Radial subintervals per panel at the accepted resolution.
    pub resolution: usize,
}

const DISK_START_RES: usize = 16;
const DISK_MAX_RES: usize = 1024;
const DISK_REL_TOL: f64 = 1e-6;

fn simpson_nodes(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = (b - a) / n as f64;
    (0..=n).map(move |i| {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        (a + i as f64 * h, w * h / 3.0)
    })
}

fn disk_quadrature(page: &Page, n: usize) -> Result<DiskIntegral> {
    let d = &page.disk;
    let panels = [
        (0.0, d.blend_start),
        (d.blend_start, d.blend_end),
        (d.blend_end, 1.0),
    ];
    let m = n;
    let (mut signed, mut absolute) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, b) in panels {
        for (r, wr) in simpson_nodes(a, b, n) {
            for j in 0..m {
                let theta = TAU * j as f64 / m as f64;
                let x = page.lift(r, theta)?;
                let (dr, dt) = page.derivatives(r, theta)?;
                let dens = page.system.dlambda(&x, &dr, &dt);
                let w = wr * TAU / m as f64;
                signed += w * dens;
                absolute += w * dens.abs();
                if r > 0.0 && r < 1.0 {
                    lo = lo.min(dens);
                    hi = hi.max(dens);
                }
            }
        }
    }
    let mut boundary = 0.0;
    for j in 0..m {
        let theta = TAU * j as f64 / m as f64;
        let x = page.lift(1.0, theta)?;
        let (_, dt) = page.derivatives(1.0, theta)?;
        boundary += page.system.lambda(&x, &dt) * TAU / m as f64;
    }
    Ok(DiskIntegral {
        signed,
        absolute,
        min_density: lo,
        max_density: hi,
        boundary_action: boundary,
        resolution: n,
    })
}

/// The page integral, refined until two successive resolutions agree to `1e−6` relative.
pub fn disk_integral(page: &Page) -> Result<DiskIntegral> {
    let mut n = DISK_START_RES;
    let mut prev = disk_quadrature(page, n)?;
    while n < DISK_MAX_RES {
        n *= 2;
        let cur = disk_quadrature(page, n)?;
        let rel = (cur.absolute - prev.absolute).abs() / cur.absolute.abs().max(1e-300);
        if rel < DISK_REL_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence(format!(
        "page quadrature not converged at resolution {n}"
    )))
}

/// `1 + ∫ |u*dλ|` over the page.
pub fn disk_area_bound(page: &Page) -> Result<f64> {
    Ok(1.0 + disk_integral(page)?.absolute)
}

/// `∮ λ` along a closed polygon of lifted points, by the midpoint rule on each chord.
pub fn polygon_action(sys: &ContactSystem, pts: &[Point4]) -> Result<f64> {
    let n = pts.len();
    if n < 3 {
        return Err(Error::Precondition("polygon needs at least 3 vertices".into()));
    }
    let mut total = 0.0;
    for i in 0..n {
        let a = pts[i].coords();
        let b = pts[(i + 1) % n].coords();
        let mid = Point4::normalized(std::array::from_fn(|k| 0.5 * (a[k] + b[k])))?;
        let v: [f64; 4] = std::array::from_fn(|k| b[k] - a[k]);
        total += sys.lambda(&mid, &v);
    }
    Ok(total)
}

/// An `(r, θ)` rectangle of the page.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrilateral {
    pub r: (f64, f64),
    pub theta: (f64, f64),
}

impl Quadrilateral {
    /// Boundary vertices, counterclockwise, `per_side` per edge.
    pub fn boundary(&self, per_side: usize) -> Vec<(f64, f64)> {
        let (r0, r1) = self.r;
        let (t0, t1) = self.theta;
        let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
        let mut out = Vec::with_capacity(4 * per_side);
        for i in 0..per_side {
            out.push((lerp(r0, r1, i as f64 / per_side as f64), t0));
        }
        for i in 0..per_side {
            out.push((r1, lerp(t0, t1, i as f64 / per_side as f64)));
        }
        for i in 0..per_side {
            out.push((lerp(r1, r0, i as f64 / per_side as f64), t1));
        }
        for i in 0..per_side {
            out.push((r0, lerp(t1, t0, i as f64 / per_side as f64)));
        }
        out
    }
}

/// Relative change of `dλ`-area of `quad` under the forward return map, with
/// both areas measured as `∮ λ` over the boundary polygons.
pub fn area_distortion(page: &Page, quad: &Quadrilateral, per_side: usize) -> Result<f64> {
    let starts = quad.boundary(per_side);
    let src: Vec<Point4> = starts
        .iter()
        .map(|&(r, t)| page.lift(r, t))
        .collect::<Result<_>>()?;
    let img: Vec<Point4> = starts
        .iter()
        .map(|&s| Ok(return_map(page, s, Direction::Forward, BISECTION_TOL)?.endpoint))
        .collect::<Result<_>>()?;
    let a = polygon_action(&page.system, &src)?;
    let b = polygon_action(&page.system, &img)?;
    Ok((b - a).abs() / a.abs())
}

/// Settings of [`verify_main3`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Fixed-point displacement tolerance.
    pub tol: f64,
    pub quadrilaterals: usize,
    pub quad_points_per_side: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: 1e-9,
            quadrilaterals: 20,
            quad_points_per_side: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingSection {
    pub p: u32,
    pub q: u32,
    pub prime_period: f64,
    pub monodromy: u32,
    pub self_linking: i64,
    /// `μ_CZ(K^p)` and `ρ(K^p)` in the capping-disk class.
    pub mu_p: i64,
    pub rho_p: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub label: Option<OrbitLabel>,
    pub multiplicity: u32,
    pub period: f64,
    pub contractible: bool,
    pub mu: Option<i64>,
    pub rho: Option<f64>,
    pub linking: i64,
    /// Contractible with `ρ = 1`.
    pub in_p_star: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskSection {
    pub area_bound: f64,
    pub integral: DiskIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapSection {
    pub fixed_point: [f64; 2],
    pub fixed_point_distance: f64,
    pub fixed_point_return_time: f64,
    /// Prime period of the second principal circle.
    pub expected_return_time: f64,
    pub quadrilaterals: Vec<Quadrilateral>,
    pub area_distortion: Vec<f64>,
    pub max_area_distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub start: (f64, f64),
    pub forward: Option<(f64, (f64, f64))>,
    pub backward: Option<(f64, (f64, f64))>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSection {
    /// `"ok"`, or `"skipped"` when no samples were requested.
    pub status: String,
    pub forward_returns: usize,
    pub backward_returns: usize,
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Main3Report {
    pub system: ContactSystem,
    pub action_bound: f64,
    pub seed: u64,
    pub page_phase: f64,
    pub binding: BindingSection,
    pub orbits: Vec<OrbitRecord>,
    pub disk: DiskSection,
    pub return_map: ReturnMapSection,
    pub dynamics: DynamicsSection,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Main3Report {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Random page points, uniform in `(r², θ)`.
pub fn sample_starts(seed: u64, n: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut u: f64 = rng.random();
            while u == 0.0 {
                u = rng.random();
            }
            (u.sqrt(), rng.random_range(0.0..TAU))
        })
        .collect()
}

fn sample_quadrilaterals(seed: u64, n: usize) -> Vec<Quadrilateral> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    (0..n)
        .map(|_| {
            let r0 = rng.random_range(0.15..0.8);
            let t0 = rng.random_range(0.0..TAU);
            Quadrilateral {
                r: (r0, r0 + 0.05),
                theta: (t0, t0 + 0.1),
            }
        })
        .collect()
}

fn check(checks: &mut Vec<Check>, name: &str, passed: bool, detail: String) {
    log::info!(
        "check {name}: {} ({detail})",
        if passed { "pass" } else { "FAIL" }
    );
    checks.push(Check {
        name: name.into(),
        passed,
        detail,
    });
}

/// Checks on a quotient ellipsoid system that the `z`-circle `K` bounds a disk-like
/// global surface of section of order `p`: `sl(K) = −p`, `μ_CZ(K^p) ≥ 3`, positive
/// linking of the catalogued orbits up to action `c`, positivity of `dλ` on the page,
/// forward and backward returns of `n_samples` random starts, the fixed point of the
/// return map and preservation of `dλ`-area.
///
/// Failed checks are reported in the result; errors are reserved for unsupported input.
pub fn verify_main3(
    sys: &ContactSystem,
    c: f64,
    n_samples: usize,
    opts: &VerifyOptions,
) -> Result<Main3Report> {
    let lens = sys.lens_or_sphere();
    let p = lens.p();
    let orbits = catalog(sys, c)?;
    let page = build_page(sys, 0.0)?;
    let mut checks = Vec::new();

    check(
        &mut checks,
        "p_disk",
        true,
        format!(
            "page transverse to the Reeb field, min crossing speed {:.6e}",
            page.min_transverse_speed
        ),
    );

    let k = page.binding_orbit()?;
    let sl = binding_sl_numeric(&page.disk)?;
    check(
        &mut checks,
        "self_linking",
        sl == -(p as i64),
        format!("sl(K) = {sl}, expected {}", -(p as i64)),
    );

    let kp = orbit_index(&k, p)?;
    check(
        &mut checks,
        "binding_index",
        kp.mu >= 3 && !kp.degenerate,
        format!("mu_CZ(K^{p}) = {}, rho = {:.9}", kp.mu, kp.rho),
    );
    let binding = BindingSection {
        p,
        q: lens.q(),
        prime_period: k.prime_period,
        monodromy: lens_binding_monodromy(&lens),
        self_linking: sl,
        mu_p: kp.mu,
        rho_p: kp.rho,
        degenerate: kp.degenerate,
    };

    let off_binding: Vec<&ClosedOrbit> = orbits.iter().filter(|o| o.label != Some(OrbitLabel::K)).collect();
    let records: Vec<OrbitRecord> = off_binding
        .par_iter()
        .map(|o| -> Result<OrbitRecord> {
            let m = o.multiplicity;
            let contractible = o.is_contractible(m);
            let (mu, rho) = if contractible {
                let ix = orbit_index(o, m)?;
                (Some(ix.mu), Some(ix.rho))
            } else {
                (None, None)
            };
            Ok(OrbitRecord {
                label: o.label,
                multiplicity: m,
                period: o.period(),
                contractible,
                mu,
                rho,
                linking: linking_with_binding(o, &page)?,
                in_p_star: contractible && rho.is_some_and(|r| (r - 1.0).abs() < 1e-6),
            })
        })
        .collect::<Result<_>>()?;
    let p_star: Vec<&OrbitRecord> = records.iter().filter(|r| r.in_p_star).collect();
    check(
        &mut checks,
        "p_star",
        p_star.iter().all(|r| r.linking > 0),
        format!(
            "{} orbit(s) with rho = 1 up to action {c}; all must link positively with K",
            p_star.len()
        ),
    );
    let min_link = records.iter().map(|r| r.linking).min();
    check(
        &mut checks,
        "linking_positive",
        min_link.is_none_or(|l| l > 0),
        format!(
            "{} catalogued orbit(s) off K, minimal linking {}",
            records.len(),
            min_link.map_or("n/a".to_string(), |l| l.to_string())
        ),
    );

    let integral = disk_integral(&page)?;
    check(
        &mut checks,
        "dlambda_positive",
        integral.min_density > 0.0,
        format!("min density {:.6e} over interior nodes", integral.min_density),
    );
    let stokes = (integral.signed - integral.boundary_action).abs() / integral.boundary_action.abs();
    check(
        &mut checks,
        "stokes",
        stokes < 1e-6 && integral.signed > 0.0,
        format!(
            "page integral {:.12} vs boundary action {:.12}",
            integral.signed, integral.boundary_action
        ),
    );
    let disk = DiskSection {
        area_bound: 1.0 + integral.absolute,
        integral,
    };

    let expected_return = {
        let kk = ClosedOrbit::principal(*sys, OrbitLabel::KPrime, 1)?;
        kk.prime_period
    };
    let fp = fixed_point(&page, opts.tol);
    let quads = sample_quadrilaterals(opts.seed, opts.quadrilaterals);
    let distortion: Vec<f64> = quads
        .par_iter()
        .map(|q| area_distortion(&page, q, opts.quad_points_per_side))
        .collect::<Result<_>>()?;
    let max_distortion = distortion.iter().cloned().fold(0.0, f64::max);
    let return_map_section = match &fp {
        Ok(f) => ReturnMapSection {
            fixed_point: f.point,
            fixed_point_distance: f.point[0].hypot(f.point[1]),
            fixed_point_return_time: f.return_time,
            expected_return_time: expected_return,
            quadrilaterals: quads,
            area_distortion: distortion,
            max_area_distortion: max_distortion,
        },
        Err(_) => ReturnMapSection {
            fixed_point: [f64::NAN; 2],
            fixed_point_distance: f64::NAN,
            fixed_point_return_time: f64::NAN,
            expected_return_time: expected_return,
            quadrilaterals: quads,
            area_distortion: distortion,
            max_area_distortion: max_distortion,
        },
    };
    match &fp {
        Ok(f) => {
            let dist = f.point[0].hypot(f.point[1]);
            let dt = (f.return_time - expected_return).abs();
            check(
                &mut checks,
                "fixed_point",
                dist < 1e-6 && dt < 1e-6,
                format!(
                    "distance to page center {dist:.3e}, return time {:.12}",
                    f.return_time
                ),
            );
        }
        Err(e) => check(&mut checks, "fixed_point", false, e.to_string()),
    }
    check(
        &mut checks,
        "area_preservation",
        max_distortion < 1e-4,
        format!(
            "max relative dλ-area distortion {max_distortion:.3e} over {} quadrilaterals",
            opts.quadrilaterals
        ),
    );

    let dynamics = if n_samples == 0 {
        DynamicsSection {
            status: "skipped".into(),
            forward_returns: 0,
            backward_returns: 0,
            samples: Vec::new(),
        }
    } else {
        let starts = sample_starts(opts.seed, n_samples);
        let samples: Vec<SampleRecord> = starts
            .par_iter()
            .map(|&s| {
                let f = return_map(&page, s, Direction::Forward, BISECTION_TOL);
                let b = return_map(&page, s, Direction::Backward, BISECTION_TOL);
                let failure = [&f, &b]
                    .iter()
                    .filter_map(|r| r.as_ref().err().map(|e| e.to_string()))
                    .next();
                SampleRecord {
                    start: s,
                    forward: f.ok().map(|r| (r.return_time, r.image)),
                    backward: b.ok().map(|r| (r.return_time, r.image)),
                    failure,
                }
            })
            .collect();
        let fwd = samples.iter().filter(|s| s.forward.is_some()).count();
        let bwd = samples.iter().filter(|s| s.backward.is_some()).count();
        check(
            &mut checks,
            "gss_returns",
            fwd == n_samples && bwd == n_samples,
            format!("{fwd}/{n_samples} forward and {bwd}/{n_samples} backward returns"),
        );
        DynamicsSection {
            status: "ok".into(),
            forward_returns: fwd,
            backward_returns: bwd,
            samples,
        }
    };

    let passed = checks.iter().all(|c| c.passed);
    Ok(Main3Report {
        system: *sys,
        action_bound: c,
        seed: opts.seed,
        page_phase: page.phase,
        binding,
        orbits: records,
        disk,
        return_map: return_map_section,
        dynamics,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::deck_action;
    use std::f64::consts::{PI, SQRT_2};

    fn quotient() -> ContactSystem {
        ContactSystem::ellipsoid(1.0, SQRT_2)
            .unwrap()
            .with_lens(LensParams::new(2, 1).unwrap())
    }

    #[test]
    fn pages_build_for_supported_systems() {
        let round = ContactSystem::round().with_lens(LensParams::new(2, 1).unwrap());
        let page = build_page(&round, 0.0).unwrap();
        assert_eq!(page.orientation, 1);
        assert!((page.min_transverse_speed - 2.0).abs() < 1e-9);
        let s3 = build_page(&ContactSystem::ellipsoid(1.0, SQRT_2).unwrap(), 0.4).unwrap();
        assert_eq!(s3.lens().p(), 1);
        assert!(build_page(&round, f64::NAN).is_err());
    }

    #[test]
    fn shifted_phase_gives_deck_translate_of_page() {
        let sys = ContactSystem::ellipsoid(1.0, SQRT_2)
            .unwrap()
            .with_lens(LensParams::new(5, 2).unwrap());
        let a = build_page(&sys, 0.3).unwrap();
        let b = build_page(&sys, 0.3 + TAU / 5.0).unwrap();
        for (r, t) in [(0.2, 1.0), (0.7, -2.0), (0.95, 3.0)] {
            let x = b.lift(r, t).unwrap();
            let (ra, ta) = a.coordinates(&x).unwrap();
            let y = a.lift(ra, ta).unwrap();
            assert!(crate::geometry::lens_equivalent(
                &sys.lens_or_sphere(),
                &x,
                &y,
                1e-9
            ));
        }
    }

    #[test]
    fn center_returns_after_second_orbit_period() {
        let page = build_page(&quotient(), 0.0).unwrap();
        let rec = return_map(&page, (1e-3, 0.0), Direction::Forward, 1e-10).unwrap();
        assert!((rec.return_time - SQRT_2 / 2.0).abs() < 1e-8);
        assert!(rec.return_time > 0.0);
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let page = build_page(&quotient(), 0.0).unwrap();
        let start = (0.6, 0.9);
        let f = return_map(&page, start, Direction::Forward, 1e-10).unwrap();
        let b = return_map(&page, f.image, Direction::Backward, 1e-10).unwrap();
        assert!((b.image.0 - start.0).abs() < 1e-6);
        assert!(wrap_pi(b.image.1 - start.1).abs() < 1e-6);
    }

    #[test]
    fn round_return_time_is_constant() {
        for p in [1u32, 3] {
            let sys = ContactSystem::round().with_lens(LensParams::new(p, 1).unwrap());
            let page = build_page(&sys, 0.0).unwrap();
            for s in [(0.1, 0.0), (0.5, 2.0), (0.9, -1.0)] {
                let rec = return_map(&page, s, Direction::Forward, 1e-10).unwrap();
                assert!((rec.return_time - PI / p as f64).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn return_map_commutes_with_deck_relabeling() {
        let sys = ContactSystem::ellipsoid(1.0, 1.37)
            .unwrap()
            .with_lens(LensParams::new(3, 1).unwrap());
        let page = build_page(&sys, 0.0).unwrap();
        let rec = return_map(&page, (0.4, 0.5), Direction::Forward, 1e-10).unwrap();
        let lens = sys.lens_or_sphere();
        for k in 1..3 {
            let moved = deck_action(&lens, k, &rec.endpoint);
            let c = page.coordinates(&moved).unwrap();
            assert!((c.0 - rec.image.0).abs() < 1e-12);
            assert!(wrap_pi(c.1 - rec.image.1).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_is_page_center() {
        let page = build_page(&quotient(), 0.0).unwrap();
        let fp = fixed_point(&page, 1e-9).unwrap();
        assert!(fp.point[0].hypot(fp.point[1]) < 1e-6);
        assert!(fp.displacement < 1e-9);
        assert!((fp.return_time - SQRT_2 / 2.0).abs() < 1e-6);
    }

    #[test]
    fn linking_of_second_orbit() {
        let sys = quotient();
        let page = build_page(&sys, 0.0).unwrap();
        let kp = ClosedOrbit::principal(sys, OrbitLabel::KPrime, 1).unwrap();
        assert_eq!(linking_with_binding(&kp, &page).unwrap(), 1);
        assert_eq!(linking_with_binding(&kp.iterate(2).unwrap(), &page).unwrap(), 2);
        let k = ClosedOrbit::principal(sys, OrbitLabel::K, 1).unwrap();
        assert!(linking_with_binding(&k, &page).is_err());
    }

    #[test]
    fn disk_area_matches_boundary_action() {
        for p in [1u32, 2, 4] {
            let sys = ContactSystem::round().with_lens(LensParams::new(p, 1).unwrap());
            let page = build_page(&sys, 0.0).unwrap();
            let d = disk_integral(&page).unwrap();
            assert!((d.signed - PI).abs() < 1e-6 * PI);
            assert!((d.boundary_action - PI).abs() < 1e-9);
            assert!(d.min_density > 0.0);
            assert!((disk_area_bound(&page).unwrap() - (1.0 + PI)).abs() < 1e-6 * PI);
        }
        let page = build_page(&quotient(), 0.0).unwrap();
        let d = disk_integral(&page).unwrap();
        assert!((d.signed - 1.0).abs() < 1e-6);
    }

    #[test]
    fn area_is_preserved() {
        let page = build_page(&quotient(), 0.0).unwrap();
        let q = Quadrilateral {
            r: (0.4, 0.45),
            theta: (1.0, 1.1),
        };
        assert!(area_distortion(&page, &q, 16).unwrap() < 1e-4);
    }

    #[test]
    fn verify_with_small_action_bound_is_vacuous() {
        let r = verify_main3(
            &quotient(),
            0.1,
            0,
            &VerifyOptions {
                quadrilaterals: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.orbits.is_empty());
        assert_eq!(r.dynamics.status, "skipped");
        assert!(r.passed, "{:?}", r.failures());
        assert_eq!(r.binding.self_linking, -2);
        assert_eq!(r.binding.mu_p, 3);
    }
}
