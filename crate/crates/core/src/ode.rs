//! Adaptive Dormand–Prince 5(4) integration with an optional post-step projection.

use crate::error::{Error, Result};

/// Tolerances and limits for [`Dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: 1e-2,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stepper state. Integrates forward or backward depending on the sign of the target time.
pub struct Dopri5 {
    pub t: f64,
    pub y: Vec<f64>,
    h: f64,
    opts: OdeOptions,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    steps: usize,
}

impl Dopri5 {
    pub fn new(t0: f64, y0: &[f64], opts: OdeOptions) -> Self {
        let n = y0.len();
        Self {
            t: t0,
            y: y0.to_vec(),
            h: opts.h_init,
            opts,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            steps: 0,
        }
    }

    /// Take one accepted step toward `t_end` without overshooting it.
    /// `project` is applied to every accepted state.
    pub fn step<F, P>(&mut self, f: &mut F, t_end: f64, project: &mut P) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        P: FnMut(&mut [f64]),
    {
        let dir = if t_end >= self.t { 1.0 } else { -1.0 };
        let n = self.y.len();
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(Error::Integration(format!(
                    "exceeded {} steps at t = {}",
                    self.opts.max_steps, self.t
                )));
            }
            self.steps += 1;
            let remaining = (t_end - self.t).abs();
            let mut h = self.h.abs().min(remaining);
            let last = h >= remaining;
            if h < self.opts.h_min && !last {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
            if last {
                h = remaining;
            }
            let hs = dir * h;
            let t = self.t;

            f(t, &self.y, &mut self.k[0])?;
            self.stage(&[(0, A21)], hs);
            f(t + C2 * hs, &self.tmp, &mut self.k[1])?;
            self.stage(&[(0, A31), (1, A32)], hs);
            f(t + C3 * hs, &self.tmp, &mut self.k[2])?;
            self.stage(&[(0, A41), (1, A42), (2, A43)], hs);
            f(t + C4 * hs, &self.tmp, &mut self.k[3])?;
            self.stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], hs);
            f(t + C5 * hs, &self.tmp, &mut self.k[4])?;
            self.stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], hs);
            f(t + hs, &self.tmp, &mut self.k[5])?;
            self.stage(&[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)], hs);
            self.y_new.copy_from_slice(&self.tmp);
            f(t + hs, &self.y_new, &mut self.k[6])?;

            let mut err = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                let sc = self.opts.atol + self.opts.rtol * self.y[i].abs().max(self.y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite state at t = {t}")));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.t = if last { t_end } else { t + hs };
                std::mem::swap(&mut self.y, &mut self.y_new);
                project(&mut self.y);
                // keep the pre-truncation step size when the last step was shortened
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
                return Ok(());
            }
            self.h = h * factor.min(1.0);
            if self.h < self.opts.h_min {
                return Err(Error::StepUnderflow { t, h: self.h });
            }
        }
    }

    fn stage(&mut self, coeffs: &[(usize, f64)], hs: f64) {
        for i in 0..self.y.len() {
            let mut acc = 0.0;
            for &(j, a) in coeffs {
                acc += a * self.k[j][i];
            }
            self.tmp[i] = self.y[i] + hs * acc;
        }
    }
}

/// Integrate from `t0` to `t1` and return the final state.
pub fn integrate<F, P>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: OdeOptions,
    mut project: P,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    P: FnMut(&mut [f64]),
{
    let mut stepper = Dopri5::new(t0, y0, opts);
    while stepper.t != t1 {
        stepper.step(&mut f, t1, &mut project)?;
    }
    Ok(stepper.y)
}

/// Integrate through a sequence of output times, returning the state at each.
pub fn integrate_dense<F, P>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    times: &[f64],
    opts: OdeOptions,
    mut project: P,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    P: FnMut(&mut [f64]),
{
    let mut stepper = Dopri5::new(t0, y0, opts);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while stepper.t != t {
            stepper.step(&mut f, t, &mut project)?;
        }
        out.push(stepper.y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let y = integrate(harmonic, 0.0, &[1.0, 0.0], 10.0, OdeOptions::default(), |_| {}).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let opts = OdeOptions::with_tol(1e-12);
        let y = integrate(harmonic, 0.0, &[0.3, -0.7], 3.0, opts, |_| {}).unwrap();
        let back = integrate(harmonic, 3.0, &y, 0.0, opts, |_| {}).unwrap();
        assert!((back[0] - 0.3).abs() < 1e-10);
        assert!((back[1] + 0.7).abs() < 1e-10);
    }

    #[test]
    fn dense_output_hits_requested_times() {
        let times: Vec<f64> = (1..=4).map(|i| i as f64 * 0.5).collect();
        let out = integrate_dense(harmonic, 0.0, &[1.0, 0.0], &times, OdeOptions::default(), |_| {}).unwrap();
        for (t, y) in times.iter().zip(&out) {
            assert!((y[0] - t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn blow_up_reports_failure() {
        let r = integrate(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            OdeOptions::default(),
            |_| {},
        );
        assert!(r.is_err());
    }
}
