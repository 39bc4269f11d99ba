//! Explicit Runge-Kutta integrators over fixed-size state vectors.
//!
//! The default method is the Dormand-Prince 5(4) pair with local extrapolation,
//! step-size control on a mixed absolute/relative error norm and the classical
//! fourth-order continuous extension for dense output. A fixed-step RK4 mode
//! exists for determinism and convergence-order tests.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integration method selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Dopri5,
    Rk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Smallest admissible step; anything below is reported as underflow.
    pub h_min: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            method: Method::Dopri5,
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
            h_min: 1e-14,
        }
    }
}

impl IntegratorSettings {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4 { step },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Dopri5 => {
                if !(self.rtol > 0.0 && self.atol > 0.0) {
                    return Err(Error::invalid("integrator", "tolerances must be positive"));
                }
            }
            Method::Rk4 { step } => {
                if !(step > 0.0) {
                    return Err(Error::invalid("integrator", "RK4 step must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Sampled solution of an initial value problem.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<SVector<f64, N>>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> Option<(f64, &SVector<f64, N>)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One accepted step together with its continuous extension.
struct Step<const N: usize> {
    t0: f64,
    h: f64,
    dense: Dense<N>,
}

enum Dense<const N: usize> {
    /// Dormand-Prince fourth-order interpolant coefficients.
    Dopri([SVector<f64, N>; 5]),
    /// Cubic Hermite on the RK4 step endpoints.
    Hermite {
        y0: SVector<f64, N>,
        y1: SVector<f64, N>,
        f0: SVector<f64, N>,
        f1: SVector<f64, N>,
    },
}

impl<const N: usize> Step<N> {
    fn eval(&self, t: f64) -> SVector<f64, N> {
        let theta = (t - self.t0) / self.h;
        match &self.dense {
            Dense::Dopri(r) => {
                let theta1 = 1.0 - theta;
                r[0] + (r[1] + (r[2] + (r[3] + r[4] * theta1) * theta) * theta1) * theta
            }
            Dense::Hermite { y0, y1, f0, f1 } => {
                let t2 = theta * theta;
                let t3 = t2 * theta;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + theta;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                y0 * h00 + f0 * (h10 * self.h) + y1 * h01 + f1 * (h11 * self.h)
            }
        }
    }
}

// Dormand-Prince tableau.
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn error_norm<const N: usize>(
    err: &SVector<f64, N>,
    y0: &SVector<f64, N>,
    y1: &SVector<f64, N>,
    rtol: f64,
    atol: f64,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t0: f64,
    y0: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    span: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let scale = |i: usize, y: &SVector<f64, N>| atol + rtol * y[i].abs();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let s = scale(i, y0);
        d0 += (y0[i] / s).powi(2);
        d1 += (f0[i] / s).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span);
    let y1 = y0 + f0 * h0;
    let f1 = f(t0 + h0, &y1)?;
    let mut d2 = 0.0;
    for i in 0..N {
        d2 += ((f1[i] - f0[i]) / scale(i, y0)).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

/// Reusable stepper. Remembers the last accepted step size so that a
/// sequence of short calls (zero-order-hold control intervals) does not
/// restart the step-size search each time.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub settings: IntegratorSettings,
    last_step: Option<f64>,
}

impl Integrator {
    pub fn new(settings: IntegratorSettings) -> Self {
        Self {
            settings,
            last_step: None,
        }
    }

    /// Integrates from `t0` to `t1` and returns only the final state.
    pub fn propagate<const N: usize, F>(
        &mut self,
        f: &mut F,
        t0: f64,
        y0: SVector<f64, N>,
        t1: f64,
    ) -> Result<SVector<f64, N>>
    where
        F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
    {
        self.run(f, t0, y0, t1, |_| {})
    }

    /// Integrates from `t0` to `t1`, evaluating the dense output at each
    /// requested sample time (sorted, inside `[t0, t1]`).
    pub fn sampled<const N: usize, F>(
        &mut self,
        f: &mut F,
        t0: f64,
        y0: SVector<f64, N>,
        t1: f64,
        samples: &[f64],
    ) -> Result<Trajectory<N>>
    where
        F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
    {
        let mut out = Trajectory {
            times: Vec::with_capacity(samples.len()),
            states: Vec::with_capacity(samples.len()),
        };
        let mut next = 0;
        while next < samples.len() && samples[next] <= t0 {
            if samples[next] == t0 {
                out.times.push(t0);
                out.states.push(y0);
            }
            next += 1;
        }
        let end = self.run(f, t0, y0, t1, |step: &Step<N>| {
            let t_end = step.t0 + step.h;
            while next < samples.len() && samples[next] < t_end {
                out.times.push(samples[next]);
                out.states.push(step.eval(samples[next]));
                next += 1;
            }
        })?;
        while next < samples.len() && samples[next] <= t1 {
            out.times.push(samples[next]);
            out.states.push(end);
            next += 1;
        }
        Ok(out)
    }

    fn run<const N: usize, F, G>(
        &mut self,
        f: &mut F,
        t0: f64,
        y0: SVector<f64, N>,
        t1: f64,
        mut on_step: G,
    ) -> Result<SVector<f64, N>>
    where
        F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
        G: FnMut(&Step<N>),
    {
        if t1 < t0 {
            return Err(Error::invalid("integrate", "t1 must not precede t0"));
        }
        if t1 == t0 {
            return Ok(y0);
        }
        match self.settings.method {
            Method::Dopri5 => self.run_dopri(f, t0, y0, t1, &mut on_step),
            Method::Rk4 { step } => run_rk4(f, t0, y0, t1, step, &mut on_step),
        }
    }

    fn run_dopri<const N: usize, F, G>(
        &mut self,
        f: &mut F,
        t0: f64,
        y0: SVector<f64, N>,
        t1: f64,
        on_step: &mut G,
    ) -> Result<SVector<f64, N>>
    where
        F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
        G: FnMut(&Step<N>),
    {
        let IntegratorSettings {
            rtol,
            atol,
            max_steps,
            h_min,
            ..
        } = self.settings;
        let span = t1 - t0;
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y)?;
        let mut h = match self.last_step {
            Some(h) => h.min(span),
            None => initial_step(f, t, &y, &k1, span, rtol, atol)?,
        };
        let mut steps = 0usize;
        let mut rejected_last = false;

        loop {
            if steps >= max_steps {
                return Err(Error::TooManySteps { tau: t, max_steps });
            }
            let remaining = t1 - t;
            // Stretch to the end point instead of leaving a sliver.
            let last = h >= remaining * (1.0 - 1e-12);
            let h_try = if last { remaining } else { h };

            let k2 = f(t + C2 * h_try, &(y + k1 * (A21 * h_try)))?;
            let k3 = f(t + C3 * h_try, &(y + (k1 * A31 + k2 * A32) * h_try))?;
            let k4 = f(
                t + C4 * h_try,
                &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h_try),
            )?;
            let k5 = f(
                t + C5 * h_try,
                &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h_try),
            )?;
            let k6 = f(
                t + h_try,
                &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h_try),
            )?;
            let y_new =
                y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h_try;
            let t_new = if last { t1 } else { t + h_try };
            let k7 = f(t_new, &y_new)?;
            steps += 1;

            let err_vec =
                (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h_try;
            let err = error_norm(&err_vec, &y, &y_new, rtol, atol);
            if !err.is_finite() {
                return Err(Error::NonFinite { tau: t });
            }

            if err <= 1.0 {
                let rc2 = y_new - y;
                let rc3 = k1 * h_try - rc2;
                let rc4 = rc2 - k7 * h_try - rc3;
                let rc5 =
                    (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h_try;
                on_step(&Step {
                    t0: t,
                    h: h_try,
                    dense: Dense::Dopri([y, rc2, rc3, rc4, rc5]),
                });

                let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
                fac = fac.clamp(0.2, 10.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                let h_next = h_try * fac;
                // Keep the interior step estimate when the final step was clipped.
                if !last || h_try >= h {
                    self.last_step = Some(h_next);
                } else {
                    self.last_step = Some(h.max(h_next));
                }
                t = t_new;
                y = y_new;
                k1 = k7;
                rejected_last = false;
                if last {
                    return Ok(y);
                }
                h = h_next;
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                h = h_try * fac;
                rejected_last = true;
                if h < h_min {
                    return Err(Error::StepSizeUnderflow { tau: t, step: h });
                }
            }
        }
    }
}

fn run_rk4<const N: usize, F, G>(
    f: &mut F,
    t0: f64,
    y0: SVector<f64, N>,
    t1: f64,
    step: f64,
    on_step: &mut G,
) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
    G: FnMut(&Step<N>),
{
    let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &(y + k1 * (0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(y + k2 * (0.5 * h)))?;
        let t_next = if i + 1 == n { t1 } else { t + h };
        let k4 = f(t_next, &(y + k3 * h))?;
        let y_new = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !y_new.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { tau: t });
        }
        let f1 = f(t_next, &y_new)?;
        on_step(&Step {
            t0: t,
            h,
            dense: Dense::Hermite {
                y0: y,
                y1: y_new,
                f0: k1,
                f1,
            },
        });
        y = y_new;
    }
    Ok(y)
}

/// Convenience wrapper: one-shot integration with dense samples.
pub fn integrate<const N: usize, F>(
    mut f: F,
    y0: SVector<f64, N>,
    t0: f64,
    t1: f64,
    samples: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    settings.validate()?;
    Integrator::new(*settings).sampled(&mut f, t0, y0, t1, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use std::f64::consts::PI;

    fn oscillator(_t: f64, y: &Vector2<f64>) -> Result<Vector2<f64>> {
        Ok(Vector2::new(y[1], -y[0]))
    }

    #[test]
    fn oscillator_full_cycle() {
        let y0 = Vector2::new(1.0, 0.0);
        let traj = integrate(oscillator, y0, 0.0, 2.0 * PI, &[2.0 * PI], &Default::default())
            .unwrap();
        let (_, y) = traj.last().unwrap();
        assert!((y - y0).norm() < 1e-9, "error {}", (y - y0).norm());
    }

    #[test]
    fn rk4_is_fourth_order() {
        let y0 = Vector2::new(1.0, 0.0);
        let err = |h: f64| {
            let mut s = Integrator::new(IntegratorSettings::rk4(h));
            let y = s.propagate(&mut oscillator, 0.0, y0, 2.0 * PI).unwrap();
            (y - y0).norm()
        };
        let ratio = err(2.0 * PI / 64.0) / err(2.0 * PI / 128.0);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn dense_output_tracks_solution() {
        let samples: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let traj = integrate(
            oscillator,
            Vector2::new(1.0, 0.0),
            0.0,
            10.0,
            &samples,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(traj.len(), samples.len());
        for (t, y) in traj.times.iter().zip(&traj.states) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let y0 = Vector2::new(0.3, -0.1);
        let mut s = Integrator::new(Default::default());
        assert_eq!(s.propagate(&mut oscillator, 1.0, y0, 1.0).unwrap(), y0);
    }

    #[test]
    fn reversed_span_is_rejected() {
        let mut s = Integrator::new(Default::default());
        assert!(s
            .propagate(&mut oscillator, 1.0, Vector2::zeros(), 0.0)
            .is_err());
    }

    #[test]
    fn blowup_reports_underflow_or_non_finite() {
        // y' = y^2 from y=1 escapes at t=1.
        let mut f = |_t: f64, y: &Vector2<f64>| Ok(Vector2::new(y[0] * y[0], 0.0));
        let mut s = Integrator::new(Default::default());
        let res = s.propagate(&mut f, 0.0, Vector2::new(1.0, 0.0), 2.0);
        assert!(matches!(
            res,
            Err(Error::StepSizeUnderflow { .. }) | Err(Error::NonFinite { .. }) | Err(Error::TooManySteps { .. })
        ));
    }
}
