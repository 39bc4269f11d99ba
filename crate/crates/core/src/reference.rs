//! Periodic reference orbit construction and dense trajectory lookup.
//!
//! The halo orbit is corrected in the CR3BP by single shooting from an
//! x-z plane crossing. Trajectories are stored on a uniform grid of
//! position/velocity/acceleration nodes and interpolated with quintic
//! Hermite polynomials, so that lookups are O(1) and exact at the nodes.

use nalgebra::{Matrix6x3, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    derivative_vec6, linearize_translational, Mat6, SystemParams, TranslationalState, Vec3, Vec6,
};
use crate::error::{Error, Result};
use crate::simkit::integrate::{Integrator, IntegratorSettings};

/// Anything that yields a translational state as a function of time.
pub trait Track: Sync {
    fn state_at(&self, tau: f64) -> TranslationalState;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Node {
    pos: Vec3,
    vel: Vec3,
    acc: Vec3,
}

/// Uniformly sampled unforced trajectory with quintic Hermite interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseTrack {
    pub tau0: f64,
    pub spacing: f64,
    nodes: Vec<Node>,
    /// Period for wrap-around lookups; `None` for a finite window.
    pub period: Option<f64>,
    params: SystemParams,
    settings: IntegratorSettings,
}

impl DenseTrack {
    /// Integrates the unforced dynamics from `x0` at `tau0` across `span`
    /// and stores `n_segments + 1` nodes.
    pub fn build(
        x0: &TranslationalState,
        tau0: f64,
        span: f64,
        n_segments: usize,
        params: &SystemParams,
        settings: &IntegratorSettings,
    ) -> Result<Self> {
        if n_segments == 0 || !(span > 0.0) {
            return Err(Error::invalid("track", "need a positive span and at least one segment"));
        }
        let spacing = span / n_segments as f64;
        let mut nodes = Vec::with_capacity(n_segments + 1);
        let mut integ = Integrator::new(*settings);
        let mut f = |t: f64, x: &Vec6| derivative_vec6(t, x, &Vec3::zeros(), params);
        let mut x = x0.to_vec6();
        for i in 0..=n_segments {
            let t = tau0 + i as f64 * spacing;
            if i > 0 {
                let t_prev = tau0 + (i - 1) as f64 * spacing;
                x = integ.propagate(&mut f, t_prev, x, t)?;
            }
            let d = f(t, &x)?;
            nodes.push(Node {
                pos: x.fixed_rows::<3>(0).into_owned(),
                vel: x.fixed_rows::<3>(3).into_owned(),
                acc: d.fixed_rows::<3>(3).into_owned(),
            });
        }
        Ok(Self {
            tau0,
            spacing,
            nodes,
            period: None,
            params: *params,
            settings: *settings,
        })
    }

    pub fn end(&self) -> f64 {
        self.tau0 + self.spacing * (self.nodes.len() - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nodes.len()).map(move |i| self.tau0 + i as f64 * self.spacing)
    }

    fn interpolate(&self, tau: f64) -> TranslationalState {
        let n_seg = self.nodes.len() - 1;
        let s = (tau - self.tau0) / self.spacing;
        let i = (s.floor().max(0.0) as usize).min(n_seg - 1);
        let t = s - i as f64;
        let h = self.spacing;
        let a = &self.nodes[i];
        let b = &self.nodes[i + 1];
        // Quintic Hermite basis on [0, 1].
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let d3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
        let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        let position = a.pos * h0 + a.vel * (h1 * h) + a.acc * (h2 * h * h)
            + b.acc * (h3 * h * h)
            + b.vel * (h4 * h)
            + b.pos * h5;
        let velocity = (a.pos * (-d5) + b.pos * d5) / h
            + a.vel * d1
            + a.acc * (d2 * h)
            + b.acc * (d3 * h)
            + b.vel * d4;
        TranslationalState { position, velocity }
    }

    /// Direct integration from the nearest node not after `tau`.
    pub fn reintegrate(&self, tau: f64) -> Result<TranslationalState> {
        let tau = self.wrap(tau);
        let n_seg = self.nodes.len() - 1;
        let s = ((tau - self.tau0) / self.spacing).floor().clamp(0.0, n_seg as f64) as usize;
        let t_node = self.tau0 + s as f64 * self.spacing;
        let node = &self.nodes[s];
        let x0 = TranslationalState::new(node.pos, node.vel).to_vec6();
        let mut f = |t: f64, x: &Vec6| derivative_vec6(t, x, &Vec3::zeros(), &self.params);
        let mut integ = Integrator::new(self.settings);
        let x = if tau >= t_node {
            integ.propagate(&mut f, t_node, x0, tau)?
        } else {
            // before the table start: integrate backwards via time reversal
            let mut g = |t: f64, x: &Vec6| {
                derivative_vec6(2.0 * t_node - t, x, &Vec3::zeros(), &self.params).map(|d| -d)
            };
            integ.propagate(&mut g, t_node, x0, 2.0 * t_node - tau)?
        };
        Ok(TranslationalState::from_vec6(&x))
    }

    fn wrap(&self, tau: f64) -> f64 {
        match self.period {
            Some(p) => self.tau0 + (tau - self.tau0).rem_euclid(p),
            None => tau,
        }
    }

    fn covers(&self, tau: f64) -> bool {
        let eps = 1e-12 * self.spacing;
        tau >= self.tau0 - eps && tau <= self.end() + eps
    }
}

impl Track for DenseTrack {
    fn state_at(&self, tau: f64) -> TranslationalState {
        let tau = self.wrap(tau);
        if self.covers(tau) {
            self.interpolate(tau)
        } else {
            // Outside a finite window: fall back to integration, then to the
            // clamped interpolant if even that fails.
            self.reintegrate(tau)
                .unwrap_or_else(|_| self.interpolate(tau.clamp(self.tau0, self.end())))
        }
    }
}

/// Corrected periodic orbit of the CR3BP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceOrbit {
    pub initial_state: TranslationalState,
    pub period: f64,
    pub residual: f64,
    pub iterations: usize,
    pub track: DenseTrack,
}

impl ReferenceOrbit {
    pub fn params(&self) -> &SystemParams {
        &self.track.params
    }
}

impl Track for ReferenceOrbit {
    fn state_at(&self, tau: f64) -> TranslationalState {
        chief_state(tau, self)
    }
}

/// Time shift parameter of the governor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeShiftState {
    pub shift: f64,
    pub update_period: f64,
    pub bounds: (f64, f64),
}

impl TimeShiftState {
    pub fn new(shift: f64, update_period: f64, bounds: (f64, f64)) -> Result<Self> {
        let s = Self {
            shift,
            update_period,
            bounds,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !(lo <= self.shift && self.shift <= hi) {
            return Err(Error::invalid("time_shift", "shift outside its bounds"));
        }
        if !(self.update_period > 0.0) {
            return Err(Error::invalid("time_shift", "update period must be positive"));
        }
        Ok(())
    }

    pub fn with_shift(&self, shift: f64) -> Self {
        Self { shift, ..*self }
    }
}

/// Joint propagation of the state and its 6x6 state transition matrix.
pub fn stm_propagate(
    x0: &TranslationalState,
    tau0: f64,
    tau1: f64,
    params: &SystemParams,
    settings: &IntegratorSettings,
) -> Result<(TranslationalState, Mat6)> {
    type Aug = SVector<f64, 42>;
    let mut y0 = Aug::zeros();
    y0.fixed_rows_mut::<6>(0).copy_from(&x0.to_vec6());
    let eye = Mat6::identity();
    for (k, v) in eye.iter().enumerate() {
        y0[6 + k] = *v;
    }
    let mut f = |t: f64, y: &Aug| -> Result<Aug> {
        let x: Vec6 = y.fixed_rows::<6>(0).into_owned();
        let st = TranslationalState::from_vec6(&x);
        let (a, _) = linearize_translational(t, &st, params)?;
        let d = derivative_vec6(t, &x, &Vec3::zeros(), params)?;
        let phi = SMatrix::<f64, 6, 6>::from_column_slice(&y.as_slice()[6..]);
        let dphi = a * phi;
        let mut out = Aug::zeros();
        out.fixed_rows_mut::<6>(0).copy_from(&d);
        out.as_mut_slice()[6..].copy_from_slice(dphi.as_slice());
        Ok(out)
    };
    let y1 = Integrator::new(*settings).propagate(&mut f, tau0, y0, tau1)?;
    let x1 = TranslationalState::from_vec6(&y1.fixed_rows::<6>(0).into_owned());
    let phi = Mat6::from_column_slice(&y1.as_slice()[6..]);
    Ok((x1, phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSettings {
    pub tol: f64,
    pub max_iterations: usize,
    /// Uniform table segments per period.
    pub nodes_per_period: usize,
    pub integrator: IntegratorSettings,
}

impl Default for CorrectionSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 50,
            nodes_per_period: 2000,
            integrator: IntegratorSettings::with_tolerances(1e-12, 1e-13),
        }
    }
}

/// Single shooting on an x-z plane crossing `(x, 0, z, 0, vy, 0)`.
///
/// Free variables are `x`, `vy` and the period; `z` is held at the guess
/// value to pin the family member. The Newton step is the least-squares
/// solution of the linearized full-period closure. The Sun is ignored.
pub fn correct_periodic_orbit(
    guess: &TranslationalState,
    period_guess: f64,
    params: &SystemParams,
    settings: &CorrectionSettings,
) -> Result<ReferenceOrbit> {
    let params = params.without_sun();
    params.validate()?;
    if !(period_guess > 0.0) {
        return Err(Error::invalid("period_guess", "must be positive"));
    }
    let mut x0 = guess.position.x;
    let z0 = guess.position.z;
    let mut vy0 = guess.velocity.y;
    let mut period = period_guess;

    let initial = |x0: f64, vy0: f64| {
        TranslationalState::new(Vec3::new(x0, 0.0, z0), Vec3::new(0.0, vy0, 0.0))
    };

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations <= settings.max_iterations {
        let start = initial(x0, vy0);
        let (end, phi) = stm_propagate(&start, 0.0, period, &params, &settings.integrator)?;
        let err = end.to_vec6() - start.to_vec6();
        residual = err.norm();
        if residual < settings.tol {
            break;
        }
        if iterations == settings.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual,
            });
        }
        let flow = derivative_vec6(period, &end.to_vec6(), &Vec3::zeros(), &params)?;
        let mut jac = Matrix6x3::<f64>::zeros();
        for r in 0..6 {
            jac[(r, 0)] = phi[(r, 0)] - if r == 0 { 1.0 } else { 0.0 };
            jac[(r, 1)] = phi[(r, 4)] - if r == 4 { 1.0 } else { 0.0 };
            jac[(r, 2)] = flow[r];
        }
        let step = jac
            .svd(true, true)
            .solve(&(-err), 1e-14)
            .map_err(|e| Error::Riccati(e.to_owned()))?;
        x0 += step[0];
        vy0 += step[1];
        period += step[2];
        iterations += 1;
    }

    let start = initial(x0, vy0);
    let mut track = DenseTrack::build(
        &start,
        0.0,
        period,
        settings.nodes_per_period,
        &params,
        &settings.integrator,
    )?;
    track.period = Some(period);
    Ok(ReferenceOrbit {
        initial_state: start,
        period,
        residual,
        iterations,
        track,
    })
}

/// Chief state on the periodic reference orbit.
pub fn chief_state(tau: f64, orbit: &ReferenceOrbit) -> TranslationalState {
    let wrapped = tau.rem_euclid(orbit.period);
    if wrapped == 0.0 {
        return orbit.initial_state;
    }
    orbit.track.state_at(wrapped)
}

/// Time-shifted point on any track: `X_v(tau) = X_c(tau + shift)`.
pub fn virtual_target<T: Track + ?Sized>(
    tau: f64,
    shift: &TimeShiftState,
    track: &T,
) -> TranslationalState {
    track.state_at(tau + shift.shift)
}
