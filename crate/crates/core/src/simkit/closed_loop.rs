//! The coupled orbit/attitude closed loop, stepped at the control rate.
//!
//! Both the governor's predictions and the main simulation advance the
//! Deputy through [`ClosedLoop::evaluate`] and [`ClosedLoop::advance`], so a
//! prediction is exactly what the simulation would do for the same shift.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::attitude::{euler_dynamics, mrp_kinematics, mrp_to_dcm, AttitudeState, Mrp};
use crate::constraints::{self, ConstraintParams, ConstraintReport};
use crate::control::{ControlOutput, NominalController, ReferenceAttitude, ThrustCommand, TrackingInput};
use crate::dynamics::{derivative_vec6, translational_derivative, TranslationalState, Vec3, Vec6};
use crate::error::{Error, Result};
use crate::reference::Track;
use crate::simkit::integrate::{Integrator, IntegratorSettings};

pub type Vec12 = SVector<f64, 12>;

/// Deputy position, velocity, attitude and body rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoupledState {
    pub translation: TranslationalState,
    pub attitude: AttitudeState,
}

impl CoupledState {
    pub fn new(translation: TranslationalState, attitude: AttitudeState) -> Self {
        Self {
            translation,
            attitude,
        }
    }

    pub fn to_vec12(&self) -> Vec12 {
        let mut v = Vec12::zeros();
        v.fixed_rows_mut::<6>(0).copy_from(&self.translation.to_vec6());
        v.fixed_rows_mut::<3>(6).copy_from(&self.attitude.sigma.0);
        v.fixed_rows_mut::<3>(9).copy_from(&self.attitude.omega);
        v
    }

    pub fn from_vec12(v: &Vec12) -> Self {
        Self {
            translation: TranslationalState::from_vec6(&v.fixed_rows::<6>(0).into_owned()),
            attitude: AttitudeState::new(
                Mrp(v.fixed_rows::<3>(6).into_owned()),
                v.fixed_rows::<3>(9).into_owned(),
            ),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.translation.is_finite() && self.attitude.is_finite()
    }
}

/// Everything that defines the closed loop apart from the time shift.
#[derive(Clone, Copy)]
pub struct ClosedLoop<'a> {
    pub controller: &'a NominalController,
    pub constraints: &'a ConstraintParams,
    /// Chief trajectory; the virtual target is this track shifted in time.
    pub chief: &'a dyn Track,
    pub integrator: IntegratorSettings,
    /// Zero-order-hold interval of both controllers, TU.
    pub control_step: f64,
    /// Treat attitude as ideal: thrust always points along `u_d`.
    pub translation_only: bool,
}

/// State carried between control updates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoopMemory {
    pub held: Option<ReferenceAttitude>,
}

/// Controller output and constraint values at one control instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub tau: f64,
    pub state: CoupledState,
    pub chief: TranslationalState,
    pub target: TranslationalState,
    pub shift: f64,
    pub control: ControlOutput,
    pub report: ConstraintReport,
}

impl StepRecord {
    pub fn thrust(&self) -> &ThrustCommand {
        &self.control.thrust
    }
}

impl<'a> ClosedLoop<'a> {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_step > 0.0 && self.control_step.is_finite()) {
            return Err(Error::invalid("control_step", "must be positive"));
        }
        self.integrator.validate()?;
        self.constraints.validate()
    }

    /// Evaluates both controllers and the constraints at `tau`.
    pub fn evaluate(&self, tau: f64, state: &CoupledState, shift: f64, memory: &mut LoopMemory) -> Result<StepRecord> {
        if !state.is_finite() {
            return Err(Error::NonFinite { tau });
        }
        let params = &self.controller.params;
        let chief = self.chief.state_at(tau);
        let target = self.chief.state_at(tau + shift);
        let target_rate = derivative_vec6(tau + shift, &target.to_vec6(), &Vec3::zeros(), params)?;
        let input = TrackingInput {
            tau,
            deputy: &state.translation,
            target: &target,
            target_rate: &target_rate,
        };
        let control = if self.translation_only {
            self.ideal_attitude_output(&input)
        } else {
            let out = self.controller.evaluate(&input, &state.attitude, memory.held.as_ref())?;
            if !out.degenerate {
                memory.held = Some(out.reference);
            }
            out
        };
        let report = constraints::evaluate(
            &state.translation,
            &chief,
            &control.thrust.desired,
            &control.thrust.applied,
            self.constraints,
        );
        Ok(StepRecord {
            tau,
            state: *state,
            chief,
            target,
            shift,
            control,
            report,
        })
    }

    fn ideal_attitude_output(&self, input: &TrackingInput<'_>) -> ControlOutput {
        let u_d = crate::control::saturate(
            self.controller.gains.k * (input.deputy.to_vec6() - input.target.to_vec6()),
            self.controller.options.u_max,
        );
        let n = u_d.norm();
        ControlOutput {
            thrust: ThrustCommand {
                desired: u_d,
                desired_unit: if n > 0.0 { u_d / n } else { Vec3::zeros() },
                applied: u_d,
                gated_off: false,
            },
            moment: Vec3::zeros(),
            reference: ReferenceAttitude {
                rb: crate::attitude::Dcm::identity(),
                omega_r: Vec3::zeros(),
            },
            e_c: Vec3::zeros(),
            e_w: Vec3::zeros(),
            degenerate: false,
        }
    }

    /// Propagates from `record.tau` to `tau_next` holding the body-fixed
    /// thrust magnitude and the control moment.
    pub fn advance(&self, record: &StepRecord, tau_next: f64, integ: &mut Integrator) -> Result<CoupledState> {
        let params = &self.controller.params;
        let inertia = &self.controller.gains.inertia;
        let moment = record.control.moment;
        let thrust = &record.control.thrust;
        let mut next = if self.translation_only {
            let applied = thrust.applied;
            let mut f = |t: f64, x: &Vec6| derivative_vec6(t, x, &applied, params);
            let x = integ.propagate(&mut f, record.tau, record.state.translation.to_vec6(), tau_next)?;
            CoupledState::new(TranslationalState::from_vec6(&x), record.state.attitude)
        } else {
            let magnitude = if thrust.gated_off { 0.0 } else { thrust.applied.norm() };
            let mut f = |t: f64, y: &Vec12| -> Result<Vec12> {
                let s = CoupledState::from_vec12(y);
                let k_b = mrp_to_dcm(&s.attitude.sigma).row(2);
                let u = -k_b * magnitude;
                let dx = translational_derivative(t, &s.translation, &u, params)?;
                let dsigma = mrp_kinematics(&s.attitude.sigma, &s.attitude.omega);
                let domega = euler_dynamics(&s.attitude.omega, &moment, inertia);
                let mut d = Vec12::zeros();
                d.fixed_rows_mut::<6>(0).copy_from(&dx);
                d.fixed_rows_mut::<3>(6).copy_from(&dsigma);
                d.fixed_rows_mut::<3>(9).copy_from(&domega);
                Ok(d)
            };
            let y = integ.propagate(&mut f, record.tau, record.state.to_vec12(), tau_next)?;
            CoupledState::from_vec12(&y)
        };
        next.attitude.sigma = next.attitude.sigma.canonical();
        if !next.is_finite() {
            return Err(Error::NonFinite { tau: tau_next });
        }
        Ok(next)
    }

    /// Control instants from `tau0` to `tau0 + span`; the last interval
    /// may be shorter.
    pub fn grid(&self, tau0: f64, span: f64) -> Vec<f64> {
        let n = (span / self.control_step - 1e-9).ceil().max(0.0) as usize;
        let mut out: Vec<f64> = (0..n).map(|k| tau0 + k as f64 * self.control_step).collect();
        out.push(tau0 + span);
        out
    }
}

/// Desired attitude at the initial state, zero body rate.
pub fn aligned_attitude(loop_: &ClosedLoop<'_>, tau: f64, translation: &TranslationalState, shift: f64) -> Result<AttitudeState> {
    let target = loop_.chief.state_at(tau + shift);
    let params = &loop_.controller.params;
    let u_raw = loop_.controller.gains.k * (translation.to_vec6() - target.to_vec6());
    match crate::control::desired_attitude(translation, &u_raw, &params.earth_position()) {
        Ok(rb) => Ok(AttitudeState::new(crate::attitude::dcm_to_mrp(&rb)?.canonical(), Vec3::zeros())),
        // no thrust demand: any attitude is aligned
        Err(Error::DegenerateGeometry { .. }) => Ok(AttitudeState::default()),
        Err(e) => Err(e),
    }
}
