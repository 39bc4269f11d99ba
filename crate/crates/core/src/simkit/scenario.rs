//! Scenario setup, the main simulation loop and Monte Carlo campaigns.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attitude::{AttitudeState, InertiaTensor};
use crate::constraints::{self, ConstraintParams};
use crate::control::{averaged_pair, ControllerOptions, GainSet, NominalController};
use crate::dynamics::{input_matrix, Mat3, Mat6, SystemParams, TranslationalState, Vec3, Vec6};
use crate::error::{Error, Result};
use crate::governor::{update_time_shift, GovernorSettings};
use crate::reference::{correct_periodic_orbit, CorrectionSettings, DenseTrack, ReferenceOrbit, TimeShiftState, Track};
use crate::simkit::closed_loop::{aligned_attitude, ClosedLoop, CoupledState, LoopMemory};
use crate::simkit::integrate::{Integrator, IntegratorSettings};
use crate::simkit::log::{LogMeta, LogSample, SimLog};

/// Periodic orbit initial guess and correction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSpec {
    /// `(x, 0, z, 0, vy, 0)` plane-crossing guess, LU and LU/TU.
    pub x0: f64,
    pub z0: f64,
    pub vy0: f64,
    pub period_guess: f64,
    pub correction: CorrectionSettings,
}

impl OrbitSpec {
    pub fn guess(&self) -> TranslationalState {
        TranslationalState::new(Vec3::new(self.x0, 0.0, self.z0), Vec3::new(0.0, self.vy0, 0.0))
    }
}

/// LQR weights and averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LqrSpec {
    pub q_diag: [f64; 6],
    pub r_diag: [f64; 3],
    pub averaging_samples: usize,
}

/// Attitude model and controller gains, nondimensional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttitudeSpec {
    /// Row-major inertia tensor, kg m^2.
    pub inertia: [[f64; 3]; 3],
    /// Proportional gain, kg m^2 / TU^2 per rad.
    pub kp: f64,
    /// Derivative gain, kg m^2 / TU per rad.
    pub kd: f64,
    pub slow_reference: bool,
    pub literal_unit_rates: bool,
}

impl AttitudeSpec {
    pub fn inertia_tensor(&self) -> Result<InertiaTensor> {
        InertiaTensor::new(Matrix3::from_fn(|i, j| self.inertia[i][j]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GovernorSpec {
    pub enabled: bool,
    /// Initial time shift, TU.
    pub initial_shift: f64,
    pub bounds: (f64, f64),
    /// Interval between updates, TU; must be a multiple of the control step.
    pub update_period: f64,
    pub settings: GovernorSettings,
    /// Predict with ideal attitude instead of the coupled loop.
    pub translation_only_prediction: bool,
}

/// How the Deputy starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DeputySpec {
    /// Explicit initial state; otherwise the Chief's state one initial shift ahead.
    pub state: Option<[f64; 6]>,
    /// Added to the initial state, LU and LU/TU.
    pub offset: [f64; 6],
    /// Explicit initial attitude; otherwise aligned with the desired attitude.
    pub attitude: Option<AttitudeState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub seed: u64,
    /// Standard deviation of each position component, LU.
    pub position_sigma: f64,
    /// Standard deviation of each velocity component, LU/TU.
    pub velocity_sigma: f64,
    pub max_draws: usize,
}

/// Fully resolved, nondimensional scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub system: SystemParams,
    pub orbit: OrbitSpec,
    pub lqr: LqrSpec,
    pub attitude: AttitudeSpec,
    pub constraints: ConstraintParams,
    pub governor: GovernorSpec,
    pub deputy: DeputySpec,
    pub integrator: IntegratorSettings,
    /// Zero-order-hold interval of the controllers, TU.
    pub control_step: f64,
    /// Simulated time, TU.
    pub duration: f64,
    /// Chief table density.
    pub chief_nodes_per_period: usize,
    pub monte_carlo: MonteCarloSpec,
}

impl ScenarioConfig {
    /// Control steps per governor update.
    pub fn steps_per_update(&self) -> Result<usize> {
        let ratio = self.governor.update_period / self.control_step;
        let n = ratio.round();
        if !(n >= 1.0) || (ratio - n).abs() > 1e-6 * n {
            return Err(Error::invalid(
                "governor.update_period",
                "must be a positive multiple of the control step",
            ));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.constraints.validate()?;
        self.integrator.validate()?;
        self.governor.settings.validate()?;
        self.attitude.inertia_tensor()?;
        TimeShiftState::new(self.governor.initial_shift, self.governor.update_period, self.governor.bounds)?;
        self.steps_per_update()?;
        if !(self.control_step > 0.0) {
            return Err(Error::invalid("control_step", "must be positive"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::invalid("duration", "must be positive"));
        }
        if self.lqr.q_diag.iter().chain(self.lqr.r_diag.iter()).any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("lqr weights", "must be positive"));
        }
        if self.lqr.averaging_samples == 0 {
            return Err(Error::invalid("lqr.averaging_samples", "must be at least 1"));
        }
        if !(self.attitude.kp > 0.0 && self.attitude.kd > 0.0) {
            return Err(Error::invalid("attitude gains", "must be positive"));
        }
        if self.chief_nodes_per_period < 16 {
            return Err(Error::invalid("chief_nodes_per_period", "need at least 16"));
        }
        let mc = &self.monte_carlo;
        if !(mc.position_sigma >= 0.0 && mc.velocity_sigma >= 0.0) || mc.max_draws == 0 {
            return Err(Error::invalid("monte_carlo", "scales must be non-negative and max_draws positive"));
        }
        Ok(())
    }
}

/// Immutable models shared by every run of a scenario.
pub struct PreparedScenario {
    pub config: ScenarioConfig,
    pub orbit: ReferenceOrbit,
    /// Chief propagated unforced in the full model across the run window.
    pub chief: DenseTrack,
    pub controller: NominalController,
    /// Averaged linearization used for the gain, kept for diagnostics.
    pub averaged: (Mat6, nalgebra::Matrix6x3<f64>),
}

/// Per-run options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub governor_enabled: bool,
    /// Perturbation added to the nominal initial state.
    pub perturbation: Vec6,
}

impl PreparedScenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let params = config.system;
        let orbit = correct_periodic_orbit(&config.orbit.guess(), config.orbit.period_guess, &params, &config.orbit.correction)
            .map_err(|e| e.in_phase("orbit correction"))?;

        let g = &config.governor;
        let max_shift = g.bounds.0.abs().max(g.bounds.1.abs());
        let span = config.duration + config.constraints.tau_pred + max_shift + 4.0 * config.control_step;
        let segments = ((span / orbit.period) * config.chief_nodes_per_period as f64).ceil() as usize;
        let chief = DenseTrack::build(&orbit.initial_state, 0.0, span, segments, &params, &config.orbit.correction.integrator)
            .map_err(|e| e.in_phase("chief propagation"))?;

        let averaged = averaged_pair(&chief, 0.0, orbit.period, config.lqr.averaging_samples, &params)
            .map_err(|e| e.in_phase("gain synthesis"))?;
        debug_assert_eq!(averaged.1, input_matrix());
        let q = Mat6::from_diagonal(&Vec6::from_column_slice(&config.lqr.q_diag));
        let r = Mat3::from_diagonal(&Vector3::from_column_slice(&config.lqr.r_diag));
        let gains = GainSet::synthesize(
            &averaged.0,
            &averaged.1,
            &q,
            &r,
            config.attitude.kp,
            config.attitude.kd,
            config.attitude.inertia_tensor()?,
        )
        .map_err(|e| e.in_phase("gain synthesis"))?;
        let controller = NominalController {
            gains,
            options: ControllerOptions {
                u_max: config.constraints.u_max,
                eta: config.constraints.eta,
                slow_reference: config.attitude.slow_reference,
                literal_unit_rates: config.attitude.literal_unit_rates,
                ..ControllerOptions::default()
            },
            params,
        };
        Ok(Self {
            config,
            orbit,
            chief,
            controller,
            averaged,
        })
    }

    /// Closed loop used by the simulation.
    pub fn closed_loop(&self) -> ClosedLoop<'_> {
        ClosedLoop {
            controller: &self.controller,
            constraints: &self.config.constraints,
            chief: &self.chief,
            integrator: self.config.integrator,
            control_step: self.config.control_step,
            translation_only: false,
        }
    }

    /// Closed loop used inside governor predictions.
    pub fn prediction_loop(&self) -> ClosedLoop<'_> {
        ClosedLoop {
            translation_only: self.config.governor.translation_only_prediction,
            ..self.closed_loop()
        }
    }

    /// Nominal Deputy translational state before perturbation.
    pub fn nominal_deputy(&self) -> TranslationalState {
        match self.config.deputy.state {
            Some(s) => TranslationalState::from_vec6(&Vec6::from_column_slice(&s)),
            None => self.chief.state_at(self.config.governor.initial_shift),
        }
    }

    /// Shift within the bounds closest to zero.
    fn goal_shift(&self) -> f64 {
        let g = &self.config.governor;
        0f64.clamp(g.bounds.0, g.bounds.1)
    }

    fn initial_shift(&self, governed: bool) -> f64 {
        if governed {
            self.config.governor.initial_shift
        } else {
            // the nominal controller alone tracks the Chief itself
            self.goal_shift()
        }
    }

    /// Initial coupled state for a given perturbation. The default attitude
    /// points the thruster as if tracking the goal shift: every candidate the
    /// governor tries pulls the Deputy the same way, while the initial shift
    /// itself may demand no thrust at all.
    pub fn initial_state(&self, perturbation: &Vec6) -> Result<CoupledState> {
        let offset = Vec6::from_column_slice(&self.config.deputy.offset);
        let translation = TranslationalState::from_vec6(&(self.nominal_deputy().to_vec6() + offset + perturbation));
        let attitude = match self.config.deputy.attitude {
            Some(a) => a,
            None => aligned_attitude(&self.closed_loop(), 0.0, &translation, self.goal_shift())?,
        };
        Ok(CoupledState::new(translation, attitude))
    }

    /// Constraint check of an initial translational state against the Chief.
    pub fn initially_admissible(&self, translation: &TranslationalState) -> bool {
        let chief = self.chief.state_at(0.0);
        let r = constraints::evaluate(translation, &chief, &Vec3::zeros(), &Vec3::zeros(), &self.config.constraints);
        r.admissible
    }

    /// Runs one closed-loop simulation.
    pub fn run(&self, options: &RunOptions) -> Result<SimLog> {
        let cfg = &self.config;
        let governed = options.governor_enabled;
        let loop_ = self.closed_loop();
        let predict = self.prediction_loop();
        let mut shift = TimeShiftState::new(self.initial_shift(governed), cfg.governor.update_period, cfg.governor.bounds)?;
        let steps_per_update = cfg.steps_per_update()?;
        let mut state = self
            .initial_state(&options.perturbation)
            .map_err(|e| e.in_phase("deputy initialization"))?;

        let grid = loop_.grid(0.0, cfg.duration);
        let mut memory = LoopMemory::default();
        let mut integ = Integrator::new(cfg.integrator);
        let mut samples = Vec::with_capacity(grid.len());
        let mut evaluations = 0usize;
        let mut retained = 0usize;
        let last = grid.len() - 1;
        for (k, &tau) in grid.iter().enumerate() {
            let update = governed && k % steps_per_update == 0 && k < last;
            if update {
                let (next, decision) = update_time_shift(&shift, &state, tau, &predict, &memory, &cfg.governor.settings);
                evaluations += decision.evaluations;
                retained += decision.retained as usize;
                if decision.shift != shift.shift {
                    log::debug!(
                        "tau {tau:.5}: shift {:.4} -> {:.4} min ({} predictions)",
                        shift.shift * cfg.system.time_unit_s / 60.0,
                        decision.shift * cfg.system.time_unit_s / 60.0,
                        decision.evaluations
                    );
                }
                shift = next;
            }
            let rec = loop_
                .evaluate(tau, &state, shift.shift, &mut memory)
                .map_err(|e| e.in_phase("simulation"))?;
            samples.push(LogSample::from_record(&rec, update));
            if k < last {
                state = loop_
                    .advance(&rec, grid[k + 1], &mut integ)
                    .map_err(|e| e.in_phase("simulation"))?;
            }
        }
        let meta = LogMeta::new(cfg, governed, evaluations, retained);
        Ok(SimLog::new(meta, samples))
    }

    /// Draws `n` admissible perturbations from `seed`.
    pub fn draw_perturbations(&self, n: usize, seed: u64) -> Result<Vec<Vec6>> {
        let mc = &self.config.monte_carlo;
        let pos = Normal::new(0.0, mc.position_sigma).map_err(|e| Error::invalid("monte_carlo.position_sigma", e.to_string()))?;
        let vel = Normal::new(0.0, mc.velocity_sigma).map_err(|e| Error::invalid("monte_carlo.velocity_sigma", e.to_string()))?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let offset = Vec6::from_column_slice(&self.config.deputy.offset);
        let nominal = self.nominal_deputy().to_vec6() + offset;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut accepted = None;
            for _ in 0..mc.max_draws {
                let p = Vec6::from_fn(|i, _| if i < 3 { pos.sample(&mut rng) } else { vel.sample(&mut rng) });
                if self.initially_admissible(&TranslationalState::from_vec6(&(nominal + p))) {
                    accepted = Some(p);
                    break;
                }
            }
            out.push(accepted.ok_or(Error::SamplerExhausted { draws: mc.max_draws })?);
        }
        Ok(out)
    }
}

/// Result of one Monte Carlo member.
#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub index: usize,
    pub perturbation: Vec6,
    pub log: SimLog,
}

/// Runs the scenario once.
pub fn run_scenario(config: &ScenarioConfig, governor_enabled: bool) -> Result<SimLog> {
    PreparedScenario::new(config.clone())?.run(&RunOptions {
        governor_enabled,
        perturbation: Vec6::zeros(),
    })
}

/// Runs `n` perturbed copies of the scenario in parallel. Deterministic in `seed`.
pub fn monte_carlo(config: &ScenarioConfig, n: usize, seed: u64, governor_enabled: bool) -> Result<Vec<McRun>> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one run"));
    }
    let prepared = PreparedScenario::new(config.clone())?;
    monte_carlo_prepared(&prepared, n, seed, governor_enabled)
}

/// Monte Carlo over already prepared models.
pub fn monte_carlo_prepared(prepared: &PreparedScenario, n: usize, seed: u64, governor_enabled: bool) -> Result<Vec<McRun>> {
    let perturbations = prepared.draw_perturbations(n, seed)?;
    perturbations
        .into_par_iter()
        .enumerate()
        .map(|(index, perturbation)| {
            let log = prepared.run(&RunOptions {
                governor_enabled,
                perturbation,
            })?;
            Ok(McRun {
                index,
                perturbation,
                log,
            })
        })
        .collect()
}
