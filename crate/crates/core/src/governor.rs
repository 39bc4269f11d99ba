//! Time Shift Governor.
//!
//! At each update the governor predicts the closed loop over a finite
//! horizon for candidate shifts and adopts the admissible shift closest to
//! zero. The search is a bisection between the bound nearest zero and the
//! current shift, so the shift magnitude never grows.

use serde::{Deserialize, Serialize};

use crate::constraints::{terminal_stability, with_terminal, ConstraintId, ConstraintReport};
use crate::control::ThrustCommand;
use crate::error::{Error, Result};
use crate::reference::TimeShiftState;
use crate::simkit::closed_loop::{ClosedLoop, CoupledState, LoopMemory};
use crate::simkit::integrate::Integrator;

/// Bisection budget and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GovernorSettings {
    pub bisection_steps: usize,
    /// Stop once the bracket is narrower than this, TU.
    pub resolution: f64,
    /// Stop predictions at the first violation.
    pub short_circuit: bool,
}

impl GovernorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0) {
            return Err(Error::invalid("governor.resolution", "must be positive"));
        }
        Ok(())
    }
}

/// One sampled instant of a prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionSample {
    pub tau: f64,
    pub state: CoupledState,
    pub thrust: ThrustCommand,
    pub report: ConstraintReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    /// Recorded samples; empty unless recording was requested.
    pub trajectory: Vec<PredictionSample>,
    pub admissible: bool,
    pub first_violation: Option<(f64, ConstraintId)>,
    /// Set when the prediction aborted on a numerical failure.
    pub failure: Option<Error>,
    pub samples_checked: usize,
}

/// Simulates the closed loop from `x0` at `tau0` for `horizon` with a fixed
/// shift and checks every control instant.
#[allow(clippy::too_many_arguments)]
pub fn predict_closed_loop(
    loop_: &ClosedLoop<'_>,
    x0: &CoupledState,
    tau0: f64,
    shift: f64,
    horizon: f64,
    memory: &LoopMemory,
    short_circuit: bool,
    record: bool,
) -> PredictionResult {
    let mut result = PredictionResult {
        trajectory: Vec::new(),
        admissible: true,
        first_violation: None,
        failure: None,
        samples_checked: 0,
    };
    let grid = if horizon > 0.0 {
        loop_.grid(tau0, horizon)
    } else {
        vec![tau0]
    };
    let mut memory = *memory;
    let mut integ = Integrator::new(loop_.integrator);
    let mut state = *x0;
    let last = grid.len() - 1;
    for (i, &tau) in grid.iter().enumerate() {
        let step = loop_.evaluate(tau, &state, shift, &mut memory).map(|mut rec| {
            if i == last {
                let h5 = terminal_stability(
                    &rec.state.translation.to_vec6(),
                    &rec.target.to_vec6(),
                    loop_.constraints.epsilon,
                    &loop_.constraints.terminal_weights,
                );
                rec.report = with_terminal(rec.report, h5, loop_.constraints);
            }
            rec
        });
        let rec = match step {
            Ok(r) => r,
            Err(e) => {
                result.admissible = false;
                result.failure = Some(e);
                return result;
            }
        };
        result.samples_checked += 1;
        if record {
            result.trajectory.push(PredictionSample {
                tau,
                state,
                thrust: rec.control.thrust,
                report: rec.report,
            });
        }
        if !rec.report.admissible {
            result.admissible = false;
            if result.first_violation.is_none() {
                result.first_violation = rec.report.first_violation().map(|id| (tau, id));
            }
            if short_circuit {
                return result;
            }
        }
        if i < last {
            match loop_.advance(&rec, grid[i + 1], &mut integ) {
                Ok(s) => state = s,
                Err(e) => {
                    result.admissible = false;
                    result.failure = Some(e);
                    return result;
                }
            }
        }
    }
    result
}

/// Outcome of one governor update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftDecision {
    pub shift: f64,
    pub evaluations: usize,
    /// No candidate other than the current shift was found admissible.
    pub retained: bool,
}

/// Bisection selection over an arbitrary admissibility predicate.
///
/// Tries the bound closest to zero first; otherwise bisects between it and
/// the current shift and returns the admissible end of the final bracket.
pub fn select_shift<F>(current: &TimeShiftState, settings: &GovernorSettings, mut admissible: F) -> ShiftDecision
where
    F: FnMut(f64) -> bool,
{
    let (lo, hi) = current.bounds;
    let goal = 0f64.clamp(lo, hi);
    let s0 = current.shift;
    let mut evaluations = 0;
    let mut check = |s: f64| {
        evaluations += 1;
        admissible(s)
    };
    if s0 == goal {
        return ShiftDecision {
            shift: s0,
            evaluations: 0,
            retained: false,
        };
    }
    if check(goal) {
        return ShiftDecision {
            shift: goal,
            evaluations,
            retained: false,
        };
    }
    // bracket: `bad` is inadmissible, `good` is the best admissible so far
    let mut bad = goal;
    let mut good = s0;
    let mut found = false;
    for _ in 0..settings.bisection_steps {
        if (good - bad).abs() < settings.resolution {
            break;
        }
        let mid = 0.5 * (bad + good);
        if check(mid) {
            good = mid;
            found = true;
        } else {
            bad = mid;
        }
    }
    ShiftDecision {
        shift: good,
        evaluations,
        retained: !found,
    }
}

/// One governor update: predicts candidates from the current state and
/// returns the new shift.
pub fn update_time_shift(
    current: &TimeShiftState,
    x0: &CoupledState,
    tau: f64,
    loop_: &ClosedLoop<'_>,
    memory: &LoopMemory,
    settings: &GovernorSettings,
) -> (TimeShiftState, ShiftDecision) {
    let horizon = loop_.constraints.tau_pred;
    let decision = select_shift(current, settings, |s| {
        let p = predict_closed_loop(loop_, x0, tau, s, horizon, memory, settings.short_circuit, false);
        if let Some(e) = &p.failure {
            log::debug!("prediction at shift {s:.6e} failed: {e}");
        }
        p.admissible
    });
    (current.with_shift(decision.shift), decision)
}
