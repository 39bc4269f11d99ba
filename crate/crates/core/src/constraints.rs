//! Mission constraints in the `h <= 0` convention.

use serde::{Deserialize, Serialize};

use crate::dynamics::{TranslationalState, Vec3, Vec6};
use crate::error::{Error, Result};

/// Constraint thresholds, nondimensional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintParams {
    /// LoS half-cone angle, rad.
    pub alpha: f64,
    /// Thrust acceleration limit, LU/TU^2.
    pub u_max: f64,
    /// Thrust direction tolerance, rad.
    pub eta: f64,
    /// Range below which the approach-velocity limit applies, LU.
    pub gamma1: f64,
    /// Slope of the approach-velocity limit, 1/TU.
    pub gamma2: f64,
    /// Offset of the approach-velocity limit, LU/TU.
    pub gamma3: f64,
    /// Terminal ball radius on the stacked state difference.
    pub epsilon: f64,
    /// Prediction horizon, TU.
    pub tau_pred: f64,
    /// Include the terminal condition in admissibility.
    pub terminal_enabled: bool,
    /// Diagonal weights applied to the state difference in the terminal condition.
    pub terminal_weights: [f64; 6],
    /// Range below which the LoS cone is not enforced, LU. The cone test is
    /// a sign test on the relative position and turns into noise at the apex.
    #[serde(default)]
    pub apex_radius: f64,
}

impl ConstraintParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("u_max", self.u_max),
            ("eta", self.eta),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("epsilon", self.epsilon),
            ("tau_pred", self.tau_pred),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if self.alpha >= half_pi {
            return Err(Error::invalid("alpha", "must be below 90 deg"));
        }
        if self.eta >= half_pi {
            return Err(Error::invalid("eta", "must be below 90 deg"));
        }
        if !(self.apex_radius.is_finite() && self.apex_radius >= 0.0) {
            return Err(Error::invalid("apex_radius", "must be non-negative"));
        }
        if self.terminal_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("terminal_weights", "must be positive"));
        }
        Ok(())
    }
}

/// Which constraint was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    H1,
    H2,
    H3,
    H4,
    H5,
}

impl std::fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConstraintId::H1 => "h1",
            ConstraintId::H2 => "h2",
            ConstraintId::H3 => "h3",
            ConstraintId::H4 => "h4",
            ConstraintId::H5 => "h5",
        };
        f.write_str(s)
    }
}

/// Constraint values at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    /// Terminal value; `None` away from a horizon endpoint.
    pub h5: Option<f64>,
    /// Range exceeds the apex radius.
    pub h1_active: bool,
    pub h4_active: bool,
    pub admissible: bool,
}

impl ConstraintReport {
    /// First violated constraint in h1..h5 order.
    pub fn first_violation(&self) -> Option<ConstraintId> {
        if self.h1_active && self.h1 > 0.0 {
            Some(ConstraintId::H1)
        } else if self.h3 > 0.0 {
            Some(ConstraintId::H3)
        } else if self.h4_active && self.h4 > 0.0 {
            Some(ConstraintId::H4)
        } else if matches!(self.h5, Some(h) if h > 0.0) {
            Some(ConstraintId::H5)
        } else {
            None
        }
    }
}

/// LoS cone: `h1 = -v_c . dp + cos(alpha) |v_c| |dp|`.
pub fn los_cone(xd: &TranslationalState, xc: &TranslationalState, alpha: f64) -> f64 {
    let dp = xd.position - xc.position;
    let v = xc.velocity;
    -v.dot(&dp) + alpha.cos() * v.norm() * dp.norm()
}

/// `h2 = |u_d| - u_max`.
pub fn thrust_limit(u_d: &Vec3, u_max: f64) -> f64 {
    u_d.norm() - u_max
}

/// `h3 = -u_d . u + cos(eta) |u_d| |u|`.
pub fn thrust_direction(u_d: &Vec3, u: &Vec3, eta: f64) -> f64 {
    -u_d.dot(u) + eta.cos() * u_d.norm() * u.norm()
}

/// Approach velocity limit and whether it is active at the current range.
pub fn approach_velocity(xd: &TranslationalState, xc: &TranslationalState, params: &ConstraintParams) -> (f64, bool) {
    let rel = *xd - *xc;
    let d = rel.position.norm();
    let h4 = rel.velocity.norm() - params.gamma2 * d - params.gamma3;
    (h4, d <= params.gamma1)
}

/// `h5 = |W (Xd - Xv)| - epsilon` at the horizon end.
pub fn terminal_stability(xd_end: &Vec6, xv_end: &Vec6, epsilon: f64, weights: &[f64; 6]) -> f64 {
    let diff = xd_end - xv_end;
    let weighted = Vec6::from_fn(|i, _| diff[i] * weights[i]);
    weighted.norm() - epsilon
}

/// Evaluates h1..h4 and the admissibility verdict. `u_d` is the saturated
/// desired thrust and `u` the thrust actually applied.
pub fn evaluate(
    xd: &TranslationalState,
    xc: &TranslationalState,
    u_d: &Vec3,
    u: &Vec3,
    params: &ConstraintParams,
) -> ConstraintReport {
    let h1 = los_cone(xd, xc, params.alpha);
    let h1_active = (xd.position - xc.position).norm() > params.apex_radius;
    let h2 = thrust_limit(u_d, params.u_max);
    let h3 = thrust_direction(u_d, u, params.eta);
    let (h4, h4_active) = approach_velocity(xd, xc, params);
    let admissible = (!h1_active || h1 <= 0.0) && h3 <= 0.0 && (!h4_active || h4 <= 0.0);
    ConstraintReport {
        h1,
        h2,
        h3,
        h4,
        h5: None,
        h1_active,
        h4_active,
        admissible,
    }
}

/// Attaches a terminal value, folding it into admissibility when enabled.
pub fn with_terminal(mut report: ConstraintReport, h5: f64, params: &ConstraintParams) -> ConstraintReport {
    report.h5 = Some(h5);
    if params.terminal_enabled && h5 > 0.0 {
        report.admissible = false;
    }
    report
}
