//! Scenario files.
//!
//! A scenario file is TOML. Dimensional values are strings with a unit
//! suffix (`"20 deg"`, `"8.2e-8 km/s^2"`, `"15.828 min"`); bare numbers are
//! taken as nondimensional. Loading converts everything to LU/TU and yields a
//! [`ScenarioConfig`].
//!
//! The normalized form written by [`to_normalized_toml`] is itself a valid
//! input: it carries `format = "normalized"` and already nondimensional
//! values, so re-loading it gives back the identical configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attitude::AttitudeState;
use crate::constraints::ConstraintParams;
use crate::dynamics::{SystemParams, DEFAULT_SINGULARITY_FLOOR};
use crate::error::{Error, Result};
use crate::governor::GovernorSettings;
use crate::reference::CorrectionSettings;
use crate::simkit::integrate::{IntegratorSettings, Method};
use crate::simkit::scenario::{
    AttitudeSpec, DeputySpec, GovernorSpec, LqrSpec, MonteCarloSpec, OrbitSpec, ScenarioConfig,
};

const NORMALIZED: &str = "normalized";

/// Physical dimension of a configurable quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Speed,
    Acceleration,
    Rate,
    Angle,
    /// Attitude proportional gain, torque per radian.
    TorquePerAngle,
    /// Attitude derivative gain, torque per rad/s.
    TorquePerRate,
}

/// Scales for unit conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub length_km: f64,
    pub time_s: f64,
    /// Used by the `period` time unit, TU.
    pub period: f64,
}

impl Scales {
    /// Factor that turns a value in `unit` into nondimensional units.
    pub fn factor(&self, dim: Dimension, unit: &str) -> Option<f64> {
        let lu = self.length_km;
        let tu = self.time_s;
        let unit = unit.trim();
        let length = |u: &str| match u {
            "km" => Some(1.0 / lu),
            "m" => Some(1e-3 / lu),
            "cm" => Some(1e-5 / lu),
            "mm" => Some(1e-6 / lu),
            "LU" => Some(1.0),
            _ => None,
        };
        let time = |u: &str| match u {
            "s" => Some(1.0 / tu),
            "min" => Some(60.0 / tu),
            "h" => Some(3600.0 / tu),
            "day" => Some(86400.0 / tu),
            "TU" => Some(1.0),
            "period" => Some(self.period),
            _ => None,
        };
        match dim {
            Dimension::Length => length(unit),
            Dimension::Time => time(unit),
            Dimension::Speed => match unit {
                "km/s" => Some(tu / lu),
                "m/s" => Some(1e-3 * tu / lu),
                "cm/s" => Some(1e-5 * tu / lu),
                "mm/s" => Some(1e-6 * tu / lu),
                "LU/TU" => Some(1.0),
                _ => None,
            },
            Dimension::Acceleration => match unit {
                "km/s^2" => Some(tu * tu / lu),
                "m/s^2" => Some(1e-3 * tu * tu / lu),
                "LU/TU^2" => Some(1.0),
                _ => None,
            },
            Dimension::Rate => match unit {
                "1/s" | "rad/s" => Some(tu),
                "1/TU" | "rad/TU" => Some(1.0),
                _ => None,
            },
            Dimension::Angle => match unit {
                "deg" => Some(std::f64::consts::PI / 180.0),
                "rad" => Some(1.0),
                _ => None,
            },
            // N m = kg m^2 / s^2; moments are carried in kg m^2 / TU^2
            Dimension::TorquePerAngle => match unit {
                "N m/rad" => Some(tu * tu),
                _ => None,
            },
            Dimension::TorquePerRate => match unit {
                "N m s/rad" => Some(tu),
                _ => None,
            },
        }
    }

    /// Inverse of [`Scales::factor`].
    pub fn to_unit(&self, value: f64, dim: Dimension, unit: &str) -> f64 {
        value / self.factor(dim, unit).unwrap_or(f64::NAN)
    }
}

/// A number or a `"<number> <unit>"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Bare(f64),
    WithUnit(String),
}

impl Quantity {
    pub fn resolve(&self, name: &str, dim: Dimension, scales: &Scales) -> Result<f64> {
        match self {
            Quantity::Bare(v) => Ok(*v),
            Quantity::WithUnit(s) => {
                let s = s.trim();
                let split = s.find(char::is_whitespace).ok_or_else(|| {
                    Error::Config(format!("`{name}`: expected \"<number> <unit>\", got \"{s}\""))
                })?;
                let (num, unit) = s.split_at(split);
                let v: f64 = num
                    .parse()
                    .map_err(|_| Error::Config(format!("`{name}`: bad number \"{num}\"")))?;
                let f = scales
                    .factor(dim, unit)
                    .ok_or_else(|| Error::Config(format!("`{name}`: unit \"{}\" is not a {dim:?}", unit.trim())))?;
                Ok(v * f)
            }
        }
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Bare(v)
    }
}

fn q(v: &str) -> Quantity {
    Quantity::WithUnit(v.to_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub mu: f64,
    pub length_unit: Quantity,
    pub time_unit: Quantity,
    pub mu_sun: f64,
    pub a_sun: Quantity,
    pub omega_sun: Quantity,
    #[serde(default = "zero_angle")]
    pub theta0: Quantity,
    #[serde(default = "default_floor")]
    pub singularity_floor: f64,
}

fn zero_angle() -> Quantity {
    Quantity::Bare(0.0)
}

fn default_floor() -> f64 {
    DEFAULT_SINGULARITY_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSection {
    pub x0: Quantity,
    pub z0: Quantity,
    pub vy0: Quantity,
    pub period: Quantity,
    #[serde(default = "default_orbit_tol")]
    pub tol: f64,
    #[serde(default = "default_orbit_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_nodes")]
    pub nodes_per_period: usize,
}

fn default_orbit_tol() -> f64 {
    CorrectionSettings::default().tol
}
fn default_orbit_iterations() -> usize {
    CorrectionSettings::default().max_iterations
}
fn default_nodes() -> usize {
    CorrectionSettings::default().nodes_per_period
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqrSection {
    pub q_position: f64,
    pub q_velocity: f64,
    pub r: f64,
    #[serde(default = "default_averaging")]
    pub averaging_samples: usize,
}

fn default_averaging() -> usize {
    240
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeSection {
    /// Principal moments, kg m^2, or a full row-major 3x3 tensor.
    pub inertia: Vec<f64>,
    pub kp: Quantity,
    pub kd: Quantity,
    #[serde(default = "yes")]
    pub slow_reference: bool,
    #[serde(default)]
    pub literal_unit_rates: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    pub alpha: Quantity,
    pub u_max: Quantity,
    pub eta: Quantity,
    pub gamma1: Quantity,
    pub gamma2: Quantity,
    pub gamma3: Quantity,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub horizon: Quantity,
    #[serde(default)]
    pub terminal_enabled: bool,
    #[serde(default = "unit_weights")]
    pub terminal_weights: [f64; 6],
    #[serde(default = "default_apex")]
    pub apex_radius: Quantity,
}

fn default_epsilon() -> f64 {
    1e-4
}
fn default_apex() -> Quantity {
    q("1 cm")
}
fn unit_weights() -> [f64; 6] {
    [1.0; 6]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernorSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub initial_shift: Quantity,
    /// Defaults to `[0, initial_shift]`.
    #[serde(default)]
    pub bounds: Option<[Quantity; 2]>,
    pub update_period: Quantity,
    #[serde(default = "default_bisection")]
    pub bisection_steps: usize,
    #[serde(default = "default_resolution")]
    pub resolution: Quantity,
    #[serde(default = "yes")]
    pub short_circuit: bool,
    #[serde(default)]
    pub translation_only_prediction: bool,
}

fn default_bisection() -> usize {
    12
}
fn default_resolution() -> Quantity {
    q("1 s")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DeputySection {
    /// Explicit position, overriding placement on the orbit.
    #[serde(default)]
    pub position: Option<[Quantity; 3]>,
    #[serde(default)]
    pub velocity: Option<[Quantity; 3]>,
    #[serde(default)]
    pub offset_position: Option<[Quantity; 3]>,
    #[serde(default)]
    pub offset_velocity: Option<[Quantity; 3]>,
    /// Explicit MRP; aligned with the desired attitude when absent.
    #[serde(default)]
    pub mrp: Option<[f64; 3]>,
    #[serde(default)]
    pub body_rate: Option<[Quantity; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub step: Option<Quantity>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_method() -> String {
    "dopri5".into()
}
fn default_rtol() -> f64 {
    IntegratorSettings::default().rtol
}
fn default_atol() -> f64 {
    IntegratorSettings::default().atol
}
fn default_max_steps() -> usize {
    IntegratorSettings::default().max_steps
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            step: None,
            rtol: default_rtol(),
            atol: default_atol(),
            max_steps: default_max_steps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub control_step: Quantity,
    pub duration: Quantity,
    #[serde(default = "default_chief_nodes")]
    pub chief_nodes_per_period: usize,
}

fn default_chief_nodes() -> usize {
    4000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default)]
    pub seed: u64,
    pub position_sigma: Quantity,
    pub velocity_sigma: Quantity,
    #[serde(default = "default_draws")]
    pub max_draws: usize,
}

fn default_draws() -> usize {
    10_000
}

/// A scenario file as written by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSection,
    pub orbit: OrbitSection,
    pub lqr: LqrSection,
    pub attitude: AttitudeSection,
    pub constraints: ConstraintSection,
    pub governor: GovernorSection,
    #[serde(default)]
    pub deputy: DeputySection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    pub simulation: SimulationSection,
    pub monte_carlo: MonteCarloSection,
}

fn vec3(name: &str, v: &[Quantity; 3], dim: Dimension, s: &Scales) -> Result<[f64; 3]> {
    Ok([
        v[0].resolve(name, dim, s)?,
        v[1].resolve(name, dim, s)?,
        v[2].resolve(name, dim, s)?,
    ])
}

impl ScenarioFile {
    /// Converts to nondimensional form.
    pub fn normalize(&self) -> Result<ScenarioConfig> {
        use Dimension::*;
        let sys = &self.system;
        let raw = Scales {
            length_km: 1.0,
            time_s: 1.0,
            period: f64::NAN,
        };
        let length_unit_km = sys.length_unit.resolve("system.length_unit", Length, &raw)?;
        let time_unit_s = sys.time_unit.resolve("system.time_unit", Time, &raw)?;
        if !(length_unit_km > 0.0 && time_unit_s > 0.0) {
            return Err(Error::Config("length and time units must be positive".into()));
        }
        let mut scales = Scales {
            length_km: length_unit_km,
            time_s: time_unit_s,
            period: f64::NAN,
        };
        let system = SystemParams {
            mu: sys.mu,
            mu_sun: sys.mu_sun,
            a_sun: sys.a_sun.resolve("system.a_sun", Length, &scales)?,
            omega_sun: sys.omega_sun.resolve("system.omega_sun", Rate, &scales)?,
            theta0: sys.theta0.resolve("system.theta0", Angle, &scales)?,
            length_unit_km,
            time_unit_s,
            singularity_floor: sys.singularity_floor,
        };

        let o = &self.orbit;
        let period_guess = o.period.resolve("orbit.period", Time, &scales)?;
        scales.period = period_guess;

        let integrator = match self.integrator.method.as_str() {
            "dopri5" => IntegratorSettings {
                method: Method::Dopri5,
                rtol: self.integrator.rtol,
                atol: self.integrator.atol,
                max_steps: self.integrator.max_steps,
                ..IntegratorSettings::default()
            },
            "rk4" => {
                let step = self
                    .integrator
                    .step
                    .as_ref()
                    .ok_or_else(|| Error::Config("integrator.step is required for rk4".into()))?
                    .resolve("integrator.step", Time, &scales)?;
                IntegratorSettings {
                    max_steps: self.integrator.max_steps,
                    ..IntegratorSettings::rk4(step)
                }
            }
            other => return Err(Error::Config(format!("unknown integrator method \"{other}\""))),
        };

        let orbit = OrbitSpec {
            x0: o.x0.resolve("orbit.x0", Length, &scales)?,
            z0: o.z0.resolve("orbit.z0", Length, &scales)?,
            vy0: o.vy0.resolve("orbit.vy0", Speed, &scales)?,
            period_guess,
            correction: CorrectionSettings {
                tol: o.tol,
                max_iterations: o.max_iterations,
                nodes_per_period: o.nodes_per_period,
                ..CorrectionSettings::default()
            },
        };

        let l = &self.lqr;
        let lqr = LqrSpec {
            q_diag: [l.q_position, l.q_position, l.q_position, l.q_velocity, l.q_velocity, l.q_velocity],
            r_diag: [l.r; 3],
            averaging_samples: l.averaging_samples,
        };

        let a = &self.attitude;
        let inertia = match a.inertia.len() {
            3 => [
                [a.inertia[0], 0.0, 0.0],
                [0.0, a.inertia[1], 0.0],
                [0.0, 0.0, a.inertia[2]],
            ],
            9 => [
                [a.inertia[0], a.inertia[1], a.inertia[2]],
                [a.inertia[3], a.inertia[4], a.inertia[5]],
                [a.inertia[6], a.inertia[7], a.inertia[8]],
            ],
            n => return Err(Error::Config(format!("attitude.inertia needs 3 or 9 entries, got {n}"))),
        };
        let attitude = AttitudeSpec {
            inertia,
            kp: a.kp.resolve("attitude.kp", TorquePerAngle, &scales)?,
            kd: a.kd.resolve("attitude.kd", TorquePerRate, &scales)?,
            slow_reference: a.slow_reference,
            literal_unit_rates: a.literal_unit_rates,
        };

        let c = &self.constraints;
        let constraints = ConstraintParams {
            alpha: c.alpha.resolve("constraints.alpha", Angle, &scales)?,
            u_max: c.u_max.resolve("constraints.u_max", Acceleration, &scales)?,
            eta: c.eta.resolve("constraints.eta", Angle, &scales)?,
            gamma1: c.gamma1.resolve("constraints.gamma1", Length, &scales)?,
            gamma2: c.gamma2.resolve("constraints.gamma2", Rate, &scales)?,
            gamma3: c.gamma3.resolve("constraints.gamma3", Speed, &scales)?,
            epsilon: c.epsilon,
            tau_pred: c.horizon.resolve("constraints.horizon", Time, &scales)?,
            terminal_enabled: c.terminal_enabled,
            terminal_weights: c.terminal_weights,
            apex_radius: c.apex_radius.resolve("constraints.apex_radius", Length, &scales)?,
        };

        let g = &self.governor;
        let initial_shift = g.initial_shift.resolve("governor.initial_shift", Time, &scales)?;
        let bounds = match &g.bounds {
            Some([lo, hi]) => (
                lo.resolve("governor.bounds", Time, &scales)?,
                hi.resolve("governor.bounds", Time, &scales)?,
            ),
            None => (initial_shift.min(0.0), initial_shift.max(0.0)),
        };
        let governor = GovernorSpec {
            enabled: g.enabled,
            initial_shift,
            bounds,
            update_period: g.update_period.resolve("governor.update_period", Time, &scales)?,
            settings: GovernorSettings {
                bisection_steps: g.bisection_steps,
                resolution: g.resolution.resolve("governor.resolution", Time, &scales)?,
                short_circuit: g.short_circuit,
            },
            translation_only_prediction: g.translation_only_prediction,
        };

        let d = &self.deputy;
        let state = match (&d.position, &d.velocity) {
            (Some(p), Some(v)) => {
                let p = vec3("deputy.position", p, Length, &scales)?;
                let v = vec3("deputy.velocity", v, Speed, &scales)?;
                Some([p[0], p[1], p[2], v[0], v[1], v[2]])
            }
            (None, None) => None,
            _ => return Err(Error::Config("deputy.position and deputy.velocity go together".into())),
        };
        let zero3 = [0.0; 3];
        let op = match &d.offset_position {
            Some(p) => vec3("deputy.offset_position", p, Length, &scales)?,
            None => zero3,
        };
        let ov = match &d.offset_velocity {
            Some(v) => vec3("deputy.offset_velocity", v, Speed, &scales)?,
            None => zero3,
        };
        let attitude_init = match (d.mrp, &d.body_rate) {
            (None, None) => None,
            (sigma, rate) => {
                let w = match rate {
                    Some(r) => vec3("deputy.body_rate", r, Rate, &scales)?,
                    None => zero3,
                };
                Some(AttitudeState::new(
                    crate::attitude::Mrp(sigma.unwrap_or(zero3).into()),
                    w.into(),
                ))
            }
        };
        let deputy = DeputySpec {
            state,
            offset: [op[0], op[1], op[2], ov[0], ov[1], ov[2]],
            attitude: attitude_init,
        };

        let s = &self.simulation;
        let m = &self.monte_carlo;
        let cfg = ScenarioConfig {
            system,
            orbit,
            lqr,
            attitude,
            constraints,
            governor,
            deputy,
            integrator,
            control_step: s.control_step.resolve("simulation.control_step", Time, &scales)?,
            duration: s.duration.resolve("simulation.duration", Time, &scales)?,
            chief_nodes_per_period: s.chief_nodes_per_period,
            monte_carlo: MonteCarloSpec {
                seed: m.seed,
                position_sigma: m.position_sigma.resolve("monte_carlo.position_sigma", Length, &scales)?,
                velocity_sigma: m.velocity_sigma.resolve("monte_carlo.velocity_sigma", Speed, &scales)?,
                max_draws: m.max_draws,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize, Deserialize)]
struct NormalizedFile {
    format: String,
    #[serde(flatten)]
    config: ScenarioConfig,
}

/// Applies `key.path=value` overrides to a parsed document. Values are
/// parsed as TOML, falling back to a plain string.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{item}` is not KEY=VALUE")))?;
        let path = path.trim();
        let raw = raw.trim();
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.to_owned())),
            Err(_) => toml::Value::String(raw.to_owned()),
        };
        let keys: Vec<&str> = path.split('.').collect();
        let (last, parents) = keys
            .split_last()
            .ok_or_else(|| Error::Config(format!("override `{item}` has an empty key")))?;
        let mut table = &mut *doc;
        for k in parents {
            let entry = table
                .entry((*k).to_owned())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override `{path}`: `{k}` is not a table")))?;
        }
        table.insert((*last).to_owned(), value);
    }
    Ok(())
}

/// Parses scenario text (hand-written or normalized) with overrides.
pub fn parse_scenario(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    apply_overrides(&mut doc, overrides)?;
    let normalized = doc.get("format").and_then(|v| v.as_str()) == Some(NORMALIZED);
    let value = toml::Value::Table(doc);
    if normalized {
        let f: NormalizedFile = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        f.config.validate()?;
        Ok(f.config)
    } else {
        let f: ScenarioFile = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        f.normalize()
    }
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text, overrides)
}

/// Nondimensional TOML that [`parse_scenario`] reads back unchanged.
pub fn to_normalized_toml(cfg: &ScenarioConfig) -> Result<String> {
    toml::to_string(&NormalizedFile {
        format: NORMALIZED.into(),
        config: cfg.clone(),
    })
    .map_err(|e| Error::Config(e.to_string()))
}

/// Rounds to 12 significant digits to hide conversion round-off.
fn tidy(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// Key constants in mission units, one `name = value unit` per line.
pub fn dimensional_echo(cfg: &ScenarioConfig) -> Vec<String> {
    use Dimension::*;
    let scales = Scales {
        length_km: cfg.system.length_unit_km,
        time_s: cfg.system.time_unit_s,
        period: cfg.orbit.period_guess,
    };
    let to = |v: f64, d: Dimension, u: &str| tidy(scales.to_unit(v, d, u));
    let c = &cfg.constraints;
    let g = &cfg.governor;
    vec![
        format!("alpha = {} deg", to(c.alpha, Angle, "deg")),
        format!("eta = {} deg", to(c.eta, Angle, "deg")),
        format!("gamma1 = {} km", to(c.gamma1, Length, "km")),
        format!("gamma2 = {:e} 1/s", to(c.gamma2, Rate, "1/s")),
        format!("gamma3 = {:e} km/s", to(c.gamma3, Speed, "km/s")),
        format!("u_max = {:e} km/s^2", to(c.u_max, Acceleration, "km/s^2")),
        format!("apex_radius = {} m", to(c.apex_radius, Length, "m")),
        format!("horizon = {} h", to(c.tau_pred, Time, "h")),
        format!("initial_shift = {} min", to(g.initial_shift, Time, "min")),
        format!("update_period = {} min", to(g.update_period, Time, "min")),
        format!("control_step = {} s", to(cfg.control_step, Time, "s")),
        format!("duration = {} day", to(cfg.duration, Time, "day")),
        format!("governor = {}", if g.enabled { "enabled" } else { "disabled" }),
    ]
}
