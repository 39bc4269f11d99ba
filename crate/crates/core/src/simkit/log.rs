//! Simulation logs and their CSV / JSON forms.
//!
//! CSV rows hold nondimensional values; the first line is a comment giving
//! the unit of every column and the scales needed to dimensionalize them.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintReport;
use crate::dynamics::{TranslationalState, Vec3};
use crate::error::Result;
use crate::simkit::closed_loop::{CoupledState, StepRecord};
use crate::simkit::scenario::ScenarioConfig;

/// Column names and units, in CSV order.
pub const COLUMNS: &[(&str, &str)] = &[
    ("tau", "TU"),
    ("x", "LU"),
    ("y", "LU"),
    ("z", "LU"),
    ("vx", "LU/TU"),
    ("vy", "LU/TU"),
    ("vz", "LU/TU"),
    ("sigma1", "-"),
    ("sigma2", "-"),
    ("sigma3", "-"),
    ("omega1", "rad/TU"),
    ("omega2", "rad/TU"),
    ("omega3", "rad/TU"),
    ("chief_x", "LU"),
    ("chief_y", "LU"),
    ("chief_z", "LU"),
    ("chief_vx", "LU/TU"),
    ("chief_vy", "LU/TU"),
    ("chief_vz", "LU/TU"),
    ("target_x", "LU"),
    ("target_y", "LU"),
    ("target_z", "LU"),
    ("target_vx", "LU/TU"),
    ("target_vy", "LU/TU"),
    ("target_vz", "LU/TU"),
    ("ud_x", "LU/TU^2"),
    ("ud_y", "LU/TU^2"),
    ("ud_z", "LU/TU^2"),
    ("u_x", "LU/TU^2"),
    ("u_y", "LU/TU^2"),
    ("u_z", "LU/TU^2"),
    ("m_x", "kg m^2/TU^2"),
    ("m_y", "kg m^2/TU^2"),
    ("m_z", "kg m^2/TU^2"),
    ("e_c", "-"),
    ("e_w", "rad/TU"),
    ("shift", "TU"),
    ("h1", "LU^2/TU"),
    ("h2", "LU/TU^2"),
    ("h3", "LU^2/TU^4"),
    ("h4", "LU/TU"),
    ("h1_active", "bool"),
    ("h4_active", "bool"),
    ("admissible", "bool"),
    ("gated_off", "bool"),
    ("governor_update", "bool"),
];

/// One logged control instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSample {
    pub tau: f64,
    pub deputy: CoupledState,
    pub chief: TranslationalState,
    pub target: TranslationalState,
    pub u_desired: Vec3,
    pub u_applied: Vec3,
    pub moment: Vec3,
    pub e_c: f64,
    pub e_w: f64,
    pub shift: f64,
    pub report: ConstraintReport,
    pub gated_off: bool,
    /// The governor ran at this instant.
    pub governor_update: bool,
}

impl LogSample {
    pub fn from_record(rec: &StepRecord, governor_update: bool) -> Self {
        Self {
            tau: rec.tau,
            deputy: rec.state,
            chief: rec.chief,
            target: rec.target,
            u_desired: rec.control.thrust.desired,
            u_applied: rec.control.thrust.applied,
            moment: rec.control.moment,
            e_c: rec.control.e_c.norm(),
            e_w: rec.control.e_w.norm(),
            shift: rec.shift,
            report: rec.report,
            gated_off: rec.control.thrust.gated_off,
            governor_update,
        }
    }

    pub fn separation(&self) -> f64 {
        (self.deputy.translation.position - self.chief.position).norm()
    }

    pub fn relative_speed(&self) -> f64 {
        (self.deputy.translation.velocity - self.chief.velocity).norm()
    }

    fn values(&self) -> Vec<f64> {
        let d = &self.deputy;
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        let mut v = Vec::with_capacity(COLUMNS.len());
        v.push(self.tau);
        v.extend(d.translation.position.iter());
        v.extend(d.translation.velocity.iter());
        v.extend(d.attitude.sigma.0.iter());
        v.extend(d.attitude.omega.iter());
        v.extend(self.chief.position.iter());
        v.extend(self.chief.velocity.iter());
        v.extend(self.target.position.iter());
        v.extend(self.target.velocity.iter());
        v.extend(self.u_desired.iter());
        v.extend(self.u_applied.iter());
        v.extend(self.moment.iter());
        v.push(self.e_c);
        v.push(self.e_w);
        v.push(self.shift);
        v.push(self.report.h1);
        v.push(self.report.h2);
        v.push(self.report.h3);
        v.push(self.report.h4);
        v.push(b(self.report.h1_active));
        v.push(b(self.report.h4_active));
        v.push(b(self.report.admissible));
        v.push(b(self.gated_off));
        v.push(b(self.governor_update));
        v
    }
}

/// Scales and run settings needed to interpret a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogMeta {
    pub length_unit_km: f64,
    pub time_unit_s: f64,
    pub mu: f64,
    pub control_step: f64,
    pub update_period: f64,
    pub initial_shift: f64,
    pub governor_enabled: bool,
    /// Closed-loop predictions run by the governor.
    pub governor_predictions: usize,
    /// Updates where no shift closer to zero was admissible.
    pub governor_retained: usize,
    pub u_max: f64,
    pub eta: f64,
    pub alpha: f64,
    pub columns: Vec<String>,
    pub units: Vec<String>,
}

impl LogMeta {
    pub fn new(cfg: &ScenarioConfig, governor_enabled: bool, governor_predictions: usize, governor_retained: usize) -> Self {
        Self {
            length_unit_km: cfg.system.length_unit_km,
            time_unit_s: cfg.system.time_unit_s,
            mu: cfg.system.mu,
            control_step: cfg.control_step,
            update_period: cfg.governor.update_period,
            initial_shift: cfg.governor.initial_shift,
            governor_enabled,
            governor_predictions,
            governor_retained,
            u_max: cfg.constraints.u_max,
            eta: cfg.constraints.eta,
            alpha: cfg.constraints.alpha,
            columns: COLUMNS.iter().map(|c| c.0.to_owned()).collect(),
            units: COLUMNS.iter().map(|c| c.1.to_owned()).collect(),
        }
    }
}

/// Aggregate results of one run, in SI-style units for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub samples: usize,
    pub duration_tu: f64,
    pub initial_separation_km: f64,
    pub final_separation_km: f64,
    pub final_separation_m: f64,
    pub final_relative_speed_mm_s: f64,
    /// Configured initial shift for governed runs, else the fixed shift.
    pub initial_shift_min: f64,
    pub final_shift_min: f64,
    /// First time the shift reached zero, hours.
    pub shift_zero_time_h: Option<f64>,
    pub shift_non_increasing: bool,
    /// Samples with `admissible = false`.
    pub violation_count: usize,
    pub h1_violations: usize,
    pub h3_violations: usize,
    pub h4_violations: usize,
    pub max_h1: f64,
    pub max_h2: f64,
    pub max_applied_thrust_km_s2: f64,
    pub gated_off_samples: usize,
}

impl SimSummary {
    pub fn from_samples(meta: &LogMeta, samples: &[LogSample]) -> Self {
        let lu = meta.length_unit_km;
        let tu = meta.time_unit_s;
        let first = samples.first();
        let last = samples.last();
        let shift_non_increasing = samples.windows(2).all(|w| w[1].shift.abs() <= w[0].shift.abs());
        let max = |f: &dyn Fn(&LogSample) -> f64| samples.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let count = |f: &dyn Fn(&LogSample) -> bool| samples.iter().filter(|s| f(s)).count();
        let final_sep = last.map_or(f64::NAN, |s| s.separation() * lu);
        Self {
            samples: samples.len(),
            duration_tu: match (first, last) {
                (Some(a), Some(b)) => b.tau - a.tau,
                _ => 0.0,
            },
            initial_separation_km: first.map_or(f64::NAN, |s| s.separation() * lu),
            final_separation_km: final_sep,
            final_separation_m: final_sep * 1e3,
            final_relative_speed_mm_s: last.map_or(f64::NAN, |s| s.relative_speed() * lu / tu * 1e6),
            initial_shift_min: if meta.governor_enabled {
                meta.initial_shift * tu / 60.0
            } else {
                first.map_or(f64::NAN, |s| s.shift * tu / 60.0)
            },
            final_shift_min: last.map_or(f64::NAN, |s| s.shift * tu / 60.0),
            shift_zero_time_h: samples.iter().find(|s| s.shift == 0.0).map(|s| s.tau * tu / 3600.0),
            shift_non_increasing,
            violation_count: count(&|s| !s.report.admissible),
            h1_violations: count(&|s| s.report.h1_active && s.report.h1 > 0.0),
            h3_violations: count(&|s| s.report.h3 > 0.0),
            h4_violations: count(&|s| s.report.h4_active && s.report.h4 > 0.0),
            max_h1: max(&|s| s.report.h1),
            max_h2: max(&|s| s.report.h2),
            max_applied_thrust_km_s2: max(&|s| s.u_applied.norm()) * lu / (tu * tu),
            gated_off_samples: count(&|s| s.gated_off),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub meta: LogMeta,
    pub summary: SimSummary,
    pub samples: Vec<LogSample>,
}

/// JSON form: metadata and summary only; samples live in the CSV.
#[derive(Serialize)]
struct LogJson<'a> {
    meta: &'a LogMeta,
    summary: &'a SimSummary,
}

impl SimLog {
    pub fn new(meta: LogMeta, samples: Vec<LogSample>) -> Self {
        let summary = SimSummary::from_samples(&meta, &samples);
        Self {
            meta,
            summary,
            samples,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let units: Vec<String> = COLUMNS.iter().map(|(n, u)| format!("{n}[{u}]")).collect();
        writeln!(
            w,
            "# units: {}; LU = {} km; TU = {} s",
            units.join(" "),
            self.meta.length_unit_km,
            self.meta.time_unit_s
        )?;
        let names: Vec<&str> = COLUMNS.iter().map(|c| c.0).collect();
        writeln!(w, "{}", names.join(","))?;
        let mut line = String::new();
        for s in &self.samples {
            line.clear();
            for (i, v) in s.values().iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&LogJson {
            meta: &self.meta,
            summary: &self.summary,
        })
        .map_err(|e| crate::Error::Io(e.to_string()))
    }

    /// Writes `simlog.csv` and `simlog.json` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let f = std::io::BufWriter::new(std::fs::File::create(dir.join("simlog.csv"))?);
        self.write_csv(f)?;
        std::fs::write(dir.join("simlog.json"), self.to_json()?)?;
        Ok(())
    }
}

/// Reads back the numeric rows of a CSV log.
pub fn read_csv_rows(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| crate::Error::Io("empty log".into()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for l in lines {
        let row = l
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|e| crate::Error::Io(format!("bad value `{v}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
