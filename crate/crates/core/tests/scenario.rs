//! End-to-end behavior of the closed loop, governor predictions, Monte Carlo
//! campaigns and log files.

use std::path::PathBuf;

use nrho_rvd::config::load_scenario;
use nrho_rvd::constraints::ConstraintId;
use nrho_rvd::dynamics::{TranslationalState, Vec3, Vec6};
use nrho_rvd::governor::predict_closed_loop;
use nrho_rvd::reference::Track;
use nrho_rvd::simkit::closed_loop::{aligned_attitude, CoupledState, LoopMemory};
use nrho_rvd::simkit::log::{read_csv_rows, SimLog, COLUMNS};
use nrho_rvd::simkit::scenario::{monte_carlo_prepared, PreparedScenario, RunOptions};
use nrho_rvd::simkit::{monte_carlo, run_scenario, ScenarioConfig};

fn config(overrides: &[&str]) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper.toml");
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    load_scenario(&path, &o).unwrap()
}

/// Paper scenario cut to one day with a matching horizon.
fn short_config() -> ScenarioConfig {
    config(&["simulation.duration=\"1 day\"", "constraints.horizon=\"1 day\""])
}

fn governed() -> RunOptions {
    RunOptions {
        governor_enabled: true,
        perturbation: Vec6::zeros(),
    }
}

fn check_log_invariants(log: &SimLog, cfg: &ScenarioConfig) {
    let c = &cfg.constraints;
    let steps = cfg.steps_per_update().unwrap();
    assert!(log.samples.windows(2).all(|w| w[1].tau > w[0].tau));
    for (k, s) in log.samples.iter().enumerate() {
        let u = s.u_applied.norm();
        assert!(u <= c.u_max * (1.0 + 1e-12), "applied thrust {u:e} above the limit at sample {k}");
        assert!(s.u_desired.norm() <= c.u_max * (1.0 + 1e-12));
        if u > 0.0 {
            let angle = (s.u_applied.dot(&s.u_desired) / (u * s.u_desired.norm())).clamp(-1.0, 1.0).acos();
            assert!(angle <= c.eta + 1e-9, "thrust {angle} rad off the command at sample {k}");
        }
        if log.meta.governor_enabled && k + 1 < log.samples.len() {
            assert_eq!(s.governor_update, k % steps == 0, "update flag at sample {k}");
        }
        let (orth, det) = s.deputy.attitude.dcm().orthonormality_error();
        assert!(orth < 1e-12 && det < 1e-12);
        assert!(s.deputy.attitude.sigma.norm() <= 1.0);
    }
    let violations = log.samples.iter().filter(|s| !s.report.admissible).count();
    assert_eq!(log.summary.violation_count, violations);
}

#[test]
fn regulation_on_the_chief_stays_admissible() {
    let cfg = config(&["governor.initial_shift=\"0 min\""]);
    let log = run_scenario(&cfg, true).unwrap();
    let lu = cfg.system.length_unit_km;
    let worst_m = log.samples.iter().map(|s| s.separation() * lu * 1e3).fold(0.0, f64::max);
    assert!(worst_m < 0.01, "drifted {worst_m} m from the Chief");
    assert_eq!(log.summary.violation_count, 0);
    assert_eq!(log.meta.governor_predictions, 0);
    check_log_invariants(&log, &cfg);
}

#[test]
fn governed_and_ungoverned_logs_respect_invariants() {
    let cfg = short_config();
    let prepared = PreparedScenario::new(cfg.clone()).unwrap();
    let g = prepared.run(&governed()).unwrap();
    check_log_invariants(&g, &cfg);
    assert!(g.summary.shift_non_increasing);
    assert!(g.summary.final_shift_min < g.summary.initial_shift_min);
    assert!(g.meta.governor_predictions > 0);
    let u = prepared
        .run(&RunOptions {
            governor_enabled: false,
            ..governed()
        })
        .unwrap();
    check_log_invariants(&u, &cfg);
    assert!(u.samples.iter().all(|s| s.shift == 0.0));
}

#[test]
fn nominal_deputy_is_one_shift_ahead_on_the_track() {
    let cfg = short_config();
    let prepared = PreparedScenario::new(cfg.clone()).unwrap();
    let x = prepared.initial_state(&Vec6::zeros()).unwrap();
    assert_eq!(x.translation, prepared.chief.state_at(cfg.governor.initial_shift));
    let km = (x.translation.position - prepared.chief.state_at(0.0).position).norm() * cfg.system.length_unit_km;
    // 15.828 min ahead near apolune is roughly a hundred kilometres
    assert!(km > 50.0 && km < 300.0, "{km} km");
    assert!(prepared.initially_admissible(&x.translation));
}

#[test]
fn degenerate_monte_carlo_reproduces_the_single_run() {
    let cfg = config(&[
        "simulation.duration=\"1 day\"",
        "constraints.horizon=\"1 day\"",
        "monte_carlo.position_sigma=\"0 km\"",
        "monte_carlo.velocity_sigma=\"0 km/s\"",
    ]);
    let single = run_scenario(&cfg, true).unwrap();
    let runs = monte_carlo(&cfg, 1, 99, true).unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].perturbation, Vec6::zeros());
    assert_eq!(runs[0].log, single);
}

#[test]
fn monte_carlo_is_deterministic_in_the_seed() {
    let prepared = PreparedScenario::new(config(&["simulation.duration=\"6 h\"", "constraints.horizon=\"6 h\""])).unwrap();
    let a = monte_carlo_prepared(&prepared, 3, 7, true).unwrap();
    let b = monte_carlo_prepared(&prepared, 3, 7, true).unwrap();
    assert_eq!(a, b);
    let c = prepared.draw_perturbations(3, 8).unwrap();
    assert_ne!(a.iter().map(|r| r.perturbation).collect::<Vec<_>>(), c);
    for r in &a {
        let x = prepared.initial_state(&r.perturbation).unwrap();
        assert!(prepared.initially_admissible(&x.translation));
    }
}

#[test]
fn csv_and_json_agree() {
    let cfg = config(&["simulation.duration=\"3 h\"", "constraints.horizon=\"3 h\""]);
    let log = run_scenario(&cfg, true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    log.write_files(dir.path()).unwrap();

    let text = std::fs::read_to_string(dir.path().join("simlog.csv")).unwrap();
    assert!(text.lines().next().unwrap().starts_with("# units: tau[TU]"));
    let (header, rows) = read_csv_rows(&text).unwrap();
    assert_eq!(header, COLUMNS.iter().map(|c| c.0).collect::<Vec<_>>());
    assert_eq!(rows.len(), log.samples.len());

    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (row, s) in rows.iter().zip(&log.samples) {
        assert_eq!(row[col("tau")], s.tau);
        assert_eq!(row[col("shift")], s.shift);
        assert_eq!(row[col("h1")], s.report.h1);
        assert_eq!(row[col("admissible")] == 1.0, s.report.admissible);
    }
    let last = rows.last().unwrap();
    let rel = Vec3::new(
        last[col("x")] - last[col("chief_x")],
        last[col("y")] - last[col("chief_y")],
        last[col("z")] - last[col("chief_z")],
    );
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("simlog.json")).unwrap()).unwrap();
    let lu = json["meta"]["length_unit_km"].as_f64().unwrap();
    let final_m = json["summary"]["final_separation_m"].as_f64().unwrap();
    assert_eq!(rel.norm() * lu * 1e3, final_m);
    let violations: usize = rows.iter().filter(|r| r[col("admissible")] == 0.0).count();
    assert_eq!(json["summary"]["violation_count"].as_u64().unwrap() as usize, violations);
}

#[test]
fn zero_horizon_prediction_checks_one_sample() {
    let prepared = PreparedScenario::new(short_config()).unwrap();
    let x0 = prepared.initial_state(&Vec6::zeros()).unwrap();
    let loop_ = prepared.prediction_loop();
    let s = prepared.config.governor.initial_shift;
    let p = predict_closed_loop(&loop_, &x0, 0.0, s, 0.0, &LoopMemory::default(), true, true);
    assert_eq!(p.samples_checked, 1);
    assert_eq!(p.trajectory.len(), 1);
    assert!(p.admissible);
}

#[test]
fn deputy_beside_the_chief_violates_the_cone() {
    let prepared = PreparedScenario::new(short_config()).unwrap();
    let chief = prepared.chief.state_at(0.0);
    let side = chief.velocity.cross(&Vec3::z()).normalize() * (2.0 / prepared.config.system.length_unit_km);
    let translation = TranslationalState::new(chief.position + side, chief.velocity);
    let loop_ = prepared.prediction_loop();
    let attitude = aligned_attitude(&loop_, 0.0, &translation, 0.0).unwrap();
    let x0 = CoupledState::new(translation, attitude);
    let p = predict_closed_loop(&loop_, &x0, 0.0, 0.0, 0.05, &LoopMemory::default(), true, false);
    assert!(!p.admissible);
    assert_eq!(p.first_violation.map(|v| v.1), Some(ConstraintId::H1));
    assert_eq!(p.first_violation.map(|v| v.0), Some(0.0));
}

#[test]
fn invalid_scenarios_are_rejected_before_running() {
    let mut cfg = short_config();
    cfg.governor.update_period = cfg.control_step * 1.5;
    assert!(PreparedScenario::new(cfg).is_err());
    let mut cfg = short_config();
    cfg.monte_carlo.max_draws = 0;
    assert!(run_scenario(&cfg, true).is_err());
    assert!(monte_carlo(&short_config(), 0, 1, true).is_err());
}
