//! Independent oracles for the dynamics, reference orbit and attitude models.

use approx::assert_relative_eq;
use nalgebra::SVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use nrho_rvd::attitude::{euler_dynamics, mrp_kinematics, InertiaTensor, Mrp};
use nrho_rvd::control::averaged_pair;
use nrho_rvd::dynamics::{
    derivative_vec6, linearize_translational, pseudo_potentials, SystemParams, TranslationalState, Vec3, Vec6,
};
use nrho_rvd::reference::{
    chief_state, correct_periodic_orbit, stm_propagate, virtual_target, CorrectionSettings, ReferenceOrbit,
    TimeShiftState, Track,
};
use nrho_rvd::simkit::integrate::{Integrator, IntegratorSettings};

const MU: f64 = 0.01215;

fn bcr4bp() -> SystemParams {
    SystemParams {
        mu_sun: 328_900.54,
        a_sun: 149_598_023.0 / 384_399.0,
        ..SystemParams::cr3bp(MU, 384_399.0, 375_192.716_7)
    }
}

fn guess() -> TranslationalState {
    TranslationalState::new(Vec3::new(1.0221, 0.0, -0.1821), Vec3::new(0.0, -0.1033, 0.0))
}

fn orbit() -> ReferenceOrbit {
    let p = bcr4bp().without_sun();
    correct_periodic_orbit(&guess(), 1.5111, &p, &CorrectionSettings::default()).unwrap()
}

/// Rotating-frame CR3BP field written out component by component.
fn cr3bp_field(x: &Vec6) -> Vec6 {
    let (px, py, pz) = (x[0], x[1], x[2]);
    let r1 = ((px + MU).powi(2) + py * py + pz * pz).sqrt();
    let r2 = ((px - 1.0 + MU).powi(2) + py * py + pz * pz).sqrt();
    let c1 = (1.0 - MU) / r1.powi(3);
    let c2 = MU / r2.powi(3);
    Vec6::new(
        x[3],
        x[4],
        x[5],
        2.0 * x[4] + px - c1 * (px + MU) - c2 * (px - 1.0 + MU),
        -2.0 * x[3] + py - c1 * py - c2 * py,
        -c1 * pz - c2 * pz,
    )
}

#[test]
fn sunless_field_matches_cr3bp() {
    let p = bcr4bp().without_sun();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..200 {
        let x = Vec6::from_fn(|i, _| {
            if i < 3 {
                rng.random_range(-1.5..1.5)
            } else {
                rng.random_range(-0.5..0.5)
            }
        });
        let tau = rng.random_range(0.0..10.0);
        let got = derivative_vec6(tau, &x, &Vec3::zeros(), &p).unwrap();
        let want = cr3bp_field(&x);
        for i in 0..6 {
            assert_relative_eq!(got[i], want[i], epsilon = 1e-13, max_relative = 1e-13);
        }
        let (_, gamma) = pseudo_potentials(&TranslationalState::from_vec6(&x), tau, &p).unwrap();
        assert_eq!(gamma, 0.0);
    }
}

#[test]
fn centrifugal_term_vanishes_on_z_axis() {
    let p = bcr4bp().without_sun();
    let s = TranslationalState::new(Vec3::new(0.0, 0.0, 1.0), Vec3::zeros());
    let (u, _) = pseudo_potentials(&s, 0.0, &p).unwrap();
    let r1 = (MU * MU + 1.0f64).sqrt();
    let r2 = ((1.0 - MU).powi(2) + 1.0f64).sqrt();
    assert_relative_eq!(u, (1.0 - MU) / r1 + MU / r2, max_relative = 1e-15);
}

#[test]
fn stm_matches_finite_differences_of_the_flow() {
    let params = bcr4bp();
    let settings = IntegratorSettings::rk4(1e-3);
    let x0 = orbit().initial_state;
    let (tau0, tau1) = (0.1, 0.5);
    let (_, phi) = stm_propagate(&x0, tau0, tau1, &params, &settings).unwrap();
    let flow = |x: Vec6| {
        let mut f = |t: f64, y: &Vec6| derivative_vec6(t, y, &Vec3::zeros(), &params);
        Integrator::new(settings).propagate(&mut f, tau0, x, tau1).unwrap()
    };
    let eps = 1e-8;
    for j in 0..6 {
        let mut e = Vec6::zeros();
        e[j] = eps;
        let col = (flow(x0.to_vec6() + e) - flow(x0.to_vec6() - e)) / (2.0 * eps);
        for i in 0..6 {
            let scale = phi.column(j).amax();
            assert!(
                (col[i] - phi[(i, j)]).abs() <= 1e-4 * scale,
                "phi[{i},{j}] = {} vs {}",
                phi[(i, j)],
                col[i]
            );
        }
    }
}

#[test]
fn sunless_stm_preserves_volume() {
    let params = bcr4bp().without_sun();
    let x0 = orbit().initial_state;
    let (_, phi) = stm_propagate(&x0, 0.0, 0.3, &params, &IntegratorSettings::default()).unwrap();
    assert!((phi.determinant() - 1.0).abs() < 1e-6, "det = {}", phi.determinant());
}

#[test]
fn converged_orbit_is_a_fixed_point() {
    let o = orbit();
    let p = bcr4bp().without_sun();
    let again = correct_periodic_orbit(&o.initial_state, o.period, &p, &CorrectionSettings::default()).unwrap();
    assert_eq!(again.iterations, 0);
    assert_eq!(again.initial_state, o.initial_state);
    assert_eq!(again.period, o.period);
}

#[test]
fn perturbed_orbit_reconverges() {
    // z is the family parameter and stays fixed; the free variables move
    let o = orbit();
    let p = bcr4bp().without_sun();
    let mut g = o.initial_state;
    g.position.x += 1e-6;
    g.velocity.y += 1e-6;
    let again = correct_periodic_orbit(&g, o.period + 1e-6, &p, &CorrectionSettings::default()).unwrap();
    assert!(again.residual < 1e-10);
    assert!((again.initial_state.to_vec6() - o.initial_state.to_vec6()).amax() < 1e-9);
    assert!((again.period - o.period).abs() < 1e-9);
}

#[test]
fn chief_lookup_is_periodic_and_matches_integration() {
    let o = orbit();
    let p = bcr4bp().without_sun();
    assert_eq!(chief_state(0.0, &o), o.initial_state);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut f = |t: f64, y: &Vec6| derivative_vec6(t, y, &Vec3::zeros(), &p);
    let settings = IntegratorSettings::with_tolerances(1e-12, 1e-13);
    for _ in 0..50 {
        let tau = rng.random_range(0.0..o.period);
        let direct = Integrator::new(settings).propagate(&mut f, 0.0, o.initial_state.to_vec6(), tau).unwrap();
        let looked_up = chief_state(tau, &o).to_vec6();
        assert!((direct - looked_up).amax() < 1e-8, "tau {tau}: {:e}", (direct - looked_up).amax());
        let later = chief_state(tau + o.period, &o).to_vec6();
        assert!((later - looked_up).amax() < 1e-9);
    }
}

#[test]
fn virtual_target_shifts_along_the_track() {
    let o = orbit();
    let zero = TimeShiftState::new(0.0, 0.01, (0.0, 1.0)).unwrap();
    assert_eq!(virtual_target(0.37, &zero, &o), o.state_at(0.37));
    let full = TimeShiftState::new(o.period, 0.01, (0.0, 2.0)).unwrap();
    let d = virtual_target(0.37, &full, &o).to_vec6() - o.state_at(0.37).to_vec6();
    assert!(d.amax() < 1e-9);
}

#[test]
fn single_sample_average_is_the_pointwise_linearization() {
    let o = orbit();
    let p = bcr4bp();
    let (a1, b1) = averaged_pair(&o, 0.2, o.period, 1, &p).unwrap();
    let (a, b) = linearize_translational(0.2, &o.state_at(0.2), &p).unwrap();
    assert_eq!(a1, a);
    assert_eq!(b1, b);
    assert_eq!(b1.fixed_view::<3, 3>(3, 0).into_owned(), nalgebra::Matrix3::identity());
}

#[test]
fn average_does_not_depend_on_sample_order() {
    let o = orbit();
    let p = bcr4bp();
    let n = 64;
    let (a, _) = averaged_pair(&o, 0.0, o.period, n, &p).unwrap();
    let mut reversed = nalgebra::Matrix6::zeros();
    for k in (0..n).rev() {
        let tau = o.period * k as f64 / n as f64;
        reversed += linearize_translational(tau, &o.state_at(tau), &p).unwrap().0;
    }
    reversed /= n as f64;
    assert!((a - reversed).amax() <= 1e-12 * a.amax());
}

#[test]
fn torque_free_rotation_conserves_energy() {
    type V6 = SVector<f64, 6>;
    let inertia = InertiaTensor::diagonal(4500.0, 4500.0, 1500.0).unwrap();
    let omega0 = Vec3::new(0.3, -0.2, 0.5);
    let energy = |w: &Vec3| 0.5 * w.dot(&(inertia.matrix() * w));
    let mut f = |_t: f64, y: &V6| {
        let s = Mrp(y.fixed_rows::<3>(0).into_owned());
        let w: Vec3 = y.fixed_rows::<3>(3).into_owned();
        let mut d = V6::zeros();
        d.fixed_rows_mut::<3>(0).copy_from(&mrp_kinematics(&s, &w));
        d.fixed_rows_mut::<3>(3).copy_from(&euler_dynamics(&w, &Vec3::zeros(), &inertia));
        Ok(d)
    };
    let mut y = V6::zeros();
    y.fixed_rows_mut::<3>(3).copy_from(&omega0);
    let e0 = energy(&omega0);
    let mut integ = Integrator::new(IntegratorSettings::default());
    let dt = 0.05;
    for k in 0..10_000 {
        y = integ.propagate(&mut f, k as f64 * dt, y, (k + 1) as f64 * dt).unwrap();
        let s = Mrp(y.fixed_rows::<3>(0).into_owned()).canonical();
        assert!(s.norm() <= 1.0);
        y.fixed_rows_mut::<3>(0).copy_from(&s.0);
    }
    let w: Vec3 = y.fixed_rows::<3>(3).into_owned();
    assert!(((energy(&w) - e0) / e0).abs() < 1e-9);
}
