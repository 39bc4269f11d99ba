//! Nominal controllers: orbit-averaged LQR for translation, geometric
//! tracking on SO(3) for attitude, thrust saturation and on/off gating.

use nalgebra::{DMatrix, Matrix3x6, Matrix6x3};
use serde::{Deserialize, Serialize};

use crate::attitude::{tilde, vee, vee_unchecked, AttitudeState, Dcm, InertiaTensor};
use crate::constraints::thrust_direction;
use crate::dynamics::{linearize_translational, Mat3, Mat6, SystemParams, TranslationalState, Vec3, Vec6};
use crate::error::{Error, Result};
use crate::reference::Track;

/// Below this `|r x u|` the desired attitude is undefined.
pub const DEGENERATE_CROSS: f64 = 1e-6;

/// Translational LQR gain plus attitude PD gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub k: Matrix3x6<f64>,
    pub p: Mat6,
    pub q: Mat6,
    pub r: Mat3,
    /// Attitude proportional gain, nondimensional torque units.
    pub kp: f64,
    /// Attitude derivative gain, nondimensional torque units.
    pub kd: f64,
    pub inertia: InertiaTensor,
}

impl GainSet {
    /// Solves the Riccati equation for `(a, b)` and bundles the attitude gains.
    pub fn synthesize(
        a: &Mat6,
        b: &Matrix6x3<f64>,
        q: &Mat6,
        r: &Mat3,
        kp: f64,
        kd: f64,
        inertia: InertiaTensor,
    ) -> Result<Self> {
        if !(kp > 0.0 && kd > 0.0) {
            return Err(Error::invalid("attitude gains", "kP and kD must be positive"));
        }
        let (p, k) = solve_care(a, b, q, r)?;
        Ok(Self {
            k,
            p,
            q: *q,
            r: *r,
            kp,
            kd,
            inertia,
        })
    }
}

/// Thrust after saturation and gating.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThrustCommand {
    /// Saturated desired thrust acceleration, frame b.
    pub desired: Vec3,
    pub desired_unit: Vec3,
    /// Thrust actually applied, frame b.
    pub applied: Vec3,
    pub gated_off: bool,
}

/// Mean of the linearizations at `n` equidistant instants over one period.
pub fn averaged_pair<T: Track + ?Sized>(
    track: &T,
    tau0: f64,
    period: f64,
    n: usize,
    params: &SystemParams,
) -> Result<(Mat6, Matrix6x3<f64>)> {
    if n == 0 {
        return Err(Error::invalid("averaging samples", "need at least one sample"));
    }
    let mut a_sum = Mat6::zeros();
    let mut b_sum = Matrix6x3::zeros();
    for k in 0..n {
        let tau = tau0 + period * k as f64 / n as f64;
        let (a, b) = linearize_translational(tau, &track.state_at(tau), params)?;
        a_sum += a;
        b_sum += b;
    }
    Ok((a_sum / n as f64, b_sum / n as f64))
}

fn riccati_residual_dyn(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * p + p * a - p * s * p + q
}

/// Solves `A^T X + X A + C = 0` through the Kronecker form.
fn lyapunov_dyn(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    // vec(A^T X + X A) = (I kron A^T + A^T kron I) vec(X)
    let m = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, c.as_slice());
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Riccati("singular Lyapunov operator".into()))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Stabilizing solution from the matrix sign function of the Hamiltonian.
fn care_sign(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let mut z = h;
    let dim = (2 * n) as f64;
    for _ in 0..100 {
        let inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Riccati("Hamiltonian has eigenvalues on the imaginary axis".into()))?;
        let det = z.clone().lu().determinant().abs();
        let c = if det.is_finite() && det > 0.0 {
            det.powf(-1.0 / dim)
        } else {
            1.0
        };
        let next = (&z * c + inv / c) * 0.5;
        let delta = (&next - &z).norm() / next.norm();
        z = next;
        if delta < 1e-13 {
            break;
        }
    }
    let w11 = z.view((0, 0), (n, n)).into_owned();
    let w12 = z.view((0, n), (n, n)).into_owned();
    let w21 = z.view((n, 0), (n, n)).into_owned();
    let w22 = z.view((n, n), (n, n)).into_owned();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w12);
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w22 + &eye));
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w11 + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w21));
    let p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Riccati(e.to_owned()))?;
    Ok((&p + p.transpose()) * 0.5)
}

fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    m.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

/// Newton-Kleinman iteration from a stabilizing gain `k`.
fn kleinman(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    r_inv: &DMatrix<f64>,
    mut k: DMatrix<f64>,
    iterations: usize,
) -> Result<DMatrix<f64>> {
    let mut p = DMatrix::zeros(a.nrows(), a.nrows());
    for _ in 0..iterations {
        let acl = a + b * &k;
        let c = q + k.transpose() * r * &k;
        let p_next = lyapunov_dyn(&acl, &c)?;
        let done = (&p_next - &p).norm() <= 1e-15 * p_next.norm();
        p = p_next;
        k = -(r_inv * b.transpose() * &p);
        if done {
            break;
        }
    }
    Ok(p)
}

/// Stabilizing gain by Bass' method, used to seed Kleinman's iteration
/// when the sign-function route fails.
fn bass_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let beta = 1.0 + a.complex_eigenvalues().iter().map(|l| l.re.abs()).fold(0.0, f64::max);
    let shifted = a + DMatrix::<f64>::identity(n, n) * beta;
    // (A + bI) Y + Y (A + bI)^T = 2 B B^T  <=>  lyapunov with A^T := (A + bI)^T
    let y = lyapunov_dyn(&shifted.transpose(), &(b * b.transpose() * -2.0))?;
    let y_inv = y
        .try_inverse()
        .ok_or_else(|| Error::Riccati("pair is not stabilizable".into()))?;
    Ok(-(b.transpose() * y_inv))
}

/// Continuous algebraic Riccati equation `0 = A^T P + P A - P B R^-1 B^T P + Q`
/// on dynamically sized matrices. Returns `(P, K)` with `K = -R^-1 B^T P`.
pub fn solve_care_dyn(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Riccati("control weight is singular".into()))?;
    if r.clone().cholesky().is_none() {
        return Err(Error::Riccati("control weight must be positive definite".into()));
    }
    let s = b * &r_inv * b.transpose();
    let gain = |p: &DMatrix<f64>| -(&r_inv * b.transpose() * p);
    let accept = |p: &DMatrix<f64>| {
        let res = riccati_residual_dyn(a, &s, q, p).norm();
        res < 1e-9 * p.norm().max(f64::MIN_POSITIVE) && is_hurwitz(&(a + b * gain(p)))
    };

    let mut candidate = care_sign(a, &s, q).ok();
    if let Some(p) = &candidate {
        let k = gain(p);
        if is_hurwitz(&(a + b * &k)) {
            // refine
            let refined = kleinman(a, b, q, r, &r_inv, k, 6)?;
            candidate = Some(refined);
        } else {
            candidate = None;
        }
    }
    let p = match candidate {
        Some(p) if accept(&p) => p,
        _ => {
            let k0 = bass_gain(a, b)?;
            let p = kleinman(a, b, q, r, &r_inv, k0, 200)?;
            if !accept(&p) {
                let res = riccati_residual_dyn(a, &s, q, &p).norm();
                return Err(Error::Riccati(format!(
                    "no stabilizing solution (residual {res:.3e})"
                )));
            }
            p
        }
    };
    let k = gain(&p);
    Ok((p, k))
}

/// Riccati solution and LQR gain for the 6-state / 3-input translational pair.
pub fn solve_care(
    a: &Mat6,
    b: &Matrix6x3<f64>,
    q: &Mat6,
    r: &Mat3,
) -> Result<(Mat6, Matrix3x6<f64>)> {
    if (*q).cholesky().is_none() {
        return Err(Error::Riccati("state weight Q must be positive definite".into()));
    }
    let dyn_ = |m: &[f64], r, c| DMatrix::from_column_slice(r, c, m);
    let (p, k) = solve_care_dyn(
        &dyn_(a.as_slice(), 6, 6),
        &dyn_(b.as_slice(), 6, 3),
        &dyn_(q.as_slice(), 6, 6),
        &dyn_(r.as_slice(), 3, 3),
    )?;
    Ok((
        Mat6::from_column_slice(p.as_slice()),
        Matrix3x6::from_column_slice(k.as_slice()),
    ))
}

/// Frobenius norm of the Riccati residual.
pub fn riccati_residual(a: &Mat6, b: &Matrix6x3<f64>, q: &Mat6, r: &Mat3, p: &Mat6) -> f64 {
    let r_inv = r.try_inverse().unwrap_or_else(Mat3::zeros);
    (a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q).norm()
}

/// Saturates `v` to norm `u_max`, preserving direction.
pub fn saturate(v: Vec3, u_max: f64) -> Vec3 {
    let n = v.norm();
    if n > u_max {
        v * (u_max / n)
    } else {
        v
    }
}

/// Desired thrust `K (Xd - Xv)`, saturated to `u_max`.
pub fn alqr_thrust(
    xd: &TranslationalState,
    xv: &TranslationalState,
    gains: &GainSet,
    u_max: f64,
) -> Vec3 {
    saturate(gains.k * (xd.to_vec6() - xv.to_vec6()), u_max)
}

/// Normalized frame of the desired attitude, checked for degeneracy.
fn attitude_axes(r_hat: &Vec3, u_hat: &Vec3) -> Result<(Vec3, f64)> {
    let c = r_hat.cross(u_hat);
    let cn = c.norm();
    if !(cn >= DEGENERATE_CROSS) {
        return Err(Error::DegenerateGeometry { cross: cn });
    }
    Ok((c / cn, cn))
}

/// `[Rb]`: rows `e1 = (r x u)/|r x u|`, `e2 = -u x e1`, `e3 = -u`, with `r`
/// the unit vector from the Deputy to the Earth and `u` the thrust direction.
pub fn desired_attitude(xd: &TranslationalState, u_d: &Vec3, earth_pos: &Vec3) -> Result<Dcm> {
    let un = u_d.norm();
    if !(un > 0.0) {
        return Err(Error::DegenerateGeometry { cross: 0.0 });
    }
    let u_hat = u_d / un;
    let r = earth_pos - xd.position;
    let r_hat = r / r.norm();
    let (e1, _) = attitude_axes(&r_hat, &u_hat)?;
    let e2 = -u_hat.cross(&e1);
    let e3 = -u_hat;
    Ok(Dcm(Mat3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()])))
}

/// Derivative of a unit vector `v/|v|` given `v` and `v_dot`.
pub fn unit_vector_rate(v: &Vec3, v_dot: &Vec3) -> Vec3 {
    let n = v.norm();
    let v_hat = v / n;
    (v_dot - v_hat * v_hat.dot(v_dot)) / n
}

/// Time derivative of [`desired_attitude`].
///
/// `r`, `r_dot` are the Deputy-to-Earth vector and its rate; `u`, `u_dot`
/// the (unsaturated) desired thrust and its rate. With `literal` set, the
/// unit-vector rates are formed as `v_dot / |v_dot|` instead of the
/// calculus derivative.
pub fn desired_attitude_rate(r: &Vec3, r_dot: &Vec3, u: &Vec3, u_dot: &Vec3, literal: bool) -> Result<Mat3> {
    let r_hat = r / r.norm();
    let u_hat = u / u.norm();
    let (r_hat_dot, u_hat_dot) = if literal {
        let lit = |v: &Vec3| {
            let n = v.norm();
            if n > 0.0 {
                v / n
            } else {
                Vec3::zeros()
            }
        };
        (lit(r_dot), lit(u_dot))
    } else {
        (unit_vector_rate(r, r_dot), unit_vector_rate(u, u_dot))
    };
    let c = r_hat.cross(&u_hat);
    let c_dot = r_hat_dot.cross(&u_hat) + r_hat.cross(&u_hat_dot);
    let (e1, cn) = attitude_axes(&r_hat, &u_hat)?;
    let e1_dot = (c_dot - e1 * e1.dot(&c_dot)) / cn;
    let _ = c;
    let e2_dot = -(u_hat_dot.cross(&e1) + u_hat.cross(&e1_dot));
    let e3_dot = -u_hat_dot;
    Ok(Mat3::from_rows(&[e1_dot.transpose(), e2_dot.transpose(), e3_dot.transpose()]))
}

/// `omega_R/b` in R components: `-(Rb_dot Rb^T)^vee`.
pub fn reference_angular_velocity(rb: &Dcm, rb_dot: &Mat3) -> Result<Vec3> {
    Ok(-vee(&(rb_dot * rb.0.transpose()))?)
}

/// Attitude and rate tracking errors on SO(3).
pub fn attitude_errors(rb: &Dcm, bb: &Dcm, omega_b: &Vec3, omega_r: &Vec3) -> (Vec3, Vec3) {
    let rb_bb = rb.0 * bb.0.transpose();
    let br = bb.0 * rb.0.transpose();
    let e_c = vee_unchecked(&((rb_bb - br) * 0.5));
    let e_w = omega_b - br * omega_r;
    (e_c, e_w)
}

/// Geometric tracking moment. `omega_r_dot = None` drops the reference
/// angular acceleration term (slowly varying reference).
#[allow(clippy::too_many_arguments)]
pub fn control_moment(
    e_c: &Vec3,
    e_w: &Vec3,
    omega_b: &Vec3,
    rb: &Dcm,
    bb: &Dcm,
    omega_r: &Vec3,
    omega_r_dot: Option<&Vec3>,
    gains: &GainSet,
) -> Vec3 {
    let inertia = gains.inertia.matrix();
    let br = bb.0 * rb.0.transpose();
    let mut ff = tilde(omega_b) * br * omega_r;
    if let Some(wd) = omega_r_dot {
        ff -= br * wd;
    }
    -e_c * gains.kp - e_w * gains.kd + omega_b.cross(&(inertia * omega_b)) - inertia * ff
}

/// On/off thrust gate: fire `-|u_d| k_B` iff its angle to `u_d` is within
/// `eta` (inclusive). The decision is taken on the thrust-direction
/// constraint itself so the two always agree.
pub fn thrust_gate(u_d: &Vec3, bb: &Dcm, eta: f64) -> ThrustCommand {
    let mag = u_d.norm();
    if mag == 0.0 {
        return ThrustCommand::default();
    }
    let k_b = bb.row(2);
    let candidate = -k_b * mag;
    let fire = thrust_direction(u_d, &candidate, eta) <= 0.0;
    ThrustCommand {
        desired: *u_d,
        desired_unit: u_d / mag,
        applied: if fire { candidate } else { Vec3::zeros() },
        gated_off: !fire,
    }
}

/// Tunables of the nominal closed loop that are not gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerOptions {
    pub u_max: f64,
    pub eta: f64,
    /// Drop the reference angular acceleration term.
    pub slow_reference: bool,
    /// Use `v_dot/|v_dot|` for unit-vector rates.
    pub literal_unit_rates: bool,
    /// Step for the central difference of the reference rate, TU.
    pub omega_dot_step: f64,
}

impl Default for ControllerOptions {
    fn default() -> Self {
        Self {
            u_max: f64::INFINITY,
            eta: 9f64.to_radians(),
            slow_reference: true,
            literal_unit_rates: false,
            omega_dot_step: 1e-4,
        }
    }
}

/// Desired attitude and its angular velocity in R components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceAttitude {
    pub rb: Dcm,
    pub omega_r: Vec3,
}

/// Everything the nominal controller produces at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub thrust: ThrustCommand,
    pub moment: Vec3,
    pub reference: ReferenceAttitude,
    pub e_c: Vec3,
    pub e_w: Vec3,
    /// Desired attitude could not be formed; previous one held.
    pub degenerate: bool,
}

/// Orbit-averaged LQR, geometric attitude tracking, saturation and gate.
#[derive(Debug, Clone, Copy)]
pub struct NominalController {
    pub gains: GainSet,
    pub options: ControllerOptions,
    pub params: SystemParams,
}

/// Translational inputs of one controller evaluation.
#[derive(Debug, Clone, Copy)]
pub struct TrackingInput<'a> {
    pub tau: f64,
    pub deputy: &'a TranslationalState,
    pub target: &'a TranslationalState,
    /// Unforced vector field at the target, `d/dtau X_v`.
    pub target_rate: &'a Vec6,
}

impl NominalController {
    fn raw_thrust(&self, deputy: &TranslationalState, target: &TranslationalState) -> Vec3 {
        self.gains.k * (deputy.to_vec6() - target.to_vec6())
    }

    /// Desired attitude and rate for a given Deputy state and thrust rate.
    fn reference_from(
        &self,
        deputy: &TranslationalState,
        u_raw: &Vec3,
        u_raw_dot: &Vec3,
    ) -> Result<ReferenceAttitude> {
        let earth = self.params.earth_position();
        let rb = desired_attitude(deputy, u_raw, &earth)?;
        let r = earth - deputy.position;
        let r_dot = -deputy.velocity;
        let rb_dot = desired_attitude_rate(&r, &r_dot, u_raw, u_raw_dot, self.options.literal_unit_rates)?;
        let omega_r = if self.options.literal_unit_rates {
            -vee_unchecked(&(rb_dot * rb.0.transpose()))
        } else {
            reference_angular_velocity(&rb, &rb_dot)?
        };
        Ok(ReferenceAttitude { rb, omega_r })
    }

    /// Evaluates the full nominal law. `held` is the last valid reference,
    /// used when the current geometry is degenerate.
    pub fn evaluate(
        &self,
        input: &TrackingInput<'_>,
        attitude: &AttitudeState,
        held: Option<&ReferenceAttitude>,
    ) -> Result<ControlOutput> {
        let bb = attitude.dcm();
        let u_raw = self.raw_thrust(input.deputy, input.target);
        let u_d = saturate(u_raw, self.options.u_max);
        let thrust = thrust_gate(&u_d, &bb, self.options.eta);

        let deputy_rate = crate::dynamics::translational_derivative(
            input.tau,
            input.deputy,
            &thrust.applied,
            &self.params,
        )?;
        let u_raw_dot = self.gains.k * (deputy_rate - input.target_rate);

        let (reference, omega_r_dot, degenerate) = match self.reference_from(input.deputy, &u_raw, &u_raw_dot) {
            Ok(reference) => {
                let wd = if self.options.slow_reference {
                    None
                } else {
                    self.reference_acceleration(input, &deputy_rate, &reference).ok()
                };
                (reference, wd, false)
            }
            Err(Error::DegenerateGeometry { .. }) => {
                let rb = held.map(|h| h.rb).unwrap_or_else(|| bb);
                (
                    ReferenceAttitude {
                        rb,
                        omega_r: Vec3::zeros(),
                    },
                    None,
                    true,
                )
            }
            Err(e) => return Err(e),
        };

        let (e_c, e_w) = attitude_errors(&reference.rb, &bb, &attitude.omega, &reference.omega_r);
        let moment = control_moment(
            &e_c,
            &e_w,
            &attitude.omega,
            &reference.rb,
            &bb,
            &reference.omega_r,
            omega_r_dot.as_ref(),
            &self.gains,
        );
        Ok(ControlOutput {
            thrust,
            moment,
            reference,
            e_c,
            e_w,
            degenerate,
        })
    }

    /// Central difference of the reference rate along the instantaneous flow.
    fn reference_acceleration(
        &self,
        input: &TrackingInput<'_>,
        deputy_rate: &Vec6,
        _current: &ReferenceAttitude,
    ) -> Result<Vec3> {
        let h = self.options.omega_dot_step;
        let at = |sign: f64| -> Result<Vec3> {
            let xd = TranslationalState::from_vec6(&(input.deputy.to_vec6() + deputy_rate * (sign * h)));
            let xv = TranslationalState::from_vec6(&(input.target.to_vec6() + input.target_rate * (sign * h)));
            let u = self.raw_thrust(&xd, &xv);
            let u_dot = self.gains.k * (deputy_rate - input.target_rate);
            Ok(self.reference_from(&xd, &u, &u_dot)?.omega_r)
        };
        Ok((at(1.0)? - at(-1.0)?) / (2.0 * h))
    }
}
