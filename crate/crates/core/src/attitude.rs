//! Attitude representation and rigid-body rotational motion.
//!
//! Attitudes are modified Rodrigues parameters (MRPs) with the shadow-set
//! switch at unit norm. Direction cosine matrices follow the "left frame from
//! right frame" convention: `[Bb]` maps components in frame `b` into frame `B`.

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Mat3, Vec3};
use crate::error::{Error, Result};

/// Tolerance on the symmetric part accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-9;

/// Skew-symmetric cross-product matrix: `tilde(w) * v == w x v`.
pub fn tilde(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`tilde`]. The input is antisymmetrized first; a symmetric
/// part larger than [`SKEW_TOL`] (relative to the matrix scale) is rejected.
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let sym = (m + m.transpose()) * 0.5;
    let scale = m.norm().max(1.0);
    let residual = sym.norm();
    if residual > SKEW_TOL * scale {
        return Err(Error::NotSkewSymmetric { residual });
    }
    Ok(vee_unchecked(m))
}

/// Vee of the antisymmetric part, without the tolerance check.
pub fn vee_unchecked(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Modified Rodrigues parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mrp(pub Vec3);

impl Mrp {
    pub fn identity() -> Self {
        Mrp(Vec3::zeros())
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        Mrp(axis.normalize() * (angle / 4.0).tan())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Shadow set `-sigma / |sigma|^2`; same attitude.
    pub fn shadow(&self) -> Self {
        let s2 = self.0.norm_squared();
        Mrp(-self.0 / s2)
    }

    /// Returns the member of the pair with norm at most one.
    pub fn canonical(self) -> Self {
        if self.0.norm_squared() > 1.0 {
            self.shadow()
        } else {
            self
        }
    }

    /// Principal rotation angle in [0, 2pi).
    pub fn angle(&self) -> f64 {
        4.0 * self.0.norm().atan()
    }
}

/// Proper orthonormal 3x3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dcm(pub Mat3);

impl Dcm {
    pub fn identity() -> Self {
        Dcm(Mat3::identity())
    }

    pub fn transpose(&self) -> Self {
        Dcm(self.0.transpose())
    }

    /// `|m^T m - I|` (Frobenius) and `|det m - 1|`.
    pub fn orthonormality_error(&self) -> (f64, f64) {
        let m = &self.0;
        ((m.transpose() * m - Mat3::identity()).norm(), (m.determinant() - 1.0).abs())
    }

    pub fn is_proper(&self, tol: f64) -> bool {
        let (o, d) = self.orthonormality_error();
        o <= tol && d <= tol
    }

    /// Rotation by `angle` about body axis `axis` composed on the left.
    pub fn about_axis(axis: &Vec3, angle: f64) -> Self {
        mrp_to_dcm(&Mrp::from_axis_angle(axis, angle))
    }

    pub fn row(&self, i: usize) -> Vec3 {
        self.0.row(i).transpose()
    }
}

impl std::ops::Mul for Dcm {
    type Output = Dcm;
    fn mul(self, rhs: Dcm) -> Dcm {
        Dcm(self.0 * rhs.0)
    }
}

pub fn mrp_to_dcm(sigma: &Mrp) -> Dcm {
    let s = &sigma.0;
    let s2 = s.norm_squared();
    let st = tilde(s);
    let denom = (1.0 + s2) * (1.0 + s2);
    Dcm(Mat3::identity() + (st * st * 8.0 - st * (4.0 * (1.0 - s2))) / denom)
}

/// Euler parameters `(b0, b1, b2, b3)` of a DCM by Sheppard's method.
fn dcm_to_quaternion(m: &Mat3) -> Vector4<f64> {
    let tr = m.trace();
    let b2 = [
        0.25 * (1.0 + tr),
        0.25 * (1.0 + 2.0 * m[(0, 0)] - tr),
        0.25 * (1.0 + 2.0 * m[(1, 1)] - tr),
        0.25 * (1.0 + 2.0 * m[(2, 2)] - tr),
    ];
    let (imax, _) = b2
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let mut b = Vector4::zeros();
    match imax {
        0 => {
            b[0] = b2[0].sqrt();
            b[1] = (m[(1, 2)] - m[(2, 1)]) / (4.0 * b[0]);
            b[2] = (m[(2, 0)] - m[(0, 2)]) / (4.0 * b[0]);
            b[3] = (m[(0, 1)] - m[(1, 0)]) / (4.0 * b[0]);
        }
        1 => {
            b[1] = b2[1].sqrt();
            b[0] = (m[(1, 2)] - m[(2, 1)]) / (4.0 * b[1]);
            b[2] = (m[(0, 1)] + m[(1, 0)]) / (4.0 * b[1]);
            b[3] = (m[(2, 0)] + m[(0, 2)]) / (4.0 * b[1]);
        }
        2 => {
            b[2] = b2[2].sqrt();
            b[0] = (m[(2, 0)] - m[(0, 2)]) / (4.0 * b[2]);
            b[1] = (m[(0, 1)] + m[(1, 0)]) / (4.0 * b[2]);
            b[3] = (m[(1, 2)] + m[(2, 1)]) / (4.0 * b[2]);
        }
        _ => {
            b[3] = b2[3].sqrt();
            b[0] = (m[(0, 1)] - m[(1, 0)]) / (4.0 * b[3]);
            b[1] = (m[(2, 0)] + m[(0, 2)]) / (4.0 * b[3]);
            b[2] = (m[(1, 2)] + m[(2, 1)]) / (4.0 * b[3]);
        }
    }
    if b[0] < 0.0 {
        -b
    } else {
        b
    }
}

/// DCM to MRP through the Euler parameters, choosing `b0 >= 0` so the
/// result has norm at most one.
pub fn dcm_to_mrp(dcm: &Dcm) -> Result<Mrp> {
    let b = dcm_to_quaternion(&dcm.0);
    let margin = 1.0 + b[0];
    if margin < 1e-8 {
        return Err(Error::MrpSingular { margin });
    }
    Ok(Mrp(Vec3::new(b[1], b[2], b[3]) / margin))
}

/// MRP kinematic differential equation.
pub fn mrp_kinematics(sigma: &Mrp, omega: &Vec3) -> Vec3 {
    let s = &sigma.0;
    let b = Mat3::identity() * (1.0 - s.norm_squared()) + tilde(s) * 2.0 + (s * s.transpose()) * 2.0;
    b * omega * 0.25
}

/// Symmetric positive-definite inertia tensor in body axes, kg m^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaTensor {
    matrix: Mat3,
    inverse: Mat3,
}

impl InertiaTensor {
    pub fn new(matrix: Mat3) -> Result<Self> {
        if (matrix - matrix.transpose()).norm() > 1e-12 * matrix.norm() {
            return Err(Error::invalid("inertia", "must be symmetric"));
        }
        let eig = matrix.symmetric_eigenvalues();
        if eig.iter().any(|l| *l <= 0.0) {
            return Err(Error::invalid("inertia", "must be positive definite"));
        }
        let (a, b, c) = (eig[0], eig[1], eig[2]);
        let tol = 1e-12 * (a + b + c);
        if a + b < c - tol || a + c < b - tol || b + c < a - tol {
            return Err(Error::invalid("inertia", "principal moments violate the triangle inequality"));
        }
        let inverse = matrix
            .try_inverse()
            .ok_or_else(|| Error::invalid("inertia", "singular"))?;
        Ok(Self { matrix, inverse })
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(Mat3::from_diagonal(&Vec3::new(a, b, c)))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn inverse(&self) -> &Mat3 {
        &self.inverse
    }

    pub fn max_moment(&self) -> f64 {
        self.matrix.symmetric_eigenvalues().max()
    }
}

/// Euler's rotational equations: `I^-1 (-w x I w + M)`.
pub fn euler_dynamics(omega: &Vec3, moment: &Vec3, inertia: &InertiaTensor) -> Vec3 {
    let h = inertia.matrix() * omega;
    inertia.inverse() * (moment - omega.cross(&h))
}

/// Attitude of the body frame relative to the rotating barycentric frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttitudeState {
    pub sigma: Mrp,
    /// Body rate relative to frame b, body components, rad/TU.
    pub omega: Vec3,
}

impl AttitudeState {
    pub fn new(sigma: Mrp, omega: Vec3) -> Self {
        Self { sigma, omega }
    }

    /// `[Bb]`
    pub fn dcm(&self) -> Dcm {
        mrp_to_dcm(&self.sigma)
    }

    pub fn is_finite(&self) -> bool {
        self.sigma.0.iter().chain(self.omega.iter()).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{UnitQuaternion, Vector3};
    use proptest::prelude::*;

    #[test]
    fn tilde_examples() {
        let t = tilde(&Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(t, Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0));
        let w = Vec3::new(0.3, -0.7, 1.1);
        assert_eq!(vee(&tilde(&w)).unwrap(), w);
        assert_eq!(tilde(&Vec3::x()) * Vec3::y(), Vec3::z());
    }

    #[test]
    fn vee_rejects_symmetric_matrices() {
        let m = Mat3::identity();
        assert!(matches!(vee(&m), Err(Error::NotSkewSymmetric { .. })));
        let mut near = tilde(&Vec3::new(1.0, 2.0, 3.0));
        near[(0, 1)] += 1e-12;
        assert!(vee(&near).is_ok());
    }

    #[test]
    fn mrp_dcm_examples() {
        assert_eq!(mrp_to_dcm(&Mrp::identity()).0, Mat3::identity());
        let half_turn = mrp_to_dcm(&Mrp(Vec3::new(0.0, 0.0, 1.0)));
        assert_relative_eq!(half_turn.0, Mat3::from_diagonal(&Vec3::new(-1.0, -1.0, 1.0)), epsilon = 1e-15);
    }

    #[test]
    fn dcm_matches_passive_rotation() {
        // [Bb] of a rotation by theta about z maps b-frame x into B-frame (cos, -sin, 0).
        let th = 0.4;
        let d = mrp_to_dcm(&Mrp::from_axis_angle(&Vec3::z(), th));
        let v = d.0 * Vec3::x();
        assert_relative_eq!(v, Vec3::new(th.cos(), -th.sin(), 0.0), epsilon = 1e-14);
    }

    #[test]
    fn shadow_set_is_same_attitude() {
        let s = Mrp(Vec3::new(0.9, -0.6, 0.4));
        let a = mrp_to_dcm(&s);
        let b = mrp_to_dcm(&s.shadow());
        assert_relative_eq!(a.0, b.0, epsilon = 1e-13);
        assert!(s.canonical().norm() <= 1.0);
    }

    #[test]
    fn kinematics_examples() {
        let w = Vec3::new(0.4, -0.2, 0.1);
        assert_eq!(mrp_kinematics(&Mrp::identity(), &w), w / 4.0);
        assert_eq!(mrp_kinematics(&Mrp(Vec3::new(0.1, 0.2, 0.3)), &Vec3::zeros()), Vec3::zeros());
    }

    #[test]
    fn kinematics_match_quaternion_propagation() {
        // Constant body rate: exact quaternion solution vs RK4 on the MRP ODE.
        let sigma0 = Mrp(Vec3::new(0.1, -0.2, 0.15));
        let w = Vec3::new(0.3, 0.5, -0.4);
        let dt = 1e-3;
        let n = 10;
        let h = dt / n as f64;
        let mut s = sigma0.0;
        for _ in 0..n {
            let f = |s: &Vec3| mrp_kinematics(&Mrp(*s), &w);
            let k1 = f(&s);
            let k2 = f(&(s + k1 * (h / 2.0)));
            let k3 = f(&(s + k2 * (h / 2.0)));
            let k4 = f(&(s + k3 * h));
            s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        // Oracle: [Bb](t) = exp(-tilde(w) t) [Bb](0) for constant body rate.
        let c0 = mrp_to_dcm(&sigma0).0;
        let rot = UnitQuaternion::from_scaled_axis(Vector3::from(-w * dt)).to_rotation_matrix();
        // nalgebra rotations are active: from_scaled_axis(a) == exp(tilde(a)).
        let c1 = Dcm(rot.matrix() * c0);
        let expected = dcm_to_mrp(&c1).unwrap();
        assert!((s - expected.0).norm() < 1e-9, "{}", (s - expected.0).norm());
    }

    #[test]
    fn euler_examples() {
        let i = InertiaTensor::diagonal(4500.0, 4500.0, 1500.0).unwrap();
        assert_eq!(euler_dynamics(&Vec3::new(0.0, 0.0, 2.0), &Vec3::zeros(), &i), Vec3::zeros());
        let i2 = InertiaTensor::diagonal(1.0, 2.0, 3.0).unwrap();
        let wd = euler_dynamics(&Vec3::new(1.0, 1.0, 1.0), &Vec3::zeros(), &i2);
        assert_relative_eq!(wd, Vec3::new(-1.0, 1.0, -1.0 / 3.0), epsilon = 1e-15);
        let w = Vec3::new(0.2, -0.5, 0.9);
        let m = w.cross(&(i2.matrix() * w));
        assert!(euler_dynamics(&w, &m, &i2).norm() < 1e-15);
    }

    #[test]
    fn inertia_validation() {
        assert!(InertiaTensor::diagonal(1.0, 1.0, 3.0).is_err());
        assert!(InertiaTensor::diagonal(1.0, -1.0, 1.0).is_err());
        let mut m = Mat3::identity();
        m[(0, 1)] = 0.1;
        assert!(InertiaTensor::new(m).is_err());
    }

    proptest! {
        #[test]
        fn mrp_round_trip(x in -0.57f64..0.57, y in -0.57f64..0.57, z in -0.57f64..0.57) {
            let s = Mrp(Vec3::new(x, y, z));
            prop_assume!(s.norm() < 0.999);
            let d = mrp_to_dcm(&s);
            prop_assert!(d.is_proper(1e-12));
            let back = dcm_to_mrp(&d).unwrap();
            prop_assert!((back.0 - s.0).norm() < 1e-10);
        }

        #[test]
        fn tilde_is_cross_product(a in prop::array::uniform3(-5.0f64..5.0), b in prop::array::uniform3(-5.0f64..5.0)) {
            let w = Vec3::from(a);
            let v = Vec3::from(b);
            prop_assert!((tilde(&w) * v - w.cross(&v)).norm() < 1e-12);
        }
    }
}
