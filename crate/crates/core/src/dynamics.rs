//! Translational dynamics of the bicircular restricted four-body problem in
//! the nondimensional Earth-Moon rotating barycentric frame.
//!
//! Lengths are in LU (Earth-Moon distance) and times in TU (inverse lunar
//! mean motion). The Earth sits at `(-mu, 0, 0)`, the Moon at `(1 - mu, 0, 0)`
//! and the Sun circles the barycenter in the x-y plane. Setting
//! `mu_sun = 0` recovers the circular restricted three-body problem.

use nalgebra::{Matrix3, Matrix6, Matrix6x3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat6 = Matrix6<f64>;

pub const DEFAULT_SINGULARITY_FLOOR: f64 = 1e-12;

/// Constants of the four-body model and the nondimensionalization scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Moon / (Earth + Moon) mass ratio.
    pub mu: f64,
    /// Sun / (Earth + Moon) mass ratio. Zero disables the Sun.
    pub mu_sun: f64,
    /// Sun distance from the Earth-Moon barycenter, LU.
    pub a_sun: f64,
    /// Sun angular rate in the rotating frame, rad/TU.
    pub omega_sun: f64,
    /// Sun angle at tau = 0, rad.
    pub theta0: f64,
    pub length_unit_km: f64,
    pub time_unit_s: f64,
    /// Minimum admissible distance to any primary, LU.
    #[serde(default = "default_floor")]
    pub singularity_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_SINGULARITY_FLOOR
}

impl SystemParams {
    /// Earth-Moon CR3BP with the given mass ratio and unit scales.
    pub fn cr3bp(mu: f64, length_unit_km: f64, time_unit_s: f64) -> Self {
        Self {
            mu,
            mu_sun: 0.0,
            a_sun: 389.0,
            omega_sun: -0.9252,
            theta0: 0.0,
            length_unit_km,
            time_unit_s,
            singularity_floor: DEFAULT_SINGULARITY_FLOOR,
        }
    }

    /// Same constants with the Sun switched off.
    pub fn without_sun(&self) -> Self {
        Self {
            mu_sun: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(Error::invalid("mu", "must lie in (0, 0.5)"));
        }
        if !(self.a_sun > 1.0) {
            return Err(Error::invalid("a_sun", "must exceed 1 LU"));
        }
        if !(self.mu_sun >= 0.0) {
            return Err(Error::invalid("mu_sun", "must be non-negative"));
        }
        if !(self.length_unit_km > 0.0) {
            return Err(Error::invalid("length_unit_km", "must be positive"));
        }
        if !(self.time_unit_s > 0.0) {
            return Err(Error::invalid("time_unit_s", "must be positive"));
        }
        if !(self.singularity_floor > 0.0) {
            return Err(Error::invalid("singularity_floor", "must be positive"));
        }
        if !(self.omega_sun.is_finite() && self.theta0.is_finite()) {
            return Err(Error::invalid("omega_sun/theta0", "must be finite"));
        }
        Ok(())
    }

    pub fn earth_position(&self) -> Vec3 {
        Vec3::new(-self.mu, 0.0, 0.0)
    }

    pub fn moon_position(&self) -> Vec3 {
        Vec3::new(1.0 - self.mu, 0.0, 0.0)
    }

    /// Synodic period of the Sun in the rotating frame, TU.
    pub fn sun_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_sun.abs()
    }

    pub fn km_per_lu(&self) -> f64 {
        self.length_unit_km
    }

    /// km/s per LU/TU.
    pub fn speed_unit_km_s(&self) -> f64 {
        self.length_unit_km / self.time_unit_s
    }

    /// km/s^2 per LU/TU^2.
    pub fn accel_unit_km_s2(&self) -> f64 {
        self.length_unit_km / (self.time_unit_s * self.time_unit_s)
    }
}

/// Position and velocity in the rotating barycentric frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TranslationalState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl TranslationalState {
    pub fn new(position: Vec3, velocity: Vec3) -> Self {
        Self { position, velocity }
    }

    pub fn from_vec6(x: &Vec6) -> Self {
        Self {
            position: x.fixed_rows::<3>(0).into_owned(),
            velocity: x.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vec6(&self) -> Vec6 {
        let p = &self.position;
        let v = &self.velocity;
        Vec6::new(p.x, p.y, p.z, v.x, v.y, v.z)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite())
    }
}

impl std::ops::Sub for TranslationalState {
    type Output = TranslationalState;

    fn sub(self, rhs: Self) -> Self {
        Self {
            position: self.position - rhs.position,
            velocity: self.velocity - rhs.velocity,
        }
    }
}

pub fn sun_position(tau: f64, params: &SystemParams) -> Vec3 {
    let theta = params.omega_sun * tau + params.theta0;
    Vec3::new(params.a_sun * theta.cos(), params.a_sun * theta.sin(), 0.0)
}

/// Distances to the Earth, Moon and Sun, checked against the floor.
struct Separations {
    earth: Vec3,
    moon: Vec3,
    sun: Vec3,
    r_earth: f64,
    r_moon: f64,
    r_sun: f64,
    sun_pos: Vec3,
}

fn separations(pos: &Vec3, tau: f64, params: &SystemParams) -> Result<Separations> {
    let mu = params.mu;
    let earth = Vec3::new(pos.x + mu, pos.y, pos.z);
    let moon = Vec3::new(pos.x - 1.0 + mu, pos.y, pos.z);
    let sun_pos = sun_position(tau, params);
    let sun = pos - sun_pos;
    let r_earth = earth.norm();
    let r_moon = moon.norm();
    let r_sun = sun.norm();
    let floor = params.singularity_floor;
    for (body, d) in [("Earth", r_earth), ("Moon", r_moon), ("Sun", r_sun)] {
        // also catches NaN
        if !(d >= floor) {
            return Err(Error::Singularity {
                body,
                distance: d,
                floor,
            });
        }
    }
    Ok(Separations {
        earth,
        moon,
        sun,
        r_earth,
        r_moon,
        r_sun,
        sun_pos,
    })
}

/// Earth-Moon pseudo-potential `U` and solar pseudo-potential `Gamma`.
pub fn pseudo_potentials(
    state: &TranslationalState,
    tau: f64,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    let p = &state.position;
    let s = separations(p, tau, params)?;
    let mu = params.mu;
    let u = 0.5 * (p.x * p.x + p.y * p.y) + (1.0 - mu) / s.r_earth + mu / s.r_moon;
    let gamma = if params.mu_sun == 0.0 {
        0.0
    } else {
        params.mu_sun / s.r_sun - params.mu_sun / params.a_sun.powi(3) * s.sun_pos.dot(p)
    };
    Ok((u, gamma))
}

/// Analytic gradient of `U + Gamma` with respect to position.
pub fn potential_gradient(pos: &Vec3, tau: f64, params: &SystemParams) -> Result<Vec3> {
    let s = separations(pos, tau, params)?;
    let mu = params.mu;
    let re3 = s.r_earth * s.r_earth * s.r_earth;
    let rm3 = s.r_moon * s.r_moon * s.r_moon;
    let mut g = Vec3::new(
        pos.x - (1.0 - mu) * s.earth.x / re3 - mu * s.moon.x / rm3,
        pos.y - (1.0 - mu) * s.earth.y / re3 - mu * s.moon.y / rm3,
        -(1.0 - mu) * s.earth.z / re3 - mu * s.moon.z / rm3,
    );
    if params.mu_sun != 0.0 {
        let rs3 = s.r_sun * s.r_sun * s.r_sun;
        let tidal = params.mu_sun / params.a_sun.powi(3);
        g += -s.sun * (params.mu_sun / rs3) - s.sun_pos * tidal;
    }
    Ok(g)
}

/// Analytic Hessian of `U + Gamma` with respect to position.
pub fn potential_hessian(pos: &Vec3, tau: f64, params: &SystemParams) -> Result<Mat3> {
    let s = separations(pos, tau, params)?;
    let mu = params.mu;
    let point = |gm: f64, d: &Vec3, r: f64| -> Mat3 {
        let r2 = r * r;
        let r3 = r2 * r;
        let r5 = r3 * r2;
        (d * d.transpose()) * (3.0 * gm / r5) - Mat3::identity() * (gm / r3)
    };
    let mut h = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0));
    h += point(1.0 - mu, &s.earth, s.r_earth);
    h += point(mu, &s.moon, s.r_moon);
    if params.mu_sun != 0.0 {
        h += point(params.mu_sun, &s.sun, s.r_sun);
    }
    Ok(h)
}

/// State derivative with thrust acceleration `u` (LU/TU^2, rotating frame).
pub fn translational_derivative(
    tau: f64,
    state: &TranslationalState,
    u: &Vec3,
    params: &SystemParams,
) -> Result<Vec6> {
    let g = potential_gradient(&state.position, tau, params)?;
    let v = &state.velocity;
    Ok(Vec6::new(
        v.x,
        v.y,
        v.z,
        2.0 * v.y + g.x + u.x,
        -2.0 * v.x + g.y + u.y,
        g.z + u.z,
    ))
}

/// Same as [`translational_derivative`] on a stacked 6-vector.
pub fn derivative_vec6(tau: f64, x: &Vec6, u: &Vec3, params: &SystemParams) -> Result<Vec6> {
    translational_derivative(tau, &TranslationalState::from_vec6(x), u, params)
}

/// Input matrix: thrust acceleration enters the velocity rows.
pub fn input_matrix() -> Matrix6x3<f64> {
    let mut b = Matrix6x3::zeros();
    b.fixed_view_mut::<3, 3>(3, 0).copy_from(&Mat3::identity());
    b
}

/// Jacobian of the vector field with respect to the state, and the input matrix.
pub fn linearize_translational(
    tau: f64,
    state: &TranslationalState,
    params: &SystemParams,
) -> Result<(Mat6, Matrix6x3<f64>)> {
    let h = potential_hessian(&state.position, tau, params)?;
    let mut a = Mat6::zeros();
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&Mat3::identity());
    a.fixed_view_mut::<3, 3>(3, 0).copy_from(&h);
    a[(3, 4)] = 2.0;
    a[(4, 3)] = -2.0;
    Ok((a, input_matrix()))
}

/// Jacobi constant `2U - |v|^2` (conserved only in the CR3BP).
pub fn jacobi_constant(state: &TranslationalState, params: &SystemParams) -> Result<f64> {
    let (u, _) = pseudo_potentials(state, 0.0, &params.without_sun())?;
    Ok(2.0 * u - state.velocity.norm_squared())
}

/// x-coordinate of the collinear point between the Moon and infinity (L2) or
/// between Earth and Moon (L1), by bisection on the 1-D equilibrium equation.
pub fn collinear_point(params: &SystemParams, which: Collinear) -> f64 {
    let mu = params.mu;
    let f = |x: f64| {
        let y = TranslationalState::new(Vec3::new(x, 0.0, 0.0), Vec3::zeros());
        potential_gradient(&y.position, 0.0, &params.without_sun())
            .map(|g| g.x)
            .unwrap_or(f64::NAN)
    };
    let (mut lo, mut hi) = match which {
        Collinear::L1 => (-mu + 0.5, 1.0 - mu - 1e-6),
        Collinear::L2 => (1.0 - mu + 1e-6, 2.0),
    };
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collinear {
    L1,
    L2,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> SystemParams {
        SystemParams {
            mu: 0.01215,
            mu_sun: 328_900.54,
            a_sun: 388.811_14,
            omega_sun: -0.9252,
            theta0: 0.3,
            length_unit_km: 384_399.0,
            time_unit_s: 375_190.0,
            singularity_floor: DEFAULT_SINGULARITY_FLOOR,
        }
    }

    #[test]
    fn sun_position_examples() {
        let p = SystemParams {
            theta0: 0.0,
            ..params()
        };
        let s0 = sun_position(0.0, &p);
        assert_eq!(s0, Vec3::new(p.a_sun, 0.0, 0.0));
        let half = sun_position(PI / p.omega_sun.abs(), &p);
        assert!((half - Vec3::new(-p.a_sun, 0.0, 0.0)).norm() < 1e-9 * p.a_sun);
        let tau = 0.77;
        let later = sun_position(tau + p.sun_period(), &p);
        assert!((later - sun_position(tau, &p)).norm() < 1e-10 * p.a_sun);
    }

    #[test]
    fn earth_moon_potential_value() {
        let p = SystemParams::cr3bp(0.01215, 384_399.0, 375_190.0);
        let st = TranslationalState::new(Vec3::new(0.5, 0.0, 0.0), Vec3::zeros());
        let (u, g) = pseudo_potentials(&st, 0.0, &p).unwrap();
        let expected = 0.125 + 0.98785 / 0.51215 + 0.01215 / 0.48785;
        assert!((u - expected).abs() < 1e-14);
        assert_eq!(g, 0.0);
        let on_axis = TranslationalState::new(Vec3::new(0.0, 0.0, 1.0), Vec3::zeros());
        let (u_z, _) = pseudo_potentials(&on_axis, 0.0, &p).unwrap();
        let r1 = (0.01215f64.powi(2) + 1.0).sqrt();
        let r2 = ((1.0f64 - 0.01215).powi(2) + 1.0).sqrt();
        assert!((u_z - (0.98785 / r1 + 0.01215 / r2)).abs() < 1e-14);
    }

    #[test]
    fn singularity_floor_is_enforced() {
        let p = params();
        let at_moon = TranslationalState::new(p.moon_position(), Vec3::zeros());
        assert!(matches!(
            translational_derivative(0.0, &at_moon, &Vec3::zeros(), &p),
            Err(Error::Singularity { body: "Moon", .. })
        ));
        let at_earth = TranslationalState::new(p.earth_position(), Vec3::zeros());
        assert!(matches!(
            pseudo_potentials(&at_earth, 0.0, &p),
            Err(Error::Singularity { body: "Earth", .. })
        ));
    }

    #[test]
    fn planar_symmetry_on_x_axis() {
        let p = SystemParams::cr3bp(0.01215, 384_399.0, 375_190.0);
        let st = TranslationalState::new(Vec3::new(0.7, 0.0, 0.0), Vec3::zeros());
        let d = translational_derivative(0.0, &st, &Vec3::zeros(), &p).unwrap();
        assert_eq!(d[4], 0.0);
        assert_eq!(d[5], 0.0);
    }

    #[test]
    fn control_enters_additively() {
        let p = params();
        let st = TranslationalState::new(Vec3::new(1.02, -0.01, -0.18), Vec3::new(0.0, -0.1, 0.0));
        let d0 = translational_derivative(0.4, &st, &Vec3::zeros(), &p).unwrap();
        let c = 0.0123;
        let d1 = translational_derivative(0.4, &st, &Vec3::new(c, 0.0, 0.0), &p).unwrap();
        assert!(((d1[3] - d0[3]) - c).abs() < 1e-15);
        for i in [0, 1, 2, 4, 5] {
            assert_eq!(d0[i], d1[i]);
        }
    }

    #[test]
    fn l1_is_an_equilibrium() {
        let p = SystemParams::cr3bp(0.01215, 384_399.0, 375_190.0);
        let x = collinear_point(&p, Collinear::L1);
        assert!(x > 0.8 && x < 0.9);
        let st = TranslationalState::new(Vec3::new(x, 0.0, 0.0), Vec3::zeros());
        let d = translational_derivative(0.0, &st, &Vec3::zeros(), &p).unwrap();
        assert!(d.norm() < 1e-12, "{d}");
    }

    #[test]
    fn input_matrix_is_constant() {
        let p = params();
        let a = TranslationalState::new(Vec3::new(1.02, 0.0, -0.18), Vec3::zeros());
        let b = TranslationalState::new(Vec3::new(0.9, 0.1, 0.02), Vec3::new(0.1, 0.0, 0.0));
        let (aa, ba) = linearize_translational(0.1, &a, &p).unwrap();
        let (_, bb) = linearize_translational(2.3, &b, &p).unwrap();
        assert_eq!(ba, bb);
        assert_eq!(ba, input_matrix());
        assert_eq!(aa.fixed_view::<3, 3>(0, 0).into_owned(), Mat3::zeros());
        assert_eq!(aa.fixed_view::<3, 3>(0, 3).into_owned(), Mat3::identity());
    }
}
