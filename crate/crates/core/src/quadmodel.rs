//! Quadrotor parameters, the motor mixer, and flatness-based recovery of
//! attitude, body rates, torque and per-motor thrusts.
//!
//! All quantities are mass-normalized: thrusts in m/s², torques in rad/s²
//! scaled by the mass-normalized inertia (m²).

use alloc::format;

use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};

/// Thrust magnitudes at or below this are treated as zero when building an attitude.
pub const THRUST_EPS: f64 = 1e-9;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadParams {
    /// Mass-normalized inertia, symmetric positive definite (m²).
    pub inertia: Mat3,
    /// Lever coefficient of the roll/pitch rows of the mixer (m).
    pub k_l: f64,
    /// Drag-torque coefficient of the yaw row of the mixer (m).
    pub k_m: f64,
    /// Per-motor thrust bounds (m/s²).
    pub c_min: f64,
    pub c_max: f64,
    /// World-frame gravity vector (m/s²).
    pub gravity: Vec3,
}

impl QuadParams {
    pub fn validate(&self) -> Result<()> {
        let j = &self.inertia.0;
        if !self.inertia.is_finite() {
            return Err(Error::Validation("quad.J has non-finite entries".into()));
        }
        let scale = self.inertia.max_abs().max(f64::MIN_POSITIVE);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            if (j[a][b] - j[b][a]).abs() > 1e-12 * scale {
                return Err(Error::Validation("quad.J must be symmetric".into()));
            }
        }
        // Sylvester: leading principal minors of a symmetric matrix
        let m1 = j[0][0];
        let m2 = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let m3 = self.inertia.determinant();
        if !(m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
            return Err(Error::Validation("quad.J must be positive definite".into()));
        }
        if !(self.k_l > 0.0 && self.k_l.is_finite()) {
            return Err(Error::Validation(format!("quad.k_L must be > 0, got {}", self.k_l)));
        }
        if !(self.k_m > 0.0 && self.k_m.is_finite()) {
            return Err(Error::Validation(format!("quad.k_M must be > 0, got {}", self.k_m)));
        }
        if !(self.c_min >= 0.0 && self.c_min < self.c_max && self.c_max.is_finite()) {
            return Err(Error::Validation(format!(
                "quad thrust bounds need 0 <= c_min < c_max, got [{}, {}]",
                self.c_min, self.c_max
            )));
        }
        if !self.gravity.is_finite() {
            return Err(Error::Validation("quad.gravity must be finite".into()));
        }
        Ok(())
    }

    /// Upper bound on the collective thrust, four motors at `c_max`.
    pub fn total_thrust_max(&self) -> f64 {
        4.0 * self.c_max
    }
}

/// Camera mounted along the body x axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraRig {
    /// Optical-center offset along body x (m).
    pub offset: f64,
    /// Half-angle of the circular field-of-view cone (rad).
    pub half_angle: f64,
}

impl CameraRig {
    pub fn validate(&self) -> Result<()> {
        if !(self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(Error::Validation(format!("camera.d must be >= 0, got {}", self.offset)));
        }
        if !(self.half_angle > 0.0 && self.half_angle < core::f64::consts::FRAC_PI_2) {
            return Err(Error::Validation(format!(
                "camera.alpha must lie in (0, pi/2), got {}",
                self.half_angle
            )));
        }
        Ok(())
    }
}

/// Linear map between the four motor thrusts and (collective thrust, torque).
#[derive(Clone, Debug, PartialEq)]
pub struct Mixer {
    pub forward: [[f64; 4]; 4],
    pub inverse: [[f64; 4]; 4],
}

impl Mixer {
    pub fn new(params: &QuadParams) -> Mixer {
        let (l, m) = (params.k_l, params.k_m);
        let forward = [
            [1.0, 1.0, 1.0, 1.0],
            [-l, l, l, -l],
            [-l, -l, l, l],
            [-m, m, -m, m],
        ];
        // Rows are orthogonal, so the matrix is never singular for k_L, k_M > 0.
        let inverse = invert4(&forward).expect("mixer rows are orthogonal");
        Mixer { forward, inverse }
    }

    /// `(c, τ₁, τ₂, τ₃)` produced by the given motor thrusts.
    pub fn apply(&self, motors: &[f64; 4]) -> [f64; 4] {
        mat4_vec(&self.forward, motors)
    }

    pub fn apply_inverse(&self, wrench: &[f64; 4]) -> [f64; 4] {
        mat4_vec(&self.inverse, wrench)
    }
}

pub fn mixer_matrix(params: &QuadParams) -> Mixer {
    Mixer::new(params)
}

fn mat4_vec(m: &[[f64; 4]; 4], v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert4(a: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut m = *a;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let pivot = (col..4).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for j in 0..4 {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..4 {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for j in 0..4 {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Lateral heading axis `z_W × ψ`.
pub fn psi_perp(psi: &Vec3) -> Vec3 {
    Vec3::Z.cross(psi)
}

/// Rotation whose z column is along the thrust and whose x column lies in the
/// plane spanned by the heading and the thrust.
pub fn attitude_from_thrust(thrust: &Vec3, psi: &Vec3) -> Result<Mat3> {
    let z_b = thrust.normalized(THRUST_EPS).ok_or(Error::DegenerateAttitude)?;
    let lateral = psi_perp(psi);
    let x_raw = lateral.cross(thrust);
    if x_raw.norm() <= THRUST_EPS {
        return Err(Error::DegenerateAttitude);
    }
    let x_b = lateral.cross(&z_b).normalized(0.0).ok_or(Error::DegenerateAttitude)?;
    let y_b = z_b.cross(&x_b);
    Ok(Mat3::from_columns(x_b, y_b, z_b))
}

/// Body angular velocity `Γ·√h` for body-rate map `Γ` and squared speed `h`.
pub fn body_rates(gamma: &Vec3, h: f64) -> Vec3 {
    *gamma * crate::math::sqrt(h.max(0.0))
}

/// Body torque `ω × Jω + J ω̇` with `ω = Γ√h` and `ω̇ = Γ′h + ½Γh′`.
pub fn torque(gamma: &Vec3, gamma_prime: &Vec3, h: f64, h_prime: f64, inertia: &Mat3) -> Vec3 {
    let omega = body_rates(gamma, h);
    let omega_dot = *gamma_prime * h + *gamma * (0.5 * h_prime);
    omega.cross(&inertia.mul_vec(&omega)) + inertia.mul_vec(&omega_dot)
}

/// Coefficients `(a_h, a_hp)` with `τ = a_h·h + a_hp·h′`.
pub fn torque_coefficients(gamma: &Vec3, gamma_prime: &Vec3, inertia: &Mat3) -> (Vec3, Vec3) {
    let per_h = gamma.cross(&inertia.mul_vec(gamma)) + inertia.mul_vec(gamma_prime);
    let per_h_prime = inertia.mul_vec(gamma) * 0.5;
    (per_h, per_h_prime)
}

/// Per-motor thrusts realizing collective thrust `c_par` and torque `tau`.
pub fn motor_thrusts(c_par: f64, tau: &Vec3, mixer: &Mixer) -> [f64; 4] {
    mixer.apply_inverse(&[c_par, tau.0[0], tau.0[1], tau.0[2]])
}

#[cfg(test)]
pub(crate) fn test_params() -> QuadParams {
    QuadParams {
        inertia: Mat3::diagonal([0.0025, 0.0025, 0.0045]),
        k_l: 0.1,
        k_m: 0.05,
        c_min: 0.0,
        c_max: 2.0 * STANDARD_GRAVITY / 4.0,
        gravity: Vec3::new(0.0, 0.0, -STANDARD_GRAVITY),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn det4(m: &[[f64; 4]; 4]) -> f64 {
        // cofactor expansion along row 0
        let minor = |col: usize| {
            let mut s = [[0.0; 3]; 3];
            for r in 1..4 {
                let mut k = 0;
                for c in 0..4 {
                    if c != col {
                        s[r - 1][k] = m[r][c];
                        k += 1;
                    }
                }
            }
            Mat3(s).determinant()
        };
        (0..4).map(|c| if c % 2 == 0 { 1.0 } else { -1.0 } * m[0][c] * minor(c)).sum()
    }

    #[test]
    fn hover_split_is_symmetric() {
        let mixer = mixer_matrix(&test_params());
        let c = 2.3;
        let w = mixer.apply(&[c; 4]);
        assert!((w[0] - 4.0 * c).abs() < 1e-15);
        assert!(w[1..].iter().all(|v| v.abs() < 1e-15));
        let m = mixer.apply_inverse(&[4.0 * c, 0.0, 0.0, 0.0]);
        assert!(m.iter().all(|v| (v - c).abs() < 1e-14));
    }

    #[test]
    fn determinant_matches_closed_form() {
        let p = test_params();
        let mixer = mixer_matrix(&p);
        let expected = 16.0 * p.k_l * p.k_l * p.k_m;
        assert!((det4(&mixer.forward).abs() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn inverse_matches_orthogonal_row_structure() {
        for (kl, km) in [(0.1, 0.05), (0.17, 0.013), (1.3, 0.4)] {
            let p = QuadParams { k_l: kl, k_m: km, ..test_params() };
            let mixer = mixer_matrix(&p);
            let d = [0.25, 0.25 / (kl * kl), 0.25 / (kl * kl), 0.25 / (km * km)];
            for i in 0..4 {
                for j in 0..4 {
                    let closed = mixer.forward[j][i] * d[j];
                    let got = mixer.inverse[i][j];
                    assert!((got - closed).abs() <= 1e-12 * closed.abs().max(1e-300));
                }
            }
            // F·F⁻¹ = I
            for i in 0..4 {
                for j in 0..4 {
                    let v: f64 = (0..4).map(|k| mixer.forward[i][k] * mixer.inverse[k][j]).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((v - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn motor_thrust_examples() {
        let p = test_params();
        let mixer = mixer_matrix(&p);
        assert_eq!(motor_thrusts(8.0, &Vec3::ZERO, &mixer).map(|v| (v * 1e12).round() / 1e12), [2.0; 4]);
        assert_eq!(motor_thrusts(0.0, &Vec3::ZERO, &mixer), [0.0; 4]);
        let m = motor_thrusts(8.0, &Vec3::new(0.4 * p.k_l, 0.0, 0.0), &mixer);
        for (got, want) in m.iter().zip([1.9, 2.1, 2.1, 1.9]) {
            assert!((got - want).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn hover_attitude_is_identity() {
        let r = attitude_from_thrust(&Vec3::new(0.0, 0.0, 9.81), &Vec3::X).unwrap();
        assert!(r.sub(&Mat3::IDENTITY).max_abs() < 1e-15);
    }

    #[test]
    fn tilted_attitude_columns() {
        let r = attitude_from_thrust(&Vec3::new(9.81, 0.0, 9.81), &Vec3::X).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!((r.column(0) - Vec3::new(h, 0.0, -h)).max_abs() < 1e-15);
        assert!((r.column(1) - Vec3::Y).max_abs() < 1e-15);
        assert!((r.column(2) - Vec3::new(h, 0.0, h)).max_abs() < 1e-15);
        assert!(r.orthonormality_error() < 1e-15);
        assert!((r.determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn thrust_along_lateral_axis_is_degenerate() {
        assert_eq!(
            attitude_from_thrust(&Vec3::new(0.0, 1.0, 0.0), &Vec3::X),
            Err(Error::DegenerateAttitude)
        );
        assert_eq!(attitude_from_thrust(&Vec3::ZERO, &Vec3::X), Err(Error::DegenerateAttitude));
    }

    #[test]
    fn body_rate_examples() {
        assert_eq!(body_rates(&Vec3::ZERO, 25.0), Vec3::ZERO);
        assert_eq!(body_rates(&Vec3::new(1.0, -2.0, 3.0), 0.0), Vec3::ZERO);
        assert_eq!(body_rates(&Vec3::new(0.2, 0.0, 0.0), 4.0), Vec3::new(0.4, 0.0, 0.0));
    }

    #[test]
    fn torque_examples() {
        let j = test_params().inertia;
        assert_eq!(torque(&Vec3::ZERO, &Vec3::ZERO, 3.0, -2.0, &j), Vec3::ZERO);
        let (a, b) = (0.7, 1.9);
        let t = torque(&Vec3::new(a, 0.0, 0.0), &Vec3::ZERO, 5.0, 2.0 * b, &Mat3::IDENTITY);
        assert!((t - Vec3::new(a * b, 0.0, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn torque_coefficients_agree_with_direct_form() {
        let j = Mat3([[0.003, 0.0001, 0.0], [0.0001, 0.004, 0.0002], [0.0, 0.0002, 0.006]]);
        let g = Vec3::new(0.3, -1.1, 0.4);
        let gp = Vec3::new(-2.0, 0.5, 1.5);
        let (ah, ahp) = torque_coefficients(&g, &gp, &j);
        for (h, hp) in [(0.0, 0.0), (3.0, -1.0), (40.0, 12.0)] {
            let direct = torque(&g, &gp, h, hp, &j);
            let lin = ah * h + ahp * hp;
            assert!((direct - lin).max_abs() < 1e-12 * (1.0 + direct.max_abs()));
        }
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = test_params();
        assert!(p.validate().is_ok());
        p.inertia.0[0][1] = 0.001;
        assert!(p.validate().is_err());
        let mut p = test_params();
        p.inertia.0[2][2] = -1.0;
        assert!(p.validate().is_err());
        let p = QuadParams { c_min: 5.0, c_max: 4.0, ..test_params() };
        assert!(p.validate().is_err());
        let p = QuadParams { k_m: 0.0, ..test_params() };
        assert!(p.validate().is_err());
        assert!(CameraRig { offset: 0.1, half_angle: 1.6 }.validate().is_err());
        assert!(CameraRig { offset: -0.1, half_angle: 0.5 }.validate().is_err());
    }
}
