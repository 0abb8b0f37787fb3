use fovtopp_core::quadmodel::{body_rates, torque, torque_coefficients};
use fovtopp_core::{Mat3, Vec3};
use proptest::prelude::*;

const FD_STEP: f64 = 1e-5;

/// Path timing `s(t) = t + 0.3t²`, so `h = ṡ²` and `h′ = 2s̈`.
fn timing(t: f64) -> (f64, f64, f64) {
    let s = t + 0.3 * t * t;
    let sd = 1.0 + 0.6 * t;
    (s, sd * sd, 2.0 * 0.6)
}

fn rate_map(c: &[Vec3; 3], s: f64) -> (Vec3, Vec3) {
    (c[0] + c[1] * s + c[2] * (s * s), c[1] + c[2] * (2.0 * s))
}

fn rotation(a: &[f64; 3], s: f64) -> Mat3 {
    let (rz, ry, rx) = (a[0] * s, a[1] * s * s, a[2] * s.sin());
    let z = Mat3([[rz.cos(), -rz.sin(), 0.0], [rz.sin(), rz.cos(), 0.0], [0.0, 0.0, 1.0]]);
    let y = Mat3([[ry.cos(), 0.0, ry.sin()], [0.0, 1.0, 0.0], [-ry.sin(), 0.0, ry.cos()]]);
    let x = Mat3([[1.0, 0.0, 0.0], [0.0, rx.cos(), -rx.sin()], [0.0, rx.sin(), rx.cos()]]);
    z.mul_mat(&y).mul_mat(&x)
}

fn vee_of_derivative(f: impl Fn(f64) -> Mat3, x: f64) -> Vec3 {
    let d = f(x + FD_STEP).sub(&f(x - FD_STEP)).scale(0.5 / FD_STEP);
    f(x).transpose().mul_mat(&d).skew_part_vee()
}

fn coeffs() -> impl Strategy<Value = [Vec3; 3]> {
    prop::array::uniform3(prop::array::uniform3(-1.0..1.0f64).prop_map(Vec3))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn torque_matches_differentiated_body_rates(c in coeffs(), t in 0.0..2.0f64) {
        let j = Mat3::diagonal([0.0025, 0.0031, 0.0045]);
        let omega = |t: f64| {
            let (s, h, _) = timing(t);
            rate_map(&c, s).0 * h.sqrt()
        };
        let (s, h, h_prime) = timing(t);
        let w = omega(t);
        let w_dot = (omega(t + FD_STEP) - omega(t - FD_STEP)) * (0.5 / FD_STEP);
        let expected = w.cross(&j.mul_vec(&w)) + j.mul_vec(&w_dot);
        let (gamma, gamma_d1) = rate_map(&c, s);
        let got = torque(&gamma, &gamma_d1, h, h_prime, &j);
        prop_assert!((got - expected).max_abs() <= 1e-6 * (1e-3 + expected.max_abs()));
    }

    #[test]
    fn torque_coefficients_reproduce_torque(c in coeffs(), s in 0.0..3.0f64, h in 0.0..40.0f64, hp in -30.0..30.0f64) {
        let j = Mat3::diagonal([0.0025, 0.0031, 0.0045]);
        let (gamma, gamma_d1) = rate_map(&c, s);
        let (a_h, a_hp) = torque_coefficients(&gamma, &gamma_d1, &j);
        let direct = torque(&gamma, &gamma_d1, h, hp, &j);
        prop_assert!((a_h * h + a_hp * hp - direct).max_abs() <= 1e-12 * (1.0 + direct.max_abs()));
    }

    #[test]
    fn body_rates_match_rotation_in_time(a in prop::array::uniform3(-1.0..1.0f64), t in 0.0..2.0f64) {
        let (s, h, _) = timing(t);
        let in_time = vee_of_derivative(|t| rotation(&a, timing(t).0), t);
        let gamma = vee_of_derivative(|s| rotation(&a, s), s);
        prop_assert!((body_rates(&gamma, h) - in_time).max_abs() <= 1e-6 * (1.0 + in_time.max_abs()));
    }
}
