//! Reference problem instances.
//!
//! Curved paths are sampled from closed-form curves at evenly spaced knots
//! with exact first and second derivatives, so the piecewise quintic fit is
//! C² and very close to the curve.

use std::f64::consts::{FRAC_PI_2, PI};

use fovtopp_core::pathspec::{
    AngleKnot, AttitudeCone, AttitudeWindow, Landmark, PathKnot, PathSpec, ProblemInstance, SRange,
    VisibilityWindow,
};
use fovtopp_core::quadmodel::{CameraRig, QuadParams, STANDARD_GRAVITY};
use fovtopp_core::{Mat3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Names of the fixtures returned by [`by_name`].
pub const NAMES: [&str; 6] = ["bang_bang", "spiral", "orbit", "lookahead", "helix", "slalom"];

/// Instances that carry field-of-view requirements.
pub const PERCEPTION: [&str; 5] = ["spiral", "orbit", "lookahead", "helix", "slalom"];

pub fn by_name(name: &str) -> Option<ProblemInstance> {
    Some(match name {
        "bang_bang" => bang_bang(),
        "spiral" => spiral(),
        "orbit" => orbit(),
        "lookahead" => lookahead(),
        "helix" => helix(),
        "slalom" => slalom(),
        _ => return None,
    })
}

pub fn quad(c_max: f64) -> QuadParams {
    QuadParams {
        inertia: Mat3::diagonal([0.0025, 0.0025, 0.0045]),
        k_l: 0.1,
        k_m: 0.02,
        c_min: 0.0,
        c_max,
        gravity: Vec3::new(0.0, 0.0, -STANDARD_GRAVITY),
    }
}

type Curve<'a> = &'a dyn Fn(f64) -> [Vec3; 3];
type Angle<'a> = &'a dyn Fn(f64) -> [f64; 3];

/// Path through `pieces + 1` knots of a curve and heading given in a parameter
/// `p ∈ [0, p_end]`, reparameterized as `s = scale·p`.
pub fn sampled_path(curve: Curve, heading: Angle, p_end: f64, pieces: usize, scale: f64) -> PathSpec {
    let (k1, k2) = (1.0 / scale, 1.0 / (scale * scale));
    let mut knots = Vec::with_capacity(pieces + 1);
    let mut angles = Vec::with_capacity(pieces + 1);
    for i in 0..=pieces {
        let p = p_end * i as f64 / pieces as f64;
        let s = scale * p;
        let [value, d1, d2] = curve(p);
        knots.push(PathKnot { s, value, d1: d1 * k1, d2: d2 * k2 });
        let [a, a1, a2] = heading(p);
        angles.push(AngleKnot { s, value: a, d1: a1 * k1, d2: a2 * k2 });
    }
    PathSpec::from_knots(&knots, &angles).expect("fixture curves are regular")
}

fn whole_path(instance: &mut ProblemInstance, ids: Vec<u32>, cone: Option<AttitudeCone>) {
    let range = SRange::new(0.0, instance.path.s_end());
    if !ids.is_empty() {
        instance.visibility.push(VisibilityWindow { range, ids });
    }
    if let Some(cone) = cone {
        instance.attitude.push(AttitudeWindow { range, cone });
    }
}

fn tilt_cone(max_angle: f64) -> AttitudeCone {
    AttitudeCone { axis: Vec3::Z, max_angle }
}

/// Straight 10 m at rest on both ends with a total-thrust bound of 2g and no
/// perception requirements. The time-optimal profile accelerates at `g√3`
/// and brakes symmetrically.
pub fn bang_bang() -> ProblemInstance {
    let path = PathSpec::straight(Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)).expect("valid segment");
    let mut inst = ProblemInstance::new(path, quad(0.5 * STANDARD_GRAVITY), CameraRig { offset: 0.1, half_angle: 0.5 });
    inst.solver.grid_n = 1000;
    inst.solver.sigma = 1.0;
    inst
}

/// Bang-bang traversal time `2√(S/a)` with `a = √((4c_max)² − g²)`.
pub fn bang_bang_time(length: f64, c_max: f64) -> f64 {
    let total = 4.0 * c_max;
    let a = (total * total - STANDARD_GRAVITY * STANDARD_GRAVITY).sqrt();
    2.0 * (length / a).sqrt()
}

/// Inward spiral of one and a half turns, slowly climbing, with the camera
/// facing a landmark at the spiral's center.
pub fn spiral() -> ProblemInstance {
    let k = 0.5 / PI;
    let rise = 0.15;
    let curve = |p: f64| {
        let r = 6.0 - k * p;
        let (sn, cs) = p.sin_cos();
        [
            Vec3::new(r * cs, r * sn, rise * p),
            Vec3::new(-k * cs - r * sn, -k * sn + r * cs, rise),
            Vec3::new(2.0 * k * sn - r * cs, -2.0 * k * cs - r * sn, 0.0),
        ]
    };
    let heading = |p: f64| [p + PI, 1.0, 0.0];
    let path = sampled_path(&curve, &heading, 3.0 * PI, 24, 4.0);
    let mut inst = ProblemInstance::new(path, quad(0.6 * STANDARD_GRAVITY), CameraRig { offset: 0.1, half_angle: 0.5 });
    inst.landmarks.push(Landmark { id: 1, position: Vec3::ZERO });
    whole_path(&mut inst, vec![1], Some(tilt_cone(0.5)));
    inst
}

/// Three quarters of a level circle of radius 6 facing a landmark below its center.
pub fn orbit() -> ProblemInstance {
    let r = 6.0;
    let curve = |p: f64| {
        let (sn, cs) = p.sin_cos();
        [Vec3::new(r * cs, r * sn, 2.0), Vec3::new(-r * sn, r * cs, 0.0), Vec3::new(-r * cs, -r * sn, 0.0)]
    };
    let heading = |p: f64| [p + PI, 1.0, 0.0];
    let path = sampled_path(&curve, &heading, 1.5 * PI, 12, r);
    let mut inst = ProblemInstance::new(path, quad(0.6 * STANDARD_GRAVITY), CameraRig { offset: 0.1, half_angle: 0.6 });
    inst.landmarks.push(Landmark { id: 1, position: Vec3::new(0.0, 0.0, 0.5) });
    whole_path(&mut inst, vec![1], Some(tilt_cone(0.6)));
    inst
}

/// Straight 20 m run toward a landmark 10 m past the end, so pitching to
/// accelerate or brake tilts the camera off the target.
pub fn lookahead() -> ProblemInstance {
    let path = PathSpec::straight(Vec3::new(0.0, 0.0, 1.5), Vec3::new(20.0, 0.0, 1.5)).expect("valid segment");
    let mut inst = ProblemInstance::new(path, quad(0.6 * STANDARD_GRAVITY), CameraRig { offset: 0.1, half_angle: 0.45 });
    inst.landmarks.push(Landmark { id: 1, position: Vec3::new(30.0, 0.0, 1.0) });
    whole_path(&mut inst, vec![1], None);
    inst.solver.sigma = 1.5;
    inst
}

/// One climbing turn of a helix of radius 5 facing a landmark on its axis.
pub fn helix() -> ProblemInstance {
    let (r, pitch) = (5.0, 3.0);
    let climb = pitch / (2.0 * PI);
    let curve = |p: f64| {
        let (sn, cs) = p.sin_cos();
        [
            Vec3::new(r * cs, r * sn, climb * p),
            Vec3::new(-r * sn, r * cs, climb),
            Vec3::new(-r * cs, -r * sn, 0.0),
        ]
    };
    let heading = |p: f64| [p + PI, 1.0, 0.0];
    let path = sampled_path(&curve, &heading, 2.0 * PI, 16, r);
    let mut inst = ProblemInstance::new(path, quad(0.6 * STANDARD_GRAVITY), CameraRig { offset: 0.1, half_angle: 0.6 });
    inst.landmarks.push(Landmark { id: 1, position: Vec3::new(0.0, 0.0, 0.5 * pitch) });
    whole_path(&mut inst, vec![1], Some(tilt_cone(0.6)));
    inst
}

/// Sideways weave along x with a fixed heading, keeping a landmark ahead in
/// view for the first two thirds of the run and a second one for the rest.
pub fn slalom() -> ProblemInstance {
    let (len, amp) = (24.0, 1.5);
    let w = 2.0 * PI / 12.0;
    let curve = |x: f64| {
        let (sn, cs) = (w * x).sin_cos();
        [Vec3::new(x, amp * sn, 1.0), Vec3::new(1.0, amp * w * cs, 0.0), Vec3::new(0.0, -amp * w * w * sn, 0.0)]
    };
    let heading = |_: f64| [0.0, 0.0, 0.0];
    let path = sampled_path(&curve, &heading, len, 24, 1.0);
    let mut inst = ProblemInstance::new(path, quad(0.6 * STANDARD_GRAVITY), CameraRig { offset: 0.1, half_angle: 0.6 });
    let s_end = inst.path.s_end();
    inst.landmarks.push(Landmark { id: 1, position: Vec3::new(40.0, 0.0, 1.0) });
    inst.landmarks.push(Landmark { id: 2, position: Vec3::new(45.0, -3.0, 0.0) });
    inst.visibility.push(VisibilityWindow { range: SRange::new(0.0, 2.0 * s_end / 3.0), ids: vec![1] });
    inst.visibility.push(VisibilityWindow { range: SRange::new(s_end / 2.0, s_end), ids: vec![2] });
    inst.attitude.push(AttitudeWindow { range: SRange::new(0.0, s_end), cone: tilt_cone(0.7) });
    inst
}

/// Landmark added by the monotonicity checks: near the fixture's first
/// landmark, required over the whole path.
pub fn with_extra_landmark(instance: &ProblemInstance) -> ProblemInstance {
    let mut inst = instance.clone();
    let id = inst.landmarks.iter().map(|l| l.id).max().unwrap_or(0) + 1;
    let base = inst.landmarks.first().map_or(Vec3::new(30.0, 0.0, 0.0), |l| l.position);
    inst.landmarks.push(Landmark { id, position: base + Vec3::new(0.3, -0.2, 0.4) });
    let range = SRange::new(0.0, inst.path.s_end());
    inst.visibility.push(VisibilityWindow { range, ids: vec![id] });
    inst
}

pub fn with_narrower_camera(instance: &ProblemInstance, factor: f64) -> ProblemInstance {
    let mut inst = instance.clone();
    inst.camera.half_angle *= factor;
    inst
}

/// Single cubic segment of length 4–8 m heading roughly along x, with a
/// landmark ahead that must stay in view, a speed limit, and sometimes a tilt cone.
pub fn random_cubic(seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len: f64 = rng.random_range(4.0..8.0);
    let yaw: f64 = rng.random_range(-0.3..0.3);
    let dir = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let mut coeffs = [[0.0; 4]; 3];
    for (axis, c) in coeffs.iter_mut().enumerate() {
        c[0] = rng.random_range(-1.0..1.0);
        c[1] = dir[axis];
        c[2] = rng.random_range(-0.04..0.04);
        c[3] = rng.random_range(-0.004..0.004);
    }
    let segment = fovtopp_core::pathspec::PathSegment {
        start: 0.0,
        end: len,
        gamma: coeffs.map(|c| fovtopp_core::pathspec::Polynomial::new(c.to_vec())),
    };
    let heading = fovtopp_core::pathspec::HeadingSegment {
        start: 0.0,
        end: len,
        theta: fovtopp_core::pathspec::Polynomial::new(vec![yaw]),
    };
    let path = PathSpec::new(vec![segment], vec![heading]).expect("cubic fixtures are regular");
    let half_angle = rng.random_range(0.45..0.8);
    let mut inst = ProblemInstance::new(path, quad(0.6 * STANDARD_GRAVITY), CameraRig { offset: 0.1, half_angle });
    let ahead = Vec3::new(coeffs[0][0], coeffs[1][0], coeffs[2][0]) + dir * (len + rng.random_range(6.0..12.0));
    inst.landmarks.push(Landmark { id: 1, position: ahead + Vec3::new(0.0, rng.random_range(-1.0..1.0), -0.5) });
    let tilt = rng.random_bool(0.5).then(|| tilt_cone(rng.random_range(0.5..FRAC_PI_2 - 0.2)));
    whole_path(&mut inst, vec![1], tilt);
    inst.solver.grid_n = 50;
    inst.solver.v_max = Some(rng.random_range(4.0..6.0));
    inst
}
