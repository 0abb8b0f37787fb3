//! Time reconstruction, trajectory sampling and an independent constraint check.

use alloc::vec::Vec;

use crate::attsmooth::RotationSchedule;
use crate::error::{Error, Result};
use crate::math::{sqrt, Mat3, Vec3};
use crate::pathspec::{eval_path, requirements_at, Grid, ProblemInstance};
use crate::profilesolver::SquareSpeedProfile;
use crate::quadmodel::{attitude_from_thrust, mixer_matrix, motor_thrusts, torque};

/// Residual below which a verified quantity counts as violated.
pub const VIOLATION_TOL: f64 = 1e-6;

/// Node timestamps and total time.
///
/// Path acceleration is constant on each step, giving
/// `Δt_i = 2Δs / (√h_i + √h_{i+1})`.
pub fn reconstruct_time(profile: &SquareSpeedProfile) -> Result<(Vec<f64>, f64)> {
    let mut t = Vec::with_capacity(profile.h.len());
    t.push(0.0);
    let mut acc = 0.0;
    for (i, w) in profile.h.windows(2).enumerate() {
        let denom = sqrt(w[0].max(0.0)) + sqrt(w[1].max(0.0));
        if !(denom > 0.0) {
            return Err(Error::SingularProfile { index: i });
        }
        acc += 2.0 * profile.ds / denom;
        t.push(acc);
    }
    Ok((t, acc))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub s: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub rotation: Mat3,
    pub omega: Vec3,
    pub motors: [f64; 4],
}

impl TrajectorySample {
    /// Orientation as a unit quaternion `[w, x, y, z]`.
    pub fn quaternion(&self) -> [f64; 4] {
        self.rotation.to_quaternion()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub total_time: f64,
}

/// Samples the trajectory at `0, dt, 2dt, …` and at the final time.
///
/// Within step `i` the path parameter follows `s = s_i + √h_i τ + ¼h′_i τ²`.
/// Attitude, body-rate map and its derivative come from the nearest grid node.
pub fn sample_trajectory(
    instance: &ProblemInstance,
    grid: &Grid,
    profile: &SquareSpeedProfile,
    schedule: &RotationSchedule,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive"));
    }
    if profile.h.len() != grid.points.len() || schedule.nodes.len() != grid.points.len() {
        return Err(Error::InvalidArgument("profile, schedule and grid lengths differ"));
    }
    let (stamps, total) = reconstruct_time(profile)?;
    let n = grid.n();
    let mixer = mixer_matrix(&instance.quad);
    let gravity = instance.quad.gravity;

    let steps = libm::floor(total / dt) as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).filter(|t| *t < total).collect();
    times.push(total);

    let mut samples = Vec::with_capacity(times.len());
    let mut seg = 0;
    for &t in &times {
        while seg + 1 < n && stamps[seg + 1] <= t {
            seg += 1;
        }
        let hp = profile.h_prime(seg);
        let root0 = sqrt(profile.h[seg].max(0.0));
        let tau = (t - stamps[seg]).max(0.0);
        let s = if t == total {
            grid.s(n)
        } else {
            (grid.s(seg) + root0 * tau + 0.25 * hp * tau * tau).clamp(grid.s(seg), grid.s(seg + 1))
        };
        let h = if t == total { profile.h[n] } else { (profile.h[seg] + hp * (s - grid.s(seg))).max(0.0) };
        let p = eval_path(&instance.path, s.min(instance.path.s_end()))?;
        let rate = sqrt(h);
        let velocity = p.tangent * rate;
        let acceleration = p.tangent * (0.5 * hp) + p.curvature * h;
        let node = &schedule.nodes[grid.nearest(s)];
        let thrust = acceleration - gravity;
        let c_par = thrust.dot(&node.z_axis());
        let tau_b = torque(&node.gamma, &node.gamma_d1, h, hp, &instance.quad.inertia);
        samples.push(TrajectorySample {
            t,
            s,
            position: p.position,
            velocity,
            acceleration,
            rotation: node.rotation,
            omega: node.gamma * rate,
            motors: motor_thrusts(c_par, &tau_b, &mixer),
        });
    }
    Ok(Trajectory { samples, total_time: total })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSlack {
    pub landmark: u32,
    /// `α + margin − angle` on the flown attitude (rad).
    pub flown: f64,
    /// `α − angle` on the attitude implied by the thrust direction (rad).
    pub thrust_implied: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleResiduals {
    pub fov: Vec<LandmarkSlack>,
    /// `β − angle(z_B, n)` per active attitude cone (rad).
    pub cone: Vec<f64>,
    /// `4c_max − ‖a − g‖` (m/s²).
    pub total_thrust: f64,
    /// Distance of each motor thrust to its nearer bound, negative outside (m/s²).
    pub motors: [f64; 4],
    /// `‖z_B × (a − g)‖` (m/s²).
    pub nonholonomy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ViolationCounts {
    pub fov_flown: usize,
    pub fov_thrust_implied: usize,
    pub cone: usize,
    pub total_thrust: usize,
    pub motors: usize,
    pub nonholonomy: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub margin_deg: f64,
    pub eta: f64,
    pub samples: Vec<SampleResiduals>,
    /// Smallest slack of each kind; `+∞` when the kind never occurs.
    pub min_fov_flown: f64,
    pub min_fov_thrust_implied: f64,
    pub min_cone: f64,
    pub min_total_thrust: f64,
    pub min_motor: f64,
    pub max_nonholonomy: f64,
    pub violations: ViolationCounts,
}

impl VerificationReport {
    /// No FoV, cone, thrust or motor violations. Nonholonomy is reported but
    /// not judged: off-node samples take the nearest node's attitude.
    pub fn is_clean(&self) -> bool {
        let v = &self.violations;
        v.fov_flown + v.fov_thrust_implied + v.cone + v.total_thrust + v.motors == 0
    }
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.angle_to(b)
}

/// Rechecks every constraint from raw geometry on the sampled trajectory.
///
/// The thrust-implied attitude puts the body z axis along `a − g`; it is the
/// attitude the point-mass pass constrains, while the flown attitude is the
/// smoothed one stored in the samples.
pub fn verify(trajectory: &Trajectory, instance: &ProblemInstance, margin_deg: f64) -> VerificationReport {
    let margin = margin_deg.to_radians();
    let quad = &instance.quad;
    let cam = &instance.camera;
    let eta = instance.solver.eta;
    let mut counts = ViolationCounts::default();
    let mut report = VerificationReport {
        margin_deg,
        eta,
        samples: Vec::with_capacity(trajectory.samples.len()),
        min_fov_flown: f64::INFINITY,
        min_fov_thrust_implied: f64::INFINITY,
        min_cone: f64::INFINITY,
        min_total_thrust: f64::INFINITY,
        min_motor: f64::INFINITY,
        max_nonholonomy: 0.0,
        violations: ViolationCounts::default(),
    };
    for sample in &trajectory.samples {
        let s = sample.s.clamp(0.0, instance.path.s_end());
        let req = requirements_at(instance, s);
        let psi = eval_path(&instance.path, s).map(|p| p.psi).unwrap_or(Vec3::X);
        let thrust = sample.acceleration - quad.gravity;
        let implied = attitude_from_thrust(&thrust, &psi).ok();
        let z_flown = sample.rotation.column(2);

        let mut fov = Vec::with_capacity(req.landmarks.len());
        for id in &req.landmarks {
            let Some(l) = instance.landmark(*id) else { continue };
            let bearing = |r: &Mat3| {
                let camera = sample.position + r.column(0) * cam.offset;
                angle_between(&(l.position - camera), &r.column(0))
            };
            let flown = cam.half_angle + margin - bearing(&sample.rotation);
            let thrust_implied = implied.as_ref().map_or(f64::NEG_INFINITY, |r| cam.half_angle - bearing(r));
            counts.fov_flown += usize::from(flown < -VIOLATION_TOL);
            counts.fov_thrust_implied += usize::from(thrust_implied < -VIOLATION_TOL);
            report.min_fov_flown = report.min_fov_flown.min(flown);
            report.min_fov_thrust_implied = report.min_fov_thrust_implied.min(thrust_implied);
            fov.push(LandmarkSlack { landmark: *id, flown, thrust_implied });
        }

        let cone: Vec<f64> = req
            .cones
            .iter()
            .map(|c| {
                let angle = implied.as_ref().map_or(core::f64::consts::PI, |r| angle_between(&r.column(2), &c.axis));
                c.max_angle - angle
            })
            .collect();
        for c in &cone {
            counts.cone += usize::from(*c < -VIOLATION_TOL);
            report.min_cone = report.min_cone.min(*c);
        }

        let total_thrust = quad.total_thrust_max() - thrust.norm();
        counts.total_thrust += usize::from(total_thrust < -VIOLATION_TOL);
        report.min_total_thrust = report.min_total_thrust.min(total_thrust);

        let motors = sample.motors.map(|m| (m - quad.c_min).min(quad.c_max - m));
        counts.motors += motors.iter().filter(|m| **m < -VIOLATION_TOL).count();
        report.min_motor = motors.iter().fold(report.min_motor, |a, m| a.min(*m));

        let nonholonomy = z_flown.cross(&thrust).norm();
        counts.nonholonomy += usize::from(nonholonomy > eta + VIOLATION_TOL);
        report.max_nonholonomy = report.max_nonholonomy.max(nonholonomy);

        report.samples.push(SampleResiduals { fov, cone, total_thrust, motors, nonholonomy });
    }
    report.violations = counts;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attsmooth::RotationSchedule;
    use crate::pathspec::{discretize_path, Landmark, PathSpec, SRange, VisibilityWindow};
    use crate::quadmodel::{test_params, CameraRig, STANDARD_GRAVITY};
    use alloc::vec;

    fn line_instance(len: f64) -> ProblemInstance {
        let path = PathSpec::straight(Vec3::ZERO, Vec3::new(len, 0.0, 0.0)).unwrap();
        ProblemInstance::new(path, test_params(), CameraRig { offset: 0.1, half_angle: 0.5 })
    }

    fn constant_profile(grid: &Grid, h: f64) -> SquareSpeedProfile {
        SquareSpeedProfile { s: grid.s_values(), ds: grid.ds, h: vec![h; grid.points.len()], l: vec![0.0; grid.points.len()] }
    }

    #[test]
    fn time_examples() {
        let grid = discretize_path(&PathSpec::straight(Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)).unwrap(), 10).unwrap();
        let (t, total) = reconstruct_time(&constant_profile(&grid, 4.0)).unwrap();
        assert!((total - 5.0).abs() < 1e-12);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        let single = SquareSpeedProfile { s: vec![0.0, 1.0], ds: 1.0, h: vec![0.0, 9.0], l: vec![0.0; 2] };
        assert!((reconstruct_time(&single).unwrap().1 - 2.0 / 3.0).abs() < 1e-15);
        let stuck = SquareSpeedProfile { s: vec![0.0, 1.0, 2.0], ds: 1.0, h: vec![1.0, 0.0, 0.0], l: vec![0.0; 3] };
        assert_eq!(reconstruct_time(&stuck), Err(Error::SingularProfile { index: 1 }));
    }

    #[test]
    fn constant_speed_line_hovers() {
        let inst = line_instance(10.0);
        let grid = discretize_path(&inst.path, 50).unwrap();
        let profile = constant_profile(&grid, 4.0);
        let sched = RotationSchedule::constant(Mat3::IDENTITY, grid.points.len(), 0.5);
        let traj = sample_trajectory(&inst, &grid, &profile, &sched, 0.01).unwrap();
        assert_eq!(traj.samples[0].t, 0.0);
        assert_eq!(traj.samples.last().unwrap().s, 10.0);
        assert!((traj.samples.last().unwrap().t - 5.0).abs() < 1e-12);
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t && w[1].s > w[0].s);
        }
        let hover = STANDARD_GRAVITY / 4.0;
        for smp in &traj.samples {
            assert!((smp.velocity - Vec3::new(2.0, 0.0, 0.0)).max_abs() < 1e-9);
            assert!(smp.acceleration.max_abs() < 1e-12);
            assert!(smp.motors.iter().all(|m| (m - hover).abs() < 1e-12));
        }
        let report = verify(&traj, &inst, 2.0);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn rolled_attitude_violates_everywhere() {
        let mut inst = line_instance(10.0);
        inst.landmarks = vec![Landmark { id: 1, position: Vec3::new(30.0, 0.0, 0.0) }];
        inst.visibility = vec![VisibilityWindow { range: SRange::new(0.0, 10.0), ids: vec![1] }];
        let grid = discretize_path(&inst.path, 50).unwrap();
        let profile = constant_profile(&grid, 4.0);
        let level = RotationSchedule::constant(Mat3::IDENTITY, grid.points.len(), 0.5);
        let traj = sample_trajectory(&inst, &grid, &profile, &level, 0.05).unwrap();
        assert!(verify(&traj, &inst, 2.0).is_clean());
        // rolled 90° about the x axis: camera still along x but thrust axis horizontal
        let rolled = Mat3([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]);
        let yawed = Mat3([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        let mut bad = traj.clone();
        for smp in &mut bad.samples {
            smp.rotation = rolled.mul_mat(&yawed);
        }
        let report = verify(&bad, &inst, 2.0);
        assert_eq!(report.violations.fov_flown, bad.samples.len());
        assert_eq!(report.violations.nonholonomy, bad.samples.len());
    }

    #[test]
    fn rest_to_rest_endpoints() {
        let inst = line_instance(4.0);
        let grid = discretize_path(&inst.path, 40).unwrap();
        let h: Vec<f64> = grid.s_values().iter().map(|s| s * (4.0 - s)).collect();
        let profile = SquareSpeedProfile { s: grid.s_values(), ds: grid.ds, h, l: vec![0.0; 41] };
        let sched = RotationSchedule::constant(Mat3::IDENTITY, 41, 0.5);
        let traj = sample_trajectory(&inst, &grid, &profile, &sched, 0.01).unwrap();
        assert_eq!(traj.samples[0].velocity, Vec3::ZERO);
        assert!(traj.samples.last().unwrap().velocity.norm() < 1e-12);
        assert!((traj.samples.last().unwrap().t - traj.total_time).abs() == 0.0);
    }
}
