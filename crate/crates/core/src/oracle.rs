//! Brute-force references for the solver and the conic reformulations.
//!
//! Nothing here goes through the cone algebra of [`crate::fovcone`] for the
//! point-mass inequalities: the dynamic program evaluates every inequality from
//! raw geometry, and the equivalence probes compare the conic constraints with
//! angles measured on explicit attitudes.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Direction, Error, Result, Stage};
use crate::fovcone::{attitude_cone_constraint, fov_constraint_at, fov_predicate, Interval, Soc2Constraint, ThrustMap};
use crate::math::{cos, sin, sqrt, Vec3};
use crate::pathspec::{node_requirements, Grid, PathPoint, ProblemInstance};
use crate::profilesolver::{NodeConstraintSet, SquareSpeedProfile};
use crate::quadmodel::attitude_from_thrust;

/// Largest grid the dynamic program accepts.
pub const DP_MAX_GRID: usize = 200;
/// Residual tolerance shared by the direct checks and the convexity probe.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Rejection attempts allowed per feasible sample.
pub const MAX_REJECTIONS: usize = 100_000;
/// Width of the boundary band excluded from the equivalence statistics (rad).
pub const BOUNDARY_BAND: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpSettings {
    pub h_levels: usize,
    /// Top of the lattice; the largest node upper bound when `None`.
    pub h_cap: Option<f64>,
}

impl DpSettings {
    pub fn new(h_levels: usize) -> DpSettings {
        DpSettings { h_levels, h_cap: None }
    }
}

/// Point-mass inequalities at one node, evaluated directly.
struct NodeCheck {
    point: PathPoint,
    lower: f64,
    upper: f64,
    ball: f64,
    gravity: Vec3,
    cones: Vec<(Vec3, f64)>,
    /// `(l − γ, χ)` per required landmark.
    landmarks: Vec<(Vec3, f64)>,
}

impl NodeCheck {
    fn new(instance: &ProblemInstance, grid: &Grid, index: usize) -> Result<NodeCheck> {
        let point = &grid.points[index];
        let last = grid.n();
        let st = &instance.solver;
        let mut upper = st.h_cap;
        if let Some(v) = st.v_max {
            upper = upper.min(v * v / point.tangent.norm_squared());
        }
        let mut lower = instance
            .speed_floors
            .iter()
            .filter(|f| f.range.start <= point.s && point.s <= f.range.end)
            .fold(0.0_f64, |m, f| m.max(f.h_min));
        if index == 0 || index == last {
            let pin = if index == 0 { st.h_start } else { st.h_end };
            if pin < lower || pin > upper {
                return Err(Error::InfeasibleBounds { index, lower, upper });
            }
            lower = pin;
            upper = pin;
        }
        let req = node_requirements(instance, grid, index);
        let cam = &instance.camera;
        let mut landmarks = Vec::new();
        for id in req.landmarks {
            let l = instance
                .landmark(id)
                .ok_or_else(|| Error::Validation(alloc::format!("unknown landmark {id}")))?;
            let rel = l.position - point.position;
            let dist2 = rel.norm_squared();
            let sa = sin(cam.half_angle);
            let lateral = cam.offset * cam.offset * sa * sa;
            if dist2 <= lateral || dist2 < cam.offset * cam.offset {
                return Err(Error::LandmarkTooClose { landmark: id, index });
            }
            landmarks.push((rel, cam.offset * sa * sa + cos(cam.half_angle) * sqrt(dist2 - lateral)));
        }
        Ok(NodeCheck {
            point: *point,
            lower,
            upper,
            ball: 4.0 * instance.quad.c_max,
            gravity: instance.quad.gravity,
            cones: req.cones.iter().map(|c| (c.axis, c.max_angle)).collect(),
            landmarks,
        })
    }

    fn in_box(&self, h: f64) -> bool {
        self.lower <= h && h <= self.upper
    }

    /// Whether all inequalities hold at square speed `h` and slope `hp`.
    fn admits(&self, h: f64, hp: f64) -> bool {
        let p = &self.point;
        let c = p.curvature * h + p.tangent * (0.5 * hp) - self.gravity;
        let norm = c.norm();
        if norm > self.ball + RESIDUAL_TOL {
            return false;
        }
        if self.cones.iter().any(|(n, beta)| cos(*beta) * norm > n.dot(&c) + RESIDUAL_TOL) {
            return false;
        }
        let lateral = Vec3::new(-p.psi.y(), p.psi.x(), 0.0);
        self.landmarks
            .iter()
            .all(|(rel, chi)| chi * lateral.cross(&c).norm() <= rel.cross(&lateral).dot(&c) + RESIDUAL_TOL)
    }
}

/// Dynamic program over a uniform lattice of square speeds.
///
/// A transition `(i, h) → (i+1, h̃)` is allowed when node `i` satisfies its
/// inequalities with `h′ = (h̃ − h)/Δs`. This is looser than the sweep, which
/// also checks node `i+1` and the segment midpoint. The result holds, per node, the
/// largest and smallest lattice values that lie on some start-to-end chain.
pub fn dp_solve(instance: &ProblemInstance, grid: &Grid, settings: &DpSettings) -> Result<SquareSpeedProfile> {
    let n = grid.n();
    if n > DP_MAX_GRID {
        return Err(Error::InvalidArgument("grid too large for the dynamic program"));
    }
    if settings.h_levels < 2 {
        return Err(Error::InvalidArgument("h_levels must be at least 2"));
    }
    let checks = grid
        .points
        .iter()
        .enumerate()
        .map(|(i, _)| NodeCheck::new(instance, grid, i))
        .collect::<Result<Vec<_>>>()?;
    let cap = match settings.h_cap {
        Some(c) if c > 0.0 => c,
        Some(_) => return Err(Error::InvalidArgument("h_cap must be positive")),
        None => checks.iter().map(|c| c.upper).fold(0.0, f64::max),
    };
    let step = cap / (settings.h_levels - 1) as f64;
    let levels: Vec<Vec<f64>> = checks
        .iter()
        .map(|c| {
            if c.lower == c.upper {
                alloc::vec![c.lower]
            } else {
                (0..settings.h_levels).map(|k| k as f64 * step).filter(|h| c.in_box(*h)).collect()
            }
        })
        .collect();

    let ds = grid.ds;
    let admissible = |i: usize, a: f64, b: f64| checks[i].admits(a, (b - a) / ds);
    let infeasible = |direction, index| Error::Infeasible { stage: Stage::PointMass, direction, index };

    let mut reach: Vec<Vec<bool>> = levels.iter().map(|l| alloc::vec![false; l.len()]).collect();
    reach[0].iter_mut().for_each(|r| *r = true);
    for i in 0..n {
        for (b, hb) in levels[i + 1].iter().enumerate() {
            reach[i + 1][b] = levels[i].iter().enumerate().any(|(a, ha)| reach[i][a] && admissible(i, *ha, *hb));
        }
        if !reach[i + 1].iter().any(|r| *r) {
            return Err(infeasible(Direction::Forward, i + 1));
        }
    }
    let mut coreach: Vec<Vec<bool>> = levels.iter().map(|l| alloc::vec![false; l.len()]).collect();
    coreach[n].iter_mut().for_each(|r| *r = true);
    for i in (0..n).rev() {
        for (a, ha) in levels[i].iter().enumerate() {
            coreach[i][a] = levels[i + 1]
                .iter()
                .enumerate()
                .any(|(b, hb)| coreach[i + 1][b] && admissible(i, *ha, *hb));
        }
    }

    let mut h = Vec::with_capacity(n + 1);
    let mut l = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let live: Vec<f64> = levels[i]
            .iter()
            .enumerate()
            .filter(|(k, _)| reach[i][*k] && coreach[i][*k])
            .map(|(_, v)| *v)
            .collect();
        if live.is_empty() {
            return Err(infeasible(Direction::Backward, i));
        }
        h.push(live.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        l.push(live.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok(SquareSpeedProfile { s: grid.s_values(), ds, h, l })
}

/// A subset of the `(h, h′)` plane described by a residual that is
/// nonpositive exactly on the set.
pub trait Region {
    fn residual(&self, w: [f64; 2]) -> f64;
}

impl Region for Soc2Constraint {
    fn residual(&self, w: [f64; 2]) -> f64 {
        Soc2Constraint::residual(self, w)
    }
}

impl Region for [Soc2Constraint] {
    fn residual(&self, w: [f64; 2]) -> f64 {
        self.iter().map(|c| c.residual(w)).fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Region for NodeConstraintSet {
    fn residual(&self, w: [f64; 2]) -> f64 {
        self.max_residual(w)
    }
}

/// Closure of the complement of a region.
pub struct Complement<R>(pub R);

impl<R: Region> Region for Complement<R> {
    fn residual(&self, w: [f64; 2]) -> f64 {
        -self.0.residual(w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityWitness {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub combination: [f64; 2],
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityOutcome {
    pub convex: bool,
    pub trials: usize,
    pub witness: Option<ConvexityWitness>,
}

fn sample_feasible<R: Region + ?Sized>(region: &R, bounds: &[Interval; 2], rng: &mut impl Rng) -> Result<[f64; 2]> {
    for _ in 0..MAX_REJECTIONS {
        let w = [rng.random_range(bounds[0].lo..=bounds[0].hi), rng.random_range(bounds[1].lo..=bounds[1].hi)];
        if region.residual(w) <= 0.0 {
            return Ok(w);
        }
    }
    Err(Error::SamplingExhausted)
}

/// Tests random chords of the region for containment.
///
/// Each trial draws two feasible points from `bounds` by rejection and checks
/// their midpoint and one random convex combination.
pub fn convexity_probe<R: Region + ?Sized>(
    region: &R,
    bounds: [Interval; 2],
    trials: usize,
    rng: &mut impl Rng,
) -> Result<ConvexityOutcome> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1"));
    }
    for trial in 0..trials {
        let a = sample_feasible(region, &bounds, rng)?;
        let b = sample_feasible(region, &bounds, rng)?;
        for lambda in [0.5, rng.random::<f64>()] {
            let combination = [a[0] + lambda * (b[0] - a[0]), a[1] + lambda * (b[1] - a[1])];
            let residual = region.residual(combination);
            if residual > RESIDUAL_TOL {
                return Ok(ConvexityOutcome {
                    convex: false,
                    trials: trial + 1,
                    witness: Some(ConvexityWitness { a, b, combination, residual }),
                });
            }
        }
    }
    Ok(ConvexityOutcome { convex: true, trials, witness: None })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EquivalenceStats {
    pub trials: usize,
    pub agreements: usize,
    pub disagreements: usize,
    /// Trials within [`BOUNDARY_BAND`] of the boundary, not compared.
    pub boundary: usize,
    /// Trials without a defined attitude (vanishing thrust or thrust along the lateral axis).
    pub degenerate: usize,
    /// Trials satisfying the geometric predicate.
    pub satisfied: usize,
}

impl EquivalenceStats {
    fn record(&mut self, conic: bool, geometric: bool, margin: f64) {
        if margin.abs() < BOUNDARY_BAND {
            self.boundary += 1;
        } else if conic == geometric {
            self.agreements += 1;
        } else {
            self.disagreements += 1;
        }
        self.satisfied += usize::from(geometric);
    }
}

/// Sampling ranges for the field-of-view probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FovProbeRanges {
    pub offset: (f64, f64),
    pub half_angle: (f64, f64),
}

impl Default for FovProbeRanges {
    fn default() -> Self {
        FovProbeRanges { offset: (0.0, 0.3), half_angle: (0.05, 1.5) }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

struct Kinematics {
    position: Vec3,
    tangent: Vec3,
    curvature: Vec3,
    psi: Vec3,
    w: [f64; 2],
    gravity: Vec3,
}

fn random_kinematics(rng: &mut impl Rng) -> Kinematics {
    let theta = rng.random_range(-core::f64::consts::PI..core::f64::consts::PI);
    Kinematics {
        position: random_vec(rng, 10.0),
        tangent: random_vec(rng, 1.5),
        curvature: random_vec(rng, 1.0),
        psi: Vec3::new(cos(theta), sin(theta), 0.0),
        w: [rng.random_range(0.0..30.0), rng.random_range(-40.0..40.0)],
        gravity: Vec3::new(0.0, 0.0, -9.81),
    }
}

/// Field-of-view constraint against the visibility test on the induced attitude.
pub fn fov_equivalence_probe(trials: usize, ranges: &FovProbeRanges, rng: &mut impl Rng) -> EquivalenceStats {
    let mut stats = EquivalenceStats { trials, ..Default::default() };
    for _ in 0..trials {
        let k = random_kinematics(rng);
        let offset = uniform(rng, ranges.offset);
        let half_angle = uniform(rng, ranges.half_angle);
        // landmarks ahead along the heading, scattered enough to land on both sides
        let landmark = k.position + k.psi * rng.random_range(1.0..20.0) + random_vec(rng, 8.0);
        let Ok(constraint) =
            fov_constraint_at(&landmark, &k.position, &k.tangent, &k.curvature, &k.psi, &k.gravity, offset, half_angle)
        else {
            stats.degenerate += 1;
            continue;
        };
        let thrust = ThrustMap::new(&k.tangent, &k.curvature, &k.gravity).eval(k.w);
        let Ok(attitude) = attitude_from_thrust(&thrust, &k.psi) else {
            stats.degenerate += 1;
            continue;
        };
        let x_b = attitude.column(0);
        let ray = landmark - (k.position + x_b * offset);
        let angle = ray.angle_to(&x_b);
        let geometric = fov_predicate(&k.position, &attitude, &landmark, offset, half_angle);
        stats.record(constraint.is_satisfied(k.w), geometric, angle - half_angle);
    }
    stats
}

/// Attitude cone constraint against the angle between the induced body z axis and the cone axis.
pub fn cone_equivalence_probe(trials: usize, rng: &mut impl Rng) -> EquivalenceStats {
    let mut stats = EquivalenceStats { trials, ..Default::default() };
    for _ in 0..trials {
        let k = random_kinematics(rng);
        let Some(axis) = random_vec(rng, 1.0).normalized(1e-3) else {
            stats.degenerate += 1;
            continue;
        };
        let beta = rng.random_range(0.01..core::f64::consts::FRAC_PI_2);
        let map = ThrustMap::new(&k.tangent, &k.curvature, &k.gravity);
        let thrust = map.eval(k.w);
        let Ok(attitude) = attitude_from_thrust(&thrust, &k.psi) else {
            stats.degenerate += 1;
            continue;
        };
        let angle = attitude.column(2).angle_to(&axis);
        let conic = attitude_cone_constraint(&map, &axis, beta).is_satisfied(k.w);
        stats.record(conic, angle <= beta, angle - beta);
    }
    stats
}

/// Both probes with default ranges.
pub fn equivalence_probe(trials: usize, rng: &mut impl Rng) -> (EquivalenceStats, EquivalenceStats) {
    let fov = fov_equivalence_probe(trials, &FovProbeRanges::default(), rng);
    let cone = cone_equivalence_probe(trials, rng);
    (fov, cone)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathspec::{discretize, PathSpec};
    use crate::profilesolver::solve_point_mass;
    use crate::quadmodel::{test_params, CameraRig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(len: f64, grid_n: usize) -> ProblemInstance {
        let path = PathSpec::straight(Vec3::ZERO, Vec3::new(len, 0.0, 0.0)).unwrap();
        let mut inst = ProblemInstance::new(path, test_params(), CameraRig { offset: 0.1, half_angle: 0.5 });
        inst.solver.grid_n = grid_n;
        inst
    }

    #[test]
    fn box_only_reaches_top_level() {
        let mut inst = line(10.0, 20);
        inst.solver.v_max = Some(1.0);
        inst.quad.c_max = 1e3;
        let grid = discretize(&inst).unwrap();
        let dp = dp_solve(&inst, &grid, &DpSettings::new(50)).unwrap();
        assert!(dp.h[1..20].iter().all(|h| (h - 1.0).abs() < 1e-12), "{:?}", dp.h);
        assert_eq!((dp.h[0], dp.h[20]), (0.0, 0.0));
    }

    #[test]
    fn bang_bang_within_three_percent() {
        // speed cap just above the bang-bang peak keeps the lattice fine
        let mut inst = line(10.0, 50);
        inst.solver.v_max = Some(13.1);
        let grid = discretize(&inst).unwrap();
        let dp = dp_solve(&inst, &grid, &DpSettings::new(400)).unwrap();
        let t = dp.duration().unwrap();
        assert!((t - 1.534_317_287_258_449).abs() / 1.534_317_287_258_449 < 0.03, "{t}");
        let (_, sweep) = solve_point_mass(&inst).unwrap();
        // lattice values sit below the continuous maxima
        assert!(dp.h.iter().zip(&sweep.h).all(|(d, s)| *d <= s + 1e-6));
    }

    #[test]
    fn guards() {
        let inst = line(10.0, 201);
        let grid = discretize(&inst).unwrap();
        assert!(matches!(dp_solve(&inst, &grid, &DpSettings::new(10)), Err(Error::InvalidArgument(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let empty = [Soc2Constraint::linear([0.0, 0.0], -1.0)];
        let bx = [Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)];
        assert_eq!(convexity_probe(&empty[..], bx, 1, &mut rng), Err(Error::SamplingExhausted));
    }

    #[test]
    fn unreachable_start_is_infeasible() {
        let mut inst = line(10.0, 40);
        inst.solver.h_start = 400.0;
        inst.solver.v_max = Some(25.0);
        let grid = discretize(&inst).unwrap();
        assert!(matches!(dp_solve(&inst, &grid, &DpSettings::new(100)), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn probes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (fov, cone) = equivalence_probe(2000, &mut rng);
        assert_eq!(fov.disagreements, 0, "{fov:?}");
        assert_eq!(cone.disagreements, 0, "{cone:?}");
        assert!(fov.satisfied > 100 && fov.satisfied < 1900, "{fov:?}");
        let zero = FovProbeRanges { offset: (0.0, 0.0), ..Default::default() };
        assert_eq!(fov_equivalence_probe(500, &zero, &mut rng).disagreements, 0);
    }

    #[test]
    fn complement_of_ball_is_not_convex() {
        let map = ThrustMap::new(&Vec3::X, &Vec3::Z, &Vec3::new(0.0, 0.0, -9.81));
        let ball = crate::fovcone::thrust_ball_constraint(&map, 20.0);
        let bx = [Interval::new(0.0, 40.0), Interval::new(-60.0, 60.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(convexity_probe(&ball, bx, 1000, &mut rng).unwrap().convex);
        let out = convexity_probe(&Complement(ball), bx, 1000, &mut rng).unwrap();
        assert!(!out.convex);
        let wit = out.witness.unwrap();
        assert!(ball.residual(wit.combination) < 0.0);
    }
}
