//! Backward-forward computation of the maximal square-speed profile.
//!
//! The decision variable is `h(s) = ṡ²` sampled on the grid. The constraints of
//! step `i → i+1` involve the pair `(h_i, h_{i+1})` through
//! `w = (h_i, (h_{i+1} − h_i)/Δs)` and are all second-order cones, so the set
//! of feasible pairs is convex. The backward sweep shrinks each node's box to
//! the values from which the end of the path is still reachable; the forward
//! sweep then walks from the start, always taking the largest next value that
//! stays inside those sets.
//!
//! Each step is a two-variable convex program. Its projections onto either
//! coordinate are intervals, found by bisection on one coordinate while the
//! other is eliminated in closed form ([`reduce_interval`]).

use alloc::vec::Vec;

use crate::attsmooth::{smoothen, zb_from_profile, RotationSchedule};
use crate::error::{Direction, Error, Result, Stage};
use crate::fovcone::{
    attitude_cone_constraint, fov_constraint, nonholonomy_constraint, thrust_ball_constraint, FovTerm,
    Interval, Soc2Constraint, ThrustMap,
};
use crate::math::sqrt;
use crate::pathspec::{discretize, node_requirements, Grid, ProblemInstance};
use crate::quadmodel::{mixer_matrix, torque_coefficients};

/// Golden-section iterations used to locate a feasible point when the cheap
/// candidates all fail.
const SEARCH_ITERATIONS: usize = 100;
/// Constraint residual tolerated where rounding closes a successor set.
pub const ROUNDING_TOL: f64 = 1e-9;

const BACKTRACK_DEPTH: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SpeedBounds {
    pub fn node(&self, i: usize) -> Interval {
        Interval::new(self.lower[i], self.upper[i])
    }
}

/// Per-node box `[B_l, B_u]` with both ends of the path pinned to the boundary speeds.
pub fn build_speed_bounds(instance: &ProblemInstance, grid: &Grid) -> Result<SpeedBounds> {
    let st = &instance.solver;
    let n = grid.n();
    let mut lower = Vec::with_capacity(n + 1);
    let mut upper = Vec::with_capacity(n + 1);
    for (i, p) in grid.points.iter().enumerate() {
        let mut ub = st.h_cap;
        if let Some(v) = st.v_max {
            ub = ub.min(v * v / p.tangent.norm_squared());
        }
        let lb = instance
            .speed_floors
            .iter()
            .filter(|f| f.range.contains(p.s))
            .fold(0.0_f64, |m, f| m.max(f.h_min));
        let (lb, ub) = match i {
            0 => pin(st.h_start, lb, ub),
            _ if i == n => pin(st.h_end, lb, ub),
            _ => (lb, ub),
        };
        if lb > ub {
            return Err(Error::InfeasibleBounds { index: i, lower: lb, upper: ub });
        }
        lower.push(lb);
        upper.push(ub);
    }
    Ok(SpeedBounds { lower, upper })
}

/// Endpoint pinning: the box collapses to the boundary value, or becomes
/// empty when the value falls outside it.
fn pin(value: f64, lb: f64, ub: f64) -> (f64, f64) {
    if lb <= value && value <= ub {
        (value, value)
    } else if value < lb {
        (lb, value)
    } else {
        (value, ub)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    FieldOfView { landmark: u32 },
    AttitudeCone,
    ThrustBall,
    MotorMin { motor: u8 },
    MotorMax { motor: u8 },
    Nonholonomy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledConstraint {
    pub kind: ConstraintKind,
    pub constraint: Soc2Constraint,
}

/// Constraints at one grid node over `w = (h, h′)` evaluated with that node's geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeConstraintSet {
    pub index: usize,
    pub bounds: Interval,
    pub constraints: Vec<LabeledConstraint>,
    pub fov_terms: Vec<(u32, FovTerm)>,
}

impl NodeConstraintSet {
    pub fn count(&self, pred: impl Fn(&ConstraintKind) -> bool) -> usize {
        self.constraints.iter().filter(|c| pred(&c.kind)).count()
    }

    /// Largest residual over all constraints at `w`; nonpositive when feasible.
    pub fn max_residual(&self, w: [f64; 2]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.constraint.residual(w))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds the constraint sets for every node.
///
/// The point-mass pass uses field of view, attitude cones and the total
/// thrust ball. The rotor pass additionally bounds each motor through the
/// mixer (collective thrust projected on the scheduled body z axis, torque
/// from the scheduled body rates) and relaxes thrust alignment with the
/// scheduled axis by `η`.
pub fn constraint_cache(
    instance: &ProblemInstance,
    grid: &Grid,
    bounds: &SpeedBounds,
    stage: Stage,
    schedule: Option<&RotationSchedule>,
) -> Result<Vec<NodeConstraintSet>> {
    let schedule = match (stage, schedule) {
        (Stage::Rotor, None) => return Err(Error::InvalidArgument("rotor pass needs a rotation schedule")),
        (Stage::Rotor, Some(s)) if s.nodes.len() != grid.points.len() => {
            return Err(Error::InvalidArgument("rotation schedule does not match grid"))
        }
        (_, s) => s,
    };
    let quad = &instance.quad;
    let cam = &instance.camera;
    let mixer = mixer_matrix(quad);
    grid.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let thrust = ThrustMap::new(&p.tangent, &p.curvature, &quad.gravity);
            let req = node_requirements(instance, grid, i);
            let mut constraints = Vec::new();
            let mut fov_terms = Vec::new();
            for &id in &req.landmarks {
                let l = instance.landmark(id).ok_or(Error::Validation(alloc::format!("unknown landmark {id}")))?;
                let term = FovTerm::new(&l.position, &p.position, &p.psi, cam.offset, cam.half_angle)
                    .map_err(|_| Error::LandmarkTooClose { landmark: id, index: i })?;
                constraints.push(LabeledConstraint {
                    kind: ConstraintKind::FieldOfView { landmark: id },
                    constraint: fov_constraint(&thrust, &term, &p.psi),
                });
                fov_terms.push((id, term));
            }
            for cone in &req.cones {
                constraints.push(LabeledConstraint {
                    kind: ConstraintKind::AttitudeCone,
                    constraint: attitude_cone_constraint(&thrust, &cone.axis, cone.max_angle),
                });
            }
            constraints.push(LabeledConstraint {
                kind: ConstraintKind::ThrustBall,
                constraint: thrust_ball_constraint(&thrust, quad.total_thrust_max()),
            });
            if let (Stage::Rotor, Some(sched)) = (stage, schedule) {
                let node = &sched.nodes[i];
                let z = node.z_axis();
                // collective thrust along the scheduled body z axis
                let par = ([z.dot(&thrust.cols[0]), z.dot(&thrust.cols[1])], z.dot(&thrust.offset));
                let (per_h, per_hp) = torque_coefficients(&node.gamma, &node.gamma_d1, &quad.inertia);
                for (k, row) in mixer.inverse.iter().enumerate() {
                    let coef = [
                        row[0] * par.0[0] + row[1] * per_h[0] + row[2] * per_h[1] + row[3] * per_h[2],
                        row[0] * par.0[1] + row[1] * per_hp[0] + row[2] * per_hp[1] + row[3] * per_hp[2],
                    ];
                    let constant = row[0] * par.1;
                    constraints.push(LabeledConstraint {
                        kind: ConstraintKind::MotorMin { motor: k as u8 },
                        constraint: Soc2Constraint::linear(coef, constant - quad.c_min),
                    });
                    constraints.push(LabeledConstraint {
                        kind: ConstraintKind::MotorMax { motor: k as u8 },
                        constraint: Soc2Constraint::linear([-coef[0], -coef[1]], quad.c_max - constant),
                    });
                }
                constraints.push(LabeledConstraint {
                    kind: ConstraintKind::Nonholonomy,
                    constraint: nonholonomy_constraint(&thrust, &z, instance.solver.eta),
                });
            }
            Ok(NodeConstraintSet { index: i, bounds: bounds.node(i), constraints, fov_terms })
        })
        .collect()
}

/// Constraints of step `i → i+1` over the pair `(h_i, h_{i+1})`.
///
/// Both nodes are checked under the acceleration flown on the segment, at
/// their own speed and at the midpoint speed. The constraints are convex in
/// `w`, so each half of the segment satisfies the constraints of the node it
/// is nearest to.
pub fn step_constraints(nodes: &[NodeConstraintSet], i: usize, ds: f64) -> Vec<Soc2Constraint> {
    let slope = [-1.0 / ds, 1.0 / ds];
    let fwd = [[1.0, 0.0], slope];
    let bwd = [[0.0, 1.0], slope];
    let mid = [[0.5, 0.5], slope];
    let mut out = Vec::with_capacity(2 * (nodes[i].constraints.len() + nodes[i + 1].constraints.len()));
    for (node, own) in [(&nodes[i], fwd), (&nodes[i + 1], bwd)] {
        for c in &node.constraints {
            out.push(c.constraint.substitute(own));
            out.push(c.constraint.substitute(mid));
        }
    }
    out
}

/// Values of the free coordinate that satisfy every constraint when
/// coordinate `fixed` equals `value`, intersected with `bounds`.
pub fn reduce_interval(constraints: &[Soc2Constraint], fixed: usize, value: f64, bounds: Interval) -> Option<Interval> {
    constraints.iter().try_fold(bounds, |acc, c| {
        let set = c.restrict(fixed, value).feasible_set()?;
        acc.intersect(&set)
    })
}

/// Smallest and largest value of one coordinate of the step's feasible set.
///
/// `Backward` optimizes `h_i` over `current` with `h_{i+1}` free in `next`;
/// `Forward` optimizes `h_{i+1}` over `next` with `h_i` free in `current`.
/// The returned endpoints are themselves feasible and lie within `eps_h` of
/// the true extremes.
pub fn propagate(
    direction: Direction,
    constraints: &[Soc2Constraint],
    current: Interval,
    next: Interval,
    eps_h: f64,
) -> Option<Interval> {
    let (fixed, target, other) = match direction {
        Direction::Backward => (0, current, next),
        Direction::Forward => (1, next, current),
    };
    let feasible = |x: f64| reduce_interval(constraints, fixed, x, other).is_some();
    let mut seed = None;
    if other.lo == other.hi {
        // the other coordinate is pinned: closed form, kept only if it passes
        // the same test the opposite sweep applies (rounding at the boundary)
        let exact = reduce_interval(constraints, 1 - fixed, other.lo, target)?;
        if feasible(exact.lo) && feasible(exact.hi) {
            return Some(exact);
        }
        let mid = 0.5 * (exact.lo + exact.hi);
        seed = [mid, exact.lo, exact.hi].into_iter().find(|x| feasible(*x));
    }
    let seed = match seed {
        Some(x) => x,
        None => find_feasible(constraints, fixed, target, other, &feasible)?,
    };
    let hi = if feasible(target.hi) {
        target.hi
    } else {
        bisect(seed, target.hi, eps_h, &feasible)
    };
    let lo = if feasible(target.lo) {
        target.lo
    } else {
        bisect(seed, target.lo, eps_h, &feasible)
    };
    Some(Interval::new(lo, hi))
}

/// Shrinks `[good, bad]` (in either order) to width `eps` and returns the feasible end.
fn bisect(mut good: f64, mut bad: f64, eps: f64, feasible: &impl Fn(f64) -> bool) -> f64 {
    while (bad - good).abs() > eps {
        let mid = 0.5 * (good + bad);
        if mid == good || mid == bad {
            break;
        }
        if feasible(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

fn find_feasible(
    constraints: &[Soc2Constraint],
    fixed: usize,
    target: Interval,
    other: Interval,
    feasible: &impl Fn(f64) -> bool,
) -> Option<f64> {
    for x in [target.lo, target.hi, 0.5 * (target.lo + target.hi)] {
        if feasible(x) {
            return Some(x);
        }
    }
    for y in [other.hi, other.lo, 0.5 * (other.lo + other.hi)] {
        if let Some(set) = reduce_interval(constraints, 1 - fixed, y, target) {
            if let Some(x) = [0.5 * (set.lo + set.hi), set.hi, set.lo].into_iter().find(|x| feasible(*x)) {
                return Some(x);
            }
        }
    }
    // The joint slack min_k(rhs − lhs) is concave, and so is its maximum over
    // the free coordinate; golden-section search on both levels finds the
    // most feasible value of the target coordinate.
    let pair = |x: f64, y: f64| if fixed == 0 { [x, y] } else { [y, x] };
    let slack = |x: f64, y: f64| {
        let w = pair(x, y);
        constraints.iter().map(|c| c.rhs(w) - c.lhs(w)).fold(f64::INFINITY, f64::min)
    };
    let best_over_other = |x: f64| golden_max(other, |y| slack(x, y)).1;
    let (x, value) = golden_max(target, best_over_other);
    (value >= 0.0 && feasible(x)).then_some(x)
}

/// Maximizer of a concave function on a bounded interval.
fn golden_max(range: Interval, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (range.lo, range.hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..SEARCH_ITERATIONS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(range.lo, f(range.lo)), (range.hi, f(range.hi)), (c, fc), (d, fd)];
    candidates.into_iter().fold((c, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Square speeds on the grid together with the lower ends of their feasible intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareSpeedProfile {
    pub s: Vec<f64>,
    pub ds: f64,
    pub h: Vec<f64>,
    pub l: Vec<f64>,
}

impl SquareSpeedProfile {
    /// Finite-difference slope of step `i`.
    pub fn h_prime(&self, i: usize) -> f64 {
        (self.h[i + 1] - self.h[i]) / self.ds
    }

    /// Traversal time with constant path acceleration on each step.
    pub fn duration(&self) -> Result<f64> {
        crate::trajout::reconstruct_time(self).map(|(_, t)| t)
    }
}

/// Runs the backward and forward sweeps over precomputed node constraints.
pub fn backward_forward(
    grid: &Grid,
    nodes: &[NodeConstraintSet],
    stage: Stage,
    eps_h: f64,
) -> Result<SquareSpeedProfile> {
    let n = grid.n();
    if nodes.len() != n + 1 {
        return Err(Error::InvalidArgument("constraint cache does not match grid"));
    }
    let ds = grid.ds;
    let steps: Vec<Vec<Soc2Constraint>> = (0..n).map(|i| step_constraints(nodes, i, ds)).collect();

    let mut reach: Vec<Interval> = nodes.iter().map(|c| c.bounds).collect();
    let infeasible = |direction, index| Error::Infeasible { stage, direction, index };
    if reach[n].lo > reach[n].hi {
        return Err(infeasible(Direction::Backward, n));
    }
    // Bisection shortfalls add up along the backward chain; splitting eps_h
    // over the steps keeps the accumulated error within eps_h.
    let step_eps = eps_h / n as f64;
    for i in (0..n).rev() {
        if reach[i].lo > reach[i].hi {
            return Err(infeasible(Direction::Backward, i));
        }
        reach[i] = propagate(Direction::Backward, &steps[i], reach[i], reach[i + 1], step_eps)
            .ok_or(infeasible(Direction::Backward, i))?;
    }

    let targets: Vec<Interval> =
        nodes.iter().zip(&reach).map(|(c, r)| c.bounds.intersect(r).unwrap_or(*r)).collect();
    let mut h = alloc::vec![0.0; n + 1];
    let mut l = alloc::vec![0.0; n + 1];
    h[0] = reach[0].hi;
    l[0] = reach[0].lo;
    let mut i = 0;
    while i < n {
        if let Some(next) = successors(&steps[i], h[i], targets[i + 1], eps_h) {
            h[i + 1] = next.hi;
            l[i + 1] = next.lo;
            i += 1;
            continue;
        }
        // h_i sits at the tip of a thin wedge where rounding decides; lower an
        // earlier node within its successor set until the sweep passes i
        let replay = |k: usize, x: f64| -> Option<Vec<Interval>> {
            let mut trail = Vec::with_capacity(i + 1 - k);
            let mut hk = x;
            for j in k..=i {
                let next = successors(&steps[j], hk, targets[j + 1], eps_h)?;
                hk = next.hi;
                trail.push(next);
            }
            Some(trail)
        };
        let (k, x, trail) = (i.saturating_sub(BACKTRACK_DEPTH)..=i)
            .rev()
            .filter(|k| l[*k] < h[*k])
            .find_map(|k| {
                let passes = |x: f64| replay(k, x).is_some();
                let seed = [0.5 * (l[k] + h[k]), l[k]].into_iter().find(|x| passes(*x))?;
                let x = bisect(seed, h[k], step_eps, &passes);
                Some((k, x, replay(k, x)?))
            })
            .ok_or(infeasible(Direction::Forward, i))?;
        h[k] = x;
        for (j, next) in (k + 1..).zip(trail) {
            h[j] = next.hi;
            l[j] = next.lo;
        }
        i += 1;
    }
    Ok(SquareSpeedProfile { s: grid.s_values(), ds, h, l })
}

/// Values of `h_{i+1}` reachable from `h_i` within `bounds`, in closed form.
///
/// Where the profile follows a constraint boundary the successor set is a
/// sliver, and a constraint that barely depends on `h_{i+1}` can close it by
/// rounding alone. A crossing is then resolved to the point of least
/// violation if that violation is within [`ROUNDING_TOL`]; a miss of `bounds`
/// by at most `tol` is accepted.
fn successors(constraints: &[Soc2Constraint], h: f64, bounds: Interval, tol: f64) -> Option<Interval> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for c in constraints {
        let set = c.restrict(0, h).feasible_set()?;
        lo = lo.max(set.lo);
        hi = hi.min(set.hi);
    }
    let set = if lo <= hi {
        Interval::new(lo, hi)
    } else {
        let worst = |x: f64| constraints.iter().map(|c| c.residual([h, x])).fold(f64::NEG_INFINITY, f64::max);
        let (x, neg) = golden_max(Interval::new(hi, lo), |x| -worst(x));
        if -neg > ROUNDING_TOL {
            return None;
        }
        Interval::point(x)
    };
    match set.intersect(&bounds) {
        Some(next) => Some(next),
        None if set.lo > bounds.hi && set.lo - bounds.hi <= tol => Some(Interval::point(set.lo)),
        None if set.hi < bounds.lo && bounds.lo - set.hi <= tol => Some(Interval::point(set.hi)),
        None => None,
    }
}

/// Largest constraint residual of a profile over all steps.
pub fn profile_max_residual(nodes: &[NodeConstraintSet], profile: &SquareSpeedProfile) -> f64 {
    let n = profile.h.len() - 1;
    (0..n)
        .flat_map(|i| {
            step_constraints(nodes, i, profile.ds)
                .into_iter()
                .map(move |c| c.residual([profile.h[i], profile.h[i + 1]]))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Output of the full pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub grid: Grid,
    pub bounds: SpeedBounds,
    pub stage1: SquareSpeedProfile,
    pub schedule: RotationSchedule,
    pub stage2: SquareSpeedProfile,
}

impl Solution {
    pub fn total_time(&self) -> Result<f64> {
        self.stage2.duration()
    }
}

/// Point-mass pass, attitude smoothing, then the rotor pass.
pub fn solve(instance: &ProblemInstance) -> Result<Solution> {
    instance.validate()?;
    let grid = discretize(instance)?;
    let bounds = build_speed_bounds(instance, &grid)?;
    let eps_h = instance.solver.eps_h;

    let nodes1 = constraint_cache(instance, &grid, &bounds, Stage::PointMass, None)?;
    let stage1 = backward_forward(&grid, &nodes1, Stage::PointMass, eps_h)?;

    let z = zb_from_profile(&grid, &stage1.h, &instance.quad.gravity)?;
    let schedule = smoothen(&grid, &z, instance.solver.sigma)?;

    let nodes2 = constraint_cache(instance, &grid, &bounds, Stage::Rotor, Some(&schedule))?;
    let stage2 = backward_forward(&grid, &nodes2, Stage::Rotor, eps_h)?;
    Ok(Solution { grid, bounds, stage1, schedule, stage2 })
}

/// Stage-1 profile only.
pub fn solve_point_mass(instance: &ProblemInstance) -> Result<(Grid, SquareSpeedProfile)> {
    instance.validate()?;
    let grid = discretize(instance)?;
    let bounds = build_speed_bounds(instance, &grid)?;
    let nodes = constraint_cache(instance, &grid, &bounds, Stage::PointMass, None)?;
    let profile = backward_forward(&grid, &nodes, Stage::PointMass, instance.solver.eps_h)?;
    Ok((grid, profile))
}

/// Speed `√h·|γ′|` at each node, a convenience for reporting.
pub fn node_speeds(grid: &Grid, profile: &SquareSpeedProfile) -> Vec<f64> {
    grid.points.iter().zip(&profile.h).map(|(p, h)| sqrt(h.max(0.0)) * p.tangent.norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::pathspec::{discretize_path, AttitudeCone, AttitudeWindow, Landmark, PathSpec, SpeedFloor, SRange, VisibilityWindow};
    use crate::quadmodel::{test_params, CameraRig, STANDARD_GRAVITY};
    use alloc::vec;

    const A_MAX: f64 = 16.991_418_422_250_686; // g√3

    fn straight(len: f64) -> ProblemInstance {
        let path = PathSpec::straight(Vec3::ZERO, Vec3::new(len, 0.0, 0.0)).unwrap();
        ProblemInstance::new(path, test_params(), CameraRig { offset: 0.1, half_angle: 0.5 })
    }

    #[test]
    fn speed_bound_examples() {
        let mut inst = straight(10.0);
        inst.solver.v_max = Some(5.0);
        let grid = discretize_path(&inst.path, 10).unwrap();
        let b = build_speed_bounds(&inst, &grid).unwrap();
        assert!(b.upper[1..10].iter().all(|u| (*u - 25.0).abs() < 1e-12));
        assert_eq!((b.lower[0], b.upper[0]), (0.0, 0.0));
        inst.solver.v_max = None;
        let b = build_speed_bounds(&inst, &grid).unwrap();
        assert!(b.upper[1..10].iter().all(|u| *u == 1e6));
        inst.solver.v_max = Some(5.0);
        inst.speed_floors = vec![SpeedFloor { range: SRange::new(2.0, 4.0), h_min: 30.0 }];
        assert!(matches!(build_speed_bounds(&inst, &grid), Err(Error::InfeasibleBounds { index: 2, .. })));
    }

    #[test]
    fn point_mass_cache_counts() {
        let mut inst = straight(10.0);
        let grid = discretize_path(&inst.path, 20).unwrap();
        let bounds = build_speed_bounds(&inst, &grid).unwrap();
        let nodes = constraint_cache(&inst, &grid, &bounds, Stage::PointMass, None).unwrap();
        assert!(nodes.iter().all(|n| n.constraints.len() == 1 && n.count(|k| *k == ConstraintKind::ThrustBall) == 1));
        inst.landmarks = vec![Landmark { id: 4, position: Vec3::new(30.0, 0.0, 0.0) }];
        inst.visibility = vec![VisibilityWindow { range: SRange::new(0.0, 10.0), ids: vec![4] }];
        let nodes = constraint_cache(&inst, &grid, &bounds, Stage::PointMass, None).unwrap();
        assert!(nodes.iter().all(|n| n.count(|k| matches!(k, ConstraintKind::FieldOfView { landmark: 4 })) == 1));
        assert!(matches!(
            constraint_cache(&inst, &grid, &bounds, Stage::Rotor, None),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn landmark_too_close_reports_node() {
        let mut inst = straight(10.0);
        inst.camera.offset = 1.0;
        inst.landmarks = vec![Landmark { id: 9, position: Vec3::new(5.0, 0.3, 0.0) }];
        inst.visibility = vec![VisibilityWindow { range: SRange::new(0.0, 10.0), ids: vec![9] }];
        let grid = discretize_path(&inst.path, 10).unwrap();
        let bounds = build_speed_bounds(&inst, &grid).unwrap();
        assert_eq!(
            constraint_cache(&inst, &grid, &bounds, Stage::PointMass, None),
            Err(Error::LandmarkTooClose { landmark: 9, index: 5 })
        );
    }

    #[test]
    fn reduce_interval_examples() {
        let bx = Interval::new(0.0, 9.0);
        assert_eq!(reduce_interval(&[], 0, 3.0, bx), Some(bx));
        // straight path, 4c_max = 2g, Δs = 0.5, h = 0: h̃ ≤ g√3
        let thrust = ThrustMap::new(&Vec3::X, &Vec3::ZERO, &Vec3::new(0.0, 0.0, -STANDARD_GRAVITY));
        let ball = thrust_ball_constraint(&thrust, 2.0 * STANDARD_GRAVITY);
        let ds = 0.5;
        let step = [ball.substitute([[1.0, 0.0], [-1.0 / ds, 1.0 / ds]])];
        let got = reduce_interval(&step, 0, 0.0, Interval::new(0.0, 1e6)).unwrap();
        assert_eq!(got.lo, 0.0);
        assert!((got.hi - A_MAX).abs() < 1e-9);
        let rows = [Soc2Constraint::linear([0.0, 1.0], -5.0), Soc2Constraint::linear([0.0, -1.0], 1.0)];
        assert_eq!(reduce_interval(&rows, 0, 0.0, Interval::ALL), None);
    }

    #[test]
    fn propagate_examples() {
        let eps = 1e-6;
        let got = propagate(Direction::Forward, &[], Interval::new(0.0, 9.0), Interval::new(0.0, 16.0), eps).unwrap();
        assert_eq!(got, Interval::new(0.0, 16.0));
        let thrust = ThrustMap::new(&Vec3::X, &Vec3::ZERO, &Vec3::new(0.0, 0.0, -STANDARD_GRAVITY));
        let ds = 0.5;
        let step = [thrust_ball_constraint(&thrust, 2.0 * STANDARD_GRAVITY).substitute([[1.0, 0.0], [-1.0 / ds, 1.0 / ds]])];
        let got = propagate(Direction::Forward, &step, Interval::point(0.0), Interval::new(0.0, 1e6), eps).unwrap();
        assert!((got.hi - A_MAX).abs() < eps);
        // same answer through the bisection path
        let got = propagate(Direction::Forward, &step, Interval::new(0.0, 1e-300), Interval::new(0.0, 1e6), eps).unwrap();
        assert!((got.hi - A_MAX).abs() < eps && got.hi <= A_MAX + 1e-12);
        let cap = [Soc2Constraint::linear([0.0, -1.0], 1.0)];
        assert_eq!(
            propagate(Direction::Forward, &cap, Interval::new(0.0, 3.0), Interval::new(5.0, 6.0), eps),
            None
        );
    }

    #[test]
    fn backward_propagation_of_thin_set_uses_search() {
        // feasible pairs: |h − 7| ≤ 0.01 and |h̃ − 3| ≤ 0.01, missed by the coarse candidates
        let band = |center: f64, coord: usize| {
            let mut r = [0.0, 0.0];
            r[coord] = 1.0;
            let mut neg = [0.0, 0.0];
            neg[coord] = -1.0;
            [Soc2Constraint::linear(r, -(center - 0.01)), Soc2Constraint::linear(neg, center + 0.01)]
        };
        let mut cons = vec![];
        cons.extend(band(7.0, 0));
        cons.extend(band(3.0, 1));
        let got = propagate(Direction::Backward, &cons, Interval::new(0.0, 100.0), Interval::new(0.0, 100.0), 1e-9).unwrap();
        assert!((got.lo - 6.99).abs() < 1e-8 && (got.hi - 7.01).abs() < 1e-8, "{got:?}");
    }

    #[test]
    fn bang_bang_time() {
        let mut inst = straight(10.0);
        inst.solver.grid_n = 1000;
        let (_, profile) = solve_point_mass(&inst).unwrap();
        let t = profile.duration().unwrap();
        let exact = 2.0 * sqrt(10.0 / A_MAX);
        assert!((t - exact).abs() / exact < 0.02, "t = {t}, exact = {exact}");
        // peak at the midpoint equals a_max·S
        let mid = profile.h[500];
        assert!((mid - A_MAX * 10.0).abs() / (A_MAX * 10.0) < 0.01, "{mid}");
    }

    #[test]
    fn tiny_path_is_nearly_instant() {
        let mut inst = straight(1e-6);
        inst.solver.grid_n = 2;
        inst.solver.sigma = 1e-7;
        let (_, profile) = solve_point_mass(&inst).unwrap();
        assert_eq!(profile.h[0], 0.0);
        assert_eq!(profile.h[2], 0.0);
        assert!(profile.duration().unwrap() < 1e-3);
    }

    #[test]
    fn unreachable_start_is_reported_backward_at_zero() {
        let mut inst = straight(10.0);
        inst.solver.grid_n = 50;
        inst.solver.h_start = 400.0; // cannot brake to rest in 10 m at g√3
        let err = solve_point_mass(&inst).unwrap_err();
        assert_eq!(err, Error::Infeasible { stage: Stage::PointMass, direction: Direction::Backward, index: 0 });
    }

    #[test]
    fn full_pipeline_on_straight_line() {
        // a tilt limit keeps the point-mass pass off the thrust ball, leaving
        // the motors room for the torque the rotor pass needs
        let mut inst = straight(10.0);
        inst.solver.grid_n = 400;
        inst.attitude = vec![AttitudeWindow { range: SRange::new(0.0, 10.0), cone: AttitudeCone { axis: Vec3::Z, max_angle: 0.5 } }];
        let sol = solve(&inst).unwrap();
        let t1 = sol.stage1.duration().unwrap();
        let t2 = sol.stage2.duration().unwrap();
        assert!(t2 >= t1, "{t2} < {t1}");
    }
}
