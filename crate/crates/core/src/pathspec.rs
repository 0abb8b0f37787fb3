//! Geometric path and heading, problem instances, grids and per-point requirements.
//!
//! A path is a list of contiguous polynomial segments for the position `γ(s)`
//! and, separately, for the heading angle `θ(s)`; the heading vector is
//! `ψ = (cos θ, sin θ, 0)`. Polynomial coefficients are ascending powers of
//! `s − a` where `a` is the segment start.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::math::{cos, sin, Vec3};
use crate::quadmodel::{CameraRig, QuadParams};

/// Continuity tolerance at segment breakpoints.
const CONTINUITY_TOL: f64 = 1e-8;
/// Minimum `|γ′|` accepted at grid nodes.
const REGULARITY_TOL: f64 = 1e-9;
/// Half-angle of the attitude cone used when no attitude window covers a point.
pub const DEFAULT_CONE_ANGLE: f64 = FRAC_PI_2 - 1e-6;
/// Upper bound on `h` when no speed limit applies (m²/s²).
pub const DEFAULT_H_CAP: f64 = 1e6;
/// Default nonholonomy slack (m/s²).
pub const DEFAULT_ETA: f64 = 4.0;
/// Default smoothing width as a fraction of the path length.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.05;
pub const DEFAULT_EPS_H: f64 = 1e-6;
pub const DEFAULT_GRID_N: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    /// Ascending powers of the local coordinate.
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    /// Value and first two derivatives at local coordinate `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            d2 = d2 * x + 2.0 * d1;
            d1 = d1 * x + p;
            p = p * x + c;
        }
        [p, d1, d2]
    }

    /// Quintic matching value, slope and curvature at both ends of `[0, len]`.
    pub fn quintic_hermite(len: f64, start: [f64; 3], end: [f64; 3]) -> Polynomial {
        let [p0, v0, a0] = start;
        let [p1, v1, a1] = end;
        let l = len;
        let (l2, l3) = (l * l, l * l * l);
        let c3 = (20.0 * (p1 - p0) - (8.0 * v1 + 12.0 * v0) * l - (3.0 * a0 - a1) * l2) / (2.0 * l3);
        let c4 = (30.0 * (p0 - p1) + (14.0 * v1 + 16.0 * v0) * l + (3.0 * a0 - 2.0 * a1) * l2)
            / (2.0 * l3 * l);
        let c5 = (12.0 * (p1 - p0) - 6.0 * (v1 + v0) * l - (a0 - a1) * l2) / (2.0 * l3 * l2);
        Polynomial::new(alloc::vec![p0, v0, 0.5 * a0, c3, c4, c5])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSegment {
    pub start: f64,
    pub end: f64,
    pub gamma: [Polynomial; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadingSegment {
    pub start: f64,
    pub end: f64,
    pub theta: Polynomial,
}

/// Position and derivatives of a sample used to build a path from knots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathKnot {
    pub s: f64,
    pub value: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
}

/// Heading-angle counterpart of [`PathKnot`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleKnot {
    pub s: f64,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Everything the solver needs to know about the path at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint {
    pub s: f64,
    pub position: Vec3,
    /// `γ′(s)`
    pub tangent: Vec3,
    /// `γ″(s)`
    pub curvature: Vec3,
    pub theta: f64,
    pub psi: Vec3,
    pub psi_d1: Vec3,
    pub psi_d2: Vec3,
}

impl PathPoint {
    /// Lateral heading axis `z_W × ψ`.
    pub fn psi_perp(&self) -> Vec3 {
        psi_perp(&self.psi)
    }
}

/// `z_W × ψ` for a unit heading in the world x–y plane.
pub fn psi_perp(psi: &Vec3) -> Vec3 {
    crate::quadmodel::psi_perp(psi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSpec {
    segments: Vec<PathSegment>,
    heading: Vec<HeadingSegment>,
    s_end: f64,
}

impl PathSpec {
    /// Validates contiguity, coverage of `[0, S_end]`, C² continuity and regularity.
    pub fn new(segments: Vec<PathSegment>, heading: Vec<HeadingSegment>) -> Result<PathSpec> {
        let first = segments
            .first()
            .ok_or_else(|| Error::Validation("path.segments is empty".into()))?;
        if first.start != 0.0 {
            return Err(Error::Validation("path.segments must start at s = 0".into()));
        }
        let s_end = segments.last().map(|s| s.end).unwrap_or(0.0);
        if !(s_end > 0.0 && s_end.is_finite()) {
            return Err(Error::Validation(format!("path length must be positive, got {s_end}")));
        }
        for (k, seg) in segments.iter().enumerate() {
            if !(seg.end > seg.start) {
                return Err(Error::Validation(format!("path.segments[{k}] has an empty range")));
            }
            if seg.gamma.iter().any(|p| p.coeffs.is_empty() || p.coeffs.iter().any(|c| !c.is_finite())) {
                return Err(Error::Validation(format!("path.segments[{k}] has invalid coefficients")));
            }
        }
        if heading.is_empty() {
            return Err(Error::Validation("heading.segments is empty".into()));
        }
        if heading[0].start != 0.0 || (heading[heading.len() - 1].end - s_end).abs() > 1e-12 * s_end {
            return Err(Error::Validation("heading.segments must cover the path range".into()));
        }
        for (k, seg) in heading.iter().enumerate() {
            if !(seg.end > seg.start) || seg.theta.coeffs.is_empty() {
                return Err(Error::Validation(format!("heading.segments[{k}] is empty")));
            }
        }
        for pair in segments.windows(2) {
            if pair[0].end != pair[1].start {
                return Err(Error::Validation(format!(
                    "path segments are not contiguous at s = {}",
                    pair[0].end
                )));
            }
            for axis in 0..3 {
                let a = pair[0].gamma[axis].eval(pair[0].end - pair[0].start);
                let b = pair[1].gamma[axis].eval(0.0);
                check_c2(a, b, pair[0].end, "path")?;
            }
        }
        for pair in heading.windows(2) {
            if pair[0].end != pair[1].start {
                return Err(Error::Validation(format!(
                    "heading segments are not contiguous at s = {}",
                    pair[0].end
                )));
            }
            let a = pair[0].theta.eval(pair[0].end - pair[0].start);
            let b = pair[1].theta.eval(0.0);
            check_c2(a, b, pair[0].end, "heading")?;
        }
        let spec = PathSpec { segments, heading, s_end };
        // dense regularity sample
        const PER_SEGMENT: usize = 16;
        for seg in &spec.segments {
            for k in 0..=PER_SEGMENT {
                let s = seg.start + (seg.end - seg.start) * k as f64 / PER_SEGMENT as f64;
                let speed = spec.eval(s)?.tangent.norm();
                if !(speed > REGULARITY_TOL) {
                    return Err(Error::IrregularPath { s, speed });
                }
            }
        }
        Ok(spec)
    }

    /// Piecewise quintic path through knots with prescribed first and second derivatives.
    pub fn from_knots(knots: &[PathKnot], heading: &[AngleKnot]) -> Result<PathSpec> {
        if knots.len() < 2 || heading.len() < 2 {
            return Err(Error::InvalidArgument("at least two knots are required"));
        }
        let segments = knots
            .windows(2)
            .map(|w| {
                let len = w[1].s - w[0].s;
                let axis = |i: usize| {
                    Polynomial::quintic_hermite(
                        len,
                        [w[0].value[i], w[0].d1[i], w[0].d2[i]],
                        [w[1].value[i], w[1].d1[i], w[1].d2[i]],
                    )
                };
                PathSegment { start: w[0].s, end: w[1].s, gamma: [axis(0), axis(1), axis(2)] }
            })
            .collect();
        let heading = heading
            .windows(2)
            .map(|w| HeadingSegment {
                start: w[0].s,
                end: w[1].s,
                theta: Polynomial::quintic_hermite(
                    w[1].s - w[0].s,
                    [w[0].value, w[0].d1, w[0].d2],
                    [w[1].value, w[1].d1, w[1].d2],
                ),
            })
            .collect();
        PathSpec::new(segments, heading)
    }

    /// Straight segment from `start` to `end` parameterized by arc length, with
    /// the heading along the direction of travel projected onto the x–y plane.
    pub fn straight(start: Vec3, end: Vec3) -> Result<PathSpec> {
        let d = end - start;
        let len = d.norm();
        let u = d.normalized(0.0).ok_or(Error::InvalidArgument("degenerate straight path"))?;
        let theta = crate::math::atan2(u.y(), u.x());
        let axis = |i: usize| Polynomial::new(alloc::vec![start[i], u[i]]);
        PathSpec::new(
            alloc::vec![PathSegment { start: 0.0, end: len, gamma: [axis(0), axis(1), axis(2)] }],
            alloc::vec![HeadingSegment { start: 0.0, end: len, theta: Polynomial::new(alloc::vec![theta]) }],
        )
    }

    pub fn s_end(&self) -> f64 {
        self.s_end
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn heading_segments(&self) -> &[HeadingSegment] {
        &self.heading
    }

    pub fn eval(&self, s: f64) -> Result<PathPoint> {
        if !(s >= 0.0 && s <= self.s_end) {
            return Err(Error::OutOfRange { s, s_end: self.s_end });
        }
        let seg = &self.segments[locate(&self.segments, s, |g| g.start)];
        let x = s - seg.start;
        let [gx, gy, gz] = [seg.gamma[0].eval(x), seg.gamma[1].eval(x), seg.gamma[2].eval(x)];
        let hs = &self.heading[locate(&self.heading, s, |g| g.start)];
        let [th, th1, th2] = hs.theta.eval(s - hs.start);
        let (st, ct) = (sin(th), cos(th));
        let psi = Vec3::new(ct, st, 0.0);
        let across = Vec3::new(-st, ct, 0.0);
        Ok(PathPoint {
            s,
            position: Vec3::new(gx[0], gy[0], gz[0]),
            tangent: Vec3::new(gx[1], gy[1], gz[1]),
            curvature: Vec3::new(gx[2], gy[2], gz[2]),
            theta: th,
            psi,
            psi_d1: across * th1,
            psi_d2: across * th2 - psi * (th1 * th1),
        })
    }
}

fn check_c2(a: [f64; 3], b: [f64; 3], s: f64, what: &str) -> Result<()> {
    for (order, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        if (x - y).abs() > CONTINUITY_TOL * (1.0 + x.abs().max(y.abs())) {
            return Err(Error::Validation(format!(
                "{what} derivative of order {order} jumps at s = {s}: {x} vs {y}"
            )));
        }
    }
    Ok(())
}

/// Index of the last segment whose start is `<= s`.
fn locate<T>(segs: &[T], s: f64, start: impl Fn(&T) -> f64) -> usize {
    segs.partition_point(|g| start(g) <= s).saturating_sub(1)
}

pub fn eval_path(spec: &PathSpec, s: f64) -> Result<PathPoint> {
    spec.eval(s)
}

/// Closed parameter interval `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SRange {
    pub start: f64,
    pub end: f64,
}

impl SRange {
    pub fn new(start: f64, end: f64) -> Self {
        SRange { start, end }
    }

    pub fn contains(&self, s: f64) -> bool {
        self.start <= s && s <= self.end
    }

    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.start <= hi && lo <= self.end
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landmark {
    pub id: u32,
    pub position: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityWindow {
    pub range: SRange,
    pub ids: Vec<u32>,
}

/// Body z axis must stay within `max_angle` of `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeCone {
    pub axis: Vec3,
    pub max_angle: f64,
}

impl Default for AttitudeCone {
    fn default() -> Self {
        AttitudeCone { axis: Vec3::Z, max_angle: DEFAULT_CONE_ANGLE }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeWindow {
    pub range: SRange,
    pub cone: AttitudeCone,
}

/// Optional positive lower bound on the square speed over an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedFloor {
    pub range: SRange,
    pub h_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub grid_n: usize,
    pub h_start: f64,
    pub h_end: f64,
    pub v_max: Option<f64>,
    pub h_cap: f64,
    /// Nonholonomy slack (m/s²).
    pub eta: f64,
    /// Smoothing width, in units of `s`.
    pub sigma: f64,
    /// Bisection tolerance on `h` (m²/s²).
    pub eps_h: f64,
}

impl SolverSettings {
    pub fn with_defaults(s_end: f64) -> SolverSettings {
        SolverSettings {
            grid_n: DEFAULT_GRID_N,
            h_start: 0.0,
            h_end: 0.0,
            v_max: None,
            h_cap: DEFAULT_H_CAP,
            eta: DEFAULT_ETA,
            sigma: DEFAULT_SIGMA_FRACTION * s_end,
            eps_h: DEFAULT_EPS_H,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub path: PathSpec,
    pub landmarks: Vec<Landmark>,
    pub visibility: Vec<VisibilityWindow>,
    pub attitude: Vec<AttitudeWindow>,
    pub speed_floors: Vec<SpeedFloor>,
    pub quad: QuadParams,
    pub camera: CameraRig,
    pub solver: SolverSettings,
}

impl ProblemInstance {
    /// Instance with no perception or attitude requirements and default settings.
    pub fn new(path: PathSpec, quad: QuadParams, camera: CameraRig) -> ProblemInstance {
        let solver = SolverSettings::with_defaults(path.s_end());
        ProblemInstance {
            path,
            landmarks: Vec::new(),
            visibility: Vec::new(),
            attitude: Vec::new(),
            speed_floors: Vec::new(),
            quad,
            camera,
            solver,
        }
    }

    pub fn landmark(&self, id: u32) -> Option<&Landmark> {
        self.landmarks.iter().find(|l| l.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        self.camera.validate()?;
        let s_end = self.path.s_end();
        let check_range = |r: &SRange, what: &str| -> Result<()> {
            if !(0.0 <= r.start && r.start <= r.end && r.end <= s_end) {
                return Err(Error::Validation(format!(
                    "{what}.s_range [{}, {}] not within [0, {s_end}]",
                    r.start, r.end
                )));
            }
            Ok(())
        };
        for (k, l) in self.landmarks.iter().enumerate() {
            if !l.position.is_finite() {
                return Err(Error::Validation(format!("landmarks[{k}].xyz must be finite")));
            }
            if self.landmarks[..k].iter().any(|o| o.id == l.id) {
                return Err(Error::Validation(format!("duplicate landmark id {}", l.id)));
            }
        }
        for (k, w) in self.visibility.iter().enumerate() {
            check_range(&w.range, &format!("visibility[{k}]"))?;
            if let Some(id) = w.ids.iter().find(|id| self.landmark(**id).is_none()) {
                return Err(Error::Validation(format!("visibility[{k}] references unknown landmark id {id}")));
            }
        }
        for (k, w) in self.attitude.iter().enumerate() {
            check_range(&w.range, &format!("attitude[{k}]"))?;
            if (w.cone.axis.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::Validation(format!("attitude[{k}].n must be a unit vector")));
            }
            if !(w.cone.max_angle >= 0.0 && w.cone.max_angle < FRAC_PI_2) {
                return Err(Error::Validation(format!(
                    "attitude[{k}].beta must lie in [0, pi/2), got {}",
                    w.cone.max_angle
                )));
            }
        }
        for (k, f) in self.speed_floors.iter().enumerate() {
            check_range(&f.range, &format!("h_lower[{k}]"))?;
            if !(f.h_min >= 0.0 && f.h_min.is_finite()) {
                return Err(Error::Validation(format!("h_lower[{k}].h must be >= 0")));
            }
        }
        let st = &self.solver;
        if st.grid_n < 2 {
            return Err(Error::Validation(format!("solver.grid_n must be >= 2, got {}", st.grid_n)));
        }
        for (name, v) in [("h_start", st.h_start), ("h_end", st.h_end)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("solver.{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("eta", st.eta), ("sigma", st.sigma), ("eps_h", st.eps_h), ("h_cap", st.h_cap)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("solver.{name} must be > 0, got {v}")));
            }
        }
        if let Some(v) = st.v_max {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("solver.v_max must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Landmarks and attitude cones required at one path parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Requirements {
    /// Sorted, deduplicated landmark ids.
    pub landmarks: Vec<u32>,
    /// Cones of every attitude window covering the point; empty when none does.
    pub cones: Vec<AttitudeCone>,
}

impl Requirements {
    /// The governing cone, falling back to the near-half-space default.
    pub fn cone(&self) -> AttitudeCone {
        self.cones.first().copied().unwrap_or_default()
    }
}

/// Union of the visibility windows and all attitude windows covering `s` (closed intervals).
pub fn requirements_at(instance: &ProblemInstance, s: f64) -> Requirements {
    requirements_over(instance, s, s)
}

/// Requirements of every window meeting `[lo, hi]`.
pub fn requirements_over(instance: &ProblemInstance, lo: f64, hi: f64) -> Requirements {
    let mut landmarks: Vec<u32> = instance
        .visibility
        .iter()
        .filter(|w| w.range.overlaps(lo, hi))
        .flat_map(|w| w.ids.iter().copied())
        .collect();
    landmarks.sort_unstable();
    landmarks.dedup();
    let cones = instance
        .attitude
        .iter()
        .filter(|w| w.range.overlaps(lo, hi))
        .map(|w| w.cone)
        .collect();
    Requirements { landmarks, cones }
}

/// Requirements enforced at node `i`: those of every window touching one of
/// the node's adjacent steps, so that any point inside a window lies on a step
/// whose two ends both carry the window's constraints.
pub fn node_requirements(instance: &ProblemInstance, grid: &Grid, i: usize) -> Requirements {
    let lo = grid.s(i.saturating_sub(1));
    let hi = grid.s((i + 1).min(grid.n()));
    requirements_over(instance, lo, hi)
}

/// Uniform discretization with cached path data.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub ds: f64,
    pub points: Vec<PathPoint>,
}

impl Grid {
    /// Number of intervals, `n`; there are `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.points.len() - 1
    }

    pub fn s(&self, i: usize) -> f64 {
        self.points[i].s
    }

    pub fn s_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s).collect()
    }

    /// Index of the node nearest to `s`.
    pub fn nearest(&self, s: f64) -> usize {
        let k = crate::math::floor(s / self.ds + 0.5);
        (k.max(0.0) as usize).min(self.n())
    }
}

pub fn discretize(instance: &ProblemInstance) -> Result<Grid> {
    discretize_path(&instance.path, instance.solver.grid_n)
}

pub fn discretize_path(path: &PathSpec, grid_n: usize) -> Result<Grid> {
    if grid_n < 2 {
        return Err(Error::Validation(format!("grid_n must be >= 2, got {grid_n}")));
    }
    let s_end = path.s_end();
    let ds = s_end / grid_n as f64;
    let points = (0..=grid_n)
        .map(|i| {
            let s = if i == grid_n { s_end } else { i as f64 * ds };
            let p = path.eval(s)?;
            let speed = p.tangent.norm();
            if !(speed > REGULARITY_TOL) {
                return Err(Error::IrregularPath { s, speed });
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Grid { ds, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadmodel::test_params;
    use alloc::vec;

    fn circle(turns: f64, per_turn: usize) -> PathSpec {
        let n = (turns * per_turn as f64) as usize;
        let len = turns * 2.0 * core::f64::consts::PI;
        let knots: Vec<PathKnot> = (0..=n)
            .map(|k| {
                let s = len * k as f64 / n as f64;
                PathKnot {
                    s,
                    value: Vec3::new(cos(s), sin(s), 0.0),
                    d1: Vec3::new(-sin(s), cos(s), 0.0),
                    d2: Vec3::new(-cos(s), -sin(s), 0.0),
                }
            })
            .collect();
        let heading = [
            AngleKnot { s: 0.0, value: 0.0, d1: 0.0, d2: 0.0 },
            AngleKnot { s: len, value: 0.0, d1: 0.0, d2: 0.0 },
        ];
        PathSpec::from_knots(&knots, &heading).unwrap()
    }

    #[test]
    fn polynomial_derivatives() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0, 0.5]);
        let [v, d1, d2] = p.eval(2.0);
        assert_eq!(v, 1.0 - 4.0 + 12.0 + 4.0);
        assert_eq!(d1, -2.0 + 12.0 + 6.0);
        assert_eq!(d2, 6.0 + 6.0);
    }

    #[test]
    fn quintic_hermite_hits_end_conditions() {
        let p = Polynomial::quintic_hermite(1.7, [0.3, -1.0, 2.0], [2.0, 0.5, -3.0]);
        let a = p.eval(0.0);
        let b = p.eval(1.7);
        for (x, y) in a.iter().zip([0.3, -1.0, 2.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in b.iter().zip([2.0, 0.5, -3.0]) {
            assert!((x - y).abs() < 1e-11, "{b:?}");
        }
    }

    #[test]
    fn straight_path_derivatives() {
        let path = PathSpec::straight(Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)).unwrap();
        let p = path.eval(3.0).unwrap();
        assert_eq!(p.position, Vec3::new(3.0, 0.0, 0.0));
        assert_eq!(p.tangent, Vec3::X);
        assert_eq!(p.curvature, Vec3::ZERO);
        assert_eq!(p.psi, Vec3::X);
        assert_eq!(path.eval(10.5), Err(Error::OutOfRange { s: 10.5, s_end: 10.0 }));
        assert!(path.eval(-1e-9).is_err());
    }

    #[test]
    fn circle_derivatives_at_knot() {
        let path = circle(1.0, 32);
        let p = path.eval(0.0).unwrap();
        assert!((p.tangent - Vec3::Y).max_abs() < 1e-12);
        assert!((p.curvature - Vec3::new(-1.0, 0.0, 0.0)).max_abs() < 1e-12);
        // between knots the quintic stays close to the circle
        let q = path.eval(1.234).unwrap();
        assert!((q.position - Vec3::new(cos(1.234), sin(1.234), 0.0)).max_abs() < 1e-6);
    }

    #[test]
    fn psi_perp_rotates_by_quarter_turn() {
        assert_eq!(psi_perp(&Vec3::X), Vec3::Y);
        assert_eq!(psi_perp(&Vec3::Y), Vec3::new(-1.0, 0.0, 0.0));
        let a = core::f64::consts::PI / 6.0;
        let got = psi_perp(&Vec3::new(cos(a), sin(a), 0.0));
        assert!((got - Vec3::new(-sin(a), cos(a), 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn discretize_uniform_nodes() {
        let path = PathSpec::straight(Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)).unwrap();
        let g = discretize_path(&path, 5).unwrap();
        assert_eq!(g.s_values(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(discretize_path(&path, 2).unwrap().points.len(), 3);
        // cached values are what eval returns
        for p in &g.points {
            assert_eq!(*p, path.eval(p.s).unwrap());
        }
    }

    #[test]
    fn stationary_point_is_irregular() {
        // γ(s) = (s − 1)³ along x has γ′(1) = 0
        let seg = PathSegment {
            start: 0.0,
            end: 2.0,
            gamma: [
                Polynomial::new(vec![-1.0, 3.0, -3.0, 1.0]),
                Polynomial::new(vec![0.0]),
                Polynomial::new(vec![0.0]),
            ],
        };
        let heading = vec![HeadingSegment { start: 0.0, end: 2.0, theta: Polynomial::new(vec![0.0]) }];
        assert!(matches!(PathSpec::new(vec![seg], heading), Err(Error::IrregularPath { .. })));
    }

    #[test]
    fn discontinuous_segments_are_rejected() {
        let line = |a: f64, b: f64, x0: f64| PathSegment {
            start: a,
            end: b,
            gamma: [Polynomial::new(vec![x0, 1.0]), Polynomial::new(vec![0.0]), Polynomial::new(vec![0.0])],
        };
        let heading = vec![HeadingSegment { start: 0.0, end: 2.0, theta: Polynomial::new(vec![0.0]) }];
        assert!(PathSpec::new(vec![line(0.0, 1.0, 0.0), line(1.0, 2.0, 1.0)], heading.clone()).is_ok());
        assert!(PathSpec::new(vec![line(0.0, 1.0, 0.0), line(1.0, 2.0, 1.5)], heading).is_err());
    }

    fn instance() -> ProblemInstance {
        let path = PathSpec::straight(Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)).unwrap();
        let mut inst = ProblemInstance::new(path, test_params(), CameraRig { offset: 0.1, half_angle: 0.6 });
        inst.landmarks = vec![
            Landmark { id: 1, position: Vec3::new(20.0, 0.0, 0.0) },
            Landmark { id: 2, position: Vec3::new(20.0, 1.0, 0.0) },
        ];
        inst
    }

    #[test]
    fn requirements_union_and_defaults() {
        let mut inst = instance();
        let r = requirements_at(&inst, 4.0);
        assert!(r.landmarks.is_empty());
        assert_eq!(r.cone(), AttitudeCone::default());
        inst.visibility = vec![
            VisibilityWindow { range: SRange::new(0.0, 5.0), ids: vec![1] },
            VisibilityWindow { range: SRange::new(3.0, 10.0), ids: vec![2] },
        ];
        assert_eq!(requirements_at(&inst, 4.0).landmarks, vec![1, 2]);
        assert_eq!(requirements_at(&inst, 5.0).landmarks, vec![1, 2]);
        assert_eq!(requirements_at(&inst, 3.0).landmarks, vec![1, 2]);
        assert_eq!(requirements_at(&inst, 5.5).landmarks, vec![2]);
        assert_eq!(requirements_at(&inst, 0.0).landmarks, vec![1]);
    }

    #[test]
    fn validation_errors() {
        let mut inst = instance();
        assert!(inst.validate().is_ok());
        inst.visibility = vec![VisibilityWindow { range: SRange::new(0.0, 5.0), ids: vec![7] }];
        assert!(matches!(inst.validate(), Err(Error::Validation(m)) if m.contains("unknown landmark")));
        let mut inst = instance();
        inst.attitude = vec![AttitudeWindow {
            range: SRange::new(0.0, 1.0),
            cone: AttitudeCone { axis: Vec3::Z, max_angle: 2.0 },
        }];
        assert!(matches!(inst.validate(), Err(Error::Validation(m)) if m.contains("beta")));
        let mut inst = instance();
        inst.solver.grid_n = 1;
        assert!(inst.validate().is_err());
        let mut inst = instance();
        inst.visibility = vec![VisibilityWindow { range: SRange::new(0.0, 11.0), ids: vec![1] }];
        assert!(inst.validate().is_err());
    }
}
