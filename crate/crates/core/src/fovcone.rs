//! Convex constraints on the decision pair `w = (h, h′)`.
//!
//! The mass-normalized thrust along the path is affine in `w`:
//! `c(w) = γ″·h + ½γ′·h′ − g`. Every requirement handled by the solver
//! (field of view, attitude cone, thrust ball, nonholonomy slack, motor rows)
//! is written as a single second-order cone inequality
//! `‖M·w + m‖₂ ≤ r·w + r₀`.

use crate::error::{Error, Result};
use crate::math::{cos, sin, sqrt, Mat3, Vec3};
use crate::quadmodel::psi_perp;

/// Affine thrust map `c(w) = P·w + p`, with `P` stored by columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThrustMap {
    pub cols: [Vec3; 2],
    pub offset: Vec3,
}

impl ThrustMap {
    pub fn new(tangent: &Vec3, curvature: &Vec3, gravity: &Vec3) -> ThrustMap {
        ThrustMap { cols: [*curvature, *tangent * 0.5], offset: -*gravity }
    }

    pub fn eval(&self, w: [f64; 2]) -> Vec3 {
        self.cols[0] * w[0] + self.cols[1] * w[1] + self.offset
    }

    /// `L·c(w)` as a new affine map.
    fn transform(&self, l: &Mat3) -> ThrustMap {
        ThrustMap {
            cols: [l.mul_vec(&self.cols[0]), l.mul_vec(&self.cols[1])],
            offset: l.mul_vec(&self.offset),
        }
    }

    /// Linear functional `u·c(w)` as `(coefficients, constant)`.
    fn project(&self, u: &Vec3) -> ([f64; 2], f64) {
        ([u.dot(&self.cols[0]), u.dot(&self.cols[1])], u.dot(&self.offset))
    }
}

/// `‖M·w + m‖₂ ≤ r·w + r₀` over `w ∈ ℝ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Soc2Constraint {
    /// Columns of the 3×2 matrix `M`.
    pub m_cols: [Vec3; 2],
    pub m: Vec3,
    pub r: [f64; 2],
    pub r0: f64,
}

impl Soc2Constraint {
    /// `r·w + r₀ ≥ 0`.
    pub fn linear(r: [f64; 2], r0: f64) -> Soc2Constraint {
        Soc2Constraint { m_cols: [Vec3::ZERO; 2], m: Vec3::ZERO, r, r0 }
    }

    fn from_map(lhs: &ThrustMap, r: [f64; 2], r0: f64) -> Soc2Constraint {
        Soc2Constraint { m_cols: lhs.cols, m: lhs.offset, r, r0 }
    }

    pub fn lhs(&self, w: [f64; 2]) -> f64 {
        (self.m_cols[0] * w[0] + self.m_cols[1] * w[1] + self.m).norm()
    }

    pub fn rhs(&self, w: [f64; 2]) -> f64 {
        self.r[0] * w[0] + self.r[1] * w[1] + self.r0
    }

    /// `lhs − rhs`; nonpositive when satisfied.
    pub fn residual(&self, w: [f64; 2]) -> f64 {
        self.lhs(w) - self.rhs(w)
    }

    pub fn is_satisfied(&self, w: [f64; 2]) -> bool {
        self.lhs(w) <= self.rhs(w)
    }

    pub fn is_finite(&self) -> bool {
        self.m_cols[0].is_finite()
            && self.m_cols[1].is_finite()
            && self.m.is_finite()
            && self.r.iter().all(|v| v.is_finite())
            && self.r0.is_finite()
    }

    /// Same constraint over `(x₀, x₁)` where `w = (a₀₀x₀ + a₀₁x₁, a₁₀x₀ + a₁₁x₁)`.
    pub fn substitute(&self, a: [[f64; 2]; 2]) -> Soc2Constraint {
        let col = |j: usize| self.m_cols[0] * a[0][j] + self.m_cols[1] * a[1][j];
        Soc2Constraint {
            m_cols: [col(0), col(1)],
            m: self.m,
            r: [
                self.r[0] * a[0][0] + self.r[1] * a[1][0],
                self.r[0] * a[0][1] + self.r[1] * a[1][1],
            ],
            r0: self.r0,
        }
    }

    /// One-dimensional restriction with coordinate `fixed` held at `value`.
    pub fn restrict(&self, fixed: usize, value: f64) -> Soc1 {
        let free = 1 - fixed;
        Soc1 {
            a: self.m_cols[free],
            b: self.m_cols[fixed] * value + self.m,
            p: self.r[free],
            q: self.r[fixed] * value + self.r0,
        }
    }
}

/// `‖a·x + b‖₂ ≤ p·x + q` over scalar `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Soc1 {
    pub a: Vec3,
    pub b: Vec3,
    pub p: f64,
    pub q: f64,
}

/// Closed interval, possibly unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ALL: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl Soc1 {
    /// Exact feasible set, which is an interval by convexity.
    ///
    /// Squaring gives `A x² + 2B x + C ≤ 0` together with `p x + q ≥ 0`, where
    /// `A = ‖a‖² − p²`, `B = a·b − p q`, `C = ‖b‖² − q²`.
    pub fn feasible_set(&self) -> Option<Interval> {
        let half_line = if self.p > 0.0 {
            Interval::new(-self.q / self.p, f64::INFINITY)
        } else if self.p < 0.0 {
            Interval::new(f64::NEG_INFINITY, -self.q / self.p)
        } else if self.q >= 0.0 {
            Interval::ALL
        } else {
            return None;
        };
        let aa = self.a.norm_squared();
        let a = aa - self.p * self.p;
        let b = self.a.dot(&self.b) - self.p * self.q;
        let c = self.b.norm_squared() - self.q * self.q;
        let scale = aa + self.p * self.p;
        let quad = if a.abs() <= 1e-14 * scale {
            // linear: 2b x + c <= 0
            if b > 0.0 {
                Interval::new(f64::NEG_INFINITY, -c / (2.0 * b))
            } else if b < 0.0 {
                Interval::new(-c / (2.0 * b), f64::INFINITY)
            } else if c <= 0.0 {
                Interval::ALL
            } else {
                return None;
            }
        } else {
            let disc = b * b - a * c;
            if a > 0.0 {
                if disc < 0.0 {
                    return None;
                }
                let (x1, x2) = roots(a, b, c, disc);
                Interval::new(x1, x2)
            } else if disc <= 0.0 {
                // concave quadratic that never crosses zero: holds everywhere
                Interval::ALL
            } else {
                // two rays; the cone branch is the one inside the half-line
                let (x1, x2) = roots(a, b, c, disc);
                if self.p > 0.0 {
                    Interval::new(x2, f64::INFINITY)
                } else {
                    Interval::new(f64::NEG_INFINITY, x1)
                }
            }
        };
        quad.intersect(&half_line)
    }
}

/// Sorted roots of `a x² + 2b x + c` with cancellation-free evaluation.
fn roots(a: f64, b: f64, c: f64, disc: f64) -> (f64, f64) {
    let sq = sqrt(disc.max(0.0));
    let t = -(b + if b >= 0.0 { sq } else { -sq });
    let (r1, r2) = if t == 0.0 { (0.0, 0.0) } else { (t / a, c / t) };
    if r1 <= r2 {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// Per-landmark data cached at a grid node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FovTerm {
    /// `l − γ(s)` (m).
    pub displacement: Vec3,
    pub chi: f64,
    /// `(l − γ(s)) × ψ⊥`.
    pub axis: Vec3,
}

impl FovTerm {
    pub fn new(landmark: &Vec3, position: &Vec3, psi: &Vec3, offset: f64, half_angle: f64) -> Result<FovTerm> {
        let displacement = *landmark - *position;
        let chi = chi(landmark, position, offset, half_angle)?;
        Ok(FovTerm { displacement, chi, axis: displacement.cross(&psi_perp(psi)) })
    }
}

/// Offset `χ` such that the landmark is in view iff `(l − γ)·x_B ≥ χ`.
pub fn chi(landmark: &Vec3, position: &Vec3, offset: f64, half_angle: f64) -> Result<f64> {
    let dist2 = (*landmark - *position).norm_squared();
    let s = sin(half_angle);
    let lateral = offset * offset * s * s;
    if !(dist2 > lateral && dist2 >= offset * offset) {
        return Err(Error::LandmarkTooClose { landmark: u32::MAX, index: usize::MAX });
    }
    Ok(offset * s * s + cos(half_angle) * sqrt(dist2 - lateral))
}

/// Field-of-view requirement `χ‖ψ⊥ × c(w)‖ ≤ ((l − γ) × ψ⊥)·c(w)`.
pub fn fov_constraint(thrust: &ThrustMap, term: &FovTerm, psi: &Vec3) -> Soc2Constraint {
    let lhs = thrust.transform(&psi_perp(psi).skew().scale(term.chi));
    let (r, r0) = thrust.project(&term.axis);
    Soc2Constraint::from_map(&lhs, r, r0)
}

/// Builds the field-of-view constraint directly from geometry.
#[allow(clippy::too_many_arguments)]
pub fn fov_constraint_at(
    landmark: &Vec3,
    position: &Vec3,
    tangent: &Vec3,
    curvature: &Vec3,
    psi: &Vec3,
    gravity: &Vec3,
    offset: f64,
    half_angle: f64,
) -> Result<Soc2Constraint> {
    let term = FovTerm::new(landmark, position, psi, offset, half_angle)?;
    Ok(fov_constraint(&ThrustMap::new(tangent, curvature, gravity), &term, psi))
}

/// Body z axis within `max_angle` of `axis`: `cos β‖c(w)‖ ≤ n·c(w)`.
pub fn attitude_cone_constraint(thrust: &ThrustMap, axis: &Vec3, max_angle: f64) -> Soc2Constraint {
    let lhs = thrust.transform(&Mat3::IDENTITY.scale(cos(max_angle)));
    let (r, r0) = thrust.project(axis);
    Soc2Constraint::from_map(&lhs, r, r0)
}

/// Total thrust bound `‖c(w)‖ ≤ c_total_max`.
pub fn thrust_ball_constraint(thrust: &ThrustMap, c_total_max: f64) -> Soc2Constraint {
    Soc2Constraint::from_map(thrust, [0.0, 0.0], c_total_max)
}

/// Relaxed alignment of the thrust with a prescribed body z axis: `‖ẑ × c(w)‖ ≤ η`.
pub fn nonholonomy_constraint(thrust: &ThrustMap, z_body: &Vec3, eta: f64) -> Soc2Constraint {
    Soc2Constraint::from_map(&thrust.transform(&z_body.skew()), [0.0, 0.0], eta)
}

/// Angle between the camera axis and the ray from the optical center to the landmark.
pub fn fov_angle(position: &Vec3, attitude: &Mat3, landmark: &Vec3, offset: f64) -> f64 {
    let x_b = attitude.column(0);
    let ray = *landmark - (*position + x_b * offset);
    if ray.norm() == 0.0 {
        return core::f64::consts::PI;
    }
    ray.angle_to(&x_b)
}

/// Geometric visibility test of a landmark from a camera on the body x axis.
pub fn fov_predicate(position: &Vec3, attitude: &Mat3, landmark: &Vec3, offset: f64, half_angle: f64) -> bool {
    fov_angle(position, attitude, landmark, offset) <= half_angle
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadmodel::attitude_from_thrust;
    use core::f64::consts::PI;

    const G: Vec3 = Vec3([0.0, 0.0, -9.81]);

    fn deg(x: f64) -> f64 {
        x * PI / 180.0
    }

    #[test]
    fn chi_examples() {
        let origin = Vec3::ZERO;
        let l = Vec3::new(2.0, 0.0, 0.0);
        assert!((chi(&l, &origin, 0.0, deg(60.0)).unwrap() - 1.0).abs() < 1e-15);
        let l = Vec3::new(0.0, 3.0, 4.0);
        // 0.05 + cos45·sqrt(25 − 0.005), evaluated at high precision
        assert!((chi(&l, &origin, 0.1, deg(45.0)).unwrap() - 3.585_180_334_862_707).abs() < 1e-12);
        let l = Vec3::new(0.4, 0.0, 0.0);
        assert!(matches!(chi(&l, &origin, 1.0, deg(30.0)), Err(Error::LandmarkTooClose { .. })));
    }

    #[test]
    fn fov_on_axis_and_behind_at_hover() {
        let thrust = ThrustMap::new(&Vec3::X, &Vec3::ZERO, &G);
        let at_hover = [0.0, 0.0];
        let ahead = fov_constraint_at(&Vec3::new(5.0, 0.0, 0.0), &Vec3::ZERO, &Vec3::X, &Vec3::ZERO, &Vec3::X, &G, 0.1, 0.3)
            .unwrap();
        assert!(ahead.is_satisfied(at_hover));
        let behind = fov_constraint_at(&Vec3::new(-5.0, 0.0, 0.0), &Vec3::ZERO, &Vec3::X, &Vec3::ZERO, &Vec3::X, &G, 0.1, 0.3)
            .unwrap();
        assert!(!behind.is_satisfied(at_hover));
        assert_eq!(thrust.eval(at_hover), Vec3::new(0.0, 0.0, 9.81));
    }

    #[test]
    fn attitude_cone_examples() {
        let thrust = ThrustMap::new(&Vec3::X, &Vec3::ZERO, &G);
        let aligned = attitude_cone_constraint(&thrust, &Vec3::Z, 0.0);
        assert!(aligned.residual([0.0, 0.0]).abs() < 1e-15);
        let sideways = attitude_cone_constraint(&thrust, &Vec3::X, deg(45.0));
        assert!(!sideways.is_satisfied([0.0, 0.0]));
        let wide = attitude_cone_constraint(&thrust, &Vec3::Z, deg(89.9));
        // c = (h′/2, 0, g): n·c > 0 for every h′ but the tilt must stay under 89.9°
        for hp in [-100.0, -3.0, 0.0, 40.0, 1000.0] {
            assert!(wide.is_satisfied([0.0, hp]));
        }
    }

    #[test]
    fn thrust_ball_examples() {
        let thrust = ThrustMap::new(&Vec3::X, &Vec3::ZERO, &G);
        assert!(thrust_ball_constraint(&thrust, 9.82).is_satisfied([0.0, 0.0]));
        assert!(!thrust_ball_constraint(&thrust, 9.8).is_satisfied([0.0, 0.0]));
        // 4c_max = 2g on a straight horizontal path at rest: |h′/2| ≤ g√3
        let ball = thrust_ball_constraint(&thrust, 2.0 * 9.81);
        let edge = 2.0 * 9.81 * sqrt(3.0);
        assert!((edge - 2.0 * 16.991_418_422_250_686).abs() < 1e-12);
        let set = ball.restrict(0, 0.0).feasible_set().unwrap();
        assert!((set.hi - edge).abs() < 1e-9 && (set.lo + edge).abs() < 1e-9);
    }

    #[test]
    fn nonholonomy_examples() {
        let thrust = ThrustMap::new(&Vec3::X, &Vec3::ZERO, &G);
        let eta = 0.5;
        // c(0,0) = (0,0,g) is along z
        assert!(nonholonomy_constraint(&thrust, &Vec3::Z, eta).is_satisfied([0.0, 0.0]));
        // perpendicular axis with |c| = 2η
        let thrust = ThrustMap::new(&Vec3::X, &Vec3::ZERO, &Vec3::new(0.0, 0.0, -2.0 * eta));
        assert!(!nonholonomy_constraint(&thrust, &Vec3::X, eta).is_satisfied([0.0, 0.0]));
        assert!(nonholonomy_constraint(&thrust, &Vec3::X, 1e300).is_satisfied([0.0, 0.0]));
    }

    #[test]
    fn fov_predicate_examples() {
        let alpha = deg(30.0);
        assert!(fov_predicate(&Vec3::ZERO, &Mat3::IDENTITY, &Vec3::new(5.0, 0.0, 0.0), 0.1, alpha));
        assert!(!fov_predicate(&Vec3::ZERO, &Mat3::IDENTITY, &Vec3::new(-5.0, 0.0, 0.0), 0.1, alpha));
        let pc = Vec3::new(0.1, 0.0, 0.0);
        let l = pc + Vec3::new(cos(deg(31.0)), sin(deg(31.0)), 0.0) * 5.0;
        assert!(!fov_predicate(&Vec3::ZERO, &Mat3::IDENTITY, &l, 0.1, alpha));
        let l = pc + Vec3::new(cos(deg(29.0)), sin(deg(29.0)), 0.0) * 5.0;
        assert!(fov_predicate(&Vec3::ZERO, &Mat3::IDENTITY, &l, 0.1, alpha));
    }

    #[test]
    fn restriction_matches_direct_evaluation() {
        let thrust = ThrustMap::new(&Vec3::new(0.6, 0.8, 0.0), &Vec3::new(-0.3, 0.2, 0.1), &G);
        let k = attitude_cone_constraint(&thrust, &Vec3::new(0.0, 0.6, 0.8), 0.7);
        let set = k.restrict(0, 3.0).feasible_set().unwrap();
        for x in [set.lo, set.hi] {
            assert!(k.residual([3.0, x]).abs() < 1e-9);
        }
        assert!(k.is_satisfied([3.0, 0.5 * (set.lo + set.hi)]));
        assert!(!k.is_satisfied([3.0, set.hi + 1e-3]));
        assert!(!k.is_satisfied([3.0, set.lo - 1e-3]));
    }

    #[test]
    fn linear_rows_reduce_to_half_lines() {
        let up = Soc2Constraint::linear([0.0, 2.0], -4.0); // x₁ ≥ 2
        assert_eq!(up.restrict(0, 7.0).feasible_set(), Some(Interval::new(2.0, f64::INFINITY)));
        let down = Soc2Constraint::linear([0.0, -1.0], 1.0); // x₁ ≤ 1
        assert_eq!(down.restrict(0, 7.0).feasible_set(), Some(Interval::new(f64::NEG_INFINITY, 1.0)));
        let never = Soc2Constraint::linear([0.0, 0.0], -1.0);
        assert_eq!(never.restrict(0, 0.0).feasible_set(), None);
    }

    #[test]
    fn fov_constraint_agrees_with_thrust_attitude() {
        // tilted thrust, landmark slightly off the camera axis
        let tangent = Vec3::new(1.0, 0.2, 0.0);
        let curvature = Vec3::new(0.0, 0.5, 0.0);
        let psi = Vec3::X;
        let thrust = ThrustMap::new(&tangent, &curvature, &G);
        let w = [4.0, 6.0];
        let r = attitude_from_thrust(&thrust.eval(w), &psi).unwrap();
        let pos = Vec3::new(1.0, 2.0, 3.0);
        for angle in [0.2, 0.35, 0.5] {
            let dir = r.mul_vec(&Vec3::new(cos(angle), sin(angle), 0.0));
            let l = pos + r.column(0) * 0.1 + dir * 6.0;
            let k = fov_constraint_at(&l, &pos, &tangent, &curvature, &psi, &G, 0.1, 0.4).unwrap();
            assert_eq!(k.is_satisfied(w), fov_predicate(&pos, &r, &l, 0.1, 0.4), "angle {angle}");
        }
    }
}
