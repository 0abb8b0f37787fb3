//! Gaussian smoothing of the body z axis field and the resulting rotation schedule.
//!
//! The point-mass pass yields a body z axis per grid node that is only
//! piecewise continuous. Convolving it with a Gaussian and renormalizing gives
//! a smooth axis field; together with the heading it fixes the attitude `R(s)`
//! and, by finite differences, `R′`, `R″` and the body-rate map `Γ` with
//! `[Γ]ₓ = RᵀR′`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ceil, exp, Mat3, Vec3};
use crate::pathspec::Grid;
use crate::quadmodel::{attitude_from_thrust, THRUST_EPS};

/// Kernel support in units of `σ`.
pub const KERNEL_HALF_WIDTH: f64 = 4.0;
/// Smoothed axes shorter than this are treated as cancelled out.
pub const MIN_SMOOTHED_NORM: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationNode {
    pub rotation: Mat3,
    /// `dR/ds`
    pub rotation_d1: Mat3,
    /// `d²R/ds²`
    pub rotation_d2: Mat3,
    /// Body-rate map with `ω = Γ√h` (1/m).
    pub gamma: Vec3,
    /// `dΓ/ds` (1/m²).
    pub gamma_d1: Vec3,
}

impl RotationNode {
    pub fn z_axis(&self) -> Vec3 {
        self.rotation.column(2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationSchedule {
    pub sigma: f64,
    pub nodes: Vec<RotationNode>,
}

impl RotationSchedule {
    /// Constant attitude along the whole grid.
    pub fn constant(rotation: Mat3, nodes: usize, sigma: f64) -> RotationSchedule {
        let node = RotationNode {
            rotation,
            rotation_d1: Mat3::ZERO,
            rotation_d2: Mat3::ZERO,
            gamma: Vec3::ZERO,
            gamma_d1: Vec3::ZERO,
        };
        RotationSchedule { sigma, nodes: alloc::vec![node; nodes] }
    }
}

/// Discrete kernel taps for offsets `u_k = k·Δs`, `k = −K..=K`.
fn kernel(ds: f64, sigma: f64, order: u8) -> Vec<f64> {
    let half = (ceil(KERNEL_HALF_WIDTH * sigma / ds) as usize).max(1);
    let taps = 2 * half + 1;
    let gauss = |u: f64| exp(-0.5 * u * u / (sigma * sigma));
    let base: Vec<f64> = (0..taps)
        .map(|k| {
            let u = (k as f64 - half as f64) * ds;
            let trap = if k == 0 || k == taps - 1 { 0.5 } else { 1.0 };
            gauss(u) * trap
        })
        .collect();
    let mass: f64 = base.iter().sum();
    let base: Vec<f64> = base.iter().map(|w| w / mass).collect();
    let offset = |k: usize| (k as f64 - half as f64) * ds;
    let s2 = sigma * sigma;
    match order {
        0 => base,
        // f′(u) = −u/σ² f(u)
        1 => base.iter().enumerate().map(|(k, g)| -offset(k) / s2 * g).collect(),
        _ => {
            // f″(u) = (u²/σ⁴ − 1/σ²) f(u), shifted to zero mass so constants have no curvature
            let mut w: Vec<f64> = base
                .iter()
                .enumerate()
                .map(|(k, g)| (offset(k) * offset(k) / s2 - 1.0) / s2 * g)
                .collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().zip(&base).for_each(|(v, g)| *v -= total * g);
            w
        }
    }
}

/// Convolution of uniformly spaced samples with the Gaussian kernel or one of
/// its first two derivatives.
///
/// The kernel is truncated at ±4σ and the samples are extended past both ends
/// by repeating the end values.
pub fn gaussian_convolve(samples: &[Vec3], ds: f64, sigma: f64, order: u8) -> Result<Vec<Vec3>> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("gaussian_convolve needs at least two samples"));
    }
    if !(sigma > 0.0) || !(ds > 0.0) {
        return Err(Error::InvalidArgument("gaussian_convolve needs sigma > 0 and ds > 0"));
    }
    if order > 2 {
        return Err(Error::InvalidArgument("derivative order must be 0, 1 or 2"));
    }
    if order > 0 && sigma < ds {
        return Err(Error::InvalidArgument("derivative kernels need sigma >= ds"));
    }
    let w = kernel(ds, sigma, order);
    let half = (w.len() / 2) as isize;
    let last = samples.len() as isize - 1;
    let out = (0..samples.len() as isize)
        .map(|i| {
            let mut acc = Vec3::ZERO;
            for (k, wk) in w.iter().enumerate() {
                let j = (i - (k as isize - half)).clamp(0, last);
                acc += samples[j as usize] * *wk;
            }
            acc
        })
        .collect();
    Ok(out)
}

/// Unit thrust directions implied by a square speed profile on the grid.
///
/// The last node uses the backward difference for `h′`.
pub fn zb_from_profile(grid: &Grid, h: &[f64], gravity: &Vec3) -> Result<Vec<Vec3>> {
    let n = grid.n();
    if h.len() != n + 1 {
        return Err(Error::InvalidArgument("profile length does not match grid"));
    }
    (0..=n)
        .map(|i| {
            let p = &grid.points[i];
            let hp = if i < n { (h[i + 1] - h[i]) / grid.ds } else { (h[n] - h[n - 1]) / grid.ds };
            let c = p.tangent * (0.5 * hp) + p.curvature * h[i] - *gravity;
            c.normalized(THRUST_EPS).ok_or(Error::DegenerateThrust { index: i })
        })
        .collect()
}

fn central<T: Copy>(vals: &[T], ds: f64, sub: impl Fn(&T, &T) -> T, scale: impl Fn(&T, f64) -> T) -> Vec<T> {
    let n = vals.len() - 1;
    (0..=n)
        .map(|i| {
            if i == 0 {
                scale(&sub(&vals[1], &vals[0]), 1.0 / ds)
            } else if i == n {
                scale(&sub(&vals[n], &vals[n - 1]), 1.0 / ds)
            } else {
                scale(&sub(&vals[i + 1], &vals[i - 1]), 0.5 / ds)
            }
        })
        .collect()
}

/// Smooths the axis field and builds the rotation schedule.
pub fn smoothen(grid: &Grid, z_samples: &[Vec3], sigma: f64) -> Result<RotationSchedule> {
    let n = grid.n();
    if z_samples.len() != n + 1 {
        return Err(Error::InvalidArgument("axis field length does not match grid"));
    }
    let ds = grid.ds;
    let smoothed = gaussian_convolve(z_samples, ds, sigma, 0)?;
    let rotations = smoothed
        .iter()
        .zip(&grid.points)
        .enumerate()
        .map(|(i, (z, p))| {
            let z_hat = z.normalized(MIN_SMOOTHED_NORM).ok_or(Error::SmoothingDegenerate { index: i })?;
            attitude_from_thrust(&z_hat, &p.psi).map_err(|_| Error::SmoothingDegenerate { index: i })
        })
        .collect::<Result<Vec<_>>>()?;

    let d1 = central(&rotations, ds, |a, b| a.sub(b), |m, k| m.scale(k));
    let d2: Vec<Mat3> = (0..=n)
        .map(|i| {
            let c = i.clamp(1, n - 1);
            rotations[c + 1]
                .sub(&rotations[c].scale(2.0))
                .add(&rotations[c - 1])
                .scale(1.0 / (ds * ds))
        })
        .collect();
    let gamma: Vec<Vec3> = rotations
        .iter()
        .zip(&d1)
        .map(|(r, rp)| r.transpose().mul_mat(rp).skew_part_vee())
        .collect();
    let gamma_d1 = central(&gamma, ds, |a, b| *a - *b, |v, k| *v * k);

    let nodes = (0..=n)
        .map(|i| RotationNode {
            rotation: rotations[i],
            rotation_d1: d1[i],
            rotation_d2: d2[i],
            gamma: gamma[i],
            gamma_d1: gamma_d1[i],
        })
        .collect();
    Ok(RotationSchedule { sigma, nodes })
}
