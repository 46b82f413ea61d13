//! Grid-free ground truth for radial data: the exact shrinking sphere, the
//! heat solution started from a ball indicator, and one MBO step on it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Point, ScalarField};
use crate::numerics::erf;
use crate::numerics::quadrature::{integrate, QuadOptions};

/// Radius at time `t` of a sphere of initial radius `r0` and surface
/// dimension `n` moving by `V = sum(kappa_i)`: `sqrt(r0^2 - 2 n t)`.
pub fn exact_sphere_radius(r0: f64, n: usize, t: f64) -> Result<f64> {
    let t_ext = r0 * r0 / (2.0 * n as f64);
    if t > t_ext || t < 0.0 {
        return Err(Error::PastExtinction { t, t_ext });
    }
    Ok((r0 * r0 - 2.0 * n as f64 * t).max(0.0).sqrt())
}

fn quad() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-14,
        max_intervals: 4000,
    }
}

/// Heat-kernel mass of the disk `B_r0` seen from distance `rho` of its
/// center after time `h` (2D), written as an angular integral over rays.
fn disk_mass(rho: f64, r0: f64, h: f64) -> Result<f64> {
    if rho < r0 {
        let f = |th: f64| {
            let s = th.sin();
            let len = -rho * th.cos() + (r0 * r0 - rho * rho * s * s).sqrt();
            -(-len * len / (4.0 * h)).exp_m1()
        };
        Ok(integrate(f, 0.0, PI, quad())? / PI)
    } else {
        // Rays hitting the disk, parametrized by sin(th) = (r0/rho) sin(phi)
        // so the chord length has no square-root singularity.
        let ratio = r0 / rho;
        let f = |phi: f64| {
            let sth = ratio * phi.sin();
            let cth = (1.0 - sth * sth).sqrt();
            let half_chord = r0 * phi.cos();
            let near = rho * cth - half_chord;
            let far = rho * cth + half_chord;
            let jac = if cth > 0.0 { half_chord / (rho * cth) } else { 0.0 };
            ((-near * near / (4.0 * h)).exp() - (-far * far / (4.0 * h)).exp()) * jac
        };
        Ok(integrate(f, -PI / 2.0, PI / 2.0, quad())? / (2.0 * PI))
    }
}

/// Heat-kernel mass of the ball `B_r0` seen from distance `rho` (3D).
fn ball_mass(rho: f64, r0: f64, h: f64) -> f64 {
    let s = 2.0 * h.sqrt();
    if rho < 1e-6 * s {
        let z = r0 / s;
        return erf(z) - 2.0 * z / PI.sqrt() * (-z * z).exp();
    }
    let (a, b) = ((r0 - rho) / s, (r0 + rho) / s);
    0.5 * (erf(a) + erf(b)) + s / (2.0 * PI.sqrt() * rho) * ((-b * b).exp() - (-a * a).exp())
}

/// `U(rho, h) = 2 (e^{h Laplacian} 1_{B_r0})(rho) - 1` in the whole space.
pub fn radial_heat_solution(rho: f64, r0: f64, h: f64, dim: usize) -> Result<f64> {
    if !(h > 0.0 && r0 > 0.0 && rho >= 0.0) {
        return Err(Error::Precondition(format!("need h, r0 > 0 and rho >= 0 (h = {h}, r0 = {r0}, rho = {rho})")));
    }
    let mass = match dim {
        2 => disk_mass(rho, r0, h)?,
        3 => ball_mass(rho, r0, h),
        _ => return Err(Error::Precondition(format!("dimension {dim} not supported"))),
    };
    Ok(2.0 * mass - 1.0)
}

/// [`radial_heat_solution`] at every cell center; cells farther than
/// `12 sqrt(h)` from the sphere get the exact `+-1` to double precision.
pub fn ball_heat_field(grid: &GridSpec, center: &Point, r0: f64, h: f64) -> Result<ScalarField> {
    let dim = grid.dim();
    let cutoff = 12.0 * h.sqrt();
    let values: Result<Vec<f64>> = crate::par::collect(grid.len(), |i| {
        let p = grid.center(i);
        let rho = (0..dim).map(|a| (p[a] - center[a]).powi(2)).sum::<f64>().sqrt();
        if rho < r0 - cutoff {
            Ok(1.0)
        } else if rho > r0 + cutoff {
            Ok(-1.0)
        } else {
            radial_heat_solution(rho, r0, h, dim)
        }
    })
    .into_iter()
    .collect();
    ScalarField::new(*grid, values?)
}

/// Outcome of one exact MBO step on a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "radius", rename_all = "snake_case")]
pub enum RadialStep {
    Radius(f64),
    Extinct,
}

impl RadialStep {
    pub fn radius(self) -> Option<f64> {
        match self {
            RadialStep::Radius(r) => Some(r),
            RadialStep::Extinct => None,
        }
    }
}

/// Radius of `{U(., h) >= 0}` for ball data of radius `r0`, by bisection
/// to `1e-12`.
pub fn radial_mbo_step_oracle(r0: f64, h: f64, dim: usize) -> Result<RadialStep> {
    if !(h > 0.0 && h < r0 * r0) {
        return Err(Error::Precondition(format!("need 0 < h < r0^2, got h = {h}, r0 = {r0}")));
    }
    let u = |rho: f64| radial_heat_solution(rho, r0, h, dim);
    if u(0.0)? < 0.0 {
        return Ok(RadialStep::Extinct);
    }
    let (mut lo, mut hi) = (0.0, r0 + 12.0 * h.sqrt());
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if u(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RadialStep::Radius(0.5 * (lo + hi)))
}

/// Radii of the exact MBO iteration on a ball: entry `k` is the radius
/// after `k` steps; the list stops at extinction.
pub fn radial_trajectory(r0: f64, h: f64, steps: usize, dim: usize) -> Result<Vec<f64>> {
    let mut radii = vec![r0];
    for _ in 0..steps {
        let r = *radii.last().expect("nonempty");
        if h >= r * r {
            break;
        }
        match radial_mbo_step_oracle(r, h, dim)? {
            RadialStep::Radius(next) => radii.push(next),
            RadialStep::Extinct => break,
        }
    }
    Ok(radii)
}

fn ball_volume(r: f64, dim: usize) -> f64 {
    if dim == 2 {
        PI * r * r
    } else {
        4.0 / 3.0 * PI * r.powi(3)
    }
}

/// Jump error of the exact radial iteration: the volume between each MBO
/// step and the true flow over the same step, summed over the run.
pub fn radial_jump_error(radii: &[f64], h: f64, dim: usize) -> Result<f64> {
    let n = dim - 1;
    radii
        .windows(2)
        .map(|w| {
            let flow = exact_sphere_radius(w[0], n, h.min(w[0] * w[0] / (2.0 * n as f64)))?;
            Ok((ball_volume(w[1], dim) - ball_volume(flow, dim)).abs())
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_law() {
        assert_eq!(exact_sphere_radius(0.3, 1, 0.0).unwrap(), 0.3);
        assert!((exact_sphere_radius(0.3, 1, 1e-3).unwrap() - 0.088f64.sqrt()).abs() < 1e-15);
        assert!(exact_sphere_radius(0.3, 1, 0.045 - 1e-12).unwrap() < 1e-5);
        assert!(matches!(exact_sphere_radius(0.3, 1, 0.05), Err(Error::PastExtinction { .. })));
        assert!((exact_sphere_radius(0.3, 2, 1e-3).unwrap() - 0.086f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn disk_mass_limits_and_continuity() {
        let h = 1e-3;
        let inside = disk_mass(0.0, 0.3, h).unwrap();
        assert!((inside + (-0.09 / (4.0 * h)).exp_m1()).abs() < 1e-14);
        let a = disk_mass(0.3 - 1e-9, 0.3, h).unwrap();
        let b = disk_mass(0.3 + 1e-9, 0.3, h).unwrap();
        assert!((a - b).abs() < 1e-7);
        // Curvature pulls the boundary mass slightly below 1/2.
        assert!(a < 0.5 && a > 0.45);
        assert!(disk_mass(0.9, 0.3, h).unwrap() < 1e-30);
    }

    #[test]
    fn disk_mass_against_cartesian_quadrature() {
        let (r0, h, rho): (f64, f64, f64) = (0.2, 2e-3, 0.23);
        let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 4000 };
        let inner = |y: f64| {
            let w = (r0 * r0 - y * y).max(0.0).sqrt();
            let s = 2.0 * h.sqrt();
            0.5 * (erf((w - rho) / s) - erf((-w - rho) / s))
        };
        let gy = |y: f64| (-y * y / (4.0 * h)).exp() / (4.0 * PI * h).sqrt();
        let total = integrate(|y| inner(y) * gy(y), -r0, r0, opts).unwrap();
        assert!((total - disk_mass(rho, r0, h).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn ball_mass_limits() {
        let h = 1e-3;
        let z = ball_mass(0.0, 0.3, h);
        assert!((z - ball_mass(1e-4, 0.3, h)).abs() < 1e-8);
        assert!(ball_mass(0.3, 0.3, h) < 0.5 && ball_mass(0.3, 0.3, h) > 0.4);
        assert!(ball_mass(0.7, 0.3, h) < 1e-15);
    }

    #[test]
    fn oracle_step_tracks_flow() {
        let r0 = 0.3;
        for &h in &[1e-3, 1e-4] {
            let rho = radial_mbo_step_oracle(r0, h, 2).unwrap().radius().unwrap();
            let exact = exact_sphere_radius(r0, 1, h).unwrap();
            assert!((rho - exact).abs() < 0.05 * (r0 - exact), "{h}: {rho} vs {exact}");
        }
        let rho = radial_mbo_step_oracle(r0, 1e-4, 3).unwrap().radius().unwrap();
        let exact = exact_sphere_radius(r0, 2, 1e-4).unwrap();
        assert!((rho - exact).abs() < 0.05 * (r0 - exact));
    }

    #[test]
    fn oracle_extinction_threshold() {
        let h = 1e-3;
        let critical = (4.0 * h * 2f64.ln()).sqrt();
        assert_eq!(radial_mbo_step_oracle(0.98 * critical, h, 2).unwrap(), RadialStep::Extinct);
        assert!(radial_mbo_step_oracle(1.02 * critical, h, 2).unwrap().radius().is_some());
        assert!(radial_mbo_step_oracle(0.01, 1e-3, 2).is_err());
    }

    #[test]
    fn trajectory_stops_at_extinction() {
        let radii = radial_trajectory(0.1, 1e-3, 100, 2).unwrap();
        assert!(radii.len() < 101);
        assert!(radii.windows(2).all(|w| w[1] < w[0]));
    }
}
