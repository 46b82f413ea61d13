//! The erf ansatz `U = U0 + U1` for the diffused indicator near a moving
//! interface: the leading profile, the heat-operator residual of that
//! profile, the correction `U1` by variation of parameters, and two
//! Gaussian integrals with closed forms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::psi;
use crate::grid::{GridSpec, Point, ScalarField};
use crate::harness::exact_sphere_radius;
use crate::heat::diffuse;
use crate::numerics::erf;
use crate::numerics::quadrature::{gauss_legendre, integrate, QuadOptions};

/// Exponents beyond this make `exp(-r^2 / 4t)` vanish in double precision.
const EXP_CUTOFF: f64 = 700.0;

/// `U0(r, t) = erf(r / (2 sqrt t))`.
pub fn u0_profile(r: f64, t: f64) -> f64 {
    erf(r / (2.0 * t.sqrt()))
}

/// `dU0/dr = exp(-r^2 / 4t) / sqrt(pi t)`.
pub fn u0_r(r: f64, t: f64) -> f64 {
    (-r * r / (4.0 * t)).exp() / (PI * t).sqrt()
}

/// `(d/dt - Laplacian) U0 = psi(r) r dU0/dr` for a surface moving by mean
/// curvature, with principal curvatures `kappas` at the foot point.
pub fn heat_residual(r: f64, t: f64, kappas: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("t must be positive, got {t}")));
    }
    Ok(psi(r, kappas)? * r * u0_r(r, t))
}

/// Interface whose mean-curvature evolution is known exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactInterface {
    /// Circle or sphere shrinking as `R(t) = sqrt(R0^2 - 2 n t)`.
    Sphere { center: Point, r0: f64 },
    /// Stationary plane `{x[axis] < offset}`.
    Flat { axis: usize, offset: f64 },
}

/// Exact geometry of `M(Gamma_0, t)` sampled on a grid.
#[derive(Debug, Clone, Copy)]
pub struct AnsatzContext {
    grid: GridSpec,
    interface: ExactInterface,
}

impl AnsatzContext {
    pub fn new(grid: GridSpec, interface: ExactInterface) -> Self {
        Self { grid, interface }
    }

    pub fn sphere(grid: GridSpec, center: Point, r0: f64) -> Self {
        Self::new(grid, ExactInterface::Sphere { center, r0 })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn interface(&self) -> &ExactInterface {
        &self.interface
    }

    fn surface_dim(&self) -> usize {
        self.grid.dim() - 1
    }

    /// Signed distance (positive inside) to `M(Gamma_0, t)`.
    pub fn signed_distance_at(&self, p: &Point, t: f64) -> Result<f64> {
        match self.interface {
            ExactInterface::Sphere { center, r0 } => {
                let radius = exact_sphere_radius(r0, self.surface_dim(), t)?;
                let d: f64 = (0..self.grid.dim()).map(|a| (p[a] - center[a]).powi(2)).sum();
                Ok(radius - d.sqrt())
            }
            ExactInterface::Flat { axis, offset } => Ok(offset - p[axis]),
        }
    }

    /// Principal curvatures of `M(Gamma_0, t)` (constant along it).
    pub fn kappas_at(&self, t: f64) -> Result<Vec<f64>> {
        let n = self.surface_dim();
        match self.interface {
            ExactInterface::Sphere { r0, .. } => Ok(vec![1.0 / exact_sphere_radius(r0, n, t)?; n]),
            ExactInterface::Flat { .. } => Ok(vec![0.0; n]),
        }
    }

    /// Distance from `M(Gamma_0, t)` to the box faces.
    pub fn clearance(&self, t: f64) -> Result<f64> {
        let g = &self.grid;
        match self.interface {
            ExactInterface::Sphere { center, r0 } => {
                let radius = exact_sphere_radius(r0, self.surface_dim(), t)?;
                Ok((0..g.dim())
                    .map(|a| (center[a] - radius).min(g.extent() - center[a] - radius))
                    .fold(f64::INFINITY, f64::min))
            }
            ExactInterface::Flat { .. } => Ok(f64::INFINITY),
        }
    }

    /// `U0(x, t) = erf(r(x, t) / (2 sqrt t))` on the grid.
    pub fn u0_field(&self, t: f64) -> Result<ScalarField> {
        let values: Result<Vec<f64>> = (0..self.grid.len())
            .map(|i| Ok(u0_profile(self.signed_distance_at(&self.grid.center(i), t)?, t)))
            .collect();
        ScalarField::new(self.grid, values?)
    }

    /// `(d/dt - Laplacian) U0` at time `t` on the grid.
    pub fn residual_field(&self, t: f64) -> Result<ScalarField> {
        let kappas = self.kappas_at(t)?;
        if kappas.iter().all(|&k| k == 0.0) {
            return ScalarField::constant(self.grid, 0.0);
        }
        let values: Result<Vec<f64>> = (0..self.grid.len())
            .map(|i| {
                let r = self.signed_distance_at(&self.grid.center(i), t)?;
                if r * r / (4.0 * t) > EXP_CUTOFF {
                    return Ok(0.0);
                }
                heat_residual(r, t, &kappas)
            })
            .collect();
        ScalarField::new(self.grid, values?)
    }
}

/// Controls for the time quadrature in [`u1_field_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U1Options {
    pub initial_nodes: usize,
    /// Stop doubling once successive results differ by less than this in
    /// the sup norm.
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for U1Options {
    fn default() -> Self {
        Self {
            initial_nodes: 16,
            tol: 1e-8,
            max_nodes: 1024,
        }
    }
}

/// `U1(., h)` together with the quadrature diagnostics.
#[derive(Debug, Clone)]
pub struct U1Field {
    pub field: ScalarField,
    pub nodes: usize,
    /// Sup-norm change at the final doubling.
    pub last_change: f64,
}

/// [`u1_field_with`] under default options.
pub fn u1_field(ctx: &AnsatzContext, h: f64) -> Result<ScalarField> {
    Ok(u1_field_with(ctx, h, U1Options::default())?.field)
}

/// `U1(., h) = -int_0^h e^{(h - tau) Laplacian} residual(tau) dtau`.
///
/// The substitution `tau = sigma^2` removes the `1/sqrt(tau)` scale of the
/// residual; Gauss–Legendre in `sigma` is doubled until converged.
pub fn u1_field_with(ctx: &AnsatzContext, h: f64, opts: U1Options) -> Result<U1Field> {
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("h must be positive, got {h}")));
    }
    let band = 6.0 * h.sqrt();
    let clearance = ctx.clearance(h)?.min(ctx.clearance(0.0)?);
    if clearance < band {
        return Err(Error::Precondition(format!(
            "interface clearance {clearance:.4} is below the profile band 6 sqrt(h) = {band:.4}"
        )));
    }
    let evaluate = |nodes: usize| -> Result<ScalarField> {
        let (sigmas, weights) = gauss_legendre(nodes, 0.0, h.sqrt());
        let mut acc = vec![0.0; ctx.grid.len()];
        for (s, w) in sigmas.iter().zip(&weights) {
            let tau = s * s;
            let diffused = diffuse(&ctx.residual_field(tau)?, h - tau)?;
            for (a, v) in acc.iter_mut().zip(diffused.values()) {
                *a -= 2.0 * s * w * v;
            }
        }
        ScalarField::new(ctx.grid, acc)
    };
    let mut nodes = opts.initial_nodes.max(1);
    let mut prev = evaluate(nodes)?;
    loop {
        let next_nodes = nodes * 2;
        if next_nodes > opts.max_nodes {
            return Err(Error::Quadrature(format!(
                "U1 quadrature did not settle below {} with {nodes} nodes",
                opts.tol
            )));
        }
        let next = evaluate(next_nodes)?;
        let change = next.sup_distance(&prev)?;
        if change < opts.tol {
            return Ok(U1Field {
                field: next,
                nodes: next_nodes,
                last_change: change,
            });
        }
        prev = next;
        nodes = next_nodes;
    }
}

fn check_window(t: f64, h: f64) -> Result<()> {
    if !(t > 0.0 && t < h) {
        return Err(Error::Precondition(format!("need 0 < t < h, got t = {t}, h = {h}")));
    }
    Ok(())
}

/// Closed form of
/// `(h - t)^(-1/2) int exp(-(d0 - r)^2 / 4(h - t)) (r / sqrt t) exp(-r^2 / 4t) dr`.
pub fn gaussian_integral_1(d0: f64, t: f64, h: f64) -> Result<f64> {
    check_window(t, h)?;
    Ok(2.0 * PI.sqrt() * (-d0 * d0 / (4.0 * h)).exp() * d0 * t / h.powf(1.5))
}

/// Closed form of the same integral with the extra factor
/// `(d0 - r) / (h - t)` in the integrand.
pub fn gaussian_integral_2(d0: f64, t: f64, h: f64) -> Result<f64> {
    check_window(t, h)?;
    Ok(2.0 * PI.sqrt()
        * (-d0 * d0 / (4.0 * h)).exp()
        * (d0 * d0 * t / h.powf(2.5) - 2.0 * t / h.powf(1.5)))
}

/// Both Gaussian integrals by adaptive quadrature of their defining
/// integrands, over a window of 40 standard deviations around the peak.
pub fn gaussian_integrals_by_quadrature(d0: f64, t: f64, h: f64) -> Result<(f64, f64)> {
    check_window(t, h)?;
    let base = |r: f64| {
        (-(d0 - r) * (d0 - r) / (4.0 * (h - t))).exp() * r / t.sqrt() * (-r * r / (4.0 * t)).exp() / (h - t).sqrt()
    };
    let peak = d0 * t / h;
    let width = 40.0 * h.sqrt();
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let (a, b) = (peak - width, peak + width);
    // The first integrand is odd about zero when d0 = 0; integrate the
    // halves separately so the tolerance is relative to a nonzero scale.
    let split = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        if a < 0.0 && b > 0.0 {
            Ok(integrate(f, a, 0.0, opts)? + integrate(f, 0.0, b, opts)?)
        } else {
            integrate(f, a, b, opts)
        }
    };
    let first = split(&base)?;
    let second = split(&|r: f64| base(r) * (d0 - r) / (h - t))?;
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        assert_eq!(u0_profile(0.0, 1e-3), 0.0);
        assert!((u0_profile(10.0, 1e-3) - 1.0).abs() < 1e-15);
        let t: f64 = 2.5e-4;
        assert!((u0_profile(2.0 * t.sqrt(), t) - 0.842_700_792_9).abs() < 1e-10);
        assert_eq!(u0_profile(-0.01, t), -u0_profile(0.01, t));
    }

    #[test]
    fn profile_derivative() {
        let t = 3e-4;
        assert!((u0_r(0.0, t) - 1.0 / (PI * t).sqrt()).abs() < 1e-12);
        assert_eq!(u0_r(0.02, t), u0_r(-0.02, t));
        for &(r, t) in &[(0.01f64, 1e-3f64), (-0.03, 4e-4), (0.002, 1e-5)] {
            let e = 1e-6 * t.sqrt();
            let fd = (u0_profile(r + e, t) - u0_profile(r - e, t)) / (2.0 * e);
            assert!((fd - u0_r(r, t)).abs() < 1e-8 * u0_r(0.0, t));
        }
    }

    #[test]
    fn residual_special_cases() {
        assert_eq!(heat_residual(0.01, 1e-3, &[0.0]).unwrap(), 0.0);
        assert_eq!(heat_residual(0.0, 1e-3, &[3.0]).unwrap(), 0.0);
        assert!(heat_residual(0.5, 1e-3, &[3.0]).is_err());
    }

    #[test]
    fn flat_interface_has_no_correction() {
        let g = GridSpec::square(64).unwrap();
        let ctx = AnsatzContext::new(g, ExactInterface::Flat { axis: 1, offset: 0.5 });
        let u1 = u1_field(&ctx, 1e-3).unwrap();
        assert!(u1.values().iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn narrow_clearance_is_rejected() {
        let g = GridSpec::square(64).unwrap();
        let ctx = AnsatzContext::sphere(g, [0.5, 0.5, 0.0], 0.4);
        assert!(matches!(u1_field(&ctx, 1e-3), Err(Error::Precondition(_))));
    }

    #[test]
    fn gaussian_integrals_against_quadrature() {
        let (h, t) = (1e-3, 3e-4);
        for &d0 in &[0.1, -0.02, 0.004, 0.15] {
            let (q1, q2) = gaussian_integrals_by_quadrature(d0, t, h).unwrap();
            let (c1, c2) = (gaussian_integral_1(d0, t, h).unwrap(), gaussian_integral_2(d0, t, h).unwrap());
            assert!((q1 - c1).abs() < 1e-10 * c1.abs(), "{d0}: {q1} vs {c1}");
            assert!((q2 - c2).abs() < 1e-10 * c2.abs(), "{d0}: {q2} vs {c2}");
        }
        assert_eq!(gaussian_integral_1(0.0, t, h).unwrap(), 0.0);
        assert!(gaussian_integral_1(-0.05, t, h).unwrap() < 0.0);
        let c2 = gaussian_integral_2(0.0, t, h).unwrap();
        assert!((c2 + 4.0 * PI.sqrt() * t / h.powf(1.5)).abs() < 1e-12 * c2.abs());
        assert_eq!(gaussian_integral_2(0.03, t, h).unwrap(), gaussian_integral_2(-0.03, t, h).unwrap());
        assert!(gaussian_integral_1(0.1, h, h).is_err());
        assert!(gaussian_integral_2(0.1, 0.0, h).is_err());
    }
}
