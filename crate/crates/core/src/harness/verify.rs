//! Identity suites: closed forms checked against quadrature, round trips
//! and finite differences, each reduced to a worst-case error.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gronwall::{gronwall_phi, gronwall_phi_inv};
use super::oracle::ball_heat_field;
use crate::ansatz::{
    gaussian_integral_1, gaussian_integral_2, gaussian_integrals_by_quadrature, heat_residual, u0_profile, u0_r,
    u1_field_with, AnsatzContext, U1Options,
};
use crate::error::Result;
use crate::geometry::{offset_curvatures, psi};
use crate::grid::GridSpec;
use crate::heat::{heat_kernel, kernel_l1_norms, HeatKernelParams};
use crate::numerics::erf;
use crate::numerics::quadrature::{integrate, QuadOptions};

/// Worst error of one suite against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SuiteResult {
    fn new(name: &str, samples: usize, max_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            samples,
            max_error,
            tolerance,
            pass: max_error <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

/// Runs every suite. The grid suites are the slow part (a few seconds).
pub fn verify_all(seed: u64) -> Result<VerifyReport> {
    let mut suites = vec![
        erf_values(),
        u0_derivative(seed)?,
        gaussian_integrals(seed)?,
        gronwall_round_trip(seed)?,
    ];
    suites.extend(offset_identities(seed)?);
    suites.extend(kernel_norms()?);
    suites.push(heat_residual_fd()?);
    suites.extend(decomposition()?);
    let pass = suites.iter().all(|s| s.pass);
    Ok(VerifyReport { seed, suites, pass })
}

/// `erf` against reference values.
pub fn erf_values() -> SuiteResult {
    let table = [
        (0.1, 0.112_462_916_018_284_9),
        (0.5, 0.520_499_877_813_046_5),
        (1.0, 0.842_700_792_949_714_9),
        (2.0, 0.995_322_265_018_952_7),
        (3.5, 0.999_999_256_901_627_7),
    ];
    let err = table
        .iter()
        .map(|&(x, v)| ((erf(x) - v) / v).abs().max((erf(-x) + v).abs() / v))
        .fold(0.0, f64::max);
    SuiteResult::new("erf_values", table.len(), err, 1e-14)
}

/// Central difference of the `U0` profile against its closed-form
/// derivative, relative to the peak slope.
pub fn u0_derivative(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 100;
    let mut err = 0.0f64;
    for _ in 0..n {
        let t: f64 = 10f64.powf(rng.gen_range(-5.0..-2.0));
        let r = rng.gen_range(-5.0..5.0) * t.sqrt();
        let e = 1e-6 * t.sqrt();
        let fd = (u0_profile(r + e, t) - u0_profile(r - e, t)) / (2.0 * e);
        err = err.max((fd - u0_r(r, t)).abs() / u0_r(0.0, t));
    }
    Ok(SuiteResult::new("u0_derivative", n, err, 1e-8))
}

/// Both Gaussian integrals in closed form against adaptive quadrature.
/// Errors are relative to the larger of the value and its natural scale
/// (`2 sqrt(pi) t / h` and `2 sqrt(pi) t / h^1.5`), which keeps sign
/// changes of the second integral from inflating the ratio.
pub fn gaussian_integrals(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6761_7573);
    let n = 100;
    let mut err = 0.0f64;
    for _ in 0..n {
        let h: f64 = 10f64.powf(rng.gen_range(-5.0..-2.0));
        let t = h * rng.gen_range(0.02..0.98);
        let d0 = rng.gen_range(-6.0..6.0) * h.sqrt();
        let (q1, q2) = gaussian_integrals_by_quadrature(d0, t, h)?;
        let (c1, c2) = (gaussian_integral_1(d0, t, h)?, gaussian_integral_2(d0, t, h)?);
        let s1 = 2.0 * PI.sqrt() * t / h;
        let s2 = s1 / h.sqrt();
        err = err.max((q1 - c1).abs() / c1.abs().max(s1));
        err = err.max((q2 - c2).abs() / c2.abs().max(s2));
    }
    Ok(SuiteResult::new("gaussian_integrals", n, err, 1e-10))
}

/// `Phi^{-1}(Phi(x)) = x`, relative.
pub fn gronwall_round_trip(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_6f6e);
    let n = 200;
    let mut err = 0.0f64;
    for _ in 0..n {
        let x: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let d = if rng.gen_bool(0.1) { 0.0 } else { 10f64.powf(rng.gen_range(-4.0..1.0)) };
        let back = gronwall_phi_inv(gronwall_phi(x, d)?, d)?;
        err = err.max((back - x).abs() / x);
    }
    Ok(SuiteResult::new("gronwall_round_trip", n, err, 1e-10))
}

/// Parallel-surface identities: offset round trip, `H_r = H_0 + r psi(r)`
/// and the sphere case `1 / (R - r)`.
pub fn offset_identities(seed: u64) -> Result<Vec<SuiteResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f66_6673);
    let n = 200;
    let (mut round, mut mean, mut sphere) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let m = rng.gen_range(1..=3);
        let kappas: Vec<f64> = (0..m).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let kmax = kappas.iter().fold(0.0f64, |a, k| a.max(k.abs()));
        let r = rng.gen_range(-0.9..0.9) / kmax;
        let shifted = offset_curvatures(&kappas, r)?;
        let back = offset_curvatures(&shifted.kappas, -r)?;
        for (a, b) in kappas.iter().zip(&back.kappas) {
            round = round.max((a - b).abs() / kmax);
        }
        let h0: f64 = kappas.iter().sum();
        let scale = shifted.kappas.iter().fold(kmax, |a, k| a.max(k.abs()));
        mean = mean.max((shifted.mean_sum - (h0 + r * psi(r, &kappas)?)).abs() / scale);

        let radius = rng.gen_range(0.05..2.0);
        let r0 = radius * rng.gen_range(-2.0..0.9);
        let ball = offset_curvatures(&vec![1.0 / radius; m], r0)?;
        for k in &ball.kappas {
            sphere = sphere.max((k * (radius - r0) - 1.0).abs());
        }
    }
    Ok(vec![
        SuiteResult::new("offset_round_trip", n, round, 1e-12),
        SuiteResult::new("offset_mean_curvature", n, mean, 1e-14),
        SuiteResult::new("offset_sphere", n, sphere, 1e-14),
    ])
}

/// Heat-kernel norms by radial quadrature: unit mass, the closed-form
/// gradient norm, and constancy of `sqrt(t) ||grad G||_1` over a decade.
pub fn kernel_norms() -> Result<Vec<SuiteResult>> {
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-14,
        max_intervals: 4000,
    };
    let mut mass_err = 0.0f64;
    let mut grad_err = 0.0f64;
    let mut spread = 0.0f64;
    let ts = [1e-4, 2e-4, 5e-4, 1e-3];
    for dim in 1..=3usize {
        let sphere_area = match dim {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        };
        let mut scaled = Vec::new();
        for &t in &ts {
            let params = HeatKernelParams::new(dim, t)?;
            let g = |rho: f64| sphere_area * rho.powi(dim as i32 - 1) * heat_kernel(&[rho, 0.0, 0.0], &params);
            // The tail beyond 40 sqrt(t) is below exp(-400).
            let end = 40.0 * t.sqrt();
            let mass = integrate(g, 0.0, end, opts)?;
            let grad = integrate(|rho| g(rho) * rho / (2.0 * t), 0.0, end, opts)?;
            let (_, closed) = kernel_l1_norms(t, dim)?;
            mass_err = mass_err.max((mass - 1.0).abs());
            grad_err = grad_err.max((grad - closed).abs() / closed);
            scaled.push(grad * t.sqrt());
        }
        let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().copied().fold(0.0, f64::max);
        spread = spread.max((hi - lo) / lo);
    }
    Ok(vec![
        SuiteResult::new("kernel_mass", ts.len() * 3, mass_err, 1e-12),
        SuiteResult::new("kernel_gradient_norm", ts.len() * 3, grad_err, 1e-10),
        SuiteResult::new("kernel_gradient_scaling", ts.len() * 3, spread, 1e-10),
    ])
}

const RESIDUAL_GRID: usize = 512;
const RESIDUAL_T: f64 = 1e-3;
const CIRCLE_R0: f64 = 0.3;

/// `(d/dt - Laplacian) U0` for a shrinking circle by fourth-order finite
/// differences of the analytic `U0`, at the cell centers of a 512^2 grid
/// within `6 sqrt(t)` of the interface, against the closed form.
/// The error is relative to the largest residual on the band.
pub fn heat_residual_fd() -> Result<SuiteResult> {
    let grid = GridSpec::square(RESIDUAL_GRID)?;
    let center = grid.middle();
    let ctx = AnsatzContext::sphere(grid, center, CIRCLE_R0);
    let t = RESIDUAL_T;
    let band = 6.0 * t.sqrt();
    let kappas = ctx.kappas_at(t)?;
    let u = |p: [f64; 3], s: f64| -> Result<f64> { Ok(u0_profile(ctx.signed_distance_at(&p, s)?, s)) };
    let eps = 0.5 * grid.spacing();
    let delta = 1e-6;
    // Fourth-order central stencils: second derivative in space, first in time.
    let d2 = |p: [f64; 3], axis: usize| -> Result<f64> {
        let at = |k: f64| {
            let mut q = p;
            q[axis] += k * eps;
            u(q, t)
        };
        Ok((-at(2.0)? + 16.0 * at(1.0)? - 30.0 * at(0.0)? + 16.0 * at(-1.0)? - at(-2.0)?) / (12.0 * eps * eps))
    };
    let dt = |p: [f64; 3]| -> Result<f64> {
        Ok((-u(p, t + 2.0 * delta)? + 8.0 * u(p, t + delta)? - 8.0 * u(p, t - delta)? + u(p, t - 2.0 * delta)?)
            / (12.0 * delta))
    };
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut samples = 0usize;
    for i in 0..grid.len() {
        let p = grid.center(i);
        let r = ctx.signed_distance_at(&p, t)?;
        if r.abs() > band {
            continue;
        }
        let fd = dt(p)? - d2(p, 0)? - d2(p, 1)?;
        let exact = heat_residual(r, t, &kappas)?;
        worst = worst.max((fd - exact).abs());
        scale = scale.max(exact.abs());
        samples += 1;
    }
    Ok(SuiteResult::new("heat_residual_fd", samples, worst / scale, 1e-3))
}

const DECOMPOSITION_GRID: usize = 512;
/// Steps with at least `8 sqrt(h)` between the interface and the box edge,
/// where periodic images are below the quadrature tolerance.
const DECOMPOSITION_H: [f64; 2] = [5e-4, 2.5e-4];
/// The `||U1|| / h` sweep also includes a step whose periodic images are
/// visible; the norm is unaffected at this scale.
const SCALING_H: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// `U0 + U1` against the exact heat solution of the disk indicator on the
/// profile band, and stability of `||U1||_inf / h` over an `h` sweep.
pub fn decomposition() -> Result<Vec<SuiteResult>> {
    let grid = GridSpec::square(DECOMPOSITION_GRID)?;
    let center = grid.middle();
    let ctx = AnsatzContext::sphere(grid, center, CIRCLE_R0);
    let opts = U1Options::default();
    let mut worst = 0.0f64;
    let mut ratios = Vec::new();
    let mut samples = 0;
    for &h in &SCALING_H {
        let u1 = u1_field_with(&ctx, h, opts)?;
        ratios.push(u1.field.values().iter().fold(0.0f64, |a, v| a.max(v.abs())) / h);
        if !DECOMPOSITION_H.contains(&h) {
            continue;
        }
        let u0 = ctx.u0_field(h)?;
        let exact = ball_heat_field(&grid, &center, CIRCLE_R0, h)?;
        let band = 6.0 * h.sqrt();
        for i in 0..grid.len() {
            if ctx.signed_distance_at(&grid.center(i), h)?.abs() <= band {
                worst = worst.max((u0.get(i) + u1.field.get(i) - exact.get(i)).abs());
                samples += 1;
            }
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Ok(vec![
        SuiteResult::new("decomposition", samples, worst, 3.0 * opts.tol),
        SuiteResult::new("u1_scaling_spread", SCALING_H.len(), hi / lo - 1.0, 0.25),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_suites_pass() {
        for s in [
            erf_values(),
            u0_derivative(3).unwrap(),
            gaussian_integrals(3).unwrap(),
            gronwall_round_trip(3).unwrap(),
        ] {
            assert!(s.pass, "{s:?}");
        }
        for s in offset_identities(3).unwrap().into_iter().chain(kernel_norms().unwrap()) {
            assert!(s.pass, "{s:?}");
        }
    }

    #[test]
    fn failing_suite_is_flagged() {
        let s = SuiteResult::new("x", 1, 2.0, 1.0);
        assert!(!s.pass);
    }
}
