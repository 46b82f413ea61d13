//! Exact-symbol heat propagation on the periodic grid and heat-kernel
//! diagnostics.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Point, ScalarField};
use crate::par;

/// Parameters of the Gaussian heat kernel
/// `G(x, t) = exp(-|x|^2 / 4t) / (4 pi t)^(dim/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelParams {
    dim: usize,
    t: f64,
}

impl HeatKernelParams {
    pub fn new(dim: usize, t: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Precondition(format!("kernel dim must be 1..=3, got {dim}")));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Precondition(format!("diffusion time must be positive, got {t}")));
        }
        Ok(Self { dim, t })
    }

    /// Validates `t` against the aliasing bound of `grid` as well.
    pub fn for_grid(grid: &GridSpec, t: f64) -> Result<Self> {
        let p = Self::new(grid.dim(), t)?;
        let max = max_diffusion_time(grid);
        if t > max {
            return Err(Error::Precondition(format!(
                "diffusion time {t} exceeds extent^2/16 = {max}"
            )));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// Largest diffusion time for which periodic images carry negligible mass.
pub fn max_diffusion_time(grid: &GridSpec) -> f64 {
    grid.extent() * grid.extent() / 16.0
}

pub fn heat_kernel(x: &Point, params: &HeatKernelParams) -> f64 {
    let t = params.t;
    let r2: f64 = x[..params.dim].iter().map(|c| c * c).sum();
    (-r2 / (4.0 * t)).exp() / (4.0 * PI * t).powf(0.5 * params.dim as f64)
}

/// `(||G(., t)||_1, ||grad G(., t)||_1)`. The gradient norm is
/// `Gamma((d+1)/2) / (Gamma(d/2) sqrt(t))`, the mean of `|x| / 2t` under
/// the kernel.
pub fn kernel_l1_norms(t: f64, dim: usize) -> Result<(f64, f64)> {
    HeatKernelParams::new(dim, t)?;
    let d = dim as f64;
    let grad = libm::tgamma(0.5 * (d + 1.0)) / (libm::tgamma(0.5 * d) * t.sqrt());
    Ok((1.0, grad))
}

/// Solves the heat equation for time `t` with `field` as initial data:
/// every Fourier mode `k` is multiplied by `exp(-|2 pi k / extent|^2 t)`.
pub fn diffuse(field: &ScalarField, t: f64) -> Result<ScalarField> {
    let g = *field.grid();
    HeatKernelParams::for_grid(&g, t)?;
    let n = g.cells_per_axis();
    let mut data: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, &g, FftDirection::Forward);
    let damp = mode_damping(&g, t);
    let dim = g.dim();
    let norm = 1.0 / g.len() as f64;
    par::for_each_chunk(&mut data, n, |row, chunk| {
        let outer = if dim == 2 {
            damp[row]
        } else {
            damp[row / n] * damp[row % n]
        };
        for (j, c) in chunk.iter_mut().enumerate() {
            *c *= outer * damp[j] * norm;
        }
    });
    fft_nd(&mut data, &g, FftDirection::Inverse);
    ScalarField::new(g, data.into_iter().map(|c| c.re).collect())
}

/// Gradient and Hessian of a smooth periodic field by exact
/// differentiation of its trigonometric interpolant. Returns `dim`
/// gradient components and the `dim x dim` Hessian in row-major order.
/// Accurate only when the field is resolved (e.g. after diffusion over
/// several cells).
pub fn spectral_derivatives(field: &ScalarField) -> Result<(Vec<ScalarField>, Vec<ScalarField>)> {
    let g = *field.grid();
    let n = g.cells_per_axis();
    let dim = g.dim();
    let mut spectrum: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut spectrum, &g, FftDirection::Forward);
    let base = 2.0 * PI / g.extent();
    let wave = |m: usize| if m <= n / 2 { base * m as f64 } else { base * (m as f64 - n as f64) };
    // (i k_a)(i k_b)...; an odd power of the Nyquist mode is dropped so the
    // result stays real.
    let derive = |axes: &[usize]| -> Result<ScalarField> {
        let mut data = spectrum.clone();
        let scale = if axes.len() == 2 { -1.0 } else { 1.0 } / g.len() as f64;
        par::for_each_chunk(&mut data, n, |row, chunk| {
            for (j, c) in chunk.iter_mut().enumerate() {
                let idx = g.unravel(row * n + j);
                let mut f = scale;
                for a in 0..dim {
                    let power = axes.iter().filter(|&&b| b == a).count();
                    if power % 2 == 1 && idx[a] == n / 2 {
                        f = 0.0;
                    }
                    f *= wave(idx[a]).powi(power as i32);
                }
                *c *= if axes.len() % 2 == 1 { Complex64::new(0.0, f) } else { Complex64::new(f, 0.0) };
            }
        });
        fft_nd(&mut data, &g, FftDirection::Inverse);
        ScalarField::new(g, data.into_iter().map(|c| c.re).collect())
    };
    let grad = (0..dim).map(|a| derive(&[a])).collect::<Result<Vec<_>>>()?;
    let mut hess: Vec<Option<ScalarField>> = vec![None; dim * dim];
    for a in 0..dim {
        for b in a..dim {
            let d = derive(&[a, b])?;
            hess[b * dim + a] = Some(d.clone());
            hess[a * dim + b] = Some(d);
        }
    }
    Ok((grad, hess.into_iter().map(|h| h.expect("filled")).collect()))
}

fn mode_damping(g: &GridSpec, t: f64) -> Vec<f64> {
    let n = g.cells_per_axis();
    let base = 2.0 * PI / g.extent();
    (0..n)
        .map(|m| {
            let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            (-(base * k).powi(2) * t).exp()
        })
        .collect()
}

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry((n, dir == FftDirection::Forward))
        .or_insert_with(|| FftPlanner::new().plan_fft(n, dir))
        .clone()
}

/// Multidimensional FFT: transform the contiguous last axis, rotate the
/// axes cyclically, repeat once per axis.
fn fft_nd(data: &mut Vec<Complex64>, g: &GridSpec, dir: FftDirection) {
    let n = g.cells_per_axis();
    let fft = plan(n, dir);
    let rows_per_chunk = (4096 / n).max(1);
    for _ in 0..g.dim() {
        par::for_each_chunk(data, rows_per_chunk * n, |_, chunk| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
        *data = rotate_axes(data, g);
    }
}

/// `out[c, a, b] = in[a, b, c]` (3D) or a transpose (2D).
fn rotate_axes(data: &[Complex64], g: &GridSpec) -> Vec<Complex64> {
    let n = g.cells_per_axis();
    if g.dim() == 2 {
        par::collect(data.len(), |o| {
            let (c, a) = (o / n, o % n);
            data[a * n + c]
        })
    } else {
        par::collect(data.len(), |o| {
            let c = o / (n * n);
            let a = (o / n) % n;
            let b = o % n;
            data[(a * n + b) * n + c]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::erf;
    use crate::numerics::quadrature::{integrate_half_line, QuadOptions};

    #[test]
    fn kernel_at_origin() {
        let p = HeatKernelParams::new(2, 1.0 / (4.0 * PI)).unwrap();
        assert!((heat_kernel(&[0.0; 3], &p) - 1.0).abs() < 1e-15);
        assert!(HeatKernelParams::new(2, 0.0).is_err());
    }

    #[test]
    fn kernel_is_even() {
        let p = HeatKernelParams::new(3, 0.01).unwrap();
        let x = [0.03, -0.11, 0.07];
        assert_eq!(heat_kernel(&x, &p), heat_kernel(&[-0.03, 0.11, -0.07], &p));
    }

    #[test]
    fn kernel_mass_is_one() {
        let t = 2e-3;
        let p = HeatKernelParams::new(2, t).unwrap();
        let m = integrate_half_line(
            |r| 2.0 * PI * r * heat_kernel(&[r, 0.0, 0.0], &p),
            0.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((m - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gradient_norm_matches_quadrature() {
        for dim in [2usize, 3] {
            let t = 1e-3;
            let p = HeatKernelParams::new(dim, t).unwrap();
            let shell = if dim == 2 { 2.0 * PI } else { 4.0 * PI };
            let q = integrate_half_line(
                |r| shell * r.powi(dim as i32 - 1) * r / (2.0 * t) * heat_kernel(&[r, 0.0, 0.0], &p),
                0.0,
                QuadOptions::default(),
            )
            .unwrap();
            let (mass, grad) = kernel_l1_norms(t, dim).unwrap();
            assert_eq!(mass, 1.0);
            assert!((grad - q).abs() < 1e-8 * q, "dim {dim}: {grad} vs {q}");
        }
        let (_, a) = kernel_l1_norms(1e-3, 2).unwrap();
        let (_, b) = kernel_l1_norms(4e-3, 2).unwrap();
        assert!((b / a - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_field_is_unchanged() {
        let g = GridSpec::square(64).unwrap();
        let f = ScalarField::constant(g, 0.7).unwrap();
        let u = diffuse(&f, 1e-3).unwrap();
        assert!(u.sup_distance(&f).unwrap() < 1e-14);
    }

    #[test]
    fn fourier_mode_decays_exactly() {
        for dim in [2usize, 3] {
            let g = GridSpec::new(dim, 32, 2.0).unwrap();
            let t = 0.01;
            let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[dim - 1] / 2.0).sin()).unwrap();
            let u = diffuse(&f, t).unwrap();
            let damp = (-(PI).powi(2) * t).exp();
            let expected = f.map(|v| v * damp).unwrap();
            assert!(u.sup_distance(&expected).unwrap() < 1e-13);
        }
    }

    #[test]
    fn time_bound_enforced() {
        let g = GridSpec::square(32).unwrap();
        let f = ScalarField::constant(g, 1.0).unwrap();
        assert!(diffuse(&f, 1.0 / 16.0 + 1e-9).is_err());
        assert!(diffuse(&f, -1.0).is_err());
    }

    #[test]
    fn half_space_profile_is_erf() {
        // Point samples of a step are a midpoint rule in the convolution;
        // the leading quadrature term is (h^2/24) d^2/dr^2 of the profile.
        let g = GridSpec::square(512).unwrap();
        let t = 1e-3;
        let phase = crate::grid::PhaseField::from_predicate(g, |p| p[1] < 0.5);
        let u = diffuse(&crate::grid::to_pm_one(&phase), t).unwrap();
        let h = g.spacing();
        let (mut raw, mut corrected) = (0.0f64, 0.0f64);
        for j in 128..384 {
            let y = (j as f64 + 0.5) * h;
            let r = 0.5 - y;
            let exact = erf(r / (2.0 * t.sqrt()));
            let u0rr = -r / (2.0 * t) * (-r * r / (4.0 * t)).exp() / (PI * t).sqrt();
            let got = u.get(g.ravel([7, j, 0]));
            raw = raw.max((got - exact).abs());
            corrected = corrected.max((got - exact + h * h / 24.0 * u0rr).abs());
        }
        assert!(raw < 5e-5, "raw {raw}");
        assert!(corrected < 1e-6, "corrected {corrected}");
    }

    #[test]
    fn spectral_derivatives_of_a_mode() {
        let g = GridSpec::square(32).unwrap();
        let k = 2.0 * PI * 3.0;
        let l = 2.0 * PI;
        let u = ScalarField::from_fn(g, |p| (k * p[0]).sin() * (l * p[1]).cos()).unwrap();
        let (grad, hess) = spectral_derivatives(&u).unwrap();
        for i in (0..g.len()).step_by(7) {
            let p = g.center(i);
            let (sx, cx, sy, cy) = ((k * p[0]).sin(), (k * p[0]).cos(), (l * p[1]).sin(), (l * p[1]).cos());
            assert!((grad[0].get(i) - k * cx * cy).abs() < 1e-10);
            assert!((grad[1].get(i) + l * sx * sy).abs() < 1e-10);
            assert!((hess[0].get(i) + k * k * sx * cy).abs() < 1e-9);
            assert!((hess[1].get(i) + k * l * cx * sy).abs() < 1e-9);
            assert_eq!(hess[1].get(i), hess[2].get(i));
            assert!((hess[3].get(i) + l * l * sx * cy).abs() < 1e-9);
        }
    }
}
