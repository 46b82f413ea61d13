//! Curvature of level sets from grid fields.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};

use super::CurvatureSample;
use crate::error::{Error, Result};
use crate::grid::{Contour, Point, ScalarField};
use crate::heat::spectral_derivatives;
use crate::par;

/// `H = -div(grad u / |grad u|)` on the grid; cells where the gradient
/// (or a neighbour's) is negligible are masked and hold zero.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub h: ScalarField,
    pub valid: Vec<bool>,
}

fn central_gradient(u: &ScalarField, i: usize) -> [f64; 3] {
    let g = u.grid();
    let hs = g.spacing();
    let mut d = [0.0; 3];
    for (a, da) in d.iter_mut().enumerate().take(g.dim()) {
        *da = (u.get(g.neighbor(i, a, 1)) - u.get(g.neighbor(i, a, -1))) / (2.0 * hs);
    }
    d
}

/// Mean curvature (sum convention) of the level sets of `u`, positive
/// where `{u > c}` is locally convex.
pub fn curvature_from_field(u: &ScalarField) -> Result<CurvatureField> {
    let g = *u.grid();
    let dim = g.dim();
    let hs = g.spacing();
    let grads: Vec<[f64; 3]> = par::collect(g.len(), |i| central_gradient(u, i));
    let norms: Vec<f64> = grads
        .iter()
        .map(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
        .collect();
    let scale = norms.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Precondition("field has no gradient anywhere".into()));
    }
    let floor = 1e-8 * scale;
    let out: Vec<(f64, bool)> = par::collect(g.len(), |i| {
        let mut div = 0.0;
        for a in 0..dim {
            let (p, m) = (g.neighbor(i, a, 1), g.neighbor(i, a, -1));
            if norms[p] <= floor || norms[m] <= floor || norms[i] <= floor {
                return (0.0, false);
            }
            div += (grads[p][a] / norms[p] - grads[m][a] / norms[m]) / (2.0 * hs);
        }
        (-div, true)
    });
    let (values, valid): (Vec<f64>, Vec<bool>) = out.into_iter().unzip();
    Ok(CurvatureField {
        h: ScalarField::new(g, values)?,
        valid,
    })
}

/// Five-point (2D) or seven-point (3D) Laplacian.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = *u.grid();
    let hs2 = g.spacing() * g.spacing();
    let values = par::collect(g.len(), |i| {
        (0..g.dim())
            .map(|a| u.get(g.neighbor(i, a, 1)) - 2.0 * u.get(i) + u.get(g.neighbor(i, a, -1)))
            .sum::<f64>()
            / hs2
    });
    ScalarField::new(g, values).expect("finite input gives finite output")
}

/// Multilinear samples of `field` at the contour vertices.
pub fn sample_on_contour(field: &ScalarField, contour: &Contour) -> Vec<f64> {
    contour.vertices().iter().map(|p| field.interpolate(p)).collect()
}

/// Gradient and Hessian of the interpolant of `u` at `p` by central
/// differences with one-cell steps.
fn local_jet(u: &ScalarField, p: &Point) -> ([f64; 3], [[f64; 3]; 3]) {
    let g = u.grid();
    let s = g.spacing();
    let dim = g.dim();
    let at = |offs: &[(usize, f64)]| {
        let mut q = *p;
        for &(a, o) in offs {
            q[a] += o * s;
        }
        u.interpolate(&q)
    };
    let u0 = u.interpolate(p);
    let mut grad = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    for a in 0..dim {
        let (up, um) = (at(&[(a, 1.0)]), at(&[(a, -1.0)]));
        grad[a] = (up - um) / (2.0 * s);
        hess[a][a] = (up - 2.0 * u0 + um) / (s * s);
        for b in 0..a {
            let v = (at(&[(a, 1.0), (b, 1.0)]) - at(&[(a, 1.0), (b, -1.0)]) - at(&[(a, -1.0), (b, 1.0)])
                + at(&[(a, -1.0), (b, -1.0)]))
                / (4.0 * s * s);
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    (grad, hess)
}

/// Principal curvatures of the level set through a point with the given
/// gradient and Hessian: eigenvalues of `-P hess P / |grad|` on the
/// tangent space.
fn sample_from_jet(grad: [f64; 3], hess: [[f64; 3]; 3], dim: usize) -> Option<CurvatureSample> {
    let gn = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]).sqrt();
    if gn == 0.0 {
        return None;
    }
    if dim == 2 {
        let t = nalgebra::Vector2::new(-grad[1] / gn, grad[0] / gn);
        let m = Matrix2::new(hess[0][0], hess[0][1], hess[1][0], hess[1][1]);
        let k = -(t.transpose() * m * t)[(0, 0)] / gn;
        return Some(CurvatureSample::from_kappas(&[k]));
    }
    let n = nalgebra::Vector3::new(grad[0] / gn, grad[1] / gn, grad[2] / gn);
    let h = Matrix3::from_fn(|r, c| hess[r][c]);
    let p = Matrix3::identity() - n * n.transpose();
    let eig = SymmetricEigen::new(-(p * h * p) / gn);
    // Drop the eigenvector aligned with the normal.
    let normal_slot = (0..3)
        .max_by(|&x, &y| {
            eig.eigenvectors.column(x).dot(&n).abs().total_cmp(&eig.eigenvectors.column(y).dot(&n).abs())
        })
        .expect("three eigenpairs");
    let mut ks: Vec<f64> = (0..3).filter(|&j| j != normal_slot).map(|j| eig.eigenvalues[j]).collect();
    ks.sort_by(f64::total_cmp);
    Some(CurvatureSample::from_kappas(&ks))
}

fn collect_samples(samples: Vec<Option<CurvatureSample>>) -> Result<Vec<CurvatureSample>> {
    samples
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::Precondition(format!("vanishing gradient at contour vertex {i}"))))
        .collect()
}

fn check_dims(u: &ScalarField, contour: &Contour) -> Result<()> {
    if contour.dim() != u.grid().dim() {
        return Err(Error::GridMismatch("contour and field dimensions differ".into()));
    }
    Ok(())
}

/// Principal curvatures of the level set of `u` through each contour
/// vertex, from finite differences of the multilinear interpolant.
pub fn curvature_samples_on_contour(u: &ScalarField, contour: &Contour) -> Result<Vec<CurvatureSample>> {
    check_dims(u, contour)?;
    let dim = u.grid().dim();
    let verts = contour.vertices();
    collect_samples(par::collect(verts.len(), |i| {
        let (grad, hess) = local_jet(u, &verts[i]);
        sample_from_jet(grad, hess, dim)
    }))
}

/// As [`curvature_samples_on_contour`], with the gradient and Hessian
/// taken spectrally on the grid and interpolated to the vertices. Suited
/// to smooth periodic fields such as a diffused indicator.
pub fn curvature_samples_spectral(u: &ScalarField, contour: &Contour) -> Result<Vec<CurvatureSample>> {
    check_dims(u, contour)?;
    let (grads, hess) = spectral_derivatives(u)?;
    curvature_samples_from_derivatives(&grads, &hess, contour)
}

/// [`curvature_samples_spectral`] from precomputed derivative fields as
/// returned by [`spectral_derivatives`].
pub fn curvature_samples_from_derivatives(
    grads: &[ScalarField],
    hess: &[ScalarField],
    contour: &Contour,
) -> Result<Vec<CurvatureSample>> {
    let dim = grads.len();
    if hess.len() != dim * dim || dim != contour.dim() {
        return Err(Error::GridMismatch(format!(
            "{} gradient and {} Hessian fields for a {}D contour",
            dim,
            hess.len(),
            contour.dim()
        )));
    }
    let verts = contour.vertices();
    collect_samples(par::collect(verts.len(), |i| {
        let p = &verts[i];
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for a in 0..dim {
            g[a] = grads[a].interpolate(p);
            for b in 0..dim {
                h[a][b] = hess[a * dim + b].interpolate(p);
            }
        }
        sample_from_jet(g, h, dim)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{extract_contour, GridSpec};
    use crate::numerics::dist;

    fn radial(g: GridSpec, r: f64) -> ScalarField {
        let c = g.middle();
        ScalarField::from_fn(g, move |p| r - dist(&p, &c)).unwrap()
    }

    #[test]
    fn circle_curvature_on_contour() {
        let g = GridSpec::square(512).unwrap();
        let u = radial(g, 0.3);
        let c = extract_contour(&u, 0.0).unwrap();
        let h = curvature_from_field(&u).unwrap();
        for v in sample_on_contour(&h.h, &c) {
            assert!((v * 0.3 - 1.0).abs() < 0.03, "{v}");
        }
        for s in curvature_samples_on_contour(&u, &c).unwrap() {
            assert!((s.kappas[0] * 0.3 - 1.0).abs() < 0.03);
        }
    }

    #[test]
    fn straight_line_has_zero_curvature() {
        let g = GridSpec::square(128).unwrap();
        let u = ScalarField::from_fn(g, |p| 0.31 * (p[0] - 0.5) + 0.2 * (p[1] - 0.5)).unwrap();
        let h = curvature_from_field(&u).unwrap();
        let worst = (0..g.len())
            .filter(|&i| {
                let ij = g.unravel(i);
                (2..126).contains(&ij[0]) && (2..126).contains(&ij[1])
            })
            .map(|i| h.h.get(i).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3);
    }

    #[test]
    fn sphere_mean_curvature() {
        let g = GridSpec::new(3, 128, 1.0).unwrap();
        let u = radial(g, 0.3);
        let c = extract_contour(&u, 0.0).unwrap();
        let h = curvature_from_field(&u).unwrap();
        for v in sample_on_contour(&h.h, &c).iter().step_by(37) {
            assert!((v * 0.3 / 2.0 - 1.0).abs() < 0.05, "{v}");
        }
        for s in curvature_samples_on_contour(&u, &c).unwrap().iter().step_by(37) {
            assert!((s.mean_sum * 0.3 / 2.0 - 1.0).abs() < 0.05);
            assert!((s.weingarten_norm * 0.3 / 2f64.sqrt() - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn curvature_is_minus_laplacian_of_distance() {
        let g = GridSpec::square(512).unwrap();
        let u = radial(g, 0.3);
        let c = extract_contour(&u, 0.0).unwrap();
        let h = sample_on_contour(&curvature_from_field(&u).unwrap().h, &c);
        let lap = sample_on_contour(&laplacian(&u), &c);
        for (a, b) in h.iter().zip(&lap) {
            assert!((a + b).abs() < 0.01 * a.abs());
        }
    }

    #[test]
    fn constant_field_has_no_curvature() {
        let g = GridSpec::square(16).unwrap();
        assert!(curvature_from_field(&ScalarField::constant(g, 1.0).unwrap()).is_err());
    }

    #[test]
    fn spectral_samples_on_diffused_disk() {
        use crate::grid::{shape::indicator_from_shape, to_pm_one, Shape};
        let g = GridSpec::square(256).unwrap();
        let phase = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.3), &g).unwrap();
        // The pixelated disk leaves ripples of a few percent in the level
        // set; their average is the smooth curvature.
        let t = 1e-3;
        let u = crate::heat::diffuse(&to_pm_one(&phase), t).unwrap();
        let c = extract_contour(&u, 0.0).unwrap();
        let r = (0.09f64 - 2.0 * t).sqrt();
        let samples = curvature_samples_spectral(&u, &c).unwrap();
        let mean = samples.iter().map(|s| s.kappas[0]).sum::<f64>() / samples.len() as f64;
        assert!((mean * r - 1.0).abs() < 2e-3, "{}", mean * r);
        for s in &samples {
            assert!((s.kappas[0] * r - 1.0).abs() < 0.08, "{}", s.kappas[0] * r);
        }
    }
}
