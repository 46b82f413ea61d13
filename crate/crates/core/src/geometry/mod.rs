//! Signed distance, curvature estimators, offset-surface formulas,
//! Hausdorff and intrinsic distances, and the tangent-ball radius.

mod ball;
mod curvature;
mod distance;
mod index;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ball::{ball_radius, ball_radius_with, has_self_intersection, intrinsic_distance, polyline_curvatures, tangent_ball_radius, BallRadius};
pub use curvature::{
    curvature_from_field, curvature_samples_on_contour, curvature_samples_from_derivatives, curvature_samples_spectral, laplacian, sample_on_contour, CurvatureField,
};
pub use distance::{hausdorff, hausdorff_points, signed_distance, SignedDistanceField};

/// Principal curvatures at a point with their derived norms. Curvatures
/// are positive where the set is locally convex (signed distance positive
/// inside).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub kappas: Vec<f64>,
    /// `|A| = sqrt(sum kappa_i^2)`.
    pub weingarten_norm: f64,
    /// `H = sum kappa_i`.
    pub mean_sum: f64,
}

impl CurvatureSample {
    pub fn from_kappas(kappas: &[f64]) -> Self {
        Self {
            kappas: kappas.to_vec(),
            weingarten_norm: kappas.iter().map(|k| k * k).sum::<f64>().sqrt(),
            mean_sum: kappas.iter().sum(),
        }
    }
}

fn check_focal(r: f64, kappas: &[f64]) -> Result<()> {
    if let Some(&k) = kappas.iter().find(|&&k| r * k >= 1.0) {
        return Err(Error::FocalCrossing(r * k));
    }
    Ok(())
}

/// Curvatures of the parallel surface at signed distance `r0` (inward
/// positive): `kappa_i / (1 - r0 kappa_i)`.
pub fn offset_curvatures(kappas: &[f64], r0: f64) -> Result<CurvatureSample> {
    check_focal(r0, kappas)?;
    let shifted: Vec<f64> = kappas.iter().map(|&k| k / (1.0 - r0 * k)).collect();
    Ok(CurvatureSample::from_kappas(&shifted))
}

/// `psi(r) = sum kappa_i^2 / (1 - r kappa_i)`, so that `H_r = H_0 + r psi(r)`.
pub fn psi(r: f64, kappas: &[f64]) -> Result<f64> {
    check_focal(r, kappas)?;
    Ok(kappas.iter().map(|&k| k * k / (1.0 - r * k)).sum())
}

/// Weingarten map of the graph of `f` from its gradient and Hessian:
/// `(I - grad f grad f^T / (1 + |grad f|^2)) hess f / sqrt(1 + |grad f|^2)`.
pub fn weingarten_graph(grad: &DVector<f64>, hess: &DMatrix<f64>) -> DMatrix<f64> {
    let n = grad.len();
    let w2 = 1.0 + grad.norm_squared();
    let proj = DMatrix::identity(n, n) - grad * grad.transpose() / w2;
    proj * hess / w2.sqrt()
}

/// Mean curvature of a graph in divergence form,
/// `div(grad f / sqrt(1 + |grad f|^2))`, expanded with the Hessian.
pub fn mean_curvature_graph(grad: &DVector<f64>, hess: &DMatrix<f64>) -> f64 {
    let w2 = 1.0 + grad.norm_squared();
    (hess.trace() - (grad.transpose() * hess * grad)[(0, 0)] / w2) / w2.sqrt()
}

/// Principal curvatures of a graph: eigenvalues of its Weingarten map,
/// sorted ascending. The map is self-adjoint in the induced metric, so its
/// eigenvalues are real.
pub fn principal_curvatures_graph(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Vec<f64> {
    let a = weingarten_graph(grad, hess);
    let mut eig: Vec<f64> = a.complex_eigenvalues().iter().map(|c| c.re).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_gauge_returns_hessian() {
        let g = DVector::zeros(2);
        let h = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, -1.2]);
        assert_eq!(weingarten_graph(&g, &h), h);
    }

    #[test]
    fn sphere_cap_at_apex() {
        let r = 0.7;
        let g = DVector::zeros(2);
        let h = DMatrix::identity(2, 2) / r;
        let k = principal_curvatures_graph(&g, &h);
        assert!(k.iter().all(|&k| (k - 1.0 / r).abs() < 1e-15));
    }

    #[test]
    fn offsets_and_psi() {
        let s = offset_curvatures(&[1.0 / 0.3], 0.1).unwrap();
        assert!((s.kappas[0] - 1.0 / 0.2).abs() < 1e-13);
        assert_eq!(offset_curvatures(&[2.0, -1.0], 0.0).unwrap().kappas, vec![2.0, -1.0]);
        assert!(matches!(offset_curvatures(&[2.0], 0.5), Err(Error::FocalCrossing(_))));
        assert_eq!(psi(0.0, &[3.0, 4.0]).unwrap(), 25.0);
        let k = 2.5;
        assert!((psi(0.13, &[k]).unwrap() * (1.0 - 0.13 * k) - k * k).abs() < 1e-14);
    }

    #[test]
    fn sample_norms() {
        let s = CurvatureSample::from_kappas(&[3.0, -4.0]);
        assert_eq!(s.weingarten_norm, 5.0);
        assert_eq!(s.mean_sum, -1.0);
    }
}
