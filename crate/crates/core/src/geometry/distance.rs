//! Signed distance to a contour and Hausdorff distances.

use std::collections::{HashMap, VecDeque};

use super::index::{ElementIndex, Hit};
use crate::error::{Error, Result};
use crate::grid::{Contour, GridSpec, Point, ScalarField};
use crate::numerics::{add, cross, dot, norm, scale, sub};
use crate::par;

/// Signed distance `r` (positive inside) within a band around a contour,
/// clamped to `+-band` elsewhere, with the closest contour point of every
/// band cell.
#[derive(Debug, Clone)]
pub struct SignedDistanceField {
    pub r: ScalarField,
    pub nearest: Vec<Option<Point>>,
    pub band: f64,
}

impl SignedDistanceField {
    /// Median of `|grad r|` (central differences) over cells at least two
    /// cells inside the band.
    pub fn eikonal_median(&self) -> f64 {
        let g = self.r.grid();
        let hs = g.spacing();
        let v = self.r.values();
        let mut norms: Vec<f64> = (0..g.len())
            .filter(|&i| v[i].abs() < self.band - 2.0 * hs)
            .map(|i| {
                (0..g.dim())
                    .map(|a| {
                        let d = (v[g.neighbor(i, a, 1)] - v[g.neighbor(i, a, -1)]) / (2.0 * hs);
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        if norms.is_empty() {
            return f64::NAN;
        }
        norms.sort_by(f64::total_cmp);
        norms[norms.len() / 2]
    }
}

/// Outward pseudonormals used to sign distances.
struct Pseudonormals {
    element: Vec<Point>,
    vertex: Vec<Point>,
    edge: HashMap<(usize, usize), Point>,
}

fn pseudonormals(contour: &Contour, index: &ElementIndex<'_>) -> Pseudonormals {
    let v = contour.vertices();
    let mut vertex = vec![[0.0; 3]; v.len()];
    let mut edge: HashMap<(usize, usize), Point> = HashMap::new();
    let mut element = Vec::with_capacity(index.len());
    for e in 0..index.len() {
        let el = index.element(e);
        if contour.dim() == 2 {
            let d = sub(&v[el[1]], &v[el[0]]);
            let n = [d[1], -d[0], 0.0];
            let n = scale(&n, 1.0 / norm(&n));
            vertex[el[0]] = add(&vertex[el[0]], &n);
            vertex[el[1]] = add(&vertex[el[1]], &n);
            element.push(n);
        } else {
            let [a, b, c] = el.map(|i| v[i]);
            let n = cross(&sub(&b, &a), &sub(&c, &a));
            let n = scale(&n, 1.0 / norm(&n));
            for k in 0..3 {
                let (p, q, o) = (el[k], el[(k + 1) % 3], el[(k + 2) % 3]);
                let e1 = sub(&v[q], &v[p]);
                let e2 = sub(&v[o], &v[p]);
                let cos = dot(&e1, &e2) / (norm(&e1) * norm(&e2));
                let angle = cos.clamp(-1.0, 1.0).acos();
                vertex[p] = add(&vertex[p], &scale(&n, angle));
                let key = (p.min(q), p.max(q));
                let slot = edge.entry(key).or_insert([0.0; 3]);
                *slot = add(slot, &n);
            }
            element.push(n);
        }
    }
    Pseudonormals { element, vertex, edge }
}

fn signed(hit: &Hit, p: &Point, index: &ElementIndex<'_>, normals: &Pseudonormals, dim: usize) -> f64 {
    let el = index.element(hit.element);
    let n = if dim == 2 {
        match hit.feature {
            0 => normals.vertex[el[0]],
            1 => normals.vertex[el[1]],
            _ => normals.element[hit.element],
        }
    } else {
        match hit.feature {
            0..=2 => normals.vertex[el[hit.feature as usize]],
            3..=5 => {
                let k = (hit.feature - 3) as usize;
                let (a, b) = (el[k], el[(k + 1) % 3]);
                normals.edge[&(a.min(b), a.max(b))]
            }
            _ => normals.element[hit.element],
        }
    };
    if dot(&sub(p, &hit.point), &n) > 0.0 {
        -hit.dist
    } else {
        hit.dist
    }
}

/// Exact signed distance (brute force over nearby contour elements) for
/// cells within `band` of the contour; other cells get `+-band`, signed by
/// flood fill from the band.
pub fn signed_distance(contour: &Contour, grid: &GridSpec, band: f64) -> Result<SignedDistanceField> {
    if contour.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "contour dim {} vs grid dim {}",
            contour.dim(),
            grid.dim()
        )));
    }
    if contour.is_empty() {
        return Err(Error::EmptySet("signed distance to an empty contour".into()));
    }
    contour.check_closed()?;
    if !(band > 0.0) {
        return Err(Error::Precondition("band must be positive".into()));
    }
    let cells_per_bin = (band / grid.spacing()).ceil().max(1.0);
    let bins_wanted = (grid.extent() / (cells_per_bin * grid.spacing())).ceil();
    let bin = if bins_wanted > 256.0 {
        grid.extent() / 256.0
    } else {
        cells_per_bin * grid.spacing()
    };
    let index = ElementIndex::new(contour, bin);
    let normals = pseudonormals(contour, &index);
    let dim = grid.dim();
    let hits: Vec<Option<(f64, Point)>> = par::collect(grid.len(), |i| {
        let p = grid.center(i);
        index
            .nearest_within(&p, band)
            .map(|hit| (signed(&hit, &p, &index, &normals, dim), hit.point))
    });
    let mut r = vec![0.0; grid.len()];
    let mut known = vec![false; grid.len()];
    let mut nearest = vec![None; grid.len()];
    let mut queue = VecDeque::new();
    for (i, h) in hits.iter().enumerate() {
        if let Some((d, q)) = h {
            r[i] = *d;
            nearest[i] = Some(*q);
            known[i] = true;
            queue.push_back(i);
        }
    }
    // Cells beyond the band inherit the sign of the band cell they touch.
    while let Some(i) = queue.pop_front() {
        let s = if r[i] >= 0.0 { band } else { -band };
        for a in 0..dim {
            for off in [-1, 1] {
                let j = grid.neighbor(i, a, off);
                if !known[j] {
                    known[j] = true;
                    r[j] = s;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(SignedDistanceField {
        r: ScalarField::new(*grid, r)?,
        nearest,
        band,
    })
}

/// Symmetric Hausdorff distance between finite point sets.
pub fn hausdorff_points(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("Hausdorff distance of an empty set".into()));
    }
    let directed = |x: &[Point], y: &[Point]| {
        par::collect(x.len(), |i| {
            y.iter()
                .map(|q| norm(&sub(&x[i], q)))
                .fold(f64::INFINITY, f64::min)
        })
        .into_iter()
        .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Symmetric Hausdorff distance between contours. Each contour is
/// resampled at `spacing`; the resampled points are measured against the
/// other contour's elements exactly.
pub fn hausdorff(a: &Contour, b: &Contour, spacing: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("Hausdorff distance of an empty contour".into()));
    }
    let directed = |x: &Contour, y: &Contour| -> Result<f64> {
        let samples = x.resampled(spacing)?;
        let pts = samples.vertices();
        let index = ElementIndex::new(y, spacing.max(1e-12) * 8.0);
        Ok(par::collect(pts.len(), |i| index.nearest(&pts[i]).map_or(0.0, |h| h.dist))
            .into_iter()
            .fold(0.0, f64::max))
    };
    Ok(directed(a, b)?.max(directed(b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::extract_contour;
    use crate::numerics::{dist, point_segment};

    fn circle(center: Point, r: f64, n: usize) -> Contour {
        let pts = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [center[0] + r * th.cos(), center[1] + r * th.sin(), 0.0]
            })
            .collect();
        Contour::from_loops(vec![pts]).unwrap()
    }

    #[test]
    fn circle_signs_and_values() {
        let g = GridSpec::square(256).unwrap();
        let c = circle([0.5, 0.5, 0.0], 0.3, 2000);
        let sdf = signed_distance(&c, &g, 0.35).unwrap();
        let hs = g.spacing();
        // Cell nearest (0.9, 0.5) is about 0.1 outside.
        let i = g.ravel([(0.9 / hs) as usize, (0.5 / hs) as usize, 0]);
        let p = g.center(i);
        let exact = 0.3 - dist(&p, &[0.5, 0.5, 0.0]);
        assert!((sdf.r.get(i) - exact).abs() < hs);
        assert!(sdf.r.get(i) < 0.0);
        let center = g.ravel([128, 128, 0]);
        assert!((sdf.r.get(center) - 0.3).abs() < hs);
        let med = sdf.eikonal_median();
        assert!((0.95..=1.05).contains(&med), "median {med}");
    }

    #[test]
    fn band_matches_brute_force() {
        let g = GridSpec::square(64).unwrap();
        let f = ScalarField::from_fn(g, |p| {
            0.25 - ((p[0] - 0.5).powi(2) / 1.2 + (p[1] - 0.45).powi(2)).sqrt()
        })
        .unwrap();
        let c = extract_contour(&f, 0.0).unwrap();
        let band = 0.1;
        let sdf = signed_distance(&c, &g, band).unwrap();
        let segs = c.segments();
        for i in (0..g.len()).step_by(7) {
            let p = g.center(i);
            let d = segs
                .iter()
                .map(|(a, b)| point_segment(&p, a, b).0)
                .fold(f64::INFINITY, f64::min);
            if d <= band {
                let sign = if f.get(i) >= 0.0 { 1.0 } else { -1.0 };
                assert!((sdf.r.get(i) - sign * d).abs() < 1e-12, "cell {i}");
            } else {
                assert_eq!(sdf.r.get(i).abs(), band);
                assert_eq!(sdf.r.get(i).signum(), if f.get(i) >= 0.0 { 1.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn sphere_signed_distance() {
        let g = GridSpec::new(3, 32, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |p| 0.3 - dist(&p, &[0.5, 0.5, 0.5])).unwrap();
        let c = extract_contour(&f, 0.0).unwrap();
        let sdf = signed_distance(&c, &g, 0.15).unwrap();
        for i in 0..g.len() {
            if f.get(i).abs() < 0.1 {
                assert!((sdf.r.get(i) - f.get(i)).abs() < 0.5 * g.spacing());
            }
        }
    }

    #[test]
    fn hausdorff_of_circles() {
        let a = circle([0.0; 3], 1.0, 400);
        let b = circle([0.0; 3], 1.2, 400);
        let d = hausdorff(&a, &b, 0.005).unwrap();
        assert!((d - 0.2).abs() < 2e-3);
        assert!(hausdorff(&a, &a, 0.005).unwrap() < 1e-12);
        let shifted = circle([0.3, 0.0, 0.0], 1.0, 400);
        let d = hausdorff(&a, &shifted, 0.005).unwrap();
        assert!((d - 0.3).abs() < 5e-3, "{d}");
        assert!(hausdorff(&a, &Contour::empty(2), 0.01).is_err());
    }
}
