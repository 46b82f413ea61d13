//! Intrinsic distance, self-intersection and the tangent-ball radius.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Contour, Point};
use crate::numerics::{dist, dot, norm, point_segment, point_triangle, sub};
use crate::par;

/// Signed curvature of a closed polyline at each vertex from the circle
/// through it and its two neighbours (Menger curvature); positive where a
/// counter-clockwise loop is convex.
pub fn polyline_curvatures(contour: &Contour) -> Vec<f64> {
    let v = contour.vertices();
    let mut out = vec![0.0; v.len()];
    for l in contour.loops() {
        let m = l.len();
        for k in 0..m {
            let (a, b, c) = (v[l[(k + m - 1) % m]], v[l[k]], v[l[(k + 1) % m]]);
            let ab = sub(&b, &a);
            let bc = sub(&c, &b);
            let cr = ab[0] * bc[1] - ab[1] * bc[0];
            out[l[k]] = 2.0 * cr / (norm(&ab) * norm(&bc) * dist(&a, &c));
        }
    }
    out
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// True when two non-adjacent segments of a 2D contour touch.
pub fn has_self_intersection(contour: &Contour) -> bool {
    let v = contour.vertices();
    let mut segs: Vec<(usize, usize)> = Vec::new();
    for l in contour.loops() {
        for k in 0..l.len() {
            segs.push((l[k], l[(k + 1) % l.len()]));
        }
    }
    let xmin = |s: &(usize, usize)| v[s.0][0].min(v[s.1][0]);
    segs.sort_by(|a, b| xmin(a).total_cmp(&xmin(b)));
    for i in 0..segs.len() {
        let (a, b) = segs[i];
        let xmax = v[a][0].max(v[b][0]);
        for &(c, d) in &segs[i + 1..] {
            if xmin(&(c, d)) > xmax {
                break;
            }
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_cross(&v[a], &v[b], &v[c], &v[d]) {
                return true;
            }
        }
    }
    false
}

/// Position of a point on a 2D contour: (loop, arc-length coordinate).
fn locate_on_loops(contour: &Contour, p: &Point, tol: f64) -> Result<(usize, f64)> {
    let v = contour.vertices();
    let mut best = (f64::INFINITY, 0, 0.0);
    for (li, l) in contour.loops().iter().enumerate() {
        let mut s = 0.0;
        for k in 0..l.len() {
            let (a, b) = (v[l[k]], v[l[(k + 1) % l.len()]]);
            let len = dist(&a, &b);
            let (d, _, t) = point_segment(p, &a, &b);
            if d < best.0 {
                best = (d, li, s + t * len);
            }
            s += len;
        }
    }
    if best.0 > tol {
        return Err(Error::NotOnContour(best.0));
    }
    Ok((best.1, best.2))
}

fn loop_length(contour: &Contour, li: usize) -> f64 {
    let pts = contour.loop_points(li);
    (0..pts.len()).map(|k| dist(&pts[k], &pts[(k + 1) % pts.len()])).sum()
}

fn tolerance(contour: &Contour) -> f64 {
    let size = contour
        .vertices()
        .iter()
        .map(|p| p.iter().map(|c| c.abs()).fold(0.0, f64::max))
        .fold(1.0, f64::max);
    1e-9 * size
}

/// Length of the shortest path between `p` and `q` along the contour: arc
/// length on a loop (2D) or the shortest edge path on the mesh (3D), with
/// `p` and `q` joined straight to the corners of their triangles. Points on
/// different components are infinitely far apart.
pub fn intrinsic_distance(contour: &Contour, p: &Point, q: &Point) -> Result<f64> {
    if contour.is_empty() {
        return Err(Error::EmptySet("intrinsic distance on an empty contour".into()));
    }
    let tol = tolerance(contour);
    if contour.dim() == 2 {
        let (lp, sp) = locate_on_loops(contour, p, tol)?;
        let (lq, sq) = locate_on_loops(contour, q, tol)?;
        if lp != lq {
            return Ok(f64::INFINITY);
        }
        let d = (sp - sq).abs();
        return Ok(d.min(loop_length(contour, lp) - d));
    }
    let v = contour.vertices();
    let tris = contour.triangles();
    let containing = |x: &Point| -> Result<usize> {
        let (d, t) = tris
            .iter()
            .enumerate()
            .map(|(t, tri)| (point_triangle(x, &v[tri[0]], &v[tri[1]], &v[tri[2]]).0, t))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
        if d > tol {
            return Err(Error::NotOnContour(d));
        }
        Ok(t)
    };
    let (tp, tq) = (containing(p)?, containing(q)?);
    if tp == tq {
        return Ok(dist(p, q));
    }
    // Dijkstra on vertices plus the source `p` (index n) and target `q` (n + 1).
    let n = v.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + 2];
    for tri in tris {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let w = dist(&v[a], &v[b]);
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
    }
    for &c in &tris[tp] {
        adj[n].push((c, dist(p, &v[c])));
    }
    for &c in &tris[tq] {
        adj[c].push((n + 1, dist(q, &v[c])));
    }
    let mut best = vec![f64::INFINITY; n + 2];
    best[n] = 0.0;
    // Nonnegative floats order like their bit patterns.
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0f64.to_bits(), n)));
    while let Some(Reverse((bits, x))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > best[x] {
            continue;
        }
        if x == n + 1 {
            return Ok(d);
        }
        for &(y, w) in &adj[x] {
            let nd = d + w;
            if nd < best[y] {
                best[y] = nd;
                heap.push(Reverse((nd.to_bits(), y)));
            }
        }
    }
    Ok(f64::INFINITY)
}

/// Tangent-ball radius of a contour and the companion separation
/// `m = min |p - q|` over vertex pairs at intrinsic distance `>= r_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallRadius {
    /// Largest `r` such that the interior and exterior tangent balls of
    /// radius `r` at every vertex contain no other vertex.
    pub radius: f64,
    /// Separation of intrinsically distant points (2D only).
    pub m: Option<f64>,
    /// `1 / (c_star * max |kappa|)`.
    pub r_star: f64,
    pub max_curvature: f64,
    pub self_intersecting: bool,
}

/// [`ball_radius_with`] with `c_star = 1`.
pub fn ball_radius(contour: &Contour) -> Result<BallRadius> {
    ball_radius_with(contour, 1.0)
}

/// Tangent-ball radius by the closed form for the largest empty tangent
/// ball: at vertex `p` with outward normal `n`, every other vertex `q`
/// bounds the ball on its side by `|q - p|^2 / (2 |(q - p) . n|)`.
pub fn ball_radius_with(contour: &Contour, c_star: f64) -> Result<BallRadius> {
    if contour.is_empty() {
        return Err(Error::EmptySet("ball radius of an empty contour".into()));
    }
    let dim = contour.dim();
    let max_curvature = if dim == 2 {
        polyline_curvatures(contour).iter().fold(0.0f64, |a, k| a.max(k.abs()))
    } else {
        f64::NAN
    };
    let r_star = 1.0 / (c_star * max_curvature);
    if dim == 2 && has_self_intersection(contour) {
        return Ok(BallRadius {
            radius: 0.0,
            m: None,
            r_star,
            max_curvature,
            self_intersecting: true,
        });
    }
    let radius = tangent_ball_radius(contour, &contour.vertex_normals(), 0.0);
    let m = if dim == 2 { Some(separation(contour, r_star)) } else { None };
    Ok(BallRadius {
        radius,
        m,
        r_star,
        max_curvature,
        self_intersecting: false,
    })
}

/// Largest `r` such that the tangent balls of radius `r` on both sides of
/// every vertex (along the given unit normals) contain no vertex at
/// distance `>= cutoff`. A positive cutoff keeps position noise between
/// neighbouring vertices out of the estimate; the local part is then
/// bounded by the curvature instead.
pub fn tangent_ball_radius(contour: &Contour, normals: &[Point], cutoff: f64) -> f64 {
    let v = contour.vertices();
    let cut2 = cutoff * cutoff;
    par::collect(v.len(), |i| {
        let p = v[i];
        let n = normals[i];
        let mut r = f64::INFINITY;
        for (j, q) in v.iter().enumerate() {
            if j == i {
                continue;
            }
            let d = sub(q, &p);
            let dd = dot(&d, &d);
            let s = dot(&d, &n);
            if dd >= cut2 && s != 0.0 {
                r = r.min(dd / (2.0 * s.abs()));
            }
        }
        r
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// `min |p - q|` over vertex pairs whose arc distance is at least `r_star`
/// (pairs on different loops always count).
fn separation(contour: &Contour, r_star: f64) -> f64 {
    let v = contour.vertices();
    let mut pos = vec![(0usize, 0.0f64); v.len()];
    let mut lengths = Vec::new();
    for (li, l) in contour.loops().iter().enumerate() {
        let mut s = 0.0;
        for k in 0..l.len() {
            pos[l[k]] = (li, s);
            s += dist(&v[l[k]], &v[l[(k + 1) % l.len()]]);
        }
        lengths.push(s);
    }
    par::collect(v.len(), |i| {
        let mut best = f64::INFINITY;
        for j in 0..v.len() {
            if j == i {
                continue;
            }
            let far = if pos[i].0 != pos[j].0 {
                true
            } else {
                let d = (pos[i].1 - pos[j].1).abs();
                d.min(lengths[pos[i].0] - d) >= r_star
            };
            if far {
                best = best.min(dist(&v[i], &v[j]));
            }
        }
        best
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ellipse(a: f64, b: f64, n: usize) -> Contour {
        let pts = (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                [a * th.cos(), b * th.sin(), 0.0]
            })
            .collect();
        Contour::from_loops(vec![pts]).unwrap()
    }

    #[test]
    fn circle_ball_radius() {
        let c = ellipse(0.3, 0.3, 720);
        let b = ball_radius(&c).unwrap();
        assert!((b.radius / 0.3 - 1.0).abs() < 0.02);
        assert!(!b.self_intersecting);
        // Arc distance >= R on a circle: chord >= 2R sin(1/2).
        let m = b.m.unwrap();
        assert!((m - 2.0 * 0.3 * 0.5f64.sin()).abs() < 0.01);
    }

    #[test]
    fn ellipse_ball_radius() {
        let c = ellipse(0.4, 0.2, 2000);
        let b = ball_radius(&c).unwrap();
        assert!((b.radius / 0.1 - 1.0).abs() < 0.05, "{}", b.radius);
        // Dense-sampling oracle: the smallest osculating radius.
        let min_osc = (0..20000)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 20000.0;
                let (s, c) = th.sin_cos();
                (0.16 * s * s + 0.04 * c * c).powf(1.5) / (0.4 * 0.2)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((b.radius / min_osc - 1.0).abs() < 0.05);
    }

    #[test]
    fn figure_eight_is_flagged() {
        let pts = (0..200)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 200.0;
                [th.sin(), th.sin() * th.cos(), 0.0]
            })
            .collect();
        let c = Contour::from_loops(vec![pts]).unwrap();
        let b = ball_radius(&c).unwrap();
        assert!(b.self_intersecting);
        assert_eq!(b.radius, 0.0);
    }

    #[test]
    fn antipodal_points() {
        let c = ellipse(0.3, 0.3, 4000);
        let d = intrinsic_distance(&c, &[0.3, 0.0, 0.0], &[-0.3, 0.0, 0.0]).unwrap();
        assert!((d - PI * 0.3).abs() < 1e-4);
        let p = c.vertices()[17];
        assert_eq!(intrinsic_distance(&c, &p, &p).unwrap(), 0.0);
        assert!(matches!(
            intrinsic_distance(&c, &[0.0, 0.0, 0.0], &p),
            Err(Error::NotOnContour(_))
        ));
    }

    #[test]
    fn polygon_paths_match_exhaustive_enumeration() {
        // Irregular 13-gon; every simple path between two vertices of a
        // cycle graph is enumerated by depth-first search.
        let n = 13;
        let pts: Vec<Point> = (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                let r = 1.0 + 0.3 * ((3 * k) as f64).sin();
                [r * th.cos(), r * th.sin(), 0.0]
            })
            .collect();
        let c = Contour::from_loops(vec![pts.clone()]).unwrap();
        fn dfs(pts: &[Point], at: usize, goal: usize, seen: &mut Vec<bool>, len: f64, best: &mut f64) {
            if at == goal {
                *best = best.min(len);
                return;
            }
            let n = pts.len();
            for next in [(at + 1) % n, (at + n - 1) % n] {
                if !seen[next] {
                    seen[next] = true;
                    dfs(pts, next, goal, seen, len + dist(&pts[at], &pts[next]), best);
                    seen[next] = false;
                }
            }
        }
        for (i, j) in [(0, 5), (2, 11), (7, 8), (3, 3), (12, 6)] {
            let mut seen = vec![false; n];
            seen[i] = true;
            let mut best = f64::INFINITY;
            dfs(&pts, i, j, &mut seen, 0.0, &mut best);
            let d = intrinsic_distance(&c, &pts[i], &pts[j]).unwrap();
            assert!((d - best).abs() < 1e-12, "{i}->{j}: {d} vs {best}");
        }
    }

    #[test]
    fn sphere_geodesic_is_bounded_by_mesh_paths() {
        use crate::grid::{extract_contour, GridSpec, ScalarField};
        let g = GridSpec::new(3, 32, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |p| 0.3 - dist(&p, &[0.5, 0.5, 0.5])).unwrap();
        let c = extract_contour(&u, 0.0).unwrap();
        let v = c.vertices();
        let (p, q) = (v[0], v[v.len() / 2]);
        let d = intrinsic_distance(&c, &p, &q).unwrap();
        assert!(d >= dist(&p, &q) - 1e-12);
        // Edge paths over-estimate great-circle arcs by a bounded factor.
        let r0 = dist(&p, &[0.5, 0.5, 0.5]);
        let arc = r0 * (dot(&sub(&p, &[0.5; 3]), &sub(&q, &[0.5; 3])) / (r0 * dist(&q, &[0.5; 3]))).acos();
        assert!(d >= 0.95 * arc && d <= 1.5 * arc, "{d} vs {arc}");
    }

    #[test]
    fn menger_curvature_of_circle() {
        let c = ellipse(0.5, 0.5, 100);
        for k in polyline_curvatures(&c) {
            assert!((k - 2.0).abs() < 1e-3);
        }
    }
}
