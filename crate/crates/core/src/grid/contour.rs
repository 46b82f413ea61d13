//! Level-set extraction on cell-center samples.
//!
//! Two dimensions use marching squares with an averaged-center saddle
//! decider; three dimensions split every cube into six tetrahedra along
//! its main diagonal (marching tetrahedra), which yields a closed,
//! conforming triangle mesh without lookup tables. Vertices always sit on
//! grid edges, placed by linear interpolation.
//!
//! Orientation: a sample is inside when `value >= level`. Loops run with
//! the inside on their left (counter-clockwise around a blob); triangle
//! normals `(b - a) x (c - a)` point outward.

use std::collections::HashMap;
use std::io::Write;

use super::{GridSpec, Point, ScalarField};
use crate::error::{Error, Result};
use crate::numerics::{add, cross, dist, norm, point_segment, point_triangle, scale, sub};

#[derive(Debug, Clone, PartialEq)]
pub enum Connectivity {
    /// Closed polylines; segment `i -> i+1` wraps around.
    Loops(Vec<Vec<usize>>),
    Triangles(Vec<[usize; 3]>),
}

/// Oriented closed curve set (2D) or surface mesh (3D).
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    dim: usize,
    vertices: Vec<Point>,
    connectivity: Connectivity,
    /// Optional per-vertex outward unit normals.
    pub normals: Option<Vec<Point>>,
    /// Optional per-vertex mean curvature samples.
    pub mean_curvature: Option<Vec<f64>>,
}

impl Contour {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            vertices: Vec::new(),
            connectivity: if dim == 2 {
                Connectivity::Loops(Vec::new())
            } else {
                Connectivity::Triangles(Vec::new())
            },
            normals: None,
            mean_curvature: None,
        }
    }

    /// Builds a 2D contour from closed polylines. Consecutive duplicate
    /// points are merged; loops need at least three distinct points.
    pub fn from_loops(loops: Vec<Vec<Point>>) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut out = Vec::new();
        for pts in loops {
            let mut ids: Vec<usize> = Vec::with_capacity(pts.len());
            for p in pts {
                if let Some(&last) = ids.last() {
                    if vertices[last] == p {
                        continue;
                    }
                }
                vertices.push(p);
                ids.push(vertices.len() - 1);
            }
            while ids.len() > 1 && vertices[ids[0]] == vertices[*ids.last().unwrap()] {
                ids.pop();
            }
            if ids.len() < 3 {
                return Err(Error::OpenContour(format!(
                    "loop with {} distinct points",
                    ids.len()
                )));
            }
            out.push(ids);
        }
        Ok(Self {
            dim: 2,
            vertices,
            connectivity: Connectivity::Loops(out),
            normals: None,
            mean_curvature: None,
        })
    }

    /// Builds a 3D contour; every edge must be shared by exactly two
    /// triangles.
    pub fn from_mesh(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let c = Self {
            dim: 3,
            vertices,
            connectivity: Connectivity::Triangles(triangles),
            normals: None,
            mean_curvature: None,
        };
        c.check_closed()?;
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn connectivity(&self) -> &Connectivity {
        &self.connectivity
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn loops(&self) -> &[Vec<usize>] {
        match &self.connectivity {
            Connectivity::Loops(l) => l,
            Connectivity::Triangles(_) => &[],
        }
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        match &self.connectivity {
            Connectivity::Triangles(t) => t,
            Connectivity::Loops(_) => &[],
        }
    }

    /// Points of loop `i` in traversal order.
    pub fn loop_points(&self, i: usize) -> Vec<Point> {
        self.loops()[i].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Segments (2D) as point pairs, in loop order.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for l in self.loops() {
            for k in 0..l.len() {
                out.push((self.vertices[l[k]], self.vertices[l[(k + 1) % l.len()]]));
            }
        }
        out
    }

    /// Number of closed loops (2D) or connected surface components (3D).
    pub fn loop_count(&self) -> usize {
        match &self.connectivity {
            Connectivity::Loops(l) => l.len(),
            Connectivity::Triangles(t) => {
                let comp = triangle_components(self.vertices.len(), t);
                comp.iter().copied().max().map_or(0, |m| m + 1)
            }
        }
    }

    /// Total length (2D) or area (3D).
    pub fn measure(&self) -> f64 {
        match &self.connectivity {
            Connectivity::Loops(_) => self.segments().iter().map(|(a, b)| dist(a, b)).sum(),
            Connectivity::Triangles(t) => t
                .iter()
                .map(|tri| triangle_area(&self.vertices, tri))
                .sum(),
        }
    }

    /// Signed enclosed area (2D, shoelace) or volume (3D, divergence theorem);
    /// positive for outward-oriented boundaries of bounded sets.
    pub fn enclosed_measure(&self) -> f64 {
        match &self.connectivity {
            Connectivity::Loops(_) => {
                0.5 * self
                    .segments()
                    .iter()
                    .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
                    .sum::<f64>()
            }
            Connectivity::Triangles(t) => {
                t.iter()
                    .map(|tri| {
                        let [a, b, c] = tri.map(|i| self.vertices[i]);
                        crate::numerics::dot(&a, &cross(&b, &c))
                    })
                    .sum::<f64>()
                    / 6.0
            }
        }
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len().max(1) as f64;
        let s = self.vertices.iter().fold([0.0; 3], |acc, v| add(&acc, v));
        scale(&s, 1.0 / n)
    }

    /// Outward unit normal per vertex (2D: from the two neighbours;
    /// 3D: area-weighted face normals).
    pub fn vertex_normals(&self) -> Vec<Point> {
        let mut normals = vec![[0.0; 3]; self.vertices.len()];
        match &self.connectivity {
            Connectivity::Loops(loops) => {
                for l in loops {
                    let m = l.len();
                    for k in 0..m {
                        let prev = self.vertices[l[(k + m - 1) % m]];
                        let next = self.vertices[l[(k + 1) % m]];
                        let t = sub(&next, &prev);
                        normals[l[k]] = [t[1], -t[0], 0.0];
                    }
                }
            }
            Connectivity::Triangles(tris) => {
                for tri in tris {
                    let [a, b, c] = tri.map(|i| self.vertices[i]);
                    let n = cross(&sub(&b, &a), &sub(&c, &a));
                    for &i in tri {
                        normals[i] = add(&normals[i], &n);
                    }
                }
            }
        }
        for n in &mut normals {
            let l = norm(n);
            if l > 0.0 {
                *n = scale(n, 1.0 / l);
            }
        }
        normals
    }

    /// Fills the normal slot.
    pub fn with_normals(mut self) -> Self {
        self.normals = Some(self.vertex_normals());
        self
    }

    /// Distance from `p` to the contour, with the closest point and the
    /// element index.
    pub fn closest_point(&self, p: &Point) -> Option<(f64, Point, usize)> {
        let mut best: Option<(f64, Point, usize)> = None;
        match &self.connectivity {
            Connectivity::Loops(_) => {
                for (e, (a, b)) in self.segments().iter().enumerate() {
                    let (d, q, _) = point_segment(p, a, b);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, q, e));
                    }
                }
            }
            Connectivity::Triangles(tris) => {
                for (e, tri) in tris.iter().enumerate() {
                    let [a, b, c] = tri.map(|i| self.vertices[i]);
                    let (d, q, _) = point_triangle(p, &a, &b, &c);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, q, e));
                    }
                }
            }
        }
        best
    }

    /// Loops resampled at uniform arc-length spacing no larger than
    /// `spacing` (2D). Meshes are refined by uniform triangle subdivision
    /// until every edge is at most `spacing` (3D).
    pub fn resampled(&self, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Precondition("resample spacing must be positive".into()));
        }
        match &self.connectivity {
            Connectivity::Loops(_) => {
                let loops = (0..self.loops().len())
                    .map(|i| resample_loop(&self.loop_points(i), spacing))
                    .collect();
                Self::from_loops(loops)
            }
            Connectivity::Triangles(tris) => {
                let longest = tris
                    .iter()
                    .flat_map(|t| {
                        (0..3).map(move |k| (t[k], t[(k + 1) % 3]))
                    })
                    .map(|(a, b)| dist(&self.vertices[a], &self.vertices[b]))
                    .fold(0.0, f64::max);
                let parts = (longest / spacing).ceil().max(1.0) as usize;
                Ok(subdivide_mesh(&self.vertices, tris, parts))
            }
        }
    }

    /// Checks that every mesh edge is shared by exactly two triangles with
    /// opposite orientation. Loops are closed by construction.
    pub fn check_closed(&self) -> Result<()> {
        if let Connectivity::Triangles(tris) = &self.connectivity {
            let mut directed: HashMap<(usize, usize), i32> = HashMap::new();
            for t in tris {
                for k in 0..3 {
                    *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
                }
            }
            for (&(a, b), &count) in &directed {
                if count != 1 || directed.get(&(b, a)) != Some(&1) {
                    return Err(Error::OpenContour(format!("edge ({a}, {b})")));
                }
            }
        }
        Ok(())
    }

    /// Component id per vertex (loop index in 2D).
    pub fn component_ids(&self) -> Vec<usize> {
        match &self.connectivity {
            Connectivity::Loops(loops) => {
                let mut ids = vec![0; self.vertices.len()];
                for (li, l) in loops.iter().enumerate() {
                    for &v in l {
                        ids[v] = li;
                    }
                }
                ids
            }
            Connectivity::Triangles(t) => triangle_components(self.vertices.len(), t),
        }
    }

    /// Writes `x,y[,z],loop_id` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let ids = self.component_ids();
        if self.dim == 2 {
            writeln!(w, "x,y,loop_id")?;
            for l in self.loops() {
                for &v in l {
                    let p = self.vertices[v];
                    writeln!(w, "{:.17e},{:.17e},{}", p[0], p[1], ids[v])?;
                }
            }
        } else {
            writeln!(w, "x,y,z,loop_id")?;
            for (v, p) in self.vertices.iter().enumerate() {
                writeln!(w, "{:.17e},{:.17e},{:.17e},{}", p[0], p[1], p[2], ids[v])?;
            }
        }
        Ok(())
    }
}

fn triangle_area(vertices: &[Point], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| vertices[i]);
    0.5 * norm(&cross(&sub(&b, &a), &sub(&c, &a)))
}

fn triangle_components(nv: usize, tris: &[[usize; 3]]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in tris {
        for k in 1..3 {
            let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[k]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = HashMap::new();
    let mut ids = vec![0; nv];
    for v in 0..nv {
        let r = find(&mut parent, v);
        let next = label.len();
        ids[v] = *label.entry(r).or_insert(next);
    }
    ids
}

fn resample_loop(pts: &[Point], spacing: f64) -> Vec<Point> {
    let m = pts.len();
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for k in 0..m {
        let d = dist(&pts[k], &pts[(k + 1) % m]);
        cum.push(cum[k] + d);
    }
    let total = cum[m];
    let count = ((total / spacing).ceil() as usize).max(3);
    let step = total / count as f64;
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for i in 0..count {
        let s = i as f64 * step;
        while seg + 1 < m && cum[seg + 1] <= s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        let a = pts[seg];
        let b = pts[(seg + 1) % m];
        out.push(add(&a, &scale(&sub(&b, &a), t)));
    }
    out
}

fn subdivide_mesh(vertices: &[Point], tris: &[[usize; 3]], parts: usize) -> Contour {
    if parts <= 1 {
        return Contour {
            dim: 3,
            vertices: vertices.to_vec(),
            connectivity: Connectivity::Triangles(tris.to_vec()),
            normals: None,
            mean_curvature: None,
        };
    }
    // Points on shared edges are keyed by (edge endpoints, step) so that
    // neighbouring triangles reuse them.
    let mut verts = vertices.to_vec();
    let mut edge_pts: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut interior_key = 0usize;
    let mut interior: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut out = Vec::new();
    for (ti, t) in tris.iter().enumerate() {
        let [a, b, c] = *t;
        let pa = vertices[a];
        let pb = vertices[b];
        let pc = vertices[c];
        // Barycentric lattice (i, j, k) with i + j + k = parts; weights on a, b, c.
        let mut id = |i: usize, j: usize, k: usize, verts: &mut Vec<Point>| -> usize {
            if i == parts {
                return a;
            }
            if j == parts {
                return b;
            }
            if k == parts {
                return c;
            }
            let on_edge = |u: usize, v: usize, s: usize| {
                if u < v {
                    (u, v, s)
                } else {
                    (v, u, parts - s)
                }
            };
            let key = if k == 0 {
                Some(on_edge(a, b, j))
            } else if i == 0 {
                Some(on_edge(b, c, k))
            } else if j == 0 {
                Some(on_edge(c, a, i))
            } else {
                None
            };
            let pos = add(
                &add(&scale(&pa, i as f64 / parts as f64), &scale(&pb, j as f64 / parts as f64)),
                &scale(&pc, k as f64 / parts as f64),
            );
            match key {
                Some(key) => *edge_pts.entry(key).or_insert_with(|| {
                    verts.push(pos);
                    verts.len() - 1
                }),
                None => *interior.entry((ti, i, j)).or_insert_with(|| {
                    interior_key += 1;
                    verts.push(pos);
                    verts.len() - 1
                }),
            }
        };
        for i in 0..parts {
            for j in 0..parts - i {
                let k = parts - i - j;
                let v0 = id(i + 1, j, k - 1, &mut verts);
                let v1 = id(i, j + 1, k - 1, &mut verts);
                let v2 = id(i, j, k, &mut verts);
                // Orientation follows (a, b, c): moving weight from c to a then b.
                out.push([v2, v0, v1]);
                if k >= 2 {
                    let v3 = id(i + 1, j + 1, k - 2, &mut verts);
                    out.push([v1, v0, v3]);
                }
            }
        }
    }
    Contour {
        dim: 3,
        vertices: verts,
        connectivity: Connectivity::Triangles(out),
        normals: None,
        mean_curvature: None,
    }
}

// ---------------------------------------------------------------------------
// Cell kernels

/// Pairs of crossed square edges `(from, to)`; segment runs from the
/// crossing on `from` to the crossing on `to`. Corners are numbered
/// counter-clockwise, edge `k` joins corners `k` and `k + 1`.
fn square_pairs(inside: [bool; 4], center_inside: bool) -> ([(usize, usize); 2], usize) {
    let mut crossings = [(0usize, false); 4];
    let mut nc = 0;
    for k in 0..4 {
        if inside[k] != inside[(k + 1) % 4] {
            crossings[nc] = (k, inside[k]);
            nc += 1;
        }
    }
    let mut pairs = [(0, 0); 2];
    let mut np = 0;
    for c in 0..nc {
        let (edge, leaving) = crossings[c];
        if !leaving {
            continue;
        }
        let partner = if nc == 2 || center_inside {
            (c + 1) % nc
        } else {
            (c + nc - 1) % nc
        };
        pairs[np] = (edge, crossings[partner].0);
        np += 1;
    }
    (pairs, np)
}

const SQUARE_CORNERS: [[usize; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];

const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 3, 2, 7],
    [0, 2, 6, 7],
    [0, 6, 4, 7],
    [0, 4, 5, 7],
    [0, 5, 1, 7],
];

/// Triangles of one tetrahedron as corner-index edge pairs, oriented by the
/// caller. Returns up to two triangles of three `(inside, outside)` edges.
fn tet_triangles(inside: [bool; 4]) -> ([[(usize, usize); 3]; 2], usize) {
    let ins: Vec<usize> = (0..4).filter(|&k| inside[k]).collect();
    let outs: Vec<usize> = (0..4).filter(|&k| !inside[k]).collect();
    let mut tris = [[(0, 0); 3]; 2];
    match ins.len() {
        1 => {
            tris[0] = [(ins[0], outs[0]), (ins[0], outs[1]), (ins[0], outs[2])];
            (tris, 1)
        }
        3 => {
            tris[0] = [(ins[0], outs[0]), (ins[1], outs[0]), (ins[2], outs[0])];
            (tris, 1)
        }
        2 => {
            let q = [
                (ins[0], outs[0]),
                (ins[0], outs[1]),
                (ins[1], outs[1]),
                (ins[1], outs[0]),
            ];
            tris[0] = [q[0], q[1], q[2]];
            tris[1] = [q[0], q[2], q[3]];
            (tris, 2)
        }
        _ => (tris, 0),
    }
}

/// Crossing point on the edge between two samples, computed from the
/// endpoint with the smaller key so both neighbouring cells agree bitwise.
fn edge_point(pa: &Point, va: f64, ka: usize, pb: &Point, vb: f64, kb: usize, level: f64) -> Point {
    let (p0, v0, p1, v1) = if ka < kb { (pa, va, pb, vb) } else { (pb, vb, pa, va) };
    let t = (v0 - level) / (v0 - v1);
    add(p0, &scale(&sub(p1, p0), t))
}

fn orient(tri: [Point; 3], outward: &Point) -> ([Point; 3], bool) {
    let n = cross(&sub(&tri[1], &tri[0]), &sub(&tri[2], &tri[0]));
    if crate::numerics::dot(&n, outward) < 0.0 {
        ([tri[0], tri[2], tri[1]], true)
    } else {
        (tri, false)
    }
}

fn check_range(field: &ScalarField, level: f64) -> Result<()> {
    let (lo, hi) = (field.min(), field.max());
    if !(level > lo && level < hi) {
        return Err(Error::Precondition(format!(
            "level {level} is not strictly inside the field range [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Extracts the `level` set of `field` as an oriented closed contour.
///
/// The level must lie strictly between the field minimum and maximum, and
/// the boundary layer of samples must lie entirely on one side of it.
pub fn extract_contour(field: &ScalarField, level: f64) -> Result<Contour> {
    check_range(field, level)?;
    let g = field.grid();
    let n = g.cells_per_axis();
    let v = field.values();
    let on_boundary = |i: usize| {
        let ijk = g.unravel(i);
        (0..g.dim()).any(|a| ijk[a] == 0 || ijk[a] == n - 1)
    };
    let mut side = None;
    for i in (0..g.len()).filter(|&i| on_boundary(i)) {
        let s = v[i] >= level;
        match side {
            None => side = Some(s),
            Some(prev) if prev != s => return Err(Error::BoundaryContact),
            _ => {}
        }
    }
    if g.dim() == 2 {
        marching_squares(g, v, level)
    } else {
        marching_tetrahedra(g, v, level)
    }
}

fn marching_squares(g: &GridSpec, v: &[f64], level: f64) -> Result<Contour> {
    let n = g.cells_per_axis();
    let mut vertex_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut next: HashMap<usize, usize> = HashMap::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let nodes = SQUARE_CORNERS.map(|[di, dj]| g.ravel([i + di, j + dj, 0]));
            let vals = nodes.map(|k| v[k]);
            let inside = vals.map(|x| x >= level);
            if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                continue;
            }
            let center_inside = vals.iter().sum::<f64>() * 0.25 >= level;
            let (pairs, np) = square_pairs(inside, center_inside);
            let mut vid = |e: usize| {
                let (a, b) = (nodes[e], nodes[(e + 1) % 4]);
                let key = (a.min(b), a.max(b));
                *vertex_of.entry(key).or_insert_with(|| {
                    let p = edge_point(
                        &g.center(a),
                        v[a],
                        a,
                        &g.center(b),
                        v[b],
                        b,
                        level,
                    );
                    vertices.push(p);
                    vertices.len() - 1
                })
            };
            for &(from, to) in &pairs[..np] {
                let s = vid(from);
                let t = vid(to);
                next.insert(s, t);
            }
        }
    }
    // Walk loops in order of their smallest vertex id.
    let mut visited = vec![false; vertices.len()];
    let mut loops = Vec::new();
    for start in 0..vertices.len() {
        if visited[start] {
            continue;
        }
        let mut l = Vec::new();
        let mut cur = start;
        loop {
            visited[cur] = true;
            l.push(vertices[cur]);
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::OpenContour("dangling marching-squares segment".into()))?;
            if cur == start {
                break;
            }
            if visited[cur] {
                return Err(Error::OpenContour("marching-squares walk re-entered a loop".into()));
            }
        }
        // Merge coincident points produced by samples exactly at the level.
        let mut dedup: Vec<Point> = Vec::with_capacity(l.len());
        for p in l {
            if dedup.last() != Some(&p) {
                dedup.push(p);
            }
        }
        while dedup.len() > 1 && dedup.first() == dedup.last() {
            dedup.pop();
        }
        if dedup.len() >= 3 {
            loops.push(dedup);
        }
    }
    if loops.is_empty() {
        return Ok(Contour::empty(2));
    }
    Contour::from_loops(loops)
}

fn marching_tetrahedra(g: &GridSpec, v: &[f64], level: f64) -> Result<Contour> {
    let n = g.cells_per_axis();
    let mut vertex_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut tris: Vec<[usize; 3]> = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            for k in 0..n - 1 {
                let nodes: [usize; 8] =
                    std::array::from_fn(|c| g.ravel([i + (c & 1), j + ((c >> 1) & 1), k + (c >> 2)]));
                let inside_c = nodes.map(|x| v[x] >= level);
                if inside_c.iter().all(|&b| b) || inside_c.iter().all(|&b| !b) {
                    continue;
                }
                for tet in &TETS {
                    let inside = tet.map(|c| inside_c[c]);
                    let (edge_tris, nt) = tet_triangles(inside);
                    if nt == 0 {
                        continue;
                    }
                    let outward = {
                        let mut ci = [0.0; 3];
                        let mut co = [0.0; 3];
                        let (mut ni, mut no) = (0.0, 0.0);
                        for (q, &c) in tet.iter().enumerate() {
                            let p = g.center(nodes[c]);
                            if inside[q] {
                                ci = add(&ci, &p);
                                ni += 1.0;
                            } else {
                                co = add(&co, &p);
                                no += 1.0;
                            }
                        }
                        sub(&scale(&co, 1.0 / no), &scale(&ci, 1.0 / ni))
                    };
                    for tri in &edge_tris[..nt] {
                        let ids = tri.map(|(qa, qb)| {
                            let (a, b) = (nodes[tet[qa]], nodes[tet[qb]]);
                            let key = (a.min(b), a.max(b));
                            *vertex_of.entry(key).or_insert_with(|| {
                                vertices.push(edge_point(
                                    &g.center(a),
                                    v[a],
                                    a,
                                    &g.center(b),
                                    v[b],
                                    b,
                                    level,
                                ));
                                vertices.len() - 1
                            })
                        });
                        let pts = ids.map(|i| vertices[i]);
                        let (_, flipped) = orient(pts, &outward);
                        let ids = if flipped { [ids[0], ids[2], ids[1]] } else { ids };
                        if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
                            continue;
                        }
                        tris.push(ids);
                    }
                }
            }
        }
    }
    if tris.is_empty() {
        return Ok(Contour::empty(3));
    }
    Ok(Contour {
        dim: 3,
        vertices,
        connectivity: Connectivity::Triangles(tris),
        normals: None,
        mean_curvature: None,
    })
}

/// Length (2D) or area (3D) of the `level` set with periodic wrap-around.
/// Cells are measured in local coordinates, so the result is invariant
/// under whole-cell translations up to summation order.
pub fn level_set_measure_periodic(field: &ScalarField, level: f64) -> f64 {
    let g = field.grid();
    let n = g.cells_per_axis();
    let h = g.spacing();
    let v = field.values();
    let wrap = |x: usize| if x == n { 0 } else { x };
    let per_row = |i: usize| -> f64 {
        let mut acc = 0.0;
        if g.dim() == 2 {
            for j in 0..n {
                let vals = SQUARE_CORNERS.map(|[di, dj]| v[g.ravel([wrap(i + di), wrap(j + dj), 0])]);
                let inside = vals.map(|x| x >= level);
                if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                    continue;
                }
                let center_inside = vals.iter().sum::<f64>() * 0.25 >= level;
                let (pairs, np) = square_pairs(inside, center_inside);
                let local = |e: usize| {
                    let (a, b) = (e, (e + 1) % 4);
                    let pa = [SQUARE_CORNERS[a][0] as f64 * h, SQUARE_CORNERS[a][1] as f64 * h, 0.0];
                    let pb = [SQUARE_CORNERS[b][0] as f64 * h, SQUARE_CORNERS[b][1] as f64 * h, 0.0];
                    edge_point(&pa, vals[a], a, &pb, vals[b], b, level)
                };
                for &(from, to) in &pairs[..np] {
                    acc += dist(&local(from), &local(to));
                }
            }
        } else {
            for j in 0..n {
                for k in 0..n {
                    let vals: [f64; 8] = std::array::from_fn(|c| {
                        v[g.ravel([wrap(i + (c & 1)), wrap(j + ((c >> 1) & 1)), wrap(k + (c >> 2))])]
                    });
                    let inside_c = vals.map(|x| x >= level);
                    if inside_c.iter().all(|&b| b) || inside_c.iter().all(|&b| !b) {
                        continue;
                    }
                    let corner = |c: usize| {
                        [
                            (c & 1) as f64 * h,
                            ((c >> 1) & 1) as f64 * h,
                            (c >> 2) as f64 * h,
                        ]
                    };
                    for tet in &TETS {
                        let (edge_tris, nt) = tet_triangles(tet.map(|c| inside_c[c]));
                        for tri in &edge_tris[..nt] {
                            let p = tri.map(|(qa, qb)| {
                                let (a, b) = (tet[qa], tet[qb]);
                                edge_point(&corner(a), vals[a], a, &corner(b), vals[b], b, level)
                            });
                            acc += 0.5 * norm(&cross(&sub(&p[1], &p[0]), &sub(&p[2], &p[0])));
                        }
                    }
                }
            }
        }
        acc
    };
    crate::par::collect(n, per_row).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, ScalarField};

    fn radial(g: GridSpec, r: f64) -> ScalarField {
        let c = g.middle();
        ScalarField::from_fn(g, move |p| r - dist(&p, &c)).unwrap()
    }

    #[test]
    fn circle_vertices_lie_on_circle() {
        let g = GridSpec::square(256).unwrap();
        let c = extract_contour(&radial(g, 0.3), 0.0).unwrap();
        assert_eq!(c.loop_count(), 1);
        let center = g.middle();
        for p in c.vertices() {
            assert!((dist(p, &center) - 0.3).abs() < g.spacing());
        }
        // Inside on the left: counter-clockwise, positive area.
        assert!(c.enclosed_measure() > 0.0);
        assert!((c.measure() - 2.0 * std::f64::consts::PI * 0.3).abs() < 1e-3);
    }

    #[test]
    fn constant_field_is_rejected() {
        let g = GridSpec::square(32).unwrap();
        let f = ScalarField::constant(g, 1.0).unwrap();
        assert!(matches!(extract_contour(&f, 2.0), Err(Error::Precondition(_))));
        assert!(matches!(extract_contour(&f, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn boundary_contact_is_rejected() {
        let g = GridSpec::square(32).unwrap();
        let f = ScalarField::from_fn(g, |p| 0.5 - p[0]).unwrap();
        assert!(matches!(extract_contour(&f, 0.0), Err(Error::BoundaryContact)));
    }

    #[test]
    fn hole_runs_clockwise() {
        let g = GridSpec::square(64).unwrap();
        let f = radial(g, 0.2).map(|x| -x).unwrap();
        let c = extract_contour(&f, 0.0).unwrap();
        assert!(c.enclosed_measure() < 0.0);
    }

    #[test]
    fn sphere_mesh_is_closed_and_oriented() {
        let g = GridSpec::new(3, 32, 1.0).unwrap();
        let c = extract_contour(&radial(g, 0.3), 0.0).unwrap();
        c.check_closed().unwrap();
        assert_eq!(c.loop_count(), 1);
        let vol = c.enclosed_measure();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.027;
        assert!((vol / exact - 1.0).abs() < 0.02, "volume {vol}");
        let area = c.measure();
        let exact_area = 4.0 * std::f64::consts::PI * 0.09;
        assert!((area / exact_area - 1.0).abs() < 0.03, "area {area}");
    }

    #[test]
    fn periodic_measure_matches_bounded_extraction() {
        let g = GridSpec::square(128).unwrap();
        let f = radial(g, 0.3);
        let bounded = extract_contour(&f, 0.0).unwrap().measure();
        let periodic = level_set_measure_periodic(&f, 0.0);
        assert!((bounded - periodic).abs() < 1e-12);
    }

    #[test]
    fn resampling_respects_spacing_and_orientation() {
        let g = GridSpec::square(128).unwrap();
        let c = extract_contour(&radial(g, 0.3), 0.0).unwrap();
        let r = c.resampled(0.5 * g.spacing()).unwrap();
        for (a, b) in r.segments() {
            assert!(dist(&a, &b) <= 0.5 * g.spacing() + 1e-12);
        }
        assert!(r.enclosed_measure() > 0.0);
        assert!((r.measure() - c.measure()).abs() < 1e-3 * c.measure());
    }

    #[test]
    fn subdivided_mesh_stays_closed() {
        let g = GridSpec::new(3, 16, 1.0).unwrap();
        let c = extract_contour(&radial(g, 0.3), 0.0).unwrap();
        let fine = c.resampled(0.25 * g.spacing()).unwrap();
        fine.check_closed().unwrap();
        assert!((fine.measure() - c.measure()).abs() < 1e-12 * c.measure().max(1.0) * 1e3);
        assert!((fine.enclosed_measure() - c.enclosed_measure()).abs() < 1e-12);
    }
}
