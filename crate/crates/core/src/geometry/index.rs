//! Uniform bins over contour elements for nearest-element queries.

use std::collections::HashMap;

use crate::grid::{Contour, Point};
use crate::numerics::{point_segment, point_triangle};

/// Closest element hit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hit {
    pub dist: f64,
    pub point: Point,
    pub element: usize,
    /// 2D: 0/1 endpoints, 2 interior. 3D: triangle feature (0..3 vertices,
    /// 3..6 edges ab/bc/ca, 6 face).
    pub feature: u8,
}

pub(crate) struct ElementIndex<'a> {
    contour: &'a Contour,
    /// Element vertex indices (segments use the first two).
    elements: Vec<[usize; 3]>,
    bins: HashMap<[i64; 3], Vec<u32>>,
    cell: f64,
    dim: usize,
}

impl<'a> ElementIndex<'a> {
    pub fn new(contour: &'a Contour, cell: f64) -> Self {
        let dim = contour.dim();
        let elements: Vec<[usize; 3]> = if dim == 2 {
            contour
                .loops()
                .iter()
                .flat_map(|l| (0..l.len()).map(move |k| [l[k], l[(k + 1) % l.len()], usize::MAX]))
                .collect()
        } else {
            contour.triangles().to_vec()
        };
        let v = contour.vertices();
        let mut bins: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (e, el) in elements.iter().enumerate() {
            let corners = if dim == 2 { 2 } else { 3 };
            let mut lo = [0i64; 3];
            let mut hi = [0i64; 3];
            for a in 0..dim {
                let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
                for &c in &el[..corners] {
                    mn = mn.min(v[c][a]);
                    mx = mx.max(v[c][a]);
                }
                lo[a] = (mn / cell).floor() as i64;
                hi[a] = (mx / cell).floor() as i64;
            }
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        bins.entry([i, j, k]).or_default().push(e as u32);
                    }
                }
            }
        }
        Self {
            contour,
            elements,
            bins,
            cell,
            dim,
        }
    }

    pub fn element(&self, e: usize) -> [usize; 3] {
        self.elements[e]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    fn distance_to(&self, p: &Point, e: usize) -> Hit {
        let v = self.contour.vertices();
        let el = self.elements[e];
        if self.dim == 2 {
            let (dist, point, t) = point_segment(p, &v[el[0]], &v[el[1]]);
            let feature = if t <= 0.0 {
                0
            } else if t >= 1.0 {
                1
            } else {
                2
            };
            Hit {
                dist,
                point,
                element: e,
                feature,
            }
        } else {
            let (dist, point, feature) = point_triangle(p, &v[el[0]], &v[el[1]], &v[el[2]]);
            Hit {
                dist,
                point,
                element: e,
                feature,
            }
        }
    }

    /// Closest element with distance `<= radius`, ties broken by the lower
    /// element index.
    pub fn nearest_within(&self, p: &Point, radius: f64) -> Option<Hit> {
        let reach = (radius / self.cell).ceil() as i64;
        let mut base = [0i64; 3];
        for a in 0..self.dim {
            base[a] = (p[a] / self.cell).floor() as i64;
        }
        let span = |a: usize| if a < self.dim { reach } else { 0 };
        let mut best: Option<Hit> = None;
        let mut consider = |hit: Hit| {
            if hit.dist <= radius
                && best.is_none_or(|b| hit.dist < b.dist || (hit.dist == b.dist && hit.element < b.element))
            {
                best = Some(hit);
            }
        };
        let bins_in_box = ((2 * reach + 1) as usize).pow(self.dim as u32);
        if bins_in_box > self.bins.len() {
            for (key, list) in &self.bins {
                if (0..self.dim).all(|a| (key[a] - base[a]).abs() <= reach) {
                    for &e in list {
                        consider(self.distance_to(p, e as usize));
                    }
                }
            }
        } else {
            for di in -span(0)..=span(0) {
                for dj in -span(1)..=span(1) {
                    for dk in -span(2)..=span(2) {
                        if let Some(list) = self.bins.get(&[base[0] + di, base[1] + dj, base[2] + dk]) {
                            for &e in list {
                                consider(self.distance_to(p, e as usize));
                            }
                        }
                    }
                }
            }
        }
        best
    }

    /// Closest element overall.
    pub fn nearest(&self, p: &Point) -> Option<Hit> {
        if self.elements.is_empty() {
            return None;
        }
        let mut radius = self.cell;
        loop {
            if let Some(hit) = self.nearest_within(p, radius) {
                return Some(hit);
            }
            radius *= 2.0;
        }
    }
}
