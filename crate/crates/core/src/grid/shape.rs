//! Analytic initial sets.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GridSpec, PhaseField, Point};
use crate::error::{Error, Result};

/// Minimum distance between a bounded shape and the box faces, as a
/// fraction of the extent.
pub const MIN_CLEARANCE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Ball {
        #[serde(with = "point_serde")]
        center: Point,
        radius: f64,
    },
    /// Axis-aligned ellipse/ellipsoid.
    Ellipsoid {
        #[serde(with = "point_serde")]
        center: Point,
        #[serde(with = "point_serde")]
        semi_axes: Point,
    },
    /// Axis-aligned square/cube.
    Cuboid {
        #[serde(with = "point_serde")]
        center: Point,
        #[serde(with = "point_serde")]
        half_widths: Point,
    },
    /// `{x : x . normal < offset}`.
    HalfSpace {
        #[serde(with = "point_serde")]
        normal: Point,
        offset: f64,
    },
    Union { parts: Vec<Shape> },
    /// Two balls on the axis-0 line through `center`, joined by a bar.
    Dumbbell {
        #[serde(with = "point_serde")]
        center: Point,
        lobe_radius: f64,
        separation: f64,
        neck_half_width: f64,
    },
}

impl Shape {
    pub fn ball(center: Point, radius: f64) -> Self {
        Shape::Ball { center, radius }
    }

    pub fn disk(cx: f64, cy: f64, radius: f64) -> Self {
        Shape::Ball {
            center: [cx, cy, 0.0],
            radius,
        }
    }

    pub fn ellipse(cx: f64, cy: f64, a: f64, b: f64) -> Self {
        Shape::Ellipsoid {
            center: [cx, cy, 0.0],
            semi_axes: [a, b, 1.0],
        }
    }

    /// `{x : x[axis] < offset}`.
    pub fn half_space(axis: usize, offset: f64) -> Self {
        let mut normal = [0.0; 3];
        normal[axis] = 1.0;
        Shape::HalfSpace { normal, offset }
    }

    pub fn contains(&self, p: &Point, dim: usize) -> bool {
        match self {
            Shape::Ball { center, radius } => sq_dist(p, center, dim) < radius * radius,
            Shape::Ellipsoid { center, semi_axes } => {
                (0..dim)
                    .map(|a| ((p[a] - center[a]) / semi_axes[a]).powi(2))
                    .sum::<f64>()
                    < 1.0
            }
            Shape::Cuboid { center, half_widths } => {
                (0..dim).all(|a| (p[a] - center[a]).abs() < half_widths[a])
            }
            Shape::HalfSpace { normal, offset } => {
                (0..dim).map(|a| p[a] * normal[a]).sum::<f64>() < *offset
            }
            Shape::Union { parts } => parts.iter().any(|s| s.contains(p, dim)),
            Shape::Dumbbell {
                center,
                lobe_radius,
                separation,
                neck_half_width,
            } => {
                let mut left = *center;
                left[0] -= 0.5 * separation;
                let mut right = *center;
                right[0] += 0.5 * separation;
                let r2 = lobe_radius * lobe_radius;
                let in_bar = (p[0] - center[0]).abs() < 0.5 * separation
                    && (1..dim).all(|a| (p[a] - center[a]).abs() < *neck_half_width);
                sq_dist(p, &left, dim) < r2 || sq_dist(p, &right, dim) < r2 || in_bar
            }
        }
    }

    /// Axis-aligned bounding box, `None` for unbounded shapes.
    pub fn bounding_box(&self, dim: usize) -> Option<(Point, Point)> {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        match self {
            Shape::Ball { center, radius } => {
                for a in 0..dim {
                    lo[a] = center[a] - radius;
                    hi[a] = center[a] + radius;
                }
            }
            Shape::Ellipsoid {
                center,
                semi_axes: half,
            }
            | Shape::Cuboid {
                center,
                half_widths: half,
            } => {
                for a in 0..dim {
                    lo[a] = center[a] - half[a];
                    hi[a] = center[a] + half[a];
                }
            }
            Shape::HalfSpace { .. } => return None,
            Shape::Union { parts } => {
                lo = [f64::INFINITY; 3];
                hi = [f64::NEG_INFINITY; 3];
                for part in parts {
                    let (l, h) = part.bounding_box(dim)?;
                    for a in 0..dim {
                        lo[a] = lo[a].min(l[a]);
                        hi[a] = hi[a].max(h[a]);
                    }
                }
            }
            Shape::Dumbbell {
                center,
                lobe_radius,
                separation,
                neck_half_width,
            } => {
                let reach = lobe_radius.max(*neck_half_width);
                for a in 0..dim {
                    lo[a] = center[a] - reach;
                    hi[a] = center[a] + reach;
                }
                lo[0] = center[0] - 0.5 * separation - lobe_radius;
                hi[0] = center[0] + 0.5 * separation + lobe_radius;
            }
        }
        Some((lo, hi))
    }

    /// Distance from the shape to the nearest box face; infinite for
    /// unbounded shapes, which are exempt from the clearance rule.
    pub fn clearance(&self, grid: &GridSpec) -> f64 {
        match self.bounding_box(grid.dim()) {
            None => f64::INFINITY,
            Some((lo, hi)) => (0..grid.dim())
                .map(|a| lo[a].min(grid.extent() - hi[a]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Supremum of the Weingarten norm `|A| = sqrt(sum kappa_i^2)` over the
    /// boundary, where it is known in closed form.
    pub fn max_curvature(&self, dim: usize) -> Option<f64> {
        match self {
            Shape::Ball { radius, .. } => Some(((dim - 1) as f64).sqrt() / radius),
            Shape::Ellipsoid { semi_axes, .. } if dim == 2 => {
                let (a, b) = (semi_axes[0].max(semi_axes[1]), semi_axes[0].min(semi_axes[1]));
                Some(a / (b * b))
            }
            Shape::HalfSpace { .. } => Some(0.0),
            _ => None,
        }
    }

    /// Largest radius for which the boundary has the interior/exterior
    /// tangent ball property, where known in closed form.
    pub fn ball_radius(&self, dim: usize) -> Option<f64> {
        match self {
            Shape::Ball { radius, .. } => Some(*radius),
            Shape::Ellipsoid { semi_axes, .. } if dim == 2 => {
                let (a, b) = (semi_axes[0].max(semi_axes[1]), semi_axes[0].min(semi_axes[1]));
                Some(b * b / a)
            }
            _ => None,
        }
    }

    /// Exact signed distance (positive inside) for shapes where it is
    /// elementary.
    pub fn signed_distance(&self, p: &Point, dim: usize) -> Option<f64> {
        match self {
            Shape::Ball { center, radius } => Some(radius - sq_dist(p, center, dim).sqrt()),
            Shape::HalfSpace { normal, offset } => {
                let len = (0..dim).map(|a| normal[a] * normal[a]).sum::<f64>().sqrt();
                Some((offset - (0..dim).map(|a| p[a] * normal[a]).sum::<f64>()) / len)
            }
            _ => None,
        }
    }
}

/// Indicator of `shape` sampled at cell centers.
pub fn indicator_from_shape(shape: &Shape, grid: &GridSpec) -> Result<PhaseField> {
    let required = MIN_CLEARANCE_FRACTION * grid.extent();
    let clearance = shape.clearance(grid);
    // Allow rounding in shapes that touch the limit exactly.
    if clearance < required - 1e-12 * grid.extent() {
        return Err(Error::Clearance { clearance, required });
    }
    let dim = grid.dim();
    Ok(PhaseField::from_predicate(*grid, |p| shape.contains(&p, dim)))
}

fn sq_dist(p: &Point, q: &Point, dim: usize) -> f64 {
    (0..dim).map(|a| (p[a] - q[a]).powi(2)).sum()
}

mod point_serde {
    use super::*;

    pub fn serialize<S: Serializer>(p: &Point, s: S) -> std::result::Result<S::Ok, S::Error> {
        p.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Point, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() < 2 || v.len() > 3 {
            return Err(serde::de::Error::custom("expected 2 or 3 coordinates"));
        }
        let mut p = [0.0; 3];
        p[..v.len()].copy_from_slice(&v);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_cell_count_matches_area() {
        let g = GridSpec::square(256).unwrap();
        let phase = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.3), &g).unwrap();
        let expected = PI * 0.09 / (g.spacing() * g.spacing());
        assert!((phase.count() as f64 / expected - 1.0).abs() < 0.01);
    }

    #[test]
    fn half_space_sets_exactly_half() {
        let g = GridSpec::square(128).unwrap();
        let phase = indicator_from_shape(&Shape::half_space(1, 0.5), &g).unwrap();
        assert_eq!(phase.count(), g.len() / 2);
    }

    #[test]
    fn two_disjoint_balls_against_direct_count() {
        let g = GridSpec::square(256).unwrap();
        let shape = Shape::Union {
            parts: vec![Shape::disk(0.3, 0.5, 0.1), Shape::disk(0.7, 0.5, 0.1)],
        };
        let phase = indicator_from_shape(&shape, &g).unwrap();
        // Direct oracle: count cell centers inside either disk.
        let h = g.spacing();
        let mut direct = 0usize;
        for i in 0..256 {
            for j in 0..256 {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if (x - 0.3).powi(2) + (y - 0.5).powi(2) < 0.01
                    || (x - 0.7).powi(2) + (y - 0.5).powi(2) < 0.01
                {
                    direct += 1;
                }
            }
        }
        assert_eq!(phase.count(), direct);
        let expected = 2.0 * PI * 0.01 / (h * h);
        assert!((direct as f64 / expected - 1.0).abs() < 0.02);
    }

    #[test]
    fn shape_too_close_to_boundary_is_rejected() {
        let g = GridSpec::square(64).unwrap();
        let err = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.45), &g).unwrap_err();
        assert!(matches!(err, Error::Clearance { .. }));
    }

    #[test]
    fn json_shapes_accept_two_coordinates() {
        let s: Shape =
            serde_json::from_str(r#"{"kind":"ball","center":[0.5,0.5],"radius":0.3}"#).unwrap();
        assert_eq!(s, Shape::disk(0.5, 0.5, 0.3));
    }
}
