//! Set-theoretic and BV measurements of phase fields.

use super::contour::level_set_measure_periodic;
use super::PhaseField;
use crate::error::Result;
use crate::heat::diffuse;

/// Volume of the symmetric difference: differing cells times cell volume.
pub fn symmetric_difference_volume(a: &PhaseField, b: &PhaseField) -> Result<f64> {
    a.grid().check_same(b.grid())?;
    let differing = a.bits().iter().zip(b.bits()).filter(|(x, y)| x != y).count();
    Ok(differing as f64 * a.grid().cell_volume())
}

/// Heat-smoothing time used by [`perimeter`]: `spacing * extent / 256`.
/// The smoothing length `sqrt(t)` shrinks like `sqrt(spacing)`, slowly
/// enough to wash out the staircase and fast enough that the curvature
/// bias `O(t)` vanishes under refinement.
pub fn perimeter_smoothing_time(grid: &super::GridSpec) -> f64 {
    grid.spacing() * grid.extent() / 256.0
}

/// Perimeter (2D) or surface area (3D) of a phase: the measure of the
/// level-1/2 set of the heat-smoothed indicator, with periodic wrap.
pub fn perimeter(phase: &PhaseField) -> f64 {
    let count = phase.count();
    if count == 0 || count == phase.grid().len() {
        return 0.0;
    }
    let t = perimeter_smoothing_time(phase.grid());
    let smooth = diffuse(&phase.to_indicator(), t).expect("smoothing time is within the grid bound");
    level_set_measure_periodic(&smooth, 0.5)
}

/// `integral |chi(x + z) - chi(x)| dx` for a whole-cell translation `z`.
pub fn space_translation_defect(phase: &PhaseField, shift: [isize; 3]) -> f64 {
    symmetric_difference_volume(&phase.shifted(shift), phase).expect("same grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::shape::{indicator_from_shape, Shape};
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn identical_and_complementary() {
        let g = GridSpec::square(64).unwrap();
        let a = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.3), &g).unwrap();
        assert_eq!(symmetric_difference_volume(&a, &a).unwrap(), 0.0);
        assert!((symmetric_difference_volume(&a, &a.complement()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn annulus_area() {
        let g = GridSpec::square(256).unwrap();
        let a = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.3), &g).unwrap();
        let b = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.31), &g).unwrap();
        let v = symmetric_difference_volume(&a, &b).unwrap();
        let exact = PI * (0.31f64.powi(2) - 0.09);
        assert!((v / exact - 1.0).abs() < 0.05);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = PhaseField::empty(GridSpec::square(32).unwrap());
        let b = PhaseField::empty(GridSpec::square(64).unwrap());
        assert!(symmetric_difference_volume(&a, &b).is_err());
    }

    #[test]
    fn circle_perimeter() {
        let g = GridSpec::square(512).unwrap();
        let a = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.3), &g).unwrap();
        let p = perimeter(&a);
        assert!((p / (2.0 * PI * 0.3) - 1.0).abs() < 0.01, "perimeter {p}");
    }

    #[test]
    fn empty_and_full_have_zero_perimeter() {
        let g = GridSpec::square(32).unwrap();
        assert_eq!(perimeter(&PhaseField::empty(g)), 0.0);
        assert_eq!(perimeter(&PhaseField::full(g)), 0.0);
    }

    #[test]
    fn square_perimeter_against_its_mesh_length() {
        let g = GridSpec::square(512).unwrap();
        let shape = Shape::Cuboid {
            center: [0.5, 0.5, 0.0],
            half_widths: [0.2, 0.2, 0.0],
        };
        let a = indicator_from_shape(&shape, &g).unwrap();
        let p = perimeter(&a);
        assert!((p / 1.6 - 1.0).abs() < 0.02, "perimeter {p}");
    }

    #[test]
    fn translation_invariance() {
        let g = GridSpec::square(128).unwrap();
        let a = indicator_from_shape(&Shape::ellipse(0.5, 0.5, 0.3, 0.15), &g).unwrap();
        let p0 = perimeter(&a);
        let p1 = perimeter(&a.shifted([17, -5, 0]));
        assert!(((p1 - p0) / p0).abs() < 1e-12);
    }

    #[test]
    fn translation_defect_grows_with_shift() {
        let g = GridSpec::square(128).unwrap();
        let a = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.2), &g).unwrap();
        let d1 = space_translation_defect(&a, [1, 0, 0]);
        let d4 = space_translation_defect(&a, [4, 0, 0]);
        assert!(d1 > 0.0 && d4 > d1);
        // |chi(x+z) - chi(x)| integrates to about 2 * diameter * |z| for a disk.
        assert!((d4 / (2.0 * 0.4 * 4.0 * g.spacing()) - 1.0).abs() < 0.1);
    }
}
