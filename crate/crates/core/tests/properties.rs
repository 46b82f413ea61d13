//! Randomized structural properties of the heat solver, the scheme and
//! the geometry helpers.

use proptest::prelude::*;

use threshold_dynamics::geometry::{hausdorff_points, offset_curvatures};
use threshold_dynamics::grid::{symmetric_difference_volume, to_pm_one};
use threshold_dynamics::heat::diffuse;
use threshold_dynamics::mbo::mbo_step;
use threshold_dynamics::{GridSpec, PhaseField, Point, ScalarField};

const N: usize = 32;

fn grid() -> GridSpec {
    GridSpec::square(N).unwrap()
}

fn phase() -> impl Strategy<Value = PhaseField> {
    prop::collection::vec(any::<bool>(), N * N).prop_map(|b| PhaseField::new(grid(), b.into_iter().map(u8::from).collect()).unwrap())
}

fn field() -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-1.0f64..1.0, N * N).prop_map(|v| ScalarField::new(grid(), v).unwrap())
}

/// Times long enough that the discrete kernel is positive to rounding.
fn time() -> impl Strategy<Value = f64> {
    4e-3f64..1e-2
}

fn points() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y)| [x, y, 0.0]), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heat_semigroup(f in field(), s in time(), t in time()) {
        let two = diffuse(&diffuse(&f, s).unwrap(), t).unwrap();
        let one = diffuse(&f, s + t).unwrap();
        prop_assert!(two.sup_distance(&one).unwrap() < 1e-12);
    }

    #[test]
    fn heat_conserves_mass(f in field(), t in time()) {
        prop_assert!((diffuse(&f, t).unwrap().mean() - f.mean()).abs() < 1e-14);
    }

    #[test]
    fn heat_comparison(f in field(), bump in field(), t in time()) {
        let g = f.zip_with(&bump, |a, b| a + b.abs()).unwrap();
        let (uf, ug) = (diffuse(&f, t).unwrap(), diffuse(&g, t).unwrap());
        for (a, b) in uf.values().iter().zip(ug.values()) {
            prop_assert!(*a <= b + 1e-12);
        }
    }

    #[test]
    fn scheme_preserves_inclusion(a in phase(), extra in phase(), h in time()) {
        let b = a.union(&extra).unwrap();
        let (na, nb) = (mbo_step(&a, h).unwrap(), mbo_step(&b, h).unwrap());
        prop_assert!(na.is_subset_of(&nb).unwrap());
    }

    #[test]
    fn scheme_commutes_with_translation(a in phase(), h in time(), dx in 0isize..N as isize, dy in 0isize..N as isize) {
        let z = [dx, dy, 0];
        let moved = mbo_step(&a.shifted(z), h).unwrap();
        let expected = mbo_step(&a, h).unwrap().shifted(z);
        // Cells may only disagree where the diffused field is zero to rounding.
        let u = diffuse(&to_pm_one(&a.shifted(z)), h).unwrap();
        for i in 0..grid().len() {
            prop_assert!(moved.get(i) == expected.get(i) || u.get(i).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_difference_is_a_metric(a in phase(), b in phase(), c in phase()) {
        let d = |x: &PhaseField, y: &PhaseField| symmetric_difference_volume(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
    }

    #[test]
    fn hausdorff_is_a_metric(a in points(), b in points(), c in points()) {
        let d = |x: &[Point], y: &[Point]| hausdorff_points(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
    }

    #[test]
    fn offset_round_trip(kappas in prop::collection::vec(-10.0f64..10.0, 1..4), frac in -0.9f64..0.9) {
        let kmax = kappas.iter().fold(1e-3f64, |a, k| a.max(k.abs()));
        let r = frac / kmax;
        let there = offset_curvatures(&kappas, r).unwrap();
        let back = offset_curvatures(&there.kappas, -r).unwrap();
        for (a, b) in kappas.iter().zip(&back.kappas) {
            prop_assert!((a - b).abs() <= 1e-12 * kmax);
        }
    }
}
