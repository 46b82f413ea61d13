//! Threshold dynamics (the Merriman–Bence–Osher scheme) for motion by mean
//! curvature on uniform periodic grids, together with the geometry,
//! ansatz and oracle machinery used to measure its consistency and
//! stability.
//!
//! Conventions used throughout:
//!
//! * signed distance is positive inside the set;
//! * mean curvature is the trace of the Weingarten map, `H = sum(kappa_i)`,
//!   so a circle of radius `R` has `H = 1/R` and shrinks as
//!   `R(t) = sqrt(R^2 - 2t)`;
//! * fields are sampled at cell centers, row-major with axis 0 slowest.

// Negated float comparisons deliberately reject NaN; index loops mirror
// the stencil formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ansatz;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod heat;
pub mod mbo;
pub mod numerics;

pub use error::{Error, Result};
pub use grid::{GridSpec, PhaseField, Point, ScalarField, Shape};

pub(crate) mod par {
    //! Data-parallel helpers. Every helper writes results by index, so the
    //! output never depends on the number of threads.

    #[cfg(feature = "parallel")]
    use rayon::prelude::*;

    pub fn collect<T, F>(len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            (0..len).into_par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..len).map(f).collect()
        }
    }

    pub fn for_each_chunk<T, F>(data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        }
        #[cfg(not(feature = "parallel"))]
        {
            data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        }
    }
}
