//! Uniform periodic grids, cell-centered scalar fields and {0,1} phase fields.

pub mod contour;
pub mod io;
pub mod measure;
pub mod shape;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub use contour::{extract_contour, Connectivity, Contour};
pub use measure::{perimeter, space_translation_defect, symmetric_difference_volume};
pub use shape::Shape;

/// A point in the ambient space. Two-dimensional grids leave `z = 0`.
pub type Point = [f64; 3];

/// Uniform periodic box `[0, extent)^dim` split into `cells_per_axis^dim`
/// cells. Samples live at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRaw", into = "GridSpecRaw")]
pub struct GridSpec {
    dim: usize,
    cells_per_axis: usize,
    extent: f64,
}

#[derive(Serialize, Deserialize)]
struct GridSpecRaw {
    dim: usize,
    cells_per_axis: usize,
    extent: f64,
}

impl TryFrom<GridSpecRaw> for GridSpec {
    type Error = Error;

    fn try_from(raw: GridSpecRaw) -> Result<Self> {
        GridSpec::new(raw.dim, raw.cells_per_axis, raw.extent)
    }
}

impl From<GridSpec> for GridSpecRaw {
    fn from(g: GridSpec) -> Self {
        GridSpecRaw {
            dim: g.dim,
            cells_per_axis: g.cells_per_axis,
            extent: g.extent,
        }
    }
}

impl GridSpec {
    pub fn new(dim: usize, cells_per_axis: usize, extent: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if cells_per_axis < 16 || !cells_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "cells_per_axis must be even and >= 16, got {cells_per_axis}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        Ok(Self {
            dim,
            cells_per_axis,
            extent,
        })
    }

    /// Unit box in two dimensions.
    pub fn square(cells_per_axis: usize) -> Result<Self> {
        Self::new(2, cells_per_axis, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Always true; kept for the day non-periodic boxes exist.
    pub fn periodic(&self) -> bool {
        true
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.cells_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a flat row-major index (axis 0 slowest).
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.cells_per_axis;
        if self.dim == 2 {
            [idx / n, idx % n, 0]
        } else {
            [idx / (n * n), (idx / n) % n, idx % n]
        }
    }

    pub fn ravel(&self, ijk: [usize; 3]) -> usize {
        let n = self.cells_per_axis;
        if self.dim == 2 {
            ijk[0] * n + ijk[1]
        } else {
            (ijk[0] * n + ijk[1]) * n + ijk[2]
        }
    }

    /// Flat index of the neighbour `offset` cells away along `axis`, wrapping.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let n = self.cells_per_axis as isize;
        let mut ijk = self.unravel(idx);
        ijk[axis] = (ijk[axis] as isize + offset).rem_euclid(n) as usize;
        self.ravel(ijk)
    }

    /// Physical coordinates of the center of cell `ijk`.
    pub fn center_of(&self, ijk: [usize; 3]) -> Point {
        let h = self.spacing();
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = (ijk[a] as f64 + 0.5) * h;
        }
        p
    }

    pub fn center(&self, idx: usize) -> Point {
        self.center_of(self.unravel(idx))
    }

    /// Center of the box.
    pub fn middle(&self) -> Point {
        let mut p = [0.0; 3];
        for c in p.iter_mut().take(self.dim) {
            *c = 0.5 * self.extent;
        }
        p
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Real-valued samples at cell centers. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    /// Samples `f` at every cell center.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(Point) -> f64 + Sync + Send,
    {
        let values = par::collect(grid.len(), |i| f(grid.center(i)));
        Self::new(grid, values)
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean value, summed in index order.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &ScalarField, f: F) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Largest absolute difference to `other`.
    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Cyclic translation by whole cells: `out[i + shift] = self[i]`.
    pub fn shifted(&self, shift: [isize; 3]) -> Self {
        Self {
            grid: self.grid,
            values: shift_values(&self.grid, &self.values, shift),
        }
    }

    /// Multilinear interpolation between cell centers (periodic).
    pub fn interpolate(&self, p: &Point) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let n = g.cells_per_axis() as isize;
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for a in 0..g.dim() {
            let s = p[a] / h - 0.5;
            let f = s.floor();
            base[a] = f as isize;
            frac[a] = s - f;
        }
        let corners = 1usize << g.dim();
        let mut acc = 0.0;
        for c in 0..corners {
            let mut w = 1.0;
            let mut ijk = [0usize; 3];
            for a in 0..g.dim() {
                let bit = (c >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                ijk[a] = (base[a] + bit as isize).rem_euclid(n) as usize;
            }
            if w != 0.0 {
                acc += w * self.values[g.ravel(ijk)];
            }
        }
        acc
    }
}

/// A {0,1} indicator per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: GridSpec,
    bits: Vec<u8>,
}

impl PhaseField {
    pub fn new(grid: GridSpec, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} bits, got {}",
                grid.len(),
                bits.len()
            )));
        }
        if let Some(index) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Precondition(format!("phase value at cell {index} is not 0 or 1")));
        }
        Ok(Self { grid, bits })
    }

    pub fn empty(grid: GridSpec) -> Self {
        Self {
            grid,
            bits: vec![0; grid.len()],
        }
    }

    pub fn full(grid: GridSpec) -> Self {
        Self {
            grid,
            bits: vec![1; grid.len()],
        }
    }

    /// Indicator of `{x : pred(x)}` sampled at cell centers.
    pub fn from_predicate<F>(grid: GridSpec, pred: F) -> Self
    where
        F: Fn(Point) -> bool + Sync + Send,
    {
        let bits = par::collect(grid.len(), |i| u8::from(pred(grid.center(i))));
        Self { grid, bits }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx] == 1
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn fill_fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    /// Measure of the set, `count * spacing^dim`.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid,
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    pub fn union(&self, other: &PhaseField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect(),
        })
    }

    /// True when every set cell of `self` is set in `other`.
    pub fn is_subset_of(&self, other: &PhaseField) -> Result<bool> {
        self.grid.check_same(&other.grid)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(a, b)| a <= b))
    }

    pub fn shifted(&self, shift: [isize; 3]) -> Self {
        Self {
            grid: self.grid,
            bits: shift_values(&self.grid, &self.bits, shift),
        }
    }

    /// The indicator as a real field with values 0 and 1.
    pub fn to_indicator(&self) -> ScalarField {
        ScalarField::from_vec_unchecked(self.grid, self.bits.iter().map(|&b| b as f64).collect())
    }

    /// Cells whose value differs from some axis neighbour (periodic).
    pub fn interface_cells(&self) -> Vec<usize> {
        let g = &self.grid;
        (0..g.len())
            .filter(|&i| {
                (0..g.dim()).any(|a| {
                    self.bits[g.neighbor(i, a, 1)] != self.bits[i]
                        || self.bits[g.neighbor(i, a, -1)] != self.bits[i]
                })
            })
            .collect()
    }

    /// Smallest distance from an interface cell center to the box faces;
    /// infinite when there is no interface.
    pub fn clearance(&self) -> f64 {
        let g = &self.grid;
        self.interface_cells()
            .into_iter()
            .map(|i| {
                let p = g.center(i);
                (0..g.dim())
                    .map(|a| p[a].min(g.extent() - p[a]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of face-connected components of set cells (periodic wrap).
    pub fn components(&self) -> usize {
        let g = &self.grid;
        let mut seen = vec![false; g.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..g.len() {
            if self.bits[start] == 0 || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for a in 0..g.dim() {
                    for off in [-1, 1] {
                        let j = g.neighbor(i, a, off);
                        if self.bits[j] == 1 && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        count
    }
}

/// The ±1 field `2 chi - 1`.
pub fn to_pm_one(phase: &PhaseField) -> ScalarField {
    ScalarField::from_vec_unchecked(
        phase.grid,
        phase.bits.iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect(),
    )
}

fn shift_values<T: Copy + Default>(g: &GridSpec, src: &[T], shift: [isize; 3]) -> Vec<T> {
    let n = g.cells_per_axis() as isize;
    let mut out = vec![T::default(); src.len()];
    for (i, &v) in src.iter().enumerate() {
        let mut ijk = g.unravel(i);
        for a in 0..g.dim() {
            ijk[a] = (ijk[a] as isize + shift[a]).rem_euclid(n) as usize;
        }
        out[g.ravel(ijk)] = v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1, 64, 1.0).is_err());
        assert!(GridSpec::new(2, 15, 1.0).is_err());
        assert!(GridSpec::new(2, 18, 1.0).is_ok());
        assert!(GridSpec::new(2, 17, 1.0).is_err());
        assert!(GridSpec::new(3, 16, 0.0).is_err());
        let g = GridSpec::new(3, 16, 2.0).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.spacing(), 0.125);
        for i in [0, 17, 4095] {
            assert_eq!(g.ravel(g.unravel(i)), i);
        }
    }

    #[test]
    fn grid_serde_rejects_bad_dim() {
        let bad = r#"{"dim":4,"cells_per_axis":32,"extent":1.0}"#;
        assert!(serde_json::from_str::<GridSpec>(bad).is_err());
    }

    #[test]
    fn non_finite_values_rejected() {
        let g = GridSpec::square(16).unwrap();
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        assert!(matches!(ScalarField::new(g, v), Err(Error::NonFinite { index: 5 })));
    }

    #[test]
    fn pm_one_of_constant_phases() {
        let g = GridSpec::square(16).unwrap();
        assert!(to_pm_one(&PhaseField::full(g)).values().iter().all(|&v| v == 1.0));
        assert!(to_pm_one(&PhaseField::empty(g)).values().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn pm_one_mean_tracks_fill_fraction() {
        let g = GridSpec::square(64).unwrap();
        let phase = PhaseField::from_predicate(g, |p| {
            (p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2) < 0.09
        });
        let counted = phase.bits().iter().filter(|&&b| b == 1).count() as f64 / g.len() as f64;
        let f = to_pm_one(&phase);
        assert!((f.mean() - (2.0 * counted - 1.0)).abs() < 1e-14);
        assert!(f.values().iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn interpolation_is_exact_for_linear_fields() {
        let g = GridSpec::square(32).unwrap();
        let f = ScalarField::from_fn(g, |p| 2.0 * p[0] - p[1]).unwrap();
        let v = f.interpolate(&[0.4, 0.55, 0.0]);
        assert!((v - (0.8 - 0.55)).abs() < 1e-13);
    }

    #[test]
    fn components_and_clearance() {
        let g = GridSpec::square(64).unwrap();
        let two = PhaseField::from_predicate(g, |p| {
            (p[0] - 0.3).powi(2) + (p[1] - 0.5).powi(2) < 0.01
                || (p[0] - 0.7).powi(2) + (p[1] - 0.5).powi(2) < 0.01
        });
        assert_eq!(two.components(), 2);
        assert!((two.clearance() - (0.2 - 0.5 / 64.0)).abs() < 2.0 / 64.0);
        assert_eq!(PhaseField::empty(g).clearance(), f64::INFINITY);
    }
}
