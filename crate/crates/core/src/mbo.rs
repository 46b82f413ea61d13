//! The diffuse–threshold iteration and its per-step diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{perimeter, symmetric_difference_volume, to_pm_one, PhaseField, ScalarField};
use crate::heat::diffuse;
use crate::par;

/// Scheme parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MboConfig {
    /// Time step.
    pub h: f64,
    pub steps: usize,
    /// Enforce the step-size conditions against `curvature_bound`.
    #[serde(default)]
    pub delta_check: bool,
    /// Required distance between the interface and the box faces; checked
    /// before every step. Zero disables the check.
    #[serde(default)]
    pub rho: f64,
    /// `sup |A|` of the initial interface, needed by `delta_check`.
    #[serde(default)]
    pub curvature_bound: Option<f64>,
}

impl MboConfig {
    pub fn new(h: f64, steps: usize) -> Self {
        Self {
            h,
            steps,
            delta_check: false,
            rho: 0.0,
            curvature_bound: None,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    /// Turns on the step-size check for an interface with `sup |A| = bound`.
    pub fn with_delta_check(mut self, bound: f64) -> Self {
        self.delta_check = true;
        self.curvature_bound = Some(bound);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::Config(format!("h must be positive, got {}", self.h)));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::Config(format!("rho must be nonnegative, got {}", self.rho)));
        }
        if self.delta_check {
            let bound = self
                .curvature_bound
                .ok_or_else(|| Error::Config("delta_check needs curvature_bound".into()))?;
            let delta = delta_max(bound);
            if self.h > delta {
                return Err(Error::Precondition(format!(
                    "h = {} exceeds the step-size limit {delta:.3e} for sup|A| = {bound}",
                    self.h
                )));
            }
            let scale = (self.h * self.h.ln().abs()).powf(0.25);
            if self.rho < scale {
                return Err(Error::Precondition(format!(
                    "rho = {} is below (h |ln h|)^(1/4) = {scale:.4}",
                    self.rho
                )));
            }
        }
        Ok(())
    }
}

/// Largest `delta` in `(0, 1/e]` with `bound * (delta |ln delta|)^(1/4) <= 1`.
pub fn delta_max(bound: f64) -> f64 {
    let cap = (-1.0f64).exp();
    if bound <= 0.0 {
        return cap;
    }
    let target = bound.powi(-4);
    let g = |d: f64| d * d.ln().abs();
    if g(cap) <= target {
        return cap;
    }
    // g is increasing on (0, 1/e).
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `1` where `value >= 0`.
pub fn threshold(field: &ScalarField) -> PhaseField {
    let bits = field.values().iter().map(|&v| u8::from(v >= 0.0)).collect();
    PhaseField::new(*field.grid(), bits).expect("bits are 0 or 1")
}

/// One MBO step: diffuse `2 chi - 1` for time `h`, then threshold.
pub fn mbo_step(phase: &PhaseField, h: f64) -> Result<PhaseField> {
    Ok(threshold(&diffuse(&to_pm_one(phase), h)?))
}

/// One MBO step that also returns the diffused field.
pub fn mbo_step_detailed(phase: &PhaseField, h: f64) -> Result<(ScalarField, PhaseField)> {
    let u = diffuse(&to_pm_one(phase), h)?;
    let next = threshold(&u);
    Ok((u, next))
}

/// Sub-cell occupancy of `{u >= 0}` for cells near a sign change of `u`,
/// from `4^dim` samples of the multilinear interpolant per cell.
pub fn occupancy_fractions(u: &ScalarField) -> Vec<(usize, f64)> {
    const SUB: usize = 4;
    let g = *u.grid();
    let dim = g.dim();
    let sign = |i: usize| u.get(i) >= 0.0;
    let near: Vec<Option<(usize, f64)>> = par::collect(g.len(), |i| {
        let s = sign(i);
        let mut boundary = false;
        for a in 0..dim {
            for off in [-1, 1] {
                boundary |= sign(g.neighbor(i, a, off)) != s;
            }
        }
        if !boundary {
            return None;
        }
        let c = g.center(i);
        let hs = g.spacing();
        let total = SUB.pow(dim as u32);
        let mut inside = 0;
        for k in 0..total {
            let mut p = c;
            let mut rest = k;
            for coord in p.iter_mut().take(dim) {
                let s = rest % SUB;
                rest /= SUB;
                *coord += (-0.5 + (s as f64 + 0.5) / SUB as f64) * hs;
            }
            if u.interpolate(&p) >= 0.0 {
                inside += 1;
            }
        }
        Some((i, inside as f64 / total as f64))
    });
    near.into_iter().flatten().collect()
}

/// Diagnostics of one step. Record `k` describes `chi(k h+)`; record 0 is
/// the initial data with zero jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub perimeter: f64,
    pub volume: f64,
    /// `integral |chi(k h+) - chi(k h-)|` with `chi(k h-)` the sub-cell
    /// occupancy of the level-0 set of the diffused field.
    pub jump_volume: f64,
    /// Distance between the interface and the box faces.
    pub clearance: f64,
    pub components: usize,
}

/// Phases `chi(k h+)` for `k = 0..=steps` plus per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub h: f64,
    pub phases: Vec<PhaseField>,
    pub records: Vec<StepRecord>,
    /// Sparse sub-cell occupancy of `chi(k h-)` for `k >= 1`
    /// (index 0 is empty).
    pub pre_threshold: Vec<Vec<(usize, f64)>>,
    /// Step at which the phase became empty, if it did.
    pub extinction_step: Option<usize>,
}

impl Trajectory {
    pub fn extinct(&self) -> bool {
        self.extinction_step.is_some()
    }

    pub fn last(&self) -> &PhaseField {
        self.phases.last().expect("trajectory holds the initial phase")
    }

    pub fn steps_taken(&self) -> usize {
        self.phases.len() - 1
    }
}

/// Read-only view handed to observers after every step.
pub struct StepView<'a> {
    pub step: usize,
    /// Diffused field before thresholding.
    pub diffused: &'a ScalarField,
    pub phase: &'a PhaseField,
    pub record: &'a StepRecord,
}

fn record_of(step: usize, phase: &PhaseField, jump_volume: f64) -> StepRecord {
    StepRecord {
        step,
        perimeter: perimeter(phase),
        volume: phase.volume(),
        jump_volume,
        clearance: phase.clearance(),
        components: phase.components(),
    }
}

pub fn run(phase0: &PhaseField, cfg: &MboConfig) -> Result<Trajectory> {
    run_observed(phase0, cfg, |_| Ok(()))
}

/// Runs the scheme, calling `observer` after every step. Stops early,
/// without error, when the phase becomes empty.
pub fn run_observed<F>(phase0: &PhaseField, cfg: &MboConfig, mut observer: F) -> Result<Trajectory>
where
    F: FnMut(&StepView<'_>) -> Result<()>,
{
    cfg.validate()?;
    let mut traj = Trajectory {
        h: cfg.h,
        phases: vec![phase0.clone()],
        records: vec![record_of(0, phase0, 0.0)],
        pre_threshold: vec![Vec::new()],
        extinction_step: None,
    };
    for step in 1..=cfg.steps {
        let current = traj.last();
        if cfg.rho > 0.0 {
            let clearance = current.clearance();
            if clearance < cfg.rho {
                return Err(Error::ClearanceViolation {
                    step: step - 1,
                    clearance,
                    rho: cfg.rho,
                });
            }
        }
        let (u, next) = mbo_step_detailed(current, cfg.h)?;
        let fractions = occupancy_fractions(&u);
        let cell = next.grid().cell_volume();
        let jump: f64 = fractions
            .iter()
            .map(|&(i, f)| (next.bits()[i] as f64 - f).abs())
            .sum::<f64>()
            * cell;
        let record = record_of(step, &next, jump);
        observer(&StepView {
            step,
            diffused: &u,
            phase: &next,
            record: &record,
        })?;
        let empty = next.is_empty();
        traj.phases.push(next);
        traj.records.push(record);
        traj.pre_threshold.push(fractions);
        if empty {
            traj.extinction_step = Some(step);
            break;
        }
    }
    Ok(traj)
}

/// `sum_k integral |zeta| |chi(k h+) - chi(k h-)|`; `zeta = 1` when no
/// weight is given.
pub fn jump_error(traj: &Trajectory, weight: Option<&ScalarField>) -> Result<f64> {
    let Some(zeta) = weight else {
        return Ok(traj.records.iter().map(|r| r.jump_volume).sum());
    };
    let grid = traj.phases[0].grid();
    grid.check_same(zeta.grid())?;
    let cell = grid.cell_volume();
    let mut total = 0.0;
    for (k, fractions) in traj.pre_threshold.iter().enumerate().skip(1) {
        let bits = traj.phases[k].bits();
        total += fractions
            .iter()
            .map(|&(i, f)| zeta.get(i).abs() * (bits[i] as f64 - f).abs())
            .sum::<f64>()
            * cell;
    }
    Ok(total)
}

/// Volume swept between consecutive phases, `integral |chi_k - chi_{k-1}|`.
pub fn step_displacements(traj: &Trajectory) -> Vec<f64> {
    traj.phases
        .windows(2)
        .map(|w| symmetric_difference_volume(&w[0], &w[1]).expect("same grid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::shape::{indicator_from_shape, Shape};
    use crate::grid::GridSpec;

    #[test]
    fn threshold_ties_go_inside() {
        let g = GridSpec::square(16).unwrap();
        let mut v = vec![-1.0; g.len()];
        v[3] = 0.0;
        let p = threshold(&ScalarField::new(g, v).unwrap());
        assert_eq!(p.count(), 1);
        assert!(p.get(3));
        assert!(threshold(&ScalarField::constant(g, -0.5).unwrap()).is_empty());
    }

    #[test]
    fn erf_profile_thresholds_to_half_space() {
        let g = GridSpec::square(64).unwrap();
        let u = ScalarField::from_fn(g, |p| crate::numerics::erf((0.5 - p[1]) / 0.05)).unwrap();
        let hs = indicator_from_shape(&Shape::half_space(1, 0.5), &g).unwrap();
        assert_eq!(threshold(&u), hs);
    }

    #[test]
    fn half_space_is_stationary() {
        let g = GridSpec::square(128).unwrap();
        let hs = indicator_from_shape(&Shape::half_space(1, 0.5), &g).unwrap();
        let traj = run(&hs, &MboConfig::new(1e-3, 5)).unwrap();
        for r in &traj.records {
            assert!(r.jump_volume <= g.cell_volume());
        }
        assert_eq!(traj.last(), &hs);
    }

    #[test]
    fn tiny_disk_goes_extinct() {
        let g = GridSpec::square(128).unwrap();
        let h: f64 = 1e-3;
        let disk = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.8 * (2.0 * h).sqrt()), &g).unwrap();
        let traj = run(&disk, &MboConfig::new(h, 3)).unwrap();
        assert_eq!(traj.extinction_step, Some(1));
        assert!(traj.last().is_empty());
    }

    #[test]
    fn clearance_violation_reports_step() {
        let g = GridSpec::square(64).unwrap();
        let disk = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.3), &g).unwrap();
        let err = run(&disk, &MboConfig::new(1e-4, 2).with_rho(0.3)).unwrap_err();
        assert!(matches!(err, Error::ClearanceViolation { step: 0, .. }));
    }

    #[test]
    fn delta_limit() {
        // bound * (delta |ln delta|)^(1/4) = 1 at the limit.
        for bound in [3.0, 10.0, 30.0] {
            let d = delta_max(bound);
            assert!((bound * (d * d.ln().abs()).powf(0.25) - 1.0).abs() < 1e-9);
        }
        assert_eq!(delta_max(0.5), (-1.0f64).exp());
        let cfg = MboConfig::new(1e-4, 1).with_rho(0.2).with_delta_check(10.0);
        assert!(matches!(cfg.validate(), Err(Error::Precondition(_))));
        let ok = MboConfig::new(2e-4, 1).with_rho(0.25).with_delta_check(1.0 / 0.3);
        ok.validate().unwrap();
    }

    #[test]
    fn zero_weight_gives_zero_jump_error() {
        let g = GridSpec::square(64).unwrap();
        let disk = indicator_from_shape(&Shape::disk(0.5, 0.5, 0.3), &g).unwrap();
        let traj = run(&disk, &MboConfig::new(1e-3, 3)).unwrap();
        let zero = ScalarField::constant(g, 0.0).unwrap();
        assert_eq!(jump_error(&traj, Some(&zero)).unwrap(), 0.0);
        let one = ScalarField::constant(g, 1.0).unwrap();
        let a = jump_error(&traj, Some(&one)).unwrap();
        let b = jump_error(&traj, None).unwrap();
        assert!((a - b).abs() < 1e-15 * b.max(1.0));
        assert!(b >= 0.0);
    }
}
