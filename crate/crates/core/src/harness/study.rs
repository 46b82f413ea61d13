//! Study configuration and the convergence, stability and topology studies.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fit::{fit_loglog, LogLogFit};
use super::gronwall::{gronwall_envelope, gronwall_phi};
use super::oracle::{exact_sphere_radius, radial_jump_error, radial_mbo_step_oracle, radial_trajectory};
use crate::error::{Error, Result};
use crate::geometry::{curvature_samples_from_derivatives, tangent_ball_radius};
use crate::grid::measure::perimeter_smoothing_time;
use crate::grid::shape::indicator_from_shape;
use crate::grid::{extract_contour, to_pm_one, Contour, GridSpec, PhaseField, Point, Shape};
use crate::heat::{diffuse, spectral_derivatives};
use crate::mbo::{delta_max, jump_error, run_observed, MboConfig, StepView, Trajectory};
use crate::numerics::norm;
use crate::numerics::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Consistency,
    RadiusLaw,
    Stability,
    JumpError,
    Perimeter,
    Topology,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Consistency => "consistency",
            StudyKind::RadiusLaw => "radius-law",
            StudyKind::Stability => "stability",
            StudyKind::JumpError => "jump-error",
            StudyKind::Perimeter => "perimeter",
            StudyKind::Topology => "topology",
        }
    }
}

/// Pass/fail thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gates {
    /// Minimum fitted order of the one-step error.
    pub min_slope: f64,
    /// Relative radius error allowed by the radius-law study.
    pub radius_rel: f64,
    /// Relative error of the mean `|A|` on a circle against the exact law.
    pub curvature_rel: f64,
    /// Relative perimeter error on the finest grid.
    pub perimeter_rel: f64,
    /// Minimum fitted order of the perimeter error in the spacing.
    pub min_perimeter_order: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            min_slope: 1.4,
            radius_rel: 0.02,
            curvature_rel: 0.05,
            perimeter_rel: 0.01,
            min_perimeter_order: 1.0,
        }
    }
}

/// Where reports go; the command line may override these.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub snapshots: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    pub dim: usize,
    pub extent: f64,
    pub shape: Shape,
    /// Grid ladder (cells per axis).
    pub grids: Vec<usize>,
    /// Time-step ladder.
    pub h_values: Vec<f64>,
    pub steps: usize,
    /// Physical end time for studies that compare runs at several `h`.
    pub horizon: f64,
    pub seed: u64,
    pub gates: Gates,
    /// Leading steps used to fit growth constants in the stability study.
    pub fit_steps: usize,
    /// `D` of the Gronwall function; `1 / sup|A_0|^2` when absent.
    pub gronwall_d: Option<f64>,
    /// Constant of the graph-patch radius `1 / (c_star sup|A|)`.
    pub c_star: f64,
    /// Diffusion time applied to each phase before measuring its interface;
    /// `4 h` when absent.
    pub measure_time: Option<f64>,
    /// Reject time steps above the step-size limit for the shape's
    /// `sup |A|` instead of only reporting them.
    pub enforce_step_condition: bool,
    pub output: OutputPaths,
}

impl StudyConfig {
    /// Default configuration of each study, sized for a desktop.
    pub fn defaults(study: StudyKind) -> Self {
        let mut cfg = Self {
            study,
            dim: 2,
            extent: 1.0,
            shape: Shape::disk(0.5, 0.5, 0.3),
            grids: vec![512],
            h_values: vec![2e-4],
            steps: 50,
            horizon: 0.01,
            seed: 0,
            gates: Gates::default(),
            fit_steps: 10,
            gronwall_d: None,
            c_star: 1.0,
            measure_time: None,
            enforce_step_condition: false,
            output: OutputPaths::default(),
        };
        match study {
            StudyKind::Consistency => cfg.h_values = vec![1e-3, 3e-4, 1e-4, 3e-5],
            StudyKind::RadiusLaw => {}
            StudyKind::JumpError => {
                cfg.h_values = vec![4e-4, 2e-4, 1e-4];
                cfg.grids = vec![];
            }
            StudyKind::Perimeter => cfg.grids = vec![128, 256, 512, 1024],
            StudyKind::Stability => {
                cfg.shape = Shape::ellipse(0.5, 0.5, 0.4, 0.2);
                cfg.h_values = vec![1e-4];
                cfg.steps = 100;
            }
            StudyKind::Topology => {
                // A 3D neck pinches under the flow itself; planar curves never do.
                cfg.dim = 3;
                cfg.shape = Shape::Dumbbell {
                    center: [0.5; 3],
                    lobe_radius: 0.15,
                    separation: 0.44,
                    neck_half_width: 0.05,
                };
                cfg.grids = vec![96];
                cfg.h_values = vec![5e-4];
                cfg.steps = 10;
            }
        }
        cfg
    }

    /// Parses a JSON config; absent fields take the defaults of its study.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let study: StudyKind = serde_json::from_value(
            value
                .get("study")
                .cloned()
                .ok_or_else(|| Error::Config("config needs a \"study\" field".into()))?,
        )
        .map_err(|e| Error::Config(format!("unknown study: {e}")))?;
        let mut merged = serde_json::to_value(Self::defaults(study))?;
        merge(&mut merged, value);
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.dim == 2 || self.dim == 3) {
            return fail(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if let Some(h) = self.h_values.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return fail(format!("time steps must be positive, got {h}"));
        }
        for &n in &self.grids {
            GridSpec::new(self.dim, n, self.extent).map_err(|e| Error::Config(e.to_string()))?;
        }
        let ladder = |name: &str, len: usize| {
            if len < 3 {
                Err(Error::Config(format!("the {name} ladder needs at least 3 entries for a slope fit, got {len}")))
            } else {
                Ok(())
            }
        };
        match self.study {
            StudyKind::Consistency | StudyKind::JumpError => {
                ladder("h", self.h_values.len())?;
                self.ball()?;
            }
            StudyKind::Perimeter => ladder("grid", self.grids.len())?,
            StudyKind::RadiusLaw | StudyKind::Stability | StudyKind::Topology => {
                if self.grids.is_empty() || self.h_values.is_empty() || self.steps == 0 {
                    return fail(format!("{} needs a grid, a time step and steps >= 1", self.study.name()));
                }
            }
        }
        if self.study == StudyKind::RadiusLaw {
            self.ball()?;
        }
        if self.study == StudyKind::JumpError && !(self.horizon > 0.0) {
            return fail("horizon must be positive".into());
        }
        if self.study == StudyKind::Stability && self.fit_steps == 0 {
            return fail("fit_steps must be at least 1".into());
        }
        if self.enforce_step_condition {
            if let Some(bound) = self.shape.max_curvature(self.dim) {
                let limit = delta_max(bound);
                if let Some(h) = self.h_values.iter().find(|&&h| h > limit) {
                    return fail(format!("h = {h} exceeds the step-size limit {limit:.3e} for sup|A| = {bound}"));
                }
            }
        }
        Ok(())
    }

    fn ball(&self) -> Result<(crate::grid::Point, f64)> {
        match self.shape {
            Shape::Ball { center, radius } => Ok((center, radius)),
            _ => Err(Error::Config(format!("{} needs a ball shape", self.study.name()))),
        }
    }

    fn grid(&self, cells: usize) -> Result<GridSpec> {
        GridSpec::new(self.dim, cells, self.extent)
    }

    /// Whether every time step satisfies the step-size limit for the
    /// shape's `sup |A|`; `None` when that bound is not known.
    pub fn step_condition_holds(&self) -> Option<bool> {
        let bound = self.shape.max_curvature(self.dim)?;
        let limit = delta_max(bound);
        Some(self.h_values.iter().all(|&h| h <= limit))
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                // Shapes are replaced whole so fields of another variant never leak in.
                if k == "shape" {
                    b.insert(k, v);
                } else {
                    merge(b.entry(k).or_insert(Value::Null), v);
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// One gated (or purely reported) comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    /// Reported checks do not affect the overall verdict.
    pub gated: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
            gated: true,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value >= limit,
            gated: true,
        }
    }

    pub fn reported(mut self) -> Self {
        self.gated = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub x: f64,
    pub y: f64,
    pub aux: Vec<f64>,
}

/// Rows of `(x, y, aux...)`, an optional log-log fit of `y` against `x`,
/// and the checks that decide pass/fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub study: StudyKind,
    pub x_label: String,
    pub y_label: String,
    pub columns: Vec<String>,
    /// Sorted by increasing `x`.
    pub rows: Vec<ReportRow>,
    pub fit: Option<LogLogFit>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// JSON summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary<'a> {
    pub study: &'a str,
    pub slope: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub pass: bool,
    pub checks: &'a [Check],
    pub metrics: &'a BTreeMap<String, f64>,
}

impl ConvergenceReport {
    fn new(study: StudyKind, x_label: &str, y_label: &str, columns: &[&str]) -> Self {
        Self {
            study,
            x_label: x_label.into(),
            y_label: y_label.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fit: None,
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            pass: false,
        }
    }

    fn push(&mut self, x: f64, y: f64, aux: Vec<f64>) {
        debug_assert_eq!(aux.len(), self.columns.len());
        self.rows.push(ReportRow { x, y, aux });
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    fn finish(mut self) -> Self {
        self.rows.sort_by(|a, b| a.x.total_cmp(&b.x));
        self.pass = self.checks.iter().all(|c| c.pass || !c.gated);
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.aux[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "{},{}", self.x_label, self.y_label)?;
        for c in &self.columns {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for r in &self.rows {
            write!(w, "{},{}", r.x, r.y)?;
            for v in &r.aux {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn summary(&self) -> ReportSummary<'_> {
        ReportSummary {
            study: self.study.name(),
            slope: self.fit.map(|f| f.slope),
            ci: self.fit.map(|f| f.ci),
            pass: self.pass,
            checks: &self.checks,
            metrics: &self.metrics,
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("plain data serializes")
    }
}

/// Runs the study named in the config.
pub fn run_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    run_study_with(cfg, |_| Ok(()))
}

/// [`run_study`], handing every step of the single-run studies
/// (stability, topology) to `snapshot`.
pub fn run_study_with(
    cfg: &StudyConfig,
    snapshot: impl FnMut(&StepView<'_>) -> Result<()>,
) -> Result<ConvergenceReport> {
    cfg.validate()?;
    match cfg.study {
        StudyKind::Consistency => consistency_study(cfg),
        StudyKind::RadiusLaw => radius_law_study(cfg),
        StudyKind::Stability => stability_study_with(cfg, snapshot),
        StudyKind::JumpError => jump_error_study(cfg),
        StudyKind::Perimeter => perimeter_study(cfg),
        StudyKind::Topology => topology_study_with(cfg, snapshot),
    }
}

/// One exact MBO step on a ball against the exact flow over the same time.
pub fn consistency_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    let (_, r0) = cfg.ball()?;
    let n = cfg.dim - 1;
    let b0 = (n as f64).sqrt() / r0;
    let mut report = ConvergenceReport::new(
        StudyKind::Consistency,
        "h",
        "error",
        &["oracle_radius", "exact_radius", "error_over_b0sq_h32"],
    );
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for &h in &cfg.h_values {
        let rho = radial_mbo_step_oracle(r0, h, cfg.dim)?
            .radius()
            .ok_or_else(|| Error::Precondition(format!("ball of radius {r0} vanishes in one step of {h}")))?;
        let exact = exact_sphere_radius(r0, n, h)?;
        let err = (rho - exact).abs();
        report.push(h, err, vec![rho, exact, err / (b0 * b0 * h.powf(1.5))]);
        hs.push(h);
        errs.push(err);
    }
    let fit = fit_loglog(&hs, &errs, cfg.seed)?;
    report.fit = Some(fit);
    report.checks.push(Check::at_least("slope", fit.slope, cfg.gates.min_slope));
    report.metric("slope_ci_low", fit.ci.0);
    report.metric("slope_ci_high", fit.ci.1);
    Ok(report.finish())
}

/// Equivalent radius of a phase from the contour of its lightly smoothed
/// indicator.
pub fn measured_radius(phase: &PhaseField) -> Result<f64> {
    let contour = smoothed_contour(phase)?;
    let v = contour.enclosed_measure();
    Ok(if phase.grid().dim() == 2 {
        (v / PI).sqrt()
    } else {
        (3.0 * v / (4.0 * PI)).cbrt()
    })
}

fn smoothed_contour(phase: &PhaseField) -> Result<Contour> {
    let t = perimeter_smoothing_time(phase.grid());
    let smooth = diffuse(&phase.to_indicator(), t)?;
    extract_contour(&smooth, 0.5)
}

/// Grid runs on a ball against the exact radius law and the exact radial
/// iteration.
pub fn radius_law_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    let (center, r0) = cfg.ball()?;
    let n = cfg.dim - 1;
    let mut report = ConvergenceReport::new(
        StudyKind::RadiusLaw,
        "h",
        "relative_error",
        &[
            "cells",
            "steps",
            "measured_radius",
            "exact_radius",
            "oracle_radius",
            "grid_minus_oracle_in_cells",
            "seconds",
        ],
    );
    let mut worst = 0.0f64;
    for &cells in &cfg.grids {
        let grid = cfg.grid(cells)?;
        for &h in &cfg.h_values {
            let start = Instant::now();
            let phase0 = indicator_from_shape(&Shape::Ball { center, radius: r0 }, &grid)?;
            let traj = crate::mbo::run(&phase0, &MboConfig::new(h, cfg.steps))?;
            let secs = start.elapsed().as_secs_f64();
            let t = h * traj.steps_taken() as f64;
            let exact = exact_sphere_radius(r0, n, t)?;
            let measured = if traj.extinct() { 0.0 } else { measured_radius(traj.last())? };
            let oracle = *radial_trajectory(r0, h, cfg.steps, cfg.dim)?.last().expect("nonempty");
            let rel = (measured - exact).abs() / exact;
            worst = worst.max(rel);
            report.push(
                h,
                rel,
                vec![
                    cells as f64,
                    traj.steps_taken() as f64,
                    measured,
                    exact,
                    oracle,
                    (measured - oracle) / grid.spacing(),
                    secs,
                ],
            );
        }
    }
    report.checks.push(Check::at_most("radius_relative_error", worst, cfg.gates.radius_rel));
    Ok(report.finish())
}

/// Accumulated jump error of the exact radial iteration over a fixed
/// horizon, for each `h`; optionally the grid counterpart.
pub fn jump_error_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    let (center, r0) = cfg.ball()?;
    let mut columns = vec!["steps"];
    if !cfg.grids.is_empty() {
        columns.push("grid_jump_error");
    }
    let mut report = ConvergenceReport::new(StudyKind::JumpError, "h", "jump_error", &columns);
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for &h in &cfg.h_values {
        let steps = (cfg.horizon / h).round().max(1.0) as usize;
        let radii = radial_trajectory(r0, h, steps, cfg.dim)?;
        let e = radial_jump_error(&radii, h, cfg.dim)?;
        let mut aux = vec![steps as f64];
        if let Some(&cells) = cfg.grids.first() {
            let grid = cfg.grid(cells)?;
            let phase0 = indicator_from_shape(&Shape::Ball { center, radius: r0 }, &grid)?;
            aux.push(jump_error(&crate::mbo::run(&phase0, &MboConfig::new(h, steps))?, None)?);
        }
        report.push(h, e, aux);
        hs.push(h);
        errs.push(e);
    }
    let fit = fit_loglog(&hs, &errs, cfg.seed)?;
    report.fit = Some(fit);
    let finished = report.finish();
    let mut report = finished;
    // Rows are sorted by h; the error must grow with h.
    let increases = report.rows.windows(2).filter(|w| !(w[0].y < w[1].y)).count();
    report.checks.push(Check::at_most("non_monotone_pairs", increases as f64, 0.0));
    if report.columns.len() > 1 {
        let grid_e = report.column("grid_jump_error").expect("column present");
        let bad = grid_e.windows(2).filter(|w| !(w[0] < w[1])).count();
        report.checks.push(Check::at_most("grid_non_monotone_pairs", bad as f64, 0.0).reported());
    }
    Ok(report.finish())
}

/// Perimeter (surface area) of a shape where it is known.
pub fn exact_perimeter(shape: &Shape, dim: usize) -> Option<f64> {
    match *shape {
        Shape::Ball { radius, .. } => Some(if dim == 2 {
            2.0 * PI * radius
        } else {
            4.0 * PI * radius * radius
        }),
        Shape::Cuboid { half_widths: w, .. } => Some(if dim == 2 {
            4.0 * (w[0] + w[1])
        } else {
            8.0 * (w[0] * w[1] + w[1] * w[2] + w[0] * w[2])
        }),
        Shape::Ellipsoid { semi_axes: s, .. } if dim == 2 => integrate(
            |th: f64| (s[0] * s[0] * th.sin().powi(2) + s[1] * s[1] * th.cos().powi(2)).sqrt(),
            0.0,
            2.0 * PI,
            QuadOptions::default(),
        )
        .ok(),
        _ => None,
    }
}

/// Perimeter of the shape's indicator under grid refinement.
pub fn perimeter_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    let exact = exact_perimeter(&cfg.shape, cfg.dim)
        .ok_or_else(|| Error::Config("perimeter study needs a shape with known perimeter".into()))?;
    let mut report = ConvergenceReport::new(StudyKind::Perimeter, "spacing", "relative_error", &["cells", "perimeter", "exact"]);
    let mut xs = Vec::new();
    let mut errs = Vec::new();
    for &cells in &cfg.grids {
        let grid = cfg.grid(cells)?;
        let p = crate::grid::perimeter(&indicator_from_shape(&cfg.shape, &grid)?);
        let rel = (p - exact).abs() / exact;
        report.push(grid.spacing(), rel, vec![cells as f64, p, exact]);
        xs.push(grid.spacing());
        errs.push(rel);
    }
    let fit = fit_loglog(&xs, &errs, cfg.seed)?;
    report.fit = Some(fit);
    let report = report.finish();
    let finest = report.rows[0].y;
    let mut report = report;
    report.checks.push(Check::at_most("finest_relative_error", finest, cfg.gates.perimeter_rel));
    report.checks.push(Check::at_least("order", fit.slope, cfg.gates.min_perimeter_order));
    Ok(report.finish())
}

/// Per-step geometry of the interface produced by a grid run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepGeometry {
    pub step: usize,
    /// `max |A|` over the measured interface.
    pub max_curvature: f64,
    /// Arithmetic mean of `|A|` over the interface samples.
    pub mean_curvature: f64,
    pub ball_radius: f64,
    pub perimeter: f64,
    pub loops: usize,
}

/// What to measure on each phase and how. The interface is taken as the
/// level-0 set of the phase's `+-1` field diffused for `smoothing`, which
/// removes the grid staircase while moving the interface only by
/// `O(smoothing * |A|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurements {
    pub smoothing: f64,
    pub curvature: bool,
    pub ball: bool,
    pub c_star: f64,
}

impl Measurements {
    pub fn loops_only(smoothing: f64) -> Self {
        Self {
            smoothing,
            curvature: false,
            ball: false,
            c_star: 1.0,
        }
    }

    pub fn all(smoothing: f64, c_star: f64) -> Self {
        Self {
            smoothing,
            curvature: true,
            ball: true,
            c_star,
        }
    }
}

/// Curvature, tangent-ball radius and loop count of a phase's interface;
/// skipped quantities are NaN.
pub fn phase_geometry(step: usize, phase: &PhaseField, perimeter: f64, what: Measurements) -> Result<StepGeometry> {
    let u = diffuse(&to_pm_one(phase), what.smoothing)?;
    let contour = extract_contour(&u, 0.0)?;
    let mut geo = StepGeometry {
        step,
        max_curvature: f64::NAN,
        mean_curvature: f64::NAN,
        ball_radius: f64::NAN,
        perimeter,
        loops: contour.loop_count(),
    };
    if !(what.curvature || what.ball) {
        return Ok(geo);
    }
    let (grads, hess) = spectral_derivatives(&u)?;
    let samples = curvature_samples_from_derivatives(&grads, &hess, &contour)?;
    if samples.is_empty() {
        return Err(Error::EmptySet(format!("no interface samples at step {step}")));
    }
    geo.max_curvature = samples.iter().fold(0.0f64, |a, s| a.max(s.weingarten_norm));
    geo.mean_curvature = samples.iter().map(|s| s.weingarten_norm).sum::<f64>() / samples.len() as f64;
    if what.ball {
        let spacing = phase.grid().spacing();
        let fine = contour.resampled(spacing)?;
        let normals: Vec<Point> = fine
            .vertices()
            .iter()
            .map(|p| {
                let mut n = [0.0; 3];
                for (a, g) in grads.iter().enumerate() {
                    n[a] = -g.interpolate(p);
                }
                let len = norm(&n);
                n.map(|c| c / len)
            })
            .collect();
        let max_kappa = samples
            .iter()
            .flat_map(|s| s.kappas.iter())
            .fold(0.0f64, |a, k| a.max(k.abs()));
        let far = tangent_ball_radius(&fine, &normals, BALL_CUTOFF_CELLS * spacing);
        geo.ball_radius = far.min(1.0 / (what.c_star * max_kappa));
    }
    Ok(geo)
}

/// Vertices closer than this many cells are left to the curvature bound
/// in the tangent-ball radius.
const BALL_CUTOFF_CELLS: f64 = 8.0;

/// Runs the scheme and records [`StepGeometry`] for the initial phase and
/// after every step that leaves a nonempty phase.
pub fn observed_run(
    phase0: &PhaseField,
    mbo: &MboConfig,
    what: Measurements,
    mut snapshot: impl FnMut(&StepView<'_>) -> Result<()>,
) -> Result<(Trajectory, Vec<StepGeometry>)> {
    let mut geo = vec![phase_geometry(0, phase0, crate::grid::perimeter(phase0), what)?];
    let traj = run_observed(phase0, mbo, |view| {
        snapshot(view)?;
        if !view.phase.is_empty() {
            geo.push(phase_geometry(view.step, view.phase, view.record.perimeter, what)?);
        }
        Ok(())
    })?;
    Ok((traj, geo))
}

/// Curvature growth against the Gronwall envelope, tangent-ball erosion,
/// and the one-step perimeter bound.
pub fn stability_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    stability_study_with(cfg, |_| Ok(()))
}

pub fn stability_study_with(
    cfg: &StudyConfig,
    snapshot: impl FnMut(&StepView<'_>) -> Result<()>,
) -> Result<ConvergenceReport> {
    let grid = cfg.grid(cfg.grids[0])?;
    let h = cfg.h_values[0];
    let phase0 = indicator_from_shape(&cfg.shape, &grid)?;
    let tau = cfg.measure_time.unwrap_or(4.0 * h);
    let (traj, geo) = observed_run(&phase0, &MboConfig::new(h, cfg.steps), Measurements::all(tau, cfg.c_star), snapshot)?;
    if geo.len() <= cfg.fit_steps + 1 {
        return Err(Error::Precondition(format!(
            "only {} steps survived; the fit needs more than {}",
            geo.len() - 1,
            cfg.fit_steps
        )));
    }
    let x0 = geo[0].max_curvature;
    let m0 = geo[0].ball_radius;
    let d = cfg.gronwall_d.unwrap_or(1.0 / (x0 * x0));
    let phi0 = gronwall_phi(x0, d)?;
    let fit = &geo[1..=cfg.fit_steps];
    let t_of = |g: &StepGeometry| g.step as f64 * h;
    let mut c_hat = 0.0f64;
    let mut c_ball = 0.0f64;
    for g in fit {
        c_hat = c_hat.max((gronwall_phi(g.max_curvature, d)? - phi0) / t_of(g));
        c_ball = c_ball.max((m0 - g.ball_radius) / t_of(g));
    }
    let perims: Vec<f64> = traj.records.iter().map(|r| r.perimeter).collect();
    let growth = |k: usize| (perims[k] / perims[k - 1] - 1.0) / h;
    let c_perim = (1..=cfg.fit_steps.min(perims.len() - 1)).map(growth).fold(0.0f64, f64::max);

    let circle = matches!(cfg.shape, Shape::Ball { .. });
    let mut columns = vec!["step", "envelope", "mean_curvature", "ball_radius", "perimeter"];
    if circle {
        columns.push("exact_curvature");
    }
    let mut report = ConvergenceReport::new(StudyKind::Stability, "t", "max_curvature", &columns);
    let mut envelope_violations = 0usize;
    let mut ball_violations = 0usize;
    let mut worst_circle = 0.0f64;
    let slack = grid.spacing();
    for g in &geo {
        let t = t_of(g);
        let env = gronwall_envelope(x0, c_hat, t, d)?;
        let mut aux = vec![g.step as f64, env, g.mean_curvature, g.ball_radius, g.perimeter];
        if g.step > cfg.fit_steps {
            if g.max_curvature > env {
                envelope_violations += 1;
            }
            if g.ball_radius < m0 - c_ball * t - slack {
                ball_violations += 1;
            }
        }
        if let Shape::Ball { radius, .. } = cfg.shape {
            let n = cfg.dim - 1;
            let exact = (n as f64).sqrt() / exact_sphere_radius(radius, n, t + tau)?;
            worst_circle = worst_circle.max((g.mean_curvature - exact).abs() / exact);
            aux.push(exact);
        }
        report.push(t, g.max_curvature, aux);
    }
    let perimeter_violations = (cfg.fit_steps + 1..perims.len())
        .filter(|&k| perims[k] > (1.0 + c_perim * h) * perims[k - 1] * (1.0 + 1e-12))
        .count();
    let max_growth = (1..perims.len()).map(growth).fold(f64::NEG_INFINITY, f64::max);
    report.metric("initial_curvature", x0);
    if let Some(a) = cfg.shape.max_curvature(cfg.dim) {
        report.metric("exact_initial_curvature", a);
    }
    report.metric("measure_time", tau);
    report.metric("gronwall_d", d);
    report.metric("fitted_c", c_hat);
    report.metric("fitted_ball_erosion", c_ball);
    report.metric("fitted_perimeter_growth", c_perim);
    report.metric("max_perimeter_growth", max_growth);
    report.metric("initial_ball_radius", m0);
    report.metric("steps", traj.steps_taken() as f64);
    if let Some(ok) = cfg.step_condition_holds() {
        report.metric("step_condition_holds", ok as u8 as f64);
    }
    report.checks.push(Check::at_most("envelope_violations", envelope_violations as f64, 0.0));
    report.checks.push(Check::at_most("ball_erosion_violations", ball_violations as f64, 0.0));
    report.checks.push(Check::at_most("perimeter_bound_violations", perimeter_violations as f64, 0.0));
    if circle {
        report.checks.push(Check::at_most("circle_curvature_relative_error", worst_circle, cfg.gates.curvature_rel));
    }
    Ok(report.finish())
}

/// Loop count of the interface per step; passes when it goes from one
/// loop to two.
pub fn topology_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    topology_study_with(cfg, |_| Ok(()))
}

pub fn topology_study_with(
    cfg: &StudyConfig,
    snapshot: impl FnMut(&StepView<'_>) -> Result<()>,
) -> Result<ConvergenceReport> {
    let grid = cfg.grid(cfg.grids[0])?;
    let h = cfg.h_values[0];
    let phase0 = indicator_from_shape(&cfg.shape, &grid)?;
    let (traj, geo) = observed_run(&phase0, &MboConfig::new(h, cfg.steps), Measurements::loops_only(cfg.measure_time.unwrap_or(h)), snapshot)?;
    let mut report = ConvergenceReport::new(StudyKind::Topology, "t", "loops", &["step", "components", "perimeter"]);
    for g in &geo {
        let comps = traj.records[g.step].components;
        report.push(g.step as f64 * h, g.loops as f64, vec![g.step as f64, comps as f64, g.perimeter]);
    }
    let initial = crate::grid::extract_contour(&phase0.to_indicator(), 0.5)?.loop_count();
    let transition = geo
        .iter()
        .scan(initial, |prev, g| {
            let hit = *prev == 1 && g.loops == 2;
            *prev = g.loops;
            Some((g.step, hit))
        })
        .find(|&(_, hit)| hit)
        .map(|(s, _)| s);
    report.metric("initial_loops", initial as f64);
    report.metric("transition_step", transition.map_or(-1.0, |s| s as f64));
    report.metric("steps", traj.steps_taken() as f64);
    report.checks.push(Check::at_least("pinched", transition.is_some() as u8 as f64, 1.0));
    Ok(report.finish())
}

/// Writes the CSV and JSON summary into `dir` as `<study>.csv` and
/// `<study>.json` (or to the configured paths).
pub fn write_report(report: &ConvergenceReport, dir: &Path, paths: &OutputPaths) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv = paths.csv.clone().unwrap_or_else(|| dir.join(format!("{}.csv", report.study.name())));
    let json = paths.json.clone().unwrap_or_else(|| dir.join(format!("{}.json", report.study.name())));
    std::fs::write(&csv, report.csv_string())?;
    std::fs::write(&json, report.summary_json() + "\n")?;
    Ok((csv, json))
}

/// Writes `step_NNNNN.pgm` for one phase; 3D phases are cut at the
/// middle plane of the last axis.
pub fn phase_snapshot(dir: &Path, step: usize, phase: &PhaseField) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("step_{step:05}.pgm"));
    let g = phase.grid();
    if g.dim() == 2 {
        return crate::grid::io::write_pgm(path, phase);
    }
    let n = g.cells_per_axis();
    let plane = GridSpec::new(2, n, g.extent())?;
    let bits = (0..plane.len())
        .map(|i| {
            let [a, b, _] = plane.unravel(i);
            phase.get(g.ravel([a, b, n / 2])) as u8
        })
        .collect();
    crate::grid::io::write_pgm(path, &PhaseField::new(plane, bits)?)
}
