use wasm_bindgen::prelude::*;

use threshold_dynamics::grid::shape::indicator_from_shape;
use threshold_dynamics::harness::{exact_sphere_radius, radial_mbo_step_oracle};
use threshold_dynamics::mbo::mbo_step;
use threshold_dynamics::{GridSpec, PhaseField, Shape};

fn js(e: threshold_dynamics::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn preset(name: &str) -> Result<Shape, JsValue> {
    Ok(match name {
        "disk" => Shape::disk(0.5, 0.5, 0.3),
        "ellipse" => Shape::ellipse(0.5, 0.5, 0.4, 0.2),
        "square" => Shape::Cuboid { center: [0.5, 0.5, 0.0], half_widths: [0.25, 0.25, 0.0] },
        "dumbbell" => Shape::Dumbbell {
            center: [0.5, 0.5, 0.0],
            lobe_radius: 0.15,
            separation: 0.44,
            neck_half_width: 0.02,
        },
        _ => return Err(JsValue::from_str("unknown shape")),
    })
}

/// A phase on the unit square evolving under the MBO scheme.
#[wasm_bindgen]
pub struct Simulation {
    grid: GridSpec,
    bits: Vec<u8>,
    h: f64,
    steps: usize,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(shape: &str, cells: usize, h: f64) -> Result<Simulation, JsValue> {
        let grid = GridSpec::square(cells).map_err(js)?;
        let phase = indicator_from_shape(&preset(shape)?, &grid).map_err(js)?;
        Ok(Simulation { grid, bits: phase.bits().to_vec(), h, steps: 0 })
    }

    pub fn set_h(&mut self, h: f64) {
        self.h = h;
    }

    /// Adds (or erases) a disk of cells around `(x, y)` in unit coordinates.
    pub fn paint(&mut self, x: f64, y: f64, radius: f64, add: bool) {
        for i in 0..self.grid.len() {
            let p = self.grid.center(i);
            if (p[0] - x).powi(2) + (p[1] - y).powi(2) <= radius * radius {
                self.bits[i] = add as u8;
            }
        }
    }

    pub fn step(&mut self, n: usize) -> Result<(), JsValue> {
        let mut phase = self.phase()?;
        for _ in 0..n {
            phase = mbo_step(&phase, self.h).map_err(js)?;
            self.steps += 1;
        }
        self.bits = phase.bits().to_vec();
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.h
    }

    pub fn area(&self) -> f64 {
        self.bits.iter().map(|&b| b as f64).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn components(&self) -> Result<usize, JsValue> {
        Ok(self.phase()?.components())
    }

    /// RGBA pixels, row 0 at the top (largest y).
    pub fn pixels(&self) -> Vec<u8> {
        let n = self.grid.cells_per_axis();
        let mut out = Vec::with_capacity(4 * n * n);
        for row in 0..n {
            for i in 0..n {
                let inside = self.bits[self.grid.ravel([i, n - 1 - row, 0])] == 1;
                out.extend_from_slice(if inside { &[31, 78, 121, 255] } else { &[245, 245, 240, 255] });
            }
        }
        out
    }

    fn phase(&self) -> Result<PhaseField, JsValue> {
        PhaseField::new(self.grid, self.bits.clone()).map_err(js)
    }
}

/// Radius after one exact MBO step on a disk, or `NaN` at extinction.
#[wasm_bindgen]
pub fn oracle_step(r0: f64, h: f64) -> Result<f64, JsValue> {
    // Disks with r0^2 <= h vanish in one step (the threshold is 4 h ln 2).
    if r0 > 0.0 && h >= r0 * r0 {
        return Ok(f64::NAN);
    }
    let step = radial_mbo_step_oracle(r0, h, 2).map_err(js)?;
    Ok(step.radius().unwrap_or(f64::NAN))
}

/// Radius of a circle after time `t` of curvature flow.
#[wasm_bindgen]
pub fn exact_radius(r0: f64, t: f64) -> Result<f64, JsValue> {
    exact_sphere_radius(r0, 1, t).map_err(js)
}
