//! Least-squares slopes on log-log data with bootstrap intervals.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RESAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95 % percentile bootstrap interval for the slope.
    pub ci: (f64, f64),
}

fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Fits `log err = slope log x + intercept`.
pub fn fit_loglog(xs: &[f64], errs: &[f64], seed: u64) -> Result<LogLogFit> {
    if xs.len() != errs.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least two rows, got {}", xs.len())));
    }
    if let Some(e) = errs.iter().chain(xs).find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::DegenerateFit(format!("nonpositive value {e} cannot be fitted on log axes")));
    }
    if errs.iter().all(|&e| e == errs[0]) {
        return Err(Error::DegenerateFit("all errors are equal".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|v| v.ln()).collect();
    let (slope, intercept) =
        least_squares(&lx, &ly).ok_or_else(|| Error::DegenerateFit("all abscissae are equal".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = lx.len();
    let mut slopes = Vec::with_capacity(RESAMPLES);
    let (mut bx, mut by) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..RESAMPLES {
        for k in 0..n {
            let j = rng.gen_range(0..n);
            bx[k] = lx[j];
            by[k] = ly[j];
        }
        if let Some((s, _)) = least_squares(&bx, &by) {
            slopes.push(s);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let ci = if slopes.is_empty() {
        (slope, slope)
    } else {
        let at = |q: f64| slopes[((q * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
        (at(0.025), at(0.975))
    };
    Ok(LogLogFit { slope, intercept, ci })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [1e-3, 3e-4, 1e-4, 3e-5];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 7.0 * x.powf(1.5)).collect();
        let f = fit_loglog(&xs, &ys, 1).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-10);
        assert!((f.ci.0 - 1.5).abs() < 1e-10 && (f.ci.1 - 1.5).abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_loglog(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5], 0).is_err());
        assert!(fit_loglog(&[1.0, 2.0, 3.0], &[0.5, 0.0, 0.1], 0).is_err());
        assert!(fit_loglog(&[2.0, 2.0, 2.0], &[0.5, 0.4, 0.1], 0).is_err());
    }

    #[test]
    fn bootstrap_is_seeded() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let ys = [1.0, 4.4, 15.0, 70.0, 250.0];
        assert_eq!(fit_loglog(&xs, &ys, 9).unwrap(), fit_loglog(&xs, &ys, 9).unwrap());
        let f = fit_loglog(&xs, &ys, 9).unwrap();
        assert!(f.ci.0 <= f.slope && f.slope <= f.ci.1);
    }
}
