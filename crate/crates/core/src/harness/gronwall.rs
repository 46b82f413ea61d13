//! `Phi(x) = integral_1^x ds / (s + D s^3)` and the curvature envelope it
//! generates.

use crate::error::{Error, Result};

/// `Phi(x) = ln x - ln((1 + D x^2) / (1 + D)) / 2`.
pub fn gronwall_phi(x: f64, d: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Precondition(format!("Phi needs x > 0, got {x}")));
    }
    if !(d >= 0.0) {
        return Err(Error::Precondition(format!("Phi needs D >= 0, got {d}")));
    }
    Ok(x.ln() - 0.5 * ((d * x * x).ln_1p() - d.ln_1p()))
}

/// Supremum of `Phi`; infinite when `D = 0`.
pub fn gronwall_phi_sup(d: f64) -> f64 {
    if d == 0.0 {
        f64::INFINITY
    } else {
        0.5 * ((1.0 + d) / d).ln()
    }
}

/// Inverse of [`gronwall_phi`] by bisection to `1e-12` relative; infinite
/// when `y` is at or beyond the supremum.
pub fn gronwall_phi_inv(y: f64, d: f64) -> Result<f64> {
    if !(d >= 0.0) || y.is_nan() {
        return Err(Error::Precondition(format!("bad arguments y = {y}, D = {d}")));
    }
    if y >= gronwall_phi_sup(d) {
        return Ok(f64::INFINITY);
    }
    let phi = |x: f64| gronwall_phi(x, d).expect("positive argument");
    let (mut lo, mut hi) = (1.0, 1.0);
    while phi(lo) > y {
        lo *= 0.5;
    }
    while phi(hi) < y {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Phi^-1(Phi(x0) + c t)`.
pub fn gronwall_envelope(x0: f64, c: f64, t: f64, d: f64) -> Result<f64> {
    gronwall_phi_inv(gronwall_phi(x0, d)? + c * t, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::{integrate, QuadOptions};

    #[test]
    fn phi_basics() {
        assert_eq!(gronwall_phi(1.0, 0.7).unwrap(), 0.0);
        assert!((gronwall_phi(3.5, 0.0).unwrap() - 3.5f64.ln()).abs() < 1e-15);
        assert!(gronwall_phi(0.0, 1.0).is_err());
        let x = 4.2;
        let d = 0.3;
        let q = integrate(|s| 1.0 / (s + d * s * s * s), 1.0, x, QuadOptions::default()).unwrap();
        assert!((q - gronwall_phi(x, d).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn inverse_round_trip() {
        for &(x, d) in &[(0.01, 0.5), (1.0, 0.0), (7.3, 2.0), (40.0, 1e-3), (1e3, 0.0)] {
            let y = gronwall_phi(x, d).unwrap();
            let back = gronwall_phi_inv(y, d).unwrap();
            assert!((back - x).abs() < 1e-10 * x.max(1.0), "{x} {d}: {back}");
        }
        assert_eq!(gronwall_phi_inv(gronwall_phi_sup(1.0), 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn envelope_is_monotone_in_time() {
        let a = gronwall_envelope(10.0, 5.0, 0.001, 0.01).unwrap();
        let b = gronwall_envelope(10.0, 5.0, 0.002, 0.01).unwrap();
        assert!(10.0 < a && a < b);
    }
}
