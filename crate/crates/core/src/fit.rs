//! Exponential decay fits.

use serde::Serialize;

/// y ≈ prefactor · e^{−rate·x}, fitted by least squares on log y.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits the points with y > `floor`. Needs at least three of them.
pub fn log_linear_fit(x: &[f64], y: &[f64], floor: f64) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > floor && v.is_finite())
        .map(|(&a, &b)| (a, b.ln()))
        .collect();
    let m = pts.len();
    if m < 3 {
        return None;
    }
    let mf = m as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy <= 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(DecayFit {
        rate: -slope,
        prefactor: (my - slope * mx).exp(),
        r2,
        points: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let f = log_linear_fit(&x, &y, 0.0).unwrap();
        assert!((f.rate - 0.7).abs() < 1e-12 && (f.prefactor - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(log_linear_fit(&x[..2], &y[..2], 0.0).is_none());
    }
}
