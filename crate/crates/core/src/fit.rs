//! Least-squares fits for convergence studies.

use serde::Serialize;

/// `log|y| ≈ c + p log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    pub order: f64,
    pub log_prefactor: f64,
    /// RMS of the log-space residuals.
    pub residual_rms: f64,
    pub points: usize,
}

/// `y ≈ a + b x²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitFit {
    pub limit: f64,
    pub slope: f64,
    pub residual_rms: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ a + b t`; returns `(a, b, rms)`.
fn linear(t: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = t.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let tm = t.iter().sum::<f64>() / nf;
    let ym = y.iter().sum::<f64>() / nf;
    let stt: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
    if !(stt > 0.0) {
        return None;
    }
    let sty: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let b = sty / stt;
    let a = ym - b * tm;
    let rms = (t.iter().zip(y).map(|(ti, yi)| (yi - a - b * ti).powi(2)).sum::<f64>() / nf).sqrt();
    Some((a, b, rms))
}

/// Order of decay of `|y|` in `x` from a log-log fit.
///
/// `None` with fewer than two points, a zero value, or constant `x`.
pub fn loglog_order(x: &[f64], y: &[f64]) -> Option<OrderFit> {
    if x.iter().chain(y).any(|v| !(v.abs() > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let (a, b, rms) = linear(&lx, &ly)?;
    Some(OrderFit { order: b, log_prefactor: a, residual_rms: rms, points: x.len() })
}

/// Limit of `y` as `x → 0` assuming `y = a + b x² + …`.
pub fn quadratic_limit(x: &[f64], y: &[f64]) -> Option<LimitFit> {
    let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
    let (a, b, rms) = linear(&x2, y)?;
    Some(LimitFit { limit: a, slope: b, residual_rms: rms, points: x.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let x = [0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        let f = loglog_order(&x, &y).unwrap();
        assert!((f.order - 1.5).abs() < 1e-12);
        assert!((f.log_prefactor - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual_rms < 1e-12);
    }

    #[test]
    fn quadratic_limit_is_exact_on_quadratics() {
        let x = [0.2, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|v| 7.0 - 2.0 * v * v).collect();
        let f = quadratic_limit(&x, &y).unwrap();
        assert!((f.limit - 7.0).abs() < 1e-12 && (f.slope + 2.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(loglog_order(&[1.0], &[1.0]).is_none());
        assert!(loglog_order(&[1.0, 2.0], &[0.0, 1.0]).is_none());
        assert!(quadratic_limit(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }
}
