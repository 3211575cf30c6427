//! Decay-rate, period and amplitude estimation from error time series.

use std::f64::consts::LN_10;

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 20;
const PEAK_MARGIN: f64 = 1e-6;
const MIN_PEAKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    /// Natural-log decay rate.
    pub rate: f64,
    pub rate_base10: f64,
    pub period: Option<f64>,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    /// Number of points entering the regression.
    pub points: usize,
}

/// Which part of a series enters the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    /// Fraction of the run skipped at the start when `t_start` is unset.
    pub skip_fraction: f64,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    /// Samples after the last one above `floor * max y` (over the whole
    /// series) are dropped, which cuts off the round-off plateau.
    pub floor: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            skip_fraction: 0.1,
            t_start: None,
            t_end: None,
            floor: 1e-10,
        }
    }
}

impl FitWindow {
    pub fn between(t_start: f64, t_end: f64) -> Self {
        Self {
            t_start: Some(t_start),
            t_end: Some(t_end),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("series", "x and y lengths differ"));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Oscillation peaks of `ln y` about the trend line `fit`, each refined by
/// a parabola through its neighbours. Returns `(t, ln y)` pairs.
///
/// Detrending matters for weakly modulated norms, whose raw values can be
/// monotone even though the modulation is periodic.
fn peaks(t: &[f64], ly: &[f64], fit: &LinearFit) -> Vec<(f64, f64)> {
    let margin = PEAK_MARGIN.ln_1p();
    let res: Vec<f64> = t
        .iter()
        .zip(ly)
        .map(|(t, l)| l - fit.slope * t - fit.intercept)
        .collect();
    let n = res.len();
    let candidates: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| res[i] >= res[i - 1] && res[i] > res[i + 1])
        .collect();
    let mut out = Vec::new();
    for (c, &i) in candidates.iter().enumerate() {
        // prominence against the lowest point towards each neighbouring candidate
        let lo = if c == 0 { 0 } else { candidates[c - 1] };
        let hi = candidates.get(c + 1).copied().unwrap_or(n - 1);
        let left = res[lo..i].iter().copied().fold(f64::INFINITY, f64::min);
        let right = res[i + 1..=hi].iter().copied().fold(f64::INFINITY, f64::min);
        if res[i] - left <= margin || res[i] - right <= margin {
            continue;
        }
        let (a, b, c) = (res[i - 1], res[i], res[i + 1]);
        let curv = a - 2.0 * b + c;
        let h = t[i] - t[i - 1];
        let uniform = (h - (t[i + 1] - t[i])).abs() <= 1e-9 * h;
        let (tp, rp) = if uniform && curv < 0.0 {
            let off = 0.5 * (a - c) / curv;
            (t[i] + off * h, b - 0.25 * (a - c) * off)
        } else {
            (t[i], b)
        };
        out.push((tp, rp + fit.slope * tp + fit.intercept));
    }
    out
}

/// Fits `ln y = c - rate t` inside the window; uses oscillation peaks when
/// the series oscillates.
pub fn estimate_decay(t: &[f64], y: &[f64], window: FitWindow) -> Result<DecayEstimate> {
    if t.len() != y.len() {
        return Err(Error::invalid("series", "time and value lengths differ"));
    }
    if t.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    let t0 = t[0];
    let t1 = *t.last().unwrap();
    let start = window
        .t_start
        .unwrap_or(t0 + window.skip_fraction * (t1 - t0));
    let end = window.t_end.unwrap_or(t1);
    let first = t.partition_point(|&v| v < start - 1e-12);
    let mut last = t.partition_point(|&v| v <= end + 1e-12);
    if first >= last {
        return Err(Error::InsufficientData(format!(
            "no samples in window [{start}, {end}]"
        )));
    }
    for i in first..last {
        if !(y[i] > 0.0) {
            return Err(Error::NonPositive {
                time: t[i],
                value: y[i],
            });
        }
    }
    if window.floor > 0.0 {
        let peak = y.iter().copied().fold(0.0, f64::max);
        let threshold = window.floor * peak;
        if let Some(pos) = y[first..last].iter().rposition(|&v| v >= threshold) {
            last = first + pos + 1;
        }
    }
    if last - first < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in fit window, need {MIN_SAMPLES}",
            last - first
        )));
    }
    let ts = &t[first..last];
    let ys = &y[first..last];
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let trend = linear_regression(ts, &ly)?;
    let pk = peaks(ts, &ly, &trend);
    let (fit, period, points) = if pk.len() >= MIN_PEAKS {
        let (pt, pl): (Vec<f64>, Vec<f64>) = pk.iter().copied().unzip();
        let spacing = (pt[pt.len() - 1] - pt[0]) / (pt.len() - 1) as f64;
        (linear_regression(&pt, &pl)?, Some(2.0 * spacing), pt.len())
    } else {
        (trend, None, ts.len())
    };
    let rate = -fit.slope;
    Ok(DecayEstimate {
        rate,
        rate_base10: rate / LN_10,
        period,
        fit_window: (ts[0], ts[ts.len() - 1]),
        r_squared: fit.r_squared,
        points,
    })
}

/// OLS line through `(L, rate)` points.
pub fn fit_rate_vs_length(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    linear_regression(&x, &y)
}

/// Half peak-to-trough of a signed oscillation for `t >= t_min`.
///
/// The tail is split in halves; if their amplitudes differ by more than
/// `tolerance` (relative) the tail is not stationary.
pub fn steady_amplitude(t: &[f64], y: &[f64], t_min: f64, tolerance: f64) -> Result<f64> {
    if t.len() != y.len() {
        return Err(Error::invalid("series", "time and value lengths differ"));
    }
    let first = t.partition_point(|&v| v < t_min);
    let tail = &y[first..];
    if tail.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples after t_min = {t_min}",
            tail.len()
        )));
    }
    let half_range = |s: &[f64]| {
        let (lo, hi) = s
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        0.5 * (hi - lo)
    };
    let mid = tail.len() / 2;
    let a = half_range(&tail[..mid]);
    let b = half_range(&tail[mid..]);
    let scale = a.max(b);
    if scale > 0.0 {
        let drift = (a - b).abs() / scale;
        if drift > tolerance {
            return Err(Error::NonStationary { drift });
        }
    }
    Ok(half_range(tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn pure_exponential() {
        let t = grid(5001, 1e-3);
        let y: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let e = estimate_decay(&t, &y, FitWindow::default()).unwrap();
        assert_abs_diff_eq!(e.rate, 2.0, epsilon = 1e-6);
        assert!(e.period.is_none());
        assert_abs_diff_eq!(e.rate_base10 * LN_10, e.rate, epsilon = 1e-15);
        assert_abs_diff_eq!(e.fit_window.0, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn damped_rectified_cosine() {
        let t = grid(5001, 1e-3);
        let y: Vec<f64> = t
            .iter()
            .map(|t| (-2.0 * t).exp() * (2.0 * PI * t).cos().abs() + 1e-300)
            .collect();
        let e = estimate_decay(&t, &y, FitWindow::default()).unwrap();
        assert!((e.rate - 2.0).abs() < 0.02);
        let p = e.period.unwrap();
        assert!((p - 1.0).abs() < 0.02, "period {p}");
    }

    #[test]
    fn floor_trims_roundoff_plateau() {
        let t = grid(5001, 1e-3);
        let y: Vec<f64> = t.iter().map(|t| (-10.0 * t).exp().max(1e-17)).collect();
        let e = estimate_decay(&t, &y, FitWindow::default()).unwrap();
        assert_abs_diff_eq!(e.rate, 10.0, epsilon = 1e-6);
    }

    #[test]
    fn rejects_non_positive_and_short() {
        let t = grid(100, 0.01);
        let mut y = vec![1.0; 100];
        y[50] = 0.0;
        assert!(matches!(
            estimate_decay(&t, &y, FitWindow::default()),
            Err(Error::NonPositive { .. })
        ));
        let t = grid(10, 0.1);
        let y = vec![1.0; 10];
        assert!(matches!(
            estimate_decay(&t, &y, FitWindow::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn regression_exact_line() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64 / 10.0, 4.99 * i as f64 / 10.0 + 0.24)).collect();
        let f = fit_rate_vs_length(&pts).unwrap();
        assert_abs_diff_eq!(f.slope, 4.99, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 0.24, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert!(fit_rate_vs_length(&pts[..2]).is_err());
    }

    #[test]
    fn steady_sine_amplitude() {
        let t = grid(5001, 1e-3);
        let y: Vec<f64> = t
            .iter()
            .map(|t| 0.3 * (2.0 * PI * t).sin() + (-5.0 * t).exp())
            .collect();
        let a = steady_amplitude(&t, &y, 2.0, 0.02).unwrap();
        assert!((a - 0.3).abs() < 0.003);
    }

    #[test]
    fn growing_tail_is_not_stationary() {
        let t = grid(5001, 1e-3);
        let y: Vec<f64> = t.iter().map(|t| (1.0 + t) * (2.0 * PI * t).sin()).collect();
        assert!(matches!(
            steady_amplitude(&t, &y, 1.0, 0.02),
            Err(Error::NonStationary { .. })
        ));
    }
}
