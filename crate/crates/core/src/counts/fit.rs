//! Poisson-weighted sinusoidal fringe fits.
//!
//! The model is rate(gamma) = offset * (1 + V cos(2 l_eff gamma_rad + phase))
//! with the period fixed by the analyzer order (180 deg / l_eff). Counts are
//! converted to rates so mixed integration times weight correctly; weights
//! are the inverse Poisson variances t^2 / max(counts, 1). A free-period
//! variant scans fringe frequency for diagnostics such as counting fringes
//! over a sweep.

use super::{ArmKind, Axis, ScanRecord};
use crate::error::{Error, Result};

/// Fixed-period fringe fit result.
#[derive(Debug, Clone, Copy)]
pub struct FringeFit {
    /// Mean rate level, counts per second.
    pub offset: f64,
    /// Fringe visibility in [0, 1].
    pub visibility: f64,
    /// 1-sigma uncertainty of the visibility from the fit covariance.
    pub sigma_visibility: f64,
    /// Phase of the cosine at gamma = 0, radians.
    pub phase_rad: f64,
    /// Fringe period in the swept angle, degrees.
    pub period_deg: f64,
    pub chi2: f64,
    pub dof: usize,
}

/// Free-period diagnostic fit.
#[derive(Debug, Clone, Copy)]
pub struct FreePeriodFit {
    pub frequency_per_deg: f64,
    pub period_deg: f64,
    /// Number of fringe periods covered by the swept span.
    pub fringes_over_span: f64,
    pub span_deg: f64,
    pub offset: f64,
    pub visibility: f64,
}

fn axis_angle(record: &ScanRecord, axis: Axis) -> f64 {
    match axis {
        Axis::A => record.angle_a_deg,
        Axis::B => record.angle_b_deg,
    }
}

struct WeightedData {
    angles_deg: Vec<f64>,
    rates: Vec<f64>,
    weights: Vec<f64>,
    span_deg: f64,
}

fn prepare(records: &[ScanRecord], axis: Axis) -> Result<WeightedData> {
    if records.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 points, got {}",
            records.len()
        )));
    }
    let mut angles_deg = Vec::with_capacity(records.len());
    let mut rates = Vec::with_capacity(records.len());
    let mut weights = Vec::with_capacity(records.len());
    for r in records {
        let t = r.integration_s;
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::Fit("non-positive integration time".into()));
        }
        angles_deg.push(axis_angle(r, axis));
        rates.push(r.coincidences / t);
        // Poisson variance of the rate is counts / t^2; floor counts at 1 so
        // empty bins keep a finite weight.
        weights.push(t * t / r.coincidences.max(1.0));
    }
    let min = angles_deg.iter().cloned().fold(f64::MAX, f64::min);
    let max = angles_deg.iter().cloned().fold(f64::MIN, f64::max);
    Ok(WeightedData {
        angles_deg,
        rates,
        weights,
        span_deg: max - min,
    })
}

/// Weighted linear LSQ of y = A + B cos(arg) + C sin(arg).
/// Returns (A, B, C), the covariance of (A, B, C), and chi^2.
fn cosine_lsq(
    data: &WeightedData,
    arg_of_deg: impl Fn(f64) -> f64,
) -> Result<([f64; 3], [[f64; 3]; 3], f64)> {
    let mut s = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for ((&deg, &y), &w) in data.angles_deg.iter().zip(&data.rates).zip(&data.weights) {
        let arg = arg_of_deg(deg);
        let x = [1.0, arg.cos(), arg.sin()];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] += w * x[i] * x[j];
            }
            rhs[i] += w * x[i] * y;
        }
    }
    let cov = invert_sym3(&s).ok_or_else(|| {
        Error::Fit("degenerate design matrix (insufficient angular coverage)".into())
    })?;
    let mut params = [0.0f64; 3];
    for i in 0..3 {
        for j in 0..3 {
            params[i] += cov[i][j] * rhs[j];
        }
    }
    let mut chi2 = 0.0;
    for ((&deg, &y), &w) in data.angles_deg.iter().zip(&data.rates).zip(&data.weights) {
        let arg = arg_of_deg(deg);
        let model = params[0] + params[1] * arg.cos() + params[2] * arg.sin();
        chi2 += w * (y - model) * (y - model);
    }
    Ok((params, cov, chi2))
}

// Index arithmetic mirrors the cofactor formula.
#[allow(clippy::needless_range_loop)]
fn invert_sym3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale: f64 = m.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()));
    if !det.is_finite() || det.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let inv_det = det.recip();
    let mut inv = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((i + 1) % 3, (i + 2) % 3);
            let (c, d) = ((j + 1) % 3, (j + 2) % 3);
            // cofactor transpose
            inv[j][i] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) * inv_det;
        }
    }
    Some(inv)
}

/// Fit a fringe with the period fixed by the analyzer on the swept axis:
/// rate = offset (1 + V cos(2 l_eff gamma + phase)).
///
/// Needs at least 4 points spanning at least half a period.
pub fn fit_fringe(records: &[ScanRecord], axis: Axis, kind: ArmKind) -> Result<FringeFit> {
    let data = prepare(records, axis)?;
    let period = kind.period_deg();
    if data.span_deg < 0.5 * period - 1e-9 {
        return Err(Error::Fit(format!(
            "angular span {:.4} deg covers less than half the {:.4} deg period",
            data.span_deg, period
        )));
    }
    let omega = 2.0 * f64::from(kind.l_eff());
    let (params, cov, chi2) = cosine_lsq(&data, |deg| omega * deg.to_radians())?;
    let [a, b, c] = params;
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Fit(format!("non-positive fitted offset {a}")));
    }
    let amp = (b * b + c * c).sqrt();
    let visibility = (amp / a).clamp(0.0, 1.0);
    let phase_rad = (-c).atan2(b);
    // sigma_V by propagating the (A, B, C) covariance through V = R / A.
    let sigma_visibility = if amp > 0.0 {
        let g = [-amp / (a * a), b / (amp * a), c / (amp * a)];
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                var += g[i] * cov[i][j] * g[j];
            }
        }
        var.max(0.0).sqrt()
    } else {
        ((cov[1][1] + cov[2][2]).max(0.0)).sqrt() / a
    };
    Ok(FringeFit {
        offset: a,
        visibility,
        sigma_visibility,
        phase_rad,
        period_deg: period,
        chi2,
        dof: records.len().saturating_sub(3),
    })
}

/// Scan the fringe frequency over a grid and refine the best value by golden
/// section, fitting the linear parameters at each candidate. Diagnostic for
/// fringe counting; the period is otherwise fixed by the analyzer order.
pub fn fit_fringe_free_period(records: &[ScanRecord], axis: Axis) -> Result<FreePeriodFit> {
    let data = prepare(records, axis)?;
    if data.span_deg <= 0.0 {
        return Err(Error::Fit(
            "free-period fit needs a nonzero angular span".into(),
        ));
    }
    let n = data.angles_deg.len();
    let mut sorted = data.angles_deg.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min_spacing = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::MAX, f64::min);
    if !min_spacing.is_finite() {
        return Err(Error::Fit("all points share one angle".into()));
    }
    // Candidate fringe frequencies in cycles per degree, from half a cycle
    // over the span up to the sampling Nyquist limit.
    let f_lo = 0.5 / data.span_deg;
    let f_hi = 0.5 / min_spacing;
    let steps = ((f_hi - f_lo) * 8.0 * data.span_deg)
        .ceil()
        .clamp(16.0, 20_000.0) as usize;
    let chi2_at = |f: f64| -> f64 {
        let omega = std::f64::consts::TAU * f;
        match cosine_lsq(&data, |deg| omega * deg) {
            Ok((_, _, chi2)) => chi2,
            Err(_) => f64::INFINITY,
        }
    };
    let mut best = (f_lo, f64::INFINITY);
    for k in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * k as f64 / steps as f64;
        let chi2 = chi2_at(f);
        if chi2 < best.1 {
            best = (f, chi2);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Fit("no fringe frequency fits the data".into()));
    }
    // Golden-section refinement around the best grid node.
    let df = (f_hi - f_lo) / steps as f64;
    let (mut lo, mut hi) = ((best.0 - df).max(f_lo), (best.0 + df).min(f_hi));
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if chi2_at(m1) < chi2_at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let f = 0.5 * (lo + hi);
    let omega = std::f64::consts::TAU * f;
    let (params, _, _) = cosine_lsq(&data, |deg| omega * deg)?;
    let [a, b, c] = params;
    let visibility = if a > 0.0 {
        ((b * b + c * c).sqrt() / a).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let _ = n;
    Ok(FreePeriodFit {
        frequency_per_deg: f,
        period_deg: f.recip(),
        fringes_over_span: f * data.span_deg,
        span_deg: data.span_deg,
        offset: a,
        visibility,
    })
}
