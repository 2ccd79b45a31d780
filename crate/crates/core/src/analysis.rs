//! Predicted decay exponents, critical-curve classification and slope
//! regression on norm traces.

use crate::error::{Error, Result};
use crate::integrator::{NormName, NormTrace};

/// Predicted decay exponents per tracked norm: a norm listed with exponent e
/// is expected to fall off no slower than (1 + t)^(-e).
#[derive(Debug, Clone)]
pub struct RateTable {
    pub entries: Vec<(NormName, f64)>,
    /// Nonnegative loss-of-decay term applied to the u_t rates.
    pub loss: f64,
    /// min{2, q}; the secondary Lebesgue exponent tracked for u_t in 2D.
    pub alpha: Option<f64>,
}

impl RateTable {
    pub fn exponent(&self, name: NormName) -> f64 {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, e)| *e)
            .expect("all six norms present")
    }
}

/// Decay exponents of the global small-data solution, per dimension.
///
/// In 1D the loss term is [1 - (p - 1)/2 + eps_loss]^+ and the six rates are
/// those of the global-existence result with pq > 3; in 2D the loss is
/// [2 - p + eps_loss]^+ under pq > 2.
pub fn predicted_rates(n: usize, p: f64, q: f64, s: f64, eps_loss: f64) -> Result<RateTable> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidArgument(format!(
            "rate table defined for n in {{1, 2}}, got {n}"
        )));
    }
    if p <= 1.0 || q <= 1.0 {
        return Err(Error::Constraint(format!(
            "nonlinearity exponents must satisfy min{{p, q}} > 1, got p = {p}, q = {q}"
        )));
    }
    if eps_loss <= 0.0 {
        return Err(Error::Constraint(format!(
            "loss constant must be positive, got {eps_loss}"
        )));
    }
    let table = match n {
        1 => {
            let loss = (1.0 - 0.5 * (p - 1.0) + eps_loss).max(0.0);
            RateTable {
                entries: vec![
                    (NormName::UtL2, 1.25 - loss),
                    (NormName::UtLq, 0.5 * (1.0 - 1.0 / q) + 1.0 - loss),
                    (NormName::UtHs, 1.25 + 0.5 * s - loss),
                    (NormName::VLp, 0.5 * (1.0 - 1.0 / p)),
                    (NormName::VL2, 0.25),
                    (NormName::VHs, 0.25 + 0.5 * s),
                ],
                loss,
                alpha: None,
            }
        }
        _ => {
            let loss = (2.0 - p + eps_loss).max(0.0);
            let alpha = q.min(2.0);
            RateTable {
                entries: vec![
                    (NormName::UtL2, 1.5 - loss),
                    (NormName::UtLq, 2.0 - 1.0 / alpha - loss),
                    (NormName::UtHs, 1.5 + 0.5 * s - loss),
                    (NormName::VLp, 1.0 - 1.0 / p),
                    (NormName::VL2, 0.5),
                    (NormName::VHs, 0.5 + 0.5 * s),
                ],
                loss,
                alpha: Some(alpha),
            }
        }
    };
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    GlobalExistence,
    Blowup,
    CriticalUnresolved,
    OpenDimension,
}

impl Verdict {
    pub fn token(&self) -> &'static str {
        match self {
            Verdict::GlobalExistence => "global_existence",
            Verdict::Blowup => "blowup",
            Verdict::CriticalUnresolved => "critical_unresolved",
            Verdict::OpenDimension => "open_dimension",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Classification {
    pub verdict: Verdict,
    /// pq - (1 + 2/n), the signed distance to the critical curve.
    pub margin: f64,
}

const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Place an exponent pair relative to the critical curve pq = 1 + 2/n.
/// Below the curve every dimension blows up; above it, 1D and 2D admit
/// global small-data solutions while n >= 3 is unresolved, as is the curve
/// itself.
pub fn classify_point(n: usize, p: f64, q: f64) -> Result<Classification> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if p <= 1.0 || q <= 1.0 {
        return Err(Error::Constraint(format!(
            "nonlinearity exponents must satisfy min{{p, q}} > 1, got p = {p}, q = {q}"
        )));
    }
    let margin = p * q - (1.0 + 2.0 / n as f64);
    let verdict = if margin.abs() <= CRITICAL_TOLERANCE {
        Verdict::CriticalUnresolved
    } else if margin < 0.0 {
        Verdict::Blowup
    } else if n <= 2 {
        Verdict::GlobalExistence
    } else {
        Verdict::OpenDimension
    };
    Ok(Classification { verdict, margin })
}

/// (max{p, q} + 1)/(pq - 1), the critical quantity of the classical system
/// with nonlinearities (|v|^p, |u|^q), compared against n/2.
pub fn gamma_curve_value(p: f64, q: f64) -> Result<f64> {
    if p * q <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "curve requires pq > 1, got pq = {}",
            p * q
        )));
    }
    Ok((p.max(q) + 1.0) / (p * q - 1.0))
}

/// Least-squares slope of log(values) against log(1 + t) over a window.
/// Returns (slope, standard error). Requires at least 10 samples in the
/// window and positive values throughout it.
pub fn fit_loglog_slope(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<(f64, f64)> {
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Fit(format!(
                "non-positive norm value {v} at t = {t} inside the fit window"
            )));
        }
        xs.push((1.0 + t).ln());
        ys.push(v.ln());
    }
    let m = xs.len();
    if m < 10 {
        return Err(Error::Fit(format!(
            "need at least 10 samples in the window, found {m}"
        )));
    }
    let mf = m as f64;
    let mean_x = xs.iter().sum::<f64>() / mf;
    let mean_y = ys.iter().sum::<f64>() / mf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate fit window".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut sse = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (intercept + slope * x);
        sse += r * r;
    }
    let stderr = if m > 2 {
        (sse / (mf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

/// Slope fit of one tracked norm of a trace.
pub fn fit_decay_slope(
    trace: &NormTrace,
    norm: NormName,
    window: (f64, f64),
) -> Result<(f64, f64)> {
    fit_loglog_slope(&trace.times, trace.series(norm), window)
}

/// Default fit window skipping the transient: [t_max/5, t_max].
pub fn default_fit_window(t_max: f64) -> (f64, f64) {
    (t_max / 5.0, t_max)
}
