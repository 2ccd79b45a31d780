//! Exponent-plane sweep: one simulation per (p, q) cell, classified against
//! the critical-curve prediction.

use rayon::prelude::*;

use crate::analysis::{classify_point, default_fit_window, fit_decay_slope, Verdict};
use crate::error::Result;
use crate::grid::Grid;
use crate::integrator::{simulate, NormName, RunStatus, SimOptions};
use crate::system::{InitialDataPreset, SystemParams};

/// Shared per-cell run setup.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub half_length: f64,
    pub points_per_dim: usize,
    pub t_max: f64,
    pub h: f64,
    pub sample_every: usize,
    pub eps: f64,
    pub preset: InitialDataPreset,
    pub s_track: f64,
    pub eps_loss: f64,
    /// Observed "decay" requires the fitted v L^2 slope below this.
    pub decay_slope_threshold: f64,
    /// Worker threads; 1 runs serially.
    pub jobs: usize,
}

impl SweepConfig {
    pub fn new_1d() -> SweepConfig {
        SweepConfig {
            half_length: 200.0,
            points_per_dim: 2048,
            t_max: 300.0,
            h: 0.05,
            sample_every: 20,
            eps: 0.5,
            preset: InitialDataPreset::default(),
            s_track: 0.75,
            eps_loss: 0.01,
            decay_slope_threshold: -0.05,
            jobs: 1,
        }
    }

    pub fn new_2d() -> SweepConfig {
        SweepConfig {
            half_length: 110.0,
            points_per_dim: 256,
            t_max: 150.0,
            s_track: 1.2,
            preset: InitialDataPreset {
                width: 2.0,
                ..InitialDataPreset::default()
            },
            ..SweepConfig::new_1d()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observed {
    Blowup,
    Decay,
    Ambiguous,
}

impl Observed {
    pub fn token(&self) -> &'static str {
        match self {
            Observed::Blowup => "blowup",
            Observed::Decay => "decay",
            Observed::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub p: f64,
    pub q: f64,
    pub predicted: Verdict,
    pub observed: Observed,
    /// Detection time for blow-up cells, otherwise the horizon reached.
    pub t_stop: f64,
    pub peak_norm: f64,
    /// Defined only when the prediction is strict (global existence or
    /// blow-up).
    pub agree: Option<bool>,
    pub error: Option<String>,
}

/// Relative half-width of the near-critical band excluded from agreement
/// assertions; finite-domain and finite-horizon effects dominate there.
pub const CRITICAL_BAND: f64 = 0.15;

pub fn in_critical_band(n: usize, p: f64, q: f64) -> bool {
    let crit = 1.0 + 2.0 / n as f64;
    (p * q - crit).abs() <= CRITICAL_BAND * crit
}

fn run_cell(n: usize, p: f64, q: f64, cfg: &SweepConfig) -> SweepRow {
    let predicted = match classify_point(n, p, q) {
        Ok(c) => c.verdict,
        Err(e) => {
            return SweepRow {
                p,
                q,
                predicted: Verdict::CriticalUnresolved,
                observed: Observed::Ambiguous,
                t_stop: 0.0,
                peak_norm: 0.0,
                agree: None,
                error: Some(e.to_string()),
            }
        }
    };
    let cell = (|| -> Result<(Observed, f64, f64)> {
        let grid = Grid::new_shared(n, cfg.half_length, cfg.points_per_dim)?;
        let params = SystemParams {
            n,
            p,
            q,
            eps: cfg.eps,
            s: cfg.s_track,
            eps_loss: cfg.eps_loss,
            preset: cfg.preset.clone(),
        };
        let opts = SimOptions {
            t_max: cfg.t_max,
            h: cfg.h,
            sample_every: cfg.sample_every,
            nonlinearity_enabled: true,
            dealias: false,
            blowup_threshold: crate::integrator::DEFAULT_BLOWUP_THRESHOLD,
        };
        let (trace, report) = simulate(&params, &grid, &opts)?;
        if trace.status != RunStatus::Completed {
            return Ok((
                Observed::Blowup,
                report.t_detect.unwrap_or(cfg.t_max),
                report.peak_norm,
            ));
        }
        let window = default_fit_window(cfg.t_max);
        let observed = match fit_decay_slope(&trace, NormName::VL2, window) {
            Ok((slope, _)) if slope < cfg.decay_slope_threshold => Observed::Decay,
            Ok(_) => Observed::Ambiguous,
            Err(_) => Observed::Ambiguous,
        };
        Ok((observed, cfg.t_max, report.peak_norm))
    })();

    match cell {
        Ok((observed, t_stop, peak_norm)) => {
            let agree = match predicted {
                Verdict::GlobalExistence => Some(observed == Observed::Decay),
                Verdict::Blowup => Some(observed == Observed::Blowup),
                _ => None,
            };
            SweepRow {
                p,
                q,
                predicted,
                observed,
                t_stop,
                peak_norm,
                agree,
                error: None,
            }
        }
        Err(e) => SweepRow {
            p,
            q,
            predicted,
            observed: Observed::Ambiguous,
            t_stop: 0.0,
            peak_norm: 0.0,
            agree: None,
            error: Some(e.to_string()),
        },
    }
}

/// Run every (p, q) cell; rows come back in row-major order regardless of
/// worker count, so parallel and serial output match.
pub fn sweep(n: usize, p_list: &[f64], q_list: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    for &e in p_list.iter().chain(q_list) {
        if e <= 1.0 {
            return Err(crate::error::Error::Constraint(format!(
                "sweep exponents must exceed 1, got {e}"
            )));
        }
    }
    let cells: Vec<(f64, f64)> = p_list
        .iter()
        .flat_map(|&p| q_list.iter().map(move |&q| (p, q)))
        .collect();
    let rows = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?;
        pool.install(|| {
            cells
                .par_iter()
                .map(|&(p, q)| run_cell(n, p, q, cfg))
                .collect::<Vec<_>>()
        })
    } else {
        cells
            .iter()
            .map(|&(p, q)| run_cell(n, p, q, cfg))
            .collect()
    };
    Ok(rows)
}
