//! Run modes behind a common trait, registered by name and selected at
//! runtime from the command line. Adding a mode means adding one impl and
//! one registry entry.

use std::error::Error;
use std::path::{Path, PathBuf};

use critcurve::analysis::{fit_loglog_slope, predicted_rates, RateTable};
use critcurve::blowup::verify_scaling_with_kappa;
use critcurve::ineq::{aux_ratio, gn_ratio, sample_field, AuxCheck, GnParams, SampleSpec};
use critcurve::integrator::{preflight_warnings, NormName, NormTrace};
use critcurve::kernel::{semigroup_convolve, MultiplierKind};
use critcurve::sweep::{sweep, SweepConfig};
use critcurve::{simulate, Field, SimOptions};

use crate::config::RunConfig;
use crate::csvio::{num, CsvFile};
use crate::svg::write_phase_diagram;

pub type ModeResult = Result<Vec<PathBuf>, Box<dyn Error>>;

pub struct RunContext<'a> {
    pub config: &'a RunConfig,
    pub config_hash: &'a str,
    pub out_dir: &'a Path,
    pub jobs: usize,
    pub svg: bool,
}

pub trait Mode: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, ctx: &RunContext) -> ModeResult;
}

pub fn registry() -> &'static [&'static dyn Mode] {
    &[
        &Simulate,
        &Sweep,
        &LinearDecay,
        &BlowupScan,
        &IneqCheck,
        &Rates,
    ]
}

pub fn find_mode(name: &str) -> Option<&'static dyn Mode> {
    registry().iter().copied().find(|m| m.name() == name)
}

pub fn mode_names() -> Vec<&'static str> {
    registry().iter().map(|m| m.name()).collect()
}

fn require_t_max(cfg: &RunConfig) -> Result<f64, Box<dyn Error>> {
    cfg.t_max
        .ok_or_else(|| "missing required key \"t_max\" in [time]".into())
}

fn trace_columns() -> [&'static str; 9] {
    [
        "t",
        "l2_ut",
        "lq_ut",
        "hs_ut",
        "lp_v",
        "l2_v",
        "hs_v",
        "lowfreq_energy",
        "highfreq_energy",
    ]
}

fn write_trace(ctx: &RunContext, trace: &NormTrace) -> Result<PathBuf, Box<dyn Error>> {
    let mut csv = CsvFile::create(
        ctx.out_dir,
        "trace.csv",
        ctx.config_hash,
        &trace_columns(),
        &[format!("status={:?}", trace.status)],
    )?;
    for i in 0..trace.times.len() {
        csv.row(&[
            num(trace.times[i]),
            num(trace.l2_ut[i]),
            num(trace.lq_ut[i]),
            num(trace.hs_ut[i]),
            num(trace.lp_v[i]),
            num(trace.l2_v[i]),
            num(trace.hs_v[i]),
            num(trace.low_energy[i]),
            num(trace.high_energy[i]),
        ]);
    }
    Ok(csv.finish()?)
}

fn write_rates(
    ctx: &RunContext,
    rates: &RateTable,
    fits: Option<(&[f64], &NormTrace, (f64, f64), f64)>,
) -> Result<PathBuf, Box<dyn Error>> {
    let mut csv = CsvFile::create(
        ctx.out_dir,
        "rates.csv",
        ctx.config_hash,
        &["norm_name", "predicted_exponent", "fitted_slope", "stderr", "one_sided_pass"],
        &[],
    )?;
    for name in NormName::ALL {
        let predicted = rates.exponent(name);
        let (fitted, stderr, pass) = match fits {
            None => (String::new(), String::new(), "na".to_string()),
            Some((times, trace, window, tolerance)) => {
                match fit_loglog_slope(times, trace.series(name), window) {
                    Ok((slope, se)) => (
                        num(slope),
                        num(se),
                        (slope <= -predicted + tolerance).to_string(),
                    ),
                    Err(_) => (String::new(), String::new(), "na".to_string()),
                }
            }
        };
        csv.row(&[
            name.token().to_string(),
            num(predicted),
            fitted,
            stderr,
            pass,
        ]);
    }
    Ok(csv.finish()?)
}

struct Simulate;

impl Mode for Simulate {
    fn name(&self) -> &'static str {
        "simulate"
    }

    fn summary(&self) -> &'static str {
        "evolve the full nonlinear system and emit trace.csv + rates.csv"
    }

    fn run(&self, ctx: &RunContext) -> ModeResult {
        let cfg = ctx.config;
        let t_max = require_t_max(cfg)?;
        let grid = cfg.grid()?;
        let params = cfg.system_params();
        for w in preflight_warnings(&params, &grid, t_max) {
            eprintln!("warning: {w}");
        }
        let opts = SimOptions {
            t_max,
            h: cfg.h.unwrap_or(0.1),
            sample_every: cfg.sample_every,
            ..SimOptions::decay(t_max)
        };
        let (trace, report) = simulate(&params, &grid, &opts)?;
        if report.detected {
            eprintln!(
                "note: blow-up detected at t = {:.4} ({:?})",
                report.t_detect.unwrap_or(f64::NAN),
                report.trigger
            );
        }
        let rates = predicted_rates(cfg.n, cfg.p, cfg.q, cfg.s, cfg.eps_loss)?;
        let window = cfg.fit_window(t_max);
        let trace_path = write_trace(ctx, &trace)?;
        let rates_path = write_rates(
            ctx,
            &rates,
            Some((&trace.times, &trace, window, cfg.fit_tolerance)),
        )?;
        Ok(vec![trace_path, rates_path])
    }
}

struct Rates;

impl Mode for Rates {
    fn name(&self) -> &'static str {
        "rates"
    }

    fn summary(&self) -> &'static str {
        "emit the predicted decay-rate table without running a simulation"
    }

    fn run(&self, ctx: &RunContext) -> ModeResult {
        let cfg = ctx.config;
        let rates = predicted_rates(cfg.n, cfg.p, cfg.q, cfg.s, cfg.eps_loss)?;
        Ok(vec![write_rates(ctx, &rates, None)?])
    }
}

struct LinearDecay;

impl Mode for LinearDecay {
    fn name(&self) -> &'static str {
        "linear-decay"
    }

    fn summary(&self) -> &'static str {
        "apply the exact kernel to preset data and fit the linear decay rates"
    }

    fn run(&self, ctx: &RunContext) -> ModeResult {
        let cfg = ctx.config;
        let t_max = require_t_max(cfg)?;
        let grid = cfg.grid()?;
        let params = cfg.system_params();
        let (t_lo, t_hi) = cfg.fit_window(t_max);
        let count = 40;
        let times: Vec<f64> = (0..count)
            .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / (count - 1) as f64))
            .collect();
        // data profile: the preset's u1 bump (mass is what the low-frequency
        // rates see)
        let data = params.preset.data_fields(&grid)[1].to_spectral();

        let lq = params.ut_secondary_exponent();
        let mut trace = NormTrace {
            times: times.clone(),
            l2_ut: Vec::new(),
            lq_ut: Vec::new(),
            hs_ut: Vec::new(),
            lp_v: Vec::new(),
            l2_v: Vec::new(),
            hs_v: Vec::new(),
            low_energy: Vec::new(),
            high_energy: Vec::new(),
            status: critcurve::RunStatus::Completed,
            rescued_at: None,
        };
        let cutoff = critcurve::CutoffConfig::default();
        for &t in &times {
            let k = semigroup_convolve(&data, t, MultiplierKind::K)?;
            let kt = semigroup_convolve(&data, t, MultiplierKind::DtK)?;
            trace.l2_ut.push(kt.lebesgue_norm(2.0)?);
            trace.lq_ut.push(kt.to_physical().lebesgue_norm(lq)?);
            trace.hs_ut.push(kt.sobolev_seminorm(params.s)?);
            trace.lp_v.push(k.to_physical().lebesgue_norm(params.p)?);
            trace.l2_v.push(k.lebesgue_norm(2.0)?);
            trace.hs_v.push(k.sobolev_seminorm(params.s)?);
            let (lo_k, hi_k) = critcurve::cutoff_split(&k, &cutoff);
            let (lo_kt, hi_kt) = critcurve::cutoff_split(&kt, &cutoff);
            trace.low_energy.push(
                lo_k.lebesgue_norm(2.0)?.powi(2) + lo_kt.lebesgue_norm(2.0)?.powi(2),
            );
            trace.high_energy.push(
                hi_k.lebesgue_norm(2.0)?.powi(2) + hi_kt.lebesgue_norm(2.0)?.powi(2),
            );
        }

        // low-frequency rates of the kernel acting on integrable data
        let nf = cfg.n as f64;
        let rates = RateTable {
            entries: vec![
                (NormName::UtL2, nf / 4.0 + 1.0),
                (NormName::UtLq, (nf / 2.0) * (1.0 - 1.0 / lq) + 1.0),
                (NormName::UtHs, nf / 4.0 + cfg.s / 2.0 + 1.0),
                (NormName::VLp, (nf / 2.0) * (1.0 - 1.0 / cfg.p)),
                (NormName::VL2, nf / 4.0),
                (NormName::VHs, nf / 4.0 + cfg.s / 2.0),
            ],
            loss: 0.0,
            alpha: (cfg.n == 2).then_some(lq),
        };
        let trace_path = write_trace(ctx, &trace)?;
        let rates_path = write_rates(
            ctx,
            &rates,
            Some((&times, &trace, (t_lo, t_hi), cfg.fit_tolerance)),
        )?;
        Ok(vec![trace_path, rates_path])
    }
}

struct BlowupScan;

impl Mode for BlowupScan {
    fn name(&self) -> &'static str {
        "blowup-scan"
    }

    fn summary(&self) -> &'static str {
        "evaluate the test-function functionals and the R-scaling bound chain"
    }

    fn run(&self, ctx: &RunContext) -> ModeResult {
        let cfg = ctx.config;
        let t_max = require_t_max(cfg)?;
        let grid = cfg.grid()?;
        let params = cfg.system_params();
        let opts = SimOptions {
            t_max,
            h: cfg.h.unwrap_or(0.05),
            sample_every: cfg.sample_every,
            ..SimOptions::blowup(t_max)
        };
        let report = verify_scaling_with_kappa(&params, &grid, &cfg.r_list, &opts, cfg.kappa)?;
        let mut comments = vec![format!(
            "predicted_exponent={} fitted_exponent={} slack={} ratio_growth={}",
            num(report.predicted_exponent),
            report.fitted_exponent.map(num).unwrap_or_default(),
            num(report.slack),
            report.ratio_growth.map(num).unwrap_or_default(),
        )];
        if !report.skipped_r.is_empty() {
            comments.push(format!(
                "skipped_r={:?} blowup_time={:?}",
                report.skipped_r, report.blowup_time
            ));
        }
        let mut csv = CsvFile::create(
            ctx.out_dir,
            "blowup_scan.csv",
            ctx.config_hash,
            &["R", "I_R", "J_R", "rho1", "rho2", "lhs", "rhs", "ratio"],
            &comments,
        )?;
        for row in &report.rows {
            csv.row(&[
                num(row.r),
                num(row.funcs.i_r),
                num(row.funcs.j_r),
                num(row.funcs.rho1),
                num(row.funcs.rho2),
                num(row.final_lhs),
                num(row.combined_rhs),
                num(row.final_lhs / row.combined_rhs),
            ]);
        }
        Ok(vec![csv.finish()?])
    }
}

struct Sweep;

impl Mode for Sweep {
    fn name(&self) -> &'static str {
        "sweep"
    }

    fn summary(&self) -> &'static str {
        "run one simulation per (p, q) cell and compare against the critical curve"
    }

    fn run(&self, ctx: &RunContext) -> ModeResult {
        let cfg = ctx.config;
        let t_max = require_t_max(cfg)?;
        if cfg.p_list.is_empty() || cfg.q_list.is_empty() {
            return Err("sweep mode requires [sweep] p_list and q_list".into());
        }
        let sweep_cfg = SweepConfig {
            half_length: cfg.half_length,
            points_per_dim: cfg.points,
            t_max,
            h: cfg.h.unwrap_or(0.05),
            sample_every: cfg.sample_every,
            eps: cfg.eps,
            preset: cfg.preset.clone(),
            s_track: cfg.s,
            eps_loss: cfg.eps_loss,
            decay_slope_threshold: cfg.decay_slope_threshold,
            jobs: ctx.jobs,
        };
        let rows = sweep(cfg.n, &cfg.p_list, &cfg.q_list, &sweep_cfg)?;

        let mut csv = CsvFile::create(
            ctx.out_dir,
            "sweep.csv",
            ctx.config_hash,
            &["p", "q", "predicted_verdict", "observed_verdict", "t_stop", "peak_norm", "agree"],
            &[],
        )?;
        let mut errors = Vec::new();
        for row in &rows {
            csv.row(&[
                num(row.p),
                num(row.q),
                row.predicted.token().to_string(),
                row.observed.token().to_string(),
                num(row.t_stop),
                num(row.peak_norm),
                row.agree.map(|a| a.to_string()).unwrap_or_else(|| "na".into()),
            ]);
            if let Some(err) = &row.error {
                errors.push((row.p, row.q, err.clone()));
            }
        }
        let mut emitted = vec![csv.finish()?];

        if !errors.is_empty() {
            let mut err_csv = CsvFile::create(
                ctx.out_dir,
                "sweep_errors.csv",
                ctx.config_hash,
                &["p", "q", "error"],
                &[],
            )?;
            for (p, q, e) in errors {
                err_csv.row(&[num(p), num(q), format!("\"{}\"", e.replace('"', "'"))]);
            }
            emitted.push(err_csv.finish()?);
        }

        if ctx.svg {
            emitted.push(write_phase_diagram(
                ctx.out_dir,
                cfg.n,
                &cfg.p_list,
                &cfg.q_list,
                &rows,
            )?);
        }
        Ok(emitted)
    }
}

struct IneqCheck;

// Three preset parameterizations per inequality, chosen to satisfy each
// inequality's parameter constraints on a 1D or 2D torus.
fn gn_presets() -> Vec<(String, GnParams)> {
    [
        GnParams { theta: 0.5, a: 1.0, p: 2.0, p0: 2.0, p1: 2.0 },
        GnParams { theta: 0.0, a: 1.0, p: 4.0, p0: 2.0, p1: 2.0 },
        GnParams { theta: 0.25, a: 1.5, p: 3.0, p0: 2.0, p1: 2.0 },
    ]
    .into_iter()
    .map(|g| {
        (
            format!(
                "interpolation theta={} a={} p={} p0={} p1={}",
                g.theta, g.a, g.p, g.p0, g.p1
            ),
            g,
        )
    })
    .collect()
}

fn aux_presets() -> Vec<(String, AuxCheck)> {
    [
        AuxCheck::FractionalPowers { s: 1.2, r: 2.0, p: 2.0 },
        AuxCheck::FractionalPowers { s: 1.5, r: 2.0, p: 3.0 },
        AuxCheck::FractionalPowers { s: 1.25, r: 2.0, p: 2.5 },
        AuxCheck::Embedding { s1: 0.25, s2: 1.5, q: 2.0 },
        AuxCheck::Embedding { s1: 0.3, s2: 1.2, q: 2.0 },
        AuxCheck::Embedding { s1: 0.1, s2: 2.0, q: 2.0 },
        AuxCheck::ChainRule { s: 0.5, p: 2.0, r1: 4.0, r2: 4.0 },
        AuxCheck::ChainRule { s: 0.75, p: 2.0, r1: 4.0, r2: 4.0 },
        AuxCheck::ChainRule { s: 0.5, p: 3.0, r1: 6.0, r2: 3.0 },
    ]
    .into_iter()
    .map(|c| {
        let label = match c {
            AuxCheck::FractionalPowers { s, r, p } => {
                format!("fractional_powers s={s} r={r} p={p}")
            }
            AuxCheck::Embedding { s1, s2, q } => format!("embedding s1={s1} s2={s2} q={q}"),
            AuxCheck::ChainRule { s, p, r1, r2 } => {
                format!("chain_rule s={s} p={p} r1={r1} r2={r2}")
            }
        };
        (label, c)
    })
    .collect()
}

impl Mode for IneqCheck {
    fn name(&self) -> &'static str {
        "ineq-check"
    }

    fn summary(&self) -> &'static str {
        "sample LHS/RHS ratios of the fractional inequalities on seeded fields"
    }

    fn run(&self, ctx: &RunContext) -> ModeResult {
        let cfg = ctx.config;
        let grid = cfg.grid()?;
        let spec = SampleSpec {
            band_limit: cfg.ineq_band_limit,
            seed: cfg.seed,
            count: cfg.ineq_count,
            decay: cfg.ineq_decay,
        };
        let mut csv = CsvFile::create(
            ctx.out_dir,
            "ineq.csv",
            ctx.config_hash,
            &["config", "sample_seed", "ratio"],
            &[],
        )?;
        let samples: Vec<Field> = (0..spec.count)
            .map(|i| sample_field(&grid, &spec, i))
            .collect::<Result<_, _>>()?;
        for (label, params) in gn_presets() {
            for (i, sample) in samples.iter().enumerate() {
                let ratio = gn_ratio(sample, &params)?;
                csv.row(&[label.clone(), i.to_string(), num(ratio)]);
            }
        }
        for (label, check) in aux_presets() {
            for (i, sample) in samples.iter().enumerate() {
                let ratio = aux_ratio(sample, &check)?;
                csv.row(&[label.clone(), i.to_string(), num(ratio)]);
            }
        }
        Ok(vec![csv.finish()?])
    }
}
