//! Time evolution of the coupled system.
//!
//! The stepper treats the linear part exactly per Fourier mode and
//! quadratures the nonlinear sources through the variation-of-constants
//! integral: a predictor freezes the sources over the step, a corrector
//! re-evaluates them at the predicted endpoint and applies the linear-in-time
//! source correction (ETD2). With vanishing sources the step reduces to the
//! exact linear propagator.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{l2_norm_spectrum, lebesgue_norm_slice, Field};
use crate::grid::{signed_mode, Grid};
use crate::kernel::{k_pair, CutoffConfig};
use crate::system::SystemParams;

/// The four evolved fields in spectral representation at one time.
#[derive(Debug, Clone)]
pub struct StatePair {
    pub u_hat: Field,
    pub ut_hat: Field,
    pub v_hat: Field,
    pub vt_hat: Field,
    pub time: f64,
}

impl StatePair {
    pub fn new(u_hat: Field, ut_hat: Field, v_hat: Field, vt_hat: Field, time: f64) -> Result<StatePair> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "state time must be finite and >= 0, got {time}"
            )));
        }
        let grid = u_hat.grid().clone();
        for f in [&ut_hat, &v_hat, &vt_hat] {
            if f.grid().as_ref() != grid.as_ref() {
                return Err(Error::InvalidArgument(
                    "all four fields must share one grid".into(),
                ));
            }
        }
        let spectral = |f: &Field| f.to_spectral();
        Ok(StatePair {
            u_hat: spectral(&u_hat),
            ut_hat: spectral(&ut_hat),
            v_hat: spectral(&v_hat),
            vt_hat: spectral(&vt_hat),
            time,
        })
    }

    pub(crate) fn from_spectral_parts(
        grid: Arc<Grid>,
        u: Vec<Complex64>,
        ut: Vec<Complex64>,
        v: Vec<Complex64>,
        vt: Vec<Complex64>,
        time: f64,
    ) -> Result<StatePair> {
        Ok(StatePair {
            u_hat: Field::from_spectral(grid.clone(), u)?,
            ut_hat: Field::from_spectral(grid.clone(), ut)?,
            v_hat: Field::from_spectral(grid.clone(), v)?,
            vt_hat: Field::from_spectral(grid, vt)?,
            time,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u_hat.grid()
    }

    pub fn zero(grid: Arc<Grid>) -> StatePair {
        StatePair {
            u_hat: Field::zero(grid.clone()),
            ut_hat: Field::zero(grid.clone()),
            v_hat: Field::zero(grid.clone()),
            vt_hat: Field::zero(grid),
            time: 0.0,
        }
    }
}

/// Options for one simulation run.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub t_max: f64,
    pub h: f64,
    /// Record the tracked norms every this many steps.
    pub sample_every: usize,
    /// Test hook: with the sources disabled the run must match the exact
    /// linear propagator.
    pub nonlinearity_enabled: bool,
    /// Optional 2/3-rule spectral truncation of the source spectra, for
    /// convergence studies of the non-polynomial nonlinearities.
    pub dealias: bool,
    pub blowup_threshold: f64,
}

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

impl SimOptions {
    /// Defaults for decay experiments (h = 0.1).
    pub fn decay(t_max: f64) -> SimOptions {
        SimOptions {
            t_max,
            h: 0.1,
            sample_every: 10,
            nonlinearity_enabled: true,
            dealias: false,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    /// Defaults for blow-up experiments (h = 0.05).
    pub fn blowup(t_max: f64) -> SimOptions {
        SimOptions {
            h: 0.05,
            sample_every: 20,
            ..SimOptions::decay(t_max)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {}",
                self.h
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument(
                "sample_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    BlowupDetected,
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupTrigger {
    Threshold,
    NonFinite,
}

/// Time series of the six tracked norms plus the frequency-split energies.
#[derive(Debug, Clone)]
pub struct NormTrace {
    pub times: Vec<f64>,
    pub l2_ut: Vec<f64>,
    pub lq_ut: Vec<f64>,
    pub hs_ut: Vec<f64>,
    pub lp_v: Vec<f64>,
    pub l2_v: Vec<f64>,
    pub hs_v: Vec<f64>,
    pub low_energy: Vec<f64>,
    pub high_energy: Vec<f64>,
    pub status: RunStatus,
    /// Time at which the one-shot step halving fired, if it did.
    pub rescued_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormName {
    UtL2,
    UtLq,
    UtHs,
    VLp,
    VL2,
    VHs,
}

impl NormName {
    pub const ALL: [NormName; 6] = [
        NormName::UtL2,
        NormName::UtLq,
        NormName::UtHs,
        NormName::VLp,
        NormName::VL2,
        NormName::VHs,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            NormName::UtL2 => "l2_ut",
            NormName::UtLq => "lq_ut",
            NormName::UtHs => "hs_ut",
            NormName::VLp => "lp_v",
            NormName::VL2 => "l2_v",
            NormName::VHs => "hs_v",
        }
    }
}

impl NormTrace {
    fn empty() -> NormTrace {
        NormTrace {
            times: Vec::new(),
            l2_ut: Vec::new(),
            lq_ut: Vec::new(),
            hs_ut: Vec::new(),
            lp_v: Vec::new(),
            l2_v: Vec::new(),
            hs_v: Vec::new(),
            low_energy: Vec::new(),
            high_energy: Vec::new(),
            status: RunStatus::Completed,
            rescued_at: None,
        }
    }

    pub fn series(&self, name: NormName) -> &[f64] {
        match name {
            NormName::UtL2 => &self.l2_ut,
            NormName::UtLq => &self.lq_ut,
            NormName::UtHs => &self.hs_ut,
            NormName::VLp => &self.lp_v,
            NormName::VL2 => &self.l2_v,
            NormName::VHs => &self.hs_v,
        }
    }
}

/// Outcome of blow-up monitoring for one run.
#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub detected: bool,
    pub t_detect: Option<f64>,
    pub trigger: Option<BlowupTrigger>,
    /// Largest observed value of ||u_t||_2 + ||v||_2.
    pub peak_norm: f64,
}

// Per-mode step coefficients: the exact transition matrix entries plus the
// source weights w0 = int_0^h K(s) ds (4-point Gauss-Legendre), w1 = K(h)
// and their linear-in-source counterparts w0s = int K(s)(1 - s/h) ds,
// w1s = w0 / h.
struct StepTables {
    h: f64,
    trans_uu: Vec<f64>,
    trans_uk: Vec<f64>,
    trans_tu: Vec<f64>,
    trans_tt: Vec<f64>,
    w0: Vec<f64>,
    w0s: Vec<f64>,
    w1: Vec<f64>,
    w1s: Vec<f64>,
}

const GL4_NODES: [f64; 4] = [
    -0.8611363115940526,
    -0.3399810435848563,
    0.3399810435848563,
    0.8611363115940526,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.3478548451374538,
    0.6521451548625461,
    0.6521451548625461,
    0.3478548451374538,
];

impl StepTables {
    fn build(grid: &Grid, h: f64) -> StepTables {
        let n = grid.len();
        let mut t = StepTables {
            h,
            trans_uu: Vec::with_capacity(n),
            trans_uk: Vec::with_capacity(n),
            trans_tu: Vec::with_capacity(n),
            trans_tt: Vec::with_capacity(n),
            w0: Vec::with_capacity(n),
            w0s: Vec::with_capacity(n),
            w1: Vec::with_capacity(n),
            w1s: Vec::with_capacity(n),
        };
        for idx in 0..n {
            let xi_sq = grid.xi_sq(idx);
            let (k, kt) = k_pair(h, xi_sq);
            let mut w0 = 0.0;
            let mut w0s = 0.0;
            for (node, weight) in GL4_NODES.iter().zip(GL4_WEIGHTS) {
                let s = 0.5 * h * (1.0 + node);
                let (ks, _) = k_pair(s, xi_sq);
                w0 += 0.5 * h * weight * ks;
                w0s += 0.5 * h * weight * ks * (1.0 - s / h);
            }
            t.trans_uu.push(k + kt);
            t.trans_uk.push(k);
            t.trans_tu.push(-xi_sq * k);
            t.trans_tt.push(kt);
            t.w0.push(w0);
            t.w0s.push(w0s);
            t.w1.push(k);
            t.w1s.push(w0 / h);
        }
        t
    }
}

struct Workspace {
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
    phys_a: Vec<f64>,
    phys_b: Vec<f64>,
    nl_u: Vec<Complex64>,
    nl_v: Vec<Complex64>,
    nl_u2: Vec<Complex64>,
    nl_v2: Vec<Complex64>,
    pred: [Vec<Complex64>; 4],
    backup: [Vec<Complex64>; 4],
    dealias_mask: Option<Vec<bool>>,
}

impl Workspace {
    fn new(grid: &Grid, dealias: bool) -> Workspace {
        let n = grid.len();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let mask = dealias.then(|| {
            let npd = grid.points_per_dim();
            let keep = npd as i64 / 3;
            (0..n)
                .map(|idx| match grid.dim() {
                    1 => signed_mode(idx, npd).abs() <= keep,
                    _ => {
                        signed_mode(idx % npd, npd).abs() <= keep
                            && signed_mode(idx / npd, npd).abs() <= keep
                    }
                })
                .collect()
        });
        Workspace {
            scratch: Vec::new(),
            buf: zero.clone(),
            phys_a: vec![0.0; n],
            phys_b: vec![0.0; n],
            nl_u: zero.clone(),
            nl_v: zero.clone(),
            nl_u2: zero.clone(),
            nl_v2: zero.clone(),
            pred: [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            backup: [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            dealias_mask: mask,
        }
    }
}

fn to_physical_into(grid: &Grid, spec: &[Complex64], ws_buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>, out: &mut [f64]) {
    ws_buf.clear();
    ws_buf.extend_from_slice(spec);
    grid.dft_inverse(ws_buf, scratch);
    for (o, z) in out.iter_mut().zip(ws_buf.iter()) {
        *o = z.re;
    }
}

// |field|^h evaluated in physical space, returned as a spectrum.
fn source_spectrum(
    grid: &Grid,
    field_spec: &[Complex64],
    exponent: f64,
    ws_buf: &mut Vec<Complex64>,
    scratch: &mut Vec<Complex64>,
    phys: &mut [f64],
    out: &mut [Complex64],
    mask: &Option<Vec<bool>>,
) {
    to_physical_into(grid, field_spec, ws_buf, scratch, phys);
    ws_buf.clear();
    ws_buf.extend(phys.iter().map(|&x| Complex64::new(x.abs().powf(exponent), 0.0)));
    grid.dft_forward(ws_buf, scratch);
    out.copy_from_slice(ws_buf);
    if let Some(mask) = mask {
        for (z, keep) in out.iter_mut().zip(mask) {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
}

struct RawState {
    u: Vec<Complex64>,
    ut: Vec<Complex64>,
    v: Vec<Complex64>,
    vt: Vec<Complex64>,
    time: f64,
}

fn etd2_step(
    grid: &Grid,
    state: &mut RawState,
    tables: &StepTables,
    params: &SystemParams,
    nonlinear: bool,
    ws: &mut Workspace,
) -> bool {
    let n = grid.len();
    if nonlinear {
        source_spectrum(grid, &state.v, params.p, &mut ws.buf, &mut ws.scratch, &mut ws.phys_a, &mut ws.nl_u, &ws.dealias_mask);
        source_spectrum(grid, &state.ut, params.q, &mut ws.buf, &mut ws.scratch, &mut ws.phys_b, &mut ws.nl_v, &ws.dealias_mask);
    } else {
        ws.nl_u.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        ws.nl_v.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    }

    // predictor: exact linear transport plus constant-in-time source
    for i in 0..n {
        ws.pred[0][i] = tables.trans_uu[i] * state.u[i]
            + tables.trans_uk[i] * state.ut[i]
            + tables.w0[i] * ws.nl_u[i];
        ws.pred[1][i] = tables.trans_tu[i] * state.u[i]
            + tables.trans_tt[i] * state.ut[i]
            + tables.w1[i] * ws.nl_u[i];
        ws.pred[2][i] = tables.trans_uu[i] * state.v[i]
            + tables.trans_uk[i] * state.vt[i]
            + tables.w0[i] * ws.nl_v[i];
        ws.pred[3][i] = tables.trans_tu[i] * state.v[i]
            + tables.trans_tt[i] * state.vt[i]
            + tables.w1[i] * ws.nl_v[i];
    }

    if nonlinear {
        // corrector: re-evaluate the sources at the predicted endpoint and
        // account for their linear variation over the step
        let (pred_v, pred_ut) = (ws.pred[2].clone(), ws.pred[1].clone());
        source_spectrum(grid, &pred_v, params.p, &mut ws.buf, &mut ws.scratch, &mut ws.phys_a, &mut ws.nl_u2, &ws.dealias_mask);
        source_spectrum(grid, &pred_ut, params.q, &mut ws.buf, &mut ws.scratch, &mut ws.phys_b, &mut ws.nl_v2, &ws.dealias_mask);
        for i in 0..n {
            let du = ws.nl_u2[i] - ws.nl_u[i];
            let dv = ws.nl_v2[i] - ws.nl_v[i];
            state.u[i] = ws.pred[0][i] + tables.w0s[i] * du;
            state.ut[i] = ws.pred[1][i] + tables.w1s[i] * du;
            state.v[i] = ws.pred[2][i] + tables.w0s[i] * dv;
            state.vt[i] = ws.pred[3][i] + tables.w1s[i] * dv;
        }
    } else {
        state.u.copy_from_slice(&ws.pred[0]);
        state.ut.copy_from_slice(&ws.pred[1]);
        state.v.copy_from_slice(&ws.pred[2]);
        state.vt.copy_from_slice(&ws.pred[3]);
    }
    state.time += tables.h;

    state
        .u
        .iter()
        .chain(&state.ut)
        .chain(&state.v)
        .chain(&state.vt)
        .all(|z| z.re.is_finite() && z.im.is_finite())
}

/// One predictor-corrector step of the exponential integrator. With both
/// nonlinearities absent this is exactly [`crate::kernel::propagate_linear`].
pub fn duhamel_step(state: &StatePair, h: f64, params: &SystemParams) -> Result<StatePair> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {h}"
        )));
    }
    params.validate()?;
    let grid = state.grid().clone();
    let tables = StepTables::build(&grid, h);
    let mut ws = Workspace::new(&grid, false);
    let mut raw = RawState {
        u: state.u_hat.spectral_coeffs().unwrap().to_vec(),
        ut: state.ut_hat.spectral_coeffs().unwrap().to_vec(),
        v: state.v_hat.spectral_coeffs().unwrap().to_vec(),
        vt: state.vt_hat.spectral_coeffs().unwrap().to_vec(),
        time: state.time,
    };
    let finite = etd2_step(&grid, &mut raw, &tables, params, true, &mut ws);
    if !finite {
        return Err(Error::Overflow(format!(
            "state became non-finite during the step at t = {}",
            state.time
        )));
    }
    StatePair::from_spectral_parts(grid, raw.u, raw.ut, raw.v, raw.vt, raw.time)
}

fn monitor_norm(grid: &Grid, state: &RawState) -> f64 {
    l2_norm_spectrum(&state.ut, grid) + l2_norm_spectrum(&state.v, grid)
}

// Sampled norms assembled from one pair of inverse transforms.
struct Sampler {
    lq_exponent: f64,
    hs_weight: Vec<f64>,
    chi_low_sq: Vec<f64>,
}

impl Sampler {
    fn new(grid: &Grid, params: &SystemParams) -> Sampler {
        let cutoff = CutoffConfig::default();
        let hs_weight = (0..grid.len()).map(|i| grid.xi_sq(i).powf(params.s)).collect();
        let chi_low_sq = (0..grid.len())
            .map(|i| {
                let chi = cutoff.chi_low(grid.xi_sq(i).sqrt());
                chi * chi
            })
            .collect();
        Sampler {
            lq_exponent: params.ut_secondary_exponent(),
            hs_weight,
            chi_low_sq,
        }
    }

    fn weighted_l2(&self, grid: &Grid, spec: &[Complex64], weight: &[f64]) -> f64 {
        let sum: f64 = spec
            .iter()
            .zip(weight)
            .map(|(z, w)| w * z.norm_sqr())
            .sum();
        (sum / grid.domain_volume()).sqrt()
    }

    fn record(
        &self,
        grid: &Grid,
        state: &RawState,
        params: &SystemParams,
        ws: &mut Workspace,
        trace: &mut NormTrace,
        observer: &mut dyn FnMut(f64, &[f64], &[f64]),
    ) {
        to_physical_into(grid, &state.ut, &mut ws.buf, &mut ws.scratch, &mut ws.phys_a);
        to_physical_into(grid, &state.v, &mut ws.buf, &mut ws.scratch, &mut ws.phys_b);
        let cell = grid.cell_volume();
        trace.times.push(state.time);
        trace.l2_ut.push(l2_norm_spectrum(&state.ut, grid));
        trace.lq_ut.push(lebesgue_norm_slice(&ws.phys_a, self.lq_exponent, cell));
        trace.hs_ut.push(self.weighted_l2(grid, &state.ut, &self.hs_weight));
        trace.lp_v.push(lebesgue_norm_slice(&ws.phys_b, params.p, cell));
        trace.l2_v.push(l2_norm_spectrum(&state.v, grid));
        trace.hs_v.push(self.weighted_l2(grid, &state.v, &self.hs_weight));
        let low = self.weighted_l2(grid, &state.ut, &self.chi_low_sq).powi(2)
            + self.weighted_l2(grid, &state.v, &self.chi_low_sq).powi(2);
        let total = trace.l2_ut.last().unwrap().powi(2) + trace.l2_v.last().unwrap().powi(2);
        trace.low_energy.push(low);
        trace.high_energy.push((total - low).max(0.0));
        observer(state.time, &ws.phys_a, &ws.phys_b);
    }
}

/// Run the full nonlinear system from the eps-scaled preset data.
pub fn simulate(
    params: &SystemParams,
    grid: &Arc<Grid>,
    opts: &SimOptions,
) -> Result<(NormTrace, BlowupReport)> {
    simulate_observed(params, grid, opts, |_, _, _| {})
}

/// As [`simulate`], also invoking `observer(t, u_t, v)` with the physical
/// fields at every sample time.
pub fn simulate_observed(
    params: &SystemParams,
    grid: &Arc<Grid>,
    opts: &SimOptions,
    mut observer: impl FnMut(f64, &[f64], &[f64]),
) -> Result<(NormTrace, BlowupReport)> {
    params.validate()?;
    opts.validate()?;
    let init = crate::system::initial_state(params, grid)?;
    let mut state = RawState {
        u: init.u_hat.spectral_coeffs().unwrap().to_vec(),
        ut: init.ut_hat.spectral_coeffs().unwrap().to_vec(),
        v: init.v_hat.spectral_coeffs().unwrap().to_vec(),
        vt: init.vt_hat.spectral_coeffs().unwrap().to_vec(),
        time: 0.0,
    };
    let mut ws = Workspace::new(grid, opts.dealias);
    let sampler = Sampler::new(grid, params);
    let mut tables = StepTables::build(grid, opts.h);
    let mut trace = NormTrace::empty();
    let mut report = BlowupReport {
        detected: false,
        t_detect: None,
        trigger: None,
        peak_norm: 0.0,
    };

    sampler.record(grid, &state, params, &mut ws, &mut trace, &mut observer);
    report.peak_norm = monitor_norm(grid, &state);

    let mut steps_since_sample = 0usize;
    let mut rescued = false;
    while state.time < opts.t_max - 1e-9 {
        let before = monitor_norm(grid, &state);
        ws.backup[0].copy_from_slice(&state.u);
        ws.backup[1].copy_from_slice(&state.ut);
        ws.backup[2].copy_from_slice(&state.v);
        ws.backup[3].copy_from_slice(&state.vt);
        let backup_time = state.time;

        let finite = etd2_step(grid, &mut state, &tables, params, opts.nonlinearity_enabled, &mut ws);
        if !finite {
            trace.status = RunStatus::Overflow;
            report.detected = true;
            report.t_detect = Some(state.time);
            report.trigger = Some(BlowupTrigger::NonFinite);
            break;
        }
        let after = monitor_norm(grid, &state);
        report.peak_norm = report.peak_norm.max(after);

        if !rescued && before > 0.0 && after > 10.0 * before {
            // one-shot rescue: retry the step at half size, then keep it
            rescued = true;
            trace.rescued_at = Some(backup_time);
            state.u.copy_from_slice(&ws.backup[0]);
            state.ut.copy_from_slice(&ws.backup[1]);
            state.v.copy_from_slice(&ws.backup[2]);
            state.vt.copy_from_slice(&ws.backup[3]);
            state.time = backup_time;
            tables = StepTables::build(grid, tables.h / 2.0);
            continue;
        }

        steps_since_sample += 1;
        let final_step = state.time >= opts.t_max - 1e-9;
        if steps_since_sample == opts.sample_every || final_step {
            sampler.record(grid, &state, params, &mut ws, &mut trace, &mut observer);
            steps_since_sample = 0;
        }

        if after > opts.blowup_threshold {
            trace.status = RunStatus::BlowupDetected;
            report.detected = true;
            report.t_detect = Some(state.time);
            report.trigger = Some(BlowupTrigger::Threshold);
            break;
        }
    }

    Ok((trace, report))
}

/// Warnings about configurations that run but degrade the decay diagnostics.
pub fn preflight_warnings(params: &SystemParams, grid: &Grid, t_max: f64) -> Vec<String> {
    let mut warnings = params.tracking_warnings();
    let needed = 10.0 * t_max.sqrt();
    if grid.half_length() < needed {
        warnings.push(format!(
            "half_length {} below the decay-experiment heuristic 10 sqrt(t_max) = {:.1}; periodization may contaminate late-time norms",
            grid.half_length(),
            needed
        ));
    }
    warnings
}

/// Successive-approximation solution on a fixed time mesh.
#[derive(Debug)]
pub struct PicardResult {
    pub history: Vec<StatePair>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterate the integral-equation map from the zero pair: each sweep feeds the
/// previous iterate's sources through the variation-of-constants integral,
/// discretized by the trapezoidal rule on the mesh. Stops when successive
/// iterates differ by at most `tol` in sup-over-time of ||u_t||_2 + ||v||_2.
pub fn picard_iterate(
    params: &SystemParams,
    grid: &Arc<Grid>,
    t_end: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PicardResult> {
    params.validate()?;
    if !(t_end.is_finite() && t_end > 0.0 && h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(
            "picard horizon and step must be positive".into(),
        ));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let steps = (t_end / h).round().max(1.0) as usize;
    let n = grid.len();

    // kernel tables at every multiple of h
    let mut ktab = vec![vec![0.0f64; n]; steps + 1];
    let mut kttab = vec![vec![0.0f64; n]; steps + 1];
    for (d, (krow, ktrow)) in ktab.iter_mut().zip(kttab.iter_mut()).enumerate() {
        let t = d as f64 * h;
        for i in 0..n {
            let (k, kt) = k_pair(t, grid.xi_sq(i));
            krow[i] = k;
            ktrow[i] = kt;
        }
    }

    let init = crate::system::initial_state(params, grid)?;
    let u0 = init.u_hat.spectral_coeffs().unwrap().to_vec();
    let ut0 = init.ut_hat.spectral_coeffs().unwrap().to_vec();
    let v0 = init.v_hat.spectral_coeffs().unwrap().to_vec();
    let vt0 = init.vt_hat.spectral_coeffs().unwrap().to_vec();

    // linear evolution of the data, fixed across iterations
    let lin = |j: usize, a: &[Complex64], b: &[Complex64]| -> (Vec<Complex64>, Vec<Complex64>) {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        let mut yt = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let (k, kt) = (ktab[j][i], kttab[j][i]);
            y[i] = (k + kt) * a[i] + k * b[i];
            yt[i] = -grid.xi_sq(i) * k * a[i] + kt * b[i];
        }
        (y, yt)
    };
    let mut u_lin = Vec::with_capacity(steps + 1);
    let mut v_lin = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        u_lin.push(lin(j, &u0, &ut0));
        v_lin.push(lin(j, &v0, &vt0));
    }

    // iterate 0 is the linear solution
    let mut cur_u: Vec<Vec<Complex64>> = u_lin.iter().map(|x| x.0.clone()).collect();
    let mut cur_ut: Vec<Vec<Complex64>> = u_lin.iter().map(|x| x.1.clone()).collect();
    let mut cur_v: Vec<Vec<Complex64>> = v_lin.iter().map(|x| x.0.clone()).collect();
    let mut cur_vt: Vec<Vec<Complex64>> = v_lin.iter().map(|x| x.1.clone()).collect();

    let mut ws = Workspace::new(grid, false);
    let mut converged = false;
    let mut iterations = 0;

    let mut src_u = vec![vec![Complex64::new(0.0, 0.0); n]; steps + 1];
    let mut src_v = vec![vec![Complex64::new(0.0, 0.0); n]; steps + 1];

    'outer: for _ in 0..max_iter {
        iterations += 1;
        for j in 0..=steps {
            source_spectrum(grid, &cur_v[j], params.p, &mut ws.buf, &mut ws.scratch, &mut ws.phys_a, &mut src_u[j], &None);
            source_spectrum(grid, &cur_ut[j], params.q, &mut ws.buf, &mut ws.scratch, &mut ws.phys_b, &mut src_v[j], &None);
        }
        let mut delta = 0.0f64;
        for j in 0..=steps {
            let mut nu = u_lin[j].0.clone();
            let mut nut = u_lin[j].1.clone();
            let mut nv = v_lin[j].0.clone();
            let mut nvt = v_lin[j].1.clone();
            for k in 0..=j {
                if j == 0 {
                    break;
                }
                let w = if k == 0 || k == j { 0.5 * h } else { h };
                let d = j - k;
                let (kd, ktd) = (&ktab[d], &kttab[d]);
                for i in 0..n {
                    nu[i] += w * kd[i] * src_u[k][i];
                    nut[i] += w * ktd[i] * src_u[k][i];
                    nv[i] += w * kd[i] * src_v[k][i];
                    nvt[i] += w * ktd[i] * src_v[k][i];
                }
            }
            let mut diff_ut = vec![Complex64::new(0.0, 0.0); n];
            let mut diff_v = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                diff_ut[i] = nut[i] - cur_ut[j][i];
                diff_v[i] = nv[i] - cur_v[j][i];
            }
            delta = delta.max(
                l2_norm_spectrum(&diff_ut, grid) + l2_norm_spectrum(&diff_v, grid),
            );
            cur_u[j] = nu;
            cur_ut[j] = nut;
            cur_v[j] = nv;
            cur_vt[j] = nvt;
        }
        if !delta.is_finite() {
            break 'outer;
        }
        if delta <= tol {
            converged = true;
            break;
        }
    }

    let mut history = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        history.push(StatePair::from_spectral_parts(
            grid.clone(),
            cur_u[j].clone(),
            cur_ut[j].clone(),
            cur_v[j].clone(),
            cur_vt[j].clone(),
            j as f64 * h,
        )?);
    }
    Ok(PicardResult {
        history,
        iterations,
        converged,
    })
}
