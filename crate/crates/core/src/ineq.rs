//! Empirical checkers for the fractional interpolation and composition
//! inequalities used by the decay analysis: each returns the LHS/RHS ratio
//! on a sample, so bounded ratios across seeded batches are evidence the
//! discrete analogue holds. Nothing here estimates sharp constants.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{signed_mode, Grid};

/// Riesz-potential style norm on the discrete torus: apply |xi|^sigma
/// spectrally, then take the physical L^rho norm.
pub fn riesz_norm(field: &Field, sigma: f64, rho: f64) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "fractional order must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return field.lebesgue_norm(rho);
    }
    field
        .apply_multiplier(|xi_sq| xi_sq.powf(0.5 * sigma))
        .to_physical()
        .lebesgue_norm(rho)
}

/// Parameters of the fractional interpolation inequality
/// ||u||_{H^theta_p} <= C ||u||_{L^p0}^(1-omega) ||u||_{H^a_p1}^omega.
#[derive(Debug, Clone, Copy)]
pub struct GnParams {
    pub theta: f64,
    pub a: f64,
    pub p: f64,
    pub p0: f64,
    pub p1: f64,
}

impl GnParams {
    pub fn omega(&self, n: usize) -> f64 {
        let nf = n as f64;
        (1.0 / self.p0 - 1.0 / self.p + self.theta / nf)
            / (1.0 / self.p0 - 1.0 / self.p1 + self.a / nf)
    }

    pub fn validate(&self, n: usize) -> Result<f64> {
        if !(self.a > 0.0 && self.theta >= 0.0 && self.theta < self.a) {
            return Err(Error::Constraint(format!(
                "need 0 <= theta < a, got theta = {}, a = {}",
                self.theta, self.a
            )));
        }
        for (name, v) in [("p", self.p), ("p0", self.p0), ("p1", self.p1)] {
            if !(v > 1.0 && v.is_finite()) {
                return Err(Error::Constraint(format!(
                    "need {name} in (1, inf), got {v}"
                )));
            }
        }
        let omega = self.omega(n);
        if !(omega >= self.theta / self.a - 1e-12 && omega <= 1.0 + 1e-12) {
            return Err(Error::Constraint(format!(
                "inadmissible interpolation weight omega = {omega:.6}, needs theta/a <= omega <= 1"
            )));
        }
        Ok(omega.clamp(self.theta / self.a, 1.0))
    }
}

/// LHS/RHS ratio of the fractional interpolation inequality on one sample.
pub fn gn_ratio(sample: &Field, params: &GnParams) -> Result<f64> {
    let n = sample.grid().dim();
    let omega = params.validate(n)?;
    let l2 = sample.lebesgue_norm(2.0)?;
    if l2 == 0.0 {
        return Err(Error::InvalidArgument("zero sample".into()));
    }
    let lhs = riesz_norm(sample, params.theta, params.p)?;
    let rhs = sample.lebesgue_norm(params.p0)?.powf(1.0 - omega)
        * riesz_norm(sample, params.a, params.p1)?.powf(omega);
    if rhs == 0.0 {
        return Err(Error::InvalidArgument(
            "degenerate sample: RHS vanishes".into(),
        ));
    }
    Ok(lhs / rhs)
}

/// The three auxiliary inequalities: composition with |u|^p measured in a
/// fractional norm (two routes) and the two-norm uniform bound.
#[derive(Debug, Clone, Copy)]
pub enum AuxCheck {
    /// ||  |u|^p ||_{H^s_r} <= C ||u||_{H^s_r} ||u||_inf^(p-1), for
    /// s in (n/r, p).
    FractionalPowers { s: f64, r: f64, p: f64 },
    /// ||u||_inf <= C (||u||_{H^s1_q} + ||u||_{H^s2_q}), for 0 < s1 < n/q < s2.
    Embedding { s1: f64, s2: f64, q: f64 },
    /// || |u|^p ||_{H^s_r} <= C ||u||_{L^r1}^(p-1) ||u||_{H^s_r2} with
    /// 1/r = (p-1)/r1 + 1/r2.
    ChainRule { s: f64, p: f64, r1: f64, r2: f64 },
}

/// LHS/RHS ratio for the requested inequality; parameter constraints are
/// rejected with the violated condition named.
pub fn aux_ratio(sample: &Field, check: &AuxCheck) -> Result<f64> {
    let n = sample.grid().dim() as f64;
    if sample.lebesgue_norm(2.0)? == 0.0 {
        return Err(Error::InvalidArgument("zero sample".into()));
    }
    match *check {
        AuxCheck::FractionalPowers { s, r, p } => {
            if !(r > 1.0 && r.is_finite()) {
                return Err(Error::Constraint(format!("need r in (1, inf), got {r}")));
            }
            if !(s > n / r && s < p) {
                return Err(Error::Constraint(format!(
                    "need s in (n/r, p) = ({}, {p}), got s = {s}",
                    n / r
                )));
            }
            let powered = sample.pointwise_power(p, false)?;
            let lhs = riesz_norm(&powered, s, r)?;
            let rhs = riesz_norm(sample, s, r)? * sample.max_abs().powf(p - 1.0);
            Ok(lhs / rhs)
        }
        AuxCheck::Embedding { s1, s2, q } => {
            if !(q > 1.0 && q.is_finite()) {
                return Err(Error::Constraint(format!("need q in (1, inf), got {q}")));
            }
            if !(s1 > 0.0 && s1 < n / q && n / q < s2) {
                return Err(Error::Constraint(format!(
                    "need 0 < s1 < n/q < s2 with n/q = {}, got s1 = {s1}, s2 = {s2}",
                    n / q
                )));
            }
            let lhs = sample.max_abs();
            let rhs = riesz_norm(sample, s1, q)? + riesz_norm(sample, s2, q)?;
            Ok(lhs / rhs)
        }
        AuxCheck::ChainRule { s, p, r1, r2 } => {
            if !(s > 0.0) {
                return Err(Error::Constraint(format!("need s > 0, got {s}")));
            }
            if p <= s.ceil() {
                return Err(Error::Constraint(format!(
                    "need p > ceil(s) = {}, got p = {p}",
                    s.ceil()
                )));
            }
            let r_inv = (p - 1.0) / r1 + 1.0 / r2;
            let r = 1.0 / r_inv;
            if !(r > 1.0 && r.is_finite()) {
                return Err(Error::Constraint(format!(
                    "derived exponent 1/r = (p-1)/r1 + 1/r2 gives r = {r}, needs r in (1, inf)"
                )));
            }
            let powered = sample.pointwise_power(p, false)?;
            let lhs = riesz_norm(&powered, s, r)?;
            let rhs = sample.lebesgue_norm(r1)?.powf(p - 1.0) * riesz_norm(sample, s, r2)?;
            Ok(lhs / rhs)
        }
    }
}

/// Seeded band-limited random fields with a power-law spectral envelope.
#[derive(Debug, Clone)]
pub struct SampleSpec {
    /// Fraction of the Nyquist frequency carrying energy, in (0, 2/3].
    pub band_limit: f64,
    pub seed: u64,
    pub count: usize,
    /// Spectral envelope |m|^(-decay).
    pub decay: f64,
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.band_limit > 0.0 && self.band_limit <= 2.0 / 3.0) {
            return Err(Error::Constraint(format!(
                "band_limit must lie in (0, 2/3], got {}",
                self.band_limit
            )));
        }
        if self.count == 0 {
            return Err(Error::Constraint("sample count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Draw sample number `index` of the spec: white noise shaped by the
/// envelope and radial band mask, mean removed, so the result is real and
/// band-limited. Deterministic in (seed, index).
pub fn sample_field(grid: &Arc<Grid>, spec: &SampleSpec, index: usize) -> Result<Field> {
    spec.validate()?;
    let seed = spec
        .seed
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let field = Field::from_physical(grid.clone(), noise)?;
    let spectral = field.to_spectral();
    let npd = grid.points_per_dim();
    let m_max = spec.band_limit * (npd as f64 / 2.0);
    let coeffs: Vec<Complex64> = spectral
        .spectral_coeffs()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let m = match grid.dim() {
                1 => signed_mode(idx, npd).abs() as f64,
                _ => {
                    let mx = signed_mode(idx % npd, npd) as f64;
                    let my = signed_mode(idx / npd, npd) as f64;
                    mx.hypot(my)
                }
            };
            if m == 0.0 || m > m_max {
                Complex64::new(0.0, 0.0)
            } else {
                c * m.powf(-spec.decay)
            }
        })
        .collect();
    Ok(Field::from_spectral(grid.clone(), coeffs)?.to_physical())
}
