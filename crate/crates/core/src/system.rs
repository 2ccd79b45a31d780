//! Parameters of the coupled system and the concrete initial data presets.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Gaussian bump pack for the four data components. Each component is
/// amplitude * exp(-(|x| / width)^2), so the 1D mass is amplitude * width *
/// sqrt(pi) and the 2D mass amplitude * pi * width^2.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataPreset {
    pub a_u0: f64,
    pub a_u1: f64,
    pub a_v0: f64,
    pub a_v1: f64,
    pub width: f64,
}

impl Default for InitialDataPreset {
    fn default() -> Self {
        InitialDataPreset {
            a_u0: 1.0,
            a_u1: 1.0,
            a_v0: 1.0,
            a_v1: 1.0,
            width: 1.0,
        }
    }
}

impl InitialDataPreset {
    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::Constraint(format!(
                "preset width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }

    /// Positive-mean conditions that make the data admissible for blow-up
    /// runs: the mean of u1 and of v0 + v1 must both be positive.
    pub fn is_blowup_admissible(&self) -> bool {
        self.a_u1 > 0.0 && self.a_v0 + self.a_v1 > 0.0
    }

    fn bump(&self, grid: &Arc<Grid>, amplitude: f64) -> Field {
        let inv_w_sq = 1.0 / (self.width * self.width);
        Field::from_fn(grid.clone(), |x| {
            let r_sq: f64 = x.iter().map(|c| c * c).sum();
            amplitude * (-r_sq * inv_w_sq).exp()
        })
    }

    /// The four unscaled data fields (u0, u1, v0, v1) in physical space.
    pub fn data_fields(&self, grid: &Arc<Grid>) -> [Field; 4] {
        [
            self.bump(grid, self.a_u0),
            self.bump(grid, self.a_u1),
            self.bump(grid, self.a_v0),
            self.bump(grid, self.a_v1),
        ]
    }
}

/// Exponents, data size and tracking configuration for one run of the
/// coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    /// Sobolev order used for norm tracking.
    pub s: f64,
    /// The arbitrarily small positive constant entering the loss-of-decay
    /// exponent.
    pub eps_loss: f64,
    pub preset: InitialDataPreset,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.n != 1 && self.n != 2 {
            return Err(Error::Constraint(format!(
                "dimension must be 1 or 2, got {}",
                self.n
            )));
        }
        if !(self.p.is_finite() && self.p > 1.0) || !(self.q.is_finite() && self.q > 1.0) {
            return Err(Error::Constraint(format!(
                "nonlinearity exponents must satisfy min{{p, q}} > 1, got p = {}, q = {}",
                self.p, self.q
            )));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::Constraint(format!(
                "data size eps must be >= 0, got {}",
                self.eps
            )));
        }
        if !(self.eps_loss.is_finite() && self.eps_loss > 0.0) {
            return Err(Error::Constraint(format!(
                "loss constant must be positive, got {}",
                self.eps_loss
            )));
        }
        self.preset.validate()
    }

    /// Secondary Lebesgue exponent tracked for u_t: q itself in 1D and
    /// min{2, q} in 2D.
    pub fn ut_secondary_exponent(&self) -> f64 {
        if self.n == 1 {
            self.q
        } else {
            self.q.min(2.0)
        }
    }

    /// Non-fatal warnings about the tracking order s being outside the range
    /// the decay predictions assume.
    pub fn tracking_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        match self.n {
            1 => {
                let upper = 1.0_f64
                    .min(1.5 - 1.0 / self.p)
                    .min(1.5 - 1.0 / self.q);
                if !(self.s > 0.5 && self.s < upper) {
                    warnings.push(format!(
                        "tracking order s = {} outside (1/2, min{{1, 3/2 - 1/p, 3/2 - 1/q}}) = (0.5, {:.4}); decay predictions may not apply",
                        self.s, upper
                    ));
                }
            }
            _ => {
                let upper = 2.0_f64.min(self.p);
                if !(self.s > 1.0 && self.s < upper) {
                    warnings.push(format!(
                        "tracking order s = {} outside (1, min{{2, p}}) = (1, {:.4}); decay predictions may not apply",
                        self.s, upper
                    ));
                }
            }
        }
        warnings
    }
}

/// Build the spectral state at t = 0 from the eps-scaled preset data.
pub fn initial_state(params: &SystemParams, grid: &Arc<Grid>) -> Result<crate::integrator::StatePair> {
    params.validate()?;
    if grid.dim() != params.n {
        return Err(Error::Constraint(format!(
            "grid dimension {} does not match system dimension {}",
            grid.dim(),
            params.n
        )));
    }
    let [u0, u1, v0, v1] = params.preset.data_fields(grid);
    let eps = params.eps;
    crate::integrator::StatePair::new(
        u0.scaled(eps).to_spectral(),
        u1.scaled(eps).to_spectral(),
        v0.scaled(eps).to_spectral(),
        v1.scaled(eps).to_spectral(),
        0.0,
    )
}
