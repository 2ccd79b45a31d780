//! Scalar fields on a [`Grid`], stored either as real values in physical
//! space or as complex Fourier coefficients, together with the norms used
//! throughout the suite.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone)]
enum Repr {
    Physical(Vec<f64>),
    Spectral(Vec<Complex64>),
}

/// Immutable field; every operation returns a new value.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    repr: Repr,
}

impl Field {
    pub fn from_physical(grid: Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field length {} does not match grid length {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field {
            grid,
            repr: Repr::Physical(values),
        })
    }

    pub fn from_spectral(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Field> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field length {} does not match grid length {}",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Field {
            grid,
            repr: Repr::Spectral(coeffs),
        })
    }

    /// Sample a function of the physical coordinates onto the grid.
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: Arc<Grid>, mut f: F) -> Field {
        let mut values = Vec::with_capacity(grid.len());
        let mut xy = [0.0; 2];
        for idx in 0..grid.len() {
            let d = grid.point(idx, &mut xy);
            values.push(f(&xy[..d]));
        }
        Field {
            grid,
            repr: Repr::Physical(values),
        }
    }

    pub fn zero(grid: Arc<Grid>) -> Field {
        let n = grid.len();
        Field {
            grid,
            repr: Repr::Spectral(vec![Complex64::new(0.0, 0.0); n]),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.repr, Repr::Physical(_))
    }

    pub fn physical_values(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Physical(v) => Some(v),
            Repr::Spectral(_) => None,
        }
    }

    pub fn spectral_coeffs(&self) -> Option<&[Complex64]> {
        match &self.repr {
            Repr::Spectral(c) => Some(c),
            Repr::Physical(_) => None,
        }
    }

    /// Forward transform; identity if already spectral.
    pub fn to_spectral(&self) -> Field {
        match &self.repr {
            Repr::Spectral(_) => self.clone(),
            Repr::Physical(v) => {
                let mut buf: Vec<Complex64> =
                    v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                let mut scratch = Vec::new();
                self.grid.dft_forward(&mut buf, &mut scratch);
                Field {
                    grid: self.grid.clone(),
                    repr: Repr::Spectral(buf),
                }
            }
        }
    }

    /// Inverse transform dropping the imaginary residue; identity if already
    /// physical. See [`Field::imag_residue`] for the size of what is dropped.
    pub fn to_physical(&self) -> Field {
        match &self.repr {
            Repr::Physical(_) => self.clone(),
            Repr::Spectral(c) => {
                let mut buf = c.clone();
                let mut scratch = Vec::new();
                self.grid.dft_inverse(&mut buf, &mut scratch);
                let values = buf.iter().map(|z| z.re).collect();
                Field {
                    grid: self.grid.clone(),
                    repr: Repr::Physical(values),
                }
            }
        }
    }

    /// Max |Im| of the inverse transform relative to the max |Re|, a measure
    /// of how far the spectrum is from Hermitian symmetry. Zero for physical
    /// fields.
    pub fn imag_residue(&self) -> f64 {
        match &self.repr {
            Repr::Physical(_) => 0.0,
            Repr::Spectral(c) => {
                let mut buf = c.clone();
                let mut scratch = Vec::new();
                self.grid.dft_inverse(&mut buf, &mut scratch);
                let max_im = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                let max_re = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
                if max_re > 0.0 {
                    max_im / max_re
                } else {
                    max_im
                }
            }
        }
    }

    /// L^r norm by the rectangle rule, (sum |f|^r cell_volume)^(1/r).
    pub fn lebesgue_norm(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Lebesgue exponent must satisfy r >= 1, got {r}"
            )));
        }
        let phys = self.to_physical();
        let values = phys.physical_values().expect("physical after conversion");
        Ok(lebesgue_norm_slice(values, r, self.grid.cell_volume()))
    }

    /// Homogeneous Sobolev seminorm of order s: discrete L^2 norm of the
    /// multiplier |xi|^s applied to the spectrum. Coincides with the L^2 norm
    /// at s = 0 (the zero mode keeps weight one there).
    pub fn sobolev_seminorm(&self, s: f64) -> Result<f64> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Sobolev order must satisfy s >= 0, got {s}"
            )));
        }
        let spec = self.to_spectral();
        let coeffs = spec.spectral_coeffs().expect("spectral after conversion");
        Ok(sobolev_seminorm_spectrum(coeffs, s, &self.grid))
    }

    /// Largest |f(x_j)| over the grid; stands in for the L^infinity norm of
    /// band-limited samples.
    pub fn max_abs(&self) -> f64 {
        let phys = self.to_physical();
        phys.physical_values()
            .expect("physical after conversion")
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise |f|^h, or sign(f)|f|^h when `signed` is set.
    pub fn pointwise_power(&self, h: f64, signed: bool) -> Result<Field> {
        if !(h.is_finite() && h > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "nonlinearity exponent must satisfy h > 1, got {h}"
            )));
        }
        let phys = self.to_physical();
        let values = phys.physical_values().expect("physical after conversion");
        let out = values
            .iter()
            .map(|&x| {
                let p = x.abs().powf(h);
                if signed && x < 0.0 {
                    -p
                } else {
                    p
                }
            })
            .collect();
        Field::from_physical(self.grid.clone(), out)
    }

    /// Apply the real multiplier m(|xi|^2) mode-wise.
    pub fn apply_multiplier<F: FnMut(f64) -> f64>(&self, mut m: F) -> Field {
        let spec = self.to_spectral();
        let mut coeffs = spec.spectral_coeffs().unwrap().to_vec();
        for (idx, c) in coeffs.iter_mut().enumerate() {
            *c *= m(self.grid.xi_sq(idx));
        }
        Field {
            grid: self.grid.clone(),
            repr: Repr::Spectral(coeffs),
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        match &self.repr {
            Repr::Physical(v) => Field {
                grid: self.grid.clone(),
                repr: Repr::Physical(v.iter().map(|x| c * x).collect()),
            },
            Repr::Spectral(s) => Field {
                grid: self.grid.clone(),
                repr: Repr::Spectral(s.iter().map(|z| z * c).collect()),
            },
        }
    }
}

pub(crate) fn lebesgue_norm_slice(values: &[f64], r: f64, cell_volume: f64) -> f64 {
    let sum: f64 = values.iter().map(|&x| x.abs().powf(r)).sum();
    (sum * cell_volume).powf(1.0 / r)
}

/// L^2 norm straight from the spectrum via Parseval.
pub(crate) fn l2_norm_spectrum(coeffs: &[Complex64], grid: &Grid) -> f64 {
    let sum: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
    (sum / grid.domain_volume()).sqrt()
}

pub(crate) fn sobolev_seminorm_spectrum(coeffs: &[Complex64], s: f64, grid: &Grid) -> f64 {
    if s == 0.0 {
        return l2_norm_spectrum(coeffs, grid);
    }
    let mut sum = 0.0;
    for (idx, z) in coeffs.iter().enumerate() {
        let w = grid.xi_sq(idx).powf(s);
        sum += w * z.norm_sqr();
    }
    (sum / grid.domain_volume()).sqrt()
}
