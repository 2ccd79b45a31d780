//! Periodic torus discretization of R^n (n = 1, 2).
//!
//! The domain is [-L, L)^n sampled on N points per axis with N a power of
//! two. Forward transforms approximate the continuum Fourier transform
//! f_hat(xi) = int f(x) exp(-i xi x) dx, so Parseval holds in the discrete
//! inner product with weight `cell_volume`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct Grid {
    dim: usize,
    half_length: f64,
    points_per_dim: usize,
    cell_volume: f64,
    axis_wavenumbers: Vec<f64>,
    axis_coordinates: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("half_length", &self.half_length)
            .field("points_per_dim", &self.points_per_dim)
            .field("cell_volume", &self.cell_volume)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.half_length == other.half_length
            && self.points_per_dim == other.points_per_dim
    }
}

impl Grid {
    /// Build a periodic grid on [-L, L)^dim with `points_per_dim` points per
    /// axis. Rejects dim outside {1, 2} and non-power-of-two point counts
    /// (an aliasing hazard for the spectral operators).
    pub fn new(dim: usize, half_length: f64, points_per_dim: usize) -> Result<Grid> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dim must be 1 or 2, got {dim}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_length must be positive, got {half_length}"
            )));
        }
        if points_per_dim < 8 || !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points_per_dim must be a power of two >= 8, got {points_per_dim}"
            )));
        }
        let n = points_per_dim;
        let dx = 2.0 * half_length / n as f64;
        let mut axis_wavenumbers = Vec::with_capacity(n);
        let mut axis_coordinates = Vec::with_capacity(n);
        for k in 0..n {
            let m = signed_mode(k, n);
            axis_wavenumbers.push(std::f64::consts::PI * m as f64 / half_length);
            axis_coordinates.push(-half_length + k as f64 * dx);
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Grid {
            dim,
            half_length,
            points_per_dim,
            cell_volume: dx.powi(dim as i32),
            axis_wavenumbers,
            axis_coordinates,
            fwd,
            inv,
        })
    }

    pub fn new_shared(dim: usize, half_length: f64, points_per_dim: usize) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(dim, half_length, points_per_dim)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total number of grid points, N^dim.
    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of the torus, (2L)^dim.
    pub fn domain_volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Per-axis wavenumbers xi_m = pi m / L in DFT storage order.
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.axis_wavenumbers
    }

    pub fn axis_coordinates(&self) -> &[f64] {
        &self.axis_coordinates
    }

    /// |xi|^2 at flat index `idx` (row-major in 2D).
    pub fn xi_sq(&self, idx: usize) -> f64 {
        match self.dim {
            1 => {
                let w = self.axis_wavenumbers[idx];
                w * w
            }
            _ => {
                let n = self.points_per_dim;
                let wx = self.axis_wavenumbers[idx % n];
                let wy = self.axis_wavenumbers[idx / n];
                wx * wx + wy * wy
            }
        }
    }

    /// Physical coordinates at flat index `idx`; the slice has `dim` entries.
    pub fn point(&self, idx: usize, out: &mut [f64; 2]) -> usize {
        match self.dim {
            1 => {
                out[0] = self.axis_coordinates[idx];
                1
            }
            _ => {
                let n = self.points_per_dim;
                out[0] = self.axis_coordinates[idx % n];
                out[1] = self.axis_coordinates[idx / n];
                2
            }
        }
    }

    /// Euclidean distance of grid point `idx` from the origin of the
    /// fundamental domain.
    pub fn radius(&self, idx: usize) -> f64 {
        let mut xy = [0.0; 2];
        let d = self.point(idx, &mut xy);
        if d == 1 {
            xy[0].abs()
        } else {
            xy[0].hypot(xy[1])
        }
    }

    /// In-place forward DFT with the continuum normalization: output entry k
    /// approximates f_hat(xi_k) = int f exp(-i xi_k x) dx over the torus.
    pub(crate) fn dft_forward(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(buf.len(), self.len());
        self.fwd.process(buf);
        if self.dim == 2 {
            transpose_square(buf, scratch, self.points_per_dim);
            self.fwd.process(buf);
            transpose_square(buf, scratch, self.points_per_dim);
        }
        let scale = self.cell_volume;
        self.apply_phase_and_scale(buf, scale);
    }

    /// In-place inverse of `dft_forward`.
    pub(crate) fn dft_inverse(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(buf.len(), self.len());
        let scale = 1.0 / self.domain_volume();
        self.apply_phase_and_scale(buf, scale);
        self.inv.process(buf);
        if self.dim == 2 {
            transpose_square(buf, scratch, self.points_per_dim);
            self.inv.process(buf);
            transpose_square(buf, scratch, self.points_per_dim);
        }
    }

    // The grid starts at x = -L, not 0, so mode m picks up a phase
    // exp(i pi m) = (-1)^m relative to the plain DFT.
    fn apply_phase_and_scale(&self, buf: &mut [Complex64], scale: f64) {
        let n = self.points_per_dim;
        match self.dim {
            1 => {
                for (k, v) in buf.iter_mut().enumerate() {
                    let s = if k & 1 == 0 { scale } else { -scale };
                    *v *= s;
                }
            }
            _ => {
                for (idx, v) in buf.iter_mut().enumerate() {
                    let parity = (idx % n + idx / n) & 1;
                    let s = if parity == 0 { scale } else { -scale };
                    *v *= s;
                }
            }
        }
    }
}

/// Signed mode index for DFT storage slot k: 0..N/2 then -N/2..-1.
pub(crate) fn signed_mode(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn transpose_square(buf: &mut [Complex64], scratch: &mut Vec<Complex64>, n: usize) {
    scratch.clear();
    scratch.extend_from_slice(buf);
    for iy in 0..n {
        for ix in 0..n {
            buf[ix * n + iy] = scratch[iy * n + ix];
        }
    }
}
