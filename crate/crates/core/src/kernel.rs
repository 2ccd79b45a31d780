//! Fourier multiplier of the damped wave fundamental solution and the linear
//! propagator built from it.
//!
//! Per mode the homogeneous problem is y'' + y' + |xi|^2 y = 0. Writing
//! w = t^2 (1/4 - |xi|^2), the multiplier with data (y, y')(0) = (0, 1) is
//!
//!   K(t, xi)   = exp(-t/2) t S(w),   S(w) = sinh(sqrt(w))/sqrt(w)  (w > 0)
//!                                         = sin(sqrt(-w))/sqrt(-w) (w < 0)
//!
//! and its time derivative is dtK = exp(-t/2) C(w) - K/2 with C = cosh/cos
//! on the two branches. Both are evaluated through a Maclaurin series for
//! |w| below `SERIES_WINDOW` so the branch switch at |xi| = 1/2 is smooth,
//! and the hyperbolic branch is assembled from exp(t(omega - 1/2)) terms
//! with omega <= 1/2 so nothing overflows at large t.

use crate::error::{Error, Result};
use crate::integrator::StatePair;
use crate::field::Field;

/// Which multiplier to apply: the kernel itself or its time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierKind {
    K,
    DtK,
}

/// Series window on w = t^2 (1/4 - |xi|^2); the degree-3 Maclaurin error is
/// below 1e-14 inside it.
pub const SERIES_WINDOW: f64 = 1e-4;

/// Evaluate K or dtK at time t and squared frequency |xi|^2.
pub fn kernel_multiplier(t: f64, xi_sq: f64, kind: MultiplierKind) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel time must be finite and >= 0, got {t}"
        )));
    }
    if !(xi_sq.is_finite() && xi_sq >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "squared frequency must be finite and >= 0, got {xi_sq}"
        )));
    }
    Ok(eval(t, xi_sq, kind))
}

fn eval(t: f64, xi_sq: f64, kind: MultiplierKind) -> f64 {
    let w = t * t * (0.25 - xi_sq);
    let k = if w.abs() <= SERIES_WINDOW {
        let s = 1.0 + w / 6.0 + w * w / 120.0 + w * w * w / 5040.0;
        (-0.5 * t).exp() * t * s
    } else if w > 0.0 {
        let omega = (0.25 - xi_sq).sqrt();
        ((t * (omega - 0.5)).exp() - (-t * (omega + 0.5)).exp()) / (2.0 * omega)
    } else {
        let nu = (xi_sq - 0.25).sqrt();
        (-0.5 * t).exp() * (t * nu).sin() / nu
    };
    match kind {
        MultiplierKind::K => k,
        MultiplierKind::DtK => {
            let c = if w.abs() <= SERIES_WINDOW {
                (-0.5 * t).exp() * (1.0 + w / 2.0 + w * w / 24.0)
            } else if w > 0.0 {
                let omega = (0.25 - xi_sq).sqrt();
                ((t * (omega - 0.5)).exp() + (-t * (omega + 0.5)).exp()) / 2.0
            } else {
                let nu = (xi_sq - 0.25).sqrt();
                (-0.5 * t).exp() * (t * nu).cos()
            };
            c - 0.5 * k
        }
    }
}

pub(crate) fn k_pair(t: f64, xi_sq: f64) -> (f64, f64) {
    (
        eval(t, xi_sq, MultiplierKind::K),
        eval(t, xi_sq, MultiplierKind::DtK),
    )
}

/// Advance all four spectral fields by dt under the homogeneous system.
/// Per mode the pair (y, y') is mapped by the exact transition matrix
/// [[K + dtK, K], [-|xi|^2 K, dtK]], so the result solves the mode ODE.
pub fn propagate_linear(state: &StatePair, dt: f64) -> Result<StatePair> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "propagation step must be >= 0, got {dt}"
        )));
    }
    let grid = state.grid().clone();
    let n = grid.len();
    let mut u = state.u_hat.spectral_coeffs().unwrap().to_vec();
    let mut ut = state.ut_hat.spectral_coeffs().unwrap().to_vec();
    let mut v = state.v_hat.spectral_coeffs().unwrap().to_vec();
    let mut vt = state.vt_hat.spectral_coeffs().unwrap().to_vec();
    for idx in 0..n {
        let xi_sq = grid.xi_sq(idx);
        let (k, kt) = k_pair(dt, xi_sq);
        let (a, b) = (u[idx], ut[idx]);
        u[idx] = (k + kt) * a + k * b;
        ut[idx] = -xi_sq * k * a + kt * b;
        let (a, b) = (v[idx], vt[idx]);
        v[idx] = (k + kt) * a + k * b;
        vt[idx] = -xi_sq * k * a + kt * b;
    }
    StatePair::from_spectral_parts(grid, u, ut, v, vt, state.time + dt)
}

/// Mode-wise product of spectral data with the chosen multiplier at time t.
pub fn semigroup_convolve(data: &Field, t: f64, kind: MultiplierKind) -> Result<Field> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel time must be >= 0, got {t}"
        )));
    }
    Ok(data.apply_multiplier(|xi_sq| eval(t, xi_sq, kind)))
}

/// Low/high frequency cut-off pair: chi_low is 1 below eps_star/2, 0 above
/// eps_star, with a polynomial smoothstep of the given order in between;
/// chi_high = 1 - chi_low by construction.
#[derive(Debug, Clone)]
pub struct CutoffConfig {
    pub eps_star: f64,
    pub smoothstep_order: u32,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig {
            eps_star: 0.5,
            smoothstep_order: 1,
        }
    }
}

impl CutoffConfig {
    pub fn chi_low(&self, r: f64) -> f64 {
        let e = self.eps_star;
        if r <= e / 2.0 {
            1.0
        } else if r >= e {
            0.0
        } else {
            smoothstep((e - r) / (e / 2.0), self.smoothstep_order)
        }
    }
}

/// Polynomial smoothstep on [0, 1]; order 1 is the cubic 3z^2 - 2z^3,
/// order 2 the quintic, order 3 the septic.
pub fn smoothstep(z: f64, order: u32) -> f64 {
    let z = z.clamp(0.0, 1.0);
    match order {
        0 => z,
        1 => z * z * (3.0 - 2.0 * z),
        2 => z * z * z * (10.0 + z * (-15.0 + 6.0 * z)),
        _ => z * z * z * z * (35.0 + z * (-84.0 + z * (70.0 - 20.0 * z))),
    }
}

/// Split a spectral field into low and high frequency parts that sum back to
/// the original exactly.
pub fn cutoff_split(field: &Field, config: &CutoffConfig) -> (Field, Field) {
    let spec = field.to_spectral();
    let coeffs = spec.spectral_coeffs().unwrap();
    let grid = field.grid().clone();
    let mut low = Vec::with_capacity(coeffs.len());
    let mut high = Vec::with_capacity(coeffs.len());
    for (idx, &c) in coeffs.iter().enumerate() {
        let chi = config.chi_low(grid.xi_sq(idx).sqrt());
        let lo = c * chi;
        low.push(lo);
        high.push(c - lo);
    }
    (
        Field::from_spectral(grid.clone(), low).unwrap(),
        Field::from_spectral(grid, high).unwrap(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};

    #[test]
    fn closed_forms_at_zero_frequency() {
        let e = std::f64::consts::E;
        let k = kernel_multiplier(1.0, 0.0, MultiplierKind::K).unwrap();
        assert!((k - (1.0 - 1.0 / e)).abs() < 1e-12);
        let kt = kernel_multiplier(1.0, 0.0, MultiplierKind::DtK).unwrap();
        assert!((kt - 1.0 / e).abs() < 1e-12);
    }

    #[test]
    fn initial_conditions() {
        for &xi_sq in &[0.0, 0.1, 0.25, 1.0, 7.3] {
            assert_eq!(kernel_multiplier(0.0, xi_sq, MultiplierKind::K).unwrap(), 0.0);
            assert_eq!(
                kernel_multiplier(0.0, xi_sq, MultiplierKind::DtK).unwrap(),
                1.0
            );
        }
    }

    #[test]
    fn degenerate_frequency_limit() {
        let k = kernel_multiplier(2.0, 0.25, MultiplierKind::K).unwrap();
        assert!((k - 2.0 / std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_inputs() {
        assert!(kernel_multiplier(-1.0, 0.0, MultiplierKind::K).is_err());
        assert!(kernel_multiplier(1.0, -0.5, MultiplierKind::K).is_err());
    }

    #[test]
    fn branch_continuity_at_quarter() {
        for &t in &[0.1, 1.0, 5.0, 20.0] {
            for kind in [MultiplierKind::K, MultiplierKind::DtK] {
                let a = kernel_multiplier(t, 0.25 - 1e-9, kind).unwrap();
                let b = kernel_multiplier(t, 0.25 + 1e-9, kind).unwrap();
                assert!((a - b).abs() <= 1e-7, "t={t} kind={kind:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn no_overflow_at_large_times() {
        for &t in &[100.0, 1000.0, 10000.0] {
            for &xi_sq in &[0.0, 1e-6, 0.1, 0.2499, 0.25, 10.0] {
                let k = kernel_multiplier(t, xi_sq, MultiplierKind::K).unwrap();
                let kt = kernel_multiplier(t, xi_sq, MultiplierKind::DtK).unwrap();
                assert!(k.is_finite() && kt.is_finite());
                assert!(k.abs() <= 1.0 + 1e-9, "K bounded by 1: {k}");
            }
        }
    }

    #[test]
    fn dtk_matches_centered_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let h = 1e-4;
        for _ in 0..2000 {
            let t = rng.gen_range(0.01..20.0);
            let xi_sq = rng.gen_range(0.0..4.0);
            let kp = kernel_multiplier(t + h, xi_sq, MultiplierKind::K).unwrap();
            let km = kernel_multiplier((t - h).max(0.0), xi_sq, MultiplierKind::K).unwrap();
            let fd = (kp - km) / (2.0 * h);
            let kt = kernel_multiplier(t, xi_sq, MultiplierKind::DtK).unwrap();
            assert!((fd - kt).abs() <= 1e-6, "t={t} xi_sq={xi_sq}: {fd} vs {kt}");
        }
    }

    #[test]
    fn mode_ode_residual_small() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let h = 1e-4;
        for _ in 0..10_000 {
            let t = rng.gen_range(2.0 * h..30.0);
            let xi_sq = rng.gen_range(0.0..10.0);
            let kp = eval(t + h, xi_sq, MultiplierKind::K);
            let k0 = eval(t, xi_sq, MultiplierKind::K);
            let km = eval(t - h, xi_sq, MultiplierKind::K);
            let d2 = (kp - 2.0 * k0 + km) / (h * h);
            let d1 = (kp - km) / (2.0 * h);
            let residual = d2 + d1 + xi_sq * k0;
            assert!(
                residual.abs() <= 1e-5 * xi_sq.max(1.0),
                "t={t} xi_sq={xi_sq} residual={residual}"
            );
        }
    }

    #[test]
    fn propagate_matches_scalar_ode_oracle() {
        // Oracle: classical RK4 on y'' + y' + xi^2 y = 0 as a first order
        // system, fine step; independent of the kernel formulas.
        fn rk4(xi_sq: f64, y0: f64, y1: f64, t_end: f64) -> (f64, f64) {
            let f = |y: f64, yp: f64| (yp, -yp - xi_sq * y);
            let steps = (t_end / 1e-3).ceil() as usize;
            let h = t_end / steps as f64;
            let (mut y, mut yp) = (y0, y1);
            for _ in 0..steps {
                let (k1, l1) = f(y, yp);
                let (k2, l2) = f(y + 0.5 * h * k1, yp + 0.5 * h * l1);
                let (k3, l3) = f(y + 0.5 * h * k2, yp + 0.5 * h * l2);
                let (k4, l4) = f(y + h * k3, yp + h * l3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                yp += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            }
            (y, yp)
        }

        // |xi| = 1 from data (1, 0) against the explicit high-frequency form.
        let (k, kt) = k_pair(1.7, 1.0);
        let y = k + kt; // (K + dtK) * 1 + K * 0
        let nu = (3.0f64).sqrt() / 2.0;
        let explicit =
            (-0.85f64).exp() * ((1.7 * nu).cos() + (1.7 * nu).sin() / (2.0 * nu));
        assert!((y - explicit).abs() < 1e-12);
        let (oy, oyp) = rk4(1.0, 1.0, 0.0, 1.7);
        assert!((y - oy).abs() < 1e-8);
        let yp = -k; // -xi^2 K * y0 with xi^2 = 1, y1 = 0
        assert!((yp - oyp).abs() < 1e-8);

        // xi = 0 from data (0, 1): y = 1 - exp(-t), y' = exp(-t).
        let (k, kt) = k_pair(1.0, 0.0);
        assert!((k - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((kt - (-1.0f64).exp()).abs() < 1e-12);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let xi_sq = rng.gen_range(0.0..4.0);
            let t = rng.gen_range(0.1..6.0);
            let y0 = rng.gen_range(-1.0..1.0);
            let y1 = rng.gen_range(-1.0..1.0);
            let (k, kt) = k_pair(t, xi_sq);
            let y = (k + kt) * y0 + k * y1;
            let yp = -xi_sq * k * y0 + kt * y1;
            let (oy, oyp) = rk4(xi_sq, y0, y1, t);
            assert!((y - oy).abs() < 1e-8, "y xi_sq={xi_sq} t={t}");
            assert!((yp - oyp).abs() < 1e-8, "yp xi_sq={xi_sq} t={t}");
        }
    }

    #[test]
    fn semigroup_convolve_at_time_zero() {
        let g = Grid::new_shared(1, 10.0, 64).unwrap();
        let f = Field::from_fn(g, |x| (-x[0] * x[0]).exp()).to_spectral();
        let zeroed = semigroup_convolve(&f, 0.0, MultiplierKind::K).unwrap();
        assert_eq!(zeroed.lebesgue_norm(2.0).unwrap(), 0.0);
        let same = semigroup_convolve(&f, 0.0, MultiplierKind::DtK).unwrap();
        let diff: f64 = same
            .spectral_coeffs()
            .unwrap()
            .iter()
            .zip(f.spectral_coeffs().unwrap())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }

    #[test]
    fn semigroup_low_frequency_decay_slope() {
        // Gaussian data: L^2 norm of K * phi between t = 100 and t = 400
        // should fall off with log-log slope near -1/4.
        let g = Grid::new_shared(1, 400.0, 4096).unwrap();
        let data = Field::from_fn(g, |x| (-x[0] * x[0]).exp()).to_spectral();
        let n100 = semigroup_convolve(&data, 100.0, MultiplierKind::K)
            .unwrap()
            .lebesgue_norm(2.0)
            .unwrap();
        let n400 = semigroup_convolve(&data, 400.0, MultiplierKind::K)
            .unwrap()
            .lebesgue_norm(2.0)
            .unwrap();
        let slope = (n400 / n100).ln() / (401.0f64 / 101.0).ln();
        assert!((slope + 0.25).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn cutoff_partition_of_unity() {
        let grid = Grid::new_shared(1, 10.0, 2048).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = (0..2048).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = Field::from_physical(grid.clone(), values).unwrap().to_spectral();
        let cfg = CutoffConfig::default();
        let (lo, hi) = cutoff_split(&f, &cfg);
        let orig = f.spectral_coeffs().unwrap();
        let l = lo.spectral_coeffs().unwrap();
        let h = hi.spectral_coeffs().unwrap();
        for i in 0..orig.len() {
            assert_eq!(l[i] + h[i], orig[i], "partition must be exact");
        }
        // energy bookkeeping: the overlap region loses little
        let tot = f.lebesgue_norm(2.0).unwrap().powi(2);
        let split = lo.sobolev_seminorm(0.0).unwrap().powi(2)
            + hi.sobolev_seminorm(0.0).unwrap().powi(2);
        assert!(split >= 0.999 * tot, "low {split} of {tot}");
        assert!(split <= tot + 1e-12);

        // field supported at xi = 0 goes entirely to the low part
        let dc = Field::from_fn(grid, |_| 1.0).to_spectral();
        let (dlo, dhi) = cutoff_split(&dc, &cfg);
        assert!(dhi.lebesgue_norm(2.0).unwrap() < 1e-12);
        assert!((dlo.lebesgue_norm(2.0).unwrap() - dc.lebesgue_norm(2.0).unwrap()).abs() < 1e-12);
    }
}
