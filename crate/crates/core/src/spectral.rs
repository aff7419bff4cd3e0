//! Eigenfunction machinery of the wall-plus-delta well.
//!
//! The energy eigenfunctions are `phi_q(ell) = A(q) f(ell, q) / q` with
//! `f = q sin((ell+1) q)` inside the well and an extra `G sin q sin(ell q)`
//! outside. Everything that the time-evolved wave function needs besides the
//! `exp(-i T q^2)` phase lives here: the spectral denominator `D(q)`, its
//! factors `g` and `g_bar`, the normalisation, the expansion coefficient and
//! the closed-form overlap integrals over the well.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Half-width of the window around `q = n pi` inside which the removable
/// singularity of the expansion coefficient is evaluated by series.
pub const DEFAULT_DELTA_Q: f64 = 1e-3;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `sin z / z`, entire.
pub(crate) fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `g(q) = q + G e^{iq} sin q`; its zeros in the fourth quadrant are the
/// resonance poles.
pub fn g_factor(q: Complex64, config: &ModelConfig) -> Complex64 {
    q + config.g() * (I * q).exp() * q.sin()
}

/// Co-factor `g_bar(q) = q + G e^{-iq} sin q`, so that `D = g * g_bar`.
pub fn g_cofactor(q: Complex64, config: &ModelConfig) -> Complex64 {
    q + config.g() * (-I * q).exp() * q.sin()
}

/// `g'(q) = 1 + G e^{2iq}`.
pub fn g_prime(q: Complex64, config: &ModelConfig) -> Complex64 {
    1.0 + config.g() * (2.0 * I * q).exp()
}

/// `D(q) = q^2 + G q sin 2q + G^2 sin^2 q`, entire in `q`.
pub fn denominator(q: Complex64, config: &ModelConfig) -> Complex64 {
    let g = config.g();
    let s = q.sin();
    q * q + g * q * (2.0 * q).sin() + g * g * s * s
}

/// `|A|(q) = sqrt(2/pi) q / sqrt(D(q))` for real `q > 0`.
pub fn norm_amplitude(q: f64, config: &ModelConfig) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("norm_amplitude needs q > 0, got {q}")));
    }
    let d = denominator(Complex64::new(q, 0.0), config).re;
    Ok((2.0 / PI).sqrt() * q / d.sqrt())
}

/// Expansion coefficient `C(q)` with the default series window.
pub fn coefficient(q: f64, config: &ModelConfig) -> Result<f64> {
    SpectralKernel::new(*config).coefficient(q)
}

/// Spectral functions bound to one configuration.
#[derive(Debug, Clone, Copy)]
pub struct SpectralKernel {
    config: ModelConfig,
    delta_q: f64,
}

impl SpectralKernel {
    pub fn new(config: ModelConfig) -> Self {
        Self { config, delta_q: DEFAULT_DELTA_Q }
    }

    pub fn with_delta(config: ModelConfig, delta_q: f64) -> Result<Self> {
        if !(delta_q > 0.0 && delta_q <= 0.1) {
            return Err(Error::Domain(format!("series window must lie in (0, 0.1], got {delta_q}")));
        }
        Ok(Self { config, delta_q })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn delta_q(&self) -> f64 {
        self.delta_q
    }

    /// `q sin q / (q^2 - n^2 pi^2)`, continuous through `q = +-n pi`.
    ///
    /// With `h = q - n pi` the ratio is `(-1)^n (n pi + h)/(2 n pi + h) * sinc(h)`,
    /// and `sinc` is expanded to fourth order inside the window.
    pub fn removable_ratio(&self, q: Complex64) -> Complex64 {
        let npi = self.config.n_pi();
        // even in q
        let q = if q.re < 0.0 { -q } else { q };
        let h = q - npi;
        if h.norm() < self.delta_q {
            let h2 = h * h;
            let sinc_h = 1.0 - h2 / 6.0 + h2 * h2 / 120.0;
            self.config.parity() * (npi + h) / (2.0 * npi + h) * sinc_h
        } else {
            q * q.sin() / (q * q - npi * npi)
        }
    }

    /// `C(q) = 2 n sqrt(pi) q sin q / ((q^2 - n^2 pi^2) sqrt(D))` for real `q > 0`.
    pub fn coefficient(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(Error::Domain(format!("coefficient needs q > 0, got {q}")));
        }
        let n = f64::from(self.config.n());
        let qc = Complex64::new(q, 0.0);
        let d = denominator(qc, &self.config).re;
        Ok(2.0 * n * PI.sqrt() * self.removable_ratio(qc).re / d.sqrt())
    }

    /// Weight multiplying `f(ell, q) exp(-i T q^2)` in the momentum integral
    /// for `psi(ell, T)`:
    /// `(-1)^n 2 n sqrt(2) q sin q / ((q^2 - n^2 pi^2) D(q))`.
    ///
    /// The `(-1)^n` makes the integral reproduce the initial state
    /// `sqrt(2) sin(n pi (ell + 1))` at `T = 0`.
    pub fn wave_weight(&self, q: Complex64) -> Complex64 {
        let n = f64::from(self.config.n());
        self.config.parity() * 2.0 * n * SQRT_2 * self.removable_ratio(q)
            / denominator(q, &self.config)
    }

    /// `C(q)^2`, the spectral density of the initial state; its Fourier
    /// transform in `q^2` is the overlap amplitude `<psi(0)|psi(T)>`.
    pub fn overlap_density(&self, q: Complex64) -> Complex64 {
        let n = f64::from(self.config.n());
        let r = self.removable_ratio(q);
        4.0 * n * n * PI * r * r / denominator(q, &self.config)
    }
}

fn check_position(ell: f64) -> Result<()> {
    if ell.is_nan() || ell < -1.0 {
        Err(Error::Domain(format!("position must satisfy ell >= -1, got {ell}")))
    } else {
        Ok(())
    }
}

/// Spatial kernel `f(ell, q)`.
pub fn kernel_f(ell: f64, q: Complex64, config: &ModelConfig) -> Result<Complex64> {
    check_position(ell)?;
    let inner = q * ((ell + 1.0) * q).sin();
    if ell <= 0.0 {
        Ok(inner)
    } else {
        Ok(inner + config.g() * q.sin() * (ell * q).sin())
    }
}

/// Which side of the barrier a one-sided derivative is taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `d f / d ell`. At `ell = 0` the side matters: the delta barrier makes the
/// slope jump by `G f(0, q)`.
pub fn kernel_f_slope(ell: f64, q: Complex64, config: &ModelConfig, side: Side) -> Result<Complex64> {
    check_position(ell)?;
    let inner = q * q * ((ell + 1.0) * q).cos();
    let outside = ell > 0.0 || (ell == 0.0 && side == Side::Right);
    if outside {
        Ok(inner + config.g() * q * q.sin() * (ell * q).cos())
    } else {
        Ok(inner)
    }
}

/// Initial state `sqrt(2) sin(n pi (ell + 1))` on the well, zero outside.
pub fn initial_state(ell: f64, config: &ModelConfig) -> Result<f64> {
    check_position(ell)?;
    if ell <= 0.0 {
        Ok(SQRT_2 * (config.n_pi() * (ell + 1.0)).sin())
    } else {
        Ok(0.0)
    }
}

/// `int_0^1 sin(u q) sin(u qp) du` for real arguments.
pub fn well_overlap_kernel(q: f64, qp: f64) -> f64 {
    well_overlap_kernel_c(Complex64::new(q, 0.0), Complex64::new(qp, 0.0)).re
}

/// `int_0^1 sin(u q) sin(u qp) du = [sinc(q - qp) - sinc(q + qp)] / 2`,
/// valid for complex arguments.
pub fn well_overlap_kernel_c(q: Complex64, qp: Complex64) -> Complex64 {
    0.5 * (sinc(q - qp) - sinc(q + qp))
}

/// `int_0^1 sin(n pi u) sin(u q) du`, the projection of `sin((ell+1) q)` on
/// the initial mode.
pub fn mode_overlap(q: Complex64, config: &ModelConfig) -> Complex64 {
    well_overlap_kernel_c(Complex64::new(config.n_pi(), 0.0), q)
}

/// `int_0^1 u sin(u q) du = (sin q - q cos q) / q^2`.
pub fn ramp_overlap(q: Complex64) -> Complex64 {
    if q.norm() < 1e-2 {
        let q2 = q * q;
        q * (1.0 / 3.0 - q2 / 30.0 + q2 * q2 / 840.0)
    } else {
        (q.sin() - q * q.cos()) / (q * q)
    }
}
