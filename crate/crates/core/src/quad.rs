//! Direct evaluation of the time-evolved wave function and of quantities
//! built from it, by adaptive quadrature over momentum.
//!
//! For `T > 0` the momentum integral is taken along a deformed path: the real
//! axis up to a turning point `Q`, then down the hyperbola on which
//! `exp(-i T q^2)` has constant phase and decays. `Q` lies past the point
//! where the Gaussian phase outruns the exponential growth of the spatial
//! kernel, midway between two resonance poles. The poles swept over by the
//! deformation (all beyond `Q`) are added back as residues until they are
//! negligible, so nothing is truncated. At `T = 0` there is no damping: the
//! integral is cut at `q_max` and the leading `1/q^2` tail is added in
//! closed form.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use num_complex::Complex64;

use crate::contour::{integrate_path, reference_nodes, PanelLimits, PathRule};
use crate::error::{Error, Result};
use crate::model::{Definition, Method, ModelConfig, SurvivalPoint};
use crate::resonances::{find_pole, find_pole_range, weight_residue};
use crate::spectral::{mode_overlap, well_overlap_kernel_c, Side, SpectralKernel};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Numerical controls for the momentum quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    /// Truncation momentum of the real-axis integral at `T = 0`, and of every
    /// integral when `tail_correction` is off.
    pub q_max: f64,
    /// Target absolute error on `psi` (and on `P` for survival).
    pub abs_tol: f64,
    /// Maximum number of quadrature panels per integral.
    pub panel_budget: usize,
    /// Account for momenta beyond the real-axis cut (closed-form tail at
    /// `T = 0`, deformed path for `T > 0`).
    pub tail_correction: bool,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { q_max: 200.0, abs_tol: 1e-7, panel_budget: 400_000, tail_correction: true }
    }
}

impl QuadSettings {
    pub fn with_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let floor = (4.0 * config.n_pi()).max(3.0 * config.g());
        if !(self.q_max.is_finite() && self.q_max > floor) {
            return Err(Error::InvalidConfig(format!(
                "q_max must exceed max(4 n pi, 3 G) = {floor}, got {}",
                self.q_max
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if self.panel_budget < 16 {
            return Err(Error::InvalidConfig("panel budget below 16".into()));
        }
        Ok(())
    }
}

/// `psi(ell, T)` with provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    pub ell: f64,
    pub t: f64,
    pub psi: Complex64,
    pub err_est: f64,
    pub method: Method,
}

/// Probability current through the barrier, from both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentSample {
    pub t: f64,
    /// `j(0-, T)`, the primary value.
    pub j: f64,
    /// `j(0+, T)`; equal to `j` up to quadrature error.
    pub j_right: f64,
    pub err_est: f64,
}

/// How `survival_quadrature_with` integrates `|psi|^2` over the well.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalPath {
    /// Sample `psi` on a composite Gauss-Kronrod grid in `ell`.
    Spatial,
    /// Double momentum sum with the `ell` integral done in closed form.
    /// Needs `T > 0`.
    DoubleMomentum,
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_ell(ell: f64) -> Result<()> {
    if ell.is_nan() || ell < -1.0 || !ell.is_finite() {
        return Err(Error::Domain(format!("position must satisfy ell >= -1, got {ell}")));
    }
    Ok(())
}

#[inline]
fn kernel_value(ell: f64, q: Complex64, g: f64) -> Complex64 {
    let inner = q * ((ell + 1.0) * q).sin();
    if ell <= 0.0 {
        inner
    } else {
        inner + g * q.sin() * (ell * q).sin()
    }
}

/// Integration path for one evaluation, plus the poles it encloses.
struct MomentumPath {
    legs: Vec<(Complex64, Complex64)>,
    /// `legs[..real_legs]` lie on the real axis.
    real_legs: usize,
    /// `(q_k, weight residue at q_k)` for every pole between the real axis
    /// and the descent legs that is not negligible at this `T`.
    poles: Vec<(Complex64, Complex64)>,
    /// Bound on the residues left out.
    pole_err: f64,
}

/// Where the path leaves the real axis, and the index of the first pole to
/// its right. The point sits midway between two consecutive pole real
/// parts, past the stationary point of `exp(-i T q^2 + i omega q)`.
fn turning_point(t: f64, omega: f64, config: &ModelConfig) -> Result<(f64, usize)> {
    let wanted = ((4.0 * config.n_pi()).max(3.0 * config.g()) + 2.0 * PI).max(1.5 * omega / (2.0 * t) + PI);
    if config.is_free() {
        return Ok((wanted, 0));
    }
    let k = (wanted / PI).ceil() as usize;
    let lo = find_pole(config, k - 1)?.q.re;
    let mid = find_pole(config, k)?.q.re;
    if wanted < mid {
        Ok((0.5 * (lo + mid), k))
    } else {
        let hi = find_pole(config, k + 1)?.q.re;
        Ok((0.5 * (mid + hi), k + 1))
    }
}

/// Build the path. For `T > 0` it follows the real axis to the turning
/// point `Q`, then the hyperbola `Re(q)^2 - Im(q)^2 = Q^2` into the lower
/// half plane, along which `exp(-i T q^2)` has constant phase and decays.
/// The poles between that hyperbola and the real axis contribute residues.
fn momentum_path<P>(
    t: f64,
    omega: f64,
    config: &ModelConfig,
    settings: &QuadSettings,
    mut probe: P,
) -> Result<MomentumPath>
where
    P: FnMut(Complex64) -> f64,
{
    if t == 0.0 || !settings.tail_correction {
        let legs = vec![(ZERO, Complex64::new(settings.q_max, 0.0))];
        return Ok(MomentumPath { legs, real_legs: 1, poles: Vec::new(), pole_err: 0.0 });
    }
    let (q_turn, first_pole) = turning_point(t, omega, config)?;
    let decay = 2.0 * t * q_turn - omega;
    let target = 1e-3 * settings.abs_tol;

    let mut legs = vec![(ZERO, Complex64::new(q_turn, 0.0))];
    let step = (2.0 / decay).min(0.5);
    let mut previous = Complex64::new(q_turn, 0.0);
    let mut j = 1usize;
    loop {
        let y = j as f64 * step;
        let vertex = Complex64::new((q_turn * q_turn + y * y).sqrt(), -y);
        legs.push((previous, vertex));
        previous = vertex;
        if probe(vertex) / decay < target || legs.len() > 4096 {
            break;
        }
        j += 1;
    }

    let mut poles = Vec::new();
    let mut pole_err = 0.0;
    if first_pole > 0 {
        let mut quiet = 0;
        let mut k = first_pole;
        'scan: while poles.len() < settings.panel_budget {
            for pole in find_pole_range(config, k, k + 31)? {
                let q = pole.q;
                let depth = -q.im;
                if depth * depth >= q.re * q.re - q_turn * q_turn {
                    // not enclosed by the descent path
                    continue;
                }
                let bound = weight_residue(q, config).norm()
                    * q.norm_sqr()
                    * (omega * depth).exp()
                    * (2.0 * t * q.re * q.im).exp();
                if bound < target {
                    quiet += 1;
                    pole_err += bound;
                    if quiet >= 4 {
                        break 'scan;
                    }
                } else {
                    quiet = 0;
                }
                poles.push((q, weight_residue(q, config)));
            }
            k += 32;
        }
        pole_err *= 10.0;
    }
    Ok(MomentumPath { legs, real_legs: 1, poles, pole_err })
}

/// Momentum integral of `wave_weight(q) * kern(q)` along the path, with
/// the enclosed residues added. `kern` must already contain the factor
/// `exp(-i T q^2)`.
struct MomentumIntegral {
    rule: PathRule,
    poles: Vec<(Complex64, Complex64)>,
    value: Vec<Complex64>,
    err: f64,
}

#[allow(clippy::too_many_arguments)]
fn integrate_momentum<K>(
    t: f64,
    omega: f64,
    config: &ModelConfig,
    settings: &QuadSettings,
    phase_budget: f64,
    max_len: f64,
    dim: usize,
    kern: K,
) -> Result<MomentumIntegral>
where
    K: Fn(Complex64, &mut [Complex64]),
{
    let spectral = SpectralKernel::new(*config);
    let f = |q: Complex64, out: &mut [Complex64]| {
        kern(q, out);
        let w = spectral.wave_weight(q);
        for o in out.iter_mut() {
            *o *= w;
        }
    };
    let mut buf = vec![ZERO; dim];
    let path = momentum_path(t, omega, config, settings, |z| {
        f(z, &mut buf);
        buf.iter().map(|v| v.norm()).fold(0.0, f64::max)
    })?;
    let real_legs = path.real_legs;
    let rate = |leg: usize, z: Complex64| {
        if leg < real_legs {
            2.0 * t * z.norm() + omega
        } else {
            omega + 1.0
        }
    };
    let limits = PanelLimits { tol: settings.abs_tol, max_panels: settings.panel_budget, phase_budget, max_len };
    let rule = integrate_path(&path.legs, rate, limits, dim, &f)?;
    let mut value = rule.value.clone();
    for &(q, r) in &path.poles {
        kern(q, &mut buf);
        for (v, b) in value.iter_mut().zip(&buf) {
            *v += r * b;
        }
    }
    let err = rule.err + path.pole_err;
    Ok(MomentumIntegral { rule, poles: path.poles, value, err })
}

/// `pi/2 - Si(z)` for `z >= 0`.
fn sine_integral_complement(z: f64) -> f64 {
    if z <= 2.0 {
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -z2 / ((2.0 * k) * (2.0 * k + 1.0));
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        FRAC_PI_2 - sum
    } else {
        // continued fraction for E1(i z), modified Lentz
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, z);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 2..200 {
            let a = -((i - 1) as f64).powi(2);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h *= Complex64::new(z.cos(), -z.sin());
        -h.im
    }
}

/// `int_Q^inf cos(omega q) / q^2 dq` for `omega >= 0`.
fn cosine_tail(omega: f64, q: f64) -> f64 {
    let z = omega * q;
    z.cos() / q - omega * sine_integral_complement(z)
}

/// Closed-form `T = 0` tail beyond `q_max` and a bound on what it leaves out.
fn static_tail(ell: f64, config: &ModelConfig, q_max: f64) -> (f64, f64) {
    let n = f64::from(config.n());
    let amp = config.parity() * n * SQRT_2;
    let value = amp * (cosine_tail(ell.abs(), q_max) - cosine_tail(ell + 2.0, q_max));
    let err = 2.0 * SQRT_2 * n * (1.0 + config.g() + config.n_pi().powi(2)) / q_max.powi(3);
    (value, err)
}

/// Oscillation rate used to size panels and place the turning point for a
/// kernel evaluated at `ell`.
fn growth_rate(ell: f64) -> f64 {
    (ell + 2.0).max(1.0)
}

/// `psi(ell, T)` by momentum quadrature.
pub fn psi_quadrature(ell: f64, t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<WaveSample> {
    let mut out = psi_profile(&[ell], t, config, settings)?;
    Ok(out.remove(0))
}

/// `psi` at several positions from one shared quadrature rule.
pub fn psi_profile(ells: &[f64], t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<Vec<WaveSample>> {
    check_time(t)?;
    settings.validate(config)?;
    for &ell in ells {
        check_ell(ell)?;
    }
    if ells.is_empty() {
        return Ok(Vec::new());
    }
    let g = config.g();
    let omega = ells.iter().map(|&l| growth_rate(l)).fold(0.0, f64::max);
    let integral = integrate_momentum(t, omega, config, settings, FRAC_PI_4, 0.25, ells.len(), |q, out| {
        let phase = (-I * t * q * q).exp();
        for (o, &ell) in out.iter_mut().zip(ells) {
            *o = phase * kernel_value(ell, q, g);
        }
    })?;
    let static_tail_on = t == 0.0 && settings.tail_correction;
    Ok(ells
        .iter()
        .zip(&integral.value)
        .map(|(&ell, &v)| {
            let (tail, tail_err) = if static_tail_on { static_tail(ell, config, settings.q_max) } else { (0.0, 0.0) };
            WaveSample { ell, t, psi: v + tail, err_est: integral.err + tail_err, method: Method::Quadrature }
        })
        .collect())
}

/// `d psi / d ell` at the barrier from the chosen side, together with `psi(0, T)`.
fn barrier_values(t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<(f64, [Complex64; 3])> {
    let g = config.g();
    let integral = integrate_momentum(t, 2.0, config, settings, FRAC_PI_4, 0.25, 3, |q, out| {
        let phase = (-I * t * q * q).exp();
        let (s, c) = (q.sin(), q.cos());
        out[0] = phase * q * s;
        out[1] = phase * q * q * c;
        out[2] = phase * (q * q * c + g * q * s);
    })?;
    let v = integral.value;
    Ok((integral.err, [v[0], v[1], v[2]]))
}

/// Probability current `j(0, T) = 2 Im[psi* d psi/d ell]` through the
/// barrier, in units where `dP/dT = -j`.
///
/// At `T = 0` the momentum integrand is real, so `psi` and its slope are
/// real and the current vanishes identically.
pub fn current_at_barrier(t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<CurrentSample> {
    check_time(t)?;
    settings.validate(config)?;
    if t == 0.0 {
        return Ok(CurrentSample { t, j: 0.0, j_right: 0.0, err_est: 0.0 });
    }
    let (err, [psi, left, right]) = barrier_values(t, config, settings)?;
    let j = 2.0 * (psi.conj() * left).im;
    let j_right = 2.0 * (psi.conj() * right).im;
    let err_est = 2.0 * err * (psi.norm() + left.norm().max(right.norm()) + err);
    Ok(CurrentSample { t, j, j_right, err_est })
}

/// One-sided slope `d psi / d ell` at `ell = 0`.
pub fn slope_at_barrier(t: f64, config: &ModelConfig, settings: &QuadSettings, side: Side) -> Result<WaveSample> {
    check_time(t)?;
    settings.validate(config)?;
    if t == 0.0 {
        return Err(Error::Domain("the slope integral does not converge at T = 0".into()));
    }
    let (err, v) = barrier_values(t, config, settings)?;
    let psi = if side == Side::Left { v[1] } else { v[2] };
    Ok(WaveSample { ell: 0.0, t, psi, err_est: err, method: Method::Quadrature })
}

/// In-well survival probability by quadrature (spatial path).
pub fn survival_quadrature(t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<SurvivalPoint> {
    survival_quadrature_with(t, config, settings, SurvivalPath::Spatial)
}

pub fn survival_quadrature_with(
    t: f64,
    config: &ModelConfig,
    settings: &QuadSettings,
    path: SurvivalPath,
) -> Result<SurvivalPoint> {
    check_time(t)?;
    settings.validate(config)?;
    match path {
        SurvivalPath::Spatial => survival_spatial(t, config, settings),
        SurvivalPath::DoubleMomentum => survival_double(t, config, settings),
    }
}

const PROBE_ELLS: [f64; 4] = [-0.8, -0.5, -0.2, 0.0];

/// Momentum nodes `q_j` and amplitudes `b_j` with
/// `psi(ell, T) ~ sum_j b_j sin((ell + 1) q_j)` on the well.
fn well_expansion(
    t: f64,
    config: &ModelConfig,
    settings: &QuadSettings,
    phase_budget: f64,
    max_len: f64,
    gauss_only: bool,
) -> Result<(Vec<(Complex64, Complex64)>, f64)> {
    let kernel = SpectralKernel::new(*config);
    let integral = integrate_momentum(t, 2.0, config, settings, phase_budget, max_len, PROBE_ELLS.len(), |q, out| {
        let common = (-I * t * q * q).exp() * q;
        for (o, &ell) in out.iter_mut().zip(&PROBE_ELLS) {
            *o = common * ((ell + 1.0) * q).sin();
        }
    })?;
    let mut amps: Vec<(Complex64, Complex64)> = integral
        .rule
        .nodes()
        .filter_map(|(q, wk, wg)| {
            let w = if gauss_only { wg } else { wk };
            if w == ZERO {
                return None;
            }
            Some((q, w * kernel.wave_weight(q) * (-I * t * q * q).exp() * q))
        })
        .collect();
    amps.extend(integral.poles.iter().map(|&(q, r)| (q, r * (-I * t * q * q).exp() * q)));
    Ok((amps, integral.err))
}

/// `sum_j b_j sin(u q_j)` at the composite GK15 nodes of `panels` equal
/// panels on `u in [0, 1]`.
fn well_profile(amps: &[(Complex64, Complex64)], panels: usize) -> Vec<Complex64> {
    let offsets: Vec<f64> = reference_nodes().iter().map(|n| 0.5 * (1.0 + n.0)).collect();
    let inv = 1.0 / panels as f64;
    let mut psi = vec![ZERO; 15 * panels];
    let mut plus = [ZERO; 15];
    let mut minus = [ZERO; 15];
    for &(q, b) in amps {
        let iq = I * q * inv;
        for k in 0..15 {
            plus[k] = (iq * offsets[k]).exp();
            minus[k] = (-iq * offsets[k]).exp();
        }
        let step_p = iq.exp();
        let step_m = (-iq).exp();
        // sin z = (e^{iz} - e^{-iz}) / (2i)
        let half = b / (2.0 * I);
        let mut cp = Complex64::new(1.0, 0.0);
        let mut cm = cp;
        for p in 0..panels {
            if p % 32 == 0 {
                cp = (iq * p as f64).exp();
                cm = (-iq * p as f64).exp();
            }
            let ap = half * cp;
            let am = half * cm;
            let row = &mut psi[15 * p..15 * p + 15];
            for k in 0..15 {
                row[k] += ap * plus[k] - am * minus[k];
            }
            cp *= step_p;
            cm *= step_m;
        }
    }
    psi
}

fn survival_spatial(t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<SurvivalPoint> {
    let (amps, q_err) = well_expansion(t, config, settings, FRAC_PI_4, 0.25, false)?;
    let static_tail_on = t == 0.0 && settings.tail_correction;
    let q_eff = if t > 0.0 { 1.0 / (2.0 * t) + 2.0 * config.n_pi() } else { settings.q_max };
    let mut panels = ((q_eff / (2.0 * PI)).ceil() as usize).clamp(4, 4096);
    let nodes = reference_nodes();
    loop {
        let mut psi = well_profile(&amps, panels);
        let mut tail_err = 0.0;
        if static_tail_on {
            for p in 0..panels {
                for k in 0..15 {
                    let u = (p as f64 + 0.5 * (1.0 + nodes[k].0)) / panels as f64;
                    let (v, e) = static_tail(u - 1.0, config, settings.q_max);
                    psi[15 * p + k] += v;
                    tail_err = f64::max(tail_err, e);
                }
            }
        }
        let half = 0.5 / panels as f64;
        let (mut pk, mut pg) = (0.0, 0.0);
        for p in 0..panels {
            for k in 0..15 {
                let v = psi[15 * p + k].norm_sqr();
                pk += nodes[k].1 * half * v;
                pg += nodes[k].2 * half * v;
            }
        }
        let ell_err = (pk - pg).abs();
        if ell_err <= 0.1 * settings.abs_tol || panels >= 4096 {
            let psi_err = q_err + tail_err;
            let err_est = ell_err + 2.0 * pk.max(0.0).sqrt() * psi_err + psi_err * psi_err;
            return Ok(SurvivalPoint::new(t, pk, Definition::InWell, Method::Quadrature, err_est));
        }
        panels *= 2;
    }
}

fn survival_double(t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<SurvivalPoint> {
    if t == 0.0 {
        return Err(Error::Domain(
            "the double momentum sum needs T > 0 (the integrand has no damping at T = 0)".into(),
        ));
    }
    let (amps, q_err) = well_expansion(t, config, settings, PI, 1.0, true)?;
    let mut total = 0.0;
    for (j, &(qj, bj)) in amps.iter().enumerate() {
        let qj_bar = qj.conj();
        total += bj.norm_sqr() * well_overlap_kernel_c(qj_bar, qj).re;
        let mut row = ZERO;
        for &(qk, bk) in &amps[j + 1..] {
            row += bk * well_overlap_kernel_c(qj_bar, qk);
        }
        total += 2.0 * (bj.conj() * row).re;
    }
    let err_est = 2.0 * total.max(0.0).sqrt() * q_err + q_err * q_err;
    Ok(SurvivalPoint::new(t, total, Definition::InWell, Method::Quadrature, err_est))
}

/// Squared overlap of `psi(T)` with the initial state, by quadrature.
pub fn overlap_survival_quadrature(t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<SurvivalPoint> {
    let (amp, err) = overlap_amplitude_quadrature(t, config, settings)?;
    let err_est = 2.0 * amp.norm() * err + err * err;
    Ok(SurvivalPoint::new(t, amp.norm_sqr(), Definition::Overlap, Method::Quadrature, err_est))
}

/// `<psi(0)|psi(T)>` and its error estimate.
pub fn overlap_amplitude_quadrature(t: f64, config: &ModelConfig, settings: &QuadSettings) -> Result<(Complex64, f64)> {
    check_time(t)?;
    settings.validate(config)?;
    let integral = integrate_momentum(t, 2.0, config, settings, FRAC_PI_4, 0.25, 1, |q, out| {
        out[0] = (-I * t * q * q).exp() * q * SQRT_2 * mode_overlap(q, config);
    })?;
    let mut err = integral.err;
    if t == 0.0 {
        // the integrand falls off like 1/q^4
        let n = f64::from(config.n());
        err += 2.0 * SQRT_2 * n * SQRT_2 * config.n_pi() / (3.0 * settings.q_max.powi(3));
    }
    Ok((integral.value[0], err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six() -> ModelConfig {
        ModelConfig::new(6.0, 1).unwrap()
    }

    #[test]
    fn sine_integral_values() {
        // reference values of Si
        for (z, si) in [(0.5, 0.493_107_418_043_066_7), (1.0, 0.946_083_070_367_183), (2.0, 1.605_412_976_802_695), (5.0, 1.549_931_244_944_674), (30.0, 1.566_756_540_030_351_3)] {
            assert!((FRAC_PI_2 - sine_integral_complement(z) - si).abs() < 1e-13, "z = {z}");
        }
        // continuity across the branch switch
        let a = sine_integral_complement(2.0 - 1e-12);
        let b = sine_integral_complement(2.0 + 1e-12);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn cosine_tail_matches_quadrature() {
        for omega in [0.0, 0.3, 2.0] {
            let q0 = 50.0;
            // integrate to a far cut and add the leading asymptotic remainder
            let far = 5000.0;
            let steps = 400_000;
            let h = (far - q0) / steps as f64;
            let mut sum = 0.0;
            for k in 0..=steps {
                let q = q0 + k as f64 * h;
                let w = if k == 0 || k == steps { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                sum += w * (omega * q).cos() / (q * q);
            }
            sum *= h / 3.0;
            let rest = if omega == 0.0 { 1.0 / far } else { -(omega * far).sin() / (omega * far * far) };
            assert!((cosine_tail(omega, q0) - sum - rest).abs() < 1e-9, "omega = {omega}");
        }
    }

    #[test]
    fn settings_validation() {
        let cfg = six();
        assert!(QuadSettings::default().validate(&cfg).is_ok());
        assert!(QuadSettings { q_max: 10.0, ..Default::default() }.validate(&cfg).is_err());
        assert!(QuadSettings::default().with_tol(0.0).validate(&cfg).is_err());
        let strong = ModelConfig::new(100.0, 1).unwrap();
        assert!(QuadSettings::default().validate(&strong).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        let cfg = six();
        let s = QuadSettings::default();
        assert!(psi_quadrature(-1.5, 1.0, &cfg, &s).is_err());
        assert!(psi_quadrature(-0.5, -1.0, &cfg, &s).is_err());
        assert!(psi_quadrature(-0.5, f64::NAN, &cfg, &s).is_err());
        assert!(survival_quadrature_with(0.0, &cfg, &s, SurvivalPath::DoubleMomentum).is_err());
    }

    #[test]
    fn reconstructs_initial_state() {
        let cfg = six();
        let s = QuadSettings::default();
        let inside = psi_quadrature(-0.5, 0.0, &cfg, &s).unwrap();
        assert!((inside.psi - Complex64::new(SQRT_2, 0.0)).norm() < 1e-4, "{:?}", inside);
        let outside = psi_quadrature(0.5, 0.0, &cfg, &s).unwrap();
        assert!(outside.psi.norm() < 1e-4, "{:?}", outside);
    }

    #[test]
    fn wall_node_and_current_at_start() {
        let cfg = six();
        let s = QuadSettings::default();
        let wall = psi_quadrature(-1.0, 0.7, &cfg, &s).unwrap();
        assert_eq!(wall.psi, ZERO);
        let j0 = current_at_barrier(0.0, &cfg, &s).unwrap();
        assert_eq!(j0.j, 0.0);
    }

    #[test]
    fn survival_starts_at_one() {
        let cfg = six();
        let s = QuadSettings::default();
        let p = survival_quadrature(0.0, &cfg, &s).unwrap();
        assert!((p.p - 1.0).abs() < 1e-6, "{p:?}");
        let o = overlap_survival_quadrature(0.0, &cfg, &s).unwrap();
        assert!((o.p - 1.0).abs() < 1e-6, "{o:?}");
    }

    #[test]
    fn descent_encloses_only_far_poles() {
        let cfg = six();
        let s = QuadSettings::default();
        for t in [0.05, 1.0, 10.0] {
            let path = momentum_path(t, 2.0, &cfg, &s, |z| (2.0 * t * z.re * z.im).exp()).unwrap();
            let turn = path.legs[0].1.re;
            assert!(turn >= 1.5 / t);
            let k = (turn / PI).ceil() as usize;
            assert!(find_pole(&cfg, k - 1).unwrap().q.re < turn && turn < find_pole(&cfg, k).unwrap().q.re);
            assert!(path.poles.iter().all(|&(q, _)| q.re > turn));
            // consecutive legs stay on the constant-phase hyperbola
            for &(_, end) in &path.legs[1..] {
                assert!((end.re * end.re - end.im * end.im - turn * turn).abs() < 1e-9 * turn * turn);
            }
        }
    }
}
