//! Long-time behaviour: the threshold (small-momentum) background
//! `psi ~ B(ell) T^{-3/2}`, the `1/T^3` survival law it implies, and the
//! hybrid pole-plus-background model for the transition between the
//! exponential and power-law regimes.
//!
//! The `O(T^{-5/2})` correction to the background is not included.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::contour::reference_nodes;
use crate::error::{Error, Result};
use crate::model::{Definition, Method, ModelConfig, SurvivalPoint};
use crate::resonances::{find_pole, well_norm, PoleExpansion, ResonancePole};
use crate::spectral::{mode_overlap, ramp_overlap};

/// Pole count used by the hybrid model when none is given.
pub const DEFAULT_HYBRID_POLES: usize = 4;

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and > 0, got {t}")))
    }
}

fn check_ell(ell: f64) -> Result<()> {
    if (-1.0..=0.0).contains(&ell) {
        Ok(())
    } else {
        Err(Error::Domain(format!("position {ell} is outside the well [-1, 0]")))
    }
}

/// Background amplitude per unit `(ell + 1)`:
/// `parity (1 + i) / (2 n pi^{3/2} (G + 1)^2)`.
///
/// `parity = (-1)^n` follows the sign of the initial state, so the phase is
/// `pi/4` for even `n` and `pi/4 - pi` for odd `n`.
pub fn background_slope(config: &ModelConfig) -> Complex64 {
    let g1 = config.g() + 1.0;
    let scale = config.parity() / (2.0 * config.n() as f64 * PI.powf(1.5) * g1 * g1);
    Complex64::new(scale, scale)
}

/// `B(ell) T^{-3/2}`, the long-time wave function inside the well.
pub fn psi_background(ell: f64, t: f64, config: &ModelConfig) -> Result<Complex64> {
    check_time(t)?;
    check_ell(ell)?;
    Ok(background_slope(config) * (ell + 1.0) * t.powf(-1.5))
}

/// `K` in `P_in_well(T) ~ K / T^3`: `|B'|^2 int_0^1 u^2 du = 1 / (6 n^2 pi^3 (G+1)^4)`.
pub fn longtime_constant(config: &ModelConfig) -> f64 {
    background_slope(config).norm_sqr() / 3.0
}

/// Same constant for the overlap definition:
/// `|B'|^2 |int_0^1 u sqrt(2) sin(n pi u) du|^2 = 2 |B'|^2 / (n pi)^2`.
pub fn overlap_longtime_constant(config: &ModelConfig) -> f64 {
    2.0 * background_slope(config).norm_sqr() / (config.n_pi() * config.n_pi())
}

/// `K / T^3`, accurate once the exponential part has died out (`T >~ 18` at
/// `G = 6`).
pub fn survival_longtime(t: f64, config: &ModelConfig) -> Result<SurvivalPoint> {
    survival_longtime_with(t, config, Definition::InWell)
}

pub fn survival_longtime_with(t: f64, config: &ModelConfig, definition: Definition) -> Result<SurvivalPoint> {
    check_time(t)?;
    let k = match definition {
        Definition::InWell => longtime_constant(config),
        Definition::Overlap => overlap_longtime_constant(config),
    };
    let p = k / (t * t * t);
    // relative size of the neglected T^{-5/2} term in the amplitude
    Ok(SurvivalPoint::new(t, p, definition, Method::Asymptotic, 2.0 * p / t))
}

/// Leading pole and threshold background of one configuration.
#[derive(Debug, Clone)]
pub struct AsymptoticModel {
    pub config: ModelConfig,
    pub leading_pole: ResonancePole,
    /// `B(ell) / (ell + 1)`.
    pub background_slope: Complex64,
}

impl AsymptoticModel {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        Ok(Self {
            config: *config,
            leading_pole: find_pole(config, 1)?,
            background_slope: background_slope(config),
        })
    }

    pub fn background(&self, ell: f64) -> Complex64 {
        self.background_slope * (ell + 1.0)
    }

    pub fn psi_background(&self, ell: f64, t: f64) -> Result<Complex64> {
        psi_background(ell, t, &self.config)
    }

    /// Time where the leading exponential `N_1 e^{-T/tau_1}` (with `N_1`
    /// the in-well norm of the first residue term) falls to `K / T^3`.
    pub fn crossover_time(&self) -> Result<f64> {
        let expansion = PoleExpansion::new(&self.config, vec![self.leading_pole.clone()])?;
        let weight = well_norm(&expansion.amplitudes_at(0.0));
        let tau = self.leading_pole.tau;
        let k = longtime_constant(&self.config);
        let gap = |t: f64| (weight.ln() - t / tau) - (k.ln() - 3.0 * t.ln());
        let (mut lo, mut hi) = (tau, 1e3 * tau.max(1.0));
        if gap(lo) <= 0.0 || gap(hi) >= 0.0 {
            return Err(Error::Domain("no crossover between exponential and power law".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Coherent sum of the first `n_poles` residue terms and the background,
/// `psi(ell, T) = sum_i c_i(ell) e^{-i q_i^2 T} + B(ell) T^{-3/2}`.
pub struct HybridModel {
    pub expansion: PoleExpansion,
    pub background_slope: Complex64,
}

impl HybridModel {
    pub fn new(config: &ModelConfig, n_poles: usize) -> Result<Self> {
        if n_poles == 0 {
            return Err(Error::Domain("need at least one pole".into()));
        }
        Ok(Self { expansion: PoleExpansion::leading(config, n_poles)?, background_slope: background_slope(config) })
    }

    pub fn psi(&self, ell: f64, t: f64) -> Result<Complex64> {
        check_time(t)?;
        check_ell(ell)?;
        Ok(self.expansion.psi(ell, t)? + self.background_slope * (ell + 1.0) * t.powf(-1.5))
    }

    pub fn survival(&self, t: f64, definition: Definition) -> Result<SurvivalPoint> {
        check_time(t)?;
        let config = &self.expansion.config;
        let amps = self.expansion.amplitudes_at(t);
        let bg = self.background_slope * t.powf(-1.5);
        let (p, p_bg) = match definition {
            Definition::InWell => {
                let mut cross = Complex64::new(0.0, 0.0);
                for &(q, b) in &amps {
                    cross += b.conj() * ramp_overlap(q.conj());
                }
                let p_bg = bg.norm_sqr() / 3.0;
                (well_norm(&amps) + p_bg + 2.0 * (cross * bg).re, p_bg)
            }
            Definition::Overlap => {
                let mut a = Complex64::new(0.0, 0.0);
                for &(q, b) in &amps {
                    a += b * SQRT_2 * mode_overlap(q, config);
                }
                let a_bg = bg * SQRT_2 * ramp_overlap(Complex64::new(config.n_pi(), 0.0));
                ((a + a_bg).norm_sqr(), a_bg.norm_sqr())
            }
        };
        let err = 2.0 * (p.max(0.0) * p_bg).sqrt() / t;
        Ok(SurvivalPoint::new(t, p, definition, Method::Hybrid, err))
    }
}

/// Hybrid survival with `n_poles` residue terms; intended for `T >= 2`.
pub fn hybrid_survival(t: f64, config: &ModelConfig, n_poles: usize, definition: Definition) -> Result<SurvivalPoint> {
    HybridModel::new(config, n_poles)?.survival(t, definition)
}

/// Long-time ratio of in-well to overlap survival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefinitionRatio {
    /// `n^2 pi^2 / 6`.
    pub analytic: f64,
    /// The same ratio with both well integrals of the background done by
    /// Gauss-Kronrod quadrature.
    pub numeric: f64,
}

pub fn definition_ratio_longtime(config: &ModelConfig) -> DefinitionRatio {
    let analytic = config.n_pi() * config.n_pi() / 6.0;
    let slope = background_slope(config);
    let panels = 8 * config.n() as usize;
    let (mut in_well, mut projection) = (0.0, Complex64::new(0.0, 0.0));
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, wk, _) in reference_nodes() {
            let u = mid + half * x;
            let psi = slope * u;
            in_well += half * wk * psi.norm_sqr();
            projection += half * wk * psi * SQRT_2 * (config.n_pi() * u).sin();
        }
    }
    DefinitionRatio { analytic, numeric: in_well / projection.norm_sqr() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{psi_quadrature, survival_quadrature, QuadSettings};
    use proptest::prelude::*;

    fn cfg(g: f64, n: u32) -> ModelConfig {
        ModelConfig::new(g, n).unwrap()
    }

    // composite Simpson on [-1, 0]
    fn simpson(f: impl Fn(f64) -> f64, m: usize) -> f64 {
        let h = 1.0 / m as f64;
        let mut s = f(-1.0) + f(0.0);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(-1.0 + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn background_at_barrier() {
        let c = cfg(6.0, 1);
        let psi = psi_background(0.0, 100.0, &c).unwrap();
        let expected = SQRT_2 / (2.0 * PI.powf(1.5) * 49.0 * 1e3);
        assert!((psi.norm() - expected).abs() < 1e-12);
        assert!((psi.norm() - 2.5916e-6).abs() < 1e-9);
        assert_eq!(psi_background(-1.0, 3.0, &c).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn background_phase() {
        let even = psi_background(-0.3, 50.0, &cfg(6.0, 2)).unwrap();
        assert!((even.arg() - PI / 4.0).abs() < 1e-12);
        let odd = psi_background(-0.3, 50.0, &cfg(6.0, 1)).unwrap();
        assert!((odd.arg() + 3.0 * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn background_matches_quadrature_at_long_time() {
        let c = cfg(6.0, 1);
        let s = QuadSettings::default().with_tol(1e-12);
        for ell in [0.0, -0.5] {
            let quad = psi_quadrature(ell, 100.0, &c, &s).unwrap().psi;
            let bg = psi_background(ell, 100.0, &c).unwrap();
            assert!((quad - bg).norm() / bg.norm() < 0.05, "ell={ell}: {quad} vs {bg}");
        }
    }

    #[test]
    fn background_domain() {
        let c = cfg(6.0, 1);
        assert!(psi_background(0.0, 0.0, &c).is_err());
        assert!(psi_background(0.5, 1.0, &c).is_err());
        assert!(survival_longtime(-1.0, &c).is_err());
    }

    #[test]
    fn longtime_constant_matches_numeric_well_integral() {
        for (g, n) in [(6.0, 1), (1.0, 2), (20.0, 3)] {
            let c = cfg(g, n);
            let numeric = simpson(|ell| psi_background(ell, 1.0, &c).unwrap().norm_sqr(), 200);
            let k = longtime_constant(&c);
            assert!((numeric - k).abs() < 1e-12 * k.max(1e-300) + 1e-20, "{numeric} vs {k}");
            let closed = 1.0 / (6.0 * (n * n) as f64 * PI.powi(3) * (g + 1.0).powi(4));
            assert!((k - closed).abs() < 1e-14 * closed);
        }
        assert!((longtime_constant(&cfg(6.0, 1)) - 2.2388e-6).abs() < 1e-10);
    }

    #[test]
    fn longtime_constant_scales_as_inverse_n_squared() {
        let ratio = longtime_constant(&cfg(6.0, 2)) / longtime_constant(&cfg(6.0, 1));
        assert!((ratio - 0.25).abs() < 1e-14);
    }

    #[test]
    fn survival_at_thirty() {
        let p = survival_longtime(30.0, &cfg(6.0, 1)).unwrap();
        assert!((p.p - 8.29e-11).abs() < 0.01e-11, "{}", p.p);
        assert_eq!(p.method, Method::Asymptotic);
        let hybrid = hybrid_survival(30.0, &cfg(6.0, 1), 4, Definition::InWell).unwrap();
        assert!((hybrid.p / p.p - 1.0).abs() < 0.05, "{} vs {}", hybrid.p, p.p);
    }

    #[test]
    fn hybrid_matches_quadrature_at_three() {
        let c = cfg(6.0, 1);
        let quad = survival_quadrature(3.0, &c, &QuadSettings::default().with_tol(1e-10)).unwrap();
        let hybrid = hybrid_survival(3.0, &c, 4, Definition::InWell).unwrap();
        assert!((hybrid.p / quad.p - 1.0).abs() < 0.01, "{} vs {}", hybrid.p, quad.p);
    }

    #[test]
    fn definition_ratio() {
        let one = definition_ratio_longtime(&cfg(6.0, 1));
        assert!((one.analytic - PI * PI / 6.0).abs() < 1e-14);
        assert!((one.analytic - 1.6449).abs() < 1e-4);
        assert!((one.numeric / one.analytic - 1.0).abs() < 1e-10);
        let two = definition_ratio_longtime(&cfg(6.0, 2));
        assert!((two.analytic - 6.5797).abs() < 1e-4);
        assert!((two.numeric / two.analytic - 1.0).abs() < 1e-10);
    }

    #[test]
    fn definition_ratio_from_hybrid_at_forty() {
        let c = cfg(6.0, 1);
        let well = hybrid_survival(40.0, &c, 4, Definition::InWell).unwrap().p;
        let overlap = hybrid_survival(40.0, &c, 4, Definition::Overlap).unwrap().p;
        assert!((well / overlap / (PI * PI / 6.0) - 1.0).abs() < 0.03);
    }

    #[test]
    fn crossover_lies_in_transition_window() {
        let t = AsymptoticModel::new(&cfg(6.0, 1)).unwrap().crossover_time().unwrap();
        assert!((10.0..=18.0).contains(&t), "{t}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hybrid_bounded_by_parts(ell in -1.0f64..=0.0, t in 2.0f64..40.0) {
            let c = cfg(6.0, 1);
            let model = HybridModel::new(&c, 4).unwrap();
            let full = model.psi(ell, t).unwrap().norm_sqr();
            let poles = model.expansion.psi(ell, t).unwrap().norm_sqr();
            let bg = psi_background(ell, t, &c).unwrap().norm_sqr();
            prop_assert!(full <= 2.0 * (poles + bg) * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn background_linear_in_position(ell in -1.0f64..=0.0, t in 1.0f64..100.0) {
            let c = cfg(6.0, 1);
            let at = psi_background(ell, t, &c).unwrap().norm();
            let edge = psi_background(0.0, t, &c).unwrap().norm();
            prop_assert!((at - edge * (ell + 1.0)).abs() <= 1e-14 * edge);
        }
    }
}
