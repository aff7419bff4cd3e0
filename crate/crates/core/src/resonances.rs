//! Resonance poles: zeros of `g(q) = q + G e^{iq} sin q` in the fourth
//! quadrant, their lifetimes and energies, and the residue (pole) expansion
//! of the wave function and of the survival probability.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DecayConstants, Definition, Method, ModelConfig, SurvivalPoint};
use crate::spectral::{
    g_cofactor, g_factor, g_prime, kernel_f, mode_overlap, well_overlap_kernel_c, SpectralKernel,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest count accepted by [`find_poles`].
pub const MAX_POLES: usize = 64;

/// Residue-calculus factor for closing `[0, inf)` clockwise into the lower
/// half plane.
pub const CONTOUR_FACTOR: Complex64 = Complex64 { re: 0.0, im: -2.0 * PI };

const STEP_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 80;

/// One zero of `g`, with derived lifetime and energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePole {
    /// 1-based; pole `k` has `(k-1) pi < Re q < k pi`.
    pub index: usize,
    pub q: Complex64,
    /// `-1 / (4 Re q Im q)`.
    pub tau: f64,
    /// `(Re q)^2 - (Im q)^2`.
    pub eps: f64,
    /// `|g(q)|` after polishing.
    pub residual: f64,
}

impl ResonancePole {
    fn from_root(index: usize, q: Complex64, config: &ModelConfig) -> Self {
        let (tau, eps) = lifetime_energy(q);
        Self { index, q, tau, eps, residual: g_factor(q, config).norm() }
    }
}

impl fmt::Display for ResonancePole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} q={} tau={} eps={}", self.index, self.q, self.tau, self.eps)
    }
}

fn lifetime_energy(q: Complex64) -> (f64, f64) {
    (-1.0 / (4.0 * q.re * q.im), q.re * q.re - q.im * q.im)
}

/// `(tau, eps)` of a pole. `Im(q^2) = -1/(2 tau)`, so `|e^{-i q^2 T}| = e^{-T/(2 tau)}`.
pub fn pole_constants(pole: &ResonancePole) -> (f64, f64) {
    lifetime_energy(pole.q)
}

fn newton(mut q: Complex64, config: &ModelConfig) -> Option<Complex64> {
    for _ in 0..MAX_NEWTON {
        let step = g_factor(q, config) / g_prime(q, config);
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        q -= step;
        if step.norm() < STEP_TOL * q.norm().max(1.0) {
            return Some(q);
        }
    }
    None
}

fn in_bracket(q: Complex64, index: usize) -> bool {
    let k = index as f64;
    q.re > (k - 1.0) * PI && q.re < k * PI && q.im < 0.0
}

/// Large-`G` seed, accurate while `k pi` is small compared with `G`.
fn strong_barrier_seed(index: usize, g: f64) -> Complex64 {
    let kp = index as f64 * PI;
    Complex64::new(kp * (1.0 - 1.0 / (g + 1.0)), -g * kp * kp / (g + 1.0).powi(3))
}

/// Seed for `k pi` large compared with `G`: `e^{2iq} = 1 - 2iq/G`, solved by
/// fixed-point iteration on the logarithm.
fn far_seed(index: usize, g: f64) -> Complex64 {
    let kp = index as f64 * PI;
    let mut q = Complex64::new(kp - PI / 4.0, -0.5);
    for _ in 0..6 {
        q = kp + (1.0 - 2.0 * I * q / g).ln() / (2.0 * I);
    }
    q
}

fn continuation(index: usize, config: &ModelConfig) -> Option<Complex64> {
    let target = config.g();
    let start = 1e3_f64.max(target);
    let mut q = strong_barrier_seed(index, start);
    let steps = ((start / target).log10() * 20.0).ceil().max(1.0) as usize;
    let ratio = (target / start).powf(1.0 / steps as f64);
    let mut g = start;
    for step in 0..=steps {
        if step > 0 {
            g *= ratio;
        }
        if step == steps {
            g = target;
        }
        let stage = ModelConfig::new(g, config.n()).ok()?;
        q = newton(q, &stage)?;
    }
    Some(q)
}

/// Pole number `index` (1-based) for any index.
pub fn find_pole(config: &ModelConfig, index: usize) -> Result<ResonancePole> {
    if config.is_free() {
        return Err(Error::InvalidConfig("G = 0 has no resonance poles".into()));
    }
    if index == 0 {
        return Err(Error::Domain("pole indices start at 1".into()));
    }
    let g = config.g();
    let (strong, far) = (strong_barrier_seed(index, g), far_seed(index, g));
    let seeds = if index as f64 * PI < g { [strong, far] } else { [far, strong] };
    let mut last = seeds[0];
    let mut root = None;
    for seed in seeds {
        if let Some(q) = newton(seed, config) {
            last = q;
            if in_bracket(q, index) {
                root = Some(q);
                break;
            }
        }
    }
    if root.is_none() {
        if let Some(q) = continuation(index, config) {
            last = q;
            if in_bracket(q, index) {
                root = Some(q);
            }
        }
    }
    let residual_bound = 1e-10 * (1.0 + g) * last.norm().max(1.0);
    match root {
        Some(q) if g_factor(q, config).norm() <= residual_bound => {
            if (q - config.n_pi()).norm() < 1e-8 {
                return Err(Error::DegeneratePole { index, q });
            }
            Ok(ResonancePole::from_root(index, q, config))
        }
        _ => Err(Error::PoleNotConverged { index, last, residual: g_factor(last, config).norm() }),
    }
}

/// The first `count` poles, ordered by `Re q`.
pub fn find_poles(config: &ModelConfig, count: usize) -> Result<Vec<ResonancePole>> {
    if count == 0 || count > MAX_POLES {
        return Err(Error::Domain(format!("pole count must be in 1..={MAX_POLES}, got {count}")));
    }
    find_pole_range(config, 1, count)
}

/// Poles `first ..= last` (no upper limit on the index).
pub fn find_pole_range(config: &ModelConfig, first: usize, last: usize) -> Result<Vec<ResonancePole>> {
    let poles: Vec<ResonancePole> =
        (first..=last).into_par_iter().map(|k| find_pole(config, k)).collect::<Result<_>>()?;
    check_distinct(&poles)?;
    Ok(poles)
}

fn check_distinct(poles: &[ResonancePole]) -> Result<()> {
    for pair in poles.windows(2) {
        if (pair[0].q - pair[1].q).norm() < 1e-8 * pair[1].q.norm() {
            return Err(Error::DuplicatePole { first: pair[0].index, second: pair[1].index, q: pair[1].q });
        }
    }
    Ok(())
}

/// `CONTOUR_FACTOR` times the residue at `q` (a zero of `g`) of the momentum
/// weight `(-1)^n 2 n sqrt(2) q sin q / ((q^2 - n^2 pi^2) D(q))`, using
/// `D = g g_bar`.
pub fn weight_residue(q: Complex64, config: &ModelConfig) -> Complex64 {
    let n = f64::from(config.n());
    let ratio = SpectralKernel::new(*config).removable_ratio(q);
    CONTOUR_FACTOR * config.parity() * 2.0 * n * SQRT_2 * ratio / (g_prime(q, config) * g_cofactor(q, config))
}

/// Amplitude `c_i(ell)` of `e^{-i q_i^2 T}` in the pole expansion of `psi`.
pub fn residue_coefficient(pole: &ResonancePole, ell: f64, config: &ModelConfig) -> Result<Complex64> {
    if (pole.q - config.n_pi()).norm() < 1e-8 {
        return Err(Error::DegeneratePole { index: pole.index, q: pole.q });
    }
    Ok(weight_residue(pole.q, config) * kernel_f(ell, pole.q, config)?)
}

/// Truncated residue sum for `psi` on the well.
#[derive(Debug, Clone)]
pub struct PoleExpansion {
    pub config: ModelConfig,
    pub poles: Vec<ResonancePole>,
    /// `A_i` with `c_i(ell) = A_i sin((ell + 1) q_i)` inside the well.
    pub amplitudes: Vec<Complex64>,
    pub contour_factor: Complex64,
}

impl PoleExpansion {
    pub fn new(config: &ModelConfig, poles: Vec<ResonancePole>) -> Result<Self> {
        let mut amplitudes = Vec::with_capacity(poles.len());
        for pole in &poles {
            if (pole.q - config.n_pi()).norm() < 1e-8 {
                return Err(Error::DegeneratePole { index: pole.index, q: pole.q });
            }
            amplitudes.push(weight_residue(pole.q, config) * pole.q);
        }
        Ok(Self { config: *config, poles, amplitudes, contour_factor: CONTOUR_FACTOR })
    }

    /// Expansion over the first `n_poles` poles.
    pub fn leading(config: &ModelConfig, n_poles: usize) -> Result<Self> {
        Self::new(config, find_poles(config, n_poles)?)
    }

    /// `c_i(ell)`.
    pub fn coefficient(&self, i: usize, ell: f64) -> Result<Complex64> {
        residue_coefficient(&self.poles[i], ell, &self.config)
    }

    /// Time-dependent amplitudes `A_i e^{-i q_i^2 T}`.
    pub fn amplitudes_at(&self, t: f64) -> Vec<(Complex64, Complex64)> {
        self.poles
            .iter()
            .zip(&self.amplitudes)
            .map(|(p, a)| (p.q, a * (-I * p.q * p.q * t).exp()))
            .collect()
    }

    pub fn psi(&self, ell: f64, t: f64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (i, p) in self.poles.iter().enumerate() {
            sum += self.coefficient(i, ell)? * (-I * p.q * p.q * t).exp();
        }
        Ok(sum)
    }

    /// Survival from the pole sum, with the `ell` integral in closed form.
    pub fn survival(&self, t: f64, definition: Definition) -> SurvivalPoint {
        let amps = self.amplitudes_at(t);
        let p = match definition {
            Definition::InWell => well_norm(&amps),
            Definition::Overlap => {
                let mut a = Complex64::new(0.0, 0.0);
                for &(q, b) in &amps {
                    a += b * SQRT_2 * mode_overlap(q, &self.config);
                }
                a.norm_sqr()
            }
        };
        SurvivalPoint::new(t, p, definition, Method::Poles, 0.0)
    }
}

/// `int_0^1 |sum_j b_j sin(u q_j)|^2 du`.
pub(crate) fn well_norm(amps: &[(Complex64, Complex64)]) -> f64 {
    let mut total = 0.0;
    for (j, &(qj, bj)) in amps.iter().enumerate() {
        let qj_bar = qj.conj();
        total += bj.norm_sqr() * well_overlap_kernel_c(qj_bar, qj).re;
        let mut row = Complex64::new(0.0, 0.0);
        for &(qk, bk) in &amps[j + 1..] {
            row += bk * well_overlap_kernel_c(qj_bar, qk);
        }
        total += 2.0 * (bj.conj() * row).re;
    }
    total
}

/// Survival probability from the first `n_poles` poles.
pub fn survival_pole_expansion(
    t: f64,
    config: &ModelConfig,
    n_poles: usize,
    definition: Definition,
) -> Result<SurvivalPoint> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    if n_poles == 0 {
        return Err(Error::Domain("need at least one pole".into()));
    }
    Ok(PoleExpansion::leading(config, n_poles)?.survival(t, definition))
}

/// `(2 pi / (eps_2 - eps_1), 2 pi / eps_1)`: the beat between the two
/// longest-lived poles, and between the first pole and the non-oscillating
/// power-law background.
pub fn beat_periods(config: &ModelConfig) -> Result<(f64, f64)> {
    let poles = find_poles(config, 2)?;
    Ok((2.0 * PI / (poles[1].eps - poles[0].eps), 2.0 * PI / poles[0].eps))
}

pub fn decay_constants(config: &ModelConfig, count: usize) -> Result<DecayConstants> {
    let poles = find_poles(config, count)?;
    Ok(DecayConstants {
        taus: poles.iter().map(|p| p.tau).collect(),
        energies: poles.iter().map(|p| p.eps).collect(),
        lambda: 1.0 / poles[0].tau,
    })
}

/// Format of one cache line: `G index re_q im_q residual`, numbers written
/// with Rust's shortest round-trip formatting.
pub fn format_record(g: f64, pole: &ResonancePole) -> String {
    format!("{} {} {} {} {}", g, pole.index, pole.q.re, pole.q.im, pole.residual)
}

/// Inverse of [`format_record`]; returns `(G, index, q, residual)`.
pub fn parse_record(line: &str) -> Result<(f64, usize, Complex64, f64)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(Error::Cache(format!("expected 5 fields, got {}: '{line}'", fields.len())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Cache(format!("bad number '{s}': {e}")));
    let index = fields[1].parse::<usize>().map_err(|e| Error::Cache(format!("bad index '{}': {e}", fields[1])))?;
    Ok((num(fields[0])?, index, Complex64::new(num(fields[2])?, num(fields[3])?), num(fields[4])?))
}

const CACHE_HEADER: &str = "# leaky-well pole cache v1: G index re_q im_q residual";

/// Poles persisted per barrier strength. Poles do not depend on the mode
/// index, so `G` alone is the key.
#[derive(Debug, Clone, Default)]
pub struct PoleCache {
    path: Option<PathBuf>,
    entries: BTreeMap<u64, (f64, Vec<(usize, Complex64, f64)>)>,
    dirty: bool,
}

impl PoleCache {
    /// Cache that lives only in memory.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Load `path` if it exists; a missing file gives an empty cache.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut cache = Self { path: Some(path.clone()), ..Self::default() };
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => return Err(e.into()),
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (g, index, q, residual) =
                parse_record(line).map_err(|e| Error::Cache(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
            let entry = cache.entries.entry(g.to_bits()).or_insert((g, Vec::new()));
            entry.1.push((index, q, residual));
        }
        for (_, list) in cache.entries.values_mut() {
            list.sort_by_key(|r| r.0);
            list.dedup_by_key(|r| r.0);
        }
        Ok(cache)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Cached poles `1..=count`, each revalidated by one Newton step.
    /// Returns `None` if any is missing or fails revalidation.
    pub fn get(&self, config: &ModelConfig, count: usize) -> Option<Vec<ResonancePole>> {
        let (_, list) = self.entries.get(&config.g().to_bits())?;
        let mut out = Vec::with_capacity(count);
        for k in 1..=count {
            let &(index, q, _) = list.iter().find(|r| r.0 == k)?;
            let step = g_factor(q, config) / g_prime(q, config);
            if !(step.norm() <= 1e-10 * q.norm().max(1.0)) || !in_bracket(q, index) {
                return None;
            }
            out.push(ResonancePole::from_root(index, q, config));
        }
        Some(out)
    }

    pub fn insert(&mut self, config: &ModelConfig, poles: &[ResonancePole]) {
        let entry = self.entries.entry(config.g().to_bits()).or_insert((config.g(), Vec::new()));
        for p in poles {
            entry.1.retain(|r| r.0 != p.index);
            entry.1.push((p.index, p.q, p.residual));
        }
        entry.1.sort_by_key(|r| r.0);
        self.dirty = true;
    }

    /// Cached poles if valid, otherwise computed and recorded.
    pub fn poles(&mut self, config: &ModelConfig, count: usize) -> Result<Vec<ResonancePole>> {
        if let Some(p) = self.get(config, count) {
            return Ok(p);
        }
        let poles = find_poles(config, count)?;
        self.insert(config, &poles);
        Ok(poles)
    }

    /// Text form of the whole cache.
    pub fn render(&self) -> String {
        let mut out = String::from(CACHE_HEADER);
        out.push('\n');
        for (g, list) in self.entries.values() {
            for &(index, q, residual) in list {
                let pole = ResonancePole { index, q, tau: 0.0, eps: 0.0, residual };
                out.push_str(&format_record(*g, &pole));
                out.push('\n');
            }
        }
        out
    }

    /// Write to the backing file through a temporary file and an atomic
    /// rename, so readers never see a partial cache.
    pub fn save(&mut self) -> Result<()> {
        let Some(path) = self.path.clone() else { return Ok(()) };
        if !self.dirty {
            return Ok(());
        }
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(self.render().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
        self.dirty = false;
        Ok(())
    }
}
