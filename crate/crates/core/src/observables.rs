//! Physical observables assembled from the engines: survival curves with
//! automatic method choice, deviation-from-exponential series, measurement
//! (Zeno) schedules, decay-rate fits and oscillation periods.

use rayon::prelude::*;

use crate::contour::reference_nodes;
use crate::asymptotics::{hybrid_survival, survival_longtime_with, DEFAULT_HYBRID_POLES};
use crate::error::{Error, Result};
use crate::model::{Definition, Method, ModelConfig, SurvivalPoint};
use crate::quad::{current_at_barrier, overlap_survival_quadrature, survival_quadrature, QuadSettings};
use crate::resonances::{find_pole, survival_pole_expansion};

/// Upper end of the range handled by quadrature under [`Method::Auto`].
pub const QUADRATURE_UNTIL: f64 = 2.0;
/// Upper end of the range handled by the pole expansion under [`Method::Auto`].
pub const POLES_UNTIL: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalOptions {
    pub quad: QuadSettings,
    /// Poles used by the pole and hybrid methods. Past two poles the pole
    /// sum hardly moves; its remaining gap to quadrature at short times is the
    /// non-resonant background, which no number of poles supplies.
    pub n_poles: usize,
    /// Relative disagreement tolerated between methods at a seam.
    pub seam_tol: f64,
}

impl Default for SurvivalOptions {
    fn default() -> Self {
        Self { quad: QuadSettings::default(), n_poles: DEFAULT_HYBRID_POLES, seam_tol: 1e-3 }
    }
}

/// Survival by one explicit method. `Method::Auto` is resolved by `T` alone,
/// without seam checks; see [`AutoSurvival`] for the checked version.
pub fn survival_by(
    t: f64,
    config: &ModelConfig,
    definition: Definition,
    method: Method,
    options: &SurvivalOptions,
) -> Result<SurvivalPoint> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    match method {
        Method::Quadrature => match definition {
            Definition::InWell => survival_quadrature(t, config, &options.quad),
            Definition::Overlap => overlap_survival_quadrature(t, config, &options.quad),
        },
        Method::Poles => survival_pole_expansion(t, config, options.n_poles, definition),
        Method::Hybrid => hybrid_survival(t, config, options.n_poles, definition),
        Method::Asymptotic => survival_longtime_with(t, config, definition),
        Method::Auto => survival_by(t, config, definition, auto_method(t), options),
    }
}

/// Method picked by [`Method::Auto`] at time `t`.
pub fn auto_method(t: f64) -> Method {
    if t <= QUADRATURE_UNTIL {
        Method::Quadrature
    } else if t <= POLES_UNTIL {
        Method::Poles
    } else {
        Method::Hybrid
    }
}

/// Two methods evaluated at the time where `Auto` switches between them.
#[derive(Debug, Clone, PartialEq)]
pub struct SeamCheck {
    pub t: f64,
    pub below: SurvivalPoint,
    pub above: SurvivalPoint,
    pub relative_gap: f64,
    pub passed: bool,
}

impl SeamCheck {
    fn warning(&self) -> String {
        format!(
            "seam at T = {}: {} gives {:.6e}, {} gives {:.6e} (relative gap {:.2e})",
            self.t, self.below.method, self.below.p, self.above.method, self.above.p, self.relative_gap
        )
    }
}

fn seam_check(t: f64, lower: Method, upper: Method, config: &ModelConfig, definition: Definition, options: &SurvivalOptions) -> Result<SeamCheck> {
    let below = survival_by(t, config, definition, lower, options)?;
    let above = survival_by(t, config, definition, upper, options)?;
    let relative_gap = (below.p - above.p).abs() / below.p.abs().max(f64::MIN_POSITIVE);
    Ok(SeamCheck { t, below, above, relative_gap, passed: relative_gap <= options.seam_tol })
}

/// Survival curve under automatic method choice. Both seams are checked
/// once on construction. A point evaluated by the method on the far side of
/// a failed seam (or at the seam itself) gets its error estimate widened by
/// the seam gap and carries a warning.
#[derive(Debug, Clone)]
pub struct AutoSurvival {
    pub config: ModelConfig,
    pub definition: Definition,
    pub options: SurvivalOptions,
    pub seams: [SeamCheck; 2],
}

impl AutoSurvival {
    pub fn new(config: &ModelConfig, definition: Definition, options: SurvivalOptions) -> Result<Self> {
        let lower = seam_check(QUADRATURE_UNTIL, Method::Quadrature, Method::Poles, config, definition, &options)?;
        let upper = seam_check(POLES_UNTIL, Method::Poles, Method::Hybrid, config, definition, &options)?;
        Ok(Self { config: *config, definition, options, seams: [lower, upper] })
    }

    pub fn evaluate(&self, t: f64) -> Result<SurvivalPoint> {
        let method = auto_method(t);
        let mut point = survival_by(t, &self.config, self.definition, method, &self.options)?;
        for seam in &self.seams {
            let touches = match method {
                Method::Quadrature => t == seam.t && seam.t == QUADRATURE_UNTIL,
                Method::Poles => seam.t == QUADRATURE_UNTIL || t == seam.t,
                _ => seam.t == POLES_UNTIL,
            };
            if touches && !seam.passed {
                point.err_est = point.err_est.max(seam.relative_gap * point.p.abs());
                point.warnings.push(seam.warning());
            }
        }
        Ok(point)
    }

    /// Values on a grid, in grid order; evaluated in parallel.
    pub fn series(&self, grid: &[f64]) -> Result<Vec<SurvivalPoint>> {
        grid.par_iter().map(|&t| self.evaluate(t)).collect()
    }
}

/// Survival at one time. `Method::Auto` runs the seam checks.
pub fn survival(t: f64, config: &ModelConfig, definition: Definition, method: Method) -> Result<SurvivalPoint> {
    let options = SurvivalOptions::default();
    if method == Method::Auto {
        AutoSurvival::new(config, definition, options)?.evaluate(t)
    } else {
        survival_by(t, config, definition, method, &options)
    }
}

/// On `[0, CURRENT_ONSET]` the current is taken as `a sqrt(T) + b T`,
/// matched at `CURRENT_ONSET / 4` and `CURRENT_ONSET`.
pub const CURRENT_ONSET: f64 = 1e-3;

// widest initial panel in s = sqrt(T); near the onset panels are 10% of s
const CURRENT_PANEL: f64 = 0.05;

/// `int_{t_from}^{t_to} j(0, T) dT`. Past [`CURRENT_ONSET`] the integral is
/// adaptive Gauss-Kronrod in `s = sqrt(T)`, where `2 s j(s^2)` is smooth
/// because the current grows like `sqrt(T)` from zero.
pub fn integrated_current(t_from: f64, t_to: f64, config: &ModelConfig, settings: &QuadSettings, tol: f64) -> Result<f64> {
    if !(t_from >= 0.0 && t_to >= t_from && t_to.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("bad current interval [{t_from}, {t_to}]")));
    }
    if t_to == t_from {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut from = t_from;
    if from < CURRENT_ONSET {
        let t0 = CURRENT_ONSET;
        let (quarter, full) = (current_at_barrier(0.25 * t0, config, settings)?.j, current_at_barrier(t0, config, settings)?.j);
        let a = (4.0 * quarter - full) / t0.sqrt();
        let b = (full - a * t0.sqrt()) / t0;
        let upper = t_to.min(t0);
        let antiderivative = |t: f64| 2.0 / 3.0 * a * t.powf(1.5) + 0.5 * b * t * t;
        total += antiderivative(upper) - antiderivative(from);
        from = upper;
    }
    if t_to > from {
        total += current_panels(from.sqrt(), t_to.sqrt(), config, settings, tol)?;
    }
    Ok(total)
}

// Parallel adaptive G7-K15 of 2 s j(s^2) over [a, b]; every round bisects
// the panels whose error exceeds their share of `tol`.
fn current_panels(a: f64, b: f64, config: &ModelConfig, settings: &QuadSettings, tol: f64) -> Result<f64> {
    let nodes = reference_nodes();
    let rule = |(lo, hi): (f64, f64)| -> Result<(f64, f64)> {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let values: Vec<f64> = nodes
            .par_iter()
            .map(|&(x, _, _)| {
                let s = mid + half * x;
                Ok(2.0 * s * current_at_barrier(s * s, config, settings)?.j)
            })
            .collect::<Result<_>>()?;
        let (mut k, mut g) = (0.0, 0.0);
        for (v, &(_, wk, wg)) in values.iter().zip(&nodes) {
            k += wk * v;
            g += wg * v;
        }
        Ok((half * k, (half * (k - g)).abs()))
    };
    let mut pending = Vec::new();
    let mut lo = a;
    while lo < b {
        let step = CURRENT_PANEL.min(0.1 * lo.max(1e-3));
        let hi = if lo + 1.5 * step >= b { b } else { lo + step };
        pending.push((lo, hi));
        lo = hi;
    }
    let mut total = 0.0;
    for _ in 0..30 {
        if pending.is_empty() {
            return Ok(total);
        }
        let done: Vec<((f64, f64), (f64, f64))> =
            pending.par_iter().map(|&p| Ok((p, rule(p)?))).collect::<Result<_>>()?;
        pending.clear();
        for ((lo, hi), (value, err)) in done {
            if err <= tol * (hi - lo) / (b - a) {
                total += value;
            } else {
                let mid = 0.5 * (lo + hi);
                pending.extend([(lo, mid), (mid, hi)]);
            }
        }
    }
    Err(Error::NoConvergence(format!("time integral of the current on [{}, {}]", a * a, b * b)))
}

/// One row of a current series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentPoint {
    pub t: f64,
    pub j: f64,
    /// `int_0^T j dT'`, the probability that has left the well.
    pub outflow: f64,
    pub err_est: f64,
}

/// Current at the barrier on a sorted grid, with the running outflow.
pub fn current_series(grid: &[f64], config: &ModelConfig, settings: &QuadSettings, tol: f64) -> Result<Vec<CurrentPoint>> {
    if grid.windows(2).any(|w| !(w[1] >= w[0])) || grid.first().is_some_and(|&t| !(t >= 0.0)) {
        return Err(Error::Domain("current grid must be sorted and non-negative".into()));
    }
    let per_interval = tol / grid.len().max(1) as f64;
    let pieces: Vec<(f64, f64)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let from = if i == 0 { 0.0 } else { grid[i - 1] };
            let sample = current_at_barrier(t, config, settings)?;
            Ok((sample.j, integrated_current(from, t, config, settings, per_interval)?))
        })
        .collect::<Result<_>>()?;
    let mut outflow = 0.0;
    Ok(grid
        .iter()
        .zip(pieces)
        .enumerate()
        .map(|(i, (&t, (j, piece)))| {
            outflow += piece;
            CurrentPoint { t, j, outflow, err_est: per_interval * (i + 1) as f64 }
        })
        .collect())
}

/// Quantity compared against the leading exponential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationQuantity {
    /// Probability current at the barrier.
    Current,
    /// In-well survival probability.
    Survival,
}

/// Amplitude of the exponential that a deviation series divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationReference {
    /// The exponential decay law started from `P(0) = 1`: `e^{-T/tau}` for
    /// survival and its rate of loss `e^{-T/tau} / tau` for the current.
    /// Values below 1 then mean the decay has run ahead of the exponential
    /// law, which is what repeated measurement at that interval exploits.
    Unit,
    /// Fitted so the ratio averages to 1 over [`REFERENCE_WINDOW`].
    FittedTail,
}

/// Window used by [`DeviationReference::FittedTail`].
pub const REFERENCE_WINDOW: (f64, f64) = (2.0, 4.0);

/// `X(T) / (X_ref e^{-T/tau})` for each `T` of the grid, with `X` the
/// current at the barrier or the in-well survival.
pub fn exp_deviation_series(
    grid: &[f64],
    config: &ModelConfig,
    tau: f64,
    quantity: DeviationQuantity,
    reference: DeviationReference,
) -> Result<Vec<(f64, f64)>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("lifetime must be > 0, got {tau}")));
    }
    if grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain("deviation grid must hold positive times".into()));
    }
    let settings = QuadSettings::default();
    let options = SurvivalOptions::default();
    let value = |t: f64| -> Result<f64> {
        match quantity {
            DeviationQuantity::Current => Ok(current_at_barrier(t, config, &settings)?.j),
            DeviationQuantity::Survival => Ok(survival_by(t, config, Definition::InWell, Method::Auto, &options)?.p),
        }
    };
    let log_ref = match (reference, quantity) {
        (DeviationReference::Unit, DeviationQuantity::Survival) => 0.0,
        (DeviationReference::Unit, DeviationQuantity::Current) => -tau.ln(),
        (DeviationReference::FittedTail, _) => {
            // least-squares intercept of ln X + T/tau with the slope held fixed
            let (lo, hi) = REFERENCE_WINDOW;
            let window: Vec<f64> = (0..=20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect();
            let logs: Vec<f64> = window.par_iter().map(|&t| Ok(value(t)?.ln() + t / tau)).collect::<Result<_>>()?;
            if logs.iter().any(|l| !l.is_finite()) {
                return Err(Error::Domain("reference window holds non-positive values".into()));
            }
            logs.iter().sum::<f64>() / logs.len() as f64
        }
    };
    grid.par_iter().map(|&t| Ok((t, value(t)? * (t / tau - log_ref).exp()))).collect()
}

/// Repeated projective measurements at a fixed interval up to a horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSchedule {
    pub interval: f64,
    pub horizon: f64,
}

impl MeasurementSchedule {
    pub fn new(interval: f64, horizon: f64) -> Result<Self> {
        if !(interval > 0.0 && interval.is_finite() && horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("bad schedule: interval {interval}, horizon {horizon}")));
        }
        let ratio = horizon / interval;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::Domain(format!("horizon {horizon} is not a multiple of interval {interval}")));
        }
        Ok(Self { interval, horizon })
    }

    pub fn measurements(&self) -> u32 {
        (self.horizon / self.interval).round() as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZenoEntry {
    pub schedule: MeasurementSchedule,
    /// Survival over one interval.
    pub single: SurvivalPoint,
    /// `single^measurements`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZenoReport {
    pub entries: Vec<ZenoEntry>,
    /// Indices into `entries`, largest survival first.
    pub chain: Vec<usize>,
}

impl ZenoReport {
    /// True when the chain is strictly decreasing.
    pub fn strict(&self) -> bool {
        self.chain.windows(2).all(|w| self.entries[w[0]].value > self.entries[w[1]].value)
    }
}

/// Survival after `horizon` when the well is measured after every interval,
/// each measurement restarting the same decay.
pub fn zeno_chain(config: &ModelConfig, schedules: &[MeasurementSchedule], horizon: f64) -> Result<ZenoReport> {
    if schedules.is_empty() {
        return Err(Error::Domain("no measurement schedules".into()));
    }
    if let Some(s) = schedules.iter().find(|s| (s.horizon - horizon).abs() > 1e-12 * horizon) {
        return Err(Error::Domain(format!("schedule horizon {} differs from {horizon}", s.horizon)));
    }
    let options = SurvivalOptions::default();
    let entries: Vec<ZenoEntry> = schedules
        .par_iter()
        .map(|&schedule| {
            let single = survival_by(schedule.interval, config, Definition::InWell, Method::Auto, &options)?;
            let value = single.p.powi(schedule.measurements() as i32);
            Ok(ZenoEntry { schedule, single, value })
        })
        .collect::<Result<_>>()?;
    let mut chain: Vec<usize> = (0..entries.len()).collect();
    chain.sort_by(|&a, &b| entries[b].value.total_cmp(&entries[a].value));
    Ok(ZenoReport { entries, chain })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiZenoCheck {
    /// `P(T_half)^2`: one measurement halfway.
    pub measured: f64,
    /// `P(T_full)`: no measurement.
    pub unmeasured: f64,
    pub ratio: f64,
}

pub fn anti_zeno_check(config: &ModelConfig, t_half: f64, t_full: f64) -> Result<AntiZenoCheck> {
    if !(t_half > 0.0) || (t_full - 2.0 * t_half).abs() > 1e-12 * t_full {
        return Err(Error::Domain(format!("need T_full = 2 T_half > 0, got {t_half} and {t_full}")));
    }
    let options = SurvivalOptions::default();
    let half = survival_by(t_half, config, Definition::InWell, Method::Auto, &options)?.p;
    let unmeasured = survival_by(t_full, config, Definition::InWell, Method::Auto, &options)?.p;
    let measured = half * half;
    Ok(AntiZenoCheck { measured, unmeasured, ratio: measured / unmeasured })
}

/// Least-squares exponential fit `ln P = c - rate T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub window: (f64, f64),
    /// RMS residual of `ln P`.
    pub residual: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 5;

/// Fit a decay rate to `(T, P)` samples.
pub fn fit_decay_series(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_FIT_SAMPLES, got: series.len() });
    }
    if series.iter().any(|&(_, p)| !(p > 0.0)) {
        return Err(Error::Domain("decay fit needs positive values".into()));
    }
    let m = series.len() as f64;
    let mean_t = series.iter().map(|s| s.0).sum::<f64>() / m;
    let mean_y = series.iter().map(|s| s.1.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, p) in series {
        sxy += (t - mean_t) * (p.ln() - mean_y);
        sxx += (t - mean_t) * (t - mean_t);
    }
    let slope = sxy / sxx;
    let residual = (series
        .iter()
        .map(|&(t, p)| (p.ln() - mean_y - slope * (t - mean_t)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let window = (series[0].0, series[series.len() - 1].0);
    if !(slope < 0.0) {
        return Err(Error::Domain(format!("samples do not decay (slope {slope})")));
    }
    Ok(DecayFit { rate: -slope, window, residual, samples: series.len() })
}

/// Decay rate of the in-well survival over `[lo, hi]`, sampled every `step`.
pub fn fit_decay_rate(config: &ModelConfig, lo: f64, hi: f64, step: f64) -> Result<DecayFit> {
    if !(lo >= 0.0 && hi > lo && step > 0.0) {
        return Err(Error::Domain(format!("bad fit window [{lo}, {hi}] with step {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_FIT_SAMPLES, got: count });
    }
    let grid: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    let auto = AutoSurvival::new(config, Definition::InWell, SurvivalOptions::default())?;
    let series: Vec<(f64, f64)> = auto.series(&grid)?.into_iter().map(|p| (p.t, p.p)).collect();
    fit_decay_series(&series)
}

/// Fit over `[lo, hi]` with forty intervals.
pub fn fit_decay_rate_default(config: &ModelConfig, lo: f64, hi: f64) -> Result<DecayFit> {
    fit_decay_rate(config, lo, hi, (hi - lo) / 40.0)
}

/// Monotone trend divided out before looking for maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Constant,
    /// `A e^{-rate T}`.
    Exponential { amplitude: f64, rate: f64 },
    /// `A T^{-power}`.
    PowerLaw { amplitude: f64, power: f64 },
    /// `A e^{-rate T} T^{-power}`, which covers a crossover between the two.
    Mixed { amplitude: f64, rate: f64, power: f64 },
}

/// Which envelope family [`extract_period_with`] fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    Constant,
    Exponential,
    PowerLaw,
    Mixed,
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::Exponential { amplitude, rate } => amplitude * (-rate * t).exp(),
            Envelope::PowerLaw { amplitude, power } => amplitude * t.powf(-power),
            Envelope::Mixed { amplitude, rate, power } => amplitude * (-rate * t).exp() * t.powf(-power),
        }
    }
}

// Least-squares coefficients of `y` on the given columns (normal equations).
fn least_squares<const K: usize>(columns: [&[f64]; K], y: &[f64]) -> [f64; K] {
    let mut a = [[0.0; K]; K];
    let mut rhs = [0.0; K];
    for i in 0..K {
        for j in 0..K {
            a[i][j] = columns[i].iter().zip(columns[j]).map(|(x, z)| x * z).sum();
        }
        rhs[i] = columns[i].iter().zip(y).map(|(x, z)| x * z).sum();
    }
    for i in 0..K {
        let pivot = (i..K).max_by(|&r, &s| a[r][i].abs().total_cmp(&a[s][i].abs())).unwrap_or(i);
        a.swap(i, pivot);
        rhs.swap(i, pivot);
        for r in i + 1..K {
            let f = a[r][i] / a[i][i];
            for c in i..K {
                a[r][c] -= f * a[i][c];
            }
            rhs[r] -= f * rhs[i];
        }
    }
    let mut x = [0.0; K];
    for i in (0..K).rev() {
        let tail: f64 = (i + 1..K).map(|c| a[i][c] * x[c]).sum();
        x[i] = (rhs[i] - tail) / a[i][i];
    }
    x
}

/// Fit an envelope family to a series in log space. Falls back to
/// [`Envelope::Constant`] when some value or time is not positive.
pub fn fit_envelope(series: &[(f64, f64)], kind: EnvelopeKind) -> Envelope {
    if kind == EnvelopeKind::Constant || series.len() < 4 || series.iter().any(|&(t, v)| !(v > 0.0) || !(t > 0.0)) {
        return Envelope::Constant;
    }
    let ones = vec![1.0; series.len()];
    let t: Vec<f64> = series.iter().map(|s| s.0).collect();
    let log_t: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let log_v: Vec<f64> = series.iter().map(|s| s.1.ln()).collect();
    match kind {
        EnvelopeKind::Exponential => {
            let [c, slope] = least_squares([&ones, &t], &log_v);
            Envelope::Exponential { amplitude: c.exp(), rate: -slope }
        }
        EnvelopeKind::PowerLaw => {
            let [c, slope] = least_squares([&ones, &log_t], &log_v);
            Envelope::PowerLaw { amplitude: c.exp(), power: -slope }
        }
        _ => {
            let [c, linear, log] = least_squares([&ones, &t, &log_t], &log_v);
            Envelope::Mixed { amplitude: c.exp(), rate: -linear, power: -log }
        }
    }
}

/// Period from the mean spacing of successive local maxima, after dividing
/// out a fitted [`EnvelopeKind::Mixed`] envelope (constant for series with
/// non-positive values).
pub fn extract_period(series: &[(f64, f64)]) -> Result<PeriodEstimate> {
    extract_period_with(series, EnvelopeKind::Mixed)
}

/// Maxima are refined by a parabola through three samples.
pub fn extract_period_with(series: &[(f64, f64)], kind: EnvelopeKind) -> Result<PeriodEstimate> {
    let envelope = fit_envelope(series, kind);
    let detrended: Vec<f64> = series.iter().map(|&(t, v)| v / envelope.at(t)).collect();
    let mut maxima = Vec::new();
    for i in 1..series.len().saturating_sub(1) {
        let (a, b, c) = (detrended[i - 1], detrended[i], detrended[i + 1]);
        if b > a && b >= c {
            let h = series[i + 1].0 - series[i].0;
            let curvature = a - 2.0 * b + c;
            let shift = if curvature != 0.0 { 0.5 * (a - c) / curvature } else { 0.0 };
            maxima.push(series[i].0 + shift.clamp(-1.0, 1.0) * h);
        }
    }
    if maxima.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: maxima.len() });
    }
    let period = (maxima[maxima.len() - 1] - maxima[0]) / (maxima.len() - 1) as f64;
    Ok(PeriodEstimate { period, maxima, envelope })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Refined positions of the local maxima used.
    pub maxima: Vec<f64>,
    pub envelope: Envelope,
}

/// Evenly spaced grid from `start` to `end` inclusive.
pub fn time_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && end.is_finite() && step > 0.0 && step.is_finite() && end >= start) {
        return Err(Error::Domain(format!("empty or invalid grid {start}:{end}:{step}")));
    }
    let count = ((end - start) / step * (1.0 + 1e-12) + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Lifetime of the longest-lived resonance.
pub fn leading_lifetime(config: &ModelConfig) -> Result<f64> {
    Ok(find_pole(config, 1)?.tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn dispatch_boundaries() {
        assert_eq!(auto_method(0.0), Method::Quadrature);
        assert_eq!(auto_method(2.0), Method::Quadrature);
        assert_eq!(auto_method(2.0001), Method::Poles);
        assert_eq!(auto_method(10.0), Method::Poles);
        assert_eq!(auto_method(10.5), Method::Hybrid);
    }

    #[test]
    fn schedules() {
        let s = MeasurementSchedule::new(0.1, 1.0).unwrap();
        assert_eq!(s.measurements(), 10);
        assert_eq!(MeasurementSchedule::new(0.5, 1.0).unwrap().measurements(), 2);
        assert!(MeasurementSchedule::new(0.3, 1.0).is_err());
        assert!(MeasurementSchedule::new(2.0, 1.0).is_err());
        assert!(MeasurementSchedule::new(0.0, 1.0).is_err());
        assert!(MeasurementSchedule::new(0.1, f64::NAN).is_err());
    }

    #[test]
    fn grids() {
        let g = time_grid(0.0, 2.0, 0.01).unwrap();
        assert_eq!(g.len(), 201);
        assert!((g[200] - 2.0).abs() < 1e-12);
        assert_eq!(time_grid(1.0, 1.0, 0.5).unwrap(), vec![1.0]);
        assert!(time_grid(0.0, 1.0, 0.0).is_err());
        assert!(time_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn synthetic_period() {
        let series: Vec<(f64, f64)> =
            time_grid(0.0, 5.0, 0.01).unwrap().into_iter().map(|t| (t, (2.0 * PI * t / 0.5).sin())).collect();
        let est = extract_period(&series).unwrap();
        assert!((est.period - 0.5).abs() < 1e-3, "{}", est.period);
        assert_eq!(est.envelope, Envelope::Constant);
    }

    #[test]
    fn period_under_decaying_envelopes() {
        let grid = time_grid(1.0, 9.0, 0.005).unwrap();
        let damped: Vec<(f64, f64)> =
            grid.iter().map(|&t| (t, (-0.7 * t).exp() * (1.0 + 0.05 * (2.0 * PI * t / 0.8).cos()))).collect();
        let est = extract_period_with(&damped, EnvelopeKind::Exponential).unwrap();
        assert!((est.period - 0.8).abs() < 2e-3, "{}", est.period);
        let power: Vec<(f64, f64)> =
            grid.iter().map(|&t| (t, t.powi(-3) * (1.0 + 0.05 * (2.0 * PI * t / 0.8).cos()))).collect();
        assert!((extract_period(&power).unwrap().period - 0.8).abs() < 2e-3);
    }

    #[test]
    fn too_few_maxima() {
        let series: Vec<(f64, f64)> = time_grid(0.0, 1.0, 0.01).unwrap().into_iter().map(|t| (t, (PI * t).sin())).collect();
        assert!(matches!(extract_period(&series), Err(Error::TooFewSamples { needed: 3, got: 1 })));
    }

    #[test]
    fn envelope_recovers_exponential() {
        let series: Vec<(f64, f64)> = (1..=20).map(|i| i as f64 * 0.1).map(|t| (t, 3.0 * (-1.5 * t).exp())).collect();
        match fit_envelope(&series, EnvelopeKind::Exponential) {
            Envelope::Exponential { amplitude, rate } => {
                assert!((amplitude - 3.0).abs() < 1e-10);
                assert!((rate - 1.5).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
        match fit_envelope(&series, EnvelopeKind::Mixed) {
            Envelope::Mixed { rate, power, .. } => {
                assert!((rate - 1.5).abs() < 1e-8);
                assert!(power.abs() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decay_series_fit() {
        let series: Vec<(f64, f64)> = (0..10).map(|i| 2.0 + i as f64).map(|t| (t, 0.9 * (-t / 0.646).exp())).collect();
        let fit = fit_decay_series(&series).unwrap();
        assert!((fit.rate - 1.0 / 0.646).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.window, (2.0, 11.0));
        assert!(matches!(fit_decay_series(&series[..4]), Err(Error::TooFewSamples { needed: 5, got: 4 })));
        let growing: Vec<(f64, f64)> = series.iter().map(|&(t, _)| (t, t)).collect();
        assert!(fit_decay_series(&growing).is_err());
    }

    #[test]
    fn short_fit_window_rejected() {
        let c = ModelConfig::new(6.0, 1).unwrap();
        assert!(matches!(fit_decay_rate(&c, 2.0, 2.3, 0.1), Err(Error::TooFewSamples { .. })));
        assert!(fit_decay_rate(&c, 3.0, 2.0, 0.1).is_err());
    }

    #[test]
    fn zeno_argument_checks() {
        let c = ModelConfig::new(6.0, 1).unwrap();
        let s = MeasurementSchedule::new(0.5, 1.0).unwrap();
        assert!(zeno_chain(&c, &[s], 2.0).is_err());
        assert!(zeno_chain(&c, &[], 1.0).is_err());
        assert!(anti_zeno_check(&c, 15.0, 31.0).is_err());
        assert!(anti_zeno_check(&c, 0.0, 0.0).is_err());
    }

    #[test]
    fn deviation_argument_checks() {
        let c = ModelConfig::new(6.0, 1).unwrap();
        let q = DeviationQuantity::Survival;
        assert!(exp_deviation_series(&[0.5], &c, 0.0, q, DeviationReference::Unit).is_err());
        assert!(exp_deviation_series(&[0.0], &c, 0.646, q, DeviationReference::Unit).is_err());
    }

    proptest! {
        #[test]
        fn synthetic_period_recovered(period in 0.2f64..1.0, phase in 0.0f64..6.0) {
            let series: Vec<(f64, f64)> = time_grid(0.0, 8.0, 0.004)
                .unwrap()
                .into_iter()
                .map(|t| (t, (2.0 * PI * t / period + phase).cos()))
                .collect();
            let est = extract_period(&series).unwrap();
            prop_assert!((est.period - period).abs() < 1e-3 * period.max(0.5));
        }
    }
}
