//! Dimensionless problem definition shared by every other module.
//!
//! Units: the well width `a`, twice the mass `2m` and `hbar` are all set to
//! one. Position is `ell = x/a` with the hard wall at `ell = -1` and the delta
//! barrier at `ell = 0`, momentum is `q = k a`, time is `T = t / (2 m a^2)`,
//! and the barrier strength is `G = 2 m a U`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Barrier strength and initial mode of the well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    g: f64,
    n: u32,
}

impl ModelConfig {
    /// A decaying configuration: `g > 0` finite, `n >= 1`.
    pub fn new(g: f64, n: u32) -> Result<Self> {
        make_config(g, i64::from(n), false)
    }

    /// The `G = 0` configuration (no barrier). Only meaningful for sanity
    /// checks: there are no resonance poles.
    pub fn free(n: u32) -> Result<Self> {
        make_config(0.0, i64::from(n), true)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn n_pi(&self) -> f64 {
        f64::from(self.n) * PI
    }

    /// `(-1)^n`.
    pub fn parity(&self) -> f64 {
        if self.n % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_free(&self) -> bool {
        self.g == 0.0
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G={} n={}", self.g, self.n)
    }
}

/// Validating constructor. `G = 0` is accepted only when `allow_free` is set.
pub fn make_config(g: f64, n: i64, allow_free: bool) -> Result<ModelConfig> {
    if !g.is_finite() {
        return Err(Error::InvalidConfig(format!("barrier strength must be finite, got {g}")));
    }
    if g < 0.0 {
        return Err(Error::InvalidConfig(format!("negative barrier strength G={g}")));
    }
    if g == 0.0 && !allow_free {
        return Err(Error::InvalidConfig(
            "G = 0 has no resonances; construct it with the free-limit flag".into(),
        ));
    }
    if n < 1 || n > i64::from(u32::MAX) {
        return Err(Error::InvalidConfig(format!("mode index must be a positive integer, got {n}")));
    }
    Ok(ModelConfig { g, n: n as u32 })
}

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Quadrature,
    Poles,
    Hybrid,
    Asymptotic,
    Auto,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::Poles => "poles",
            Method::Hybrid => "hybrid",
            Method::Asymptotic => "asymptotic",
            Method::Auto => "auto",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(Method::Quadrature),
            "poles" => Ok(Method::Poles),
            "hybrid" => Ok(Method::Hybrid),
            "asymptotic" => Ok(Method::Asymptotic),
            "auto" => Ok(Method::Auto),
            other => Err(Error::Domain(format!("unknown method '{other}'"))),
        }
    }
}

/// Which survival probability is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Definition {
    /// Probability of finding the particle anywhere in the well.
    InWell,
    /// Squared overlap with the initial state.
    Overlap,
}

impl Definition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Definition::InWell => "in_well",
            Definition::Overlap => "overlap",
        }
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Definition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in_well" | "in-well" => Ok(Definition::InWell),
            "overlap" => Ok(Definition::Overlap),
            other => Err(Error::Domain(format!("unknown survival definition '{other}'"))),
        }
    }
}

/// One value of a survival curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalPoint {
    pub t: f64,
    pub p: f64,
    pub definition: Definition,
    pub method: Method,
    pub err_est: f64,
    /// Non-fatal diagnostics, e.g. disagreement between methods at a seam.
    pub warnings: Vec<String>,
}

impl SurvivalPoint {
    pub fn new(t: f64, p: f64, definition: Definition, method: Method, err_est: f64) -> Self {
        Self { t, p, definition, method, err_est, warnings: Vec::new() }
    }
}

/// Lifetimes and energies of the resonances, longest-lived first.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayConstants {
    pub taus: Vec<f64>,
    pub energies: Vec<f64>,
    /// Exponential-regime rate `1 / tau_1`.
    pub lambda: f64,
}

/// Mass and well width of a physical realisation (`hbar = 1`), used to move
/// between physical `(U, t)` and dimensionless `(G, T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalUnits {
    pub mass: f64,
    pub width: f64,
}

impl PhysicalUnits {
    pub fn new(mass: f64, width: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite() && width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mass and width must be positive, got m={mass} a={width}"
            )));
        }
        Ok(Self { mass, width })
    }

    /// `(U, t) -> (G, T)`.
    pub fn to_dimensionless(&self, strength: f64, time: f64) -> (f64, f64) {
        let two_ma = 2.0 * self.mass * self.width;
        (two_ma * strength, time / (two_ma * self.width))
    }

    /// `(G, T) -> (U, t)`.
    pub fn to_physical(&self, g: f64, t: f64) -> (f64, f64) {
        let two_ma = 2.0 * self.mass * self.width;
        (g / two_ma, t * two_ma * self.width)
    }
}
