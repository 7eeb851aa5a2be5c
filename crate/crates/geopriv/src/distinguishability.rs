//! Distinguishability functions `ell(d)`: the log-ratio budget allowed
//! between output probabilities of two inputs a distance `d` apart.
//!
//! Two named families are built in. `Linear(epsilon)` grows the budget
//! proportionally with distance. `DRestricted(epsilon, d_max)` grants a
//! flat budget within a proximity `d_max` and removes the constraint
//! entirely beyond it. Arbitrary budgets load from two-column CSV as
//! `Tabulated`.
//!
//! The structural predicates ([`DistinguishabilityFn::is_regular`],
//! [`DistinguishabilityFn::satisfies_superadditivity_at`]) quantify over
//! uncountable sets in their mathematical form; here they are *sampled*
//! checks over documented deterministic probe sets, not proofs. For the
//! built-in families the closed-form arguments are short:
//!
//! * `Linear`: `eps*|v1-v3| <= eps*|v1-v2| + eps*|v2-v3|` is the triangle
//!   inequality scaled by `eps`, so regularity holds for every probe; and
//!   `eps*(d0+d) = eps*d0 + eps*d` gives super-additivity with equality.
//! * `DRestricted`: super-additivity at `d0 = d_max` holds because the
//!   left side is infinite for every `d > 0`. Regularity can genuinely
//!   fail on triples with both legs within `d_max` but endpoints beyond
//!   it; whether a sampled check observes this depends on the probe set.

use std::cmp::Ordering;
use std::fmt;
use std::io::BufRead;
use std::ops::Add;

use crate::csvio;
use crate::error::{Error, Result};

/// Non-negative extended real: a finite level or the absorbing infinity
/// that encodes "no constraint at all".
///
/// Infinity is a dedicated variant rather than a large float so that
/// consumers can treat unconstrained pairs exactly (skip the constraint)
/// instead of approximately (loose bound).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Finite(f64),
    Infinite,
}

impl Level {
    pub fn finite(self) -> Option<f64> {
        match self {
            Level::Finite(x) => Some(x),
            Level::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Level::Infinite)
    }

    /// e^level as a float; `Infinite` maps to `f64::INFINITY`.
    pub fn exp(self) -> f64 {
        match self {
            Level::Finite(x) => x.exp(),
            Level::Infinite => f64::INFINITY,
        }
    }
}

impl Add for Level {
    type Output = Level;
    fn add(self, rhs: Level) -> Level {
        match (self, rhs) {
            (Level::Finite(a), Level::Finite(b)) => Level::Finite(a + b),
            _ => Level::Infinite,
        }
    }
}

impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Level) -> Option<Ordering> {
        match (self, other) {
            (Level::Finite(a), Level::Finite(b)) => a.partial_cmp(b),
            (Level::Finite(_), Level::Infinite) => Some(Ordering::Less),
            (Level::Infinite, Level::Finite(_)) => Some(Ordering::Greater),
            (Level::Infinite, Level::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(x) => write!(f, "{x}"),
            Level::Infinite => write!(f, "inf"),
        }
    }
}

/// Absolute tolerance used by the sampled predicates.
pub const PREDICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum DistinguishabilityFn {
    /// `ell(d) = epsilon * d` (epsilon in 1/km).
    Linear { epsilon: f64 },
    /// `ell(d) = epsilon` for `d <= d_max`, infinite beyond.
    DRestricted { epsilon: f64, d_max: f64 },
    /// Piecewise-linear between samples `(distance_km, level)`;
    /// constant extrapolation with the first level below the first
    /// sample and with the last level beyond the last sample.
    Tabulated { samples: Vec<(f64, f64)> },
}

pub use DistinguishabilityFn as Ell;

impl DistinguishabilityFn {
    pub fn linear(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(DistinguishabilityFn::Linear { epsilon })
    }

    pub fn d_restricted(epsilon: f64, d_max: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(d_max > 0.0) || !d_max.is_finite() {
            return Err(Error::domain(format!("d_max must be positive, got {d_max}")));
        }
        Ok(DistinguishabilityFn::DRestricted { epsilon, d_max })
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("tabulated distinguishability needs at least one sample"));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::domain(format!(
                    "tabulated distances must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(d, l) in &samples {
            if d < 0.0 || l < 0.0 || !d.is_finite() || !l.is_finite() {
                return Err(Error::domain(format!("negative or non-finite sample ({d}, {l})")));
            }
        }
        Ok(DistinguishabilityFn::Tabulated { samples })
    }

    /// Load a `Tabulated` function from two-column CSV
    /// (`distance_km,level`, header required).
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let rows = csvio::read_two_columns(reader, "distance_km", "level")?;
        Self::tabulated(rows)
    }

    /// Evaluate `ell(d)`.
    pub fn eval(&self, d: f64) -> Result<Level> {
        if !(d >= 0.0) {
            return Err(Error::domain(format!("distance must be non-negative, got {d}")));
        }
        Ok(match self {
            DistinguishabilityFn::Linear { epsilon } => Level::Finite(epsilon * d),
            DistinguishabilityFn::DRestricted { epsilon, d_max } => {
                if d <= *d_max {
                    Level::Finite(*epsilon)
                } else {
                    Level::Infinite
                }
            }
            DistinguishabilityFn::Tabulated { samples } => Level::Finite(interp(samples, d)),
        })
    }

    /// Whether `eval` is non-decreasing in `d` (closed form for the named
    /// families, sample scan for `Tabulated`).
    pub fn is_monotone(&self) -> bool {
        match self {
            DistinguishabilityFn::Linear { .. } | DistinguishabilityFn::DRestricted { .. } => true,
            DistinguishabilityFn::Tabulated { samples } => {
                samples.windows(2).all(|w| w[1].1 >= w[0].1)
            }
        }
    }

    /// Sampled regularity check: `ell(|v1-v3|) <= ell(|v1-v2|) + ell(|v2-v3|)`
    /// over every probed triple, within [`PREDICATE_TOL`]. Returns the first
    /// violating triple otherwise.
    pub fn is_regular(&self, probe: &ProbeConfig) -> Result<RegularityOutcome> {
        if probe.triples.is_empty() {
            return Err(Error::config("empty probe set"));
        }
        for &[v1, v2, v3] in &probe.triples {
            let lhs = self.eval(dist(v1, v3))?;
            let rhs = self.eval(dist(v1, v2))? + self.eval(dist(v2, v3))?;
            if violates_le(lhs, rhs, PREDICATE_TOL) {
                return Ok(RegularityOutcome {
                    holds: false,
                    counterexample: Some(Triple { v1, v2, v3, lhs, rhs }),
                });
            }
        }
        Ok(RegularityOutcome { holds: true, counterexample: None })
    }

    /// Sampled super-additivity check at a pivot distance `d0`:
    /// `ell(d0 + d) >= ell(d0) + ell(d)` for every probed `d > 0`.
    pub fn satisfies_superadditivity_at(
        &self,
        d0: f64,
        probe: &SuperadditivityProbe,
    ) -> Result<SuperadditivityOutcome> {
        if !(d0 > 0.0) {
            return Err(Error::domain(format!("pivot distance must be positive, got {d0}")));
        }
        if probe.distances.is_empty() {
            return Err(Error::config("empty probe set"));
        }
        let at_d0 = self.eval(d0)?;
        for &d in &probe.distances {
            if !(d > 0.0) {
                continue;
            }
            let lhs = self.eval(d0 + d)?;
            let rhs = at_d0 + self.eval(d)?;
            // lhs >= rhs - tol  <=>  not (rhs > lhs + tol)
            if violates_le(rhs, lhs, PREDICATE_TOL) {
                return Ok(SuperadditivityOutcome {
                    holds: false,
                    counterexample: Some((d, lhs, rhs)),
                });
            }
        }
        Ok(SuperadditivityOutcome { holds: true, counterexample: None })
    }

    /// Tightest budget between two noise magnitudes on the full plane:
    /// `ell(|r - r_prime|)` for monotone `ell`.
    pub fn minimal_distinguishability(&self, r: f64, r_prime: f64) -> Result<Level> {
        if !self.is_monotone() {
            return Err(Error::Unsupported(
                "minimal distinguishability requires a monotone function; \
                 minimization over vector pairs for non-monotone tables is not provided"
                    .into(),
            ));
        }
        self.eval((r - r_prime).abs())
    }
}

/// `lhs <= rhs + tol` violated, with infinity absorbing.
fn violates_le(lhs: Level, rhs: Level, tol: f64) -> bool {
    match (lhs, rhs) {
        (_, Level::Infinite) => false,
        (Level::Infinite, Level::Finite(_)) => true,
        (Level::Finite(a), Level::Finite(b)) => a > b + tol,
    }
}

fn interp(samples: &[(f64, f64)], d: f64) -> f64 {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if d <= first.0 {
        return first.1;
    }
    if d >= last.0 {
        return last.1;
    }
    let idx = samples.partition_point(|&(x, _)| x < d);
    let (x0, y0) = samples[idx - 1];
    let (x1, y1) = samples[idx];
    y0 + (y1 - y0) * (d - x0) / (x1 - x0)
}

pub type Vec2 = [f64; 2];

fn dist(a: Vec2, b: Vec2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Deterministic probe set of planar vector triples for [`DistinguishabilityFn::is_regular`].
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub triples: Vec<[Vec2; 3]>,
}

impl ProbeConfig {
    /// Low-discrepancy triples inside `[0, box_km]^2`, generated by the
    /// 6-dimensional Kronecker sequence with the generalized golden
    /// ratio; no RNG involved, so repeated runs probe identical triples.
    pub fn low_discrepancy(count: usize, box_km: f64) -> Self {
        // Unique positive root of x^7 = x + 1.
        let phi = {
            let mut x = 1.1_f64;
            for _ in 0..64 {
                x = (x + 1.0).powf(1.0 / 7.0);
            }
            x
        };
        let mut alpha = [0.0_f64; 6];
        for (k, a) in alpha.iter_mut().enumerate() {
            *a = (1.0 / phi.powi(k as i32 + 1)).fract();
        }
        let mut triples = Vec::with_capacity(count);
        let mut u = [0.5_f64; 6];
        for _ in 0..count {
            for k in 0..6 {
                u[k] = (u[k] + alpha[k]).fract();
            }
            triples.push([
                [u[0] * box_km, u[1] * box_km],
                [u[2] * box_km, u[3] * box_km],
                [u[4] * box_km, u[5] * box_km],
            ]);
        }
        ProbeConfig { triples }
    }
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig::low_discrepancy(10_000, 100.0)
    }
}

/// Probe distances for [`DistinguishabilityFn::satisfies_superadditivity_at`].
#[derive(Debug, Clone)]
pub struct SuperadditivityProbe {
    pub distances: Vec<f64>,
}

impl SuperadditivityProbe {
    pub fn log_spaced(count: usize, min_km: f64, max_km: f64) -> Self {
        let (lo, hi) = (min_km.ln(), max_km.ln());
        let distances = (0..count)
            .map(|i| (lo + (hi - lo) * (i as f64 + 1.0) / count as f64).exp())
            .collect();
        SuperadditivityProbe { distances }
    }
}

impl Default for SuperadditivityProbe {
    fn default() -> Self {
        SuperadditivityProbe::log_spaced(10_000, 1e-6, 1e3)
    }
}

#[derive(Debug, Clone)]
pub struct Triple {
    pub v1: Vec2,
    pub v2: Vec2,
    pub v3: Vec2,
    pub lhs: Level,
    pub rhs: Level,
}

#[derive(Debug, Clone)]
pub struct RegularityOutcome {
    pub holds: bool,
    pub counterexample: Option<Triple>,
}

#[derive(Debug, Clone)]
pub struct SuperadditivityOutcome {
    pub holds: bool,
    /// `(d, ell(d0+d), ell(d0)+ell(d))` for the first violating distance.
    pub counterexample: Option<(f64, Level, Level)>,
}
