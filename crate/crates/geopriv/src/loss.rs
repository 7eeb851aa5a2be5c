//! Loss functions over noise magnitudes: the service-quality penalty for
//! reporting a point `r` kilometers away from the truth.

use std::io::BufRead;

use crate::csvio;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LossFn {
    /// `L(r) = r`.
    Linear,
    /// 0 below the threshold, 1 at and above it.
    Step { threshold: f64 },
    /// Piecewise-linear between samples `(r_km, loss)`; constant
    /// extrapolation with the boundary levels outside the sampled range.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl LossFn {
    pub fn step(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) || !threshold.is_finite() {
            return Err(Error::domain(format!("step threshold must be >= 0, got {threshold}")));
        }
        Ok(LossFn::Step { threshold })
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("tabulated loss needs at least one sample"));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::domain(format!(
                    "tabulated radii must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if samples.iter().any(|&(r, l)| r < 0.0 || l < 0.0 || !l.is_finite()) {
            return Err(Error::domain("loss samples must be non-negative and finite"));
        }
        Ok(LossFn::Tabulated { samples })
    }

    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        Self::tabulated(csvio::read_two_columns(reader, "r_km", "loss")?)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            LossFn::Linear => r,
            LossFn::Step { threshold } => {
                if r >= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            LossFn::Tabulated { samples } => {
                let first = samples[0];
                let last = samples[samples.len() - 1];
                if r <= first.0 {
                    first.1
                } else if r >= last.0 {
                    last.1
                } else {
                    let idx = samples.partition_point(|&(x, _)| x < r);
                    let (x0, y0) = samples[idx - 1];
                    let (x1, y1) = samples[idx];
                    y0 + (y1 - y0) * (r - x0) / (x1 - x0)
                }
            }
        }
    }

    pub fn is_non_decreasing(&self) -> bool {
        match self {
            LossFn::Linear | LossFn::Step { .. } => true,
            LossFn::Tabulated { samples } => samples.windows(2).all(|w| w[1].1 >= w[0].1),
        }
    }

    /// Radii where the function is not smooth; quadrature splits panels here.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self {
            LossFn::Linear => vec![],
            LossFn::Step { threshold } => vec![*threshold],
            LossFn::Tabulated { samples } => samples.iter().map(|&(r, _)| r).collect(),
        }
    }

    /// Loss at arbitrarily large radii, if it settles to a constant
    /// (`Step` and `Tabulated` do; `Linear` grows without bound).
    pub(crate) fn tail_constant(&self) -> Option<f64> {
        match self {
            LossFn::Linear => None,
            LossFn::Step { .. } => Some(1.0),
            LossFn::Tabulated { samples } => Some(samples[samples.len() - 1].1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_eval() {
        let l = LossFn::step(2.0).unwrap();
        assert_eq!(l.eval(1.999), 0.0);
        assert_eq!(l.eval(2.0), 1.0);
        assert_eq!(l.eval(5.0), 1.0);
    }

    #[test]
    fn tabulated_interpolates_and_extrapolates() {
        let l = LossFn::tabulated(vec![(1.0, 0.5), (3.0, 1.5)]).unwrap();
        assert_eq!(l.eval(0.0), 0.5);
        assert_eq!(l.eval(2.0), 1.0);
        assert_eq!(l.eval(10.0), 1.5);
    }

    #[test]
    fn rejects_decreasing_radii() {
        assert!(LossFn::tabulated(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
    }
}
