//! Check-in ingestion and per-user visit priors over grid cells.
//!
//! The expected record layout is the five-column check-in export used by
//! location sharing services: `user_id, timestamp, latitude, longitude,
//! location_id`, tab- or comma-separated (detected from the first line,
//! tab preferred). Timestamps and location ids are carried but unused;
//! prior weights are plain per-cell visit counts normalized by the
//! user's in-region total, counting duplicates each time they occur.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GeoGrid;
use crate::loss::LossFn;
use crate::mechanism::{DiscreteMechanism, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckIn {
    pub user_id: u64,
    pub timestamp: String,
    pub lat: f64,
    pub lon: f64,
    pub location_id: i64,
}

/// Per-line ingestion problems; malformed rows are reported, not fatal.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ParseReport {
    pub total_lines: usize,
    pub parsed: usize,
    /// `(line_number, reason)` for every skipped row.
    pub malformed: Vec<(usize, String)>,
}

/// Parse a check-in stream. Errors only when nothing at all parses.
pub fn parse_checkins<R: BufRead>(reader: R) -> Result<(Vec<CheckIn>, ParseReport)> {
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    let mut delimiter: Option<char> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        let delim = *delimiter.get_or_insert_with(|| if line.contains('\t') { '\t' } else { ',' });
        match parse_line(&line, delim) {
            Ok(ci) => {
                out.push(ci);
                report.parsed += 1;
            }
            Err(reason) => report.malformed.push((line_no, reason)),
        }
    }
    if out.is_empty() {
        return Err(Error::Ingestion(format!(
            "no parseable check-ins ({} malformed rows)",
            report.malformed.len()
        )));
    }
    Ok((out, report))
}

fn parse_line(line: &str, delim: char) -> std::result::Result<CheckIn, String> {
    let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 fields, got {}", fields.len()));
    }
    let user_id: u64 = fields[0].parse().map_err(|_| format!("bad user id '{}'", fields[0]))?;
    let lat: f64 = fields[2].parse().map_err(|_| format!("bad latitude '{}'", fields[2]))?;
    let lon: f64 = fields[3].parse().map_err(|_| format!("bad longitude '{}'", fields[3]))?;
    let location_id: i64 =
        fields[4].parse().map_err(|_| format!("bad location id '{}'", fields[4]))?;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(format!("latitude {lat} outside [-90, 90]"));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(format!("longitude {lon} outside [-180, 180]"));
    }
    Ok(CheckIn {
        user_id,
        timestamp: fields[1].to_string(),
        lat,
        lon,
        location_id,
    })
}

/// A probability distribution over the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    weights: Vec<f64>,
    /// Indices of strictly positive weights, ascending.
    support: Vec<usize>,
}

pub const PRIOR_SUM_TOL: f64 = 1e-12;

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("prior needs at least one cell"));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::domain("prior weights must be non-negative and finite"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::domain(format!(
                "prior weights sum to {sum}, not 1 within {PRIOR_SUM_TOL}"
            )));
        }
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Prior { weights, support })
    }

    /// Normalize arbitrary non-negative mass into a prior.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain("cannot normalize zero total mass"));
        }
        let mut weights: Vec<f64> = counts.iter().map(|&c| c / total).collect();
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            for w in &mut weights {
                *w /= sum;
            }
        }
        Prior::new(weights)
    }

    pub fn uniform(n: usize) -> Self {
        Prior::new(vec![1.0 / n as f64; n]).expect("uniform weights are valid")
    }

    pub fn point_mass(n: usize, cell: usize) -> Result<Self> {
        if cell >= n {
            return Err(Error::config(format!("cell {cell} outside 0..{n}")));
        }
        let mut weights = vec![0.0; n];
        weights[cell] = 1.0;
        Prior::new(weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weight(&self, cell: usize) -> f64 {
        self.weights[cell]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Cells with strictly positive weight.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Write as `cell_index,weight` CSV (all cells, including zeros).
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cell_index,weight")?;
        for (i, weight) in self.weights.iter().enumerate() {
            writeln!(w, "{i},{weight}")?;
        }
        Ok(())
    }

    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let rows = crate::csvio::read_two_columns(reader, "cell_index", "weight")?;
        let mut weights = vec![0.0; rows.len()];
        for (i, &(idx, w)) in rows.iter().enumerate() {
            if idx as usize != i {
                return Err(Error::Parse(format!("expected cell index {i}, got {idx}")));
            }
            weights[i] = w;
        }
        Prior::new(weights)
    }
}

/// Ingestion statistics for one user's prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PriorStats {
    /// Check-ins carried by the stream for this user.
    pub total: usize,
    /// Check-ins inside the region (the prior's denominator).
    pub in_region: usize,
    /// Out-of-region check-ins dropped.
    pub dropped: usize,
}

/// Build a user's prior by counting check-ins per enclosing cell,
/// normalized by the user's in-region total. Out-of-region check-ins are
/// dropped and counted in the stats.
pub fn build_prior(
    checkins: &[CheckIn],
    grid: &GeoGrid,
    user_id: u64,
) -> Result<(Prior, PriorStats)> {
    let mut counts = vec![0.0_f64; grid.len()];
    let mut stats = PriorStats { total: 0, in_region: 0, dropped: 0 };
    for ci in checkins.iter().filter(|ci| ci.user_id == user_id) {
        stats.total += 1;
        match grid.region().project(ci.lat, ci.lon) {
            Ok(point) => {
                counts[grid.nearest_cell(point)] += 1.0;
                stats.in_region += 1;
            }
            Err(_) => stats.dropped += 1,
        }
    }
    if stats.in_region == 0 {
        return Err(Error::Ingestion(format!(
            "user {user_id} has no in-region check-ins ({} total)",
            stats.total
        )));
    }
    Ok((Prior::from_counts(&counts)?, stats))
}

/// Expected loss of a cell mechanism under a prior:
/// `sum_x pi(x) sum_z k(x, z) loss_matrix(x, z)`.
pub fn expected_loss_discrete(
    mech: &DiscreteMechanism,
    prior: &Prior,
    loss_matrix: &Matrix,
) -> Result<f64> {
    if prior.len() != mech.num_inputs()
        || loss_matrix.nrows() != mech.num_inputs()
        || loss_matrix.ncols() != mech.num_outputs()
    {
        return Err(Error::Dimension(format!(
            "mechanism {}x{}, prior {}, loss {}x{}",
            mech.num_inputs(),
            mech.num_outputs(),
            prior.len(),
            loss_matrix.nrows(),
            loss_matrix.ncols()
        )));
    }
    let mut total = 0.0;
    for &x in prior.support() {
        let pw = prior.weight(x);
        let row = mech.row(x);
        let mut inner = 0.0;
        for (z, &k) in row.iter().enumerate() {
            inner += k * loss_matrix.get(x, z);
        }
        total += pw * inner;
    }
    Ok(total)
}

/// Apply a loss function entrywise to a distance matrix.
pub fn loss_matrix(distances: &Matrix, loss: &LossFn) -> Matrix {
    distances.map(|d| loss.eval(d))
}
