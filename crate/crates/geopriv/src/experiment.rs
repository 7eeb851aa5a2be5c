//! Sweep drivers comparing the additive Laplace mechanism against the
//! LP-built cell mechanisms, and the two remapping post-processors.
//!
//! Reported losses separate two quantities deliberately. The LP's
//! objective prices distance between cell *centers*, so at weak privacy
//! it tends to zero. A user, though, stands at a uniform point of their
//! cell, not at its center; `lp_loss_km` therefore re-prices the solved
//! mechanism against the within-cell mean distance to each output
//! center, which floors at the mean distance to the own-cell center
//! once the mechanism stops obfuscating. Both columns are emitted.
//!
//! Everything here is deterministic for a fixed config: epsilon points
//! and users are computed in independent slots (parallel or not) and
//! assembled in order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::distinguishability::DistinguishabilityFn;
use crate::error::{Error, Result};
use crate::grid::{GeoGrid, GridSpec};
use crate::laplace::PlanarLaplace;
use crate::loss::LossFn;
use crate::lp::{self, DiscretizationMethod};
use crate::mechanism::Matrix;
use crate::par::{self, Execution};
use crate::prior::{self, Prior};
use crate::remap;
use crate::rng::RngState;

/// Inclusive epsilon sweep `start, start+step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EpsilonRange {
    /// The paper-scale default: 0.2 to 3.0 in steps of 0.1.
    pub fn paper_default() -> Self {
        EpsilonRange { start: 0.2, stop: 3.0, step: 0.1 }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.start <= self.stop) || !(self.step > 0.0) {
            return Err(Error::config(format!(
                "bad epsilon range: start {} stop {} step {}",
                self.start, self.stop, self.step
            )));
        }
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let eps = self.start + self.step * i as f64;
            if eps > self.stop + 1e-9 {
                break;
            }
            out.push((eps * 1e6).round() / 1e6);
            i += 1;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSource {
    /// Five-column check-in file plus the users whose priors to build.
    Checkins { path: PathBuf, users: Vec<u64> },
    Synthetic { style: SyntheticPrior },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "snake_case")]
pub enum SyntheticPrior {
    Uniform,
    PointMass { cell: usize },
    /// Two Gaussian bumps at the 1/4 and 3/4 diagonal points, weighted
    /// 0.6 / 0.4; nonuniform enough to separate the remapping rules.
    TwoCluster,
}

impl SyntheticPrior {
    pub fn build(&self, grid: &GeoGrid) -> Result<Prior> {
        match self {
            SyntheticPrior::Uniform => Ok(Prior::uniform(grid.len())),
            SyntheticPrior::PointMass { cell } => Prior::point_mass(grid.len(), *cell),
            SyntheticPrior::TwoCluster => {
                let (w, h) = grid.cell_size();
                let sigma = 1.5 * 0.5 * (w + h);
                let (cols, rows) = (grid.cols() as f64, grid.rows() as f64);
                let c1 = crate::grid::Point { x: 0.25 * cols * w, y: 0.25 * rows * h };
                let c2 = crate::grid::Point { x: 0.75 * cols * w, y: 0.75 * rows * h };
                let weights: Vec<f64> = grid
                    .centers()
                    .iter()
                    .map(|&c| {
                        let g1 = (-c.dist(c1).powi(2) / (2.0 * sigma * sigma)).exp();
                        let g2 = (-c.dist(c2).powi(2) / (2.0 * sigma * sigma)).exp();
                        0.6 * g1 + 0.4 * g2
                    })
                    .collect();
                Prior::from_counts(&weights)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub epsilon: EpsilonRange,
    pub prior: PriorSource,
    /// `"linear"`, `"step:<threshold_km>"`, or `"csv:<path>"`.
    pub loss: String,
    pub seed: u64,
    /// Samples for the Monte Carlo confirmation column.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

fn default_mc_samples() -> usize {
    100_000
}

pub fn parse_loss_spec(spec: &str) -> Result<LossFn> {
    if spec == "linear" {
        return Ok(LossFn::Linear);
    }
    if let Some(th) = spec.strip_prefix("step:") {
        let th: f64 = th
            .parse()
            .map_err(|_| Error::config(format!("bad step threshold '{th}'")))?;
        return LossFn::step(th);
    }
    if let Some(path) = spec.strip_prefix("csv:") {
        let file = std::fs::File::open(path)?;
        return LossFn::from_csv(std::io::BufReader::new(file));
    }
    Err(Error::config(format!(
        "unknown loss spec '{spec}' (expected 'linear', 'step:<km>', or 'csv:<path>')"
    )))
}

impl ExperimentConfig {
    pub fn loss_fn(&self) -> Result<LossFn> {
        parse_loss_spec(&self.loss)
    }

    /// Build the per-user priors named by the prior source.
    pub fn build_priors(&self, grid: &GeoGrid) -> Result<Vec<(String, Prior)>> {
        match &self.prior {
            PriorSource::Synthetic { style } => {
                let label = match style {
                    SyntheticPrior::Uniform => "uniform".to_string(),
                    SyntheticPrior::PointMass { cell } => format!("point{cell}"),
                    SyntheticPrior::TwoCluster => "two_cluster".to_string(),
                };
                Ok(vec![(label, style.build(grid)?)])
            }
            PriorSource::Checkins { path, users } => {
                let file = std::fs::File::open(path)?;
                let (checkins, _report) =
                    prior::parse_checkins(std::io::BufReader::new(file))?;
                if users.is_empty() {
                    return Err(Error::config("no users requested from check-in file"));
                }
                users
                    .iter()
                    .map(|&u| {
                        let (p, _stats) = prior::build_prior(&checkins, grid, u)?;
                        Ok((u.to_string(), p))
                    })
                    .collect()
            }
        }
    }
}

/// One sweep row; losses in km. `flagged` carries the failure note for
/// epsilon points whose LP solve failed (the sweep continues).
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub user: String,
    pub laplace_loss_km: f64,
    pub laplace_mc_km: f64,
    pub lp_objective_km: Option<f64>,
    pub lp_loss_km: Option<f64>,
    pub flagged: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub any_flagged: bool,
}

/// Mean distance from a uniform point in cell `x` to the center of cell
/// `z`, for every pair: the discretization-aware loss table.
pub fn cell_spread_loss(grid: &GeoGrid, exec: Execution) -> Matrix {
    let n = grid.len();
    let rows = par::map_indexed(n, exec, |x| {
        let mut row = Vec::with_capacity(n);
        for z in 0..n {
            if z == x {
                row.push(grid.mean_distance_to_center());
            } else {
                row.push(grid.mean_distance_from_cell(x, grid.center(z)));
            }
        }
        row
    });
    Matrix::from_rows(rows).expect("square by construction")
}

/// Monte Carlo mean noise magnitude for the confirmation column.
fn mc_mean_magnitude(eps: f64, samples: usize, seed: u64) -> f64 {
    let mech = PlanarLaplace::new(eps).expect("positive epsilon");
    let mut rng = RngState::new(seed);
    let mut total = 0.0;
    for _ in 0..samples {
        total += mech.sample(&mut rng).r;
    }
    total / samples as f64
}

/// Compare the additive Laplace mechanism against the LP optimum across
/// the epsilon sweep, one row per (epsilon, user).
pub fn run_sweep_comparison(
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<SweepOutcome> {
    let grid = config.grid.to_grid()?;
    let loss = config.loss_fn()?;
    let priors = config.build_priors(&grid)?;
    let eps_values = config.epsilon.values()?;
    let spread = cell_spread_loss(&grid, exec);

    let per_eps = par::map_indexed(eps_values.len(), exec, |i| {
        let eps = eps_values[i];
        let laplace_loss = 2.0 / eps;
        let laplace_mc = mc_mean_magnitude(eps, config.mc_samples, config.seed ^ (i as u64));
        let ell = DistinguishabilityFn::linear(eps).expect("positive epsilon");
        let mut rows = Vec::with_capacity(priors.len());
        for (label, prior) in &priors {
            let row = match lp::build_lp(&grid, prior, &ell, &loss)
                .and_then(|inst| lp::solve_lp(&inst, 1e-9))
            {
                Ok(sol) => {
                    let lp_loss =
                        prior::expected_loss_discrete(&sol.mechanism, prior, &spread)
                            .expect("shapes agree");
                    SweepRow {
                        epsilon: eps,
                        user: label.clone(),
                        laplace_loss_km: laplace_loss,
                        laplace_mc_km: laplace_mc,
                        lp_objective_km: Some(sol.objective),
                        lp_loss_km: Some(lp_loss),
                        flagged: None,
                    }
                }
                Err(e) => SweepRow {
                    epsilon: eps,
                    user: label.clone(),
                    laplace_loss_km: laplace_loss,
                    laplace_mc_km: laplace_mc,
                    lp_objective_km: None,
                    lp_loss_km: None,
                    flagged: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
        rows
    });

    let rows: Vec<SweepRow> = per_eps.into_iter().flatten().collect();
    let any_flagged = rows.iter().any(|r| r.flagged.is_some());
    Ok(SweepOutcome { rows, any_flagged })
}

/// One remap comparison row.
#[derive(Debug, Clone, Serialize)]
pub struct RemapRow {
    pub epsilon: f64,
    pub user: String,
    pub bayes_loss_km: Option<f64>,
    pub nearest_loss_km: Option<f64>,
    pub bayes_fallback_columns: usize,
    pub flagged: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RemapOutcome {
    pub rows: Vec<RemapRow>,
    pub any_flagged: bool,
}

/// Expected losses of the nearest-cell and posterior remaps of the
/// Laplace mechanism discretized on the grid.
///
/// Only the prior's support rows of the discretized mechanism are ever
/// materialized: both remaps and both losses depend on `k(x, .)` for
/// supported `x` alone, which keeps the 80x60 fine grid affordable.
pub fn run_remap_comparison(
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<RemapOutcome> {
    let grid = config.grid.to_grid()?;
    let priors = config.build_priors(&grid)?;
    let eps_values = config.epsilon.values()?;
    let centers = grid.centers();

    let per_eps = par::map_indexed(eps_values.len(), exec, |i| {
        let eps = eps_values[i];
        let mech = PlanarLaplace::new(eps).expect("positive epsilon");
        let mut rows = Vec::with_capacity(priors.len());
        for (label, prior) in &priors {
            rows.push(remap_row(
                &mech,
                &grid,
                centers,
                prior,
                label,
                eps,
                config.seed ^ (i as u64),
            ));
        }
        rows
    });
    let rows: Vec<RemapRow> = per_eps.into_iter().flatten().collect();
    let any_flagged = rows.iter().any(|r| r.flagged.is_some());
    Ok(RemapOutcome { rows, any_flagged })
}

fn remap_row(
    mech: &PlanarLaplace,
    grid: &GeoGrid,
    centers: &[crate::grid::Point],
    prior: &Prior,
    label: &str,
    eps: f64,
    seed: u64,
) -> RemapRow {
    let support = prior.support().to_vec();
    let method = DiscretizationMethod::Auto { seed };
    let rows = match lp::laplace_rows(mech, grid, &support, method, Execution::Sequential) {
        Ok(r) => r,
        Err(e) => {
            return RemapRow {
                epsilon: eps,
                user: label.to_string(),
                bayes_loss_km: None,
                nearest_loss_km: None,
                bayes_fallback_columns: 0,
                flagged: Some(e.to_string()),
            }
        }
    };
    let weights: Vec<f64> = support.iter().map(|&x| prior.weight(x)).collect();
    let row_refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    // Outputs are cell centers already, so the nearest remap is the
    // identity and its loss is the plain discretized expected loss.
    let nearest_loss: f64 = support
        .iter()
        .zip(&rows)
        .map(|(&x, row)| {
            let w = prior.weight(x);
            let cx = centers[x];
            w * row
                .iter()
                .enumerate()
                .map(|(z, &k)| k * cx.dist(centers[z]))
                .sum::<f64>()
        })
        .sum();
    let loss_of = |support_idx: usize, z_star: usize| {
        centers[support[support_idx]].dist(centers[z_star])
    };
    let (table, fallbacks) = remap::bayes_table_from_rows(
        &weights,
        &row_refs,
        loss_of,
        grid.len(),
        None,
        |z| z,
    );
    let bayes_loss: f64 = support
        .iter()
        .zip(&rows)
        .map(|(&x, row)| {
            let w = prior.weight(x);
            let cx = centers[x];
            w * row
                .iter()
                .enumerate()
                .map(|(z, &k)| k * cx.dist(centers[table[z]]))
                .sum::<f64>()
        })
        .sum();
    RemapRow {
        epsilon: eps,
        user: label.to_string(),
        bayes_loss_km: Some(bayes_loss),
        nearest_loss_km: Some(nearest_loss),
        bayes_fallback_columns: fallbacks.len(),
        flagged: None,
    }
}

// ---------------------------------------------------------------------------
// CSV and summary output
// ---------------------------------------------------------------------------

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.9}"),
        None => String::new(),
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "epsilon,user,laplace_loss_km,laplace_mc_km,lp_objective_km,lp_loss_km,flagged"
    )?;
    for r in rows {
        writeln!(
            w,
            "{:.6},{},{:.9},{:.9},{},{},{}",
            r.epsilon,
            r.user,
            r.laplace_loss_km,
            r.laplace_mc_km,
            fmt_opt(r.lp_objective_km),
            fmt_opt(r.lp_loss_km),
            r.flagged.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

pub fn write_remap_csv<W: Write>(rows: &[RemapRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "epsilon,user,bayes_loss_km,nearest_loss_km,bayes_fallback_columns,flagged"
    )?;
    for r in rows {
        writeln!(
            w,
            "{:.6},{},{},{},{},{}",
            r.epsilon,
            r.user,
            fmt_opt(r.bayes_loss_km),
            fmt_opt(r.nearest_loss_km),
            r.bayes_fallback_columns,
            r.flagged.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

/// Parse rows written by [`write_sweep_csv`].
pub fn read_sweep_csv<R: std::io::BufRead>(reader: R) -> Result<Vec<SweepRow>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty sweep file".into()))??;
    let expected = "epsilon,user,laplace_loss_km,laplace_mc_km,lp_objective_km,lp_loss_km,flagged";
    if header.trim() != expected {
        return Err(Error::Parse(format!("unexpected sweep header '{}'", header.trim())));
    }
    let parse_opt = |s: &str, line: usize| -> Result<Option<f64>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Parse(format!("line {line}: bad number '{s}'")))
    };
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(7, ',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!("line {line_no}: expected 7 fields")));
        }
        rows.push(SweepRow {
            epsilon: fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line_no}: bad epsilon")))?,
            user: fields[1].to_string(),
            laplace_loss_km: fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line_no}: bad laplace loss")))?,
            laplace_mc_km: fields[3]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line_no}: bad mc loss")))?,
            lp_objective_km: parse_opt(fields[4], line_no)?,
            lp_loss_km: parse_opt(fields[5], line_no)?,
            flagged: if fields[6].is_empty() { None } else { Some(fields[6].to_string()) },
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct UserSummary {
    pub min_lp_loss_km: Option<f64>,
    pub max_lp_loss_km: Option<f64>,
    /// Mean lp loss over the top third of swept epsilons: where the
    /// curve flattens once obfuscation stops paying.
    pub saturation_km: Option<f64>,
    /// First epsilon where the additive mechanism beats the LP one.
    pub crossover_epsilon: Option<f64>,
    pub usable_points: usize,
    pub flagged_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub users: BTreeMap<String, UserSummary>,
}

/// Summarize sweep rows: per-user extremes, the saturation level, and
/// the crossover epsilon where the additive mechanism starts winning.
pub fn summarize(rows: &[SweepRow]) -> Result<SweepSummary> {
    if rows.is_empty() {
        return Err(Error::config("no rows to summarize"));
    }
    let mut by_user: BTreeMap<String, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        by_user.entry(r.user.clone()).or_default().push(r);
    }
    let mut users = BTreeMap::new();
    for (user, mut urows) in by_user {
        urows.sort_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).unwrap());
        let usable: Vec<&&SweepRow> = urows.iter().filter(|r| r.lp_loss_km.is_some()).collect();
        let losses: Vec<f64> = usable.iter().filter_map(|r| r.lp_loss_km).collect();
        let min = losses.iter().copied().reduce(f64::min);
        let max = losses.iter().copied().reduce(f64::max);
        let saturation = if losses.is_empty() {
            None
        } else {
            let tail = &losses[losses.len() - losses.len().div_ceil(3)..];
            Some(tail.iter().sum::<f64>() / tail.len() as f64)
        };
        let crossover = usable
            .iter()
            .find(|r| r.laplace_loss_km < r.lp_loss_km.unwrap())
            .map(|r| r.epsilon);
        users.insert(
            user,
            UserSummary {
                min_lp_loss_km: min,
                max_lp_loss_km: max,
                saturation_km: saturation,
                crossover_epsilon: crossover,
                usable_points: usable.len(),
                flagged_points: urows.len() - usable.len(),
            },
        );
    }
    Ok(SweepSummary { users })
}

/// Wide-format CSV for plotting: one row per epsilon, one
/// `laplace_<user>,lp_<user>` column pair per user.
pub fn write_plot_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    let mut users: Vec<String> = rows.iter().map(|r| r.user.clone()).collect();
    users.sort();
    users.dedup();
    let mut eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eps.dedup();
    let header: Vec<String> = users
        .iter()
        .flat_map(|u| [format!("laplace_{u}"), format!("lp_{u}")])
        .collect();
    writeln!(w, "epsilon,{}", header.join(","))?;
    for &e in &eps {
        let mut fields = vec![format!("{e:.6}")];
        for u in &users {
            let row = rows
                .iter()
                .find(|r| r.epsilon == e && &r.user == u);
            match row {
                Some(r) => {
                    fields.push(format!("{:.9}", r.laplace_loss_km));
                    fields.push(fmt_opt(r.lp_loss_km));
                }
                None => {
                    fields.push(String::new());
                    fields.push(String::new());
                }
            }
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_range_inclusive() {
        let vals = EpsilonRange::paper_default().values().unwrap();
        assert_eq!(vals.len(), 29);
        assert!((vals[0] - 0.2).abs() < 1e-12);
        assert!((vals[28] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn loss_spec_parsing() {
        assert!(matches!(parse_loss_spec("linear").unwrap(), LossFn::Linear));
        assert!(matches!(
            parse_loss_spec("step:2.5").unwrap(),
            LossFn::Step { .. }
        ));
        assert!(parse_loss_spec("nonsense").is_err());
    }

    #[test]
    fn two_cluster_prior_is_nonuniform_and_normalized() {
        let grid = GridSpec {
            lat_min: 33.9301,
            lat_max: 34.1996,
            lon_min: -118.5354,
            lon_max: -118.1010,
            cols: 4,
            rows: 3,
        }
        .to_grid()
        .unwrap();
        let p = SyntheticPrior::TwoCluster.build(&grid).unwrap();
        let total: f64 = p.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let max = p.weights().iter().cloned().fold(0.0_f64, f64::max);
        let min = p.weights().iter().cloned().fold(1.0_f64, f64::min);
        assert!(max > 2.0 * min, "prior too flat: {min}..{max}");
    }
}
