//! Deterministic remapping of mechanism outputs onto grid cells.
//!
//! A remap is post-processing: it reads only the reported output, never
//! the true location, so whatever ratio bound the base mechanism meets,
//! the remapped one meets too (merging columns of a row-stochastic
//! matrix sums the same bounded-ratio columns on both sides of every
//! constraint).
//!
//! Two remaps are provided: nearest-cell snapping, and the
//! posterior-loss minimizer that sends output `z` to
//! `argmin_{z*} sum_x pi(x) k(x, z) loss(x, z*)`. An optional mask
//! restricts targets to a permitted cell subset (outputs inside rivers,
//! say, get moved to the nearest allowed cell).

use crate::error::{Error, Result};
use crate::grid::{GeoGrid, Point};
use crate::mechanism::{DiscreteMechanism, Matrix};
use crate::prior::Prior;

/// How outputs move onto the cell set.
#[derive(Debug, Clone)]
pub enum RemapStrategy {
    /// Snap to the nearest (permitted) cell center.
    Nearest,
    /// Minimize expected loss with respect to the posterior over inputs.
    Bayesian { prior: Prior, loss_matrix: Matrix },
}

/// Outcome bookkeeping for a remap table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemapStats {
    /// Output columns with zero posterior mass that fell back to the
    /// nearest-cell rule.
    pub fallback_columns: Vec<usize>,
}

/// Nearest-cell remap of a continuous output point.
pub fn remap_nearest(grid: &GeoGrid, z: Point) -> usize {
    grid.nearest_cell(z)
}

/// Nearest *permitted* cell to a point; falls back to plain nearest when
/// no mask is given. Ties go to the lowest index.
pub fn remap_nearest_masked(grid: &GeoGrid, z: Point, permitted: Option<&[bool]>) -> usize {
    match permitted {
        None => grid.nearest_cell(z),
        Some(mask) => {
            let mut best = None;
            let mut best_d = f64::INFINITY;
            for (k, &ok) in mask.iter().enumerate() {
                if !ok {
                    continue;
                }
                let d = grid.center(k).dist(z);
                if d < best_d - 1e-15 {
                    best_d = d;
                    best = Some(k);
                }
            }
            best.unwrap_or_else(|| grid.nearest_cell(z))
        }
    }
}

/// Posterior-loss remap of one output column `z`:
/// `argmin_{z*} sum_x pi(x) k(x, z) loss_matrix(x, z*)`, ties to the
/// lowest index. Columns with zero posterior mass fall back to the
/// nearest-cell rule on `z`'s own center (reported in the stats by the
/// table builders).
pub fn remap_bayes(
    base: &DiscreteMechanism,
    prior: &Prior,
    loss_matrix: &Matrix,
    z: usize,
    grid: &GeoGrid,
) -> Result<(usize, bool)> {
    if prior.len() != base.num_inputs() || loss_matrix.nrows() != base.num_inputs() {
        return Err(Error::Dimension("prior/loss/mechanism shapes disagree".into()));
    }
    let mass: f64 = prior
        .support()
        .iter()
        .map(|&x| prior.weight(x) * base.prob(x, z))
        .sum();
    if mass <= 0.0 {
        return Ok((remap_nearest(grid, grid.center(z)), true));
    }
    let mut best = 0usize;
    let mut best_loss = f64::INFINITY;
    for z_star in 0..loss_matrix.ncols() {
        let mut d = 0.0;
        for &x in prior.support() {
            d += prior.weight(x) * base.prob(x, z) * loss_matrix.get(x, z_star);
        }
        if d < best_loss - 1e-15 {
            best_loss = d;
            best = z_star;
        }
    }
    Ok((best, false))
}

/// Build the full output-to-cell table for a strategy.
pub fn remap_table(
    base: &DiscreteMechanism,
    strategy: &RemapStrategy,
    grid: &GeoGrid,
    permitted: Option<&[bool]>,
) -> Result<(Vec<usize>, RemapStats)> {
    let n_out = base.num_outputs();
    let mut stats = RemapStats::default();
    let mut table = Vec::with_capacity(n_out);
    match strategy {
        RemapStrategy::Nearest => {
            for z in 0..n_out {
                table.push(remap_nearest_masked(grid, grid.center(z), permitted));
            }
        }
        RemapStrategy::Bayesian { prior, loss_matrix } => {
            if prior.len() != base.num_inputs() {
                return Err(Error::Dimension("prior length != mechanism inputs".into()));
            }
            let rows: Vec<&[f64]> = prior.support().iter().map(|&x| base.row(x)).collect();
            let weights: Vec<f64> =
                prior.support().iter().map(|&x| prior.weight(x)).collect();
            let loss_of = |support_idx: usize, z_star: usize| {
                loss_matrix.get(prior.support()[support_idx], z_star)
            };
            let (t, fallbacks) = bayes_table_from_rows(
                &weights,
                &rows,
                loss_of,
                n_out,
                permitted,
                |z| remap_nearest_masked(grid, grid.center(z), permitted),
            );
            table = t;
            stats.fallback_columns = fallbacks;
        }
    }
    Ok((table, stats))
}

/// Core posterior-loss table computation over pre-extracted rows: entry
/// `rows[i][z]` is `k(support_i, z)` and `weights[i]` the prior weight of
/// that input. Shared by the matrix path above and the streaming
/// fine-grid path that never materializes the full mechanism.
pub fn bayes_table_from_rows(
    weights: &[f64],
    rows: &[&[f64]],
    loss_of: impl Fn(usize, usize) -> f64,
    n_out: usize,
    permitted: Option<&[bool]>,
    fallback: impl Fn(usize) -> usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut table = Vec::with_capacity(n_out);
    let mut fallbacks = Vec::new();
    for z in 0..n_out {
        let masses: Vec<f64> = weights
            .iter()
            .zip(rows)
            .map(|(&w, row)| w * row[z])
            .collect();
        if masses.iter().sum::<f64>() <= 0.0 {
            table.push(fallback(z));
            fallbacks.push(z);
            continue;
        }
        let mut best = None;
        let mut best_loss = f64::INFINITY;
        for z_star in 0..n_out {
            if let Some(mask) = permitted {
                if !mask[z_star] {
                    continue;
                }
            }
            let mut d = 0.0;
            for (i, &m) in masses.iter().enumerate() {
                if m != 0.0 {
                    d += m * loss_of(i, z_star);
                }
            }
            if d < best_loss - 1e-15 {
                best_loss = d;
                best = Some(z_star);
            }
        }
        match best {
            Some(z_star) => table.push(z_star),
            None => {
                table.push(fallback(z));
                fallbacks.push(z);
            }
        }
    }
    (table, fallbacks)
}

/// Compose a mechanism with a deterministic remap: all mass reported at
/// `z` moves to `table[z]`.
pub fn apply_remap(base: &DiscreteMechanism, table: &[usize]) -> Result<DiscreteMechanism> {
    if table.len() != base.num_outputs() {
        return Err(Error::Dimension(format!(
            "table has {} entries for {} outputs",
            table.len(),
            base.num_outputs()
        )));
    }
    let n_out = base.num_outputs();
    if table.iter().any(|&t| t >= n_out) {
        return Err(Error::config("remap target outside the output range"));
    }
    let mut k = Matrix::zeros(base.num_inputs(), n_out);
    for x in 0..base.num_inputs() {
        let row = base.row(x);
        for (z, &target) in table.iter().enumerate() {
            let v = k.get(x, target) + row[z];
            k.set(x, target, v);
        }
    }
    DiscreteMechanism::new(k)
}

/// Remapped mechanism for a strategy (table construction + composition).
pub fn remapped_mechanism(
    base: &DiscreteMechanism,
    strategy: &RemapStrategy,
    grid: &GeoGrid,
) -> Result<(DiscreteMechanism, RemapStats)> {
    let (table, stats) = remap_table(base, strategy, grid, None)?;
    Ok((apply_remap(base, &table)?, stats))
}

/// Write a remap table as `z_index,remapped_index` CSV.
pub fn table_to_csv<W: std::io::Write>(table: &[usize], mut w: W) -> Result<()> {
    writeln!(w, "z_index,remapped_index")?;
    for (z, &t) in table.iter().enumerate() {
        writeln!(w, "{z},{t}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;
    use crate::loss::LossFn;
    use crate::prior;

    fn line_grid(cells: usize, cell_km: f64) -> GeoGrid {
        let height = cells as f64 * cell_km / 111.194926644;
        let region = Region::new(0.0, height, 0.0, 0.001).unwrap();
        GeoGrid::new(region, 1, cells).unwrap()
    }

    #[test]
    fn identity_table_is_noop() {
        let base = DiscreteMechanism::uniform(4);
        let table: Vec<usize> = (0..4).collect();
        let out = apply_remap(&base, &table).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn collapsing_table_makes_point_rows() {
        let base = DiscreteMechanism::uniform(3);
        let out = apply_remap(&base, &[1, 1, 1]).unwrap();
        for x in 0..3 {
            assert_eq!(out.row(x), &[0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn point_mass_prior_pulls_everything_home() {
        let grid = line_grid(3, 1.0);
        let base = DiscreteMechanism::uniform(3);
        let prior = Prior::point_mass(3, 2).unwrap();
        let loss = prior::loss_matrix(&grid.cell_distance_matrix(), &LossFn::Linear);
        for z in 0..3 {
            let (target, fallback) = remap_bayes(&base, &prior, &loss, z, &grid).unwrap();
            assert_eq!(target, 2);
            assert!(!fallback);
        }
    }

    #[test]
    fn uniform_prior_identity_base_keeps_supported_columns() {
        let grid = line_grid(3, 1.0);
        let base = DiscreteMechanism::identity(3);
        let prior = Prior::uniform(3);
        let loss = prior::loss_matrix(&grid.cell_distance_matrix(), &LossFn::Linear);
        for z in 0..3 {
            let (target, fallback) = remap_bayes(&base, &prior, &loss, z, &grid).unwrap();
            assert_eq!(target, z);
            assert!(!fallback);
        }
    }

    #[test]
    fn symmetric_two_point_posterior_ties_to_lowest() {
        // Centers at 2.5, 7.5, 12.5 km with equal posterior mass at the
        // ends: enumerating candidates gives 10/6 for all three (any
        // point between two equal masses is a 1-D median), so the
        // lowest-index tie rule picks cell 0.
        let grid = line_grid(3, 5.0);
        let base = DiscreteMechanism::uniform(3);
        let prior = Prior::new(vec![0.5, 0.0, 0.5]).unwrap();
        let loss = prior::loss_matrix(&grid.cell_distance_matrix(), &LossFn::Linear);
        let (target, _) = remap_bayes(&base, &prior, &loss, 0, &grid).unwrap();
        assert_eq!(target, 0);
        // With mass in the middle the argmin moves there strictly:
        // 0.3*5 + 0.3*5 = 3 versus 0.4*5 + 0.3*10 = 5 at either end.
        let prior = Prior::new(vec![0.3, 0.4, 0.3]).unwrap();
        let (target, _) = remap_bayes(&base, &prior, &loss, 0, &grid).unwrap();
        assert_eq!(target, 1);
    }

    #[test]
    fn zero_mass_column_falls_back_flagged() {
        let grid = line_grid(2, 1.0);
        // Both rows put everything on output 0; column 1 has no mass.
        let m = Matrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let base = DiscreteMechanism::new(m).unwrap();
        let prior = Prior::uniform(2);
        let loss = prior::loss_matrix(&grid.cell_distance_matrix(), &LossFn::Linear);
        let (target, fallback) = remap_bayes(&base, &prior, &loss, 1, &grid).unwrap();
        assert_eq!(target, 1); // nearest cell of its own center
        assert!(fallback);
        let strategy = RemapStrategy::Bayesian { prior, loss_matrix: loss };
        let (_, stats) = remap_table(&base, &strategy, &grid, None).unwrap();
        assert_eq!(stats.fallback_columns, vec![1]);
    }

    #[test]
    fn mask_restricts_targets() {
        let grid = line_grid(4, 1.0);
        let base = DiscreteMechanism::uniform(4);
        let permitted = vec![false, true, true, false];
        let (table, _) =
            remap_table(&base, &RemapStrategy::Nearest, &grid, Some(&permitted)).unwrap();
        assert_eq!(table, vec![1, 1, 2, 2]);
    }
}
