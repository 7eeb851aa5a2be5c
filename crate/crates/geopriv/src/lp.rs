//! The minimum-loss mechanism LP and its checkers.
//!
//! For a grid of `n` cells, a prior `pi`, a budget function `ell`, and a
//! loss `L`, the optimal cell-to-cell mechanism solves
//!
//! ```text
//! min  sum_{x,z} pi(x) L(d(x,z)) k[x][z]
//! s.t. k[x][z] <= e^{ell(d(x,x'))} k[x'][z]   for all x != x', all z
//!      sum_z k[x][z] = 1                      for all x
//!      k >= 0
//! ```
//!
//! with `n^2 (n-1)` inequalities and `n` equalities over `n^2` variables.
//! Pairs whose budget is infinite impose nothing and are omitted at build
//! time.
//!
//! [`solve_lp`] hands the *dual* to the simplex engine: it has one row
//! per variable `k[x][z]` instead of one row per constraint, and its
//! rows split into independent blocks per output cell `z` (only the
//! row-sum multipliers cross blocks), which is exactly the structure
//! [`crate::simplex`] factorizes cheaply. The mechanism is read off the
//! optimal row multipliers, and feasibility plus the duality gap are
//! re-verified on the returned matrix, so correctness never rests on the
//! transformation being right silently.
//!
//! Ratio factors above [`FACTOR_CAP`] (`e^{ell} > 1e8`) would make the
//! arithmetic ill-conditioned while constraining almost nothing; the
//! solver relaxes them and afterwards blends the solution with the
//! uniform mechanism at weight `delta = n / (FACTOR_CAP - 1)`, which
//! restores every relaxed constraint exactly (the uniform row satisfies
//! all ratio bounds with ratio 1, and `(factor - 1) delta / n >= 1`
//! absorbs any violation). The objective cost of the blend is part of
//! the reported optimality gap bound.

use std::io::Write;

use crate::distinguishability::{DistinguishabilityFn, Level};
use crate::error::{Error, Result};
use crate::grid::GeoGrid;
use crate::laplace::PlanarLaplace;
use crate::loss::LossFn;
use crate::mechanism::{DiscreteMechanism, Matrix};
use crate::par::{self, Execution};
use crate::prior::Prior;
use crate::quad;
use crate::rng::RngState;
use crate::simplex::{self, SimplexOptions, SparseColumn, StandardLp};

/// Ratio factors above this are relaxed at solve time (see module docs).
pub const FACTOR_CAP: f64 = 1e8;

/// One ratio constraint family: `k[from][z] <= factor * k[to][z]` for
/// every output `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBound {
    pub from: usize,
    pub to: usize,
    pub factor: f64,
}

/// The LP data: objective coefficients and the finite ratio bounds.
#[derive(Debug, Clone)]
pub struct LpInstance {
    n: usize,
    /// `cost.get(x, z) = pi(x) * L(d(x, z))`.
    cost: Matrix,
    pairs: Vec<RatioBound>,
}

impl LpInstance {
    pub fn from_parts(cost: Matrix, pairs: Vec<RatioBound>) -> Result<Self> {
        if cost.nrows() != cost.ncols() {
            return Err(Error::Dimension("cost matrix must be square".into()));
        }
        let n = cost.nrows();
        for b in &pairs {
            if b.from >= n || b.to >= n || b.from == b.to {
                return Err(Error::config(format!(
                    "ratio bound ({}, {}) invalid for {n} cells",
                    b.from, b.to
                )));
            }
            if !(b.factor >= 1.0) {
                return Err(Error::config(format!(
                    "ratio factor {} below 1 (budgets are non-negative)",
                    b.factor
                )));
            }
        }
        Ok(LpInstance { n, cost, pairs })
    }

    pub fn num_cells(&self) -> usize {
        self.n
    }

    pub fn cost(&self) -> &Matrix {
        &self.cost
    }

    pub fn ratio_bounds(&self) -> &[RatioBound] {
        &self.pairs
    }

    pub fn inequality_count(&self) -> usize {
        self.pairs.len() * self.n
    }

    pub fn equality_count(&self) -> usize {
        self.n
    }

    pub fn variable_count(&self) -> usize {
        self.n * self.n
    }

    /// Expected loss of a mechanism under this instance's objective.
    pub fn objective_of(&self, mech: &DiscreteMechanism) -> f64 {
        let mut total = 0.0;
        for x in 0..self.n {
            for (z, &k) in mech.row(x).iter().enumerate() {
                total += self.cost.get(x, z) * k;
            }
        }
        total
    }

    /// Write the instance in CPLEX LP text format for cross-checking
    /// against external solvers. Variables are `k_<x>_<z>`.
    pub fn write_lp_format<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "\\ minimum-loss mechanism over {} cells", self.n)?;
        writeln!(w, "Minimize")?;
        write!(w, " obj:")?;
        let mut first = true;
        for x in 0..self.n {
            for z in 0..self.n {
                let c = self.cost.get(x, z);
                if c != 0.0 {
                    if first {
                        write!(w, " {c} k_{x}_{z}")?;
                        first = false;
                    } else {
                        write!(w, " + {c} k_{x}_{z}")?;
                    }
                }
            }
        }
        if first {
            write!(w, " 0 k_0_0")?;
        }
        writeln!(w)?;
        writeln!(w, "Subject To")?;
        for (i, b) in self.pairs.iter().enumerate() {
            for z in 0..self.n {
                writeln!(
                    w,
                    " r{i}_{z}: k_{}_{z} - {} k_{}_{z} <= 0",
                    b.from, b.factor, b.to
                )?;
            }
        }
        for x in 0..self.n {
            let terms: Vec<String> = (0..self.n).map(|z| format!("k_{x}_{z}")).collect();
            writeln!(w, " row{x}: {} = 1", terms.join(" + "))?;
        }
        writeln!(w, "End")?;
        Ok(())
    }
}

/// Build the LP for a grid, prior, budget function, and loss.
/// Infinite-budget pairs are omitted (they constrain nothing).
pub fn build_lp(
    grid: &GeoGrid,
    prior: &Prior,
    ell: &DistinguishabilityFn,
    loss: &LossFn,
) -> Result<LpInstance> {
    let n = grid.len();
    if prior.len() != n {
        return Err(Error::Dimension(format!(
            "prior has {} cells, grid has {n}",
            prior.len()
        )));
    }
    let distances = grid.cell_distance_matrix();
    let mut cost = Matrix::zeros(n, n);
    for x in 0..n {
        let pw = prior.weight(x);
        for z in 0..n {
            cost.set(x, z, pw * loss.eval(distances.get(x, z)));
        }
    }
    let mut pairs = Vec::with_capacity(n * (n - 1));
    for from in 0..n {
        for to in 0..n {
            if from == to {
                continue;
            }
            match ell.eval(distances.get(from, to))? {
                Level::Infinite => {}
                Level::Finite(l) => pairs.push(RatioBound { from, to, factor: l.exp() }),
            }
        }
    }
    LpInstance::from_parts(cost, pairs)
}

/// Solved mechanism with its certificates.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub mechanism: DiscreteMechanism,
    /// Expected loss of `mechanism` under the instance objective.
    pub objective: f64,
    /// Optimal value reported by the solver for the (possibly relaxed) LP;
    /// a lower bound on the true optimum.
    pub lp_objective: f64,
    /// `objective - true optimum <= optimality_gap_bound`.
    pub optimality_gap_bound: f64,
    pub iterations: usize,
    /// Ratio constraints relaxed for conditioning (restored by blending).
    pub relaxed_constraints: usize,
}

/// Solve the instance to the given tolerance. Deterministic: fixed pivot
/// rules, no randomness.
pub fn solve_lp(instance: &LpInstance, tol: f64) -> Result<LpSolution> {
    let opts = SimplexOptions::default();
    solve_lp_with_options(instance, tol, &opts)
}

/// [`solve_lp`] with explicit simplex controls.
pub fn solve_lp_with_options(
    instance: &LpInstance,
    tol: f64,
    simplex_opts: &SimplexOptions,
) -> Result<LpSolution> {
    let n = instance.n;
    let m = n * n;

    // A pair (x, y) whose budget equals or exceeds some two-hop budget
    // x -> m -> y is implied by the finer pairs: any k satisfying the
    // hops satisfies it. Dropping implied pairs leaves the feasible set
    // unchanged and removes exact linear dependences among the dual
    // columns (collinear cell triples produce them on every grid).
    let mut level = vec![f64::INFINITY; n * n];
    for b in &instance.pairs {
        level[b.from * n + b.to] = b.factor.ln();
    }
    let implied = |b: &RatioBound| -> bool {
        let direct = level[b.from * n + b.to];
        (0..n).any(|mid| {
            mid != b.from
                && mid != b.to
                && level[b.from * n + mid] + level[mid * n + b.to] <= direct + 1e-9
        })
    };

    let mut kept: Vec<&RatioBound> = Vec::new();
    let mut relaxed_pairs = 0usize;
    for b in &instance.pairs {
        if b.factor > FACTOR_CAP {
            relaxed_pairs += 1;
        } else if !implied(b) {
            kept.push(b);
        }
    }

    // Dual columns; see module docs for the correspondence. Ratio
    // columns of one pair form a family capped below completeness: the
    // full family is an exact linear combination of the two row-sum
    // multiplier columns it connects, which are always basic.
    let mut columns = Vec::with_capacity(kept.len() * n + n + m);
    let mut costs = Vec::with_capacity(columns.capacity());
    let mut family: Vec<Option<u32>> = Vec::with_capacity(columns.capacity());
    for z in 0..n {
        for (i, b) in kept.iter().enumerate() {
            columns.push(SparseColumn::new(vec![
                (z * n + b.from, -1.0 / b.factor),
                (z * n + b.to, 1.0),
            ]));
            costs.push(0.0);
            family.push(Some(i as u32));
        }
    }
    // Row-sum multipliers: free, basic from the start to the end.
    let mu_base = columns.len();
    for x in 0..n {
        let entries: Vec<(usize, f64)> = (0..n).map(|z| (z * n + x, 1.0)).collect();
        columns.push(SparseColumn::new(entries));
        costs.push(-1.0);
        family.push(None);
    }
    let slack_base = columns.len();
    for r in 0..m {
        columns.push(SparseColumn::new(vec![(r, 1.0)]));
        costs.push(0.0);
        family.push(None);
    }
    let rhs: Vec<f64> = (0..m)
        .map(|r| instance.cost.get(r % n, r / n))
        .collect();

    let mut is_free = vec![false; columns.len()];
    for x in 0..n {
        is_free[mu_base + x] = true;
    }
    let lp = StandardLp {
        num_rows: m,
        costs,
        rhs,
        columns,
        row_block: (0..m).map(|r| r / n).collect(),
        num_blocks: n,
        is_free,
        family,
        family_cap: vec![n as u32 - 1; kept.len()],
    };

    // Feasible start: each multiplier column stands in for its cell's
    // cheapest row, slacks cover the rest (values rhs - row minimum).
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut cheapest = vec![0usize; n];
    for x in 0..n {
        let mut best_z = 0usize;
        for z in 1..n {
            if instance.cost.get(x, z) < instance.cost.get(x, best_z) {
                best_z = z;
            }
        }
        cheapest[x] = best_z;
        basis.push(mu_base + x);
    }
    for r in 0..m {
        let (z, x) = (r / n, r % n);
        if z != cheapest[x] {
            basis.push(slack_base + r);
        }
    }
    let opts = SimplexOptions {
        optimality_tol: tol.max(1e-12),
        feasibility_tol: tol.max(1e-12),
        ..simplex_opts.clone()
    };
    let out = simplex::solve(&lp, basis, &opts)?;

    // Mechanism entries are the negated row multipliers.
    let mut k = Matrix::zeros(n, n);
    for x in 0..n {
        let mut sum = 0.0;
        for z in 0..n {
            let v = -out.row_multipliers[z * n + x];
            let v = if v < 0.0 {
                if v < -1e-6 {
                    return Err(Error::Solver {
                        msg: format!("extracted probability {v} at ({x}, {z})"),
                        best_incumbent: Some(-out.objective),
                    });
                }
                0.0
            } else {
                v
            };
            k.set(x, z, v);
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Solver {
                msg: format!("extracted row {x} sums to {sum}"),
                best_incumbent: Some(-out.objective),
            });
        }
        for z in 0..n {
            k.set(x, z, k.get(x, z) / sum);
        }
    }

    // Blend with the uniform mechanism to restore relaxed constraints.
    let delta = if relaxed_pairs > 0 { n as f64 / (FACTOR_CAP - 1.0) } else { 0.0 };
    if delta > 0.0 {
        let u = 1.0 / n as f64;
        for x in 0..n {
            for z in 0..n {
                k.set(x, z, (1.0 - delta) * k.get(x, z) + delta * u);
            }
        }
    }

    let mechanism = DiscreteMechanism::new(k)?;
    let outcome = check_ratio_bounds(&mechanism, &instance.pairs, 10.0 * tol.max(1e-9));
    if !outcome.holds {
        return Err(Error::Solver {
            msg: format!(
                "solution violates a ratio bound by e^{:.3e} at {:?}",
                outcome.worst_excess, outcome.worst_violation
            ),
            best_incumbent: Some(-out.objective),
        });
    }

    let objective = instance.objective_of(&mechanism);
    let lp_objective = -out.objective;
    let gap = (objective - lp_objective).max(0.0) + tol * (1.0 + objective.abs());
    Ok(LpSolution {
        mechanism,
        objective,
        lp_objective,
        optimality_gap_bound: gap,
        iterations: out.iterations,
        relaxed_constraints: relaxed_pairs * n,
    })
}

/// Result of a mechanism privacy check.
#[derive(Debug, Clone)]
pub struct MechanismPrivacyOutcome {
    pub holds: bool,
    /// Largest `log(k[x][z] / (factor k[x'][z]))` over all constraints;
    /// `+inf` when a zero meets a positive entry, `-inf` when every
    /// constraint has slack and no pair is probed tight.
    pub worst_excess: f64,
    pub worst_violation: Option<(usize, usize, usize)>,
}

fn check_ratio_bounds(
    mech: &DiscreteMechanism,
    pairs: &[RatioBound],
    tol: f64,
) -> MechanismPrivacyOutcome {
    let n_out = mech.num_outputs();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_violation = None;
    let mut holds = true;
    for b in pairs {
        for z in 0..n_out {
            let upper = mech.prob(b.from, z);
            let lower = mech.prob(b.to, z);
            if upper == 0.0 {
                continue;
            }
            if lower == 0.0 {
                return MechanismPrivacyOutcome {
                    holds: false,
                    worst_excess: f64::INFINITY,
                    worst_violation: Some((b.from, b.to, z)),
                };
            }
            let excess = (upper / (b.factor * lower)).ln();
            if excess > worst_excess {
                worst_excess = excess;
                if excess > 0.0 {
                    worst_violation = Some((b.from, b.to, z));
                }
            }
            if upper > b.factor * lower * (1.0 + tol) {
                holds = false;
            }
        }
    }
    MechanismPrivacyOutcome { holds, worst_excess, worst_violation }
}

/// Check `k[x][z] <= e^{ell(d(x,x'))} k[x'][z] (1 + tol)` for all cell
/// pairs and outputs; reports the worst log-ratio excess.
pub fn check_mechanism_privacy(
    mech: &DiscreteMechanism,
    grid: &GeoGrid,
    ell: &DistinguishabilityFn,
    tol: f64,
) -> Result<MechanismPrivacyOutcome> {
    let n = grid.len();
    if mech.num_inputs() != n {
        return Err(Error::Dimension(format!(
            "mechanism has {} inputs for {n} cells",
            mech.num_inputs()
        )));
    }
    let distances = grid.cell_distance_matrix();
    let mut pairs = Vec::with_capacity(n * (n - 1));
    for from in 0..n {
        for to in 0..n {
            if from == to {
                continue;
            }
            match ell.eval(distances.get(from, to))? {
                Level::Infinite => {}
                Level::Finite(l) => pairs.push(RatioBound { from, to, factor: l.exp() }),
            }
        }
    }
    Ok(check_ratio_bounds(mech, &pairs, tol))
}

/// How [`laplace_on_grid`] computes row probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscretizationMethod {
    /// Quadrature for grids up to 100 cells, Monte Carlo beyond.
    Auto { seed: u64 },
    MonteCarlo { samples_per_row: usize, seed: u64 },
    Quadrature,
}

impl Default for DiscretizationMethod {
    fn default() -> Self {
        DiscretizationMethod::Auto { seed: 0 }
    }
}

/// Discretize the additive Laplace mechanism onto a grid: entry `(x, z)`
/// is the probability that `center(x) + noise` snaps to cell `z` under
/// [`GeoGrid::nearest_cell`]. Snap regions tile the plane (outside mass
/// goes to boundary cells), and rows are renormalized.
pub fn laplace_on_grid(
    mech: &PlanarLaplace,
    grid: &GeoGrid,
    method: DiscretizationMethod,
    exec: Execution,
) -> Result<DiscreteMechanism> {
    let rows: Vec<usize> = (0..grid.len()).collect();
    let rows = laplace_rows(mech, grid, &rows, method, exec)?;
    DiscreteMechanism::new(Matrix::from_rows(rows)?)
}

/// Rows of [`laplace_on_grid`] for a subset of input cells (sparse
/// priors only ever weight a few rows; the fine-grid pipeline exploits
/// that).
pub fn laplace_rows(
    mech: &PlanarLaplace,
    grid: &GeoGrid,
    input_cells: &[usize],
    method: DiscretizationMethod,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let method = match method {
        DiscretizationMethod::Auto { seed } => {
            if grid.len() <= 100 {
                DiscretizationMethod::Quadrature
            } else {
                DiscretizationMethod::MonteCarlo { samples_per_row: 100_000, seed }
            }
        }
        other => other,
    };
    match method {
        DiscretizationMethod::MonteCarlo { samples_per_row, seed } => {
            if samples_per_row == 0 {
                return Err(Error::config("need at least one sample per row"));
            }
            // Independent per-row streams, derived before the parallel
            // region so results do not depend on scheduling.
            let mut master = RngState::new(seed);
            let streams: Vec<RngState> =
                (0..input_cells.len()).map(|_| master.split()).collect();
            Ok(par::map_indexed(input_cells.len(), exec, |i| {
                let x = input_cells[i];
                let mut rng = streams[i];
                let mut counts = vec![0u32; grid.len()];
                let center = grid.center(x);
                for _ in 0..samples_per_row {
                    let p = mech.obfuscate(center, &mut rng);
                    counts[grid.nearest_cell(p)] += 1;
                }
                let inv = 1.0 / samples_per_row as f64;
                counts.into_iter().map(|c| c as f64 * inv).collect()
            }))
        }
        DiscretizationMethod::Quadrature => {
            let results = par::map_indexed(input_cells.len(), exec, |i| {
                quadrature_row(mech, grid, input_cells[i])
            });
            results.into_iter().collect()
        }
        DiscretizationMethod::Auto { .. } => unreachable!(),
    }
}

/// Angular mass density of the Laplace noise out to radius `rho`:
/// `(1/2pi) (1 - (1 + eps rho) e^{-eps rho})`.
fn angular_mass(eps: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    if rho.is_infinite() {
        return 1.0 / (2.0 * std::f64::consts::PI);
    }
    let er = eps * rho;
    (1.0 - (1.0 + er) * (-er).exp()) / (2.0 * std::f64::consts::PI)
}

/// Probability that `origin + noise` lands in the (possibly unbounded)
/// axis-aligned rectangle, integrating the radial CDF over the subtended
/// angles. Exact up to the 1-D quadrature tolerance; the snap region of
/// a boundary cell extends to infinity on its outer sides.
fn rect_mass(eps: f64, origin: crate::grid::Point, rect: &Rect) -> Result<f64> {
    // Breakpoints: angles of the finite corners plus the axis directions.
    let mut breaks = vec![
        0.0,
        std::f64::consts::FRAC_PI_2,
        std::f64::consts::PI,
        1.5 * std::f64::consts::PI,
    ];
    for &cx in &[rect.x0, rect.x1] {
        for &cy in &[rect.y0, rect.y1] {
            if cx.is_finite() && cy.is_finite() {
                let a = (cy - origin.y)
                    .atan2(cx - origin.x)
                    .rem_euclid(std::f64::consts::TAU);
                breaks.push(a);
            }
        }
    }
    let f = |theta: f64| {
        let (dx, dy) = (theta.cos(), theta.sin());
        let (mut t_in, mut t_out) = (0.0_f64, f64::INFINITY);
        for (p, d, lo, hi) in [
            (origin.x, dx, rect.x0, rect.x1),
            (origin.y, dy, rect.y0, rect.y1),
        ] {
            if d.abs() < 1e-14 {
                if p < lo || p > hi {
                    return 0.0;
                }
                continue;
            }
            let (mut a, mut b) = ((lo - p) / d, (hi - p) / d);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t_in = t_in.max(a);
            t_out = t_out.min(b);
        }
        if t_out <= t_in {
            return 0.0;
        }
        angular_mass(eps, t_out) - angular_mass(eps, t_in)
    };
    quad::integrate(f, 0.0, std::f64::consts::TAU, 1e-12, &breaks)
}

struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

fn quadrature_row(mech: &PlanarLaplace, grid: &GeoGrid, x: usize) -> Result<Vec<f64>> {
    let origin = grid.center(x);
    let (w, h) = grid.cell_size();
    let (cols, rows) = (grid.cols(), grid.rows());
    let mut out = Vec::with_capacity(grid.len());
    for z in 0..grid.len() {
        let (col, row) = (z % cols, z / cols);
        let rect = Rect {
            x0: if col == 0 { f64::NEG_INFINITY } else { col as f64 * w },
            x1: if col == cols - 1 { f64::INFINITY } else { (col + 1) as f64 * w },
            y0: if row == 0 { f64::NEG_INFINITY } else { row as f64 * h },
            y1: if row == rows - 1 { f64::INFINITY } else { (row + 1) as f64 * h },
        };
        out.push(rect_mass(mech.epsilon(), origin, &rect)?);
    }
    let total: f64 = out.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Numeric {
            msg: format!("snap-region masses sum to {total} for row {x}"),
            partial: Some(total),
        });
    }
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// A location-dependent mechanism that is feasible for `Linear(eps)`
/// budgets by construction: `k[x][z] ~ e^{-(eps/2) d(x, z)}`.
///
/// Feasibility: for any `x, x', z` the unnormalized ratio is
/// `e^{(eps/2)(d(x',z) - d(x,z))} <= e^{(eps/2) d(x,x')}` by the triangle
/// inequality, and the normalizers satisfy the same bound in the other
/// direction, so the full ratio stays within `e^{eps d(x,x')}`.
pub fn smoothed_mechanism(grid: &GeoGrid, eps: f64) -> Result<DiscreteMechanism> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {eps}")));
    }
    let n = grid.len();
    let d = grid.cell_distance_matrix();
    let mut k = Matrix::zeros(n, n);
    for x in 0..n {
        let mut sum = 0.0;
        for z in 0..n {
            let v = (-(eps / 2.0) * d.get(x, z)).exp();
            k.set(x, z, v);
            sum += v;
        }
        for z in 0..n {
            k.set(x, z, k.get(x, z) / sum);
        }
    }
    DiscreteMechanism::new(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;

    fn two_cell_grid(d: f64) -> GeoGrid {
        // A 2x1 grid whose centers are d km apart.
        let region = Region::new(0.0, 2.0 * d / 111.194926644, 0.0, 0.001).unwrap();
        GeoGrid::new(region, 1, 2).unwrap()
    }

    #[test]
    fn two_cell_closed_form() {
        let d = 5.0;
        let grid = two_cell_grid(d);
        let centers = grid.centers();
        let actual_d = centers[0].dist(centers[1]);
        assert!((actual_d - d).abs() < 1e-6, "distance {actual_d}");
        let eps = 0.3;
        let ell = DistinguishabilityFn::linear(eps).unwrap();
        let prior = Prior::uniform(2);
        let inst = build_lp(&grid, &prior, &ell, &LossFn::Linear).unwrap();
        assert_eq!(inst.inequality_count(), 4);
        assert_eq!(inst.equality_count(), 2);
        let sol = solve_lp(&inst, 1e-9).unwrap();
        let expected = actual_d / (1.0 + (eps * actual_d).exp());
        assert!(
            (sol.objective - expected).abs() < 1e-8,
            "objective {} vs {expected}",
            sol.objective
        );
        let diag = (eps * actual_d).exp() / (1.0 + (eps * actual_d).exp());
        assert!((sol.mechanism.prob(0, 0) - diag).abs() < 1e-8);
        assert!((sol.mechanism.prob(1, 1) - diag).abs() < 1e-8);
    }
}
