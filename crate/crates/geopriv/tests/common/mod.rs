//! Shared test oracles, independent of the code paths they check.

use geopriv::lp::RatioBound;
use geopriv::mechanism::Matrix;

/// All compositions of `steps` probability units over `n` outputs:
/// the resolution-`1/steps` grid on the probability simplex.
pub fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fill(&mut out, &mut current, 0, steps, steps);
    out
}

fn fill(out: &mut Vec<Vec<f64>>, current: &mut Vec<usize>, idx: usize, left: usize, steps: usize) {
    if idx == current.len() - 1 {
        current[idx] = left;
        out.push(current.iter().map(|&u| u as f64 / steps as f64).collect());
        return;
    }
    for take in 0..=left {
        current[idx] = take;
        fill(out, current, idx + 1, left - take, steps);
    }
}

/// `true` when rows `a` (as inputs `x`) and `b` (as `x'`) satisfy every
/// ratio constraint between them, in both directions, at every output.
fn rows_compatible(a: &[f64], b: &[f64], factor_ab: f64, factor_ba: f64) -> bool {
    const SLACK: f64 = 1e-12;
    for z in 0..a.len() {
        if a[z] > factor_ab * b[z] + SLACK {
            return false;
        }
        if b[z] > factor_ba * a[z] + SLACK {
            return false;
        }
    }
    true
}

/// Exhaustive minimum of the mechanism objective over the feasibility
/// grid at resolution `1/steps`: best-first depth-first search over
/// rows. Per depth, candidates are visited in increasing own-cost
/// order, so the objective bound turns into a break and the search
/// stays exact. Only sensible for up to 4 cells.
pub fn brute_force_min(cost: &Matrix, pairs: &[RatioBound], steps: usize) -> f64 {
    let n = cost.nrows();
    let candidates = simplex_grid(n, steps);
    let row_cost = |x: usize, row: &[f64]| -> f64 {
        row.iter().enumerate().map(|(z, &k)| k * cost.get(x, z)).sum()
    };
    // Per-depth visit order sorted by that row's cost contribution, and
    // the lower bound any remaining row must pay (its cheapest candidate).
    let mut orders: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut costs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for x in 0..n {
        let c: Vec<f64> = candidates.iter().map(|cand| row_cost(x, cand)).collect();
        let mut order: Vec<u32> = (0..candidates.len() as u32).collect();
        order.sort_by(|&a, &b| c[a as usize].partial_cmp(&c[b as usize]).unwrap());
        orders.push(order);
        costs.push(c);
    }
    let row_lower: Vec<f64> = costs
        .iter()
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let mut factor = vec![vec![f64::INFINITY; n]; n];
    for b in pairs {
        factor[b.from][b.to] = b.factor;
    }

    let search = Search { candidates, orders, costs, row_lower, factor, n };
    let mut best = f64::INFINITY;
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    search.dfs(&mut chosen, 0, 0.0, &mut best);
    best
}

struct Search {
    candidates: Vec<Vec<f64>>,
    orders: Vec<Vec<u32>>,
    costs: Vec<Vec<f64>>,
    row_lower: Vec<f64>,
    factor: Vec<Vec<f64>>,
    n: usize,
}

impl Search {
    fn dfs(&self, chosen: &mut Vec<usize>, depth: usize, partial: f64, best: &mut f64) {
        if depth == self.n {
            if partial < *best {
                *best = partial;
            }
            return;
        }
        let tail_after: f64 = self.row_lower[depth + 1..].iter().sum();
        'cand: for &ci in &self.orders[depth] {
            let ci = ci as usize;
            let c = partial + self.costs[depth][ci];
            if c + tail_after >= *best {
                break; // later candidates only cost more
            }
            let cand = &self.candidates[ci];
            for (prev_x, &prev_ci) in chosen.iter().enumerate() {
                if !rows_compatible(
                    &self.candidates[prev_ci],
                    cand,
                    self.factor[prev_x][depth],
                    self.factor[depth][prev_x],
                ) {
                    continue 'cand;
                }
            }
            chosen.push(ci);
            self.dfs(chosen, depth + 1, c, best);
            chosen.pop();
        }
    }
}

/// The 2-cell oracle from the closed-form setting: search symmetric
/// stochastic matrices `[[a, 1-a], [1-a, a]]` on an `1/steps` grid for
/// the feasible minimum of the expected loss.
pub fn symmetric_two_cell_min(d: f64, g: f64, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let a = i as f64 / steps as f64;
        let b = 1.0 - a;
        if a <= g * b + 1e-15 && b <= g * a + 1e-15 {
            // uniform prior, linear loss: objective (1 - a) d.
            let obj = b * d;
            if obj < best {
                best = obj;
            }
        }
    }
    best
}
