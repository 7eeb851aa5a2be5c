//! Revised simplex over sparse columns with a block-structured basis.
//!
//! Solves `min c'x  s.t.  A x = b, x >= 0` from a caller-supplied
//! primal-feasible starting basis. Columns are sparse; rows carry a
//! block id. Any basis then splits into columns local to one block and
//! "border" columns spanning several, and factorizes as independent
//! per-block eliminations plus a small dense Schur complement on the
//! border — the dominant cost for the mechanism LPs, whose duals have
//! one block per output cell and only the row-sum multipliers crossing
//! blocks. A single-block problem degrades to plain dense LU.
//!
//! Pivoting is deterministic: Dantzig pricing with lowest-index tie
//! breaks, switching to Bland's rule during long degenerate streaks so
//! cycling terminates, and back once progress resumes.

use crate::error::{Error, Result};

/// Sparse column: `(row, value)` pairs with strictly increasing rows.
#[derive(Debug, Clone)]
pub struct SparseColumn {
    pub entries: Vec<(usize, f64)>,
}

impl SparseColumn {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        SparseColumn { entries }
    }
}

/// `min c'x  s.t.  A x = b, x >= 0` in column-major sparse form.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub num_rows: usize,
    pub costs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub columns: Vec<SparseColumn>,
    /// Block id of each row; ids must be dense in `0..num_blocks`.
    pub row_block: Vec<usize>,
    pub num_blocks: usize,
    /// Free (sign-unrestricted) columns. They must be part of the
    /// initial basis; the ratio test never selects them to leave, so
    /// they stay basic for the whole solve. Empty means none.
    pub is_free: Vec<bool>,
    /// Optional column family ids with per-family basic-count caps.
    /// A family collects columns that become exactly linearly dependent
    /// with the free columns when all of them are basic (the capped
    /// completion provably has zero reduced cost, so the cap never cuts
    /// off progress). Empty means no families.
    pub family: Vec<Option<u32>>,
    pub family_cap: Vec<u32>,
}

impl StandardLp {
    /// A problem with no exploitable row structure: one block.
    pub fn single_block(
        num_rows: usize,
        costs: Vec<f64>,
        rhs: Vec<f64>,
        columns: Vec<SparseColumn>,
    ) -> Self {
        StandardLp {
            num_rows,
            costs,
            rhs,
            columns,
            row_block: vec![0; num_rows],
            num_blocks: 1,
            is_free: Vec::new(),
            family: Vec::new(),
            family_cap: Vec::new(),
        }
    }

    fn col_is_free(&self, j: usize) -> bool {
        self.is_free.get(j).copied().unwrap_or(false)
    }

    fn col_family(&self, j: usize) -> Option<u32> {
        self.family.get(j).copied().flatten()
    }

    fn column_block(&self, col: &SparseColumn) -> Option<usize> {
        let mut block = None;
        for &(row, _) in &col.entries {
            match block {
                None => block = Some(self.row_block[row]),
                Some(b) if b == self.row_block[row] => {}
                Some(_) => return None,
            }
        }
        block
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-8,
            max_iterations: 200_000,
            refactor_every: 48,
            bland_after: 200,
        }
    }
}

/// Hard floor below which a direction entry can never pivot.
const PIVOT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    /// Basic column per basis position.
    pub basis: Vec<usize>,
    /// Value of each basic variable (same order as `basis`).
    pub x_basic: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y` with `B' y = c_B` at the final basis.
    pub row_multipliers: Vec<f64>,
    pub iterations: usize,
}

impl SimplexOutcome {
    /// Dense solution vector over all columns.
    pub fn solution(&self, num_cols: usize) -> Vec<f64> {
        let mut x = vec![0.0; num_cols];
        for (pos, &col) in self.basis.iter().enumerate() {
            x[col] = self.x_basic[pos];
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Basis factorization
// ---------------------------------------------------------------------------

/// Per-block elimination state.
struct BlockElim {
    /// Global row ids of this block, fixed order.
    rows: Vec<usize>,
    /// `order[i]` = local row occupying permuted slot `i`; slots
    /// `0..n_local` are pivot rows.
    order: Vec<usize>,
    /// Basis positions of this block's local columns, elimination order.
    local_positions: Vec<usize>,
    /// Dense `s x n_local` working matrix: `U` above the diagonal of the
    /// pivot rows, multipliers `L` below (LAPACK layout), in original
    /// local row indexing (permutation lives in `order`).
    d: Vec<f64>,
    /// Dense `s x q` border part after the same row operations:
    /// `W` in the pivot rows, Schur rows below.
    m: Vec<f64>,
    n_local: usize,
    s: usize,
}

struct BlockFactor {
    blocks: Vec<BlockElim>,
    /// Basis positions of border columns, elimination order.
    border_positions: Vec<usize>,
    /// Dense LU of the Schur complement with partial pivoting.
    schur: Vec<f64>,
    schur_perm: Vec<usize>,
    q: usize,
    /// Schur row -> (block index, permuted slot) gather map.
    schur_rows: Vec<(usize, usize)>,
    num_rows: usize,
}

impl BlockFactor {
    /// Factorize with the standard pivot threshold, falling back to a
    /// looser one: a basis reached through validated pivots is
    /// nonsingular, but ill-conditioned column mixes can push the best
    /// remaining pivot below the strict threshold, and the caller's
    /// post-solve certificates catch any accuracy this costs.
    fn build(lp: &StandardLp, basis: &[usize]) -> Result<Self> {
        match Self::build_with_threshold(lp, basis, 1e-11) {
            Ok(f) => Ok(f),
            Err(_) => Self::build_with_threshold(lp, basis, 1e-14),
        }
    }

    fn build_with_threshold(lp: &StandardLp, basis: &[usize], min_pivot: f64) -> Result<Self> {
        let m = lp.num_rows;
        debug_assert_eq!(basis.len(), m);

        let mut block_rows: Vec<Vec<usize>> = vec![Vec::new(); lp.num_blocks];
        for row in 0..m {
            block_rows[lp.row_block[row]].push(row);
        }
        let mut row_local: Vec<usize> = vec![0; m];
        for rows in &block_rows {
            for (i, &r) in rows.iter().enumerate() {
                row_local[r] = i;
            }
        }

        let mut local_positions: Vec<Vec<usize>> = vec![Vec::new(); lp.num_blocks];
        let mut border_positions: Vec<usize> = Vec::new();
        for (pos, &col) in basis.iter().enumerate() {
            match lp.column_block(&lp.columns[col]) {
                Some(b) => local_positions[b].push(pos),
                None => border_positions.push(pos),
            }
        }
        let q = border_positions.len();

        let mut blocks = Vec::with_capacity(lp.num_blocks);
        for b in 0..lp.num_blocks {
            let rows = std::mem::take(&mut block_rows[b]);
            let s = rows.len();
            let locals = std::mem::take(&mut local_positions[b]);
            let n_local = locals.len();
            if n_local > s {
                return Err(Error::Solver {
                    msg: format!(
                        "singular basis: block {b} has {n_local} local columns for {s} rows"
                    ),
                    best_incumbent: None,
                });
            }
            let mut d = vec![0.0; s * n_local];
            for (j, &pos) in locals.iter().enumerate() {
                for &(row, v) in &lp.columns[basis[pos]].entries {
                    d[row_local[row] * n_local + j] = v;
                }
            }
            let mut mm = vec![0.0; s * q];
            for (j, &pos) in border_positions.iter().enumerate() {
                for &(row, v) in &lp.columns[basis[pos]].entries {
                    if lp.row_block[row] == b {
                        mm[row_local[row] * q + j] = v;
                    }
                }
            }
            blocks.push(BlockElim {
                rows,
                order: (0..s).collect(),
                local_positions: locals,
                d,
                m: mm,
                n_local,
                s,
            });
        }

        // Per-block elimination with partial pivoting on the local part.
        for (b, blk) in blocks.iter_mut().enumerate() {
            let (s, n, qw) = (blk.s, blk.n_local, q);
            for t in 0..n {
                let mut best = t;
                let mut best_val = 0.0;
                for i in t..s {
                    let v = blk.d[blk.order[i] * n + t].abs();
                    if v > best_val {
                        best_val = v;
                        best = i;
                    }
                }
                if best_val < min_pivot {
                    return Err(Error::Solver {
                        msg: format!("singular basis in block {b} at pivot {t}"),
                        best_incumbent: None,
                    });
                }
                blk.order.swap(t, best);
                let piv_row = blk.order[t];
                let piv = blk.d[piv_row * n + t];
                for i in (t + 1)..s {
                    let row = blk.order[i];
                    let l = blk.d[row * n + t] / piv;
                    blk.d[row * n + t] = l;
                    if l != 0.0 {
                        for k in (t + 1)..n {
                            blk.d[row * n + k] -= l * blk.d[piv_row * n + k];
                        }
                        for k in 0..qw {
                            blk.m[row * qw + k] -= l * blk.m[piv_row * qw + k];
                        }
                    }
                }
            }
        }

        // Schur complement on the border columns.
        let mut schur_rows = Vec::with_capacity(q);
        for (bi, blk) in blocks.iter().enumerate() {
            for slot in blk.n_local..blk.s {
                schur_rows.push((bi, slot));
            }
        }
        if schur_rows.len() != q {
            return Err(Error::Solver {
                msg: format!(
                    "singular basis: {} leftover rows for {q} border columns",
                    schur_rows.len()
                ),
                best_incumbent: None,
            });
        }
        let mut schur = vec![0.0; q * q];
        for (i, &(bi, slot)) in schur_rows.iter().enumerate() {
            let blk = &blocks[bi];
            let row = blk.order[slot];
            schur[i * q..(i + 1) * q].copy_from_slice(&blk.m[row * q..(row + 1) * q]);
        }
        let mut schur_perm: Vec<usize> = (0..q).collect();
        for t in 0..q {
            let mut best = t;
            let mut best_val = 0.0;
            for i in t..q {
                let v = schur[schur_perm[i] * q + t].abs();
                if v > best_val {
                    best_val = v;
                    best = i;
                }
            }
            if best_val < min_pivot {
                return Err(Error::Solver {
                    msg: format!("singular basis: Schur pivot {t} below tolerance"),
                    best_incumbent: None,
                });
            }
            schur_perm.swap(t, best);
            let piv_row = schur_perm[t];
            let piv = schur[piv_row * q + t];
            for i in (t + 1)..q {
                let row = schur_perm[i];
                let l = schur[row * q + t] / piv;
                schur[row * q + t] = l;
                if l != 0.0 {
                    for k in (t + 1)..q {
                        schur[row * q + k] -= l * schur[piv_row * q + k];
                    }
                }
            }
        }

        Ok(BlockFactor {
            blocks,
            border_positions,
            schur,
            schur_perm,
            q,
            schur_rows,
            num_rows: m,
        })
    }

    /// Solve `B u = rhs` (rhs indexed by row); `u` indexed by basis position.
    fn ftran(&self, rhs: &[f64]) -> Vec<f64> {
        let q = self.q;
        // Forward eliminate within each block.
        let mut v: Vec<Vec<f64>> = self
            .blocks
            .iter()
            .map(|blk| blk.rows.iter().map(|&r| rhs[r]).collect::<Vec<f64>>())
            .collect();
        for (blk, vb) in self.blocks.iter().zip(v.iter_mut()) {
            let n = blk.n_local;
            for t in 0..n {
                let piv_row = blk.order[t];
                let val = vb[piv_row];
                if val != 0.0 {
                    for i in (t + 1)..blk.s {
                        let row = blk.order[i];
                        vb[row] -= blk.d[row * n + t] * val;
                    }
                }
            }
        }
        // Schur solve for the border values.
        let rhs_s: Vec<f64> = self
            .schur_rows
            .iter()
            .map(|&(bi, slot)| v[bi][self.blocks[bi].order[slot]])
            .collect();
        let u_border = self.solve_schur(&rhs_s);
        // Back substitution per block.
        let mut u = vec![0.0; self.num_rows];
        for (bi, blk) in self.blocks.iter().enumerate() {
            let n = blk.n_local;
            let vb = &v[bi];
            let mut local = vec![0.0; n];
            for t in (0..n).rev() {
                let row = blk.order[t];
                let mut acc = vb[row];
                for k in 0..q {
                    let w = blk.m[row * q + k];
                    if w != 0.0 {
                        acc -= w * u_border[k];
                    }
                }
                for k in (t + 1)..n {
                    acc -= blk.d[row * n + k] * local[k];
                }
                local[t] = acc / blk.d[row * n + t];
            }
            for (t, &pos) in blk.local_positions.iter().enumerate() {
                u[pos] = local[t];
            }
        }
        for (k, &pos) in self.border_positions.iter().enumerate() {
            u[pos] = u_border[k];
        }
        u
    }

    /// Solve `B' y = c_basis` where `c_basis` is indexed by basis
    /// position; `y` is indexed by row.
    fn btran(&self, c_basis: &[f64]) -> Vec<f64> {
        let q = self.q;
        // U' w_top = c_local per block (forward substitution).
        let mut w_top: Vec<Vec<f64>> = Vec::with_capacity(self.blocks.len());
        for blk in &self.blocks {
            let n = blk.n_local;
            let mut w = vec![0.0; n];
            for t in 0..n {
                let mut acc = c_basis[blk.local_positions[t]];
                for k in 0..t {
                    acc -= blk.d[blk.order[k] * n + t] * w[k];
                }
                w[t] = acc / blk.d[blk.order[t] * n + t];
            }
            w_top.push(w);
        }
        // S' w_bot = c_border - W' w_top.
        let mut rhs_s: Vec<f64> = self
            .border_positions
            .iter()
            .map(|&pos| c_basis[pos])
            .collect();
        for (bi, blk) in self.blocks.iter().enumerate() {
            let n = blk.n_local;
            for t in 0..n {
                let row = blk.order[t];
                let w = w_top[bi][t];
                if w != 0.0 {
                    for k in 0..q {
                        rhs_s[k] -= blk.m[row * q + k] * w;
                    }
                }
            }
        }
        let w_bot = self.solve_schur_transposed(&rhs_s);
        // L' z = w: bottom slots come straight from w_bot, then the unit
        // lower-triangular transpose solved upward per block.
        let mut y = vec![0.0; self.num_rows];
        for (bi, blk) in self.blocks.iter().enumerate() {
            let n = blk.n_local;
            let mut z = vec![0.0; blk.s];
            let mut schur_k = 0usize;
            for (k, &(b2, slot)) in self.schur_rows.iter().enumerate() {
                if b2 == bi {
                    z[slot] = w_bot[k];
                    schur_k += 1;
                }
            }
            debug_assert_eq!(schur_k, blk.s - n);
            for t in (0..n).rev() {
                let mut acc = w_top[bi][t];
                for i in (t + 1)..blk.s {
                    let row = blk.order[i];
                    let l = blk.d[row * n + t];
                    if l != 0.0 {
                        acc -= l * z[i];
                    }
                }
                z[t] = acc;
            }
            for (slot, &zi) in z.iter().enumerate() {
                y[blk.rows[blk.order[slot]]] = zi;
            }
        }
        y
    }

    fn solve_schur(&self, rhs: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut v: Vec<f64> = self.schur_perm.iter().map(|&p| rhs[p]).collect();
        for t in 0..q {
            let val = v[t];
            if val != 0.0 {
                for i in (t + 1)..q {
                    v[i] -= self.schur[self.schur_perm[i] * q + t] * val;
                }
            }
        }
        let mut x = vec![0.0; q];
        for t in (0..q).rev() {
            let mut acc = v[t];
            for k in (t + 1)..q {
                acc -= self.schur[self.schur_perm[t] * q + k] * x[k];
            }
            x[t] = acc / self.schur[self.schur_perm[t] * q + t];
        }
        x
    }

    /// Solve `S' x = rhs` reusing the `P S = L U` factors:
    /// `S' P' = U' L'`, so solve `U' a = rhs`, then `L' b = a`, then
    /// scatter `x = P' b`.
    fn solve_schur_transposed(&self, rhs: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut a = vec![0.0; q];
        for t in 0..q {
            let mut acc = rhs[t];
            for k in 0..t {
                acc -= self.schur[self.schur_perm[k] * q + t] * a[k];
            }
            a[t] = acc / self.schur[self.schur_perm[t] * q + t];
        }
        for t in (0..q).rev() {
            let mut acc = a[t];
            for i in (t + 1)..q {
                acc -= self.schur[self.schur_perm[i] * q + t] * a[i];
            }
            a[t] = acc;
        }
        let mut x = vec![0.0; q];
        for (slot, &p) in self.schur_perm.iter().enumerate() {
            x[p] = a[slot];
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Product-form eta updates between refactorizations
// ---------------------------------------------------------------------------

struct Eta {
    pivot_pos: usize,
    w: Vec<f64>,
}

struct Basis {
    factor: BlockFactor,
    etas: Vec<Eta>,
}

impl Basis {
    fn new(lp: &StandardLp, basis: &[usize]) -> Result<Self> {
        Ok(Basis {
            factor: BlockFactor::build(lp, basis)?,
            etas: Vec::new(),
        })
    }

    fn ftran(&self, rhs: &[f64]) -> Vec<f64> {
        let mut u = self.factor.ftran(rhs);
        for eta in &self.etas {
            let p = eta.pivot_pos;
            let up = u[p] / eta.w[p];
            if up != 0.0 {
                for (i, &wi) in eta.w.iter().enumerate() {
                    if wi != 0.0 && i != p {
                        u[i] -= wi * up;
                    }
                }
            }
            u[p] = up;
        }
        u
    }

    fn btran(&self, c_basis: &[f64]) -> Vec<f64> {
        let mut c = c_basis.to_vec();
        for eta in self.etas.iter().rev() {
            let p = eta.pivot_pos;
            let mut dot = 0.0;
            for (i, &wi) in eta.w.iter().enumerate() {
                if wi != 0.0 && i != p {
                    dot += wi * c[i];
                }
            }
            c[p] = (c[p] - dot) / eta.w[p];
        }
        self.factor.btran(&c)
    }

    fn push_eta(&mut self, pivot_pos: usize, w: Vec<f64>) {
        self.etas.push(Eta { pivot_pos, w });
    }
}

// ---------------------------------------------------------------------------
// The simplex loop
// ---------------------------------------------------------------------------

pub fn solve(
    lp: &StandardLp,
    initial_basis: Vec<usize>,
    opts: &SimplexOptions,
) -> Result<SimplexOutcome> {
    let m = lp.num_rows;
    if initial_basis.len() != m {
        return Err(Error::Dimension(format!(
            "basis has {} columns for {m} rows",
            initial_basis.len()
        )));
    }
    let n = lp.columns.len();
    let mut basis = initial_basis;
    let mut basis_pos: Vec<Option<u32>> = vec![None; n];
    for (pos, &col) in basis.iter().enumerate() {
        basis_pos[col] = Some(pos as u32);
    }

    // Structural bookkeeping: a block of s rows can hold at most s
    // basic columns local to it. An exchange that would exceed that
    // creates a provably singular basis (the direction entry that
    // permitted it was numerical noise), so such pivots are ineligible
    // regardless of tolerance.
    let col_block: Vec<Option<usize>> = lp.columns.iter().map(|c| lp.column_block(c)).collect();
    let mut block_size = vec![0usize; lp.num_blocks];
    for row in 0..m {
        block_size[lp.row_block[row]] += 1;
    }
    let mut local_count = vec![0usize; lp.num_blocks];
    for &col in &basis {
        if let Some(b) = col_block[col] {
            local_count[b] += 1;
        }
    }
    let mut family_count = vec![0u32; lp.family_cap.len()];
    for &col in &basis {
        if let Some(f) = lp.col_family(col) {
            family_count[f as usize] += 1;
        }
    }

    let mut engine = Basis::new(lp, &basis)?;
    let mut x_basic = engine.ftran(&lp.rhs);
    if x_basic.iter().any(|&v| v < -opts.feasibility_tol) {
        return Err(Error::Solver {
            msg: "initial basis is not primal feasible".into(),
            best_incumbent: None,
        });
    }
    let mut snapshot = basis.clone();

    let mut degenerate_streak = 0usize;
    let mut bland = false;
    let mut iterations = 0usize;
    // While positive, every pivot is validated by an immediate
    // refactorization (entered after a rollback).
    let mut exact_countdown = 0usize;
    let mut banned_cols: Vec<bool> = vec![false; n];
    let mut any_banned_col = false;

    'outer: loop {
        if iterations >= opts.max_iterations {
            let obj: f64 = basis
                .iter()
                .zip(&x_basic)
                .map(|(&c, x)| lp.costs[c] * x)
                .sum();
            return Err(Error::Solver {
                msg: format!("iteration cap {} exceeded", opts.max_iterations),
                best_incumbent: Some(obj),
            });
        }

        let c_basis: Vec<f64> = basis.iter().map(|&c| lp.costs[c]).collect();
        let y = engine.btran(&c_basis);

        'pricing: loop {
            // Pricing. Columns banned in this round led to numerically
            // dependent exchanges on every available pivot row.
            let mut entering: Option<usize> = None;
            let mut best_reduced = -opts.optimality_tol;
            for (j, col) in lp.columns.iter().enumerate() {
                if basis_pos[j].is_some() || banned_cols[j] {
                    continue;
                }
                if let Some(f) = lp.col_family(j) {
                    // A full family is exactly dependent with the free
                    // columns; its true reduced cost is zero.
                    if family_count[f as usize] >= lp.family_cap[f as usize] {
                        continue;
                    }
                }
                let mut dot = 0.0;
                for &(row, v) in &col.entries {
                    dot += y[row] * v;
                }
                let d = lp.costs[j] - dot;
                if d < best_reduced {
                    best_reduced = d;
                    entering = Some(j);
                    if bland {
                        break;
                    }
                }
            }
            let Some(q_col) = entering else {
                if any_banned_col {
                    return Err(Error::Solver {
                        msg: "stalled: every improving column pivots into a \
                              numerically singular basis"
                            .into(),
                        best_incumbent: Some(
                            basis.iter().zip(&x_basic).map(|(&c, x)| lp.costs[c] * x).sum(),
                        ),
                    });
                }
                // Optimal: rebuild fresh factors for clean certificates.
                let factor = match BlockFactor::build(lp, &basis) {
                    Ok(f) => f,
                    Err(_) => {
                        rollback(
                            lp,
                            &snapshot,
                            &mut basis,
                            &mut basis_pos,
                            &mut local_count,
                            &mut family_count,
                            &col_block,
                            &mut engine,
                            &mut x_basic,
                            opts,
                        )?;
                        exact_countdown = opts.refactor_every.max(1);
                        continue 'outer;
                    }
                };
                let x = factor.ftran(&lp.rhs);
                let c_b: Vec<f64> = basis.iter().map(|&c| lp.costs[c]).collect();
                let y_final = factor.btran(&c_b);
                let objective = c_b.iter().zip(&x).map(|(c, v)| c * v).sum();
                return Ok(SimplexOutcome {
                    basis,
                    x_basic: x,
                    objective,
                    row_multipliers: y_final,
                    iterations,
                });
            };

            // Direction through the basis.
            let mut a_col = vec![0.0; m];
            for &(row, v) in &lp.columns[q_col].entries {
                a_col[row] = v;
            }
            let w = engine.ftran(&a_col);

            let entering_block = col_block[q_col];
            let mut banned_rows: Vec<bool> = Vec::new();
            'rows: loop {
                let leave = choose_leaving(
                    &w,
                    &x_basic,
                    &basis,
                    bland,
                    opts,
                    |p| {
                        if lp.col_is_free(basis[p]) {
                            return false; // free columns never leave
                        }
                        if !banned_rows.is_empty() && banned_rows[p] {
                            return false;
                        }
                        match entering_block {
                            Some(b) => {
                                col_block[basis[p]] == Some(b)
                                    || local_count[b] + 1 <= block_size[b]
                            }
                            None => true,
                        }
                    },
                );
                let Some(p_pos) = leave else {
                    if banned_rows.is_empty() {
                        return Err(Error::Solver {
                            msg: "objective unbounded below (no blocking variable)".into(),
                            best_incumbent: None,
                        });
                    }
                    // Every usable pivot row for this column was noise.
                    banned_cols[q_col] = true;
                    any_banned_col = true;
                    continue 'pricing;
                };

                // Tentative exchange.
                let leaving_col = basis[p_pos];
                if let Some(b) = col_block[leaving_col] {
                    local_count[b] -= 1;
                }
                if let Some(b) = col_block[q_col] {
                    local_count[b] += 1;
                }
                if let Some(f) = lp.col_family(leaving_col) {
                    family_count[f as usize] -= 1;
                }
                if let Some(f) = lp.col_family(q_col) {
                    family_count[f as usize] += 1;
                }
                basis_pos[leaving_col] = None;
                basis_pos[q_col] = Some(p_pos as u32);
                basis[p_pos] = q_col;

                let validate_now =
                    exact_countdown > 0 || engine.etas.len() + 1 >= opts.refactor_every;
                if validate_now {
                    match Basis::new(lp, &basis) {
                        Ok(fresh) => {
                            engine = fresh;
                            x_basic = engine.ftran(&lp.rhs);
                            for v in &mut x_basic {
                                if *v < 0.0 && *v > -opts.feasibility_tol {
                                    *v = 0.0;
                                }
                            }
                            snapshot.clone_from(&basis);
                            exact_countdown = exact_countdown.saturating_sub(1);
                        }
                        Err(_) => {
                            // The pivot entry was numerical noise: the
                            // exchange produced a singular basis. Undo
                            // and try the next row.
                            basis[p_pos] = leaving_col;
                            basis_pos[q_col] = None;
                            basis_pos[leaving_col] = Some(p_pos as u32);
                            if let Some(b) = col_block[leaving_col] {
                                local_count[b] += 1;
                            }
                            if let Some(b) = col_block[q_col] {
                                local_count[b] -= 1;
                            }
                            if let Some(f) = lp.col_family(leaving_col) {
                                family_count[f as usize] += 1;
                            }
                            if let Some(f) = lp.col_family(q_col) {
                                family_count[f as usize] -= 1;
                            }
                            if banned_rows.is_empty() {
                                banned_rows = vec![false; m];
                            }
                            banned_rows[p_pos] = true;
                            exact_countdown = exact_countdown.max(opts.refactor_every.max(1));
                            continue 'rows;
                        }
                    }
                } else {
                    let step = (x_basic[p_pos].max(0.0) / w[p_pos]).max(0.0);
                    for (i, &wi) in w.iter().enumerate() {
                        if wi != 0.0 {
                            x_basic[i] -= step * wi;
                            if x_basic[i] < 0.0 && x_basic[i] > -opts.feasibility_tol {
                                x_basic[i] = 0.0;
                            }
                        }
                    }
                    x_basic[p_pos] = step;
                    engine.push_eta(p_pos, w.clone());
                }

                let step_for_streak = (x_basic[p_pos]).max(0.0);
                if step_for_streak <= opts.pivot_tol {
                    degenerate_streak += 1;
                    if degenerate_streak >= opts.bland_after {
                        bland = true;
                    }
                } else {
                    degenerate_streak = 0;
                    bland = false;
                }
                banned_cols.iter_mut().for_each(|b| *b = false);
                any_banned_col = false;
                iterations += 1;
                continue 'outer;
            }
        }
    }
}

/// Restore a previously factorizable basis after a failed rebuild.
#[allow(clippy::too_many_arguments)]
fn rollback(
    lp: &StandardLp,
    snapshot: &[usize],
    basis: &mut Vec<usize>,
    basis_pos: &mut Vec<Option<u32>>,
    local_count: &mut Vec<usize>,
    family_count: &mut Vec<u32>,
    col_block: &[Option<usize>],
    engine: &mut Basis,
    x_basic: &mut Vec<f64>,
    opts: &SimplexOptions,
) -> Result<()> {
    basis.clear();
    basis.extend_from_slice(snapshot);
    basis_pos.iter_mut().for_each(|p| *p = None);
    for (pos, &col) in basis.iter().enumerate() {
        basis_pos[col] = Some(pos as u32);
    }
    local_count.iter_mut().for_each(|c| *c = 0);
    for &col in basis.iter() {
        if let Some(b) = col_block[col] {
            local_count[b] += 1;
        }
    }
    family_count.iter_mut().for_each(|c| *c = 0);
    for &col in basis.iter() {
        if let Some(f) = lp.col_family(col) {
            family_count[f as usize] += 1;
        }
    }
    *engine = Basis::new(lp, basis)?;
    *x_basic = engine.ftran(&lp.rhs);
    for v in x_basic.iter_mut() {
        if *v < 0.0 && *v > -opts.feasibility_tol {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Ratio test. Outside Bland mode: two passes (bound the step within
/// the feasibility tolerance, then the numerically strongest pivot
/// inside the bound), with a weak-pivot fallback before reporting no
/// blocking variable. In Bland mode: exact minimum ratio, ties to the
/// lowest variable index.
fn choose_leaving(
    w: &[f64],
    x_basic: &[f64],
    basis: &[usize],
    bland: bool,
    opts: &SimplexOptions,
    admissible: impl Fn(usize) -> bool,
) -> Option<usize> {
    let m = w.len();
    let mut leave: Option<usize> = None;
    if bland {
        let mut best_ratio = f64::INFINITY;
        for p in 0..m {
            if w[p] > PIVOT_FLOOR && admissible(p) {
                let ratio = x_basic[p].max(0.0) / w[p];
                let better = match leave {
                    None => true,
                    Some(cur) => {
                        ratio < best_ratio - 1e-12
                            || (ratio <= best_ratio + 1e-12 && basis[p] < basis[cur])
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(p);
                }
            }
        }
        return leave;
    }
    let mut theta = f64::INFINITY;
    for p in 0..m {
        if w[p] > opts.pivot_tol && admissible(p) {
            theta = theta.min((x_basic[p].max(0.0) + opts.feasibility_tol) / w[p]);
        }
    }
    if theta.is_finite() {
        let mut best_w = 0.0;
        for p in 0..m {
            if w[p] > opts.pivot_tol
                && admissible(p)
                && x_basic[p].max(0.0) / w[p] <= theta
                && w[p] > best_w
            {
                best_w = w[p];
                leave = Some(p);
            }
        }
    } else {
        let mut best_ratio = f64::INFINITY;
        for p in 0..m {
            if w[p] > PIVOT_FLOOR && admissible(p) {
                let ratio = x_basic[p].max(0.0) / w[p];
                if ratio < best_ratio - 1e-12
                    || (ratio <= best_ratio + 1e-12 && leave.map_or(true, |cur| w[p] > w[cur]))
                {
                    best_ratio = ratio;
                    leave = Some(p);
                }
            }
        }
    }
    leave
}
