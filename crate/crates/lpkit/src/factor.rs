//! Sparse LU basis factorization for the simplex solver.
//!
//! Reinversion runs a right-looking Gaussian elimination with Markowitz-style
//! pivoting: each step pivots the sparsest active column, choosing within it
//! a row of near-maximal magnitude (threshold partial pivoting) and minimal
//! row count.  The factors are stored in elimination order and applied as
//! triangular solves, so transform cost tracks the true fill of the basis
//! instead of the much denser product form.  Between reinversions each
//! simplex pivot appends a product-form eta on top of the base factors.

/// Pivot magnitude below which a column is treated as dependent.
const SINGULAR_TOL: f64 = 1e-10;
/// Entries smaller than this are dropped when building factors.
const DROP_TOL: f64 = 1e-12;
/// A pivot must be at least this fraction of its column's largest entry.
const PIVOT_REL: f64 = 0.1;

/// One elementary transformation appended by a simplex pivot: pivot on
/// `row`, eliminating the other entries of the (already FTRAN-ed) column.
#[derive(Debug, Clone)]
struct Eta {
    row: u32,
    pivot: f64,
    /// Off-pivot nonzeros of the column, as (row, value).
    entries: Vec<(u32, f64)>,
}

/// One elimination step of the base factorization.
#[derive(Debug, Clone)]
struct Step {
    /// Original row this step pivots.
    row: u32,
    pivot: f64,
    /// Row eliminations `x[i] -= mult * x[row]`, as (row, mult).
    lower: Vec<(u32, f64)>,
    /// Surviving pivot-row entries on later pivots, as (step index, value).
    upper: Vec<(u32, f64)>,
}

/// Outcome of a reinversion: the factorization plus any basis repairs the
/// caller must mirror in its bookkeeping (dependent column -> slack swap).
#[derive(Debug)]
pub struct Refactored {
    /// Basic column at each row position, after repairs.
    pub basic_of_row: Vec<usize>,
    /// Columns that were ejected from the basis because they were linearly
    /// dependent, paired with the row whose slack must replace them.
    pub replaced: Vec<(usize, usize)>,
}

#[derive(Debug, Default)]
pub struct Factorization {
    m: usize,
    steps: Vec<Step>,
    /// Update etas appended since the last reinversion.
    etas: Vec<Eta>,
    scratch: Vec<f64>,
}

impl Factorization {
    pub fn new() -> Self {
        Factorization::default()
    }

    /// Etas appended by simplex pivots since the last reinversion.
    pub fn updates_since_refactor(&self) -> usize {
        self.etas.len()
    }

    /// (base steps, base nnz, update etas, update nnz) — fill diagnostics.
    pub fn fill_stats(&self) -> (usize, usize, usize, usize) {
        let base_nnz: usize =
            self.steps.iter().map(|s| s.lower.len() + s.upper.len()).sum();
        let upd_nnz: usize = self.etas.iter().map(|e| e.entries.len()).sum();
        (self.steps.len(), base_nnz, self.etas.len(), upd_nnz)
    }

    /// Rebuilds the factorization from scratch for the basis `basic`, where
    /// `col_of(j)` yields the sparse column of structural variable `j` and
    /// slack columns are identified by `slack_row(j) == Some(i)` (unit column
    /// `e_i`).  Dependent columns are replaced by the slack of an unpivoted
    /// row; the swaps are reported so the caller can fix variable statuses
    /// and reinvert again (a factorization with repairs is not usable).
    pub fn refactor(
        &mut self,
        m: usize,
        basic: &[usize],
        col_of: &dyn Fn(usize) -> Vec<(u32, f64)>,
        slack_row: &dyn Fn(usize) -> Option<usize>,
    ) -> Refactored {
        assert_eq!(basic.len(), m, "basis must have one column per row");
        self.m = m;
        self.steps.clear();
        self.etas.clear();
        self.scratch.clear();
        self.scratch.resize(m, 0.0);

        let mut e = Elimination::new(m, basic, col_of, slack_row);

        // Slack columns pivot their own row first: no elimination, no fill.
        for i in 0..m {
            if let Some(slot) = e.slack_slot[i] {
                e.retire_pivot(i, slot, 1.0, Vec::new(), basic, &mut self.steps);
            }
        }

        while let Some(c) = e.pick_column() {
            let live = e.live_rows(c);
            let col_max = live.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            if col_max < SINGULAR_TOL {
                e.eject_column(c, &live, basic);
                continue;
            }

            // Threshold partial pivoting: among rows with a large-enough
            // entry take the shortest, ties to the smallest row id.
            let mut pr = usize::MAX;
            let mut pr_count = usize::MAX;
            let mut pv = 0.0;
            for &(iu, v) in &live {
                let i = iu as usize;
                if v.abs() >= PIVOT_REL * col_max && e.rowcount[i] < pr_count {
                    pr_count = e.rowcount[i];
                    pr = i;
                    pv = v;
                }
            }

            let lower = e.eliminate(c, pr, pv, &live);
            e.retire_pivot(pr, c, pv, lower, basic, &mut self.steps);
        }

        e.finish(basic, &mut self.steps)
    }

    /// Appends the eta of a simplex pivot: the entering column `alpha`
    /// (already FTRAN-ed, dense) pivots at row `r`.
    pub fn push_pivot(&mut self, r: usize, alpha: &[f64]) {
        let mut entries = Vec::new();
        for (i, &v) in alpha.iter().enumerate() {
            if i != r && v.abs() > DROP_TOL {
                entries.push((i as u32, v));
            }
        }
        self.etas.push(Eta { row: r as u32, pivot: alpha[r], entries });
    }
}

/// Working state of one reinversion.
struct Elimination {
    m: usize,
    /// Active remainder of the matrix, by rows; columns are basis slots.
    rows: Vec<Vec<(u32, f64)>>,
    /// Slot of the slack column covering each row, if any.
    slack_slot: Vec<Option<usize>>,
    row_active: Vec<bool>,
    col_done: Vec<bool>,
    rowcount: Vec<usize>,
    colcount: Vec<usize>,
    /// Candidate rows per column; may hold stale or duplicate ids after
    /// cancellations and fill, verified on use.
    col_rows: Vec<Vec<u32>>,
    /// Lazy priority buckets over column counts; stale entries are skipped
    /// when popped, so every count change just pushes again.
    buckets: Vec<Vec<u32>>,
    bucket_floor: usize,
    col_to_step: Vec<u32>,
    basic_of_row: Vec<usize>,
    replaced: Vec<(usize, usize)>,
    /// Pivot-row remainders as (slot, value), remapped to step indices at
    /// the end once the full pivot order is known.
    upper_raw: Vec<Vec<(u32, f64)>>,
    // dense merge scratch
    work: Vec<f64>,
    marked: Vec<bool>,
}

impl Elimination {
    fn new(
        m: usize,
        basic: &[usize],
        col_of: &dyn Fn(usize) -> Vec<(u32, f64)>,
        slack_row: &dyn Fn(usize) -> Option<usize>,
    ) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
        let mut slack_slot: Vec<Option<usize>> = vec![None; m];
        for (slot, &j) in basic.iter().enumerate() {
            match slack_row(j) {
                Some(i) => {
                    debug_assert!(slack_slot[i].is_none(), "two slacks of one row");
                    slack_slot[i] = Some(slot);
                    rows[i].push((slot as u32, 1.0));
                }
                None => {
                    for (i, v) in col_of(j) {
                        rows[i as usize].push((slot as u32, v));
                    }
                }
            }
        }
        let rowcount: Vec<usize> = rows.iter().map(|r| r.len()).collect();
        let mut colcount = vec![0usize; m];
        let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); m];
        for (i, row) in rows.iter().enumerate() {
            for &(c, _) in row {
                colcount[c as usize] += 1;
                col_rows[c as usize].push(i as u32);
            }
        }
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); m + 1];
        for c in 0..m {
            buckets[colcount[c]].push(c as u32);
        }
        Elimination {
            m,
            rows,
            slack_slot,
            row_active: vec![true; m],
            col_done: vec![false; m],
            rowcount,
            colcount,
            col_rows,
            buckets,
            bucket_floor: 0,
            col_to_step: vec![u32::MAX; m],
            basic_of_row: vec![usize::MAX; m],
            replaced: Vec::new(),
            upper_raw: Vec::new(),
            work: vec![0.0; m],
            marked: vec![false; m],
        }
    }

    fn requeue(&mut self, c: usize) {
        let count = self.colcount[c];
        self.buckets[count].push(c as u32);
        if count < self.bucket_floor {
            self.bucket_floor = count;
        }
    }

    /// Sparsest active column, ties to the smallest slot; None when done.
    fn pick_column(&mut self) -> Option<usize> {
        while self.bucket_floor <= self.m {
            // Smallest slot among the bucket's live entries, so the pivot
            // order is deterministic despite lazy requeueing.
            let floor = self.bucket_floor;
            let mut best: Option<u32> = None;
            self.buckets[floor].retain(|&cu| {
                let c = cu as usize;
                if self.col_done[c] || self.colcount[c] != floor {
                    return false; // stale
                }
                if best.map_or(true, |b| cu < b) {
                    best = Some(cu);
                }
                true
            });
            match best {
                Some(cu) => return Some(cu as usize),
                None => self.bucket_floor += 1,
            }
        }
        None
    }

    /// Verified live rows of a column, with their values; compacts the
    /// candidate list as a side effect.
    fn live_rows(&mut self, c: usize) -> Vec<(u32, f64)> {
        let mut list = std::mem::take(&mut self.col_rows[c]);
        list.sort_unstable();
        list.dedup();
        let mut live: Vec<(u32, f64)> = Vec::with_capacity(list.len());
        for &iu in &list {
            let i = iu as usize;
            if !self.row_active[i] {
                continue;
            }
            if let Some(&(_, v)) =
                self.rows[i].iter().find(|&&(cc, _)| cc as usize == c)
            {
                live.push((iu, v));
            }
        }
        self.col_rows[c] = live.iter().map(|&(i, _)| i).collect();
        live
    }

    /// Removes a dependent column from play; its tiny entries no longer
    /// count toward row activity.
    fn eject_column(&mut self, c: usize, live: &[(u32, f64)], basic: &[usize]) {
        self.col_done[c] = true;
        self.colcount[c] = 0;
        for &(iu, _) in live {
            self.rowcount[iu as usize] -= 1;
        }
        self.replaced.push((basic[c], usize::MAX));
    }

    /// Subtracts multiples of pivot row `r` from the other live rows of
    /// column `c`, returning the multipliers.
    fn eliminate(
        &mut self,
        c: usize,
        r: usize,
        pv: f64,
        live: &[(u32, f64)],
    ) -> Vec<(u32, f64)> {
        let mut lower: Vec<(u32, f64)> = Vec::new();
        if live.len() <= 1 {
            return lower;
        }
        // Pivot row restricted to active columns other than the pivot's.
        let mut prow: Vec<(u32, f64)> = Vec::new();
        for &(cc, v) in &self.rows[r] {
            if !self.col_done[cc as usize] && cc as usize != c {
                prow.push((cc, v));
            }
        }
        for &(iu, vic) in live {
            let i = iu as usize;
            if i == r {
                continue;
            }
            let mult = vic / pv;
            lower.push((iu, mult));
            // row_i := row_i - mult * pivot row, dropping the pivot column
            // and anything below the drop tolerance.
            let mut touched: Vec<u32> = Vec::new();
            for &(cc, v) in &self.rows[i] {
                let cu = cc as usize;
                if self.col_done[cu] || cu == c {
                    continue;
                }
                self.work[cu] = v;
                self.marked[cu] = true;
                touched.push(cc);
            }
            for &(cc, v) in &prow {
                let cu = cc as usize;
                if !self.marked[cu] {
                    self.marked[cu] = true;
                    touched.push(cc);
                    // Fill-in: the column gains this row.
                    self.colcount[cu] += 1;
                    self.col_rows[cu].push(iu);
                    self.requeue(cu);
                }
                self.work[cu] -= mult * v;
            }
            let mut next = Vec::with_capacity(touched.len());
            for &cc in &touched {
                let cu = cc as usize;
                let v = self.work[cu];
                if v.abs() > DROP_TOL {
                    next.push((cc, v));
                } else {
                    // Cancellation: the column loses this row.
                    self.colcount[cu] -= 1;
                    self.requeue(cu);
                }
                self.work[cu] = 0.0;
                self.marked[cu] = false;
            }
            self.rowcount[i] = next.len();
            self.rows[i] = next;
        }
        lower
    }

    /// Records one pivot: retires its row and column, freezes the pivot-row
    /// remainder as the upper part, and updates the activity bookkeeping.
    fn retire_pivot(
        &mut self,
        r: usize,
        c: usize,
        pivot: f64,
        lower: Vec<(u32, f64)>,
        basic: &[usize],
        steps: &mut Vec<Step>,
    ) {
        let row = std::mem::take(&mut self.rows[r]);
        let mut upper: Vec<(u32, f64)> = Vec::new();
        for &(cc, v) in &row {
            let cu = cc as usize;
            if !self.col_done[cu] && cu != c {
                upper.push((cc, v));
                self.colcount[cu] -= 1;
                self.requeue(cu);
            }
        }
        self.row_active[r] = false;
        self.col_done[c] = true;
        self.colcount[c] = 0;
        self.col_to_step[c] = steps.len() as u32;
        self.basic_of_row[r] = basic[c];
        steps.push(Step { row: r as u32, pivot, lower, upper: Vec::new() });
        self.upper_raw.push(upper);
    }

    /// Remaps pivot-row entries to step indices and pairs every unpivoted
    /// row with one ejected column (its slack will take the slot).  Entries
    /// on dependent slots belong to a factorization the caller is about to
    /// rebuild, so they are dropped.
    fn finish(mut self, _basic: &[usize], steps: &mut [Step]) -> Refactored {
        for (step, raw) in steps.iter_mut().zip(self.upper_raw) {
            step.upper = raw
                .into_iter()
                .filter_map(|(slot, v)| {
                    let k = self.col_to_step[slot as usize];
                    (k != u32::MAX).then_some((k, v))
                })
                .collect();
        }
        if !self.replaced.is_empty() {
            let mut free_rows: Vec<usize> =
                (0..self.m).filter(|&i| self.row_active[i]).collect();
            for entry in self.replaced.iter_mut() {
                let row = free_rows.pop().expect("one free row per dependent column");
                entry.1 = row;
            }
        }
        Refactored { basic_of_row: self.basic_of_row, replaced: self.replaced }
    }
}

impl Factorization {
    /// In-place forward transform: `x := B^{-1} x` for a dense vector.
    pub fn ftran(&mut self, x: &mut [f64]) {
        for st in &self.steps {
            let t = x[st.row as usize];
            if t == 0.0 {
                continue;
            }
            for &(i, mult) in &st.lower {
                x[i as usize] -= mult * t;
            }
        }
        // Back substitution; z is indexed by elimination step.
        let z = &mut self.scratch;
        for k in (0..self.steps.len()).rev() {
            let st = &self.steps[k];
            let mut acc = x[st.row as usize];
            for &(j, u) in &st.upper {
                acc -= u * z[j as usize];
            }
            z[k] = acc / st.pivot;
        }
        for (k, st) in self.steps.iter().enumerate() {
            x[st.row as usize] = z[k];
        }
        for eta in &self.etas {
            let r = eta.row as usize;
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            let t = xr / eta.pivot;
            x[r] = t;
            for &(i, v) in &eta.entries {
                x[i as usize] -= v * t;
            }
        }
    }

    /// In-place backward transform: `y := B^{-T} y` for a dense vector.
    pub fn btran(&mut self, y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let r = eta.row as usize;
            let mut acc = y[r];
            for &(i, v) in &eta.entries {
                acc -= v * y[i as usize];
            }
            y[r] = acc / eta.pivot;
        }
        // Solve U^T w = y in step order (scatter form), then apply the
        // transposed eliminations in reverse.
        let z = &mut self.scratch;
        for (k, st) in self.steps.iter().enumerate() {
            z[k] = y[st.row as usize];
        }
        for k in 0..self.steps.len() {
            let st = &self.steps[k];
            let wk = z[k] / st.pivot;
            z[k] = wk;
            if wk != 0.0 {
                for &(j, u) in &st.upper {
                    z[j as usize] -= u * wk;
                }
            }
        }
        for (k, st) in self.steps.iter().enumerate() {
            y[st.row as usize] = z[k];
        }
        for k in (0..self.steps.len()).rev() {
            let st = &self.steps[k];
            let mut acc = y[st.row as usize];
            for &(i, mult) in &st.lower {
                acc -= mult * y[i as usize];
            }
            y[st.row as usize] = acc;
        }
    }
}
