//! Bounded-variable primal simplex with exact basis duals.
//!
//! Two-phase method: infeasible bases are driven feasible by a composite
//! phase-1 objective (unit cost per violated basic bound, re-priced every
//! iteration), then phase 2 minimizes the real objective.  Pricing is
//! Dantzig's rule.  The ratio test is a two-pass Harris test: pass one finds
//! the tolerance-relaxed step, pass two picks the largest pivot among
//! blockers within that step.
//!
//! Anti-cycling: highly degenerate models (many basic variables sitting
//! exactly on their bounds) can trap the iteration in zero-step pivots.  When
//! the merit function stalls long enough, every finite bound is shifted
//! outward by a tiny deterministic pseudorandom amount, which breaks ratio
//! ties and forces strictly positive steps; at the perturbed optimum the true
//! bounds are restored and the solve continues to genuine optimality.  Each
//! stall burns one perturbation round with a fresh offset pattern; after the
//! last round the solver falls back to Bland's rule for the remainder.
//!
//! Duals follow the shadow-price convention: `duals[i]` is the rate of change
//! of the optimal objective per unit increase of row `i`'s right-hand side
//! (non-negative for binding `>=` rows, non-positive for binding `<=` rows in
//! a minimization).

use crate::factor::Factorization;
use crate::model::{ModelSystem, Sense};
use std::fmt;

/// Hard zero for ratio-test column entries.
const ZERO_TOL: f64 = 1e-11;
/// Pivots below this magnitude amplify roundoff through the eta file; the
/// ratio test prefers other blockers, and when one must be taken anyway the
/// factorization is rebuilt immediately after.
const PIVOT_ACCEPT: f64 = 1e-7;
/// Relative size of the anti-degeneracy bound shift.
const PERTURB_SCALE: f64 = 1e-6;
/// Relative size of the anti-degeneracy cost tilt.  Models whose columns
/// share identical objective coefficients (or carry none at all) have huge
/// optimal faces; distinct tilted costs collapse the face to a vertex, and
/// the solve finishes on the true costs once the tilted optimum is reached.
const COST_PERTURB: f64 = 1e-5;
/// Perturbation rounds to try before falling back to Bland's rule.
const MAX_PERTURB_ROUNDS: usize = 8;

/// Nearest power of two, for bit-exact equilibration factors.
fn pow2_round(s: f64) -> f64 {
    if s.is_finite() && s > 0.0 {
        (s.log2().round()).exp2()
    } else {
        1.0
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic fraction in [0.5, 1.5) keyed by column, round, and side.
fn perturb_fraction(col: usize, round: usize, side: u64) -> f64 {
    let h = splitmix64((col as u64) ^ ((round as u64) << 40) ^ (side << 62));
    0.5 + (h >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Variable statuses for all columns (structurals first, then one slack per
/// row).  A basis from one solve can warm-start another on a system with the
/// same columns and a superset of the rows.
#[derive(Debug, Clone)]
pub struct Basis(pub Vec<VarStatus>);

#[derive(Debug, Clone)]
pub struct LpConfig {
    /// Primal feasibility tolerance on bounds and rows.
    pub feasibility_tol: f64,
    /// Dual feasibility (optimality) tolerance on reduced costs.
    pub optimality_tol: f64,
    /// Harris ratio-test bound relaxation.
    pub ratio_tol: f64,
    /// Refactorize after this many pivots.
    pub refactor_every: usize,
    /// Hard iteration cap; 0 means "derive from model size".
    pub iteration_limit: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            ratio_tol: 1e-9,
            refactor_every: 100,
            iteration_limit: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Values of the structural variables.
    pub primal: Vec<f64>,
    /// One dual per row (shadow-price convention); exact at optimal bases.
    pub duals: Vec<f64>,
    /// Reduced cost per structural variable.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub basis: Basis,
}

/// Unrecoverable numerical trouble (singular bases that repair cannot fix,
/// or tolerance cleanup that refuses to converge).
#[derive(Debug, Clone)]
pub struct LpError(pub String);

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numerical failure in simplex: {}", self.0)
    }
}

impl std::error::Error for LpError {}

pub fn solve_lp(sys: &ModelSystem) -> Result<LpSolution, LpError> {
    solve_lp_with(sys, &LpConfig::default(), None)
}

pub fn solve_lp_with(
    sys: &ModelSystem,
    cfg: &LpConfig,
    warm: Option<&Basis>,
) -> Result<LpSolution, LpError> {
    Worker::new(sys, cfg, warm).run()
}

struct Worker<'a> {
    sys: &'a ModelSystem,
    cfg: LpConfig,
    n: usize,
    m: usize,
    ncols: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Unperturbed bounds; `lower`/`upper` deviate from these only while
    /// `perturbed` is set.
    true_lower: Vec<f64>,
    true_upper: Vec<f64>,
    cost: Vec<f64>,
    /// Untilted costs (scaled units); `cost` deviates from these only while
    /// `cost_perturbed` is set.
    true_cost: Vec<f64>,
    /// Structural columns, row-index/value pairs.
    cols: Vec<Vec<(u32, f64)>>,
    rhs: Vec<f64>,
    status: Vec<VarStatus>,
    /// Basic column at each row position.
    basic: Vec<usize>,
    x: Vec<f64>,
    factor: Factorization,
    pivots_since_refactor: usize,
    iterations: usize,
    iteration_limit: usize,
    /// Terminal Dantzig -> Bland switch once perturbation rounds run out.
    bland: bool,
    stall: usize,
    last_merit: f64,
    /// Phase the last merit was measured in; merits from different phases
    /// are incomparable, so a phase flip never counts as progress.
    last_phase: bool,
    /// Bounds currently carry an anti-degeneracy shift.
    perturbed: bool,
    /// Costs currently carry an anti-degeneracy tilt.
    cost_perturbed: bool,
    perturb_rounds: usize,
    /// A compatible warm basis was installed.
    warm_started: bool,
    /// Devex reference weights, one per column (meaningful while nonbasic).
    weights: Vec<f64>,
    /// Columns whose ratio test found only hopeless pivots on a fresh
    /// factorization; skipped by pricing until the basis next changes.
    banned: Vec<bool>,
    banned_any: bool,
    /// Equilibration factors (powers of two, exact in floating point).  The
    /// worker operates entirely on the scaled data; `finish` maps the point
    /// back.  Slack columns keep coefficient 1 by absorbing the row factor
    /// into the slack value, which leaves their `{0, +-inf}` bounds intact.
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    // TEMP DIAG counters
    st_zero: usize,
    st_tiny: usize,
    st_real: usize,
    st_flip: usize,
    st_bad: usize,
    /// Reduced costs, maintained incrementally by the dual iteration and
    /// rebuilt at every refactorization.
    d: Vec<f64>,
    // scratch vectors (length m)
    alpha: Vec<f64>,
    y: Vec<f64>,
    rho: Vec<f64>,
}

impl<'a> Worker<'a> {
    fn new(sys: &'a ModelSystem, cfg: &LpConfig, warm: Option<&Basis>) -> Self {
        let n = sys.num_vars();
        let m = sys.num_rows();
        let ncols = n + m;
        let mut lower = Vec::with_capacity(ncols);
        let mut upper = Vec::with_capacity(ncols);
        let mut cost = vec![0.0; ncols];
        for (j, v) in sys.vars().iter().enumerate() {
            lower.push(v.lower);
            upper.push(v.upper);
            cost[j] = v.obj;
        }
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let mut rhs = Vec::with_capacity(m);
        for (i, r) in sys.rows().iter().enumerate() {
            rhs.push(r.rhs);
            for &(j, a) in &r.coeffs {
                cols[j].push((i as u32, a));
            }
            let (sl, su) = match r.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(sl);
            upper.push(su);
        }

        // Geometric-mean equilibration, factors rounded to powers of two so
        // the scaled coefficients stay bit-exact.  Mixed magnitudes (unit
        // indicator coefficients against bandwidth-sized capacities) stretch
        // degenerate vertex clusters and starve the ratio test of decent
        // pivots; equilibration collapses those magnitude gaps.
        let mut row_scale = vec![1.0f64; m];
        let mut col_scale = vec![1.0f64; n];
        for _ in 0..3 {
            for (j, col) in cols.iter().enumerate() {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for &(i, a) in col {
                    let v = (a * row_scale[i as usize] * col_scale[j]).abs();
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if hi > 0.0 {
                    col_scale[j] *= pow2_round(1.0 / (lo * hi).sqrt());
                }
            }
            let mut lo = vec![f64::INFINITY; m];
            let mut hi = vec![0.0f64; m];
            for (j, col) in cols.iter().enumerate() {
                for &(i, a) in col {
                    let v = (a * row_scale[i as usize] * col_scale[j]).abs();
                    let i = i as usize;
                    lo[i] = lo[i].min(v);
                    hi[i] = hi[i].max(v);
                }
            }
            for i in 0..m {
                if hi[i] > 0.0 {
                    row_scale[i] *= pow2_round(1.0 / (lo[i] * hi[i]).sqrt());
                }
            }
        }
        for (j, col) in cols.iter_mut().enumerate() {
            for (i, a) in col.iter_mut() {
                *a *= row_scale[*i as usize] * col_scale[j];
            }
            // x'_j = x_j / c_j keeps every product a'_ij x'_j unchanged.
            lower[j] /= col_scale[j];
            upper[j] /= col_scale[j];
            cost[j] *= col_scale[j];
        }
        for i in 0..m {
            rhs[i] *= row_scale[i];
        }

        // Statuses: warm basis if its shape is compatible, else slack basis.
        let mut status = vec![VarStatus::AtLower; ncols];
        let warm_ok = warm.map_or(false, |b| {
            b.0.len() == ncols && b.0.iter().filter(|s| **s == VarStatus::Basic).count() == m
        });
        if let Some(b) = warm.filter(|_| warm_ok) {
            status.copy_from_slice(&b.0);
            // A nonbasic variable must sit on a finite bound.
            for j in 0..ncols {
                match status[j] {
                    VarStatus::AtLower if lower[j].is_finite() => {}
                    VarStatus::AtUpper if upper[j].is_finite() => {}
                    VarStatus::Basic => {}
                    VarStatus::AtLower => status[j] = VarStatus::AtUpper,
                    VarStatus::AtUpper => status[j] = VarStatus::AtLower,
                }
            }
        } else {
            for i in 0..m {
                status[n + i] = VarStatus::Basic;
            }
        }

        let iteration_limit = if cfg.iteration_limit > 0 {
            cfg.iteration_limit
        } else {
            10_000 + 20 * (n + m)
        };

        Worker {
            sys,
            cfg: cfg.clone(),
            n,
            m,
            ncols,
            true_lower: lower.clone(),
            true_upper: upper.clone(),
            lower,
            upper,
            true_cost: cost.clone(),
            cost,
            cols,
            rhs,
            status,
            basic: Vec::new(),
            x: vec![0.0; ncols],
            factor: Factorization::new(),
            pivots_since_refactor: 0,
            iterations: 0,
            iteration_limit,
            bland: false,
            stall: 0,
            last_merit: f64::INFINITY,
            last_phase: true,
            perturbed: false,
            cost_perturbed: false,
            perturb_rounds: 0,
            warm_started: warm_ok,
            weights: vec![1.0; ncols],
            banned: vec![false; ncols],
            banned_any: false,
            row_scale,
            col_scale,
            st_zero: 0,
            st_tiny: 0,
            st_real: 0,
            st_flip: 0,
            st_bad: 0,
            d: vec![0.0; ncols],
            alpha: vec![0.0; m],
            y: vec![0.0; m],
            rho: vec![0.0; m],
        }
    }

    fn slack_row(&self, j: usize) -> Option<usize> {
        if j >= self.n {
            Some(j - self.n)
        } else {
            None
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let basic: Vec<usize> = (0..self.ncols)
            .filter(|&j| self.status[j] == VarStatus::Basic)
            .collect();
        if basic.len() != self.m {
            return Err(LpError(format!(
                "basis has {} columns for {} rows",
                basic.len(),
                self.m
            )));
        }
        let cols = &self.cols;
        let n = self.n;
        let col_of = move |j: usize| cols[j].clone();
        let res = self.factor.refactor(self.m, &basic, &col_of, &|j| {
            if j >= n {
                Some(j - n)
            } else {
                None
            }
        });
        self.basic = res.basic_of_row;
        for &(bad, row) in &res.replaced {
            // Dependent column leaves the basis for the nearest finite bound;
            // the row's slack takes its place.
            let l = self.lower[bad];
            let u = self.upper[bad];
            self.status[bad] = if (self.x[bad] - l).abs() <= (u - self.x[bad]).abs() {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
            let slack = self.n + row;
            self.status[slack] = VarStatus::Basic;
            self.basic[row] = slack;
        }
        if !res.replaced.is_empty() {
            // The eta file was built without the substituted slacks; rebuild.
            let basic2: Vec<usize> = (0..self.ncols)
                .filter(|&j| self.status[j] == VarStatus::Basic)
                .collect();
            let cols = &self.cols;
            let col_of2 = move |j: usize| cols[j].clone();
            let res2 = self.factor.refactor(self.m, &basic2, &col_of2, &|j| {
                if j >= n {
                    Some(j - n)
                } else {
                    None
                }
            });
            if !res2.replaced.is_empty() {
                return Err(LpError("basis repair failed to produce an invertible basis".into()));
            }
            self.basic = res2.basic_of_row;
        }
        self.pivots_since_refactor = 0;
        // TEMP DIAG
        if std::env::var("LPKIT_FILL").is_ok() {
            let (be, bn, ue, un) = self.factor.fill_stats();
            eprintln!(
                "refactor@it={}: base {} etas / {} nnz, updates {} etas / {} nnz",
                self.iterations, be, bn, ue, un
            );
        }
        Ok(())
    }

    /// Recomputes nonbasic values from statuses and basic values from the
    /// factorization.
    fn compute_x(&mut self) {
        for j in 0..self.ncols {
            match self.status[j] {
                VarStatus::AtLower => self.x[j] = self.lower[j],
                VarStatus::AtUpper => self.x[j] = self.upper[j],
                VarStatus::Basic => {}
            }
        }
        let mut r = self.rhs.clone();
        for j in 0..self.ncols {
            if self.status[j] == VarStatus::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            match self.slack_row(j) {
                Some(i) => r[i] -= xj,
                None => {
                    for &(i, a) in &self.cols[j] {
                        r[i as usize] -= a * xj;
                    }
                }
            }
        }
        self.factor.ftran(&mut r);
        for (row, &j) in self.basic.iter().enumerate() {
            self.x[j] = r[row];
        }
    }

    /// Shifts every finite bound outward by a tiny deterministic amount so
    /// degenerate ratio ties disappear and each pivot makes strict progress.
    /// The shift pattern changes with the round counter, so a repeat stall
    /// gets a different tie-breaking.  Positions are recomputed so nonbasic
    /// variables sit on the shifted bounds.
    fn apply_perturbation(&mut self) {
        self.perturb_rounds += 1;
        let round = self.perturb_rounds;
        for j in 0..self.ncols {
            let l = self.true_lower[j];
            let u = self.true_upper[j];
            if l.is_finite() {
                self.lower[j] =
                    l - PERTURB_SCALE * (1.0 + l.abs()) * perturb_fraction(j, round, 0);
            }
            if u.is_finite() {
                self.upper[j] =
                    u + PERTURB_SCALE * (1.0 + u.abs()) * perturb_fraction(j, round, 1);
            }
        }
        self.perturbed = true;
        self.apply_cost_perturbation();
        self.compute_x();
    }

    /// Tilts the structural costs by tiny distinct amounts.  Safe for any
    /// primal-feasible starting point — it never touches the bounds.
    fn apply_cost_perturbation(&mut self) {
        let round = self.perturb_rounds;
        for j in 0..self.n {
            let c = self.true_cost[j];
            self.cost[j] =
                c + COST_PERTURB * (1.0 + c.abs()) * perturb_fraction(j, round, 2);
        }
        self.cost_perturbed = true;
        self.banned.fill(false);
        self.banned_any = false;
        self.stall = 0;
        self.last_merit = f64::INFINITY;
    }

    /// Puts the true bounds and costs back after a perturbed solve reached
    /// its optimum; the basis is kept and iteration resumes to true
    /// optimality.
    fn restore_perturbation(&mut self) -> Result<(), LpError> {
        if self.perturbed {
            self.lower.copy_from_slice(&self.true_lower);
            self.upper.copy_from_slice(&self.true_upper);
            self.perturbed = false;
        }
        if self.cost_perturbed {
            self.cost.copy_from_slice(&self.true_cost);
            self.cost_perturbed = false;
        }
        self.banned.fill(false);
        self.banned_any = false;
        self.refactor()?;
        self.compute_x();
        self.stall = 0;
        self.last_merit = f64::INFINITY;
        Ok(())
    }

    /// Phase-1 cost of a basic column: sign of its bound violation.
    fn infeas_cost(&self, j: usize) -> f64 {
        let t = self.cfg.feasibility_tol;
        if self.x[j] > self.upper[j] + t {
            1.0
        } else if self.x[j] < self.lower[j] - t {
            -1.0
        } else {
            0.0
        }
    }

    fn max_basic_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for &j in &self.basic {
            worst = worst.max(self.x[j] - self.upper[j]).max(self.lower[j] - self.x[j]);
        }
        worst
    }

    fn sum_infeasibility(&self) -> f64 {
        let mut s = 0.0;
        for &j in &self.basic {
            s += (self.x[j] - self.upper[j]).max(0.0) + (self.lower[j] - self.x[j]).max(0.0);
        }
        s
    }

    /// y = B^{-T} c_B for the active phase.
    fn compute_duals(&mut self, phase1: bool) {
        for row in 0..self.m {
            let j = self.basic[row];
            self.y[row] = if phase1 { self.infeas_cost(j) } else { self.cost[j] };
        }
        self.factor.btran(&mut self.y);
    }

    fn reduced_cost(&self, j: usize, phase1: bool) -> f64 {
        let cj = if phase1 { 0.0 } else { self.cost[j] };
        let ya = match self.slack_row(j) {
            Some(i) => self.y[i],
            None => self.cols[j].iter().map(|&(i, a)| a * self.y[i as usize]).sum(),
        };
        cj - ya
    }

    /// Picks the entering column: Some((col, direction)) or None at
    /// (phase-wise) optimality.  Scoring is Devex: squared reduced cost over
    /// the reference weight, which approximates progress per unit step and
    /// steers out of degenerate clusters far faster than Dantzig's rule.
    fn price(&self, phase1: bool) -> Option<(usize, f64)> {
        let dtol = self.cfg.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None; // (col, dir, score)
        for j in 0..self.ncols {
            if self.banned[j] {
                continue;
            }
            let (dir, viol) = match self.status[j] {
                VarStatus::Basic => continue,
                VarStatus::AtLower => {
                    if self.upper[j] - self.lower[j] <= 0.0 {
                        continue; // fixed
                    }
                    let d = self.reduced_cost(j, phase1);
                    if d < -dtol {
                        (1.0, -d)
                    } else {
                        continue;
                    }
                }
                VarStatus::AtUpper => {
                    if self.upper[j] - self.lower[j] <= 0.0 {
                        continue;
                    }
                    let d = self.reduced_cost(j, phase1);
                    if d > dtol {
                        (-1.0, d)
                    } else {
                        continue;
                    }
                }
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = viol * viol / self.weights[j];
            match best {
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((j, dir, score)),
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Devex reference-weight update for a pivot at `row` with entering
    /// column `enter` (alpha already holds B^{-1} a_enter).  Needs the
    /// pre-pivot factorization, so it runs before the basis changes.
    fn update_devex_weights(&mut self, enter: usize, row: usize) {
        let piv = self.alpha[row];
        if piv == 0.0 {
            return;
        }
        let wq = self.weights[enter].max(1.0);
        let ratio_base = wq / (piv * piv);
        for v in self.rho.iter_mut() {
            *v = 0.0;
        }
        self.rho[row] = 1.0;
        self.factor.btran(&mut self.rho);
        let mut overflow = false;
        for j in 0..self.ncols {
            if self.status[j] == VarStatus::Basic || j == enter {
                continue;
            }
            let arj = match self.slack_row(j) {
                Some(i) => self.rho[i],
                None => {
                    self.cols[j].iter().map(|&(i, a)| a * self.rho[i as usize]).sum()
                }
            };
            if arj != 0.0 {
                let cand = arj * arj * ratio_base;
                if cand > self.weights[j] {
                    self.weights[j] = cand;
                    overflow |= cand > 1e8;
                }
            }
        }
        // The leaving variable takes the textbook weight of the new frame.
        let leave = self.basic[row];
        self.weights[leave] = ratio_base.max(1.0);
        // Drifted weights lose their meaning; restart the reference frame.
        if overflow {
            for w in self.weights.iter_mut() {
                *w = 1.0;
            }
        }
    }

    /// Exact smallest-index ratio test used while Bland's rule is active:
    /// no Harris slack, ties broken by the smallest basic-variable index,
    /// and no pivot-size rejection — anti-cycling needs the exact blocker
    /// (the main loop refactorizes right after a numerically small pivot).
    /// Degenerate ratios are exactly zero because leaving variables are
    /// snapped onto their bounds, so the exact tie-break is meaningful.
    fn ratio_test_bland(&self, dir: f64, span: f64, phase1: bool) -> RatioOutcome {
        let ftol = self.cfg.feasibility_tol;
        let mut leave: Option<(usize, f64, bool, usize)> = None; // (row, t, to_upper, basic j)
        for row in 0..self.m {
            let a = self.alpha[row];
            if a.abs() <= ZERO_TOL {
                continue;
            }
            let j = self.basic[row];
            let delta = -dir * a;
            let (l, u, xj) = (self.lower[j], self.upper[j], self.x[j]);
            let (t, to_upper) = if phase1 && xj > u + ftol {
                if delta < 0.0 {
                    ((xj - u) / -delta, true)
                } else {
                    continue;
                }
            } else if phase1 && xj < l - ftol {
                if delta > 0.0 {
                    ((l - xj) / delta, false)
                } else {
                    continue;
                }
            } else if delta > ZERO_TOL {
                if u.is_finite() {
                    ((u - xj) / delta, true)
                } else {
                    continue;
                }
            } else if delta < -ZERO_TOL {
                if l.is_finite() {
                    ((xj - l) / -delta, false)
                } else {
                    continue;
                }
            } else {
                continue;
            };
            let t = t.max(0.0);
            let better = match leave {
                None => true,
                Some((_, bt, _, bj)) => t < bt || (t == bt && j < bj),
            };
            if better {
                leave = Some((row, t, to_upper, j));
            }
        }
        match leave {
            Some((row, t, to_upper, _)) if t < span => {
                RatioOutcome::Pivot { step: t, row, to_upper }
            }
            Some(_) => RatioOutcome::BoundFlip { step: span },
            None => {
                if span.is_finite() {
                    RatioOutcome::BoundFlip { step: span }
                } else {
                    RatioOutcome::Unbounded
                }
            }
        }
    }

    /// Harris two-pass ratio test.  Returns the step, and the blocking row if
    /// the step ends in a pivot rather than a bound flip.
    fn ratio_test(&self, enter: usize, dir: f64, phase1: bool) -> RatioOutcome {
        let span = self.upper[enter] - self.lower[enter];
        if self.bland {
            return self.ratio_test_bland(dir, span, phase1);
        }
        let harris = self.cfg.ratio_tol;
        let ftol = self.cfg.feasibility_tol;

        // Pass 1: relaxed maximum step.
        let mut tmax = span; // possibly infinite
        for row in 0..self.m {
            let a = self.alpha[row];
            if a.abs() <= ZERO_TOL {
                continue;
            }
            let j = self.basic[row];
            let delta = -dir * a; // movement of basic j per unit step
            let (l, u, xj) = (self.lower[j], self.upper[j], self.x[j]);
            let limit = if phase1 && xj > u + ftol {
                if delta < 0.0 {
                    (xj - u + harris) / -delta
                } else {
                    continue;
                }
            } else if phase1 && xj < l - ftol {
                if delta > 0.0 {
                    (l - xj + harris) / delta
                } else {
                    continue;
                }
            } else if delta > ZERO_TOL {
                if u.is_finite() {
                    (u - xj + harris) / delta
                } else {
                    continue;
                }
            } else if delta < -ZERO_TOL {
                if l.is_finite() {
                    (xj - l + harris) / -delta
                } else {
                    continue;
                }
            } else {
                continue;
            };
            if limit < tmax {
                tmax = limit;
            }
        }
        if tmax.is_infinite() {
            return RatioOutcome::Unbounded;
        }

        // Pass 2: among acceptable blockers within tmax choose the largest
        // pivot.  Blockers with hopeless pivot magnitudes don't compete; if
        // only those exist the caller must recover (refactor or try another
        // entering column) rather than poison the eta file.
        let mut leave: Option<(usize, f64, f64, bool)> = None;
        let mut saw_blocker = false;
        for row in 0..self.m {
            let a = self.alpha[row];
            if a.abs() <= ZERO_TOL {
                continue;
            }
            let j = self.basic[row];
            let delta = -dir * a;
            let (l, u, xj) = (self.lower[j], self.upper[j], self.x[j]);
            let (strict, to_upper) = if phase1 && xj > u + ftol {
                if delta < 0.0 {
                    ((xj - u) / -delta, true)
                } else {
                    continue;
                }
            } else if phase1 && xj < l - ftol {
                if delta > 0.0 {
                    ((l - xj) / delta, false)
                } else {
                    continue;
                }
            } else if delta > ZERO_TOL {
                if u.is_finite() {
                    ((u - xj) / delta, true)
                } else {
                    continue;
                }
            } else if delta < -ZERO_TOL {
                if l.is_finite() {
                    ((xj - l) / -delta, false)
                } else {
                    continue;
                }
            } else {
                continue;
            };
            if strict <= tmax {
                saw_blocker = true;
                if a.abs() >= PIVOT_ACCEPT {
                    let better = match leave {
                        None => true,
                        Some((_, _, pa, _)) => a.abs() > pa,
                    };
                    if better {
                        leave = Some((row, strict.max(0.0), a.abs(), to_upper));
                    }
                }
            }
        }
        match leave {
            Some((row, t, _, to_upper)) => {
                if span <= t {
                    RatioOutcome::BoundFlip { step: span }
                } else {
                    RatioOutcome::Pivot { step: t, row, to_upper }
                }
            }
            None if saw_blocker => RatioOutcome::BadPivot,
            None => {
                if span.is_finite() {
                    RatioOutcome::BoundFlip { step: span }
                } else {
                    RatioOutcome::Unbounded
                }
            }
        }
    }

    fn apply_step(&mut self, enter: usize, dir: f64, step: f64) {
        if step != 0.0 {
            self.x[enter] += dir * step;
            for row in 0..self.m {
                let a = self.alpha[row];
                if a != 0.0 {
                    let j = self.basic[row];
                    self.x[j] -= dir * step * a;
                }
            }
        }
    }

    /// Reduced costs of every column at the current basis: one btran plus
    /// one pass over the matrix.
    fn recompute_reduced(&mut self) {
        self.compute_duals(false);
        for j in 0..self.ncols {
            self.d[j] = if self.status[j] == VarStatus::Basic {
                0.0
            } else {
                self.reduced_cost(j, false)
            };
        }
    }

    /// Sign feasibility of the maintained reduced costs.  Columns fixed in
    /// the original model are free to carry any sign.
    fn dual_feasible(&self, tol: f64) -> bool {
        (0..self.ncols).all(|j| match self.status[j] {
            VarStatus::Basic => true,
            _ if self.true_upper[j] - self.true_lower[j] <= 0.0 => true,
            VarStatus::AtLower => self.d[j] >= -tol,
            VarStatus::AtUpper => self.d[j] <= tol,
        })
    }

    /// Cost tilt that cannot break dual feasibility: every nonbasic
    /// structural column is nudged further into its feasible sign
    /// (AtLower upward, AtUpper downward), which simultaneously repairs
    /// reduced costs sitting just inside the tolerance and breaks the
    /// ratio-test ties that stall a dual walk.  Basic columns are left
    /// alone so the duals — and with them every other reduced cost — do
    /// not move at all.
    fn apply_dual_tilt(&mut self) {
        for j in 0..self.n {
            let eps = COST_PERTURB
                * (1.0 + self.true_cost[j].abs())
                * perturb_fraction(j, self.perturb_rounds, 2);
            match self.status[j] {
                VarStatus::Basic => {}
                VarStatus::AtLower => {
                    self.cost[j] += eps;
                    self.d[j] += eps;
                }
                VarStatus::AtUpper => {
                    self.cost[j] -= eps;
                    self.d[j] -= eps;
                }
            }
        }
        self.cost_perturbed = true;
    }

    /// Dual simplex with bound flipping.  Requires the maintained reduced
    /// costs to be sign-feasible on entry; keeps them that way (numerically
    /// hopeless breakpoints are shifted past with tiny cost adjustments,
    /// which the perturbation-restore pass later cleans up).  Returns
    /// `Ok(None)` when the iteration cannot make progress and the primal
    /// loop should take over from the current basis — always safe, since
    /// the primal handles arbitrary starting points.
    ///
    /// Why a dual iteration at all: the mapping relaxations are massively
    /// primal-degenerate (hundreds of structural rows tight at every
    /// vertex), so a primal walk drowns in zero-length steps.  The same
    /// geometry poses no problem for the dual walk, whose step length is
    /// dictated by reduced costs — generically nonzero under the cost tilt
    /// — rather than by primal slacks.
    fn run_dual(&mut self) -> Result<Option<LpSolution>, LpError> {
        let feas_tol = self.cfg.feasibility_tol;
        let mut cleanup_rounds = 0usize;
        let mut stuck = 0usize;
        // Row-transform values s·(B^{-1}A)_{row,j} for every column, filled
        // once per iteration and shared by the ratio test and the reduced-
        // cost update.
        let mut atilde = vec![0.0f64; self.ncols];
        loop {
            if self.iterations >= self.iteration_limit {
                return Ok(Some(self.finish(LpStatus::IterationLimit)));
            }

            // Leaving row: most violated basic variable.
            let mut row = usize::MAX;
            let mut worst = feas_tol;
            for (r, &j) in self.basic.iter().enumerate() {
                let v = (self.lower[j] - self.x[j]).max(self.x[j] - self.upper[j]);
                if v > worst {
                    worst = v;
                    row = r;
                }
            }

            // TEMP DIAG
            if self.iterations % 5000 == 0 && std::env::var("LPKIT_TRACE").is_ok() {
                eprintln!(
                    "dual it={} viol={:.6} rounds={} steps z/t/r={}/{}/{} flips={} bad={}",
                    self.iterations, if row == usize::MAX { 0.0 } else { worst },
                    self.perturb_rounds, self.st_zero, self.st_tiny, self.st_real,
                    self.st_flip, self.st_bad
                );
            }

            if row == usize::MAX {
                // Primal feasible; with dual feasibility maintained this is
                // optimal for the current (possibly shifted) data.
                if self.perturbed || self.cost_perturbed {
                    self.restore_perturbation()?;
                    self.recompute_reduced();
                    if self.dual_feasible(self.cfg.optimality_tol) {
                        cleanup_rounds = 0;
                        continue;
                    }
                    // The tilt was load-bearing: finish on the primal side.
                    return Ok(None);
                }
                if cleanup_rounds < 3 {
                    cleanup_rounds += 1;
                    self.refactor()?;
                    self.compute_x();
                    self.recompute_reduced();
                    if !self.dual_feasible(self.cfg.optimality_tol) {
                        return Ok(None);
                    }
                    continue;
                }
                return Ok(Some(self.finish(LpStatus::Optimal)));
            }
            cleanup_rounds = 0;

            let leave = self.basic[row];
            // Direction the row's tableau entries are read in: +1 when the
            // leaving variable must decrease (violates its upper bound).
            let above = self.x[leave] > self.upper[leave];
            let s = if above { 1.0 } else { -1.0 };
            let target = if above { self.upper[leave] } else { self.lower[leave] };

            // Tableau row r: rho = B^{-T} e_r, then one pass for the
            // candidate breakpoints of the dual ratio test.
            for v in self.rho.iter_mut() {
                *v = 0.0;
            }
            self.rho[row] = 1.0;
            self.factor.btran(&mut self.rho);

            // (ratio, |atilde|, column)
            let mut cands: Vec<(f64, f64, usize)> = Vec::new();
            for j in 0..self.ncols {
                if self.status[j] == VarStatus::Basic
                    || self.true_upper[j] - self.true_lower[j] <= 0.0
                {
                    atilde[j] = 0.0;
                    continue;
                }
                let arj = match self.slack_row(j) {
                    Some(i) => self.rho[i],
                    None => {
                        self.cols[j].iter().map(|&(i, a)| a * self.rho[i as usize]).sum()
                    }
                };
                let at = s * arj;
                atilde[j] = at;
                let ok = match self.status[j] {
                    VarStatus::AtLower => at > ZERO_TOL,
                    VarStatus::AtUpper => at < -ZERO_TOL,
                    VarStatus::Basic => false,
                };
                if ok {
                    let ratio = (self.d[j] / at).max(0.0);
                    cands.push((ratio, at.abs(), j));
                }
            }
            if cands.is_empty() {
                // The violated row cannot be repaired by any nonbasic
                // movement: primal infeasible (the row is a certificate).
                return Ok(Some(self.finish(LpStatus::Infeasible)));
            }
            cands.sort_unstable_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap()
                    .then(b.1.partial_cmp(&a.1).unwrap())
                    .then(a.2.cmp(&b.2))
            });

            // Bound-flipping walk: absorb breakpoints whose whole spans
            // still leave residual infeasibility (those columns flip bound
            // rather than enter), and step past breakpoints whose pivot
            // entry is too small to divide by.  Nothing is mutated until an
            // entering column is locked in, so every bail-out below leaves
            // the worker consistent.
            let mut delta = worst;
            let mut flips: Vec<usize> = Vec::new();
            let mut skipped: Vec<usize> = Vec::new();
            let mut enter = usize::MAX;
            for &(_, aabs, j) in &cands {
                let span = self.upper[j] - self.lower[j];
                if span.is_finite() && aabs * span < delta {
                    flips.push(j);
                    delta -= aabs * span;
                    continue;
                }
                if aabs < PIVOT_ACCEPT {
                    // Must not enter on this entry; its reduced cost will be
                    // cost-shifted past the chosen step instead.
                    skipped.push(j);
                    continue;
                }
                enter = j;
                break;
            }
            if enter == usize::MAX {
                // Every acceptable breakpoint got flipped yet infeasibility
                // remains; only hopeless pivots are left.
                self.st_bad += 1;
                if self.pivots_since_refactor > 0 {
                    self.refactor()?;
                    self.compute_x();
                    self.recompute_reduced();
                    self.iterations += 1;
                    continue;
                }
                return Ok(None);
            }

            // Apply the flips in bulk: one ftran for the combined column.
            if !flips.is_empty() {
                for v in self.alpha.iter_mut() {
                    *v = 0.0;
                }
                for &j in &flips {
                    let (from, to) = if self.status[j] == VarStatus::AtLower {
                        (self.lower[j], self.upper[j])
                    } else {
                        (self.upper[j], self.lower[j])
                    };
                    let dx = to - from;
                    match self.slack_row(j) {
                        Some(i) => self.alpha[i] += dx,
                        None => {
                            for &(i, a) in &self.cols[j] {
                                self.alpha[i as usize] += a * dx;
                            }
                        }
                    }
                    self.status[j] = if self.status[j] == VarStatus::AtLower {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.x[j] = to;
                    self.st_flip += 1;
                }
                self.factor.ftran(&mut self.alpha);
                for r in 0..self.m {
                    if self.alpha[r] != 0.0 {
                        let jb = self.basic[r];
                        self.x[jb] -= self.alpha[r];
                    }
                }
            }

            // Entering column: alpha_q = B^{-1} A_q.
            for v in self.alpha.iter_mut() {
                *v = 0.0;
            }
            match self.slack_row(enter) {
                Some(i) => self.alpha[i] = 1.0,
                None => {
                    for &(i, a) in &self.cols[enter] {
                        self.alpha[i as usize] = a;
                    }
                }
            }
            self.factor.ftran(&mut self.alpha);
            let arq = self.alpha[row];
            if arq.abs() < PIVOT_ACCEPT {
                // The fresh forward solve disagrees with the row transform:
                // the factorization is stale or the entry is hopeless.
                self.st_bad += 1;
                if self.pivots_since_refactor > 0 {
                    self.refactor()?;
                    self.compute_x();
                    self.recompute_reduced();
                    self.iterations += 1;
                    continue;
                }
                return Ok(None);
            }

            // Dual step length, taken from the breakpoint of the entering
            // column.
            let td = (self.d[enter] / atilde[enter]).max(0.0);
            if td > 1e-12 {
                stuck = 0;
            } else {
                stuck += 1;
                if stuck > 1000 {
                    // Dual degeneracy despite the tilt; let the primal side
                    // (with its own anti-degeneracy kit) take over.
                    return Ok(None);
                }
            }
            // Columns stepped past on a hopeless pivot entry would come out
            // of the update sign-violated; a tiny temporary cost shift (it
            // is undone with the perturbation) parks them just inside the
            // feasible sign instead.
            for &j in &skipped {
                let at = atilde[j];
                let margin = 1e-9 * (1.0 + self.true_cost[j].abs()) * at.signum();
                let want = td * at + margin;
                let violates = if at > 0.0 { self.d[j] < want } else { self.d[j] > want };
                if violates {
                    self.cost[j] += want - self.d[j];
                    self.d[j] = want;
                    self.cost_perturbed = true;
                }
            }
            // Update every nonbasic reduced cost by the pivot row.
            if td != 0.0 {
                for j in 0..self.ncols {
                    if self.status[j] == VarStatus::Basic || j == enter {
                        continue;
                    }
                    if atilde[j] != 0.0 {
                        self.d[j] -= td * atilde[j];
                    }
                }
            }
            self.d[leave] = -td * s;
            self.d[enter] = 0.0;

            // Primal step: drive the leaving variable exactly onto its bound.
            let t = (self.x[leave] - target) / arq;
            if t.abs() < 1e-12 {
                self.st_zero += 1;
            } else if t.abs() < 1e-7 {
                self.st_tiny += 1;
            } else {
                self.st_real += 1;
            }
            if t != 0.0 {
                for r in 0..self.m {
                    let a = self.alpha[r];
                    if a != 0.0 {
                        let jb = self.basic[r];
                        self.x[jb] -= t * a;
                    }
                }
            }
            self.x[enter] += t;
            self.x[leave] = target;
            self.status[leave] =
                if above { VarStatus::AtUpper } else { VarStatus::AtLower };
            self.status[enter] = VarStatus::Basic;
            self.basic[row] = enter;
            let tiny_pivot = arq.abs() < PIVOT_ACCEPT;
            self.factor.push_pivot(row, &self.alpha);
            self.pivots_since_refactor += 1;
            if self.pivots_since_refactor >= self.cfg.refactor_every || tiny_pivot {
                self.refactor()?;
                self.compute_x();
                self.recompute_reduced();
            }
            self.iterations += 1;
        }
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        self.refactor()?;
        self.compute_x();

        // The dual iteration is the workhorse whenever the starting basis
        // is dual feasible — true for fresh slack bases on models with
        // non-negative costs, and for re-solves after bound tightenings.
        // It gets a sign-safe tilt rather than the primal's blanket
        // perturbation, and hands anything it cannot finish to the primal
        // loop below.
        self.recompute_reduced();
        if self.dual_feasible(self.cfg.optimality_tol) {
            self.apply_dual_tilt();
            if let Some(sol) = self.run_dual()? {
                return Ok(sol);
            }
            if self.perturbed || self.cost_perturbed {
                self.restore_perturbation()?;
            }
        }

        // Cold starts on the degenerate models this crate serves spend most
        // of their time in zero-step pivots; shifting the bounds up front
        // sidesteps that entirely.  Warm starts keep their (often feasible)
        // point — bounds stay put — but still get the cost tilt, because a
        // flat optimal face wastes their phase 2 just as badly.  A stall
        // escalates either kind to a full shift.
        if !self.warm_started {
            self.apply_perturbation();
        } else {
            self.apply_cost_perturbation();
        }
        let mut cleanup_rounds = 0usize;
        loop {
            if self.iterations >= self.iteration_limit {
                return Ok(self.finish(LpStatus::IterationLimit));
            }
            let phase1 = self.max_basic_violation() > self.cfg.feasibility_tol;

            // Stall detection drives the anti-degeneracy escalation.  Merits
            // from different phases live on different scales, so progress is
            // only recognised within one phase.  A long stall burns one
            // perturbation round — re-shifting from the true bounds with a
            // fresh salt separates ties that formed since the last shift —
            // and once all rounds are spent the solver stays on Bland's rule.
            let merit = if phase1 {
                self.sum_infeasibility()
            } else {
                // Scaled cost against scaled point is exactly the true
                // objective: the column factors cancel.
                (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
            };
            if phase1 == self.last_phase
                && merit < self.last_merit - 1e-10 * (1.0 + merit.abs())
            {
                self.stall = 0;
            } else {
                self.stall += 1;
            }
            self.last_merit = merit;
            self.last_phase = phase1;
            if !self.bland && self.stall > ((self.n + self.m) / 4).clamp(100, 1000) {
                if self.perturb_rounds < MAX_PERTURB_ROUNDS {
                    self.apply_perturbation();
                    continue;
                }
                self.bland = true;
            }

            // TEMP DIAG
            if self.iterations % 5000 == 0 && std::env::var("LPKIT_TRACE").is_ok() {
                eprintln!(
                    "it={} ph1={} merit={:.6} stall={} rounds={} perturbed={} \
                     steps z/t/r={}/{}/{} flips={} bad={}",
                    self.iterations, phase1, merit, self.stall, self.perturb_rounds,
                    self.perturbed, self.st_zero, self.st_tiny, self.st_real,
                    self.st_flip, self.st_bad
                );
            }
            self.compute_duals(phase1);
            let (enter, dir) = match self.price(phase1) {
                Some(e) => e,
                None => {
                    // Columns sidelined for hopeless pivots are not proof of
                    // optimality — bring them back and escalate instead.
                    if self.banned_any {
                        self.banned.fill(false);
                        self.banned_any = false;
                        if self.perturb_rounds < MAX_PERTURB_ROUNDS {
                            self.apply_perturbation();
                        } else {
                            self.bland = true;
                        }
                        continue;
                    }
                    // Optimal for the shifted bounds/costs: restore the real
                    // ones and keep iterating to a true optimum.
                    if self.perturbed || self.cost_perturbed {
                        self.restore_perturbation()?;
                        cleanup_rounds = 0;
                        continue;
                    }
                    // Phase-wise optimal: verify on a fresh factorization
                    // before declaring victory (tolerance drift happens).
                    if cleanup_rounds < 3 {
                        cleanup_rounds += 1;
                        self.refactor()?;
                        self.compute_x();
                        let p1 = self.max_basic_violation() > self.cfg.feasibility_tol;
                        self.compute_duals(p1);
                        if self.price(p1).is_some() || p1 != phase1 {
                            continue;
                        }
                    }
                    let status =
                        if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal };
                    return Ok(self.finish(status));
                }
            };
            cleanup_rounds = 0;

            // alpha = B^{-1} A_enter
            for v in self.alpha.iter_mut() {
                *v = 0.0;
            }
            match self.slack_row(enter) {
                Some(i) => self.alpha[i] = 1.0,
                None => {
                    for &(i, a) in &self.cols[enter] {
                        self.alpha[i as usize] = a;
                    }
                }
            }
            self.factor.ftran(&mut self.alpha);

            match self.ratio_test(enter, dir, phase1) {
                RatioOutcome::Unbounded => {
                    if phase1 {
                        return Err(LpError(
                            "unbounded infeasibility-reducing ray in phase 1".into(),
                        ));
                    }
                    return Ok(self.finish(LpStatus::Unbounded));
                }
                RatioOutcome::BadPivot => {
                    self.st_bad += 1;
                    // Tiny pivots: refresh the factorization and retry.  On a
                    // fresh factorization the blockers really are numerically
                    // hopeless, so sideline this column and price another; the
                    // ban lifts as soon as the basis changes.
                    if self.pivots_since_refactor > 0 {
                        self.refactor()?;
                        self.compute_x();
                    } else {
                        self.banned[enter] = true;
                        self.banned_any = true;
                    }
                    self.iterations += 1;
                    continue;
                }
                RatioOutcome::BoundFlip { step } => {
                    self.st_flip += 1;
                    if self.banned_any {
                        self.banned.fill(false);
                        self.banned_any = false;
                    }
                    self.apply_step(enter, dir, step);
                    self.status[enter] = if dir > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.x[enter] =
                        if dir > 0.0 { self.upper[enter] } else { self.lower[enter] };
                }
                RatioOutcome::Pivot { step, row, to_upper } => {
                    if step.abs() < 1e-12 {
                        self.st_zero += 1;
                    } else if step.abs() < 1e-7 {
                        self.st_tiny += 1;
                    } else {
                        self.st_real += 1;
                    }
                    if self.banned_any {
                        self.banned.fill(false);
                        self.banned_any = false;
                    }
                    self.update_devex_weights(enter, row);
                    self.apply_step(enter, dir, step);
                    let leave = self.basic[row];
                    // Snap the leaving variable onto the bound it hit.
                    if to_upper {
                        self.x[leave] = self.upper[leave];
                        self.status[leave] = VarStatus::AtUpper;
                    } else {
                        self.x[leave] = self.lower[leave];
                        self.status[leave] = VarStatus::AtLower;
                    }
                    self.status[enter] = VarStatus::Basic;
                    self.basic[row] = enter;
                    let tiny_pivot = self.alpha[row].abs() < PIVOT_ACCEPT;
                    self.factor.push_pivot(row, &self.alpha);
                    self.pivots_since_refactor += 1;
                    if self.pivots_since_refactor >= self.cfg.refactor_every || tiny_pivot {
                        self.refactor()?;
                        self.compute_x();
                    }
                }
            }
            self.iterations += 1;
        }
    }

    fn finish(&mut self, status: LpStatus) -> LpSolution {
        // Report against the true bounds and costs even when a limit fired
        // mid-round.
        if self.perturbed {
            self.lower.copy_from_slice(&self.true_lower);
            self.upper.copy_from_slice(&self.true_upper);
            self.perturbed = false;
            self.compute_x();
        }
        if self.cost_perturbed {
            self.cost.copy_from_slice(&self.true_cost);
            self.cost_perturbed = false;
        }
        // Final duals always use the real objective.  Everything reported
        // leaves in the original units: x_j = x'_j c_j, y_i = y'_i r_i,
        // d_j = d'_j / c_j.
        self.compute_duals(false);
        let duals: Vec<f64> =
            (0..self.m).map(|i| self.y[i] * self.row_scale[i]).collect();
        let reduced_costs: Vec<f64> = (0..self.n)
            .map(|j| self.reduced_cost(j, false) / self.col_scale[j])
            .collect();
        let primal: Vec<f64> =
            (0..self.n).map(|j| self.x[j] * self.col_scale[j]).collect();
        let objective = self.sys.obj_value(&primal);
        LpSolution {
            status,
            objective,
            primal,
            duals,
            reduced_costs,
            iterations: self.iterations,
            basis: Basis(self.status.clone()),
        }
    }
}

enum RatioOutcome {
    /// Entering variable travels its whole span without a blocker.
    BoundFlip { step: f64 },
    /// A basic variable blocks at `row` after `step`, leaving at its upper
    /// bound when `to_upper` is set, its lower bound otherwise.
    Pivot { step: f64, row: usize, to_upper: bool },
    /// No blocker and infinite span.
    Unbounded,
    /// The only acceptable blockers have numerically hopeless pivots.
    BadPivot,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSystem, VarKind};

    fn var(sys: &mut ModelSystem, name: &str, l: f64, u: f64, obj: f64) -> usize {
        sys.add_var(name, l, u, obj, VarKind::Continuous).unwrap()
    }

    #[test]
    fn minimal_ge_row_has_unit_dual() {
        let mut sys = ModelSystem::new("t");
        let x = var(&mut sys, "x", 0.0, 1.0, 1.0);
        sys.add_row("floor", vec![(x, 1.0)], Sense::Ge, 0.3).unwrap();
        let sol = solve_lp(&sys).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 0.3).abs() < 1e-9);
        assert!((sol.primal[x] - 0.3).abs() < 1e-9);
        assert!((sol.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut sys = ModelSystem::new("t");
        let x = var(&mut sys, "x", 0.0, 1.0, 0.0);
        sys.add_row("lo", vec![(x, 1.0)], Sense::Le, 0.2).unwrap();
        sys.add_row("hi", vec![(x, 1.0)], Sense::Ge, 0.5).unwrap();
        let sol = solve_lp(&sys).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_row_is_honored() {
        let mut sys = ModelSystem::new("t");
        let a = var(&mut sys, "a", 0.0, 10.0, 2.0);
        let b = var(&mut sys, "b", 0.0, 10.0, 3.0);
        sys.add_row("sum", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 4.0).unwrap();
        let sol = solve_lp(&sys).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 8.0).abs() < 1e-9);
        assert!((sol.primal[a] - 4.0).abs() < 1e-9);
        assert!((sol.primal[b] - 0.0).abs() < 1e-9);
    }

    #[test]
    fn negative_costs_drive_variables_to_upper_bounds() {
        let mut sys = ModelSystem::new("t");
        let a = var(&mut sys, "a", 0.0, 2.0, -1.0);
        let b = var(&mut sys, "b", 0.0, 2.0, -2.0);
        sys.add_row("cap", vec![(a, 1.0), (b, 1.0)], Sense::Le, 3.0).unwrap();
        let sol = solve_lp(&sys).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // b saturates first (cheaper), a takes the slack.
        assert!((sol.primal[b] - 2.0).abs() < 1e-9);
        assert!((sol.primal[a] - 1.0).abs() < 1e-9);
        assert!((sol.objective + 5.0).abs() < 1e-9);
        // Binding <= row in a minimization: non-positive dual.
        assert!(sol.duals[0] <= 1e-9);
        assert!((sol.duals[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn strong_duality_holds_on_a_dense_system() {
        let mut sys = ModelSystem::new("t");
        let v: Vec<usize> = (0..4)
            .map(|j| var(&mut sys, &format!("x{}", j), 0.0, 5.0, [3.0, 1.0, 4.0, 2.0][j]))
            .collect();
        sys.add_row("r0", vec![(v[0], 1.0), (v[1], 2.0), (v[2], 1.0)], Sense::Ge, 4.0).unwrap();
        sys.add_row("r1", vec![(v[1], 1.0), (v[3], 3.0)], Sense::Ge, 6.0).unwrap();
        sys.add_row("r2", vec![(v[0], 1.0), (v[2], 1.0), (v[3], 1.0)], Sense::Le, 7.0).unwrap();
        let sol = solve_lp(&sys).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // obj = y.b + sum of reduced costs times bound values of nonbasics.
        let mut dual_obj: f64 =
            sol.duals.iter().zip(sys.rows()).map(|(y, r)| y * r.rhs).sum();
        for j in 0..sys.num_vars() {
            match sol.basis.0[j] {
                VarStatus::AtLower => dual_obj += sol.reduced_costs[j] * sys.var(j).lower,
                VarStatus::AtUpper => dual_obj += sol.reduced_costs[j] * sys.var(j).upper,
                VarStatus::Basic => {}
            }
        }
        assert!(
            (sol.objective - dual_obj).abs() <= 1e-6 * (1.0 + sol.objective.abs()),
            "primal {} vs dual {}",
            sol.objective,
            dual_obj
        );
    }

    #[test]
    fn warm_start_after_bound_change_reuses_the_basis() {
        let mut sys = ModelSystem::new("t");
        let a = var(&mut sys, "a", 0.0, 4.0, 1.0);
        let b = var(&mut sys, "b", 0.0, 4.0, 1.5);
        sys.add_row("need", vec![(a, 1.0), (b, 1.0)], Sense::Ge, 5.0).unwrap();
        let first = solve_lp(&sys).unwrap();
        assert_eq!(first.status, LpStatus::Optimal);
        assert!((first.objective - 5.5).abs() < 1e-9);

        // Now forbid a > 1; warm solve should land on the new optimum.
        sys.set_bounds(a, 0.0, 1.0);
        let warm = solve_lp_with(&sys, &LpConfig::default(), Some(&first.basis)).unwrap();
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!((warm.objective - 7.0).abs() < 1e-9);
        assert!(warm.iterations <= first.iterations + 3);
    }

    #[test]
    fn warm_start_accepts_appended_rows() {
        let mut sys = ModelSystem::new("t");
        let a = var(&mut sys, "a", 0.0, 4.0, 1.0);
        let b = var(&mut sys, "b", 0.0, 4.0, 2.0);
        sys.add_row("need", vec![(a, 1.0), (b, 1.0)], Sense::Ge, 3.0).unwrap();
        let first = solve_lp(&sys).unwrap();
        assert_eq!(first.status, LpStatus::Optimal);

        sys.add_row("cap_a", vec![(a, 1.0)], Sense::Le, 1.0).unwrap();
        // Extend the basis with the new slack marked basic.
        let mut statuses = first.basis.0.clone();
        statuses.push(VarStatus::Basic);
        let warm = solve_lp_with(&sys, &LpConfig::default(), Some(&Basis(statuses))).unwrap();
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!((warm.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_variables_never_enter() {
        let mut sys = ModelSystem::new("t");
        let a = var(&mut sys, "a", 1.0, 1.0, -10.0);
        let b = var(&mut sys, "b", 0.0, 3.0, 1.0);
        sys.add_row("mix", vec![(a, 1.0), (b, 1.0)], Sense::Ge, 2.0).unwrap();
        let sol = solve_lp(&sys).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.primal[a] - 1.0).abs() < 1e-12);
        assert!((sol.primal[b] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_transportation_core_terminates() {
        // Assignment-like LP with many ties; exercises degenerate pivots.
        let mut sys = ModelSystem::new("t");
        let mut xs = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                xs.push(var(&mut sys, &format!("x{}{}", i, j), 0.0, 1.0, ((i * 3 + j) % 4) as f64));
            }
        }
        for i in 0..3 {
            sys.add_row(
                &format!("row{}", i),
                (0..3).map(|j| (xs[i * 3 + j], 1.0)),
                Sense::Eq,
                1.0,
            )
            .unwrap();
        }
        for j in 0..3 {
            sys.add_row(
                &format!("col{}", j),
                (0..3).map(|i| (xs[i * 3 + j], 1.0)),
                Sense::Eq,
                1.0,
            )
            .unwrap();
        }
        let sol = solve_lp(&sys).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // Optimal assignment: costs (0,1,2;3,0,1;2,3,0) -> diagonal of zeros.
        assert!(sol.objective.abs() < 1e-9);
    }
}
