//! Branch-and-bound solver for models whose integer variables are 0-1.
//!
//! Nodes are explored best-bound-first with a depth-first plunge after each
//! branching until an incumbent is found; the plunge re-arms whenever the
//! incumbent improves.  Branching picks the most fractional binary within the
//! highest priority class, ties broken by smallest index.  Every candidate
//! incumbent is re-solved with all binaries pinned to their rounded values so
//! reported objectives are exact LP values of true 0-1 points, never
//! tolerance-blurred relaxation values.

use crate::model::{ModelSystem, VarKind};
use crate::simplex::{solve_lp_with, Basis, LpConfig, LpError, LpSolution, LpStatus};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct MipConfig {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Terminate once (upper - lower) <= gap_tolerance * max(1, |upper|).
    pub gap_tolerance: f64,
    /// A binary counts as integral when within this distance of 0 or 1.
    pub integrality_tol: f64,
    /// Optional per-variable branching priority; higher branches earlier.
    /// Empty means uniform.
    pub branch_priority: Vec<i32>,
    /// Settings for the node LP solves.
    pub lp: LpConfig,
    /// Nodes a plunge may spend before falling back to best-bound order.
    pub dive_budget: usize,
    /// Starting basis for the root relaxation; children inherit bases from
    /// their parents as usual.
    pub root_basis: Option<Basis>,
}

impl Default for MipConfig {
    fn default() -> Self {
        MipConfig {
            time_limit: None,
            node_limit: None,
            gap_tolerance: 1e-6,
            integrality_tol: 1e-6,
            branch_priority: Vec::new(),
            lp: LpConfig::default(),
            dive_budget: 50,
            root_basis: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    /// Proven optimal within the gap tolerance.
    Optimal,
    /// Proven that no feasible 0-1 completion exists.
    Infeasible,
    /// Stopped on the time limit; an incumbent may or may not exist.
    TimeLimit,
    /// Stopped on the node limit; an incumbent may or may not exist.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    /// Objective of the best incumbent; +inf when none exists.
    pub objective: f64,
    /// Proven lower bound on the optimal objective.
    pub best_bound: f64,
    /// Best incumbent (structural variables); empty when none exists.
    pub primal: Vec<f64>,
    pub nodes: usize,
    pub iterations: usize,
}

impl MipSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.primal.is_empty()
    }

    pub fn gap(&self) -> f64 {
        if !self.has_incumbent() {
            return f64::INFINITY;
        }
        (self.objective - self.best_bound).max(0.0) / self.objective.abs().max(1.0)
    }
}

pub fn solve_mip(sys: &ModelSystem, cfg: &MipConfig) -> Result<MipSolution, LpError> {
    Mip::new(sys, cfg).run()
}

/// Total order on f64 for heap keys (no NaNs reach it).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, u64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

struct Node {
    id: u64,
    bound: f64,
    fixings: Rc<Vec<(u32, bool)>>,
    basis: Rc<Basis>,
}

struct Mip {
    work: ModelSystem,
    cfg: MipConfig,
    binaries: Vec<usize>,
    orig_bounds: Vec<(f64, f64)>,
    heap: BinaryHeap<Reverse<(Key, RcNode)>>,
    dive: Vec<Node>,
    diving: bool,
    dive_used: usize,
    next_id: u64,
    upper: f64,
    incumbent: Vec<f64>,
    nodes: usize,
    iterations: usize,
    started: Instant,
}

/// Heap payload; ordering is carried entirely by the Key.
struct RcNode(Node);

impl PartialEq for RcNode {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}
impl Eq for RcNode {}
impl PartialOrd for RcNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for RcNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.id.cmp(&other.0.id)
    }
}

impl Mip {
    fn new(sys: &ModelSystem, cfg: &MipConfig) -> Self {
        let binaries: Vec<usize> = (0..sys.num_vars())
            .filter(|&j| sys.var(j).kind == VarKind::Binary)
            .collect();
        let orig_bounds = sys.vars().iter().map(|v| (v.lower, v.upper)).collect();
        Mip {
            work: sys.clone(),
            cfg: cfg.clone(),
            binaries,
            orig_bounds,
            heap: BinaryHeap::new(),
            dive: Vec::new(),
            diving: true,
            dive_used: 0,
            next_id: 0,
            upper: f64::INFINITY,
            incumbent: Vec::new(),
            nodes: 0,
            iterations: 0,
            started: Instant::now(),
        }
    }

    fn prune_margin(&self) -> f64 {
        if self.upper.is_finite() {
            1e-9 * (1.0 + self.upper.abs())
        } else {
            0.0
        }
    }

    fn out_of_budget(&self) -> Option<MipStatus> {
        if let Some(t) = self.cfg.time_limit {
            if self.started.elapsed() >= t {
                return Some(MipStatus::TimeLimit);
            }
        }
        if let Some(nl) = self.cfg.node_limit {
            if self.nodes >= nl {
                return Some(MipStatus::NodeLimit);
            }
        }
        None
    }

    fn apply_fixings(&mut self, fixings: &[(u32, bool)]) {
        for &(j, one) in fixings {
            let v = if one { 1.0 } else { 0.0 };
            self.work.set_bounds(j as usize, v, v);
        }
    }

    fn restore_fixings(&mut self, fixings: &[(u32, bool)]) {
        for &(j, _) in fixings {
            let (l, u) = self.orig_bounds[j as usize];
            self.work.set_bounds(j as usize, l, u);
        }
    }

    fn solve_node_lp(&mut self, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
        let sol = solve_lp_with(&self.work, &self.cfg.lp, warm)?;
        self.iterations += sol.iterations;
        if sol.status != LpStatus::IterationLimit {
            return Ok(sol);
        }
        // Retry cold with a raised cap before giving up on the node.
        let mut relaxed = self.cfg.lp.clone();
        let base = if relaxed.iteration_limit > 0 {
            relaxed.iteration_limit
        } else {
            10_000 + 20 * (self.work.num_vars() + self.work.num_rows())
        };
        relaxed.iteration_limit = base.saturating_mul(4);
        let sol = solve_lp_with(&self.work, &relaxed, None)?;
        self.iterations += sol.iterations;
        if sol.status == LpStatus::IterationLimit {
            return Err(LpError("node relaxation exceeded the iteration limit twice".into()));
        }
        Ok(sol)
    }

    /// Fractional binaries of an LP point, as (index into binaries, distance
    /// from the nearest integer).
    fn fractional(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let tol = self.cfg.integrality_tol;
        let mut out = Vec::new();
        for &j in &self.binaries {
            let f = (x[j] - x[j].round()).abs();
            if f > tol {
                out.push((j, f));
            }
        }
        out
    }

    /// Pins every binary to its rounded value and re-solves so the incumbent
    /// is an exact 0-1 point.  Returns its objective and primal when feasible.
    fn certify_incumbent(
        &mut self,
        lp: &LpSolution,
        fixings: &[(u32, bool)],
    ) -> Result<Option<(f64, Vec<f64>)>, LpError> {
        let rounded: Vec<(usize, f64)> = self
            .binaries
            .iter()
            .map(|&j| (j, lp.primal[j].round()))
            .collect();
        for &(j, v) in &rounded {
            self.work.set_bounds(j, v, v);
        }
        let snapped = solve_lp_with(&self.work, &self.cfg.lp, Some(&lp.basis))?;
        self.iterations += snapped.iterations;
        // Restore to the node's view: node fixings stay pinned, the rest of
        // the binaries get their original bounds back.
        for &(j, _) in &rounded {
            let (l, u) = self.orig_bounds[j];
            self.work.set_bounds(j, l, u);
        }
        self.apply_fixings(fixings);
        if snapped.status == LpStatus::Optimal {
            Ok(Some((snapped.objective, snapped.primal)))
        } else {
            Ok(None)
        }
    }

    fn accept_incumbent(&mut self, obj: f64, primal: Vec<f64>) {
        if obj < self.upper - self.prune_margin() {
            self.upper = obj;
            self.incumbent = primal;
            // A better incumbent re-arms the plunge.
            self.diving = true;
            self.dive_used = 0;
        }
    }

    /// Highest-priority, most fractional binary; ties by smallest index.
    fn pick_branch(&self, fractional: &[(usize, f64)]) -> usize {
        let prio = |j: usize| -> i32 {
            self.cfg.branch_priority.get(j).copied().unwrap_or(0)
        };
        let top = fractional.iter().map(|&(j, _)| prio(j)).max().unwrap();
        let mut best = usize::MAX;
        let mut best_frac = -1.0;
        for &(j, f) in fractional {
            if prio(j) != top {
                continue;
            }
            if f > best_frac + 1e-12 {
                best = j;
                best_frac = f;
            }
        }
        best
    }

    fn push_open(&mut self, node: Node) {
        self.heap.push(Reverse((Key(node.bound, node.id), RcNode(node))));
    }

    fn flush_dive(&mut self) {
        while let Some(n) = self.dive.pop() {
            self.push_open(n);
        }
        self.diving = false;
    }

    fn open_bound(&self) -> f64 {
        let mut b = f64::INFINITY;
        if let Some(Reverse((k, _))) = self.heap.peek() {
            b = k.0;
        }
        for n in &self.dive {
            b = b.min(n.bound);
        }
        b
    }

    fn finish(&mut self, status: MipStatus) -> MipSolution {
        let open = self.open_bound();
        let best_bound = if self.upper.is_finite() { open.min(self.upper) } else { open };
        let best_bound = if best_bound.is_infinite() && self.upper.is_finite() {
            self.upper
        } else {
            best_bound
        };
        MipSolution {
            status,
            objective: self.upper,
            best_bound,
            primal: std::mem::take(&mut self.incumbent),
            nodes: self.nodes,
            iterations: self.iterations,
        }
    }

    fn gap_closed(&self) -> bool {
        if !self.upper.is_finite() {
            return false;
        }
        let open = self.open_bound();
        if open.is_infinite() {
            return true;
        }
        (self.upper - open).max(0.0) <= self.cfg.gap_tolerance * self.upper.abs().max(1.0)
    }

    fn run(&mut self) -> Result<MipSolution, LpError> {
        let root = Node {
            id: {
                self.next_id += 1;
                self.next_id - 1
            },
            bound: f64::NEG_INFINITY,
            fixings: Rc::new(Vec::new()),
            basis: Rc::new(
                self.cfg.root_basis.clone().unwrap_or_else(|| Basis(Vec::new())),
            ),
        };
        self.dive.push(root);

        loop {
            if self.dive.is_empty() && self.heap.is_empty() {
                let status = if self.upper.is_finite() {
                    MipStatus::Optimal
                } else {
                    MipStatus::Infeasible
                };
                return Ok(self.finish(status));
            }
            if self.gap_closed() {
                return Ok(self.finish(MipStatus::Optimal));
            }
            if let Some(limit) = self.out_of_budget() {
                return Ok(self.finish(limit));
            }

            let node = if let Some(n) = self.dive.pop() {
                self.dive_used += 1;
                if self.dive_used > self.cfg.dive_budget {
                    self.push_open(n);
                    self.flush_dive();
                    continue;
                }
                n
            } else {
                self.diving = false;
                let Reverse((_, RcNode(n))) = self.heap.pop().unwrap();
                n
            };

            if node.bound >= self.upper - self.prune_margin() {
                continue;
            }

            self.apply_fixings(&node.fixings);
            let warm = if node.basis.0.is_empty() { None } else { Some(&*node.basis) };
            let lp = self.solve_node_lp(warm);
            self.restore_fixings(&node.fixings);
            let lp = lp?;
            self.nodes += 1;

            match lp.status {
                LpStatus::Infeasible => continue,
                LpStatus::Unbounded => {
                    return Err(LpError(
                        "node relaxation is unbounded despite finite variable bounds".into(),
                    ))
                }
                LpStatus::IterationLimit => unreachable!("retried in solve_node_lp"),
                LpStatus::Optimal => {}
            }

            let bound = node.bound.max(lp.objective);
            if bound >= self.upper - self.prune_margin() {
                continue;
            }

            let fractional = self.fractional(&lp.primal);
            if fractional.is_empty() {
                self.apply_fixings(&node.fixings);
                let fixings = Rc::clone(&node.fixings);
                let cert = self.certify_incumbent(&lp, &fixings);
                self.restore_fixings(&node.fixings);
                if let Some((obj, primal)) = cert? {
                    self.accept_incumbent(obj, primal);
                } // else: rounding broke feasibility; the node is fathomed
                  // anyway since its relaxation was integral within tolerance.
                continue;
            }

            let j = self.pick_branch(&fractional);
            let shared_basis = Rc::new(lp.basis);
            let near_one = lp.primal[j] >= 0.5;
            let make = |one: bool, id: u64| -> Node {
                let mut f = (*node.fixings).clone();
                f.push((j as u32, one));
                Node { id, bound, fixings: Rc::new(f), basis: Rc::clone(&shared_basis) }
            };
            let id_near = self.next_id;
            let id_far = self.next_id + 1;
            self.next_id += 2;
            let near = make(near_one, id_near);
            let far = make(!near_one, id_far);
            if self.diving {
                self.push_open(far);
                self.dive.push(near);
            } else {
                self.push_open(near);
                self.push_open(far);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    fn knapsack(values: &[f64], weights: &[f64], cap: f64) -> ModelSystem {
        let mut sys = ModelSystem::new("knapsack");
        let idx: Vec<usize> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                sys.add_var(&format!("x{}", i), 0.0, 1.0, -v, VarKind::Binary).unwrap()
            })
            .collect();
        sys.add_row(
            "cap",
            idx.iter().zip(weights).map(|(&j, &w)| (j, w)),
            Sense::Le,
            cap,
        )
        .unwrap();
        sys
    }

    /// Exhaustive 0-1 knapsack reference.
    fn knapsack_best(values: &[f64], weights: &[f64], cap: f64) -> f64 {
        let n = values.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let mut w = 0.0;
            let mut v = 0.0;
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    w += weights[i];
                    v += values[i];
                }
            }
            if w <= cap + 1e-9 {
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn knapsack_matches_enumeration() {
        let cases: Vec<(Vec<f64>, Vec<f64>, f64)> = vec![
            (vec![6.0, 5.0, 4.0, 3.0], vec![4.0, 3.0, 2.0, 1.0], 6.0),
            (vec![10.0, 13.0, 7.0, 8.0, 2.0], vec![5.0, 6.0, 3.0, 4.0, 1.0], 10.0),
            (vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], 3.0),
            (vec![9.0, 9.0, 9.0, 9.0], vec![3.0, 3.0, 3.0, 3.0], 12.0),
        ];
        for (v, w, c) in cases {
            let sys = knapsack(&v, &w, c);
            let sol = solve_mip(&sys, &MipConfig::default()).unwrap();
            assert_eq!(sol.status, MipStatus::Optimal);
            let want = knapsack_best(&v, &w, c);
            assert!(
                (-sol.objective - want).abs() < 1e-6,
                "got {}, want {}",
                -sol.objective,
                want
            );
            // The incumbent really is 0-1.
            for x in &sol.primal {
                assert!((x - x.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn infeasible_integer_program_is_detected() {
        let mut sys = ModelSystem::new("t");
        let a = sys.add_var("a", 0.0, 1.0, 1.0, VarKind::Binary).unwrap();
        let b = sys.add_var("b", 0.0, 1.0, 1.0, VarKind::Binary).unwrap();
        // a + b must equal 1 while both are forced to 0.4-ish by a row pair
        // with no integral solution.
        sys.add_row("sum", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 1.0).unwrap();
        sys.add_row("tie", vec![(a, 1.0), (b, -1.0)], Sense::Eq, 0.0).unwrap();
        let sol = solve_mip(&sys, &MipConfig::default()).unwrap();
        assert_eq!(sol.status, MipStatus::Infeasible);
        assert!(!sol.has_incumbent());
    }

    #[test]
    fn mixed_integer_model_keeps_continuous_parts_exact() {
        // Choose a facility (binary) and ship a continuous amount through it.
        let mut sys = ModelSystem::new("t");
        let open = sys.add_var("open", 0.0, 1.0, 10.0, VarKind::Binary).unwrap();
        let ship = sys.add_var("ship", 0.0, 100.0, -3.0, VarKind::Continuous).unwrap();
        sys.add_row("link", vec![(ship, 1.0), (open, -7.0)], Sense::Le, 0.0).unwrap();
        let sol = solve_mip(&sys, &MipConfig::default()).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        // Opening costs 10, shipping 7 units earns 21: net -11.
        assert!((sol.objective + 11.0).abs() < 1e-6);
        assert!((sol.primal[open] - 1.0).abs() < 1e-9);
        assert!((sol.primal[ship] - 7.0).abs() < 1e-6);
    }

    #[test]
    fn branch_priority_prefers_marked_variables() {
        // Symmetric model where any branch works; the priority just must not
        // break correctness.
        let values = vec![4.0, 4.0, 4.0, 4.0];
        let weights = vec![2.0, 2.0, 2.0, 2.0];
        let sys = knapsack(&values, &weights, 5.0);
        let mut cfg = MipConfig::default();
        cfg.branch_priority = vec![0, 5, 0, 0];
        let sol = solve_mip(&sys, &cfg).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert!((-sol.objective - 8.0).abs() < 1e-6);
        // And the same answer without priorities.
        cfg.branch_priority.clear();
        let sol2 = solve_mip(&sys, &cfg).unwrap();
        assert!((sol2.objective - sol.objective).abs() < 1e-9);
    }

    #[test]
    fn node_limit_reports_bound_and_incumbent_state() {
        let values = vec![6.0, 5.0, 4.0, 3.0, 7.0, 2.0];
        let weights = vec![4.0, 3.0, 2.0, 1.0, 5.0, 2.0];
        let sys = knapsack(&values, &weights, 8.0);
        let mut cfg = MipConfig::default();
        cfg.node_limit = Some(1);
        let sol = solve_mip(&sys, &cfg).unwrap();
        assert_eq!(sol.status, MipStatus::NodeLimit);
        assert!(sol.best_bound.is_finite());
        // Bound must under-estimate (minimization) the true optimum.
        let want = -knapsack_best(&values, &weights, 8.0);
        assert!(sol.best_bound <= want + 1e-6);
    }

    #[test]
    fn pure_lp_model_solves_at_the_root() {
        let mut sys = ModelSystem::new("t");
        let a = sys.add_var("a", 0.0, 2.0, 1.0, VarKind::Continuous).unwrap();
        sys.add_row("need", vec![(a, 1.0)], Sense::Ge, 1.5).unwrap();
        let sol = solve_mip(&sys, &MipConfig::default()).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert_eq!(sol.nodes, 1);
        assert!((sol.objective - 1.5).abs() < 1e-9);
    }
}
