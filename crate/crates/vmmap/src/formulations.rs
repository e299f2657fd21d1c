//! Mixed-integer formulations of the mapping problem.
//!
//! All formulations share the same core decision variables:
//!
//! * `x[r,i,k]`  — VM `i` of request `r` placed on server `k` (binary),
//! * `y[r,a-b,k>p]` — placement-pair indicator: VM `a` on `k` **and** VM `b`
//!   on `p`, for an unordered VM pair `a < b` and an ordered server pair
//!   `k != p` (continuous in `[0,1]`; pinned to the product of the two `x`
//!   variables at any integral point),
//! * `th[k]` — server `k` powered on (binary),
//! * `ph[e]` — edge `e` activated (binary).
//!
//! The pair variable for `(i, j, k, p)` with `i > j` is *the same variable*
//! as the one for `(j, i, p, k)`; [`VarSpace::y`] performs that
//! canonicalisation.  By default the pair space covers only VM pairs that
//! exchange traffic; [`FormulationOptions::full_pairs`] widens it to every
//! VM pair of each request.
//!
//! Four model tiers are provided:
//!
//! * [`build_mc`] — product linearisation via envelope rows (`m1`/`m2`/`m3`).
//! * [`build_rlt`] — envelope rows replaced by assignment-consistency
//!   equalities (`ar`) and pair-use limits (`ul`); the envelopes become
//!   implied and are dropped.
//! * [`build_p1`] — `build_rlt` plus link-demand (`c1`), path-load (`c2`)
//!   and edge-count (`c3`) inequalities.  This is the strongest compact
//!   model and the one solved directly by the `p1` method.
//! * [`build_p2`] — a lifted variant with per-request reserved-capacity
//!   variables (`w`, `z`, `kap`) and per-request on/off copies (`thr`,
//!   `phr`).  Global `th`/`ph` appear only in the objective, in the
//!   coupling rows (`xw`, `xz`, `xk`, `xt`, `xp`), and in the edge-count
//!   row; relaxing the coupling rows makes the model separable per request,
//!   which is what the decomposition bound exploits.
//!
//! Row names are stable and documented next to each emitter; downstream
//! code addresses coupling rows through [`LiftedIndex`] rather than by
//! parsing names.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use lpkit::{ModelError, ModelSystem, RowDef, Sense, VarKind};

use crate::model::{edge_loads, CostBreakdown, Instance, MappingSolution};
use crate::paths::PathTable;

/// Switches that alter the generated model without changing its meaning.
#[derive(Debug, Clone, Copy, Default)]
pub struct FormulationOptions {
    /// Create pair variables for *every* VM pair of each request, not just
    /// the pairs that exchange traffic.  The extra variables never appear
    /// in the objective; they only tighten the pair-use rows.
    pub full_pairs: bool,
}

/// Per-request variable block: placement variables and pair variables.
#[derive(Debug, Clone)]
pub struct ReqVars {
    /// Index of the request inside [`Instance::requests`].
    pub request: usize,
    /// Number of servers (pair-slot arithmetic needs it).
    pub ns: usize,
    /// `x[i][k]` — variable index of the placement indicator.
    pub x: Vec<Vec<usize>>,
    /// Canonical VM pairs `(a, b)` with `a < b`, sorted ascending.
    pub pairs: Vec<(usize, usize)>,
    /// Traffic demand per canonical pair (zero only in full-pair mode).
    pub traffic: Vec<f64>,
    /// First variable index of each pair's ordered-server block.
    pub y_base: Vec<usize>,
}

impl ReqVars {
    /// Variable index of the pair variable for canonical pair `pair` and
    /// ordered servers `(k, p)`, `k != p`.
    pub fn y_slot(&self, pair: usize, k: usize, p: usize) -> usize {
        debug_assert!(k != p, "pair variables need distinct servers");
        self.y_base[pair] + k * (self.ns - 1) + if p < k { p } else { p - 1 }
    }

    /// Position of canonical pair `(a, b)` (`a < b`) if it exists.
    pub fn pair_index(&self, a: usize, b: usize) -> Option<usize> {
        debug_assert!(a < b);
        self.pairs.binary_search(&(a, b)).ok()
    }
}

/// Variable layout shared by every formulation tier.
#[derive(Debug, Clone)]
pub struct VarSpace {
    pub ns: usize,
    pub ne: usize,
    pub req: Vec<ReqVars>,
    /// `th[k]` — server on/off.
    pub theta: Vec<usize>,
    /// `ph[e]` — edge on/off.
    pub phi: Vec<usize>,
    /// Lifted tier only (empty otherwise): reserved CPU `w[r][k]`.
    pub w: Vec<Vec<usize>>,
    /// Reserved memory `z[r][k]`.
    pub z: Vec<Vec<usize>>,
    /// Reserved bandwidth `kap[r][e]`.
    pub kappa: Vec<Vec<usize>>,
    /// Per-request server-use copy `thr[r][k]`.
    pub theta_r: Vec<Vec<usize>>,
    /// Per-request edge-use copy `phr[r][e]`.
    pub phi_r: Vec<Vec<usize>>,
    /// Whether the lifted variables exist.
    pub lifted: bool,
}

impl VarSpace {
    /// Placement variable `x[r,i,k]`.
    pub fn x(&self, r: usize, i: usize, k: usize) -> usize {
        self.req[r].x[i][k]
    }

    /// Pair variable for VM pair `(i, j)` of request `r` on ordered servers
    /// `(k, p)`.  Accepts either VM order and canonicalises: asking for
    /// `(j, i, p, k)` returns the same variable as `(i, j, k, p)`.  `None`
    /// when the pair is outside the pair space.
    pub fn y(&self, r: usize, i: usize, j: usize, k: usize, p: usize) -> Option<usize> {
        debug_assert!(i != j && k != p);
        let (a, b, kk, pp) = if i < j { (i, j, k, p) } else { (j, i, p, k) };
        let pair = self.req[r].pair_index(a, b)?;
        Some(self.req[r].y_slot(pair, kk, pp))
    }

    /// Total number of pair variables across all requests.
    pub fn num_pair_vars(&self) -> usize {
        let slots = self.ns * (self.ns - 1);
        self.req.iter().map(|rv| rv.pairs.len() * slots).sum()
    }
}

/// Creates the placement and pair variables of one request.
///
/// Placement variables carry the CPU-load cost `A_k * c^{ri}` in the
/// objective; pair variables are free continuous `[0,1]` columns.
pub(crate) fn add_request_vars(
    sys: &mut ModelSystem,
    inst: &Instance,
    r: usize,
    all_pairs: bool,
) -> Result<ReqVars, ModelError> {
    let ns = inst.network.num_servers();
    let req = &inst.requests[r];
    let nv = req.num_vms();

    let mut x = Vec::with_capacity(nv);
    for i in 0..nv {
        let mut row = Vec::with_capacity(ns);
        for (k, srv) in inst.network.servers.iter().enumerate() {
            let obj = srv.cpu_load_cost * f64::from(req.vms[i].cpu);
            row.push(sys.add_var(
                format!("x[r{r},v{i},s{k}]"),
                0.0,
                1.0,
                obj,
                VarKind::Binary,
            )?);
        }
        x.push(row);
    }

    let mut demand = vec![vec![0.0; nv]; nv];
    for link in &req.links {
        demand[link.i][link.j] = f64::from(link.traffic);
        demand[link.j][link.i] = f64::from(link.traffic);
    }

    let mut pairs = Vec::new();
    let mut traffic = Vec::new();
    for a in 0..nv {
        for b in (a + 1)..nv {
            if all_pairs || demand[a][b] > 0.0 {
                pairs.push((a, b));
                traffic.push(demand[a][b]);
            }
        }
    }

    let mut y_base = Vec::with_capacity(pairs.len());
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        let mut first = None;
        for k in 0..ns {
            for p in 0..ns {
                if p == k {
                    continue;
                }
                let var = sys.add_var(
                    format!("y[r{r},v{a}-{b},s{k}>{p}]"),
                    0.0,
                    1.0,
                    0.0,
                    VarKind::Continuous,
                )?;
                if first.is_none() {
                    first = Some(var);
                }
            }
        }
        y_base.push(first.expect("at least two servers"));
        debug_assert_eq!(y_base[idx] + ns * (ns - 1) - 1, sys.num_vars() - 1);
    }

    Ok(ReqVars {
        request: r,
        ns,
        x,
        pairs,
        traffic,
        y_base,
    })
}

/// Creates the full variable space: per-request blocks, then `th`, `ph`,
/// then (optionally) the lifted per-request variables.
fn make_space(
    inst: &Instance,
    opts: FormulationOptions,
    lifted: bool,
) -> Result<(ModelSystem, VarSpace), ModelError> {
    let ns = inst.network.num_servers();
    let ne = inst.network.num_edges();
    let nr = inst.num_requests();
    let mut sys = ModelSystem::new(String::new());

    let mut req = Vec::with_capacity(nr);
    for r in 0..nr {
        req.push(add_request_vars(&mut sys, inst, r, opts.full_pairs)?);
    }

    let mut theta = Vec::with_capacity(ns);
    for (k, srv) in inst.network.servers.iter().enumerate() {
        theta.push(sys.add_var(format!("th[s{k}]"), 0.0, 1.0, srv.fixed_cost, VarKind::Binary)?);
    }
    let mut phi = Vec::with_capacity(ne);
    for (e, edge) in inst.network.edges.iter().enumerate() {
        phi.push(sys.add_var(format!("ph[e{e}]"), 0.0, 1.0, edge.fixed_cost, VarKind::Binary)?);
    }

    let (mut w, mut z, mut kappa, mut theta_r, mut phi_r) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    if lifted {
        for r in 0..nr {
            let mut wr = Vec::with_capacity(ns);
            let mut zr = Vec::with_capacity(ns);
            for (k, srv) in inst.network.servers.iter().enumerate() {
                wr.push(sys.add_var(
                    format!("w[r{r},s{k}]"),
                    0.0,
                    f64::from(srv.cpu),
                    0.0,
                    VarKind::Continuous,
                )?);
                zr.push(sys.add_var(
                    format!("z[r{r},s{k}]"),
                    0.0,
                    f64::from(srv.mem),
                    0.0,
                    VarKind::Continuous,
                )?);
            }
            let mut kr = Vec::with_capacity(ne);
            for (e, edge) in inst.network.edges.iter().enumerate() {
                kr.push(sys.add_var(
                    format!("kap[r{r},e{e}]"),
                    0.0,
                    edge.bandwidth,
                    0.0,
                    VarKind::Continuous,
                )?);
            }
            let mut tr = Vec::with_capacity(ns);
            for k in 0..ns {
                tr.push(sys.add_var(format!("thr[r{r},s{k}]"), 0.0, 1.0, 0.0, VarKind::Binary)?);
            }
            let mut pr = Vec::with_capacity(ne);
            for e in 0..ne {
                pr.push(sys.add_var(format!("phr[r{r},e{e}]"), 0.0, 1.0, 0.0, VarKind::Binary)?);
            }
            w.push(wr);
            z.push(zr);
            kappa.push(kr);
            theta_r.push(tr);
            phi_r.push(pr);
        }
    }

    Ok((
        sys,
        VarSpace {
            ns,
            ne,
            req,
            theta,
            phi,
            w,
            z,
            kappa,
            theta_r,
            phi_r,
            lifted,
        },
    ))
}

// ---------------------------------------------------------------------------
// Per-request row emitters (shared with the decomposition subproblems).
// ---------------------------------------------------------------------------

/// `ac[r,v]`: every VM sits on exactly one server.
pub(crate) fn emit_assignment_rows(
    sys: &mut ModelSystem,
    rv: &ReqVars,
) -> Result<(), ModelError> {
    let r = rv.request;
    for (i, xs) in rv.x.iter().enumerate() {
        let coeffs: Vec<_> = xs.iter().map(|&v| (v, 1.0)).collect();
        sys.add_row(format!("ac[r{r},v{i}]"), coeffs, Sense::Eq, 1.0)?;
    }
    Ok(())
}

/// `lc[r,s]`: at most one VM of a request per server; ties the use
/// indicator `target[k]` to the placements.  `Sense::Eq` turns the row into
/// "used exactly when a VM sits here", which is valid because of the
/// at-most-one rule.
pub(crate) fn emit_location_rows(
    sys: &mut ModelSystem,
    rv: &ReqVars,
    target: &[usize],
    sense: Sense,
) -> Result<(), ModelError> {
    let r = rv.request;
    for k in 0..rv.ns {
        let mut coeffs: Vec<_> = rv.x.iter().map(|xs| (xs[k], 1.0)).collect();
        coeffs.push((target[k], -1.0));
        sys.add_row(format!("lc[r{r},s{k}]"), coeffs, sense, 0.0)?;
    }
    Ok(())
}

/// `ar[r,va-vb,s,a|b]`: assignment-consistency equalities.  For each
/// canonical pair `(a, b)` and each server `p`, summing the pair variable
/// over the partner's server recovers the placement variable:
///
/// * orientation `b`: `sum_{k != p} y[(a,b),(k,p)] = x[b,p]`,
/// * orientation `a`: `sum_{k != p} y[(a,b),(p,k)] = x[a,p]`.
///
/// Together with `ac` rows and `y >= 0` these pin every pair variable to
/// the product of its two placements whenever the placements are integral,
/// which is why the envelope rows can be dropped.
pub(crate) fn emit_consistency_rows(
    sys: &mut ModelSystem,
    rv: &ReqVars,
) -> Result<(), ModelError> {
    let r = rv.request;
    for (pair, &(a, b)) in rv.pairs.iter().enumerate() {
        for p in 0..rv.ns {
            let mut coeffs: Vec<_> = (0..rv.ns)
                .filter(|&k| k != p)
                .map(|k| (rv.y_slot(pair, k, p), 1.0))
                .collect();
            coeffs.push((rv.x[b][p], -1.0));
            sys.add_row(format!("ar[r{r},v{a}-{b},s{p},b]"), coeffs, Sense::Eq, 0.0)?;

            let mut coeffs: Vec<_> = (0..rv.ns)
                .filter(|&k| k != p)
                .map(|k| (rv.y_slot(pair, p, k), 1.0))
                .collect();
            coeffs.push((rv.x[a][p], -1.0));
            sys.add_row(format!("ar[r{r},v{a}-{b},s{p},a]"), coeffs, Sense::Eq, 0.0)?;
        }
    }
    Ok(())
}

/// `m1`/`m2`/`m3[r,va-vb,sk>p]`: envelope linearisation of the product
/// `y = x[a,k] * x[b,p]`:
///
/// * `m1`: `x[a,k] + x[b,p] - y <= 1`,
/// * `m2`: `y - x[a,k] <= 0`,
/// * `m3`: `y - x[b,p] <= 0`.
pub(crate) fn emit_envelope_rows(sys: &mut ModelSystem, rv: &ReqVars) -> Result<(), ModelError> {
    let r = rv.request;
    for (pair, &(a, b)) in rv.pairs.iter().enumerate() {
        for k in 0..rv.ns {
            for p in 0..rv.ns {
                if p == k {
                    continue;
                }
                let y = rv.y_slot(pair, k, p);
                let tag = format!("[r{r},v{a}-{b},s{k}>{p}]");
                sys.add_row(
                    format!("m1{tag}"),
                    [(rv.x[a][k], 1.0), (rv.x[b][p], 1.0), (y, -1.0)],
                    Sense::Le,
                    1.0,
                )?;
                sys.add_row(format!("m2{tag}"), [(y, 1.0), (rv.x[a][k], -1.0)], Sense::Le, 0.0)?;
                sys.add_row(format!("m3{tag}"), [(y, 1.0), (rv.x[b][p], -1.0)], Sense::Le, 0.0)?;
            }
        }
    }
    Ok(())
}

/// `ul[r,sk|p]`: pair-use limit.  For an ordered server pair `(k, p)` the
/// pair variables putting one endpoint on `k` and the other on `p` cannot
/// together exceed the use indicator of `k`:
/// `sum_pairs (y[(a,b),(k,p)] + y[(a,b),(p,k)]) <= target[k]`.
pub(crate) fn emit_pair_use_rows(
    sys: &mut ModelSystem,
    rv: &ReqVars,
    target: &[usize],
) -> Result<(), ModelError> {
    if rv.pairs.is_empty() {
        return Ok(());
    }
    let r = rv.request;
    for k in 0..rv.ns {
        for p in 0..rv.ns {
            if p == k {
                continue;
            }
            let mut coeffs = Vec::with_capacity(2 * rv.pairs.len() + 1);
            for pair in 0..rv.pairs.len() {
                coeffs.push((rv.y_slot(pair, k, p), 1.0));
                coeffs.push((rv.y_slot(pair, p, k), 1.0));
            }
            coeffs.push((target[k], -1.0));
            sys.add_row(format!("ul[r{r},s{k}|{p}]"), coeffs, Sense::Le, 0.0)?;
        }
    }
    Ok(())
}

/// `c1[r,va-vb,e]`: link-demand rows.  A traffic pair routed across edge
/// `e` (in either direction) forces the edge on:
/// `sum_{(k,p): e on route k->p} y[(a,b),(k,p)] <= target[e]`.
pub(crate) fn emit_link_demand_rows(
    sys: &mut ModelSystem,
    paths: &PathTable,
    rv: &ReqVars,
    target: &[usize],
) -> Result<(), ModelError> {
    let r = rv.request;
    for (pair, &(a, b)) in rv.pairs.iter().enumerate() {
        if rv.traffic[pair] <= 0.0 {
            continue;
        }
        for e in 0..target.len() {
            let on_edge = paths.pairs_on_edge(e);
            if on_edge.is_empty() {
                continue;
            }
            let mut coeffs: Vec<_> = on_edge
                .iter()
                .map(|&(k, p)| (rv.y_slot(pair, k, p), 1.0))
                .collect();
            coeffs.push((target[e], -1.0));
            sys.add_row(format!("c1[r{r},v{a}-{b},e{e}]"), coeffs, Sense::Le, 0.0)?;
        }
    }
    Ok(())
}

/// `c2[r,sk>p,e]`: path-load rows.  All traffic pairs of a request routed
/// along the same ordered route `k -> p` cross each edge of that route
/// together, and at most one of them can be nonzero at an integral point:
/// `sum_{traffic pairs} y[(a,b),(k,p)] <= target[e]` for every `e` on the
/// route.
pub(crate) fn emit_path_load_rows(
    sys: &mut ModelSystem,
    paths: &PathTable,
    rv: &ReqVars,
    target: &[usize],
) -> Result<(), ModelError> {
    let traffic_pairs: Vec<usize> = (0..rv.pairs.len())
        .filter(|&pair| rv.traffic[pair] > 0.0)
        .collect();
    if traffic_pairs.is_empty() {
        return Ok(());
    }
    let r = rv.request;
    for k in 0..rv.ns {
        for p in 0..rv.ns {
            if p == k {
                continue;
            }
            for &e in paths.path(k, p) {
                let mut coeffs: Vec<_> = traffic_pairs
                    .iter()
                    .map(|&pair| (rv.y_slot(pair, k, p), 1.0))
                    .collect();
                coeffs.push((target[e], -1.0));
                sys.add_row(format!("c2[r{r},s{k}>{p},e{e}]"), coeffs, Sense::Le, 0.0)?;
            }
        }
    }
    Ok(())
}

/// Per-server CPU load rows for a group of requests:
/// `sum_{r in group} sum_i c^{ri} x[r,i,k] - coeff(k) * target[k] <= 0`.
///
/// `owner` distinguishes row owners in the name: `kp[s0]` (aggregate),
/// `wd[r1,s0]` (one request), `wd[b0,s0]` (a block).
pub(crate) fn emit_group_cpu_rows(
    sys: &mut ModelSystem,
    inst: &Instance,
    group: &[&ReqVars],
    target: &[usize],
    coeff: &dyn Fn(usize) -> f64,
    owner: &str,
    tag: &str,
) -> Result<(), ModelError> {
    for k in 0..target.len() {
        let mut coeffs = Vec::new();
        for rv in group {
            let req = &inst.requests[rv.request];
            for (i, xs) in rv.x.iter().enumerate() {
                coeffs.push((xs[k], f64::from(req.vms[i].cpu)));
            }
        }
        coeffs.push((target[k], -coeff(k)));
        let name = if owner.is_empty() {
            format!("{tag}[s{k}]")
        } else {
            format!("{tag}[{owner},s{k}]")
        };
        sys.add_row(name, coeffs, Sense::Le, 0.0)?;
    }
    Ok(())
}

/// Per-server memory rows; same shape as [`emit_group_cpu_rows`].
pub(crate) fn emit_group_mem_rows(
    sys: &mut ModelSystem,
    inst: &Instance,
    group: &[&ReqVars],
    target: &[usize],
    coeff: &dyn Fn(usize) -> f64,
    owner: &str,
    tag: &str,
) -> Result<(), ModelError> {
    for k in 0..target.len() {
        let mut coeffs = Vec::new();
        for rv in group {
            let req = &inst.requests[rv.request];
            for (i, xs) in rv.x.iter().enumerate() {
                coeffs.push((xs[k], f64::from(req.vms[i].mem)));
            }
        }
        coeffs.push((target[k], -coeff(k)));
        let name = if owner.is_empty() {
            format!("{tag}[s{k}]")
        } else {
            format!("{tag}[{owner},s{k}]")
        };
        sys.add_row(name, coeffs, Sense::Le, 0.0)?;
    }
    Ok(())
}

/// Per-edge routed-traffic rows for a group of requests:
/// `sum_{r} sum_{traffic pairs} f * sum_{(k,p) on e} y - coeff(e) * target[e] <= 0`.
pub(crate) fn emit_group_traffic_rows(
    sys: &mut ModelSystem,
    paths: &PathTable,
    group: &[&ReqVars],
    target: &[usize],
    coeff: &dyn Fn(usize) -> f64,
    owner: &str,
    tag: &str,
) -> Result<(), ModelError> {
    for e in 0..target.len() {
        let mut coeffs = Vec::new();
        for rv in group {
            for (pair, &f) in rv.traffic.iter().enumerate() {
                if f <= 0.0 {
                    continue;
                }
                for &(k, p) in paths.pairs_on_edge(e) {
                    coeffs.push((rv.y_slot(pair, k, p), f));
                }
            }
        }
        coeffs.push((target[e], -coeff(e)));
        let name = if owner.is_empty() {
            format!("{tag}[e{e}]")
        } else {
            format!("{tag}[{owner},e{e}]")
        };
        sys.add_row(name, coeffs, Sense::Le, 0.0)?;
    }
    Ok(())
}

/// `c3`: at least `max_r |V^r| - 1` edges must be on — the largest request
/// needs that many to connect its servers.  Returns the row index, or
/// `None` when the bound is vacuous.
fn add_edge_count_row(
    sys: &mut ModelSystem,
    inst: &Instance,
    vs: &VarSpace,
) -> Result<Option<usize>, ModelError> {
    let need = inst.max_request_size().saturating_sub(1);
    if need == 0 {
        return Ok(None);
    }
    let coeffs: Vec<_> = vs.phi.iter().map(|&v| (v, 1.0)).collect();
    Ok(Some(sys.add_row("c3", coeffs, Sense::Ge, need as f64)?))
}

// ---------------------------------------------------------------------------
// Model builders.
// ---------------------------------------------------------------------------

/// A built formulation: the solver-ready system plus the variable layout.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub system: ModelSystem,
    pub vars: VarSpace,
}

/// Row indices of the coupling rows of the lifted tier, used to read off
/// shadow prices without parsing row names.
#[derive(Debug, Clone)]
pub struct LiftedIndex {
    /// `xw[s]`: `sum_r w[r,k] <= C_k th[k]`.
    pub cpl_cpu: Vec<usize>,
    /// `xz[s]`: `sum_r z[r,k] <= M_k th[k]`.
    pub cpl_mem: Vec<usize>,
    /// `xk[e]`: `sum_r kap[r,e] <= B_e ph[e]`.
    pub cpl_bw: Vec<usize>,
    /// `xt[r,s]`: `thr[r,k] <= th[k]`.
    pub cpl_server: Vec<Vec<usize>>,
    /// `xp[r,e]`: `phr[r,e] <= ph[e]`.
    pub cpl_edge: Vec<Vec<usize>>,
    /// `c3` row, if present.
    pub edge_count: Option<usize>,
}

/// A built lifted formulation.
#[derive(Debug, Clone)]
pub struct BuiltLifted {
    pub system: ModelSystem,
    pub vars: VarSpace,
    pub coupling: LiftedIndex,
}

/// Envelope-linearised model.
pub fn build_mc(
    inst: &Instance,
    paths: &PathTable,
    opts: FormulationOptions,
) -> Result<BuiltModel, ModelError> {
    let (mut sys, vs) = make_space(inst, opts, false)?;
    sys.name = format!("mc:{}", inst.name);
    let rvs: Vec<&ReqVars> = vs.req.iter().collect();
    for rv in &vs.req {
        emit_assignment_rows(&mut sys, rv)?;
        emit_location_rows(&mut sys, rv, &vs.theta, Sense::Le)?;
    }
    emit_group_cpu_rows(&mut sys, inst, &rvs, &vs.theta, &|k| {
        f64::from(inst.network.servers[k].cpu)
    }, "", "kp")?;
    emit_group_mem_rows(&mut sys, inst, &rvs, &vs.theta, &|k| {
        f64::from(inst.network.servers[k].mem)
    }, "", "km")?;
    emit_group_traffic_rows(&mut sys, paths, &rvs, &vs.phi, &|e| {
        inst.network.edges[e].bandwidth
    }, "", "qc")?;
    for rv in &vs.req {
        emit_envelope_rows(&mut sys, rv)?;
    }
    Ok(BuiltModel { system: sys, vars: vs })
}

/// Consistency-based model: envelopes replaced by `ar` equalities plus the
/// pair-use limits `ul`.
pub fn build_rlt(
    inst: &Instance,
    paths: &PathTable,
    opts: FormulationOptions,
) -> Result<BuiltModel, ModelError> {
    let (mut sys, vs) = make_space(inst, opts, false)?;
    sys.name = format!("rlt:{}", inst.name);
    let rvs: Vec<&ReqVars> = vs.req.iter().collect();
    for rv in &vs.req {
        emit_assignment_rows(&mut sys, rv)?;
        emit_consistency_rows(&mut sys, rv)?;
        emit_location_rows(&mut sys, rv, &vs.theta, Sense::Le)?;
        emit_pair_use_rows(&mut sys, rv, &vs.theta)?;
    }
    emit_group_cpu_rows(&mut sys, inst, &rvs, &vs.theta, &|k| {
        f64::from(inst.network.servers[k].cpu)
    }, "", "kp")?;
    emit_group_mem_rows(&mut sys, inst, &rvs, &vs.theta, &|k| {
        f64::from(inst.network.servers[k].mem)
    }, "", "km")?;
    emit_group_traffic_rows(&mut sys, paths, &rvs, &vs.phi, &|e| {
        inst.network.edges[e].bandwidth
    }, "", "qc")?;
    Ok(BuiltModel { system: sys, vars: vs })
}

/// Strongest compact model: [`build_rlt`] plus link-demand, path-load and
/// edge-count rows.
pub fn build_p1(
    inst: &Instance,
    paths: &PathTable,
    opts: FormulationOptions,
) -> Result<BuiltModel, ModelError> {
    let mut built = build_rlt(inst, paths, opts)?;
    built.system.name = format!("p1:{}", inst.name);
    for rv in &built.vars.req {
        emit_link_demand_rows(&mut built.system, paths, rv, &built.vars.phi)?;
        emit_path_load_rows(&mut built.system, paths, rv, &built.vars.phi)?;
    }
    add_edge_count_row(&mut built.system, inst, &built.vars)?;
    Ok(built)
}

/// Lifted model with per-request reserved capacities and on/off copies.
///
/// The global `th`/`ph` variables appear only in the objective, the
/// coupling rows and the edge-count row; every other row references the
/// per-request copies, so relaxing the coupling rows decomposes the model
/// by request.
pub fn build_p2(
    inst: &Instance,
    paths: &PathTable,
    opts: FormulationOptions,
) -> Result<BuiltLifted, ModelError> {
    let (mut sys, vs) = make_space(inst, opts, true)?;
    sys.name = format!("p2:{}", inst.name);
    let nr = inst.num_requests();

    for r in 0..nr {
        let rv = &vs.req[r];
        let owner = format!("r{r}");
        emit_assignment_rows(&mut sys, rv)?;
        emit_consistency_rows(&mut sys, rv)?;
        emit_location_rows(&mut sys, rv, &vs.theta_r[r], Sense::Le)?;
        emit_pair_use_rows(&mut sys, rv, &vs.theta_r[r])?;
        emit_link_demand_rows(&mut sys, paths, rv, &vs.phi_r[r])?;
        emit_path_load_rows(&mut sys, paths, rv, &vs.phi_r[r])?;
        // Reserved-capacity definitions.
        emit_group_cpu_rows(&mut sys, inst, &[rv], &vs.w[r], &|_| 1.0, &owner, "wd")?;
        emit_group_mem_rows(&mut sys, inst, &[rv], &vs.z[r], &|_| 1.0, &owner, "zd")?;
        emit_group_traffic_rows(&mut sys, paths, &[rv], &vs.kappa[r], &|_| 1.0, &owner, "kd")?;
        // Reserves are released while the request does not use the resource.
        for k in 0..vs.ns {
            let ck = f64::from(inst.network.servers[k].cpu);
            let mk = f64::from(inst.network.servers[k].mem);
            sys.add_row(
                format!("wc[r{r},s{k}]"),
                [(vs.w[r][k], 1.0), (vs.theta_r[r][k], -ck)],
                Sense::Le,
                0.0,
            )?;
            sys.add_row(
                format!("zc[r{r},s{k}]"),
                [(vs.z[r][k], 1.0), (vs.theta_r[r][k], -mk)],
                Sense::Le,
                0.0,
            )?;
        }
        for e in 0..vs.ne {
            let be = inst.network.edges[e].bandwidth;
            sys.add_row(
                format!("kc[r{r},e{e}]"),
                [(vs.kappa[r][e], 1.0), (vs.phi_r[r][e], -be)],
                Sense::Le,
                0.0,
            )?;
        }
    }

    // Coupling rows: reserved capacities fit the switched-on hardware, and
    // per-request use implies global use.
    let mut cpl_cpu = Vec::with_capacity(vs.ns);
    let mut cpl_mem = Vec::with_capacity(vs.ns);
    for k in 0..vs.ns {
        let ck = f64::from(inst.network.servers[k].cpu);
        let mk = f64::from(inst.network.servers[k].mem);
        let mut coeffs: Vec<_> = (0..nr).map(|r| (vs.w[r][k], 1.0)).collect();
        coeffs.push((vs.theta[k], -ck));
        cpl_cpu.push(sys.add_row(format!("xw[s{k}]"), coeffs, Sense::Le, 0.0)?);
        let mut coeffs: Vec<_> = (0..nr).map(|r| (vs.z[r][k], 1.0)).collect();
        coeffs.push((vs.theta[k], -mk));
        cpl_mem.push(sys.add_row(format!("xz[s{k}]"), coeffs, Sense::Le, 0.0)?);
    }
    let mut cpl_bw = Vec::with_capacity(vs.ne);
    for e in 0..vs.ne {
        let be = inst.network.edges[e].bandwidth;
        let mut coeffs: Vec<_> = (0..nr).map(|r| (vs.kappa[r][e], 1.0)).collect();
        coeffs.push((vs.phi[e], -be));
        cpl_bw.push(sys.add_row(format!("xk[e{e}]"), coeffs, Sense::Le, 0.0)?);
    }
    let mut cpl_server = Vec::with_capacity(nr);
    let mut cpl_edge = Vec::with_capacity(nr);
    for r in 0..nr {
        let mut rows = Vec::with_capacity(vs.ns);
        for k in 0..vs.ns {
            rows.push(sys.add_row(
                format!("xt[r{r},s{k}]"),
                [(vs.theta_r[r][k], 1.0), (vs.theta[k], -1.0)],
                Sense::Le,
                0.0,
            )?);
        }
        cpl_server.push(rows);
        let mut rows = Vec::with_capacity(vs.ne);
        for e in 0..vs.ne {
            rows.push(sys.add_row(
                format!("xp[r{r},e{e}]"),
                [(vs.phi_r[r][e], 1.0), (vs.phi[e], -1.0)],
                Sense::Le,
                0.0,
            )?);
        }
        cpl_edge.push(rows);
    }
    let edge_count = add_edge_count_row(&mut sys, inst, &vs)?;

    Ok(BuiltLifted {
        system: sys,
        vars: vs,
        coupling: LiftedIndex {
            cpl_cpu,
            cpl_mem,
            cpl_bw,
            cpl_server,
            cpl_edge,
            edge_count,
        },
    })
}

// ---------------------------------------------------------------------------
// Solution extraction.
// ---------------------------------------------------------------------------

/// Reads a mapping out of a (near-)integral primal point: each VM goes to
/// its largest placement variable, and the on/off switches follow the
/// `th`/`ph` values (forced on wherever the assignment actually uses the
/// hardware, so rounding noise cannot produce an invalid solution).
pub fn extract_solution(
    inst: &Instance,
    paths: &PathTable,
    vs: &VarSpace,
    primal: &[f64],
) -> MappingSolution {
    let mut assign = Vec::with_capacity(inst.num_requests());
    for rv in &vs.req {
        let mut per_vm = Vec::with_capacity(rv.x.len());
        for xs in &rv.x {
            let mut best = 0usize;
            for (k, &var) in xs.iter().enumerate() {
                if primal[var] > primal[xs[best]] {
                    best = k;
                }
            }
            per_vm.push(best);
        }
        assign.push(per_vm);
    }

    let mut server_on: Vec<bool> = vs.theta.iter().map(|&v| primal[v] > 0.5).collect();
    for per_vm in &assign {
        for &k in per_vm {
            server_on[k] = true;
        }
    }
    let mut edge_on: Vec<bool> = vs.phi.iter().map(|&v| primal[v] > 0.5).collect();
    let loads = edge_loads(inst, paths, &assign);
    for (e, &load) in loads.iter().enumerate() {
        if load > 0.0 {
            edge_on[e] = true;
        }
    }

    let mut server_fixed = 0.0;
    for (k, srv) in inst.network.servers.iter().enumerate() {
        if server_on[k] {
            server_fixed += srv.fixed_cost;
        }
    }
    let mut cpu_load = 0.0;
    for (r, req) in inst.requests.iter().enumerate() {
        for (i, vm) in req.vms.iter().enumerate() {
            let k = assign[r][i];
            cpu_load += inst.network.servers[k].cpu_load_cost * f64::from(vm.cpu);
        }
    }
    let mut edge_fixed = 0.0;
    for (e, edge) in inst.network.edges.iter().enumerate() {
        if edge_on[e] {
            edge_fixed += edge.fixed_cost;
        }
    }
    let breakdown = CostBreakdown {
        server_fixed,
        cpu_load,
        edge_fixed,
    };
    MappingSolution {
        assign,
        server_on,
        edge_on,
        objective: breakdown.total(),
        cost_breakdown: breakdown,
    }
}

// ---------------------------------------------------------------------------
// Dynamically generated rows.
// ---------------------------------------------------------------------------

/// Origin tag of a dynamically generated row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutFamily {
    /// Decomposition-bound rows generated from subproblem values.
    Lagrange,
    /// Rows forcing the switched-on subnetwork to stay connected.
    Connectivity,
    /// Neighbourhood restriction around an incumbent.
    LocalBranch,
    /// Objective cap used by the auxiliary bounding problems.
    ObjectiveCap,
}

/// Deduplicating, insertion-ordered store of dynamically generated rows.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    entries: Vec<(CutFamily, RowDef)>,
    seen: HashSet<u64>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a row unless an identical one (same coefficients, sense and
    /// right-hand side) is already present.  Returns whether it was added.
    pub fn add(&mut self, family: CutFamily, mut row: RowDef) -> bool {
        row.coeffs.sort_by_key(|&(j, _)| j);
        row.coeffs.dedup_by(|next, keep| {
            if next.0 == keep.0 {
                keep.1 += next.1;
                true
            } else {
                false
            }
        });
        row.coeffs.retain(|&(_, v)| v.abs() > 1e-12);
        let mut h = DefaultHasher::new();
        (row.sense as u8).hash(&mut h);
        row.rhs.to_bits().hash(&mut h);
        for &(j, v) in &row.coeffs {
            j.hash(&mut h);
            v.to_bits().hash(&mut h);
        }
        if !self.seen.insert(h.finish()) {
            return false;
        }
        self.entries.push((family, row));
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rows in insertion order.
    pub fn entries(&self) -> &[(CutFamily, RowDef)] {
        &self.entries
    }

    pub fn count(&self, family: CutFamily) -> usize {
        self.entries.iter().filter(|(f, _)| *f == family).count()
    }
}

/// Rows forcing the switched-on subnetwork to look like a connected graph:
///
/// * `cn_tree`: `sum_e ph[e] >= sum_k th[k] - 1` (a connected graph on `n`
///   nodes has at least `n - 1` edges),
/// * `cn_deg[s]` (only when some request has two or more VMs): a switched-on
///   server must have a switched-on incident edge.
///
/// Only valid when every optimal solution of interest uses a connected
/// subnetwork; the solver activates them after certifying that.
pub fn connectivity_rows(inst: &Instance, vs: &VarSpace) -> Vec<(CutFamily, RowDef)> {
    let mut out = Vec::new();
    let mut coeffs: Vec<_> = vs.phi.iter().map(|&v| (v, 1.0)).collect();
    coeffs.extend(vs.theta.iter().map(|&v| (v, -1.0)));
    out.push((
        CutFamily::Connectivity,
        RowDef {
            name: "cn_tree".into(),
            coeffs,
            sense: Sense::Ge,
            rhs: -1.0,
        },
    ));
    if inst.max_request_size() >= 2 {
        for k in 0..vs.ns {
            let mut coeffs = vec![(vs.theta[k], 1.0)];
            for e in inst.network.edges_at(k) {
                coeffs.push((vs.phi[e], -1.0));
            }
            out.push((
                CutFamily::Connectivity,
                RowDef {
                    name: format!("cn_deg[s{k}]"),
                    coeffs,
                    sense: Sense::Le,
                    rhs: 0.0,
                },
            ));
        }
    }
    out
}

/// `lb`: local-branching row around an incumbent.  The Hamming distance
/// from the incumbent's support (over `th`, `ph` and the placements) may be
/// at most `radius`, i.e. `sum_{vars at 1 in the incumbent} var >= ones - radius`.
pub fn local_branching_row(vs: &VarSpace, sol: &MappingSolution, radius: usize) -> RowDef {
    let mut coeffs = Vec::new();
    for (k, &on) in sol.server_on.iter().enumerate() {
        if on {
            coeffs.push((vs.theta[k], 1.0));
        }
    }
    for (e, &on) in sol.edge_on.iter().enumerate() {
        if on {
            coeffs.push((vs.phi[e], 1.0));
        }
    }
    for (r, per_vm) in sol.assign.iter().enumerate() {
        for (i, &k) in per_vm.iter().enumerate() {
            coeffs.push((vs.req[r].x[i][k], 1.0));
        }
    }
    let ones = coeffs.len();
    RowDef {
        name: "lb".into(),
        coeffs,
        sense: Sense::Ge,
        rhs: ones as f64 - radius as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{fixture_network, generate_instance, GeneratorConfig};
    use crate::model::validate_solution;
    use crate::paths::{build_path_table, EdgeWeightRule};
    use lpkit::{solve_lp, solve_mip, LpStatus, MipConfig, MipStatus};

    fn small_instance(requests: usize, vms: usize, seed: u64) -> Instance {
        let net = fixture_network("8x10").unwrap();
        let mut cfg = GeneratorConfig::new(requests, seed);
        cfg.vms_per_request = vms;
        generate_instance(&net, &cfg).unwrap()
    }

    fn count_prefix(sys: &ModelSystem, prefix: &str) -> usize {
        sys.rows()
            .iter()
            .filter(|r| r.name.starts_with(prefix) && {
                let rest = &r.name[prefix.len()..];
                rest.starts_with('[') || rest.is_empty()
            })
            .count()
    }

    /// Independent per-request pair/traffic recomputation for audits.
    fn expected_pairs(inst: &Instance, r: usize, all: bool) -> Vec<((usize, usize), f64)> {
        let req = &inst.requests[r];
        let nv = req.num_vms();
        let mut demand = vec![vec![0.0; nv]; nv];
        for l in &req.links {
            demand[l.i][l.j] = f64::from(l.traffic);
            demand[l.j][l.i] = f64::from(l.traffic);
        }
        let mut out = Vec::new();
        for a in 0..nv {
            for b in (a + 1)..nv {
                if all || demand[a][b] > 0.0 {
                    out.push(((a, b), demand[a][b]));
                }
            }
        }
        out
    }

    #[test]
    fn row_counts_follow_the_documented_formulas() {
        let inst = small_instance(2, 4, 11);
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let (ns, ne) = (inst.network.num_servers(), inst.network.num_edges());
        let nr = inst.num_requests();
        let total_vms: usize = inst.requests.iter().map(|r| r.num_vms()).sum();
        let pairs: usize = (0..nr).map(|r| expected_pairs(&inst, r, false).len()).sum();
        let ordered = ns * (ns - 1);

        let mc = build_mc(&inst, &paths, FormulationOptions::default()).unwrap();
        assert_eq!(count_prefix(&mc.system, "ac"), total_vms);
        assert_eq!(count_prefix(&mc.system, "lc"), nr * ns);
        assert_eq!(count_prefix(&mc.system, "kp"), ns);
        assert_eq!(count_prefix(&mc.system, "km"), ns);
        assert_eq!(count_prefix(&mc.system, "qc"), ne);
        assert_eq!(count_prefix(&mc.system, "m1"), pairs * ordered);
        assert_eq!(count_prefix(&mc.system, "m2"), pairs * ordered);
        assert_eq!(count_prefix(&mc.system, "m3"), pairs * ordered);
        assert_eq!(mc.vars.num_pair_vars(), pairs * ordered);

        let rlt = build_rlt(&inst, &paths, FormulationOptions::default()).unwrap();
        assert_eq!(count_prefix(&rlt.system, "ar"), pairs * ns * 2);
        assert_eq!(count_prefix(&rlt.system, "ul"), nr * ordered);
        assert_eq!(count_prefix(&rlt.system, "m1"), 0);

        let p1 = build_p1(&inst, &paths, FormulationOptions::default()).unwrap();
        let edges_with_routes = (0..ne)
            .filter(|&e| !paths.pairs_on_edge(e).is_empty())
            .count();
        let traffic_pairs: usize = (0..nr)
            .map(|r| {
                expected_pairs(&inst, r, false)
                    .iter()
                    .filter(|&&(_, f)| f > 0.0)
                    .count()
            })
            .sum();
        assert_eq!(count_prefix(&p1.system, "c1"), traffic_pairs * edges_with_routes);
        let route_len_total: usize = (0..ns)
            .flat_map(|k| (0..ns).filter(move |&p| p != k).map(move |p| (k, p)))
            .map(|(k, p)| paths.path(k, p).len())
            .sum();
        let reqs_with_traffic = (0..nr)
            .filter(|&r| {
                expected_pairs(&inst, r, false)
                    .iter()
                    .any(|&(_, f)| f > 0.0)
            })
            .count();
        assert_eq!(
            count_prefix(&p1.system, "c2"),
            reqs_with_traffic * route_len_total
        );
        assert_eq!(count_prefix(&p1.system, "c3"), 1);

        let p2 = build_p2(&inst, &paths, FormulationOptions::default()).unwrap();
        for tag in ["wd", "zd", "wc", "zc", "xt"] {
            assert_eq!(count_prefix(&p2.system, tag), nr * ns, "{tag}");
        }
        for tag in ["kd", "kc", "xp"] {
            assert_eq!(count_prefix(&p2.system, tag), nr * ne, "{tag}");
        }
        assert_eq!(count_prefix(&p2.system, "xw"), ns);
        assert_eq!(count_prefix(&p2.system, "xz"), ns);
        assert_eq!(count_prefix(&p2.system, "xk"), ne);
        assert_eq!(count_prefix(&p2.system, "kp"), 0);
        assert_eq!(count_prefix(&p2.system, "qc"), 0);
        // Coupling-row tally: capacity rows per server and edge, plus the
        // per-request use-implication rows.
        let coupling = 2 * ns + ne + nr * ns + nr * ne;
        assert_eq!(
            count_prefix(&p2.system, "xw")
                + count_prefix(&p2.system, "xz")
                + count_prefix(&p2.system, "xk")
                + count_prefix(&p2.system, "xt")
                + count_prefix(&p2.system, "xp"),
            coupling
        );
    }

    #[test]
    fn pair_variable_canonicalisation_mirrors_orientations() {
        let inst = small_instance(2, 4, 3);
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let built = build_rlt(&inst, &paths, FormulationOptions::default()).unwrap();
        let vs = &built.vars;
        for (r, rv) in vs.req.iter().enumerate() {
            for &(a, b) in &rv.pairs {
                for k in 0..vs.ns {
                    for p in 0..vs.ns {
                        if k == p {
                            continue;
                        }
                        let fwd = vs.y(r, a, b, k, p).unwrap();
                        let rev = vs.y(r, b, a, p, k).unwrap();
                        assert_eq!(fwd, rev);
                        assert!(vs.y(r, b, a, k, p).unwrap() != fwd || k == p);
                    }
                }
            }
        }
    }

    /// Audit: recompute the per-edge traffic rows from scratch using the
    /// path membership predicate instead of the reverse index.
    #[test]
    fn traffic_rows_match_an_independent_derivation() {
        let inst = small_instance(2, 5, 21);
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let built = build_mc(&inst, &paths, FormulationOptions::default()).unwrap();
        let vs = &built.vars;
        let ns = vs.ns;
        for e in 0..vs.ne {
            let row = built
                .system
                .rows()
                .iter()
                .find(|r| r.name == format!("qc[e{e}]"))
                .unwrap();
            let mut expected: Vec<(usize, f64)> = Vec::new();
            for (r, _) in inst.requests.iter().enumerate() {
                for ((a, b), f) in expected_pairs(&inst, r, false) {
                    if f <= 0.0 {
                        continue;
                    }
                    for k in 0..ns {
                        for p in 0..ns {
                            if k != p && paths.edge_on_path(e, k, p) {
                                expected.push((vs.y(r, a, b, k, p).unwrap(), f));
                            }
                        }
                    }
                }
            }
            expected.push((vs.phi[e], -inst.network.edges[e].bandwidth));
            expected.sort_by_key(|&(j, _)| j);
            let got: Vec<(usize, f64)> = row.coeffs.clone();
            assert_eq!(got, expected, "edge {e}");
        }
    }

    /// At integral placements the consistency equalities pin every pair
    /// variable to the product of its placements.
    #[test]
    fn consistency_rows_pin_pair_variables_at_integral_points() {
        let inst = small_instance(1, 4, 5);
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let built = build_rlt(&inst, &paths, FormulationOptions::default()).unwrap();
        let mut sys = built.system.clone();
        let vs = &built.vars;
        // Place VM i on server 2i (distinct, feasible capacity-wise is
        // irrelevant: we only keep assignment + consistency rows active by
        // minimising zero over the LP).
        let placement: Vec<usize> = (0..inst.requests[0].num_vms()).map(|i| 2 * i).collect();
        for (i, xs) in vs.req[0].x.iter().enumerate() {
            for (k, &var) in xs.iter().enumerate() {
                let v = if placement[i] == k { 1.0 } else { 0.0 };
                sys.set_bounds(var, v, v);
            }
        }
        for j in 0..sys.num_vars() {
            sys.set_obj(j, 0.0);
        }
        // Relax rows that could be infeasible at the arbitrary placement.
        let sol = solve_lp(&sys).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        for &(a, b) in &vs.req[0].pairs {
            for k in 0..vs.ns {
                for p in 0..vs.ns {
                    if k == p {
                        continue;
                    }
                    let want = if placement[a] == k && placement[b] == p {
                        1.0
                    } else {
                        0.0
                    };
                    let got = sol.primal[vs.y(0, a, b, k, p).unwrap()];
                    assert!(
                        (got - want).abs() < 1e-7,
                        "pair ({a},{b}) on ({k},{p}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn relaxation_chain_is_monotone_and_solutions_validate() {
        for seed in [1u64, 9, 42] {
            let inst = small_instance(2, 3, seed);
            let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
            let opts = FormulationOptions::default();
            let mc = build_mc(&inst, &paths, opts).unwrap();
            let rlt = build_rlt(&inst, &paths, opts).unwrap();
            let p1 = build_p1(&inst, &paths, opts).unwrap();
            let v_mc = solve_lp(&mc.system).unwrap();
            let v_rlt = solve_lp(&rlt.system).unwrap();
            let v_p1 = solve_lp(&p1.system).unwrap();
            assert_eq!(v_mc.status, LpStatus::Optimal);
            assert!(v_mc.objective <= v_rlt.objective + 1e-6, "seed {seed}");
            assert!(v_rlt.objective <= v_p1.objective + 1e-6, "seed {seed}");

            let mip = solve_mip(&p1.system, &MipConfig::default()).unwrap();
            assert_eq!(mip.status, MipStatus::Optimal, "seed {seed}");
            assert!(v_p1.objective <= mip.objective + 1e-6);
            let sol = extract_solution(&inst, &paths, &p1.vars, &mip.primal);
            assert!((sol.objective - mip.objective).abs() < 1e-6);
            let report = validate_solution(&inst, &paths, &sol).unwrap();
            assert!(report.all_passed(), "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn lifted_mip_matches_compact_mip() {
        let inst = small_instance(2, 3, 7);
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let opts = FormulationOptions::default();
        let p1 = build_p1(&inst, &paths, opts).unwrap();
        let p2 = build_p2(&inst, &paths, opts).unwrap();
        let m1 = solve_mip(&p1.system, &MipConfig::default()).unwrap();
        let m2 = solve_mip(&p2.system, &MipConfig::default()).unwrap();
        assert_eq!(m1.status, MipStatus::Optimal);
        assert_eq!(m2.status, MipStatus::Optimal);
        assert!(
            (m1.objective - m2.objective).abs() < 1e-6,
            "{} vs {}",
            m1.objective,
            m2.objective
        );
    }

    #[test]
    fn widening_the_pair_space_only_tightens_the_relaxation() {
        let inst = small_instance(2, 4, 13);
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let narrow = build_rlt(&inst, &paths, FormulationOptions::default()).unwrap();
        let wide = build_rlt(
            &inst,
            &paths,
            FormulationOptions { full_pairs: true },
        )
        .unwrap();
        assert!(wide.vars.num_pair_vars() >= narrow.vars.num_pair_vars());
        let lo = solve_lp(&narrow.system).unwrap();
        let hi = solve_lp(&wide.system).unwrap();
        assert!(hi.objective >= lo.objective - 1e-6);
    }

    #[test]
    fn cut_pool_deduplicates_identical_rows() {
        let mut pool = CutPool::new();
        let row = RowDef {
            name: "a".into(),
            coeffs: vec![(3, 1.0), (1, 2.0)],
            sense: Sense::Le,
            rhs: 4.0,
        };
        assert!(pool.add(CutFamily::Lagrange, row.clone()));
        // Same content, different name and coefficient order: still a dup.
        let again = RowDef {
            name: "b".into(),
            coeffs: vec![(1, 2.0), (3, 1.0)],
            sense: Sense::Le,
            rhs: 4.0,
        };
        assert!(!pool.add(CutFamily::Lagrange, again));
        let other = RowDef {
            name: "c".into(),
            coeffs: vec![(1, 2.0), (3, 1.0)],
            sense: Sense::Le,
            rhs: 5.0,
        };
        assert!(pool.add(CutFamily::Connectivity, other));
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.count(CutFamily::Lagrange), 1);
    }

    #[test]
    fn connectivity_and_local_branching_rows_have_the_right_shape() {
        let inst = small_instance(1, 3, 2);
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let built = build_p1(&inst, &paths, FormulationOptions::default()).unwrap();
        let rows = connectivity_rows(&inst, &built.vars);
        assert_eq!(rows.len(), 1 + built.vars.ns);
        assert_eq!(rows[0].1.name, "cn_tree");
        assert_eq!(rows[0].1.sense, Sense::Ge);
        assert_eq!(rows[0].1.rhs, -1.0);
        assert_eq!(
            rows[0].1.coeffs.len(),
            built.vars.ns + built.vars.ne
        );

        let mip = solve_mip(&built.system, &MipConfig::default()).unwrap();
        let sol = extract_solution(&inst, &paths, &built.vars, &mip.primal);
        let lb = local_branching_row(&built.vars, &sol, 15);
        let ones = sol.server_on.iter().filter(|&&b| b).count()
            + sol.edge_on.iter().filter(|&&b| b).count()
            + inst.requests.iter().map(|r| r.num_vms()).sum::<usize>();
        assert_eq!(lb.coeffs.len(), ones);
        assert_eq!(lb.rhs, ones as f64 - 15.0);
        assert_eq!(lb.sense, Sense::Ge);
    }

    /// The incumbent solution always satisfies its own local-branching row.
    #[test]
    fn incumbent_satisfies_its_local_branching_row() {
        let inst = small_instance(2, 3, 17);
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let built = build_p1(&inst, &paths, FormulationOptions::default()).unwrap();
        let mip = solve_mip(&built.system, &MipConfig::default()).unwrap();
        assert_eq!(mip.status, MipStatus::Optimal);
        let sol = extract_solution(&inst, &paths, &built.vars, &mip.primal);
        let lb = local_branching_row(&built.vars, &sol, 5);
        let activity: f64 = lb.coeffs.iter().map(|&(j, c)| c * mip.primal[j]).sum();
        assert!(activity >= lb.rhs - 1e-9);
    }

    /// Build-size smoke: a mid-size model assembles quickly and its LP
    /// relaxation solves to optimality.
    #[test]
    fn midsize_model_builds_and_its_relaxation_solves() {
        let net = fixture_network("12x15").unwrap();
        let mut cfg = GeneratorConfig::new(3, 23);
        cfg.vms_per_request = 5;
        let inst = generate_instance(&net, &cfg).unwrap();
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let built = build_p1(&inst, &paths, FormulationOptions::default()).unwrap();
        assert!(built.system.num_rows() < 40_000);
        let sol = solve_lp(&built.system).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective.is_finite() && sol.objective > 0.0);
    }
}
