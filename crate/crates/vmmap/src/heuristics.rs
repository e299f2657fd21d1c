//! Construction heuristics: cheap feasible mappings and crash bases.
//!
//! The LP relaxations built by [`crate::formulations`] are dominated by
//! assignment equalities whose slacks are fixed at zero.  Starting the
//! simplex from the all-slack basis therefore means threading a long chain
//! of degenerate pivots before anything is feasible.  A first-fit greedy
//! mapping sidesteps that: any capacity- and bandwidth-respecting integral
//! assignment satisfies every row of every formulation tier, so pinning its
//! indicator variables at their upper bounds gives the solver a feasible
//! (or, for the lifted tier, near-feasible) starting point.

use lpkit::{Basis, ModelSystem, VarStatus};

use crate::formulations::VarSpace;
use crate::model::{validate_solution, Instance, MappingSolution};
use crate::paths::PathTable;

/// First-fit greedy mapping: VMs are placed request by request in index
/// order, each on the lowest-numbered server that respects anti-colocation,
/// CPU, memory, and — for the traffic to already-placed VMs of the same
/// request — every edge bandwidth along the routing paths.
///
/// Returns `None` when the greedy order runs into a dead end; the result,
/// when present, is always a fully validated feasible mapping.
pub fn greedy_placement(inst: &Instance, paths: &PathTable) -> Option<MappingSolution> {
    let ns = inst.network.num_servers();
    let mut used_cpu = vec![0.0f64; ns];
    let mut used_mem = vec![0.0f64; ns];
    let mut edge_load = vec![0.0f64; inst.network.num_edges()];
    let mut assign: Vec<Vec<usize>> = Vec::with_capacity(inst.requests.len());

    for req in &inst.requests {
        let nv = req.num_vms();
        let mut placed: Vec<usize> = Vec::with_capacity(nv);
        // Traffic of VM i towards VMs placed before it.
        let mut demand = vec![vec![0.0f64; nv]; nv];
        for l in &req.links {
            demand[l.i][l.j] = f64::from(l.traffic);
            demand[l.j][l.i] = f64::from(l.traffic);
        }
        for i in 0..nv {
            let vm = &req.vms[i];
            let mut chosen = None;
            'server: for (k, srv) in inst.network.servers.iter().enumerate() {
                if placed.contains(&k) {
                    continue; // anti-colocation within one request
                }
                if used_cpu[k] + f64::from(vm.cpu) > f64::from(srv.cpu)
                    || used_mem[k] + f64::from(vm.mem) > f64::from(srv.mem)
                {
                    continue;
                }
                // Bandwidth towards every already-placed neighbour.
                let mut extra = vec![0.0f64; edge_load.len()];
                for (j, &p) in placed.iter().enumerate() {
                    let f = demand[i][j];
                    if f <= 0.0 || p == k {
                        continue;
                    }
                    for &e in paths.path(k, p) {
                        extra[e] += f;
                    }
                }
                for (e, add) in extra.iter().enumerate() {
                    if *add > 0.0
                        && edge_load[e] + add > inst.network.edges[e].bandwidth
                    {
                        continue 'server;
                    }
                }
                for (e, add) in extra.iter().enumerate() {
                    edge_load[e] += add;
                }
                chosen = Some(k);
                break;
            }
            let k = chosen?;
            used_cpu[k] += f64::from(vm.cpu);
            used_mem[k] += f64::from(vm.mem);
            placed.push(k);
        }
        assign.push(placed);
    }

    let sol = MappingSolution::from_assignment(inst, paths, assign);
    match validate_solution(inst, paths, &sol) {
        Ok(report) if report.all_passed() => Some(sol),
        _ => None,
    }
}

/// Converts a feasible mapping into a starting basis for any formulation
/// tier built over `vs`: indicator variables of the mapping sit at their
/// upper bounds, everything else at its lower bound, and all row slacks are
/// basic.  For the compact tiers the resulting point is primal feasible, so
/// the solve starts directly in phase 2; the lifted tier additionally has to
/// pull in its reserved-capacity columns, a handful of non-degenerate
/// phase-1 pivots.
pub fn crash_basis(
    sys: &ModelSystem,
    vs: &VarSpace,
    paths: &PathTable,
    sol: &MappingSolution,
) -> Basis {
    let n = sys.num_vars();
    let m = sys.num_rows();
    let mut status = vec![VarStatus::AtLower; n + m];
    for s in status.iter_mut().skip(n) {
        *s = VarStatus::Basic;
    }

    for (r, rv) in vs.req.iter().enumerate() {
        for (i, &k) in sol.assign[r].iter().enumerate() {
            status[vs.x(r, i, k)] = VarStatus::AtUpper;
        }
        for (pair, &(a, b)) in rv.pairs.iter().enumerate() {
            let (ka, kb) = (sol.assign[r][a], sol.assign[r][b]);
            if ka != kb {
                status[rv.y_slot(pair, ka, kb)] = VarStatus::AtUpper;
            }
        }
    }
    for (k, &on) in sol.server_on.iter().enumerate() {
        if on {
            status[vs.theta[k]] = VarStatus::AtUpper;
        }
    }
    for (e, &on) in sol.edge_on.iter().enumerate() {
        if on {
            status[vs.phi[e]] = VarStatus::AtUpper;
        }
    }

    if vs.lifted {
        for (r, rv) in vs.req.iter().enumerate() {
            for &k in &sol.assign[r] {
                status[vs.theta_r[r][k]] = VarStatus::AtUpper;
            }
            // Edges loaded by this request alone.
            for (pair, &(a, b)) in rv.pairs.iter().enumerate() {
                if rv.traffic[pair] <= 0.0 {
                    continue;
                }
                let (ka, kb) = (sol.assign[r][a], sol.assign[r][b]);
                if ka == kb {
                    continue;
                }
                for &e in paths.path(ka, kb) {
                    status[vs.phi_r[r][e]] = VarStatus::AtUpper;
                }
            }
        }
    }

    Basis(status)
}
