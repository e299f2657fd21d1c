//! Core domain types: the physical network, virtual requests, problem
//! instances, and mapping solutions, together with independent solution
//! validation.
//!
//! Everything here is immutable after construction and safe to share across
//! threads.  Costs and capacities are stored as `f64` even though input files
//! usually carry integers, because dual values and Lagrange multipliers are
//! fractional.

use std::error::Error;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::paths::PathTable;

/// Absolute tolerance for cost comparisons.
pub const COST_ABS_TOL: f64 = 1e-6;
/// Relative tolerance for cost comparisons.
pub const COST_REL_TOL: f64 = 1e-9;

/// Returns true when two cost values agree within the repo-wide tolerance
/// (absolute 1e-6 or relative 1e-9, whichever is looser).
pub fn costs_equal(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= COST_ABS_TOL.max(COST_REL_TOL * scale)
}

/// A physical server: CPU cores, memory, a fixed activation cost, and a
/// per-core cost for CPU load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Server {
    pub id: usize,
    /// CPU cores available (C_k).
    pub cpu: f64,
    /// Memory available in GB (M_k).
    pub mem: f64,
    /// Fixed cost of switching the server on (F_k).
    pub fixed_cost: f64,
    /// Cost per core of CPU load (A_k).
    pub cpu_load_cost: f64,
}

/// An undirected physical link between two servers with a bandwidth limit
/// and a fixed activation cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    /// Endpoint server ids; stored with `a < b`.
    pub a: usize,
    pub b: usize,
    /// Bandwidth capacity in Mbps (B_e).
    pub bandwidth: f64,
    /// Fixed cost of switching the link on (W_e).
    pub fixed_cost: f64,
}

impl Edge {
    /// True when server `k` is an endpoint of this edge.
    pub fn touches(&self, k: usize) -> bool {
        self.a == k || self.b == k
    }
}

/// The substrate: servers plus undirected links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalNetwork {
    pub servers: Vec<Server>,
    pub edges: Vec<Edge>,
}

impl PhysicalNetwork {
    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge ids incident to server `k`.
    pub fn edges_at(&self, k: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.touches(k)).map(|e| e.id).collect()
    }

    /// Checks the structural invariants: dense 0-based ids, no self-loops,
    /// at most one edge per server pair, connectivity, sane numbers.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.servers.is_empty() {
            return Err(ModelError::Invalid("network has no servers".into()));
        }
        for (i, s) in self.servers.iter().enumerate() {
            if s.id != i {
                return Err(ModelError::Invalid(format!(
                    "server ids must be dense 0-based; position {} has id {}",
                    i, s.id
                )));
            }
            if s.cpu < 1.0 || s.mem < 1.0 || s.fixed_cost < 0.0 || s.cpu_load_cost < 0.0 {
                return Err(ModelError::Invalid(format!("server {} has invalid parameters", i)));
            }
        }
        let n = self.servers.len();
        let mut seen_pairs = std::collections::BTreeSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.id != i {
                return Err(ModelError::Invalid(format!(
                    "edge ids must be dense 0-based; position {} has id {}",
                    i, e.id
                )));
            }
            if e.a >= n || e.b >= n {
                return Err(ModelError::Invalid(format!("edge {} references unknown server", i)));
            }
            if e.a == e.b {
                return Err(ModelError::Invalid(format!("edge {} is a self-loop", i)));
            }
            if e.a > e.b {
                return Err(ModelError::Invalid(format!("edge {} endpoints not ordered", i)));
            }
            if !seen_pairs.insert((e.a, e.b)) {
                return Err(ModelError::Invalid(format!(
                    "duplicate edge between servers {} and {}",
                    e.a, e.b
                )));
            }
            if e.bandwidth < 0.0 || e.fixed_cost < 0.0 {
                return Err(ModelError::Invalid(format!("edge {} has invalid parameters", i)));
            }
        }
        if !self.is_connected() {
            return Err(ModelError::Disconnected);
        }
        Ok(())
    }

    /// BFS connectivity over all servers.
    pub fn is_connected(&self) -> bool {
        let n = self.servers.len();
        if n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }
}

/// One virtual machine's resource demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vm {
    /// Required CPU cores (c^{ri}).
    pub cpu: f64,
    /// Required memory in GB (m^{ri}).
    pub mem: f64,
}

/// A traffic demand between two VMs of the same request; stored with `i < j`
/// and strictly positive throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VLink {
    pub i: usize,
    pub j: usize,
    /// Required throughput in Mbps (f^{rij}).
    pub traffic: f64,
}

/// A virtual request: a connected graph of VMs and traffic links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualRequest {
    pub id: usize,
    pub vms: Vec<Vm>,
    pub links: Vec<VLink>,
}

impl VirtualRequest {
    pub fn num_vms(&self) -> usize {
        self.vms.len()
    }

    /// Checks VM/link invariants and request-graph connectivity.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vms.is_empty() {
            return Err(ModelError::Invalid(format!("request {} has no VMs", self.id)));
        }
        for (i, vm) in self.vms.iter().enumerate() {
            if vm.cpu < 1.0 || vm.mem < 1.0 {
                return Err(ModelError::Invalid(format!(
                    "request {} VM {} has invalid demands",
                    self.id, i
                )));
            }
        }
        let n = self.vms.len();
        let mut seen = std::collections::BTreeSet::new();
        for l in &self.links {
            if l.i >= n || l.j >= n {
                return Err(ModelError::Invalid(format!(
                    "request {} link references unknown VM",
                    self.id
                )));
            }
            if l.i >= l.j {
                return Err(ModelError::Invalid(format!(
                    "request {} link endpoints must satisfy i < j",
                    self.id
                )));
            }
            if l.traffic <= 0.0 {
                return Err(ModelError::Invalid(format!(
                    "request {} carries a non-positive traffic link",
                    self.id
                )));
            }
            if !seen.insert((l.i, l.j)) {
                return Err(ModelError::Invalid(format!(
                    "request {} has a duplicate link ({}, {})",
                    self.id, l.i, l.j
                )));
            }
        }
        if !self.is_connected() {
            return Err(ModelError::Disconnected);
        }
        Ok(())
    }

    /// BFS connectivity of the request graph (single VMs are connected).
    pub fn is_connected(&self) -> bool {
        let n = self.vms.len();
        if n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for l in &self.links {
            adj[l.i].push(l.j);
            adj[l.j].push(l.i);
        }
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }
}

/// A complete problem datum: one physical network plus the batch of virtual
/// requests to host on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub network: PhysicalNetwork,
    pub requests: Vec<VirtualRequest>,
}

impl Instance {
    pub fn num_requests(&self) -> usize {
        self.requests.len()
    }

    pub fn num_vms(&self) -> usize {
        self.requests.iter().map(|r| r.num_vms()).sum()
    }

    /// The largest request size, i.e. max_r |V^r|.
    pub fn max_request_size(&self) -> usize {
        self.requests.iter().map(|r| r.num_vms()).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.network.validate()?;
        if self.requests.is_empty() {
            return Err(ModelError::Invalid("instance has no requests".into()));
        }
        for (i, r) in self.requests.iter().enumerate() {
            if r.id != i {
                return Err(ModelError::Invalid(format!(
                    "request ids must be dense 0-based; position {} has id {}",
                    i, r.id
                )));
            }
            r.validate()?;
        }
        Ok(())
    }
}

/// The three additive cost terms of a mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Sum of F_k over switched-on servers.
    pub server_fixed: f64,
    /// Sum over servers of A_k times the hosted CPU demand.
    pub cpu_load: f64,
    /// Sum of W_e over switched-on edges.
    pub edge_fixed: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.server_fixed + self.cpu_load + self.edge_fixed
    }
}

/// A complete candidate solution: VM→server assignment plus on/off states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingSolution {
    /// `assign[r][i]` is the server hosting VM `i` of request `r`.
    pub assign: Vec<Vec<usize>>,
    /// Server on/off switches (θ).
    pub server_on: Vec<bool>,
    /// Edge on/off switches (φ).
    pub edge_on: Vec<bool>,
    pub objective: f64,
    pub cost_breakdown: CostBreakdown,
}

impl MappingSolution {
    /// Builds a solution from a raw assignment: switches on exactly the used
    /// servers, routes traffic to find the used edges, and prices the result.
    /// Does not check capacities — callers wanting guarantees should run
    /// [`validate_solution`].
    pub fn from_assignment(inst: &Instance, paths: &PathTable, assign: Vec<Vec<usize>>) -> Self {
        let ns = inst.network.num_servers();
        let mut server_on = vec![false; ns];
        for row in &assign {
            for &k in row {
                server_on[k] = true;
            }
        }
        let load = edge_loads(inst, paths, &assign);
        let edge_on: Vec<bool> = load.iter().map(|&t| t > 0.0).collect();
        let cost_breakdown = price(inst, &assign, &server_on, &edge_on);
        MappingSolution {
            assign,
            server_on,
            edge_on,
            objective: cost_breakdown.total(),
            cost_breakdown,
        }
    }
}

/// Total routed traffic per edge induced by an assignment: for every request
/// link {i, j} placed on distinct servers (k, p), its throughput loads every
/// edge of the fixed path P_kp.
pub fn edge_loads(inst: &Instance, paths: &PathTable, assign: &[Vec<usize>]) -> Vec<f64> {
    let mut load = vec![0.0; inst.network.num_edges()];
    for (r, req) in inst.requests.iter().enumerate() {
        for l in &req.links {
            let k = assign[r][l.i];
            let p = assign[r][l.j];
            if k != p {
                for &e in paths.path(k, p) {
                    load[e] += l.traffic;
                }
            }
        }
    }
    load
}

fn price(inst: &Instance, assign: &[Vec<usize>], server_on: &[bool], edge_on: &[bool]) -> CostBreakdown {
    let mut server_fixed = 0.0;
    let mut cpu_load = 0.0;
    for (k, s) in inst.network.servers.iter().enumerate() {
        if server_on[k] {
            server_fixed += s.fixed_cost;
        }
    }
    for (r, req) in inst.requests.iter().enumerate() {
        for (i, vm) in req.vms.iter().enumerate() {
            let k = assign[r][i];
            cpu_load += inst.network.servers[k].cpu_load_cost * vm.cpu;
        }
    }
    let mut edge_fixed = 0.0;
    for (e, edge) in inst.network.edges.iter().enumerate() {
        if edge_on[e] {
            edge_fixed += edge.fixed_cost;
        }
    }
    CostBreakdown { server_fixed, cpu_load, edge_fixed }
}

/// Recomputes the objective of a structurally valid solution from scratch.
pub fn objective_of(inst: &Instance, sol: &MappingSolution) -> f64 {
    price(inst, &sol.assign, &sol.server_on, &sol.edge_on).total()
}

/// The constraint families checked by [`validate_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Each VM is assigned to exactly one in-range server.
    Assignment,
    /// At most one VM of each request per server.
    Separation,
    /// CPU capacity per switched-on server.
    CpuCapacity,
    /// Memory capacity per switched-on server.
    MemCapacity,
    /// Routed traffic within bandwidth on switched-on edges.
    Bandwidth,
    /// Used servers and edges are switched on.
    Switches,
    /// Stored objective matches the recomputed breakdown.
    Objective,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Family::Assignment => "assignment",
            Family::Separation => "separation",
            Family::CpuCapacity => "cpu-capacity",
            Family::MemCapacity => "mem-capacity",
            Family::Bandwidth => "bandwidth",
            Family::Switches => "switches",
            Family::Objective => "objective",
        };
        f.write_str(name)
    }
}

/// Outcome of checking one constraint family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub passed: bool,
    /// Human-readable description of the first violation, when any.
    pub first_violation: Option<String>,
}

/// Per-family validation outcome plus the independently recomputed objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub families: Vec<FamilyReport>,
    pub recomputed_objective: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.families.iter().all(|f| f.passed)
    }

    pub fn family(&self, family: Family) -> &FamilyReport {
        self.families.iter().find(|f| f.family == family).expect("family always reported")
    }
}

/// Checks a solution against every constraint family of the mapping model and
/// recomputes its objective independently.
///
/// Index errors (wrong vector shapes, out-of-range server ids) are reported
/// as `Err`; constraint violations are reported per family in the `Ok` value.
pub fn validate_solution(
    inst: &Instance,
    paths: &PathTable,
    sol: &MappingSolution,
) -> Result<ValidationReport, ModelError> {
    let ns = inst.network.num_servers();
    let ne = inst.network.num_edges();
    if sol.assign.len() != inst.requests.len() {
        return Err(ModelError::IndexOutOfRange(format!(
            "solution covers {} requests, instance has {}",
            sol.assign.len(),
            inst.requests.len()
        )));
    }
    if sol.server_on.len() != ns || sol.edge_on.len() != ne {
        return Err(ModelError::IndexOutOfRange(
            "switch vectors do not match the network size".into(),
        ));
    }
    for (r, req) in inst.requests.iter().enumerate() {
        if sol.assign[r].len() != req.num_vms() {
            return Err(ModelError::IndexOutOfRange(format!(
                "request {} has {} VMs but the solution assigns {}",
                r,
                req.num_vms(),
                sol.assign[r].len()
            )));
        }
        for (i, &k) in sol.assign[r].iter().enumerate() {
            if k >= ns {
                return Err(ModelError::IndexOutOfRange(format!(
                    "VM {} of request {} is mapped to unknown server {}",
                    i, r, k
                )));
            }
        }
    }

    let mut families = Vec::new();

    // Assignment: the representation maps each VM to exactly one server, so
    // after the shape checks above this family can only pass; it is reported
    // for completeness.
    families.push(FamilyReport {
        family: Family::Assignment,
        passed: true,
        first_violation: None,
    });

    // Separation: at most one VM of each request per server.
    let mut sep_violation = None;
    'sep: for (r, row) in sol.assign.iter().enumerate() {
        let mut used = vec![false; ns];
        for (i, &k) in row.iter().enumerate() {
            if used[k] {
                sep_violation =
                    Some(format!("request {} places two VMs on server {} (VM {})", r, k, i));
                break 'sep;
            }
            used[k] = true;
        }
    }
    families.push(FamilyReport {
        family: Family::Separation,
        passed: sep_violation.is_none(),
        first_violation: sep_violation,
    });

    // Capacity families.
    let mut cpu_used = vec![0.0; ns];
    let mut mem_used = vec![0.0; ns];
    for (r, req) in inst.requests.iter().enumerate() {
        for (i, vm) in req.vms.iter().enumerate() {
            let k = sol.assign[r][i];
            cpu_used[k] += vm.cpu;
            mem_used[k] += vm.mem;
        }
    }
    let mut cpu_violation = None;
    let mut mem_violation = None;
    for k in 0..ns {
        let cap_on = if sol.server_on[k] { 1.0 } else { 0.0 };
        let s = &inst.network.servers[k];
        if cpu_violation.is_none() && cpu_used[k] > s.cpu * cap_on + COST_ABS_TOL {
            cpu_violation = Some(format!(
                "server {} hosts {} cores of {} available",
                k,
                cpu_used[k],
                s.cpu * cap_on
            ));
        }
        if mem_violation.is_none() && mem_used[k] > s.mem * cap_on + COST_ABS_TOL {
            mem_violation = Some(format!(
                "server {} hosts {} GB of {} available",
                k,
                mem_used[k],
                s.mem * cap_on
            ));
        }
    }
    families.push(FamilyReport {
        family: Family::CpuCapacity,
        passed: cpu_violation.is_none(),
        first_violation: cpu_violation,
    });
    families.push(FamilyReport {
        family: Family::MemCapacity,
        passed: mem_violation.is_none(),
        first_violation: mem_violation,
    });

    // Bandwidth: routed traffic per edge within B_e, and zero on off edges.
    let load = edge_loads(inst, paths, &sol.assign);
    let mut bw_violation = None;
    for e in 0..ne {
        let cap = if sol.edge_on[e] { inst.network.edges[e].bandwidth } else { 0.0 };
        if load[e] > cap + COST_ABS_TOL {
            bw_violation = Some(format!(
                "edge {} carries {} Mbps of {} available",
                e, load[e], cap
            ));
            break;
        }
    }
    families.push(FamilyReport {
        family: Family::Bandwidth,
        passed: bw_violation.is_none(),
        first_violation: bw_violation,
    });

    // Switches: every used server is on (the converse is allowed — switching
    // on an unused server is wasteful but not infeasible).
    let mut sw_violation = None;
    'sw: for (r, row) in sol.assign.iter().enumerate() {
        for (i, &k) in row.iter().enumerate() {
            if !sol.server_on[k] {
                sw_violation =
                    Some(format!("VM {} of request {} uses switched-off server {}", i, r, k));
                break 'sw;
            }
        }
    }
    families.push(FamilyReport {
        family: Family::Switches,
        passed: sw_violation.is_none(),
        first_violation: sw_violation,
    });

    // Objective: stored value must match the recomputed breakdown.
    let recomputed = objective_of(inst, sol);
    let breakdown_total = sol.cost_breakdown.total();
    let obj_ok = costs_equal(recomputed, sol.objective) && costs_equal(breakdown_total, sol.objective);
    families.push(FamilyReport {
        family: Family::Objective,
        passed: obj_ok,
        first_violation: if obj_ok {
            None
        } else {
            Some(format!(
                "stored objective {} differs from recomputed {}",
                sol.objective, recomputed
            ))
        },
    });

    Ok(ValidationReport { families, recomputed_objective: recomputed })
}

/// Errors produced by domain-type construction and validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A structural invariant is violated.
    Invalid(String),
    /// The network or a request graph is not connected.
    Disconnected,
    /// A solution references indices outside the instance.
    IndexOutOfRange(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Invalid(msg) => write!(f, "invalid model: {}", msg),
            ModelError::Disconnected => write!(f, "graph is not connected"),
            ModelError::IndexOutOfRange(msg) => write!(f, "index out of range: {}", msg),
        }
    }
}

impl Error for ModelError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{build_path_table, EdgeWeightRule};

    fn line_network(n: usize) -> PhysicalNetwork {
        let servers = (0..n)
            .map(|id| Server { id, cpu: 32.0, mem: 512.0, fixed_cost: 10.0 + id as f64, cpu_load_cost: 10.0 })
            .collect();
        let edges = (0..n - 1)
            .map(|id| Edge { id, a: id, b: id + 1, bandwidth: 1000.0, fixed_cost: 5.0 })
            .collect();
        PhysicalNetwork { servers, edges }
    }

    fn one_vm_instance() -> Instance {
        Instance {
            name: "unit".into(),
            network: line_network(2),
            requests: vec![VirtualRequest {
                id: 0,
                vms: vec![Vm { cpu: 3.0, mem: 4.0 }],
                links: vec![],
            }],
        }
    }

    #[test]
    fn single_vm_solution_passes_all_families() {
        let inst = one_vm_instance();
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let sol = MappingSolution::from_assignment(&inst, &paths, vec![vec![0]]);
        let report = validate_solution(&inst, &paths, &sol).unwrap();
        assert!(report.all_passed(), "{:?}", report);
        // F_0 + A_0 * c = 10 + 10*3
        assert!(costs_equal(sol.objective, 40.0));
    }

    #[test]
    fn co_located_vms_fail_the_separation_family() {
        let mut inst = one_vm_instance();
        inst.requests[0].vms.push(Vm { cpu: 2.0, mem: 2.0 });
        inst.requests[0].links.push(VLink { i: 0, j: 1, traffic: 10.0 });
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let sol = MappingSolution::from_assignment(&inst, &paths, vec![vec![0, 0]]);
        let report = validate_solution(&inst, &paths, &sol).unwrap();
        assert!(!report.family(Family::Separation).passed);
        assert!(report.family(Family::Bandwidth).passed, "co-located traffic is not routed");
    }

    #[test]
    fn capacity_overflow_is_detected() {
        let mut inst = one_vm_instance();
        inst.requests[0].vms[0].cpu = 64.0; // above the 32-core server
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let sol = MappingSolution::from_assignment(&inst, &paths, vec![vec![0]]);
        let report = validate_solution(&inst, &paths, &sol).unwrap();
        assert!(!report.family(Family::CpuCapacity).passed);
    }

    #[test]
    fn switched_off_edge_with_traffic_fails_bandwidth() {
        let mut inst = one_vm_instance();
        inst.requests[0].vms.push(Vm { cpu: 2.0, mem: 2.0 });
        inst.requests[0].links.push(VLink { i: 0, j: 1, traffic: 10.0 });
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let mut sol = MappingSolution::from_assignment(&inst, &paths, vec![vec![0, 1]]);
        assert!(sol.edge_on[0]);
        sol.edge_on[0] = false;
        sol.cost_breakdown.edge_fixed = 0.0;
        sol.objective = sol.cost_breakdown.total();
        let report = validate_solution(&inst, &paths, &sol).unwrap();
        assert!(!report.family(Family::Bandwidth).passed);
    }

    #[test]
    fn objective_mismatch_is_detected() {
        let inst = one_vm_instance();
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let mut sol = MappingSolution::from_assignment(&inst, &paths, vec![vec![0]]);
        sol.objective += 1.0;
        let report = validate_solution(&inst, &paths, &sol).unwrap();
        assert!(!report.family(Family::Objective).passed);
    }

    #[test]
    fn malformed_solution_is_an_error() {
        let inst = one_vm_instance();
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let sol = MappingSolution {
            assign: vec![vec![7]],
            server_on: vec![false, false],
            edge_on: vec![false],
            objective: 0.0,
            cost_breakdown: CostBreakdown { server_fixed: 0.0, cpu_load: 0.0, edge_fixed: 0.0 },
        };
        assert!(matches!(
            validate_solution(&inst, &paths, &sol),
            Err(ModelError::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn extra_open_server_costs_exactly_its_fixed_cost() {
        let inst = one_vm_instance();
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let base = MappingSolution::from_assignment(&inst, &paths, vec![vec![0]]);
        let mut extra = base.clone();
        extra.server_on[1] = true;
        let with = objective_of(&inst, &extra);
        assert!(costs_equal(with - base.objective, inst.network.servers[1].fixed_cost));
    }

    #[test]
    fn network_validation_rejects_duplicates_and_loops() {
        let mut net = line_network(3);
        net.edges.push(Edge { id: 2, a: 0, b: 1, bandwidth: 1.0, fixed_cost: 0.0 });
        assert!(matches!(net.validate(), Err(ModelError::Invalid(_))));

        let mut net2 = line_network(3);
        net2.edges[0].b = 0;
        assert!(matches!(net2.validate(), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn disconnected_request_is_rejected() {
        let req = VirtualRequest {
            id: 0,
            vms: vec![Vm { cpu: 1.0, mem: 2.0 }, Vm { cpu: 1.0, mem: 2.0 }],
            links: vec![],
        };
        assert_eq!(req.validate(), Err(ModelError::Disconnected));
    }
}
