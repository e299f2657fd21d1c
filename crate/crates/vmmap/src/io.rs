//! Instance serialization, the line-oriented network file format, bundled
//! topology fixtures, and the seeded random instance generator.

use std::error::Error;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Edge, Instance, ModelError, PhysicalNetwork, Server, VirtualRequest, VLink, Vm};

/// Current instance-file schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Maximum whole-request redraws before the generator gives up on
/// connectivity.
pub const MAX_REDRAWS: usize = 1000;

// ---------------------------------------------------------------------------
// Bundled network fixtures
// ---------------------------------------------------------------------------

/// Bundled topology fixtures, keyed by name.
pub const FIXTURE_NAMES: [&str; 4] = ["8x10", "12x15", "15x22", "22x36"];

/// Returns the raw text of a bundled network fixture, if the name is known.
/// Accepted names: `8x10`, `12x15`, `15x22`, `22x36`.
pub fn fixture_text(name: &str) -> Option<&'static str> {
    match name {
        "8x10" => Some(include_str!("../fixtures/net_8_10.txt")),
        "12x15" => Some(include_str!("../fixtures/net_12_15.txt")),
        "15x22" => Some(include_str!("../fixtures/net_15_22.txt")),
        "22x36" => Some(include_str!("../fixtures/net_22_36.txt")),
        _ => None,
    }
}

/// Parses a bundled fixture by name.
pub fn fixture_network(name: &str) -> Option<PhysicalNetwork> {
    fixture_text(name).map(|t| parse_network(t).expect("bundled fixtures are valid"))
}

// ---------------------------------------------------------------------------
// NETWORK text format
// ---------------------------------------------------------------------------

/// Parses the line-oriented NETWORK format:
///
/// ```text
/// servers N edges M
/// server <id> cpu <C> mem <M> fcost <F> acost <A>   (N lines)
/// edge <id> <k> <p> bw <B> wcost <W>                (M lines)
/// ```
///
/// Blank lines and `#` comments are ignored. The parsed network is fully
/// validated (connectivity, dense ids, no duplicate edges).
pub fn parse_network(text: &str) -> Result<PhysicalNetwork, IoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(no, l)| (no + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_no, header) = lines
        .next()
        .ok_or_else(|| IoError::Parse { line: 0, msg: "empty network file".into() })?;
    let ht: Vec<&str> = header.split_whitespace().collect();
    if ht.len() != 4 || ht[0] != "servers" || ht[2] != "edges" {
        return Err(IoError::Parse {
            line: header_no,
            msg: "expected header `servers N edges M`".into(),
        });
    }
    let n: usize = parse_num(ht[1], header_no)?;
    let m: usize = parse_num(ht[3], header_no)?;

    let mut servers = Vec::with_capacity(n);
    for _ in 0..n {
        let (no, l) = lines.next().ok_or_else(|| IoError::Parse {
            line: header_no,
            msg: format!("expected {} server lines", n),
        })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 10
            || t[0] != "server"
            || t[2] != "cpu"
            || t[4] != "mem"
            || t[6] != "fcost"
            || t[8] != "acost"
        {
            return Err(IoError::Parse {
                line: no,
                msg: "expected `server <id> cpu <C> mem <M> fcost <F> acost <A>`".into(),
            });
        }
        servers.push(Server {
            id: parse_num(t[1], no)?,
            cpu: parse_float(t[3], no)?,
            mem: parse_float(t[5], no)?,
            fixed_cost: parse_float(t[7], no)?,
            cpu_load_cost: parse_float(t[9], no)?,
        });
    }

    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (no, l) = lines.next().ok_or_else(|| IoError::Parse {
            line: header_no,
            msg: format!("expected {} edge lines", m),
        })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 8 || t[0] != "edge" || t[4] != "bw" || t[6] != "wcost" {
            return Err(IoError::Parse {
                line: no,
                msg: "expected `edge <id> <k> <p> bw <B> wcost <W>`".into(),
            });
        }
        let a: usize = parse_num(t[2], no)?;
        let b: usize = parse_num(t[3], no)?;
        edges.push(Edge {
            id: parse_num(t[1], no)?,
            a: a.min(b),
            b: a.max(b),
            bandwidth: parse_float(t[5], no)?,
            fixed_cost: parse_float(t[7], no)?,
        });
    }

    if let Some((no, _)) = lines.next() {
        return Err(IoError::Parse { line: no, msg: "unexpected trailing content".into() });
    }

    let net = PhysicalNetwork { servers, edges };
    net.validate().map_err(IoError::Model)?;
    Ok(net)
}

/// Writes a network back in the NETWORK text format.
pub fn write_network(net: &PhysicalNetwork) -> String {
    let mut out = String::new();
    out.push_str(&format!("servers {} edges {}\n", net.num_servers(), net.num_edges()));
    for s in &net.servers {
        out.push_str(&format!(
            "server {} cpu {} mem {} fcost {} acost {}\n",
            s.id, s.cpu, s.mem, s.fixed_cost, s.cpu_load_cost
        ));
    }
    for e in &net.edges {
        out.push_str(&format!(
            "edge {} {} {} bw {} wcost {}\n",
            e.id, e.a, e.b, e.bandwidth, e.fixed_cost
        ));
    }
    out
}

fn parse_num(tok: &str, line: usize) -> Result<usize, IoError> {
    tok.parse()
        .map_err(|_| IoError::Parse { line, msg: format!("expected an integer, got {:?}", tok) })
}

fn parse_float(tok: &str, line: usize) -> Result<f64, IoError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| IoError::Parse { line, msg: format!("expected a number, got {:?}", tok) })?;
    if !v.is_finite() {
        return Err(IoError::Parse { line, msg: format!("non-finite number {:?}", tok) });
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Instance JSON format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    schema_version: u32,
    name: String,
    network: PhysicalNetwork,
    requests: Vec<VirtualRequest>,
}

/// Serializes an instance to the versioned JSON format. The output is
/// deterministic, and [`read_instance`] round-trips it bit-exactly.
pub fn write_instance(inst: &Instance) -> String {
    let file = InstanceFile {
        schema_version: SCHEMA_VERSION,
        name: inst.name.clone(),
        network: inst.network.clone(),
        requests: inst.requests.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("instance serialization cannot fail");
    s.push('\n');
    s
}

/// Parses and validates an instance from the versioned JSON format.
pub fn read_instance(text: &str) -> Result<Instance, IoError> {
    let file: InstanceFile = serde_json::from_str(text)
        .map_err(|e| IoError::Parse { line: e.line(), msg: e.to_string() })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IoError::SchemaVersionMismatch {
            found: file.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let inst = Instance { name: file.name, network: file.network, requests: file.requests };
    inst.validate().map_err(IoError::Model)?;
    Ok(inst)
}

// ---------------------------------------------------------------------------
// Random instance generation
// ---------------------------------------------------------------------------

/// Parameters of the random instance generator. All draws are integers from
/// closed ranges; traffic 0 means "no virtual link".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub num_requests: usize,
    pub vms_per_request: usize,
    /// Inclusive integer range of per-pair traffic; a draw of 0 omits the link.
    pub traffic_range: (u32, u32),
    /// Inclusive integer range of per-VM CPU cores.
    pub cpu_range: (u32, u32),
    /// Inclusive integer range of per-VM memory (GB).
    pub mem_range: (u32, u32),
    /// (cores, GB) profiles drawn uniformly per server.
    pub server_profiles: Vec<(u32, u32)>,
    /// Per-core CPU load cost applied to every server (A_k).
    pub cpu_load_cost: f64,
    pub rng_seed: u64,
}

impl GeneratorConfig {
    /// Defaults: 5 VMs per request, traffic [0,100], CPU [1,10], memory
    /// [2,8], the four standard server profiles, load cost 10.
    pub fn new(num_requests: usize, rng_seed: u64) -> Self {
        GeneratorConfig {
            num_requests,
            vms_per_request: 5,
            traffic_range: (0, 100),
            cpu_range: (1, 10),
            mem_range: (2, 8),
            server_profiles: vec![(8, 128), (16, 256), (32, 512), (64, 1024)],
            cpu_load_cost: 10.0,
            rng_seed,
        }
    }

    fn validate(&self) -> Result<(), IoError> {
        let ok_range = |(lo, hi): (u32, u32)| lo <= hi;
        if self.num_requests == 0
            || self.vms_per_request == 0
            || !ok_range(self.traffic_range)
            || !ok_range(self.cpu_range)
            || self.cpu_range.0 == 0
            || !ok_range(self.mem_range)
            || self.mem_range.0 == 0
            || self.server_profiles.is_empty()
            || self.cpu_load_cost < 0.0
        {
            return Err(IoError::InvalidConfig);
        }
        Ok(())
    }
}

/// Generates a random instance on a fixed topology skeleton.
///
/// The skeleton supplies the graph along with server fixed costs and edge
/// bandwidth/cost data; the generator redraws each server's (CPU, memory)
/// pair uniformly from the configured profiles and overwrites the CPU load
/// cost with `cfg.cpu_load_cost`. Virtual requests draw per-VM demands and
/// per-pair traffic; a request whose positive-traffic links leave its graph
/// disconnected is redrawn wholesale, up to [`MAX_REDRAWS`] times.
///
/// Identical (skeleton, config) pairs produce identical instances.
pub fn generate_instance(
    skeleton: &PhysicalNetwork,
    cfg: &GeneratorConfig,
) -> Result<Instance, IoError> {
    cfg.validate()?;
    skeleton.validate().map_err(IoError::Model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let mut network = skeleton.clone();
    for s in &mut network.servers {
        let (c, m) = cfg.server_profiles[rng.gen_range(0..cfg.server_profiles.len())];
        s.cpu = c as f64;
        s.mem = m as f64;
        s.cpu_load_cost = cfg.cpu_load_cost;
    }

    let mut requests = Vec::with_capacity(cfg.num_requests);
    for id in 0..cfg.num_requests {
        let mut attempts = 0;
        let req = loop {
            let candidate = draw_request(id, cfg, &mut rng);
            if candidate.is_connected() {
                break candidate;
            }
            attempts += 1;
            if attempts >= MAX_REDRAWS {
                return Err(IoError::DisconnectedRequestAfterRetries { request: id });
            }
        };
        requests.push(req);
    }

    let inst = Instance {
        name: format!(
            "gen-s{}e{}-r{}-seed{}",
            network.num_servers(),
            network.num_edges(),
            cfg.num_requests,
            cfg.rng_seed
        ),
        network,
        requests,
    };
    inst.validate().map_err(IoError::Model)?;
    Ok(inst)
}

fn draw_request(id: usize, cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> VirtualRequest {
    let vms: Vec<Vm> = (0..cfg.vms_per_request)
        .map(|_| Vm {
            cpu: rng.gen_range(cfg.cpu_range.0..=cfg.cpu_range.1) as f64,
            mem: rng.gen_range(cfg.mem_range.0..=cfg.mem_range.1) as f64,
        })
        .collect();
    let mut links = Vec::new();
    for i in 0..cfg.vms_per_request {
        for j in (i + 1)..cfg.vms_per_request {
            let t = rng.gen_range(cfg.traffic_range.0..=cfg.traffic_range.1);
            if t > 0 {
                links.push(VLink { i, j, traffic: t as f64 });
            }
        }
    }
    VirtualRequest { id, vms, links }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from parsing, serialization, and generation.
#[derive(Debug)]
pub enum IoError {
    Parse { line: usize, msg: String },
    SchemaVersionMismatch { found: u32, expected: u32 },
    Model(ModelError),
    InvalidConfig,
    DisconnectedRequestAfterRetries { request: usize },
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Parse { line, msg } => write!(f, "parse error at line {}: {}", line, msg),
            IoError::SchemaVersionMismatch { found, expected } => {
                write!(f, "schema version {} unsupported (expected {})", found, expected)
            }
            IoError::Model(e) => write!(f, "{}", e),
            IoError::InvalidConfig => write!(f, "invalid generator configuration"),
            IoError::DisconnectedRequestAfterRetries { request } => write!(
                f,
                "request {} remained disconnected after {} redraws",
                request, MAX_REDRAWS
            ),
        }
    }
}

impl Error for IoError {}
