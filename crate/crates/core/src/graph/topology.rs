//! Topology files and built-in generators.
//!
//! A topology file is TOML:
//!
//! ```toml
//! [[nodes]]
//! id = 1
//! h = 1.0          # seconds per gradient, `inf` for a switch
//!
//! [[links]]
//! a = 1
//! b = 2
//! bandwidth = 2.0  # coordinates per second, both directions
//! latency = 0.0    # optional, seconds
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GraphError, NodeId, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: NodeId,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: NodeId,
    pub b: NodeId,
    pub bandwidth: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("{0}")]
    Parse(String),
    #[error("line {line}: {source}")]
    InvalidAt { line: usize, source: GraphError },
    #[error(transparent)]
    Invalid(#[from] GraphError),
    #[error("bad generator `{spec}`: {reason}")]
    Generator { spec: String, reason: String },
}

/// Validates a topology description into a graph.
pub fn build_graph(spec: &TopologySpec) -> Result<WeightedGraph, GraphError> {
    let nodes: Vec<(NodeId, f64)> = spec.nodes.iter().map(|n| (n.id, n.h)).collect();
    let links: Vec<(NodeId, NodeId, f64, f64)> =
        spec.links.iter().map(|l| (l.a, l.b, l.bandwidth, l.latency.unwrap_or(0.0))).collect();
    WeightedGraph::new(&nodes, &links)
}

impl TopologySpec {
    pub fn from_toml(text: &str) -> Result<Self, TopologyError> {
        toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("topology serializes")
    }

    /// Parses and validates, attributing validation errors to a source line.
    pub fn parse_graph(text: &str) -> Result<(Self, WeightedGraph), TopologyError> {
        let spec = Self::from_toml(text)?;
        match build_graph(&spec) {
            Ok(g) => Ok((spec, g)),
            Err(err) => match locate(text, &err) {
                Some(line) => Err(TopologyError::InvalidAt { line, source: err }),
                None => Err(TopologyError::Invalid(err)),
            },
        }
    }

    pub fn from_graph(g: &WeightedGraph) -> Self {
        let nodes = (0..g.n()).map(|i| NodeSpec { id: g.id(i), h: g.compute_time(i) }).collect();
        let links = g
            .links()
            .iter()
            .map(|l| LinkSpec {
                a: g.id(l.a),
                b: g.id(l.b),
                bandwidth: l.bandwidth,
                latency: (l.latency != 0.0).then_some(l.latency),
            })
            .collect();
        TopologySpec { nodes, links }
    }
}

/// Best-effort line of the table an error refers to.
fn locate(text: &str, err: &GraphError) -> Option<usize> {
    let (table, keys): (&str, Vec<(&str, NodeId)>) = match *err {
        GraphError::DuplicateNode(id) | GraphError::BadComputeTime { id, .. } => ("[[nodes]]", vec![("id", id)]),
        GraphError::SelfLoop(a, b)
        | GraphError::BadBandwidth { a, b, .. }
        | GraphError::BadLatency { a, b, .. }
        | GraphError::AsymmetricLink { a, b }
        | GraphError::DuplicateLink { a, b } => ("[[links]]", vec![("a", a), ("b", b)]),
        GraphError::UnknownNode(id) => ("[[links]]", vec![("", id)]),
        _ => return None,
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut starts: Vec<usize> = lines.iter().enumerate().filter(|(_, l)| l.trim() == table).map(|(i, _)| i).collect();
    starts.push(lines.len());
    let value = |line: &str, key: &str| -> Option<NodeId> {
        let (k, v) = line.split_once('=')?;
        if !key.is_empty() && k.trim() != key {
            return None;
        }
        v.split('#').next()?.trim().parse().ok()
    };
    let mut last = None;
    for w in starts.windows(2) {
        let body = &lines[w[0] + 1..w[1]];
        let hit = keys.iter().all(|&(key, want)| body.iter().any(|l| value(l, key) == Some(want)));
        if hit {
            last = Some(w[0] + 1);
        }
    }
    last
}

/// Parses generator strings such as `torus:5x5:b=1` or `kclusters:10x10:fast=1000:slow=0.1`.
///
/// Every generator accepts `b=` (default 1), `h=` (default 1) and `latency=`
/// (default 0). Star takes `hub=switch|worker` (default switch), k-clusters
/// take `fast=` and `slow=` instead of `b=`.
pub fn generate(spec: &str) -> Result<TopologySpec, TopologyError> {
    let fail = |reason: &str| TopologyError::Generator { spec: spec.to_string(), reason: reason.to_string() };
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default();
    let shape = parts.next().ok_or_else(|| fail("missing shape"))?;
    let mut opts = std::collections::BTreeMap::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| fail("options must be key=value"))?;
        opts.insert(k.trim().to_string(), v.trim().to_string());
    }
    let num = |key: &str, default: f64| -> Result<f64, TopologyError> {
        match opts.get(key) {
            None => Ok(default),
            Some(v) if v == "inf" => Ok(f64::INFINITY),
            Some(v) => v.parse().map_err(|_| fail(&format!("bad number for {key}"))),
        }
    };
    let dims: Vec<usize> = shape
        .split('x')
        .map(|s| s.parse().map_err(|_| fail("shape must be integers joined by x")))
        .collect::<Result<_, _>>()?;
    let (b, h, lat) = (num("b", 1.0)?, num("h", 1.0)?, num("latency", 0.0)?);
    let known: &[&str] = match kind {
        "star" => &["b", "h", "latency", "hub"],
        "kclusters" => &["fast", "slow", "h", "latency"],
        _ => &["b", "h", "latency"],
    };
    if let Some(k) = opts.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(fail(&format!("unknown option {k}")));
    }
    let one = |what: &str| -> Result<usize, TopologyError> {
        match dims.as_slice() {
            [n] => Ok(*n),
            _ => Err(fail(&format!("{what} takes a single size"))),
        }
    };
    let mut topo = match kind {
        "star" => {
            let hub = match opts.get("hub").map(String::as_str) {
                None | Some("switch") => true,
                Some("worker") => false,
                Some(_) => return Err(fail("hub must be switch or worker")),
            };
            star(one("star")?, b, h, hub)
        }
        "ring" => {
            let n = one("ring")?;
            if n < 3 {
                return Err(fail("ring needs at least 3 nodes"));
            }
            ring(n, b, h)
        }
        "complete" | "all-to-all" => complete(one("complete")?, b, h),
        "torus" => {
            if dims.is_empty() || dims.iter().any(|&k| k < 3) {
                return Err(fail("every torus side must be at least 3"));
            }
            torus(&dims, b, h)
        }
        "kclusters" => {
            let [k, m] = dims.as_slice() else { return Err(fail("kclusters shape is KxM")) };
            if *k < 2 || *m < 1 {
                return Err(fail("need K >= 2 clusters of M >= 1 nodes"));
            }
            let (fast, slow) = (num("fast", 1.0)?, num("slow", 1.0)?);
            k_clusters(*k, *m, fast, slow, &vec![h; *k])
        }
        _ => return Err(fail("unknown kind (star, ring, complete, torus, kclusters)")),
    };
    if lat > 0.0 {
        for l in &mut topo.links {
            l.latency = Some(lat);
        }
    }
    Ok(topo)
}

fn link(a: usize, b: usize, bandwidth: f64) -> LinkSpec {
    LinkSpec { a: a as NodeId, b: b as NodeId, bandwidth, latency: None }
}

fn nodes(hs: impl IntoIterator<Item = f64>) -> Vec<NodeSpec> {
    hs.into_iter().enumerate().map(|(i, h)| NodeSpec { id: i as NodeId, h }).collect()
}

/// Hub `0` joined to leaves `1..=leaves`.
pub fn star(leaves: usize, b: f64, h: f64, hub_is_switch: bool) -> TopologySpec {
    let hub_h = if hub_is_switch { f64::INFINITY } else { h };
    TopologySpec {
        nodes: nodes(std::iter::once(hub_h).chain(std::iter::repeat_n(h, leaves))),
        links: (1..=leaves).map(|i| link(0, i, b)).collect(),
    }
}

pub fn ring(n: usize, b: f64, h: f64) -> TopologySpec {
    TopologySpec { nodes: nodes(std::iter::repeat_n(h, n)), links: (0..n).map(|i| link(i, (i + 1) % n, b)).collect() }
}

pub fn complete(n: usize, b: f64, h: f64) -> TopologySpec {
    let mut links = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            links.push(link(i, j, b));
        }
    }
    TopologySpec { nodes: nodes(std::iter::repeat_n(h, n)), links }
}

/// Wrap-around grid; node id is the row-major index of its coordinates.
pub fn torus(dims: &[usize], b: f64, h: f64) -> TopologySpec {
    let n: usize = dims.iter().product();
    let mut links = Vec::new();
    for v in 0..n {
        let mut stride = 1;
        for &k in dims.iter().rev() {
            let coord = (v / stride) % k;
            let up = v - coord * stride + ((coord + 1) % k) * stride;
            links.push(link(v.min(up), v.max(up), b));
            stride *= k;
        }
    }
    links.sort_by_key(|l| (l.a, l.b));
    links.dedup_by_key(|l| (l.a, l.b));
    TopologySpec { nodes: nodes(std::iter::repeat_n(h, n)), links }
}

/// `k` all-to-all clusters of `m` nodes; gateway node `c * m` of cluster `c`
/// links to the next cluster's gateway, closing a ring when `k >= 3`.
/// `hs[c]` is the compute time of every node in cluster `c`.
pub fn k_clusters(k: usize, m: usize, fast: f64, slow: f64, hs: &[f64]) -> TopologySpec {
    let mut links = Vec::new();
    for c in 0..k {
        for i in 0..m {
            for j in i + 1..m {
                links.push(link(c * m + i, c * m + j, fast));
            }
        }
    }
    let ring_links = if k == 2 { 1 } else { k };
    for c in 0..ring_links {
        let (a, b) = (c * m, ((c + 1) % k) * m);
        links.push(link(a.min(b), a.max(b), slow));
    }
    TopologySpec { nodes: nodes((0..k * m).map(|v| hs[v / m])), links }
}
