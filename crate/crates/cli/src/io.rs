//! Topology loading, error classes and atomic output.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use bwopt::graph::{build_graph, topology::generate, TopologySpec, WeightedGraph};
use bwopt::selection::ProblemParams;

use crate::{ParamArgs, TopologyArgs};

/// Exit 1 for domain errors, 2 for usage and I/O errors.
#[derive(Debug)]
pub enum Failure {
    Domain(anyhow::Error),
    Usage(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Domain(e) | Failure::Usage(e) => e,
        }
    }
}

pub trait Classify<T> {
    fn domain(self) -> Result<T, Failure>;
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn domain(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Domain(e.into()))
    }

    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

pub fn domain(msg: impl Into<String>) -> Failure {
    Failure::Domain(anyhow!(msg.into()))
}

/// Graph plus the generator string it came from, if any.
pub struct Loaded {
    pub graph: WeightedGraph,
    pub generator: Option<String>,
}

pub fn load_topology(args: &TopologyArgs) -> Result<Loaded, Failure> {
    load(args.topology.as_deref(), args.generator.as_deref())
}

pub fn load(path: Option<&Path>, generator: Option<&str>) -> Result<Loaded, Failure> {
    match (path, generator) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).usage()?;
            let (_, graph) = TopologySpec::parse_graph(&text)
                .with_context(|| format!("invalid topology {}", path.display()))
                .domain()?;
            Ok(Loaded { graph, generator: None })
        }
        (None, Some(spec)) => {
            let topo = generate(spec).usage()?;
            Ok(Loaded { graph: build_graph(&topo).domain()?, generator: Some(spec.to_string()) })
        }
        _ => Err(usage("give a topology file or --gen SPEC")),
    }
}

pub fn params(p: &ParamArgs) -> Result<ProblemParams, Failure> {
    ProblemParams::new(p.d, p.sigma2, p.eps, p.smoothness, p.delta).domain()
}

/// Node indices for external ids.
pub fn indices(g: &WeightedGraph, ids: &[u32]) -> Result<Vec<usize>, Failure> {
    ids.iter().map(|&id| g.index_of(id).ok_or_else(|| domain(format!("unknown node id {id}")))).collect()
}

pub fn ids(g: &WeightedGraph, indices: &[usize]) -> Vec<u32> {
    indices.iter().map(|&i| g.id(i)).collect()
}

pub fn join_ids(ids: &[u32]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, body: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display())).usage()?;
    }
    let tmp = path.with_file_name(format!(".{}.tmp", path.file_name().and_then(|n| n.to_str()).unwrap_or("out")));
    fs::write(&tmp, body).with_context(|| format!("cannot write {}", tmp.display())).usage()?;
    fs::rename(&tmp, &path).with_context(|| format!("cannot move {} into place", path.display())).usage()?;
    Ok(path)
}

/// Fixed-width text table.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// Compact float for tables.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else if x != 0.0 && (x.abs() >= 1e6 || x.abs() < 1e-3) {
        format!("{x:.4e}")
    } else {
        format!("{:.4}", x).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}
