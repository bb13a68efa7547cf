//! Expansion of weighted edges into parallel unit-capacity copies.

use serde::Serialize;

use super::{GraphError, UndirectedView};

pub const DEFAULT_MAX_SCALE: u64 = 1_000_000;

const TOLERANCE: f64 = 1e-9;

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() <= TOLERANCE * x.abs().max(1.0)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest denominator `q <= max` with `q * w` integral, taken from the
/// continued-fraction convergents of `w`.
fn denominator(w: f64, max: u64) -> Option<u64> {
    let (mut h0, mut h1) = (0f64, 1f64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = w;
    for _ in 0..64 {
        let a = x.floor();
        let (h2, k2) = (a * h1 + h0, (a as u64).checked_mul(k1)?.checked_add(k0)?);
        if k2 > max {
            return None;
        }
        if near_integer(w * k2 as f64) {
            return Some(k2);
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = x - a;
        if frac <= f64::EPSILON {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// Smallest common integer scale `<= max_scale` making every weight integral.
pub(crate) fn integral_scale(weights: &[f64], max_scale: u64) -> Option<u64> {
    let mut scale = 1u64;
    for &w in weights {
        let q = denominator(w, max_scale)?;
        scale = (scale / gcd(scale, q)).checked_mul(q)?;
        if scale > max_scale {
            return None;
        }
    }
    weights.iter().all(|&w| near_integer(w * scale as f64)).then_some(scale)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiEdge {
    pub u: usize,
    pub v: usize,
    pub multiplicity: u64,
    pub bandwidth: f64,
}

/// Unit-capacity multigraph: edge `k` of the source view becomes
/// `multiplicity` parallel copies, each carrying `bandwidth / multiplicity`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitMultigraph {
    n: usize,
    edges: Vec<MultiEdge>,
    /// Integer scale `s`: multiplicity is `round(s * b) / divisor`.
    pub scale: u64,
    /// Common factor removed by [`UnitMultigraph::reduced`]; 1 otherwise.
    pub divisor: u64,
    pub exact: bool,
    pub max_relative_error: f64,
    #[serde(skip)]
    adj: Vec<Vec<(usize, usize)>>,
}

/// Exact expansion with the smallest admissible scale.
///
/// Fails with [`GraphError::InexactScale`] when no scale up to `max_scale`
/// works; [`UnitMultigraph::best_effort`] returns the rounded fallback.
pub fn unit_multigraph(g: &UndirectedView, max_scale: u64) -> Result<UnitMultigraph, GraphError> {
    let mg = UnitMultigraph::best_effort(g, max_scale);
    if mg.exact {
        Ok(mg)
    } else {
        Err(GraphError::InexactScale { max_scale, max_relative_error: mg.max_relative_error })
    }
}

impl UnitMultigraph {
    pub fn best_effort(g: &UndirectedView, max_scale: u64) -> UnitMultigraph {
        let weights: Vec<f64> = g.edges().iter().map(|e| e.2).collect();
        let (scale, exact) = match integral_scale(&weights, max_scale) {
            Some(s) => (s, true),
            None => (max_scale.max(1), false),
        };
        let mut max_relative_error: f64 = 0.0;
        let edges: Vec<MultiEdge> = g
            .edges()
            .iter()
            .map(|&(u, v, w)| {
                let m = ((w * scale as f64).round() as u64).max(1);
                max_relative_error = max_relative_error.max((m as f64 / scale as f64 - w).abs() / w);
                MultiEdge { u, v, multiplicity: m, bandwidth: w }
            })
            .collect();
        Self::assemble(g.n(), edges, scale, 1, exact, if exact { 0.0 } else { max_relative_error })
    }

    /// Divides every multiplicity by their greatest common divisor, so each
    /// unit copy carries as much bandwidth as possible.
    pub fn reduced(&self) -> UnitMultigraph {
        let g = self.edges.iter().fold(0, |acc, e| gcd(acc, e.multiplicity)).max(1);
        let edges = self
            .edges
            .iter()
            .map(|e| MultiEdge { multiplicity: e.multiplicity / g, ..e.clone() })
            .collect();
        Self::assemble(self.n, edges, self.scale, self.divisor * g, self.exact, self.max_relative_error)
    }

    /// Multigraph with explicit multiplicities, bandwidth equal to multiplicity.
    pub fn from_multiplicities(n: usize, edges: &[(usize, usize, u64)]) -> Result<UnitMultigraph, GraphError> {
        let mut out = Vec::with_capacity(edges.len());
        for (k, &(u, v, m)) in edges.iter().enumerate() {
            if u >= n || v >= n || u == v || m == 0 {
                return Err(GraphError::BadEdge(k, "invalid multigraph edge".into()));
            }
            out.push(MultiEdge { u, v, multiplicity: m, bandwidth: m as f64 });
        }
        Ok(Self::assemble(n, out, 1, 1, true, 0.0))
    }

    fn assemble(
        n: usize,
        edges: Vec<MultiEdge>,
        scale: u64,
        divisor: u64,
        exact: bool,
        max_relative_error: f64,
    ) -> UnitMultigraph {
        let mut adj = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, k));
            adj[e.v].push((e.u, k));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        UnitMultigraph { n, edges, scale, divisor, exact, max_relative_error, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[MultiEdge] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adj[u]
    }

    /// Bandwidth of one unit copy of edge `k`.
    pub fn lane_bandwidth(&self, k: usize) -> f64 {
        self.edges[k].bandwidth / self.edges[k].multiplicity as f64
    }

    /// Ratio between multigraph cut values and weighted cut values.
    pub fn cut_factor(&self) -> f64 {
        self.scale as f64 / self.divisor as f64
    }

    /// The multigraph as an integer-weighted undirected graph.
    pub fn as_view(&self) -> UndirectedView {
        let edges = self.edges.iter().map(|e| (e.u, e.v, e.multiplicity as f64)).collect();
        UndirectedView::new(self.n, edges).expect("multigraph edges are valid")
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.edges.iter().map(|e| e.multiplicity).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(ws: &[f64]) -> UndirectedView {
        let edges = ws.iter().enumerate().map(|(k, &w)| (k, k + 1, w)).collect();
        UndirectedView::new(ws.len() + 1, edges).unwrap()
    }

    fn mults(mg: &UnitMultigraph) -> Vec<u64> {
        mg.edges().iter().map(|e| e.multiplicity).collect()
    }

    #[test]
    fn integral_weights_keep_scale_one() {
        let mg = unit_multigraph(&view(&[2.0, 2.0, 1.0, 1.0, 1.0]), 64).unwrap();
        assert_eq!(mg.scale, 1);
        assert_eq!(mults(&mg), vec![2, 2, 1, 1, 1]);
    }

    #[test]
    fn halves_and_sevenths() {
        let mg = unit_multigraph(&view(&[0.5, 1.5]), 64).unwrap();
        assert_eq!((mg.scale, mults(&mg)), (2, vec![1, 3]));
        let mg = unit_multigraph(&view(&[1.0 / 3.0, 1.0 / 7.0]), 64).unwrap();
        assert_eq!((mg.scale, mults(&mg)), (21, vec![7, 3]));
    }

    #[test]
    fn decimal_bandwidth() {
        let mg = unit_multigraph(&view(&[0.1, 1000.0]), DEFAULT_MAX_SCALE).unwrap();
        assert_eq!((mg.scale, mults(&mg)), (10, vec![1, 10000]));
    }

    #[test]
    fn irrational_is_best_effort() {
        let v = view(&[std::f64::consts::SQRT_2]);
        let err = unit_multigraph(&v, 1000).unwrap_err();
        let GraphError::InexactScale { max_relative_error, .. } = err else { panic!("{err:?}") };
        assert!(max_relative_error < 1e-3);
        let mg = UnitMultigraph::best_effort(&v, 1000);
        assert!(!mg.exact);
        assert_eq!(mg.edges()[0].multiplicity, 1414);
    }

    #[test]
    fn reduction_divides_common_factor() {
        let mg = unit_multigraph(&view(&[1000.0, 2000.0]), 64).unwrap().reduced();
        assert_eq!(mults(&mg), vec![1, 2]);
        assert_eq!(mg.lane_bandwidth(1), 1000.0);
        assert_eq!(mg.cut_factor(), 1e-3);
    }
}
