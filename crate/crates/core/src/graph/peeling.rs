//! Leaf-branch peeling of a tree whose vertices are node sets.

use serde::Serialize;

use super::GraphError;

/// A tree over meta-nodes; `members[i]` is the node set behind meta-node `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaTree {
    pub members: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
}

impl MetaTree {
    /// Meta-tree whose vertices are singletons `{0}, {1}, ...`.
    pub fn singletons(n: usize, edges: Vec<(usize, usize)>) -> Self {
        MetaTree { members: (0..n).map(|i| vec![i]).collect(), edges }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeelStep {
    pub leaves: Vec<usize>,
    pub branches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peeling {
    pub steps: Vec<PeelStep>,
}

impl Peeling {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// Union of member sets peeled at `step`.
    pub fn layer_members(&self, tree: &MetaTree, step: usize) -> Vec<usize> {
        let s = &self.steps[step];
        let mut out: Vec<usize> =
            s.leaves.iter().chain(&s.branches).flat_map(|&m| tree.members[m].iter().copied()).collect();
        out.sort_unstable();
        out
    }
}

/// Repeatedly removes the current leaves together with the chains of
/// degree-two vertices hanging off them.
pub fn leaf_branch_peeling(tree: &MetaTree) -> Result<Peeling, GraphError> {
    let n = tree.len();
    if n == 0 {
        return Ok(Peeling { steps: Vec::new() });
    }
    if tree.edges.len() != n - 1 {
        return Err(GraphError::NotATree(format!("{} vertices but {} edges", n, tree.edges.len())));
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &tree.edges {
        if u >= n || v >= n || u == v {
            return Err(GraphError::NotATree(format!("bad edge ({u}, {v})")));
        }
        adj[u].push(v);
        adj[v].push(u);
    }
    if !super::bfs_reach(n, 0, |u| adj[u].iter().copied()).iter().all(|&s| s) {
        return Err(GraphError::NotATree("contains a cycle".into()));
    }

    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut remaining = n;
    let mut steps = Vec::new();
    while remaining > 0 {
        let leaves: Vec<usize> = (0..n).filter(|&v| alive[v] && degree[v] <= 1).collect();
        let mut taken = vec![false; n];
        for &v in &leaves {
            taken[v] = true;
        }
        let mut branches = Vec::new();
        let mut frontier = leaves.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &adj[u] {
                    if alive[w] && !taken[w] && degree[w] == 2 {
                        taken[w] = true;
                        next.push(w);
                    }
                }
            }
            next.sort_unstable();
            branches.extend_from_slice(&next);
            frontier = next;
        }
        branches.sort_unstable();
        for v in leaves.iter().chain(&branches) {
            alive[*v] = false;
            remaining -= 1;
        }
        for v in leaves.iter().chain(&branches) {
            for &w in &adj[*v] {
                if alive[w] {
                    degree[w] -= 1;
                }
            }
        }
        steps.push(PeelStep { leaves, branches });
    }
    Ok(Peeling { steps })
}
