use alloc::vec::Vec;

use super::{InteractionMatrix, ModelSpec, Recommender};
use crate::error::Result;
use crate::kg::{KnowledgeGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    /// Probability of following an edge rather than restarting.
    pub damping: f64,
    /// Share of the restart mass placed on the user's profile items; the rest
    /// is spread uniformly over every node (profile items included).
    pub profile_mass: f64,
    pub max_iter: usize,
    /// L1 change below which iteration stops.
    pub tol: f64,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams { damping: 0.85, profile_mass: 0.8, max_iter: 200, tol: 1e-12 }
    }
}

impl PageRankParams {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let d = PageRankParams::default();
        Ok(PageRankParams {
            damping: spec.unit("damping", d.damping, true)?,
            profile_mass: spec.unit("profile_mass", d.profile_mass, false)?,
            max_iter: spec.count("max_iter", d.max_iter)?,
            tol: spec.positive("tol", d.tol)?,
        })
    }
}

/// Restart distribution: `profile_mass` split evenly over `profile`, the
/// remainder uniform over all `n` nodes. With an empty profile everything is
/// uniform.
pub fn restart_vector(n: usize, profile: &[usize], profile_mass: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let uniform = if profile.is_empty() { 1.0 } else { 1.0 - profile_mass };
    let mut v = alloc::vec![uniform / n as f64; n];
    if !profile.is_empty() {
        let share = profile_mass / profile.len() as f64;
        for &p in profile {
            v[p] += share;
        }
    }
    v
}

/// Power iteration of `π = d·Wπ + (1-d)·r` on an undirected graph given as
/// adjacency lists, where `W` moves uniformly to a neighbour. Mass on
/// isolated nodes is returned through `r`.
pub fn personalized_pagerank(
    adjacency: &[&[NodeId]],
    restart: &[f64],
    damping: f64,
    max_iter: usize,
    tol: f64,
) -> Vec<f64> {
    let n = adjacency.len();
    let mut pi = restart.to_vec();
    let mut next = alloc::vec![0.0; n];
    for _ in 0..max_iter {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut dangling = 0.0;
        for (u, nbrs) in adjacency.iter().enumerate() {
            if nbrs.is_empty() {
                dangling += pi[u];
                continue;
            }
            let share = damping * pi[u] / nbrs.len() as f64;
            for v in nbrs.iter() {
                next[v.idx()] += share;
            }
        }
        let restart_mass = (1.0 - damping) + damping * dangling;
        let mut delta = 0.0;
        for v in 0..n {
            next[v] += restart_mass * restart[v];
            delta += libm::fabs(next[v] - pi[v]);
        }
        core::mem::swap(&mut pi, &mut next);
        if delta < tol {
            break;
        }
    }
    pi
}

/// Personalized PageRank over the knowledge graph, restarting on the user's
/// profile items.
#[derive(Debug, Clone)]
pub struct PageRank {
    params: PageRankParams,
    neighbours: Vec<Vec<NodeId>>,
    /// KG node of each catalog item.
    item_nodes: Vec<Option<NodeId>>,
}

impl PageRank {
    pub fn fit(m: &InteractionMatrix, g: &KnowledgeGraph, params: PageRankParams) -> Self {
        let neighbours = (0..g.node_count() as u32)
            .map(|i| g.neighbours(NodeId(i)).to_vec())
            .collect();
        let item_nodes = m.items().iter().map(|i| g.node(i)).collect();
        PageRank { params, neighbours, item_nodes }
    }

    /// Stationary distribution over every KG node for one user.
    pub fn node_scores(&self, m: &InteractionMatrix, user: usize) -> Vec<f64> {
        let mut profile: Vec<usize> = m
            .user_items(user)
            .iter()
            .filter_map(|&i| self.item_nodes[i as usize].map(NodeId::idx))
            .collect();
        profile.sort_unstable();
        profile.dedup();
        let restart = restart_vector(self.neighbours.len(), &profile, self.params.profile_mass);
        let adj: Vec<&[NodeId]> = self.neighbours.iter().map(Vec::as_slice).collect();
        personalized_pagerank(&adj, &restart, self.params.damping, self.params.max_iter, self.params.tol)
    }
}

impl Recommender for PageRank {
    fn kind(&self) -> &'static str {
        "pagerank"
    }

    fn scores(&self, m: &InteractionMatrix, user: usize) -> Vec<f64> {
        let pi = self.node_scores(m, user);
        self.item_nodes
            .iter()
            .map(|n| n.map(|n| pi[n.idx()]).unwrap_or(0.0))
            .collect()
    }
}
