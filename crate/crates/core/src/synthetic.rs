//! Seeded synthetic graph classification data: two-community stochastic
//! block models (label 1) against Erdos-Renyi graphs of matched expected
//! density (label 0), with degree features.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub graphs: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Edge probability inside a community.
    pub p_in: f64,
    /// Edge probability across communities.
    pub p_out: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            graphs: 200,
            min_nodes: 10,
            max_nodes: 30,
            p_in: 0.9,
            p_out: 0.02,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.min_nodes < 2 || self.min_nodes > self.max_nodes {
            return Err(Error::Parameter(format!(
                "node range [{}, {}] must satisfy 2 <= min <= max",
                self.min_nodes, self.max_nodes
            )));
        }
        for p in [self.p_in, self.p_out] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter(format!("edge probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Alternating labels, so every prefix is roughly balanced.
pub fn generate(config: &SyntheticConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(config.graphs);
    for id in 0..config.graphs {
        let g = rng.random_range(config.min_nodes..=config.max_nodes);
        let label = (id % 2) as i64;
        let edges = if label == 1 {
            two_community_edges(g, config.p_in, config.p_out, &mut rng)
        } else {
            // expected density of the block model with halves of size g/2
            let a = g / 2;
            let b = g - a;
            let pairs = (g * (g - 1) / 2) as f64;
            let inside = (a * a.saturating_sub(1) / 2 + b * b.saturating_sub(1) / 2) as f64;
            let p = (inside * config.p_in + (a * b) as f64 * config.p_out) / pairs;
            erdos_renyi_edges(g, p, &mut rng)
        };
        let graph = Graph::from_edges(id, label, g, &edges, DVector::zeros(g))?.with_degree_features();
        graphs.push(graph);
    }
    Ok(Dataset::new(graphs))
}

fn erdos_renyi_edges(g: usize, p: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..g {
        for j in i + 1..g {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn two_community_edges(g: usize, p_in: f64, p_out: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut nodes: Vec<usize> = (0..g).collect();
    nodes.shuffle(rng);
    let mut side = vec![false; g];
    for &n in &nodes[..g / 2] {
        side[n] = true;
    }
    let mut edges = Vec::new();
    for i in 0..g {
        for j in i + 1..g {
            let p = if side[i] == side[j] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Erdos-Renyi graph with uniform random features in [-1, 1].
pub fn random_graph(nodes: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) || nodes == 0 {
        return Err(Error::Parameter(format!(
            "random graph needs nodes > 0 and p in [0, 1], got {nodes}, {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = erdos_renyi_edges(nodes, p, &mut rng);
    let x = DVector::from_fn(nodes, |_, _| rng.random_range(-1.0..=1.0));
    Graph::from_edges(0, 0, nodes, &edges, x)
}

/// Ring where every node also links to `extra` random chords, capping the
/// degree at `2 + 2 extra` on average; features uniform in [-1, 1].
pub fn bounded_degree_graph(nodes: usize, extra: usize, seed: u64) -> Result<Graph> {
    if nodes < 3 {
        return Err(Error::Parameter(format!("ring needs at least 3 nodes, got {nodes}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (0..nodes).map(|i| (i, (i + 1) % nodes)).collect();
    for i in 0..nodes {
        for _ in 0..extra {
            let j = rng.random_range(0..nodes);
            if j != i {
                edges.push((i, j));
            }
        }
    }
    let x = DVector::from_fn(nodes, |_, _| rng.random_range(-1.0..=1.0));
    Graph::from_edges(0, 0, nodes, &edges, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let cfg = SyntheticConfig {
            graphs: 20,
            ..SyntheticConfig::default()
        };
        let a = generate(&cfg, 5).unwrap();
        let b = generate(&cfg, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert_eq!(a.graphs.iter().filter(|g| g.label == 1).count(), 10);
        for g in &a.graphs {
            assert!((cfg.min_nodes..=cfg.max_nodes).contains(&g.node_count()));
            assert!(g.features().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_ne!(generate(&cfg, 6).unwrap(), a);
    }

    #[test]
    fn communities_have_fewer_cross_edges() {
        let cfg = SyntheticConfig {
            graphs: 2,
            min_nodes: 40,
            max_nodes: 40,
            p_in: 0.6,
            p_out: 0.0,
        };
        let ds = generate(&cfg, 1).unwrap();
        // zero cross probability splits the block model into two components
        let sbm = &ds.graphs[1];
        let mut seen = [false; 40];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in sbm.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        assert!(seen.iter().filter(|s| **s).count() <= 20);
    }

    #[test]
    fn bounded_degree() {
        let g = bounded_degree_graph(50, 1, 3).unwrap();
        assert!(g.degrees().max() <= 50.0);
        assert!(g.edge_count() >= 50);
        assert!(bounded_degree_graph(2, 1, 0).is_err());
        assert!(random_graph(5, 1.5, 0).is_err());
    }

    #[test]
    fn invalid_config() {
        let cfg = SyntheticConfig {
            min_nodes: 5,
            max_nodes: 4,
            ..SyntheticConfig::default()
        };
        assert!(generate(&cfg, 0).is_err());
    }
}
