//! Benchmark fixtures: generated inputs and fresh clusters.

use mpcsim_core::graph::generate;
use mpcsim_core::harness::FamilyKind;
use mpcsim_core::{Cluster, ClusterConfig, Graph};

/// Graph seed shared by every fixture.
pub const SEED: u64 = 11;

pub fn graph(kind: FamilyKind, n: usize) -> Graph {
    generate(kind.at(n), SEED).expect("fixture graph")
}

/// A strict cluster holding `g` at eps = 0.5.
pub fn cluster(g: &Graph, space_coefficient: f64) -> Cluster {
    let config = ClusterConfig::for_graph(g, 0.5, space_coefficient, true).expect("fixture config");
    Cluster::init(config, g).expect("fixture cluster")
}

/// Item weights in `[1, max]` with a heavy tail.
pub fn weights(count: usize, max: f64) -> Vec<f64> {
    (1..=count).map(|i| (max / i as f64).max(1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let g = graph(FamilyKind::Tree, 128);
        assert_eq!(g.n(), 128);
        assert_eq!(cluster(&g, 8.0).config().n, 128);
        let w = weights(10, 4.0);
        assert_eq!(w[0], 4.0);
        assert!(w.iter().all(|&x| (1.0..=4.0).contains(&x)));
    }
}
