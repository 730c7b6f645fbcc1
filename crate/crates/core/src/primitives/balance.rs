use serde::{Deserialize, Serialize};

use crate::error::SimFault;
use crate::hash::mix3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadBalanceParams {
    /// Number of partitions.
    pub p: usize,
    /// Weights are bounded by `n^sigma`.
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
    /// Slack constant in the load bound.
    pub c_lb: f64,
}

impl LoadBalanceParams {
    pub fn max_weight(&self) -> f64 {
        (self.n.max(1) as f64).powf(self.sigma)
    }

    /// `c_lb * (total/p + n^sigma) * log2 p`, with `log2 p` floored at 1.
    pub fn load_bound(&self, total: f64) -> f64 {
        let log_p = (self.p as f64).log2().max(1.0);
        self.c_lb * (total / self.p as f64 + self.max_weight()) * log_p
    }
}

/// Assigns each weighted item to one of `p` partitions.
///
/// Items are ranked by weight (heaviest first, ties by index) and cut into `p`
/// classes of `ceil(|A|/p)` consecutive ranks. Each class is laid round-robin
/// over the partitions from a seeded offset, so a class puts at most
/// `ceil(class size / p)` items on any partition.
pub fn balanced_partition(weights: &[f64], params: &LoadBalanceParams) -> Result<Vec<usize>, SimFault> {
    if params.p == 0 {
        return Err(SimFault::Argument("partition count must be positive".into()));
    }
    let limit = params.max_weight();
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, &w)| !(w >= 1.0 && w <= limit))
    {
        return Err(SimFault::Argument(format!(
            "weight {w} of item {i} outside [1, {limit}]"
        )));
    }
    let p = params.p;
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let class_size = weights.len().div_ceil(p).max(1);
    let mut assignment = vec![0; weights.len()];
    for (rank, &item) in order.iter().enumerate() {
        let class = rank / class_size;
        let offset = mix3(params.seed, class as u64, p as u64) % p as u64;
        assignment[item] = ((offset as usize) + rank % class_size) % p;
    }
    Ok(assignment)
}

/// Total weight per partition.
pub fn partition_loads(weights: &[f64], assignment: &[usize], p: usize) -> Vec<f64> {
    let mut loads = vec![0.0; p];
    for (&w, &a) in weights.iter().zip(assignment) {
        loads[a] += w;
    }
    loads
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: usize, seed: u64) -> LoadBalanceParams {
        LoadBalanceParams {
            p,
            sigma: 0.5,
            n: 1 << 16,
            seed,
            c_lb: 4.0,
        }
    }

    #[test]
    fn single_partition_takes_everything() {
        let w = vec![1.0, 2.0, 3.0];
        let a = balanced_partition(&w, &params(1, 9)).unwrap();
        assert_eq!(a, vec![0, 0, 0]);
        assert_eq!(partition_loads(&w, &a, 1), vec![6.0]);
    }

    #[test]
    fn single_heavy_item() {
        let p = params(8, 3);
        let w = vec![p.max_weight() - 1.0];
        let loads = partition_loads(&w, &balanced_partition(&w, &p).unwrap(), 8);
        assert_eq!(loads.iter().filter(|&&l| l > 0.0).count(), 1);
        assert_eq!(loads.iter().sum::<f64>(), w[0]);
    }

    #[test]
    fn unit_weights_are_even() {
        let w = vec![1.0; 1024];
        for seed in 0..50 {
            let loads = partition_loads(&w, &balanced_partition(&w, &params(16, seed)).unwrap(), 16);
            assert!(loads.iter().all(|&l| l == 64.0));
        }
    }

    #[test]
    fn rejects_out_of_range_weights() {
        assert!(balanced_partition(&[0.5], &params(4, 0)).is_err());
        assert!(balanced_partition(&[1e9], &params(4, 0)).is_err());
        assert!(balanced_partition(&[1.0], &params(0, 0)).is_err());
    }
}
