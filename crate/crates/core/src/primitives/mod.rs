//! Communication primitives: separable aggregation, load balancing and hop collection.

pub mod aggregate;
pub mod balance;
pub mod hops;
pub mod separable;
pub(crate) mod tree;

pub use aggregate::{aggregate_neighbors, compute_degrees, reduce_vertices, EdgeOutcome};
pub use hops::{collect_hops, default_ball_budget};
pub use balance::{balanced_partition, partition_loads, LoadBalanceParams};
pub use separable::SeparableFn;
