//! Geometric mesh partitioning.
//!
//! The main entry point is [`balanced_kmeans`], a k-means variant that keeps
//! clusters within a weight imbalance bound by scaling each cluster's
//! distance with an *influence* value. Points are first sorted along a
//! Hilbert curve, sharded over simulated ranks ([`parsim::RankWorld`]) and
//! the initial centers are taken at equal strides along the curve. Hamerly
//! style distance bounds and per-rank bounding boxes prune most of the
//! center scans once the clustering settles.
//!
//! Two reference partitioners live in [`baselines`] and the quality
//! measures (edge cut, communication volume, block diameter bounds) in
//! [`metrics`].
//!
//! ```
//! use meshpart::{balanced_kmeans, generate_grid_mesh, KMeansSettings, RankWorld};
//!
//! let graph = generate_grid_mesh(16, 2).unwrap();
//! let world = RankWorld::scatter(&graph, 2).unwrap();
//! let outcome = balanced_kmeans(&graph, &KMeansSettings::new(4), world).unwrap();
//! assert!(outcome.balanced);
//! assert_eq!(outcome.partition.len(), 256);
//! ```

pub mod baselines;
mod error;
pub mod exec;
pub mod geometry;
pub mod mesh;
pub mod metrics;
pub mod parsim;
pub mod partitioner;

pub use baselines::{rcb_partition, sfc_partition};
pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{hilbert_key, BoundingBox, Point, SfcKey};
pub use mesh::{
    generate_grid_mesh, generate_random_geometric, load_metis_graph, read_partition,
    write_partition, GeometricGraph, Partition,
};
pub use metrics::{evaluate, DiameterBound, MetricsReport};
pub use parsim::{CollectiveLog, RankWorld};
pub use partitioner::{balanced_kmeans, ClusterState, KMeansOutcome, KMeansSettings};
