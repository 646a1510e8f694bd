//! Diffusion limited aggregation on the lattice wedge `0 <= y <= x^α`.

pub mod aggregate;
pub mod ends;
pub mod geometry;

pub use aggregate::{parse_sites_csv, run_dla, DlaConfig, DlaRun, TipGap, WedgeAggregate};
pub use ends::{components_outside, UnionFind};
pub use geometry::{in_wedge, Site, WedgeGeometry};

/// Number of components of `agg` outside the closed ball of radius `r`.
pub fn ends_estimate(agg: &WedgeAggregate, r: f64) -> usize {
    agg.ends_estimate(r)
}

pub fn tip_gap(agg: &WedgeAggregate) -> TipGap {
    agg.tip_gap()
}
