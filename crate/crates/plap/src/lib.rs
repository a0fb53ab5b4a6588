//! Graph and hypergraph p-Laplacian operators for semi-supervised learning on
//! point clouds.
//!
//! The crate builds epsilon-ball graphs and two-radius hypergraph stencils over
//! sampled point clouds, evaluates the discrete p-Laplacian, infinity-Laplacian,
//! game-theoretic p-Laplacian and hypergraph p-Laplacian residuals, and solves
//! the label-constrained equations with monotone fixed-point and node-wise
//! root-finding sweeps. Continuum oracles (closed-form 1D solutions, pointwise
//! weighted p-Laplacian evaluation, Hoelder-ratio and spike diagnostics) back
//! the experiment harness in [`experiments`].
//!
//! Module layout mirrors the pipeline:
//!
//! - [`geometry`]: domains, clouds, labels, spatial index, epsilon/delta schedules
//! - [`kernels`]: kernel profiles, moments, the k(p) calibration
//! - [`operators`]: graphs, stencils, residuals, energies
//! - [`solvers`]: constrained solvers, connectivity, comparison guards
//! - [`oracles`]: continuum ground truths and diagnostics
//! - [`experiments`]: config, file formats, CLI commands

pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod operators;
pub mod oracles;
pub mod solvers;

pub use geometry::{Domain, DomainKind, LabelSet, NeighborIndex, PointCloud};
pub use kernels::{Kernel, KernelMoments};
pub use operators::{Field, HypergraphStencil, WeightedGraph};
pub use solvers::{SolveReport, SolverConfig};
