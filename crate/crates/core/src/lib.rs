//! Random self-similar trees: Horton-Strahler analysis and the processes
//! whose trees obey Horton laws.
//!
//! The crate is organized around a small arena tree type and a set of pure
//! transforms and samplers:
//!
//! - `tree`:         finite rooted trees, series reduction, Horton pruning
//! - `horton`:       Horton-Strahler orders, branches, Tokunaga indices
//! - `stats`:        Tokunaga matrices, Horton exponent and order fits
//! - `analytics`:    closed-form laws and numeric kernels (generating
//!                   function root, branch-number recursions, entropy rates,
//!                   tree counting, Bessel functions, Galton-Watson length
//!                   and height laws, survival probabilities, the Kingman
//!                   coalescent ODE solver, branching hydrodynamics)
//! - `samplers`:     seeded generators for every tree/process family
//! - `levelset`:     Harris path <-> level set tree transforms
//! - `kingman`:      N-particle coalescent simulation and white-noise trees
//! - `dynprune`:     generalized dynamical pruning, with mass-equipped variant
//! - `annihilation`: continuum 1-D ballistic annihilation via pruning
//! - `stattest`:     KS / chi-square helpers used by estimators and tests
//! - `exhaustive`:   brute-force enumerations for exact small-case checks
//!
//! All randomness flows through explicit `Rng` handles; `streams` derives
//! deterministic ChaCha8 generators from `(seed, stream, substream)` so that
//! parallel Monte Carlo is reproducible regardless of scheduling.

pub mod error;
pub mod streams;
pub mod tree;
pub mod horton;
pub mod levelset;
pub mod stattest;
pub mod analytics;
pub mod samplers;
pub mod stats;
pub mod kingman;
pub mod dynprune;
pub mod annihilation;
pub mod exhaustive;

pub use error::{HortonError, Result};
pub use tree::{horton_prune, series_reduction, tree_metrics, Node, NodeId, Tree};
