//! Height functions and random tilings on the `d`-dimensional simplicial lattice.
//!
//! The crate covers the exact combinatorics (height functions, tilings and the bijection
//! between them), enumeration and Boltzmann partition functions for fixed boundary
//! conditions, Kasteleyn hypermatrices with their Cayley hyperdeterminants, monotone
//! Glauber dynamics and coupling from the past, the cluster boundary swap with the
//! variance and covariance identities it yields, and finite-volume surface tension.

pub mod cluster;
pub mod error;
pub mod height;
pub mod io;
pub mod kasteleyn;
pub mod lattice;
pub mod regions;
pub mod sampler;
pub mod scalar;
pub mod tension;

pub use error::{Error, Result};
pub use height::{Background, HeightField, Slope, Tiling};
pub use lattice::{Dim, Edge, Region, RegionKind, UnrootedLoop, Vertex};
pub use scalar::{Rational, Scalar};

pub type ExactWeights = regions::WeightFunction<Rational>;
pub type FloatWeights = regions::WeightFunction<f64>;
pub type ExactHypermatrix = kasteleyn::Hypermatrix<Rational>;
pub type ExactHyperdet = kasteleyn::Hyperdet<Rational>;
pub type FloatHyperdet = kasteleyn::Hyperdet<f64>;
