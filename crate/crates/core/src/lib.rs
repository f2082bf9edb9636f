//! Extreme copulas in `n` dimensions.
//!
//! * [`segment`], [`grid`], [`copula`]: measure representations, exact CDF and
//!   box masses, marginal validation, lattice `d_inf`, sampling.
//! * [`constructions`]: tent, shuffle and permutation copulas, shift and swap
//!   transforms, graph copulas of measure-preserving maps.
//! * [`extremality`]: the dense-square decomposition showing an absolutely
//!   continuous part rules out extremality, and graph-cover certificates that
//!   prove it.
//! * [`approximation`]: uniform approximation of any copula by a permutation
//!   copula with error at most `(2n+1)/m`.
//! * [`frechet`]: optimization over a Frechet class by searching permutation
//!   copulas with assignment solvers.
//! * [`io`]: JSON and CSV formats.

pub mod approximation;
pub mod constructions;
pub mod copula;
pub mod error;
pub mod extremality;
pub mod frechet;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod rational;
pub mod segment;

pub use copula::CopulaModel;
pub use error::{Error, Result};
pub use grid::{GridDensity, GridMeasure, GridSpec, MixedMeasure};
pub use rational::Rational;
pub use segment::{Segment, SegmentMeasure};
