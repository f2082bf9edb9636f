//! Non-extremality witnesses for measures with a density part, and
//! graph-cover certificates for segment supports.

mod cover;
mod square;

pub use cover::{functional_cover_check, is_functional_over, merge, FunctionalCoverCertificate, Interval};
pub use square::{
    dyadic_scales, find_dense_square, lemma_decompose, singularity_diagnostic, zero_fraction, DecompositionWitness,
    SingularityVerdict, SquareRegion,
};
