//! Extreme-copula families and the transforms that preserve extremality.

mod families;
mod graph;
pub mod maps;
mod orientation;
mod transforms;

pub use families::{
    countable_shuffle, four_line_3d, permutation_copula, shuffle_copula, tent_copula, PermutationCopulaSpec,
    MAX_SHUFFLE_TERMS,
};
pub use graph::{graph_copula, GraphCopula};
pub use maps::{doubling_map, measure_preserving_check, Affine, IntervalMap, MpReport, MpWitness, PiecewiseLinearMap, PowerMap};
pub use orientation::Orientation;
pub use transforms::{shift_transform, swap_transform};
