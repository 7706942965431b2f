//! Boundary projections on the circle: symbols, discretizations, relative
//! index and the d-functional, and the doubling constructions.

pub mod symbol;

pub use symbol::{cosphere_samples, parity_classify, Parity, ProjectionSymbol};
pub mod discrete;
pub mod doubling;

pub use discrete::{
    d_value, discretize_circle_op, finite_rank_modify, quantize_projection, quantize_symbol, realize_projection, relative_index,
    relative_index_report, spectral_projection, CircleOperator, DiscreteProjection, FourierSpace, RelativeIndex,
};
