//! Numeric Fredholm indices of discretized problems, winding numbers of
//! circle loops and the consistency checks built on them.

pub mod cheb;
pub mod circle;
pub mod discretize;
pub mod numeric;
pub mod verify;

pub use circle::{
    circle_winding_index, cobordism_check, random_extendable_pair, random_null_loop, toeplitz_index, winding_index,
    CobordismReport, ToeplitzIndex,
};
pub use discretize::{discretize_bvp, ColLabel, DiscreteOperator, Resolution, RowLabel};
pub use numeric::{
    default_resolutions, index_report, numeric_index, rank_with_gap, IndexAtResolution, IndexReport, IndexVerdict,
    DEFAULT_RANK_TOL,
};
pub use verify::{
    classical_generator, closed_spectral_problem, finite_rank_generator, loop_condition_problem, random_excision_pair,
    verify_excision, verify_index_formula, ExcisionReport, IndexFormulaReport,
};
