//! Symbol layer: scalar expressions, matrix-valued symbols, collar operators
//! and boundary value problems on the model manifolds.

pub mod collar;
pub mod expr;
pub mod file;
pub mod matrix;
pub mod parse;

pub use collar::{BoundaryCondition, CollarOperator};
pub use expr::{Expr, SymbolPoint};
pub use file::{MatrixSpec, ProblemFile, ProjectionFile, ProjectionSpec};
pub use matrix::{Evaluator, MatrixSymbol, SymbolFn};
pub use parse::{parse_constant, parse_expr};
pub mod problem;

pub use problem::{
    check_interior_ellipticity, direct_sum, make_model_operator, BoundaryComponent, BvpProblem, EndCondition,
    InteriorEllipticityReport, InteriorGrid, ManifoldKind, ModeChange, ModelKind, ModelManifold, ProjectionKind,
    SpectralCondition,
};
