//! Consistency checks that compare numeric indices with the index formula,
//! with each other under excision, and with winding data.

use rand::Rng;
use serde::Serialize;

use crate::dyadic::DyadicRational;
use crate::error::{Error, Result};
use crate::spectral::doubling::{double_even, spectral_closing};
use crate::spectral::{d_value, realize_projection, ProjectionSymbol};
use crate::symbol::{
    make_model_operator, BoundaryCondition, BvpProblem, CollarOperator, EndCondition, ManifoldKind, MatrixSymbol,
    ModeChange, ModelKind, ModelManifold, SpectralCondition,
};

use super::circle::{random_null_loop, winding_index};
use super::discretize::Resolution;
use super::numeric::{index_report, IndexReport};

/// Spectral problem `(D, P)` on the cylinder: `P u| = g` at the near end and
/// the spectral closing at the far end.
pub fn closed_spectral_problem(name: &str, op: CollarOperator, near: SpectralCondition) -> Result<BvpProblem> {
    let far = spectral_closing(&op.reflect())?;
    let rank = op.rank();
    let near = EndCondition::spectral(BoundaryCondition::trace(1, rank), near);
    BvpProblem::new(name, ModelManifold::new(ManifoldKind::Cylinder), op, vec![near, far])
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexFormulaReport {
    pub name: String,
    pub index: i64,
    pub doubled_index: i64,
    pub d: DyadicRational,
    pub rhs: DyadicRational,
    pub holds: bool,
    pub spectral: IndexReport,
    pub doubled: IndexReport,
}

/// `ind(D, P) = ind(D + alpha^* D) / 2 - d(P)`, with the left side and the
/// doubled index computed numerically and `d` at the finest resolution.
pub fn verify_index_formula(problem: &BvpProblem, resolutions: &[Resolution], tol: f64) -> Result<IndexFormulaReport> {
    let projection = problem.ends[0]
        .projection
        .as_ref()
        .ok_or_else(|| Error::Precondition("formula check needs a spectral near end".into()))?;
    let finest = resolutions.last().ok_or_else(|| Error::Precondition("no resolutions".into()))?;
    let d = d_value(&realize_projection(projection, finest.modes)?)?;
    let spectral = index_report(problem, resolutions, tol)?;
    let doubled = index_report(&double_even(problem)?, resolutions, tol)?;
    let index = stable(&spectral, "spectral problem")?;
    let doubled_index = stable(&doubled, "doubled problem")?;
    let rhs = DyadicRational::integer(doubled_index).half() - d;
    Ok(IndexFormulaReport {
        name: problem.name.clone(),
        index,
        doubled_index,
        d,
        rhs,
        holds: DyadicRational::integer(index) == rhs,
        spectral,
        doubled,
    })
}

fn stable(r: &IndexReport, what: &str) -> Result<i64> {
    r.stable_index()
        .ok_or_else(|| Error::NumericalInconsistency(format!("{what}: index is {:?} (gap {:.3e})", r.verdict, r.gap)))
}

/// `(D_+, P)` with `P` of finite rank `k` for `k >= 0`; for `k < 0` the
/// mirror generator `(D_-, 1 - |k| modes)`.
pub fn finite_rank_generator(k: i64) -> Result<BvpProblem> {
    let cyl = ModelManifold::new(ManifoldKind::Cylinder);
    let (kind, ranks, base, add) =
        if k >= 0 { (ModelKind::Dplus, (1, 0), ProjectionSymbol::zero(1), true) } else { (ModelKind::Dminus, (0, 1), ProjectionSymbol::identity(1), false) };
    let op = make_model_operator(kind, ranks, &cyl)?.operator;
    let mods: Vec<ModeChange> = (0..k.abs()).map(|j| ModeChange::unit(add, j, 1, 0)).collect();
    closed_spectral_problem(&format!("finite-rank[{k}]"), op, SpectralCondition::from_symbol(base).with_modifications(mods))
}

/// `D_+ + D_-` with the rank-one pullback projection onto
/// `(s e^{ijx}, c)` for the given angle and twist.
pub fn classical_generator(angle: f64, twist: i32) -> Result<BvpProblem> {
    let cyl = ModelManifold::new(ManifoldKind::Cylinder);
    let op = make_model_operator(ModelKind::Dpm, (1, 1), &cyl)?.operator;
    let (s, c) = angle.sin_cos();
    let sc = s * c;
    let sym = MatrixSymbol::parse(
        &[
            vec![format!("{}", s * s), format!("{sc}*e({twist})")],
            vec![format!("{sc}*e({})", -twist), format!("{}", c * c)],
        ],
        0,
    )?;
    let p = ProjectionSymbol::new(sym)?;
    closed_spectral_problem(&format!("classical[{angle:.3},{twist}]"), op, SpectralCondition::from_symbol(p))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcisionReport {
    pub first: String,
    pub second: String,
    pub winding_first: Option<i64>,
    pub winding_second: Option<i64>,
    pub index_first: IndexReport,
    pub index_second: IndexReport,
    pub equal: bool,
}

/// Compares the numeric indices of two problems whose reduced data agree.
/// When both carry circle-operator winding data it is reported alongside.
pub fn verify_excision(
    first: &BvpProblem,
    second: &BvpProblem,
    windings: (Option<i64>, Option<i64>),
    resolutions: &[Resolution],
    tol: f64,
) -> Result<ExcisionReport> {
    let a = index_report(first, resolutions, tol)?;
    let b = index_report(second, resolutions, tol)?;
    let equal = matches!((a.stable_index(), b.stable_index()), (Some(x), Some(y)) if x == y);
    Ok(ExcisionReport {
        first: first.name.clone(),
        second: second.name.clone(),
        winding_first: windings.0,
        winding_second: windings.1,
        index_first: a,
        index_second: b,
        equal,
    })
}

/// `D_+ + D_-` on the cylinder with the near condition
/// `a_+ (1 + sgn)/2 + a_- (1 - sgn)/2` acting on the `E_-` component.
pub fn loop_condition_problem(a_plus: &MatrixSymbol, a_minus: &MatrixSymbol) -> Result<BvpProblem> {
    let r = a_plus.rows();
    let cyl = ModelManifold::new(ManifoldKind::Cylinder);
    let mut p = make_model_operator(ModelKind::Dpm, (r, r), &cyl)?;
    let half = |sign: &str| {
        let rows: Vec<Vec<String>> = (0..r)
            .map(|i| (0..r).map(|j| if i == j { format!("(1 {sign} sgn)/2") } else { "0".into() }).collect())
            .collect();
        MatrixSymbol::parse(&rows, 0)
    };
    let sym = a_plus.mul(&half("+")?)?.add(&a_minus.mul(&half("-")?)?)?.with_degree(0);
    let cond = MatrixSymbol::zero(r, r, 0).hstack(&sym)?;
    p.ends[0] = EndCondition::classical(BoundaryCondition::new(vec![cond])?);
    Ok(p.with_name("loop-condition"))
}

/// Seeded instance for the excision suite: the same loop pair with and
/// without a winding-zero boundary automorphism applied.
pub fn random_excision_pair<R: Rng>(rng: &mut R, rank: usize) -> Result<(BvpProblem, BvpProblem, (i64, i64))> {
    let k = rng.gen_range(-2..=2);
    let rows: Vec<Vec<String>> = (0..rank)
        .map(|i| {
            (0..rank)
                .map(|j| match (i, j) {
                    (0, 0) => format!("e({k})"),
                    _ if i == j => "1".into(),
                    _ => "0".into(),
                })
                .collect()
        })
        .collect();
    let a_minus = MatrixSymbol::parse(&rows, 0)?;
    let a_plus = random_null_loop(rng, rank, 1);
    let g = random_null_loop(rng, rank, 1);
    let first = loop_condition_problem(&a_plus, &a_minus)?;
    let second = loop_condition_problem(&g.mul(&a_plus)?, &g.mul(&a_minus)?)?;
    let w1 = winding_index(&a_plus, &a_minus, 256)?.2;
    let w2 = winding_index(&g.mul(&a_plus)?, &g.mul(&a_minus)?, 256)?.2;
    Ok((first.with_name("excision-a"), second.with_name("excision-b"), (w1, w2)))
}
