//! Doubled problems `D + alpha^* D^{+-1}` with the boundary condition
//! `P u| + (1 - P) v| = g`, and the repackaging of complementary pairs.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};
use crate::symbol::{
    direct_sum, BoundaryCondition, BvpProblem, CollarOperator, EndCondition, MatrixSymbol, SpectralCondition,
    SymbolFn, SymbolPoint,
};

use super::symbol::{cosphere_samples, parity_classify, Parity, ProjectionSymbol};

const PAIRING_TOL: f64 = 1e-10;

fn require_first_order(op: &CollarOperator) -> Result<()> {
    if op.order() != 1 {
        return Err(Error::Order(format!("doubling needs a first-order operator, got order {}", op.order())));
    }
    Ok(())
}

/// Tangential symbol `A = i d_1` of a first-order collar operator
/// `-i d/dt + d_1`.
pub fn tangential_symbol(op: &CollarOperator) -> Result<MatrixSymbol> {
    require_first_order(op)?;
    Ok(op.coefficients()[1].scale(I))
}

/// Spectral closing condition `P_+ sigma(A) u| = g` for the given operator
/// written in the inward coordinate of its end. Used to close the far end
/// of a cylinder.
pub fn spectral_closing(op_at_end: &CollarOperator) -> Result<EndCondition> {
    let a = tangential_symbol(op_at_end)?;
    let symbol = ProjectionSymbol::positive_part(&a)?;
    Ok(EndCondition::spectral(BoundaryCondition::trace(1, op_at_end.rank()), SpectralCondition::from_symbol(symbol)))
}

struct NearData<'a> {
    trace: &'a MatrixSymbol,
    projection: &'a SpectralCondition,
}

fn near_data(problem: &BvpProblem) -> Result<NearData<'_>> {
    if !problem.manifold.has_circle_boundary() || problem.manifold.ends() != 2 {
        return Err(Error::Capability("doubling is implemented on cylinders and annuli".into()));
    }
    require_first_order(&problem.operator)?;
    let end = &problem.ends[0];
    let projection = end
        .projection
        .as_ref()
        .ok_or_else(|| Error::Precondition("the near end carries no spectral projection".into()))?;
    Ok(NearData { trace: &end.condition.jets()[0], projection })
}

/// `[P B | (1 - P) B]` on the jets of `(u, v)`.
fn paired_condition(p: &MatrixSymbol, b: &MatrixSymbol) -> Result<BoundaryCondition> {
    let n = p.rows();
    let q = MatrixSymbol::identity(n).add(&p.scale(c(-1.0, 0.0)))?.with_degree(0);
    let left = p.mul(b)?.with_degree(0);
    let right = q.mul(b)?.with_degree(0);
    BoundaryCondition::new(vec![left.hstack(&right)?])
}

/// Classical problem for `D + alpha^* D` with `P u| + (1 - P) v| = g` at the
/// near end, built from the symbol of the projection. The far end keeps the
/// original condition on `u` and closes `v` spectrally.
pub fn double_even(problem: &BvpProblem) -> Result<BvpProblem> {
    let near = near_data(problem)?;
    let sym = &near.projection.symbol;
    match parity_classify(sym) {
        Parity::Even => {}
        other => return Err(Error::Admissibility(format!("even doubling needs an even projection, got {other:?}"))),
    }
    if !sym.is_pullback() {
        return Err(Error::UnsupportedClass("even projection symbol depends on the covariable".into()));
    }
    let reflected = problem.operator.alpha_pullback();
    let operator = problem.operator.direct_sum(&reflected)?;
    let near_end = EndCondition::classical(paired_condition(sym.symbol(), near.trace)?);
    let far_end = problem.ends[1].direct_sum(&spectral_closing(&reflected.reflect())?)?;
    BvpProblem::new(format!("{}.even-double", problem.name), problem.manifold.clone(), operator, vec![near_end, far_end])
}

/// Symbol-level data of the odd doubling `D + alpha^* D^{-1}`: the block
/// principal symbol on the cotangent circle and the paired boundary symbol.
#[derive(Clone)]
pub struct OddDoubling {
    pub principal: MatrixSymbol,
    pub condition: MatrixSymbol,
    /// `min |det sigma(D)|` over the sampled cotangent circle.
    pub min_abs_det: f64,
}

impl std::fmt::Debug for OddDoubling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OddDoubling")
            .field("principal", &self.principal.label())
            .field("condition", &self.condition.label())
            .field("min_abs_det", &self.min_abs_det)
            .finish()
    }
}

pub fn double_odd(problem: &BvpProblem) -> Result<OddDoubling> {
    let near = near_data(problem)?;
    let sym = &near.projection.symbol;
    match parity_classify(sym) {
        Parity::Odd => {}
        other => return Err(Error::Admissibility(format!("odd doubling needs an odd projection, got {other:?}"))),
    }
    let op = problem.operator.clone();
    let mut min_abs_det = f64::INFINITY;
    for (x, _) in cosphere_samples(16) {
        for k in 0..64 {
            let a = std::f64::consts::PI * k as f64 / 32.0;
            let p = SymbolPoint::new(x, 0.0, a.cos(), c(a.sin(), 0.0));
            min_abs_det = min_abs_det.min(linalg::determinant(&op.principal_symbol_at(&p)).norm());
        }
    }
    if min_abs_det < PAIRING_TOL {
        return Err(Error::Precondition(format!("principal symbol is not invertible on the cotangent circle ({min_abs_det:e})")));
    }
    let n = op.rank();
    let f: SymbolFn = Arc::new(move |p: &SymbolPoint| {
        let direct = op.principal_symbol_at(p);
        let flipped = SymbolPoint { xi: -p.xi, lambda: -p.lambda, ..*p };
        let inv = linalg::inverse(&op.principal_symbol_at(&flipped)).unwrap_or_else(|_| CMat::from_element(n, n, c(f64::NAN, 0.0)));
        linalg::block_diag(&direct, &inv)
    });
    let principal = MatrixSymbol::custom(2 * n, 2 * n, 1, "D+alpha*D^-1", problem.operator.is_x_independent(), false, f);
    let condition = paired_condition(sym.symbol(), near.trace)?.jets()[0].clone();
    Ok(OddDoubling { principal, condition, min_abs_det })
}

/// Two problems on the same boundary whose near projections are
/// complementary: `(D1, P)` and `(D2, 1 - P)`.
#[derive(Debug, Clone)]
pub struct OddPair {
    pub first: BvpProblem,
    pub second: BvpProblem,
}

/// The same pair written as one problem for `D1 + D2` with the condition
/// `P u| + (1 - P) v|` on the combined boundary data.
#[derive(Debug, Clone)]
pub struct CombinedPair {
    pub problem: BvpProblem,
    pub parts: OddPair,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingDefect {
    pub max_residual: f64,
}

fn pairing_defect(a: &ProjectionSymbol, b: &ProjectionSymbol) -> Result<PairingDefect> {
    if a.rank() != b.rank() {
        return Err(Error::Pairing(format!("projection ranks {} and {}", a.rank(), b.rank())));
    }
    let id = linalg::identity(a.rank());
    let mut max_residual: f64 = 0.0;
    for (x, xi) in cosphere_samples(16) {
        let s = a.eval(x, xi) + b.eval(x, xi) - &id;
        max_residual = max_residual.max(linalg::norm2(&s));
    }
    Ok(PairingDefect { max_residual })
}

pub fn unfold_odd_pair(pair: &OddPair) -> Result<CombinedPair> {
    let (p, q) = (near_data(&pair.first)?, near_data(&pair.second)?);
    let defect = pairing_defect(&p.projection.symbol, &q.projection.symbol)?;
    if defect.max_residual > PAIRING_TOL {
        return Err(Error::Pairing(format!("projections are not complementary (residual {:.3e})", defect.max_residual)));
    }
    let problem = direct_sum(&pair.first, &pair.second)?.with_name(format!("{}|{}", pair.first.name, pair.second.name));
    Ok(CombinedPair { problem, parts: pair.clone() })
}

pub fn fold_odd_pair(combined: &CombinedPair) -> OddPair {
    combined.parts.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{make_model_operator, ManifoldKind, ModelKind, ModelManifold};

    fn cylinder() -> ModelManifold {
        ModelManifold::new(ManifoldKind::Cylinder)
    }

    fn with_near_projection(p: &BvpProblem, sym: ProjectionSymbol) -> BvpProblem {
        let mut q = p.clone();
        let r = sym.rank();
        q.ends[0] = EndCondition::spectral(BoundaryCondition::trace(1, r), SpectralCondition::from_symbol(sym));
        q
    }

    #[test]
    fn identity_projection_selects_first_factor() {
        let base = make_model_operator(ModelKind::Dminus, (0, 1), &cylinder()).unwrap();
        let p = with_near_projection(&base, ProjectionSymbol::identity(1));
        let d = double_even(&p).unwrap();
        assert_eq!(d.rank(), 2);
        assert!(!d.ends[0].is_spectral());
        let b = d.ends[0].condition.stacked_at(0.3, 1.0);
        let expect = CMat::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((b - expect).norm() < 1e-14);
    }

    #[test]
    fn pullback_condition_is_paired() {
        let base = make_model_operator(ModelKind::Dpm, (1, 1), &cylinder()).unwrap();
        let sym = ProjectionSymbol::new(
            MatrixSymbol::parse(
                &[
                    vec!["0.25".into(), "0.4330127018922193*e(1)".into()],
                    vec!["0.4330127018922193*e(-1)".into(), "0.75".into()],
                ],
                0,
            )
            .unwrap(),
        )
        .unwrap();
        let d = double_even(&with_near_projection(&base, sym.clone())).unwrap();
        let b = d.ends[0].condition.stacked_at(1.1, -1.0);
        let p = sym.eval(1.1, -1.0);
        assert!((b.columns(0, 2) - &p).norm() < 1e-12);
        assert!((b.columns(2, 2) - (linalg::identity(2) - &p)).norm() < 1e-12);
    }

    #[test]
    fn parity_mismatch_is_rejected() {
        let base = make_model_operator(ModelKind::Dplus, (1, 0), &cylinder()).unwrap();
        let heaviside = MatrixSymbol::parse(&[vec!["(1 + sgn)/2".into()]], 0).unwrap();
        let odd = with_near_projection(&base, ProjectionSymbol::new(heaviside).unwrap());
        assert!(matches!(double_even(&odd), Err(Error::Admissibility(_))));
        let even = with_near_projection(&base, ProjectionSymbol::zero(1));
        assert!(matches!(double_odd(&even), Err(Error::Admissibility(_))));
        let d = double_odd(&odd).unwrap();
        assert!(d.min_abs_det > 0.5);
        let m = d.principal.eval(&SymbolPoint::new(0.0, 0.0, 0.6, c(0.8, 0.0)));
        assert_eq!(m.shape(), (2, 2));
    }

    #[test]
    fn odd_pair_round_trip() {
        let base = make_model_operator(ModelKind::Dplus, (1, 0), &cylinder()).unwrap();
        let zero = with_near_projection(&base, ProjectionSymbol::zero(1));
        let other = make_model_operator(ModelKind::Dminus, (0, 1), &cylinder()).unwrap();
        let one = with_near_projection(&other, ProjectionSymbol::identity(1));
        let pair = OddPair { first: zero.clone(), second: one };
        let combined = unfold_odd_pair(&pair).unwrap();
        assert_eq!(combined.problem.rank(), 2);
        let back = fold_odd_pair(&combined);
        assert_eq!(back.first.name, pair.first.name);
        assert_eq!(back.second.name, pair.second.name);
        let bad = OddPair { first: zero.clone(), second: zero };
        assert!(matches!(unfold_odd_pair(&bad), Err(Error::Pairing(_))));
    }
}
