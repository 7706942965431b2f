//! Bounded-solution subspaces of the normal ODE, boundary symbols,
//! Shapiro-Lopatinskii checks and the Atiyah-Bott obstruction on circles.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};
use crate::symbol::{BoundaryCondition, BvpProblem, CollarOperator, EndCondition, ManifoldKind};

pub const DEFAULT_ROOT_TOL: f64 = 1e-8;
pub const DEFAULT_SL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubspaceFrame {
    pub x: f64,
    pub xi: f64,
    pub side: Side,
    #[serde(skip)]
    pub columns: CMat,
    /// Roots belonging to this side, in Schur order.
    pub roots: Vec<C64>,
}

impl SubspaceFrame {
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }
}

/// Linearization of `sum_k D_k lambda^(m-k)` in the jet coordinates
/// `(u, -i u', ..., (-i d/dt)^(m-1) u)` at `t = 0`.
pub fn companion_matrix(op: &CollarOperator, x: f64, xi: f64) -> Result<CMat> {
    if xi == 0.0 {
        return Err(Error::Precondition("companion matrix needs xi != 0".into()));
    }
    let coeffs = op.principal_coefficients_at(x, 0.0, xi);
    companion_from_coefficients(&coeffs)
}

pub fn companion_from_coefficients(coeffs: &[CMat]) -> Result<CMat> {
    let n = coeffs[0].nrows();
    if !linalg::is_identity(&coeffs[0], 1e-14) {
        return Err(Error::Normalization("leading coefficient is not the identity".into()));
    }
    let m = coeffs.len() - 1;
    let mut out = linalg::zeros(m * n, m * n);
    for j in 0..m.saturating_sub(1) {
        for i in 0..n {
            out[(j * n + i, (j + 1) * n + i)] = c(1.0, 0.0);
        }
    }
    for k in 1..=m {
        let col = (m - k) * n;
        out.view_mut(((m - 1) * n, col), (n, n)).copy_from(&(-&coeffs[k]));
    }
    Ok(out)
}

/// Invariant subspaces of the companion matrix for roots in the upper and
/// lower half-planes, as canonical orthonormal frames.
pub fn bounded_subspaces(companion: &CMat, tol: f64) -> Result<(SubspaceFrame, SubspaceFrame)> {
    for z in linalg::eigenvalues(companion) {
        if z.im.abs() < tol {
            return Err(Error::EllipticityMargin { eigenvalue: z, tol });
        }
    }
    let (q, t, k) = linalg::ordered_schur(companion, |z| z.im > 0.0);
    let n = companion.nrows();
    let roots: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let plus = linalg::canonical_frame(&q.columns(0, k).into_owned());
    let (qm, tm, km) = linalg::ordered_schur(companion, |z| z.im < 0.0);
    let minus = linalg::canonical_frame(&qm.columns(0, km).into_owned());
    let minus_roots = (0..km).map(|i| tm[(i, i)]).collect();
    Ok((
        SubspaceFrame { x: 0.0, xi: 0.0, side: Side::Plus, columns: plus, roots: roots[..k].to_vec() },
        SubspaceFrame { x: 0.0, xi: 0.0, side: Side::Minus, columns: minus, roots: minus_roots },
    ))
}

/// Frames of `L_+` and `L_-` of the operator at `(x, xi)`.
pub fn frames_at(op: &CollarOperator, x: f64, xi: f64, tol: f64) -> Result<(SubspaceFrame, SubspaceFrame)> {
    let (mut p, mut m) = bounded_subspaces(&companion_matrix(op, x, xi)?, tol)?;
    p.x = x;
    p.xi = xi;
    m.x = x;
    m.xi = xi;
    Ok((p, m))
}

/// `sigma(B)` applied to the columns of a plus-frame.
pub fn boundary_symbol_matrix(b: &BoundaryCondition, frame: &SubspaceFrame) -> Result<CMat> {
    if frame.side != Side::Plus {
        return Err(Error::Precondition("boundary symbol is restricted to L+".into()));
    }
    let stacked = b.stacked_at(frame.x, frame.xi);
    if stacked.ncols() != frame.ambient_dim() {
        return Err(Error::Shape(format!(
            "condition acts on jets of dimension {}, frame lives in dimension {}",
            stacked.ncols(),
            frame.ambient_dim()
        )));
    }
    Ok(stacked * &frame.columns)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryGrid {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl BoundaryGrid {
    pub fn uniform(nx: usize) -> Self {
        Self { x: (0..nx).map(|j| 2.0 * PI * j as f64 / nx as f64).collect(), xi: vec![1.0, -1.0] }
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for BoundaryGrid {
    fn default() -> Self {
        Self::uniform(32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlVerdict {
    Elliptic,
    NotElliptic,
    RankMismatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlSample {
    pub end: usize,
    pub x: f64,
    pub xi: f64,
    pub rank_plus: usize,
    pub target_rank: usize,
    pub min_singular: f64,
    /// Distance of the boundary symbol to the identity in matched canonical
    /// frames; only for spectral conditions.
    pub identity_residual: Option<f64>,
    pub roots: Vec<C64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub samples: Vec<SlSample>,
    pub global_min: f64,
    pub verdict: SlVerdict,
    pub tol: f64,
    pub grid: String,
}

impl EllipticityReport {
    pub fn is_elliptic(&self) -> bool {
        self.verdict == SlVerdict::Elliptic
    }

    pub fn max_identity_residual(&self) -> Option<f64> {
        self.samples.iter().filter_map(|s| s.identity_residual).reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["end", "x", "xi", "min_singular_value", "roots"]).map_err(csv_err)?;
        for s in &self.samples {
            let roots: Vec<String> = s.roots.iter().map(|z| format!("{:.12e}{:+.12e}i", z.re, z.im)).collect();
            out.write_record([
                s.end.to_string(),
                format!("{:.12e}", s.x),
                format!("{}", s.xi),
                format!("{:.12e}", s.min_singular),
                roots.join(";"),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Target of the boundary map at one sample: `Q^H sigma(P) sigma(B)`, with `Q`
/// the canonical frame of `Im sigma(P)`, or `sigma(B)` itself.
fn effective_symbol(end: &EndCondition, x: f64, xi: f64) -> (CMat, Option<CMat>) {
    let b = end.condition.stacked_at(x, xi);
    match &end.projection {
        None => (b, None),
        Some(p) => {
            let ps = p.symbol.eval(x, xi);
            let q = linalg::canonical_frame(&linalg::orth(&ps, 1e-10));
            let m = q.adjoint() * ps * b;
            (m, Some(q))
        }
    }
}

/// Check of one end condition against one plus-frame.
pub fn sl_sample(end_idx: usize, end: &EndCondition, plus: &SubspaceFrame) -> Result<SlSample> {
    let (eff, q) = effective_symbol(end, plus.x, plus.xi);
    if eff.ncols() != plus.ambient_dim() {
        return Err(Error::Shape("condition and frame dimensions differ".into()));
    }
    let m = &eff * &plus.columns;
    let rank_plus = plus.dim();
    let target_rank = eff.nrows();
    let min_singular = if rank_plus != target_rank {
        0.0
    } else if rank_plus == 0 {
        f64::INFINITY
    } else {
        linalg::min_singular_value(&m)
    };
    let identity_residual = match q {
        Some(q) if rank_plus == target_rank => {
            // coordinates of the image in the canonical frame of L+ itself
            let same_space = linalg::max_principal_angle_sin(&q, &plus.columns) < 1e-8;
            same_space.then(|| linalg::max_abs_diff(&m, &linalg::identity(rank_plus)))
        }
        _ => None,
    };
    Ok(SlSample {
        end: end_idx,
        x: plus.x,
        xi: plus.xi,
        rank_plus,
        target_rank,
        min_singular,
        identity_residual,
        roots: plus.roots.clone(),
    })
}

/// Shapiro-Lopatinskii check at every end and grid sample. On the interval
/// the cosphere bundle of the boundary is empty and the check is vacuous.
pub fn sl_check(problem: &BvpProblem, grid: &BoundaryGrid, root_tol: f64, sl_tol: f64) -> Result<EllipticityReport> {
    let mut samples = Vec::new();
    if problem.manifold.kind() != ManifoldKind::Interval {
        for (e, end) in problem.ends.iter().enumerate() {
            let op = problem.operator_at_end(e);
            for &x in &grid.x {
                for &xi in &grid.xi {
                    let (plus, _) = frames_at(&op, x, xi, root_tol)?;
                    samples.push(sl_sample(e, end, &plus)?);
                }
            }
        }
    }
    let mismatch = samples.iter().any(|s| s.rank_plus != s.target_rank);
    let global_min = samples.iter().map(|s| s.min_singular).fold(f64::INFINITY, f64::min);
    let verdict = if mismatch {
        SlVerdict::RankMismatch
    } else if global_min > sl_tol {
        SlVerdict::Elliptic
    } else {
        SlVerdict::NotElliptic
    };
    Ok(EllipticityReport {
        samples,
        global_min,
        verdict,
        tol: sl_tol,
        grid: format!("{} x-samples, xi in {:?}, {} ends", grid.x.len(), grid.xi, problem.ends.len()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub rank_plus_direction: usize,
    pub rank_minus_direction: usize,
    pub obstruction: i64,
    /// Largest principal-angle sine between frames at adjacent x samples.
    pub max_adjacent_angle: f64,
    pub x_samples: usize,
    pub verdict: String,
}

impl ObstructionReport {
    pub fn is_obstructed(&self) -> bool {
        self.obstruction != 0
    }
}

/// Ranks of `L_+` over the two components `xi = +1`, `xi = -1` of the
/// cosphere bundle of a circle; their difference is the obstruction.
pub fn ab_obstruction(op: &CollarOperator, x_samples: usize, root_tol: f64) -> Result<ObstructionReport> {
    let xs: Vec<f64> = (0..x_samples).map(|j| 2.0 * PI * j as f64 / x_samples as f64).collect();
    let mut ranks = [0usize; 2];
    let mut max_angle = 0.0f64;
    for (s, &xi) in [1.0, -1.0].iter().enumerate() {
        let mut prev: Option<CMat> = None;
        let mut first: Option<CMat> = None;
        for (j, &x) in xs.iter().enumerate() {
            let (plus, _) = frames_at(op, x, xi, root_tol)?;
            if j == 0 {
                ranks[s] = plus.dim();
            } else if plus.dim() != ranks[s] {
                return Err(Error::Discontinuity(format!(
                    "rank of L+ jumps from {} to {} at x = {x:.6}, xi = {xi}",
                    ranks[s],
                    plus.dim()
                )));
            }
            if let Some(p) = &prev {
                max_angle = max_angle.max(linalg::max_principal_angle_sin(p, &plus.columns));
            }
            if first.is_none() {
                first = Some(plus.columns.clone());
            }
            prev = Some(plus.columns);
        }
        if let (Some(p), Some(f)) = (&prev, &first) {
            max_angle = max_angle.max(linalg::max_principal_angle_sin(p, f));
        }
    }
    let obstruction = ranks[0] as i64 - ranks[1] as i64;
    let verdict = if obstruction == 0 { "classical boundary conditions possible" } else { "Atiyah-Bott obstructed" };
    Ok(ObstructionReport {
        rank_plus_direction: ranks[0],
        rank_minus_direction: ranks[1],
        obstruction,
        max_adjacent_angle: max_angle,
        x_samples,
        verdict: verdict.into(),
    })
}

/// Random constant classical condition `B = [B_0 | ... | B_(m-1)]` with
/// standard complex Gaussian-like entries.
pub fn random_condition(rng: &mut ChaCha8Rng, order: usize, rank: usize, target: usize) -> BoundaryCondition {
    let jets = (0..order)
        .map(|_| {
            let m = CMat::from_fn(target, rank, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            crate::symbol::MatrixSymbol::constant(&m)
        })
        .collect();
    BoundaryCondition::new(jets).expect("consistent shapes")
}

/// Search seeded random constant conditions of the right target rank for one
/// that is Shapiro-Lopatinskii elliptic at the near end.
pub fn find_classical_condition(
    problem: &BvpProblem,
    grid: &BoundaryGrid,
    seed: u64,
    tries: usize,
    root_tol: f64,
    sl_tol: f64,
) -> Result<Option<BoundaryCondition>> {
    let (plus, _) = frames_at(&problem.operator, grid.x[0], 1.0, root_tol)?;
    let target = plus.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..tries {
        let b = random_condition(&mut rng, problem.order(), problem.rank(), target);
        let end = EndCondition::classical(b.clone());
        let mut ok = true;
        'outer: for &x in &grid.x {
            for &xi in &grid.xi {
                let (plus, _) = frames_at(&problem.operator, x, xi, root_tol)?;
                let s = sl_sample(0, &end, &plus)?;
                if s.rank_plus != s.target_rank || s.min_singular <= sl_tol {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;
    use crate::symbol::MatrixSymbol;

    fn scalar(src: &str, degree: i32) -> MatrixSymbol {
        MatrixSymbol::parse(&[vec![src.to_string()]], degree).unwrap()
    }

    fn laplace() -> CollarOperator {
        CollarOperator::new(vec![MatrixSymbol::identity(1), MatrixSymbol::zero(1, 1, 1), scalar("xi^2", 2)], None).unwrap()
    }

    #[test]
    fn companion_examples() {
        let op = CollarOperator::new(vec![MatrixSymbol::identity(1), scalar("i*absxi", 1)], None).unwrap();
        let cm = companion_matrix(&op, 0.0, 1.0).unwrap();
        assert_eq!(cm[(0, 0)], -I);
        let mut ev = linalg::eigenvalues(&companion_matrix(&laplace(), 0.0, 1.0).unwrap());
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] + I).norm() < 1e-12 && (ev[1] - I).norm() < 1e-12);
    }

    #[test]
    fn laplace_plus_frame_is_decaying_exponential() {
        let (plus, minus) = frames_at(&laplace(), 0.0, 1.0, 1e-8).unwrap();
        assert_eq!((plus.dim(), minus.dim()), (1, 1));
        let s = 1.0 / 2f64.sqrt();
        assert!((plus.columns[(0, 0)] - c(s, 0.0)).norm() < 1e-12);
        assert!((plus.columns[(1, 0)] - c(0.0, s)).norm() < 1e-12);
    }

    #[test]
    fn dirichlet_and_neumann_symbols() {
        let (plus, _) = frames_at(&laplace(), 0.0, 1.0, 1e-8).unwrap();
        let dir = BoundaryCondition::new(vec![MatrixSymbol::identity(1), MatrixSymbol::zero(1, 1, 0)]).unwrap();
        let neu = BoundaryCondition::new(vec![MatrixSymbol::zero(1, 1, 0), MatrixSymbol::identity(1)]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((boundary_symbol_matrix(&dir, &plus).unwrap()[(0, 0)] - c(s, 0.0)).norm() < 1e-12);
        assert!((boundary_symbol_matrix(&neu, &plus).unwrap()[(0, 0)] - c(0.0, s)).norm() < 1e-12);
        // a + b i = 0 with (a, b) = (1, i)
        let bad = BoundaryCondition::new(vec![MatrixSymbol::identity(1), MatrixSymbol::constant(&CMat::from_element(1, 1, I))]).unwrap();
        assert!(boundary_symbol_matrix(&bad, &plus).unwrap()[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn real_root_is_rejected() {
        let op = CollarOperator::new(vec![MatrixSymbol::identity(1), scalar("xi", 1)], None).unwrap();
        assert!(matches!(frames_at(&op, 0.0, 1.0, 1e-8), Err(Error::EllipticityMargin { .. })));
    }

    #[test]
    fn obstruction_examples() {
        let r = ab_obstruction(&laplace(), 16, 1e-8).unwrap();
        assert_eq!((r.rank_plus_direction, r.rank_minus_direction, r.obstruction), (1, 1, 0));
        let cr = CollarOperator::new(vec![MatrixSymbol::identity(1), scalar("-i*xi", 1)], None).unwrap();
        let r = ab_obstruction(&cr, 16, 1e-8).unwrap();
        assert_eq!((r.rank_plus_direction, r.rank_minus_direction, r.obstruction), (1, 0, 1));
    }

    #[test]
    fn block_companion_eigenvalues_are_union() {
        let op = CollarOperator::new(
            vec![
                MatrixSymbol::identity(2),
                MatrixSymbol::zero(2, 2, 1),
                MatrixSymbol::parse(&[vec!["xi^2".into(), "0".into()], vec!["0".into(), "4*xi^2".into()]], 2).unwrap(),
            ],
            None,
        )
        .unwrap();
        let mut ev: Vec<f64> = linalg::eigenvalues(&companion_matrix(&op, 0.0, 1.0).unwrap()).iter().map(|z| z.im).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip([-2.0, -1.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
