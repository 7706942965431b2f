use std::f64::consts::PI;

use serde::Serialize;

use crate::dyadic::DyadicRational;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};
use crate::symbol::{MatrixSymbol, ModeChange, ProjectionKind, SpectralCondition, SymbolPoint};

use super::symbol::{cosphere_samples, ProjectionSymbol};

pub const IDEMPOTENCY_TOL: f64 = 1e-10;
pub const SPECTRAL_CUT_TOL: f64 = 1e-10;

/// Truncated Fourier space on the circle: modes `|n| <= modes`, each carrying
/// a vector of length `rank`. Coordinates are ordered mode-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FourierSpace {
    pub modes: usize,
    pub rank: usize,
}

impl FourierSpace {
    pub fn new(modes: usize, rank: usize) -> Self {
        Self { modes, rank }
    }

    pub fn mode_count(&self) -> usize {
        2 * self.modes + 1
    }

    pub fn dim(&self) -> usize {
        self.mode_count() * self.rank
    }

    pub fn mode_list(&self) -> impl Iterator<Item = i64> {
        let n = self.modes as i64;
        -n..=n
    }

    pub fn index(&self, mode: i64, comp: usize) -> Option<usize> {
        let n = self.modes as i64;
        (mode.abs() <= n).then(|| (mode + n) as usize * self.rank + comp)
    }

    pub fn grid(&self) -> Vec<f64> {
        let k = self.mode_count();
        (0..k).map(|j| 2.0 * PI * j as f64 / k as f64).collect()
    }

    /// Map from grid values to Fourier coefficients, acting blockwise.
    pub fn analysis(&self) -> CMat {
        let k = self.mode_count();
        let r = self.rank;
        let xs = self.grid();
        let mut f = linalg::zeros(k * r, k * r);
        for (a, n) in self.mode_list().enumerate() {
            for (j, &x) in xs.iter().enumerate() {
                let z = C64::from_polar(1.0 / k as f64, -(n as f64) * x);
                for q in 0..r {
                    f[(a * r + q, j * r + q)] = z;
                }
            }
        }
        f
    }

    /// Map from Fourier coefficients to grid values.
    pub fn synthesis(&self) -> CMat {
        let k = self.mode_count();
        let r = self.rank;
        let xs = self.grid();
        let mut f = linalg::zeros(k * r, k * r);
        for (j, &x) in xs.iter().enumerate() {
            for (a, n) in self.mode_list().enumerate() {
                let z = C64::from_polar(1.0, n as f64 * x);
                for q in 0..r {
                    f[(j * r + q, a * r + q)] = z;
                }
            }
        }
        f
    }

    /// Coordinate vector of `e^{i mode x} v`.
    pub fn mode_vector(&self, mode: i64, v: &[C64]) -> Result<CMat> {
        if v.len() != self.rank {
            return Err(Error::Shape(format!("mode vector has length {}, bundle rank is {}", v.len(), self.rank)));
        }
        let base = self
            .index(mode, 0)
            .ok_or_else(|| Error::Precondition(format!("mode {mode} outside the resolved range |n| <= {}", self.modes)))?;
        let mut out = linalg::zeros(self.dim(), 1);
        for (q, z) in v.iter().enumerate() {
            out[(base + q, 0)] = *z;
        }
        Ok(out)
    }
}

/// Fourier coefficients `c_k`, `|k| <= kmax`, of samples of a matrix function
/// on an equispaced grid of `len` points.
pub(crate) fn fourier_coefficients(samples: &[CMat], kmax: usize) -> Vec<CMat> {
    let len = samples.len();
    let (r, s) = samples[0].shape();
    (0..=2 * kmax)
        .map(|a| {
            let k = a as f64 - kmax as f64;
            let mut acc = linalg::zeros(r, s);
            for (j, m) in samples.iter().enumerate() {
                let x = 2.0 * PI * j as f64 / len as f64;
                acc += m * C64::from_polar(1.0 / len as f64, -k * x);
            }
            acc
        })
        .collect()
}

/// Galerkin matrix of the left quantization `a(x, D)` on a Fourier space:
/// block `(m, n)` is the `(m - n)`-th Fourier coefficient of `a(., n)`.
/// Exact when the x-dependence is a finite Fourier sum.
pub fn quantize_symbol(a: &MatrixSymbol, space: FourierSpace) -> CMat {
    let r = space.rank;
    let k = space.mode_count();
    let span = 2 * space.modes;
    // no aliasing into |k| <= span once len > span + bandwidth
    let len = match a.bandwidth() {
        Some(b) => span + b as usize + 1,
        None => 4 * span + 1,
    }
    .max(2 * span + 1);
    let mut out = linalg::zeros(k * r, k * r);
    for (b, n) in space.mode_list().enumerate() {
        let samples: Vec<CMat> = (0..len)
            .map(|j| a.eval(&SymbolPoint::boundary(2.0 * PI * j as f64 / len as f64, n as f64)))
            .collect();
        let coeffs = fourier_coefficients(&samples, span);
        for (a_idx, m) in space.mode_list().enumerate() {
            let d = (m - n + span as i64) as usize;
            out.view_mut((a_idx * r, b * r), (r, r)).copy_from(&coeffs[d]);
        }
    }
    out
}

/// Discretized first-order tangential operator on the circle.
#[derive(Debug, Clone)]
pub struct CircleOperator {
    pub matrix: CMat,
    pub symbol: MatrixSymbol,
    pub space: FourierSpace,
}

pub fn discretize_circle_op(a: &MatrixSymbol, modes: usize) -> Result<CircleOperator> {
    if a.rows() != a.cols() {
        return Err(Error::Shape("tangential operator must be square".into()));
    }
    if a.degree() > 1 {
        return Err(Error::Order(format!("tangential symbol has degree {}, at most 1 allowed", a.degree())));
    }
    if a.depends_on_lambda() && a.entries().is_some() {
        return Err(Error::MalformedSymbol("tangential symbol must not depend on lambda".into()));
    }
    let space = FourierSpace::new(modes, a.rows());
    Ok(CircleOperator { matrix: quantize_symbol(a, space), symbol: a.clone(), space })
}

/// Finite-dimensional projection on a Fourier space together with its
/// symbol and the modes added or removed relative to a reference.
#[derive(Debug, Clone)]
pub struct DiscreteProjection {
    matrix: CMat,
    symbol: ProjectionSymbol,
    space: FourierSpace,
    reference: CMat,
    ledger: Vec<ModeChange>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerEntry {
    pub op: &'static str,
    pub mode: i64,
    pub vector: Vec<[f64; 2]>,
}

impl DiscreteProjection {
    pub fn new(matrix: CMat, symbol: ProjectionSymbol, space: FourierSpace) -> Result<Self> {
        if matrix.shape() != (space.dim(), space.dim()) || symbol.rank() != space.rank {
            return Err(Error::Shape("projection matrix does not match its Fourier space".into()));
        }
        let res = linalg::max_abs_diff(&(&matrix * &matrix), &matrix);
        if res > IDEMPOTENCY_TOL {
            return Err(Error::Precondition(format!("matrix is not idempotent (residual {res:.2e})")));
        }
        Ok(Self { reference: matrix.clone(), matrix, symbol, space, ledger: Vec::new() })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn symbol(&self) -> &ProjectionSymbol {
        &self.symbol
    }

    pub fn space(&self) -> FourierSpace {
        self.space
    }

    pub fn reference(&self) -> &CMat {
        &self.reference
    }

    pub fn ledger(&self) -> &[ModeChange] {
        &self.ledger
    }

    pub fn ledger_entries(&self) -> Vec<LedgerEntry> {
        self.ledger
            .iter()
            .map(|m| LedgerEntry {
                op: if m.add { "add" } else { "remove" },
                mode: m.mode,
                vector: m.vector.iter().map(|z| [z.re, z.im]).collect(),
            })
            .collect()
    }

    pub fn idempotency_residual(&self) -> f64 {
        linalg::max_abs_diff(&(&self.matrix * &self.matrix), &self.matrix)
    }

    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round() as usize
    }

    /// Orthonormal basis of the range. Nonzero singular values of a projection
    /// are at least one, so the cut is absolute.
    pub fn range_basis(&self) -> CMat {
        let norm = linalg::norm2(&self.matrix);
        linalg::orth(&self.matrix, 0.5 / norm.max(0.5))
    }

    pub fn complement(&self) -> Self {
        let id = linalg::identity(self.space.dim());
        Self {
            matrix: &id - &self.matrix,
            symbol: self.symbol.complement(),
            space: self.space,
            reference: &id - &self.reference,
            ledger: self.ledger.iter().map(|m| ModeChange { add: !m.add, ..m.clone() }).collect(),
        }
    }

    /// Conjugate by an invertible matrix on the Fourier space; the symbol is
    /// taken as given by the caller.
    pub fn conjugate(&self, u: &CMat, u_inv: &CMat, symbol: ProjectionSymbol) -> Result<Self> {
        let m = u * &self.matrix * u_inv;
        let mut out = Self::new(m, symbol, self.space)?;
        out.reference = u * &self.reference * u_inv;
        out.ledger = self.ledger.clone();
        Ok(out)
    }

    /// High-mode consistency: the largest deviation between the action on
    /// the top `count` modes of each sign and the symbol at `xi = +-1`, for
    /// x-independent symbols.
    pub fn symbol_defect(&self, count: usize) -> Option<f64> {
        if !self.symbol.symbol().is_x_independent() {
            return None;
        }
        let r = self.space.rank;
        let n = self.space.modes as i64;
        let mut worst = 0.0f64;
        for j in 0..count.min(self.space.modes) as i64 {
            for mode in [n - j, -(n - j)] {
                let i = self.space.index(mode, 0).unwrap();
                let block = self.matrix.view((i, i), (r, r)).into_owned();
                let s = self.symbol.eval(0.0, mode.signum() as f64);
                worst = worst.max(linalg::max_abs_diff(&block, &s));
            }
        }
        Some(worst)
    }
}

impl DiscreteProjection {
    /// Block sum on the Fourier space of the combined bundle, coordinates
    /// interleaved mode by mode.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.space.modes != other.space.modes {
            return Err(Error::IncompatibleSum("projections resolved with different mode counts".into()));
        }
        let (ra, rb) = (self.space.rank, other.space.rank);
        let space = FourierSpace::new(self.space.modes, ra + rb);
        let embed = |m: &CMat, n: &CMat| {
            let mut out = linalg::zeros(space.dim(), space.dim());
            let k = space.mode_count();
            for a in 0..k {
                for b in 0..k {
                    out.view_mut((a * (ra + rb), b * (ra + rb)), (ra, ra)).copy_from(&m.view((a * ra, b * ra), (ra, ra)));
                    out.view_mut((a * (ra + rb) + ra, b * (ra + rb) + ra), (rb, rb))
                        .copy_from(&n.view((a * rb, b * rb), (rb, rb)));
                }
            }
            out
        };
        let mut ledger: Vec<ModeChange> = Vec::new();
        for m in &self.ledger {
            let mut v = m.vector.clone();
            v.resize(ra + rb, C64::new(0.0, 0.0));
            ledger.push(ModeChange { vector: v, ..m.clone() });
        }
        for m in &other.ledger {
            let mut v = vec![C64::new(0.0, 0.0); ra];
            v.extend_from_slice(&m.vector);
            ledger.push(ModeChange { vector: v, ..m.clone() });
        }
        Ok(Self {
            matrix: embed(&self.matrix, &other.matrix),
            symbol: self.symbol.direct_sum(&other.symbol)?,
            space,
            reference: embed(&self.reference, &other.reference),
            ledger,
        })
    }
}

fn realize_kind(kind: &ProjectionKind, symbol: &ProjectionSymbol, modes: usize) -> Result<DiscreteProjection> {
    match kind {
        ProjectionKind::Symbol => quantize_projection(symbol, FourierSpace::new(modes, symbol.rank())),
        ProjectionKind::SpectralOf(a) => spectral_projection(&discretize_circle_op(a, modes)?),
        ProjectionKind::Sum(a, ra, b, rb) => {
            let n = ra + rb;
            let split = |lo: usize, len: usize| -> Result<ProjectionSymbol> {
                let f: crate::symbol::SymbolFn = {
                    let s = symbol.symbol().clone();
                    std::sync::Arc::new(move |p: &SymbolPoint| s.eval(p).view((lo, lo), (len, len)).into_owned())
                };
                let x_ind = symbol.symbol().is_x_independent();
                ProjectionSymbol::new(MatrixSymbol::custom(len, len, 0, "block", x_ind, true, f))
            };
            debug_assert_eq!(n, symbol.rank());
            let pa = realize_kind(a, &split(0, *ra)?, modes)?;
            let pb = realize_kind(b, &split(*ra, *rb)?, modes)?;
            pa.direct_sum(&pb)
        }
    }
}

/// Discrete projection of a boundary condition at the given resolution,
/// including its declared mode changes.
pub fn realize_projection(cond: &SpectralCondition, modes: usize) -> Result<DiscreteProjection> {
    let base = realize_kind(&cond.kind, &cond.symbol, modes)?;
    finite_rank_modify(&base, &cond.modifications)
}

fn same_change(a: &ModeChange, b: &ModeChange) -> bool {
    a.mode == b.mode && a.vector == b.vector
}

fn apply_change(p: &CMat, v: &CMat, add: bool) -> Result<CMat> {
    let n = p.nrows();
    let id = linalg::identity(n);
    let vn = v.norm();
    if vn == 0.0 {
        return Err(Error::Geometry("mode vector is zero".into()));
    }
    if add {
        let in_range = p * v;
        if in_range.norm() > 1e-10 * vn {
            return Err(Error::Geometry("added mode is not orthogonal to the range".into()));
        }
        let u = (&id - p) * v;
        let w = (&id - p).adjoint() * &u / c(u.norm_squared(), 0.0);
        Ok(p + &u * w.adjoint())
    } else {
        let outside = (&id - p) * v;
        if outside.norm() > 1e-10 * vn {
            return Err(Error::Geometry("removed mode is not inside the range".into()));
        }
        let w = p.adjoint() * v / c(v.norm_squared(), 0.0);
        Ok(p - v * w.adjoint())
    }
}

/// Add or remove finitely many modes. Opposite entries cancel in the ledger,
/// and the matrix is rebuilt from the reference by replaying the ledger, so
/// adding and then removing a mode returns the reference exactly.
pub fn finite_rank_modify(p: &DiscreteProjection, changes: &[ModeChange]) -> Result<DiscreteProjection> {
    let mut out = p.clone();
    for ch in changes {
        let v = out.space.mode_vector(ch.mode, &ch.vector)?;
        // validate against the current matrix
        apply_change(&out.matrix, &v, ch.add)?;
        if let Some(pos) = out.ledger.iter().position(|e| e.add != ch.add && same_change(e, ch)) {
            out.ledger.remove(pos);
        } else {
            out.ledger.push(ch.clone());
        }
        let mut m = out.reference.clone();
        for e in &out.ledger {
            m = apply_change(&m, &out.space.mode_vector(e.mode, &e.vector)?, e.add)?;
        }
        out.matrix = m;
    }
    Ok(out)
}

/// Spectral projection onto the invariant subspace of eigenvalues with
/// nonnegative real part. Eigenvalues within the cut tolerance of zero count
/// as zero modes and belong to the range; any other eigenvalue on the cut is
/// an error.
pub fn spectral_projection(op: &CircleOperator) -> Result<DiscreteProjection> {
    for z in linalg::eigenvalues(&op.matrix) {
        if z.re.abs() < SPECTRAL_CUT_TOL && z.norm() > SPECTRAL_CUT_TOL {
            return Err(Error::SpectralCut { eigenvalue: z, tol: SPECTRAL_CUT_TOL });
        }
    }
    let (m, _) = linalg::spectral_projector(&op.matrix, |z| z.re >= 0.0 || z.norm() <= SPECTRAL_CUT_TOL);
    let symbol = ProjectionSymbol::positive_part(&op.symbol)?;
    DiscreteProjection::new(m, symbol, op.space)
}

/// Canonical quantization of a projection symbol: the pointwise multiplier
/// for symbols independent of `xi` (realized on the collocation grid, hence
/// exactly idempotent), and the Fourier multiplier for x-independent symbols,
/// with the zero mode assigned to `xi = +1`.
pub fn quantize_projection(symbol: &ProjectionSymbol, space: FourierSpace) -> Result<DiscreteProjection> {
    let r = space.rank;
    if symbol.rank() != r {
        return Err(Error::Shape("projection symbol rank differs from the Fourier space".into()));
    }
    let matrix = if symbol.is_pullback() {
        let xs = space.grid();
        let mut diag = linalg::zeros(space.dim(), space.dim());
        for (j, &x) in xs.iter().enumerate() {
            diag.view_mut((j * r, j * r), (r, r)).copy_from(&symbol.eval(x, 1.0));
        }
        space.analysis() * diag * space.synthesis()
    } else if symbol.symbol().is_x_independent() {
        let mut m = linalg::zeros(space.dim(), space.dim());
        for (a, n) in space.mode_list().enumerate() {
            let xi = if n >= 0 { 1.0 } else { -1.0 };
            m.view_mut((a * r, a * r), (r, r)).copy_from(&symbol.eval(0.0, xi));
        }
        m
    } else {
        return Err(Error::UnsupportedClass(
            "projection symbols depending on both x and xi have no canonical quantization here".into(),
        ));
    };
    DiscreteProjection::new(matrix, symbol.clone(), space)
}

#[derive(Debug, Clone, Serialize)]
pub struct RelativeIndex {
    pub index: i64,
    pub by_trace: i64,
    pub dim_ker: usize,
    pub dim_coker: usize,
}

fn symbols_agree(a: &ProjectionSymbol, b: &ProjectionSymbol) -> bool {
    a.rank() == b.rank()
        && cosphere_samples(16)
            .iter()
            .all(|&(x, xi)| linalg::max_abs_diff(&a.eval(x, xi), &b.eval(x, xi)) <= 1e-10)
}

/// Index of `P2 : Im P1 -> Im P2`, by the trace of `P1 - P2` and by counting
/// kernel and cokernel of the restricted map; the two must agree.
pub fn relative_index_report(p1: &DiscreteProjection, p2: &DiscreteProjection) -> Result<RelativeIndex> {
    if p1.space != p2.space {
        return Err(Error::Precondition("projections live on different Fourier spaces".into()));
    }
    if !symbols_agree(&p1.symbol, &p2.symbol) {
        return Err(Error::Precondition("projections have different symbols".into()));
    }
    let tr = (p1.matrix.trace() - p2.matrix.trace()).re;
    let by_trace = tr.round() as i64;
    if (tr - by_trace as f64).abs() > 1e-6 {
        return Err(Error::NumericalInconsistency(format!("trace difference {tr} is not an integer")));
    }
    let q1 = p1.range_basis();
    let q2 = p2.range_basis();
    let m = q2.adjoint() * &p2.matrix * &q1;
    let rank = if m.nrows() == 0 || m.ncols() == 0 {
        0
    } else {
        let s = linalg::singular_values(&m);
        s.iter().filter(|&&v| v > 1e-8).count()
    };
    let dim_ker = q1.ncols() - rank;
    let dim_coker = q2.ncols() - rank;
    let index = dim_ker as i64 - dim_coker as i64;
    if index != by_trace {
        return Err(Error::NumericalInconsistency(format!(
            "relative index by trace {by_trace} differs from kernel count {index}"
        )));
    }
    Ok(RelativeIndex { index, by_trace, dim_ker, dim_coker })
}

pub fn relative_index(p1: &DiscreteProjection, p2: &DiscreteProjection) -> Result<i64> {
    relative_index_report(p1, p2).map(|r| r.index)
}

/// `d(P) = ind(P, P_sigma)` relative to the canonical quantization of the
/// symbol, which is calibrated to zero. Admissible only for even symbols.
pub fn d_value(p: &DiscreteProjection) -> Result<DyadicRational> {
    match super::symbol::parity_classify(&p.symbol) {
        super::symbol::Parity::Even => {}
        other => {
            return Err(Error::Admissibility(format!(
                "d is defined on circle boundaries for even projections only, got {other:?}"
            )))
        }
    }
    if !p.symbol.is_pullback() {
        return Err(Error::UnsupportedClass("even symbol without a canonical quantization".into()));
    }
    let reference = quantize_projection(&p.symbol, p.space)?;
    Ok(DyadicRational::integer(relative_index(p, &reference)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[&[&str]], degree: i32) -> MatrixSymbol {
        let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
        MatrixSymbol::parse(&rows, degree).unwrap()
    }

    #[test]
    fn derivative_is_diagonal() {
        let op = discretize_circle_op(&sym(&[&["xi"]], 1), 4).unwrap();
        for (a, n) in op.space.mode_list().enumerate() {
            for b in 0..9 {
                let expect = if a == b { n as f64 } else { 0.0 };
                assert!((op.matrix[(a, b)] - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn multiplication_is_shift() {
        let op = discretize_circle_op(&sym(&[&["xi + e(1)"]], 1), 3).unwrap();
        for a in 0..7 {
            for b in 0..7 {
                let mut expect = if a == b { a as f64 - 3.0 } else { 0.0 };
                if a == b + 1 {
                    expect += 1.0;
                }
                assert!((op.matrix[(a, b)] - c(expect, 0.0)).norm() < 1e-12, "{a} {b}");
            }
        }
        assert!(discretize_circle_op(&sym(&[&["xi^2"]], 2), 3).is_err());
    }

    #[test]
    fn spectral_projection_of_shifted_derivative() {
        let p = spectral_projection(&discretize_circle_op(&sym(&[&["xi"]], 1), 5).unwrap()).unwrap();
        assert_eq!(p.rank(), 6);
        assert!(p.idempotency_residual() < 1e-12);
        // shift by -(k + 1/2), k = 2: modes n >= 3
        let p = spectral_projection(&discretize_circle_op(&sym(&[&["xi - 2.5"]], 1), 5).unwrap()).unwrap();
        assert_eq!(p.rank(), 3);
        let i = p.space().index(3, 0).unwrap();
        assert!((p.matrix()[(i, i)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(p.symbol_defect(2).unwrap() < 1e-12);
    }

    #[test]
    fn relative_index_of_adjacent_halfspaces() {
        let space = FourierSpace::new(4, 1);
        let p0 = spectral_projection(&discretize_circle_op(&sym(&[&["xi"]], 1), 4).unwrap()).unwrap();
        let p1 = spectral_projection(&discretize_circle_op(&sym(&[&["xi - 0.5"]], 1), 4).unwrap()).unwrap();
        assert_eq!(p0.space(), space);
        assert_eq!(relative_index(&p0, &p1).unwrap(), 1);
        assert_eq!(relative_index(&p0, &p0).unwrap(), 0);
    }

    #[test]
    fn add_then_remove_recovers_reference() {
        let space = FourierSpace::new(3, 2);
        let p = quantize_projection(&ProjectionSymbol::new(sym(&[&["1", "0"], &["0", "0"]], 0)).unwrap(), space).unwrap();
        let add = ModeChange::unit(true, 1, 2, 1);
        let q = finite_rank_modify(&p, &[add.clone()]).unwrap();
        assert_eq!(relative_index(&q, &p).unwrap(), 1);
        assert_eq!(d_value(&q).unwrap(), DyadicRational::integer(1));
        let back = finite_rank_modify(&q, &[ModeChange { add: false, ..add }]).unwrap();
        assert_eq!(back.matrix(), p.matrix());
        assert!(back.ledger().is_empty());
        assert!(matches!(finite_rank_modify(&p, &[ModeChange::unit(true, 0, 2, 0)]), Err(Error::Geometry(_))));
    }

    #[test]
    fn d_complement_and_parity() {
        let space = FourierSpace::new(3, 1);
        let p = quantize_projection(&ProjectionSymbol::identity(1), space).unwrap();
        let q = finite_rank_modify(&p, &[ModeChange::unit(false, 2, 1, 0)]).unwrap();
        assert_eq!(d_value(&q).unwrap(), DyadicRational::integer(-1));
        assert_eq!(d_value(&q.complement()).unwrap(), DyadicRational::integer(1));
        let h = spectral_projection(&discretize_circle_op(&sym(&[&["xi"]], 1), 3).unwrap()).unwrap();
        assert!(matches!(d_value(&h), Err(Error::Admissibility(_))));
    }

    #[test]
    fn pullback_quantization_of_x_dependent_projection() {
        let s = ProjectionSymbol::new(sym(&[&["1/2", "e(-1)/2"], &["e(1)/2", "1/2"]], 0)).unwrap();
        let p = quantize_projection(&s, FourierSpace::new(4, 2)).unwrap();
        assert!(p.idempotency_residual() < 1e-12);
        assert_eq!(p.rank(), 9);
    }
}
