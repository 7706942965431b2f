use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, C64};
use crate::spectral::ProjectionSymbol;

use super::collar::{BoundaryCondition, CollarOperator};
use super::expr::{Expr, SymbolPoint};
use super::matrix::MatrixSymbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Interval,
    Cylinder,
    Disk,
    Annulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryComponent {
    PointPair,
    Circle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelManifold {
    kind: ManifoldKind,
    boundary_components: Vec<BoundaryComponent>,
}

impl ModelManifold {
    pub fn new(kind: ManifoldKind) -> Self {
        let boundary_components = match kind {
            ManifoldKind::Interval => vec![BoundaryComponent::PointPair],
            ManifoldKind::Cylinder | ManifoldKind::Annulus => vec![BoundaryComponent::Circle; 2],
            ManifoldKind::Disk => vec![BoundaryComponent::Circle],
        };
        Self { kind, boundary_components }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn boundary_components(&self) -> &[BoundaryComponent] {
        &self.boundary_components
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            ManifoldKind::Interval => 1,
            _ => 2,
        }
    }

    /// Number of collar ends. Each end carries its own inward coordinate: the
    /// near end is `t = 0`, the far end (if any) is `t = 1` seen as `1 - t`.
    pub fn ends(&self) -> usize {
        match self.kind {
            ManifoldKind::Disk => 1,
            _ => 2,
        }
    }

    pub fn has_circle_boundary(&self) -> bool {
        self.kind != ManifoldKind::Interval
    }
}

/// Added or removed Fourier mode `e^{i n x} v` of a discrete projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeChange {
    pub add: bool,
    pub mode: i64,
    pub vector: Vec<C64>,
}

impl ModeChange {
    pub fn add(mode: i64, vector: Vec<C64>) -> Self {
        Self { add: true, mode, vector }
    }

    pub fn remove(mode: i64, vector: Vec<C64>) -> Self {
        Self { add: false, mode, vector }
    }

    pub fn unit(add: bool, mode: i64, rank: usize, component: usize) -> Self {
        let mut vector = vec![C64::new(0.0, 0.0); rank];
        vector[component] = C64::new(1.0, 0.0);
        Self { add, mode, vector }
    }
}

/// How a projection symbol is turned into an operator on the boundary.
#[derive(Debug, Clone)]
pub enum ProjectionKind {
    /// Quantize the declared symbol directly.
    Symbol,
    /// Spectral projection of the tangential operator with the given symbol.
    SpectralOf(MatrixSymbol),
    /// Block-diagonal sum of two realizations of the given ranks.
    Sum(Box<ProjectionKind>, usize, Box<ProjectionKind>, usize),
}

#[derive(Debug, Clone)]
pub struct SpectralCondition {
    pub symbol: ProjectionSymbol,
    pub kind: ProjectionKind,
    pub modifications: Vec<ModeChange>,
}

impl SpectralCondition {
    pub fn from_symbol(symbol: ProjectionSymbol) -> Self {
        Self { symbol, kind: ProjectionKind::Symbol, modifications: Vec::new() }
    }

    /// Projection onto the nonnegative spectrum of the tangential operator `a`.
    pub fn spectral(a: &MatrixSymbol) -> Result<Self> {
        Ok(Self {
            symbol: ProjectionSymbol::positive_part(a)?,
            kind: ProjectionKind::SpectralOf(a.clone()),
            modifications: Vec::new(),
        })
    }

    pub fn with_modifications(mut self, mods: Vec<ModeChange>) -> Self {
        self.modifications = mods;
        self
    }

    pub fn rank(&self) -> usize {
        self.symbol.rank()
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let symbol = self.symbol.direct_sum(&other.symbol)?;
        let (ra, rb) = (self.rank(), other.rank());
        let kind = match (&self.kind, &other.kind) {
            (ProjectionKind::Symbol, ProjectionKind::Symbol) => ProjectionKind::Symbol,
            (a, b) => ProjectionKind::Sum(Box::new(a.clone()), ra, Box::new(b.clone()), rb),
        };
        let mut modifications = Vec::new();
        for m in &self.modifications {
            let mut v = m.vector.clone();
            v.resize(ra + rb, C64::new(0.0, 0.0));
            modifications.push(ModeChange { vector: v, ..m.clone() });
        }
        for m in &other.modifications {
            let mut v = vec![C64::new(0.0, 0.0); ra];
            v.extend_from_slice(&m.vector);
            modifications.push(ModeChange { vector: v, ..m.clone() });
        }
        Ok(Self { symbol, kind, modifications })
    }
}

/// Boundary data at one collar end: `B j u`, optionally followed by `P`.
#[derive(Debug, Clone)]
pub struct EndCondition {
    pub condition: BoundaryCondition,
    pub projection: Option<SpectralCondition>,
}

impl EndCondition {
    pub fn classical(condition: BoundaryCondition) -> Self {
        Self { condition, projection: None }
    }

    pub fn spectral(condition: BoundaryCondition, projection: SpectralCondition) -> Self {
        Self { condition, projection: Some(projection) }
    }

    pub fn empty(order: usize, rank: usize) -> Self {
        Self::classical(BoundaryCondition::empty(order, rank))
    }

    pub fn is_spectral(&self) -> bool {
        self.projection.is_some()
    }

    pub fn target_rank(&self) -> usize {
        self.condition.target_rank()
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let condition = self.condition.direct_sum(&other.condition)?;
        let projection = match (&self.projection, &other.projection) {
            (None, None) => None,
            (a, b) => {
                let lift = |p: &Option<SpectralCondition>, g: usize| {
                    p.clone().unwrap_or_else(|| SpectralCondition::from_symbol(ProjectionSymbol::identity(g)))
                };
                Some(lift(a, self.target_rank()).direct_sum(&lift(b, other.target_rank()))?)
            }
        };
        Ok(Self { condition, projection })
    }
}

#[derive(Debug, Clone)]
pub struct BvpProblem {
    pub name: String,
    pub manifold: ModelManifold,
    pub operator: CollarOperator,
    pub ends: Vec<EndCondition>,
}

impl BvpProblem {
    pub fn new(name: impl Into<String>, manifold: ModelManifold, operator: CollarOperator, ends: Vec<EndCondition>) -> Result<Self> {
        if ends.len() != manifold.ends() {
            return Err(Error::Shape(format!("{:?} needs {} end conditions, got {}", manifold.kind(), manifold.ends(), ends.len())));
        }
        for (k, e) in ends.iter().enumerate() {
            if e.condition.order() != operator.order() {
                return Err(Error::Shape(format!(
                    "end {k}: condition has {} jet coefficients, operator order is {}",
                    e.condition.order(),
                    operator.order()
                )));
            }
            if e.condition.source_rank() != operator.rank() {
                return Err(Error::Shape(format!("end {k}: condition acts on rank {}, operator rank {}", e.condition.source_rank(), operator.rank())));
            }
            if let Some(p) = &e.projection {
                if p.rank() != e.condition.target_rank() {
                    return Err(Error::Shape(format!(
                        "end {k}: projection rank {} differs from condition target rank {}",
                        p.rank(),
                        e.condition.target_rank()
                    )));
                }
            }
        }
        Ok(Self { name: name.into(), manifold, operator, ends })
    }

    pub fn order(&self) -> usize {
        self.operator.order()
    }

    pub fn rank(&self) -> usize {
        self.operator.rank()
    }

    pub fn is_spectral(&self) -> bool {
        self.ends.iter().any(|e| e.is_spectral())
    }

    /// Operator in the inward collar coordinate of the given end.
    pub fn operator_at_end(&self, end: usize) -> CollarOperator {
        if end == 0 {
            self.operator.clone()
        } else {
            self.operator.reflect()
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

pub fn direct_sum(a: &BvpProblem, b: &BvpProblem) -> Result<BvpProblem> {
    if a.manifold != b.manifold {
        return Err(Error::IncompatibleSum("problems live on different manifolds".into()));
    }
    if a.order() != b.order() {
        return Err(Error::IncompatibleSum(format!("orders {} and {}", a.order(), b.order())));
    }
    if b.rank() == 0 {
        return Ok(a.clone());
    }
    if a.rank() == 0 {
        return Ok(b.clone());
    }
    let operator = a.operator.direct_sum(&b.operator)?;
    let ends = a.ends.iter().zip(&b.ends).map(|(x, y)| x.direct_sum(y)).collect::<Result<_>>()?;
    BvpProblem::new(format!("{}+{}", a.name, b.name), a.manifold.clone(), operator, ends)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Dplus,
    Dminus,
    Dpm,
}

/// Projection `[0 | I]` onto the `E_-` block, or `[I | 0]` onto `E_+`.
fn block_selector(p: usize, q: usize, minus: bool) -> BoundaryCondition {
    let n = p + q;
    let (rows, off) = if minus { (q, p) } else { (p, 0) };
    let mut m = linalg::zeros(rows, n);
    for i in 0..rows {
        m[(i, off + i)] = c(1.0, 0.0);
    }
    BoundaryCondition::from_matrix(1, &m)
}

/// First-order model operator `(lambda + i|xi|) on E_+` plus
/// `(-lambda + i|xi|) on E_-` with the condition `u_-|_X = g` at the near end.
///
/// Far ends carry the mirrored condition `u_+| = g`, since there the roles of
/// the two blocks are exchanged.
pub fn make_model_operator(kind: ModelKind, ranks: (usize, usize), manifold: &ModelManifold) -> Result<BvpProblem> {
    let (p, q) = ranks;
    if p + q == 0 {
        return Err(Error::Precondition("model operator needs a nonzero bundle".into()));
    }
    match kind {
        ModelKind::Dplus if q != 0 => return Err(Error::Precondition("D_+ has E_- = 0".into())),
        ModelKind::Dminus if p != 0 => return Err(Error::Precondition("D_- has E_+ = 0".into())),
        _ => {}
    }
    let n = p + q;
    let ix = Expr::Const(linalg::I).mul(Expr::AbsXi);
    let mut d1 = Vec::with_capacity(n * n);
    let mut raw = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d1.push(Expr::zero());
                raw.push(Expr::zero());
            } else if i < p {
                d1.push(ix.clone());
                raw.push(Expr::Lambda.add(ix.clone()));
            } else {
                d1.push(ix.clone().neg());
                raw.push(Expr::Lambda.neg().add(ix.clone()));
            }
        }
    }
    let chi = Expr::Cutoff { a: 1.0 / 3.0, b: 2.0 / 3.0, reflected: false };
    let one_minus = Expr::one().add(chi.clone().neg());
    let irho = Expr::Const(linalg::I).mul(Expr::Rho);
    let interior: Vec<Expr> = raw
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let blend = chi.clone().mul(e.clone());
            if k / n == k % n {
                blend.add(one_minus.clone().mul(irho.clone()))
            } else {
                blend
            }
        })
        .collect();
    let operator = CollarOperator::new(
        vec![MatrixSymbol::identity(n), MatrixSymbol::from_exprs(n, n, 1, d1)?],
        Some(MatrixSymbol::from_exprs(n, n, 1, interior)?),
    )?;
    let mut ends = vec![EndCondition::classical(block_selector(p, q, true))];
    if manifold.ends() == 2 {
        ends.push(EndCondition::classical(block_selector(p, q, false)));
    }
    let name = match kind {
        ModelKind::Dplus => "Dplus",
        ModelKind::Dminus => "Dminus",
        ModelKind::Dpm => "Dpm",
    };
    BvpProblem::new(name, manifold.clone(), operator, ends)
}

/// Sample grid for interior ellipticity: `x` samples, collar times and
/// directions `(xi, lambda) = (cos a, sin a)` on the unit circle.
#[derive(Debug, Clone, Serialize)]
pub struct InteriorGrid {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub directions: usize,
}

impl InteriorGrid {
    pub fn uniform(nx: usize, nt: usize, directions: usize) -> Self {
        Self {
            x: (0..nx).map(|j| 2.0 * PI * j as f64 / nx as f64).collect(),
            t: (0..nt).map(|j| j as f64 / (nt.max(2) - 1) as f64).collect(),
            directions,
        }
    }
}

impl Default for InteriorGrid {
    fn default() -> Self {
        Self::uniform(16, 13, 256)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InteriorEllipticityReport {
    pub min_abs_det: f64,
    pub worst_point: (f64, f64, f64, f64),
    pub samples: usize,
    pub tol: f64,
    pub elliptic: bool,
}

pub const DEFAULT_INTERIOR_TOL: f64 = 1e-8;

/// Minimum of `|det sigma|` over the grid on the unit cosphere, for the collar
/// symbol and, when present, the interior blend.
pub fn check_interior_ellipticity(op: &CollarOperator, grid: &InteriorGrid, tol: f64) -> Result<InteriorEllipticityReport> {
    let m = op.order() as i32;
    let mut best = (f64::INFINITY, (0.0, 0.0, 0.0, 0.0));
    let mut samples = 0;
    let mut visit = |v: f64, pt: (f64, f64, f64, f64)| {
        samples += 1;
        if v < best.0 {
            best = (v, pt);
        }
    };
    let interior = op.interior();
    if let Some(int) = interior {
        if int.rows() != int.cols() {
            return Err(Error::Shape("interior symbol is not square".into()));
        }
    }
    for &x in &grid.x {
        for &t in &grid.t {
            for k in 0..grid.directions {
                let a = 2.0 * PI * k as f64 / grid.directions as f64;
                let (xi, lam) = (a.cos(), a.sin());
                let p = SymbolPoint::new(x, t, xi, c(lam, 0.0));
                visit(linalg::determinant(&op.principal_symbol_at(&p)).norm(), (x, t, xi, lam));
                if let Some(int) = interior {
                    let v = if m >= 0 { int.eval_principal(&p) } else { int.eval(&p) };
                    visit(linalg::determinant(&v).norm(), (x, t, xi, lam));
                }
            }
        }
    }
    Ok(InteriorEllipticityReport { min_abs_det: best.0, worst_point: best.1, samples, tol, elliptic: best.0 > tol })
}
