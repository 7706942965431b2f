use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};
use crate::symbol::expr::sgn;
use crate::symbol::{
    make_model_operator, BoundaryCondition, BvpProblem, CollarOperator, EndCondition, MatrixSymbol, ModelKind,
    SpectralCondition, SymbolFn, SymbolPoint,
};

use super::collar::{collar_pull, Cutoff};
use super::flatten::flattened_coefficient;
use super::{certify_path, CertifyGrid, HomotopyPath, PathCertificate, PathKind, ProblemFamily};

const FRAME_TOL: f64 = 1e-10;
const FLAT_TOL: f64 = 1e-10;

fn require_cylinder(problem: &BvpProblem) -> Result<()> {
    if problem.manifold.ends() != 2 || !problem.manifold.has_circle_boundary() {
        return Err(Error::Capability("rotation is implemented on cylinders and annuli".into()));
    }
    if problem.order() != 1 {
        return Err(Error::Order(format!("rotation needs a first-order operator, got order {}", problem.order())));
    }
    Ok(())
}

/// `(D + D_+, [B | 0])` on `E + G`, with `G` the target of the near
/// condition. The far end gains the trace on `G`.
pub fn stabilize(problem: &BvpProblem) -> Result<BvpProblem> {
    require_cylinder(problem)?;
    let g = problem.ends[0].target_rank();
    if g == 0 {
        return Ok(problem.clone());
    }
    let extra = make_model_operator(ModelKind::Dplus, (g, 0), &problem.manifold)?.operator;
    let operator = problem.operator.direct_sum(&extra)?;
    let b = problem.ends[0].condition.jets()[0].hstack(&MatrixSymbol::zero(g, g, 0))?;
    let near = EndCondition {
        condition: BoundaryCondition::new(vec![b.with_degree(0)])?,
        projection: problem.ends[0].projection.clone(),
    };
    let far = problem.ends[1].direct_sum(&EndCondition::classical(BoundaryCondition::trace(1, g)))?;
    BvpProblem::new(format!("{}.stable", problem.name), problem.manifold.clone(), operator, vec![near, far])
}

/// Coefficient `d_1` read at `t = 0` and `t = (1 - s) t`.
fn frozen_coefficient(d1: &MatrixSymbol, s: f64) -> MatrixSymbol {
    let base = d1.clone();
    let f: SymbolFn = Arc::new(move |p: &SymbolPoint| base.eval(&SymbolPoint { t: (1.0 - s) * p.t, ..*p }));
    MatrixSymbol::custom(d1.rows(), d1.cols(), 1, format!("freeze[{s:.4}]"), d1.is_x_independent(), s == 1.0, f)
}

fn with_d1(problem: &BvpProblem, d1: MatrixSymbol) -> Result<BvpProblem> {
    let op = &problem.operator;
    let operator = CollarOperator::new(vec![op.coefficients()[0].clone(), d1], op.interior().cloned())?;
    BvpProblem::new(problem.name.clone(), problem.manifold.clone(), operator, problem.ends.clone())
}

/// Boundary frames of one sample: `L+` and the target.
struct Frames {
    /// Oblique projection onto `L+` along the rest of the spectrum.
    oblique: CMat,
    q: CMat,
    qt: CMat,
    target: CMat,
    m: CMat,
    mu: CMat,
}

/// First-order flat problem with `t`-independent coefficients, read at the
/// near boundary.
#[derive(Clone)]
struct RotationData {
    d1: MatrixSymbol,
    b: MatrixSymbol,
    target: Option<SpectralCondition>,
    n: usize,
    g: usize,
    x_independent: bool,
}

impl RotationData {
    fn new(flat: &BvpProblem, grid: &CertifyGrid) -> Result<Self> {
        require_cylinder(flat)?;
        let d1 = flat.operator.coefficients()[1].clone();
        let end = &flat.ends[0];
        let b = end.condition.jets()[0].clone();
        let n = flat.rank();
        let g = end.target_rank();
        let target = end.projection.clone();
        let x_independent = d1.is_x_independent()
            && b.is_x_independent()
            && target.as_ref().is_none_or(|t| t.symbol.symbol().is_x_independent());
        let data = Self { d1, b, target, n, g, x_independent };
        let mut worst = f64::INFINITY;
        for &x in &grid.boundary.x {
            for &xi in &grid.boundary.xi {
                let f = data.frames(x, xi)?;
                let a = tangential(&data.d1, x, 0.0, xi);
                if linalg::norm2(&(&a * &a - linalg::identity(n))) > FLAT_TOL {
                    return Err(Error::Precondition("tangential symbol is not flat".into()));
                }
                worst = worst.min(if f.m.nrows() == f.m.ncols() { linalg::min_singular_value(&f.m) } else { 0.0 });
            }
        }
        if worst <= grid.margin_tol {
            return Err(Error::CannotRotate { min_singular: worst });
        }
        Ok(data)
    }

    fn frames(&self, x: f64, xi: f64) -> Result<Frames> {
        let xi = sgn(xi);
        let a = tangential(&self.d1, x, 0.0, xi);
        let (oblique, _) = linalg::spectral_projector(&a, |z| z.re > 0.0);
        let q = linalg::canonical_frame(&linalg::orth(&oblique, FRAME_TOL));
        let target = match &self.target {
            Some(t) => t.symbol.eval(x, xi),
            None => linalg::identity(self.g),
        };
        let qt = linalg::canonical_frame(&linalg::orth(&target, FRAME_TOL));
        let b = self.b.eval(&SymbolPoint::boundary(x, xi));
        let m = qt.adjoint() * &target * b * &q;
        if m.nrows() != m.ncols() {
            return Err(Error::CannotRotate { min_singular: 0.0 });
        }
        let mu = if m.nrows() == 0 { m.clone() } else { linalg::unitary_polar(&m) };
        Ok(Frames { oblique, q, qt, target, m, mu })
    }

    fn frames_or_nan(&self, x: f64, xi: f64) -> Frames {
        self.frames(x, xi).unwrap_or_else(|_| {
            let nan = |r, c_| CMat::from_element(r, c_, c(f64::NAN, 0.0));
            Frames {
                oblique: nan(self.n, self.n),
                q: nan(self.n, 0),
                qt: nan(self.g, 0),
                target: nan(self.g, self.g),
                m: nan(0, 0),
                mu: nan(0, 0),
            }
        })
    }

    /// `d_1 = -i |xi| (2P - 1)` on `E + G` for the projection `P(x, sign xi)`.
    fn operator<F>(&self, label: String, projection: F) -> Result<CollarOperator>
    where
        F: Fn(&Self, f64, f64) -> CMat + Send + Sync + 'static,
    {
        let size = self.n + self.g;
        let data = self.clone();
        let f: SymbolFn = Arc::new(move |p: &SymbolPoint| {
            let proj = projection(&data, p.x, p.xi);
            (proj * c(2.0, 0.0) - linalg::identity(size)) * (-I * p.xi.abs())
        });
        let d1 = MatrixSymbol::custom(size, size, 1, label, self.x_independent, true, f);
        CollarOperator::new(vec![MatrixSymbol::identity(size), d1], None)
    }

    fn condition<F>(&self, label: String, cond: F) -> Result<BoundaryCondition>
    where
        F: Fn(&Self, f64, f64) -> CMat + Send + Sync + 'static,
    {
        let data = self.clone();
        let f: SymbolFn = Arc::new(move |p: &SymbolPoint| cond(&data, p.x, p.xi));
        BoundaryCondition::new(vec![MatrixSymbol::custom(self.g, self.n + self.g, 0, label, self.x_independent, true, f)])
    }

    fn problem(&self, stable: &BvpProblem, operator: CollarOperator, condition: BoundaryCondition) -> Result<BvpProblem> {
        let near = EndCondition { condition, projection: self.target.clone() };
        BvpProblem::new(stable.name.clone(), stable.manifold.clone(), operator, vec![near, stable.ends[1].clone()])
    }
}

fn tangential(d1: &MatrixSymbol, x: f64, t: f64, xi: f64) -> CMat {
    d1.eval_principal(&SymbolPoint::new(x, t, sgn(xi), c(0.0, 0.0))) * I
}

fn pad(a: &CMat, g: usize) -> CMat {
    linalg::block_diag(a, &linalg::zeros(g, g))
}

fn unitarized(data: &RotationData, stable: &BvpProblem, s: f64) -> Result<BvpProblem> {
    if s == 0.0 {
        return Ok(stable.clone());
    }
    let operator = data.operator(format!("unitarize[{s:.4}]"), move |d, x, xi| {
        let f = d.frames_or_nan(x, xi);
        pad(&(f.oblique * c(1.0 - s, 0.0) + &f.q * f.q.adjoint() * c(s, 0.0)), d.g)
    })?;
    let condition = data.condition(format!("unitarize-b[{s:.4}]"), move |d, x, xi| {
        let f = d.frames_or_nan(x, xi);
        let b = d.b.eval(&SymbolPoint::boundary(x, sgn(xi)));
        let bu = &f.qt * &f.mu * f.q.adjoint();
        linalg::hstack(&[&(b * c(1.0 - s, 0.0) + bu * c(s, 0.0)), &linalg::zeros(d.g, d.g)])
    })?;
    data.problem(stable, operator, condition)
}

fn angle(s: f64) -> (f64, f64) {
    if s == 1.0 {
        (0.0, 1.0)
    } else {
        let (sn, cs) = (s * FRAC_PI_2).sin_cos();
        (cs, sn)
    }
}

fn rotated(data: &RotationData, stable: &BvpProblem, s: f64) -> Result<BvpProblem> {
    if s == 0.0 {
        return unitarized(data, stable, 1.0);
    }
    let (cs, sn) = angle(s);
    let operator = data.operator(format!("rotate[{s:.4}]"), move |d, x, xi| {
        let f = d.frames_or_nan(x, xi);
        let frame = linalg::vstack(&[&(&f.q * c(cs, 0.0)), &(&f.qt * &f.mu * c(sn, 0.0))]);
        &frame * frame.adjoint()
    })?;
    let condition = data.condition(format!("rotate-b[{s:.4}]"), move |d, x, xi| {
        let f = d.frames_or_nan(x, xi);
        let bu = &f.qt * &f.mu * f.q.adjoint();
        linalg::hstack(&[&(bu * c(cs, 0.0)), &(&f.target * c(sn, 0.0))])
    })?;
    data.problem(stable, operator, condition)
}

fn require_frozen(problem: &BvpProblem) -> Result<()> {
    if !problem.operator.coefficients()[1].is_t_independent() {
        return Err(Error::Precondition("rotation needs coefficients that do not depend on t".into()));
    }
    Ok(())
}

fn unitarize_family(flat: &BvpProblem, grid: &CertifyGrid) -> Result<(RotationData, BvpProblem)> {
    require_frozen(flat)?;
    let data = RotationData::new(flat, grid)?;
    let stable = stabilize(flat)?;
    Ok((data, stable))
}

/// Replaces `P_L` by the orthogonal projection onto `L+` and `B` by its
/// unitary part on `L+`, on the stabilized problem. The frames stay fixed.
pub fn unitarize_path(flat: &BvpProblem, steps: usize, grid: &CertifyGrid) -> Result<(HomotopyPath, PathCertificate)> {
    let (data, stable) = unitarize_family(flat, grid)?;
    let family: ProblemFamily = Arc::new(move |s| unitarized(&data, &stable, s));
    let path = HomotopyPath::sample(PathKind::Rotate, steps, true, family)?;
    let cert = certify_path(&path, grid);
    Ok((path, cert))
}

fn rotation_parts(flat: &BvpProblem, steps: usize, grid: &CertifyGrid) -> Result<[HomotopyPath; 2]> {
    let (data, stable) = unitarize_family(flat, grid)?;
    let (d1, s1) = (data.clone(), stable.clone());
    let first: ProblemFamily = Arc::new(move |s| unitarized(&d1, &s1, s));
    let second: ProblemFamily = Arc::new(move |s| rotated(&data, &stable, s));
    Ok([
        HomotopyPath::sample(PathKind::Rotate, steps, true, first)?,
        HomotopyPath::sample(PathKind::Rotate, steps, false, second)?,
    ])
}

/// Unitarization followed by the rotation of `L+` onto the target of the
/// boundary condition, ending in `[0 | sigma(P)]` on `E + G`.
pub fn rotate_path(flat: &BvpProblem, steps: usize, grid: &CertifyGrid) -> Result<(HomotopyPath, PathCertificate)> {
    let path = HomotopyPath::chain(&rotation_parts(flat, steps, grid)?, PathKind::Rotate)?;
    let cert = certify_path(&path, grid);
    Ok((path, cert))
}

/// Largest `|P^2 - P|` over the boundary grid, with `P = (A/|xi| + 1)/2`
/// built from the tangential symbol at `t = 0`.
pub fn projection_defect(problem: &BvpProblem, grid: &CertifyGrid) -> Result<f64> {
    if problem.order() != 1 {
        return Err(Error::Order("projection defect needs a first-order operator".into()));
    }
    let d1 = &problem.operator.coefficients()[1];
    let n = problem.rank();
    let mut worst: f64 = 0.0;
    for &x in &grid.boundary.x {
        for &xi in &grid.boundary.xi {
            let p = (tangential(d1, x, 0.0, xi) + linalg::identity(n)) * c(0.5, 0.0);
            worst = worst.max(linalg::norm2(&(&p * &p - &p)));
        }
    }
    Ok(worst)
}

/// Spectral input with `B = 1` and a flat, `t`-independent operator.
pub fn is_model_form(problem: &BvpProblem, grid: &CertifyGrid) -> bool {
    let end = &problem.ends[0];
    if end.projection.is_none() || problem.order() != 1 || end.target_rank() != problem.rank() {
        return false;
    }
    if !problem.operator.coefficients()[1].is_t_independent() {
        return false;
    }
    let n = problem.rank();
    grid.boundary.x.iter().all(|&x| {
        grid.boundary.xi.iter().all(|&xi| {
            let b = end.condition.stacked_at(x, sgn(xi));
            let a = tangential(&problem.operator.coefficients()[1], x, 0.0, xi);
            linalg::is_identity(&b, FLAT_TOL) && linalg::norm2(&(&a * &a - linalg::identity(n))) < FLAT_TOL
        })
    })
}

#[derive(Debug, Clone)]
pub struct SpectralReduction {
    /// Spectral problem on `E + G`, equal to the stabilized input away from
    /// the near collar.
    pub problem: BvpProblem,
    pub path: HomotopyPath,
    pub certificate: PathCertificate,
    pub constant: bool,
}

/// Flattening, freezing of the collar coefficients, unitarization and
/// rotation, all on the stabilized problem, then pulled into the near
/// collar so that the far end is untouched.
pub fn reduce_to_spectral(problem: &BvpProblem, steps: usize, grid: &CertifyGrid) -> Result<SpectralReduction> {
    require_cylinder(problem)?;
    if is_model_form(problem, grid) {
        let path = HomotopyPath::constant(PathKind::ToSpectral, problem.clone(), steps);
        let certificate = certify_path(&path, grid);
        return Ok(SpectralReduction { problem: problem.clone(), path, certificate, constant: true });
    }
    let d1 = problem.operator.coefficients()[1].clone();
    let (base, d1_flat) = (problem.clone(), d1.clone());
    let flatten: ProblemFamily =
        Arc::new(move |s| stabilize(&with_d1(&base, if s == 0.0 { d1_flat.clone() } else { flattened_coefficient(&d1_flat, s) })?));
    let flat_d1 = flattened_coefficient(&d1, 1.0);
    let flat = with_d1(problem, flat_d1.clone())?;
    let freeze: ProblemFamily = Arc::new(move |s| {
        stabilize(&if s == 0.0 { flat.clone() } else { with_d1(&flat, frozen_coefficient(&flat_d1, s))? })
    });
    let frozen = with_d1(problem, frozen_coefficient(&flattened_coefficient(&d1, 1.0), 1.0))?;
    let [unitarize, rotate] = rotation_parts(&frozen, steps, grid)?;
    let parts = [
        HomotopyPath::sample(PathKind::Flatten, steps, true, flatten)?,
        HomotopyPath::sample(PathKind::Collar, steps, true, freeze)?,
        unitarize,
        rotate,
    ];
    let path = HomotopyPath::chain(&parts, PathKind::ToSpectral)?;
    let certificate = certify_path(&path, grid);
    let pulled = collar_pull(&stabilize(problem)?, &path, &Cutoff::standard(), 1.0)?;
    let problem = pulled.with_name(format!("{}.spectral", problem.name));
    Ok(SpectralReduction { problem, path, certificate, constant: false })
}
