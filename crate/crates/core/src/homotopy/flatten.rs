use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};
use crate::symbol::expr::sgn;
use crate::symbol::{BvpProblem, CollarOperator, MatrixSymbol, SymbolFn, SymbolPoint};

use super::{certify_path, CertifyGrid, HomotopyPath, PathCertificate, PathKind, ProblemFamily};

/// Projection onto the `L+` part of the tangential symbol `A = i d_1` at
/// `(x, t, sign xi)`: the eigenvalues with positive real part, along the rest.
pub fn flattening_projection(d1: &MatrixSymbol, x: f64, t: f64, xi: f64) -> CMat {
    let p = SymbolPoint::new(x, t, sgn(xi), c(0.0, 0.0));
    let a = d1.eval_principal(&p) * I;
    linalg::spectral_projector(&a, |z| z.re > 0.0).0
}

fn check_split(d1: &MatrixSymbol, grid: &CertifyGrid) -> Result<()> {
    for &x in &grid.interior.x {
        for &t in &grid.interior.t {
            for xi in [1.0, -1.0] {
                let a = d1.eval_principal(&SymbolPoint::new(x, t, xi, c(0.0, 0.0))) * I;
                for ev in linalg::eigenvalues(&a) {
                    if ev.re.abs() < grid.root_tol {
                        return Err(Error::EllipticityMargin { eigenvalue: ev, tol: grid.root_tol });
                    }
                }
            }
        }
    }
    Ok(())
}

/// `d_1` of `-i d/dt + d_1` along `(1 - s) A + s |xi| (2P - 1)`.
pub(crate) fn flattened_coefficient(d1: &MatrixSymbol, s: f64) -> MatrixSymbol {
    let n = d1.rows();
    let base = d1.clone();
    let f: SymbolFn = Arc::new(move |p: &SymbolPoint| {
        let proj = flattening_projection(&base, p.x, p.t, p.xi);
        let sign = proj * c(2.0, 0.0) - linalg::identity(n);
        // d_1 = -i A
        base.eval(p) * c(1.0 - s, 0.0) + sign * (-I * p.xi.abs() * s)
    });
    MatrixSymbol::custom(n, n, 1, format!("flatten[{s:.4}]"), d1.is_x_independent(), d1.is_t_independent(), f)
}

fn flattened_problem(problem: &BvpProblem, s: f64) -> Result<BvpProblem> {
    if s == 0.0 {
        return Ok(problem.clone());
    }
    let op = &problem.operator;
    let d1 = flattened_coefficient(&op.coefficients()[1], s);
    let operator = CollarOperator::new(vec![op.coefficients()[0].clone(), d1], op.interior().cloned())?;
    BvpProblem::new(problem.name.clone(), problem.manifold.clone(), operator, problem.ends.clone())
}

/// Eigenvalue flattening `(1 - s) mu + s sign(mu)` of the tangential symbol,
/// with the boundary condition unchanged.
pub fn flatten_path(problem: &BvpProblem, steps: usize, grid: &CertifyGrid) -> Result<(HomotopyPath, PathCertificate)> {
    if problem.order() != 1 {
        return Err(Error::Order(format!("flattening needs a first-order operator, got order {}", problem.order())));
    }
    check_split(&problem.operator.coefficients()[1], grid)?;
    let base = problem.clone();
    let family: ProblemFamily = Arc::new(move |s| flattened_problem(&base, s));
    let path = HomotopyPath::sample(PathKind::Flatten, steps, true, family)?;
    let cert = certify_path(&path, grid);
    Ok((path, cert))
}
