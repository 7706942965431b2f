use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::boundary::{csv_err, frames_at};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64, I};
use crate::spectral::doubling::spectral_closing;
use crate::symbol::expr::sgn;
use crate::symbol::{
    direct_sum, BoundaryCondition, BvpProblem, CollarOperator, EndCondition, MatrixSymbol, SymbolFn, SymbolPoint,
};

use super::collar::{collar_pull, Cutoff};
use super::{certify_path, CertifyGrid, HomotopyPath, PathCertificate, PathKind, ProblemFamily};

const TRIVIAL_TOL: f64 = 1e-10;

/// Descending coefficients of `(lambda - i)^k (lambda + i)^(n - k)`.
fn split_power(n: usize, k: usize) -> Vec<C64> {
    let mut p = vec![c(1.0, 0.0)];
    for j in 0..n {
        let root = if j < k { -I } else { I };
        let mut next = vec![c(0.0, 0.0); p.len() + 1];
        for (a, &v) in p.iter().enumerate() {
            next[a] += v;
            next[a + 1] += v * root;
        }
        p = next;
    }
    p
}

/// Coefficients of `sum_k X_k (lambda - i)^k (lambda + i)^(n - k)` for the
/// given descending matrix coefficients of a polynomial of degree `n`.
fn decompose(coeffs: &[CMat]) -> Result<Vec<CMat>> {
    let n = coeffs.len() - 1;
    let mut v = CMat::zeros(n + 1, n + 1);
    for k in 0..=n {
        for (p, z) in split_power(n, k).into_iter().enumerate() {
            v[(p, k)] = z;
        }
    }
    let w = linalg::inverse(&v)?;
    let shape = coeffs[0].shape();
    Ok((0..=n)
        .map(|k| (0..=n).fold(CMat::zeros(shape.0, shape.1), |acc, p| acc + &coeffs[p] * w[(k, p)]))
        .collect())
}

/// Principal decomposition `D = sum_k D_k D_-^k D_+^(m-k)` at `(x, t, sign xi)`.
fn operator_parts(op: &CollarOperator, x: f64, t: f64, xi: f64) -> Result<Vec<CMat>> {
    decompose(&op.principal_coefficients_at(x, t, sgn(xi)))
}

/// Boundary parts `b_k` with `B j = sum_k b_k D_-^k D_+^(m-1-k)` at `t = 0`.
fn boundary_parts(b: &BoundaryCondition, x: f64, xi: f64) -> Result<Vec<CMat>> {
    let stacked = b.stacked_at(x, sgn(xi));
    let m = b.jets().len();
    let width = stacked.ncols() / m;
    // jets are ascending in lambda
    let coeffs: Vec<CMat> = (0..m).rev().map(|j| stacked.columns(j * width, width).into_owned()).collect();
    decompose(&coeffs)
}

/// Descending block coefficients of the unnormalized operator at `tau`.
fn homotopy_polynomial(parts: &[CMat], full: &[CMat], tau: f64) -> Vec<CMat> {
    let m = parts.len() - 1;
    let n = parts[0].nrows();
    let q0 = split_power(m, 0);
    let q1 = split_power(m, 1);
    let tm = tau.powi(m as i32);
    let mut out = vec![CMat::zeros(m * n, m * n); m + 1];
    for (p, blk) in out.iter_mut().enumerate() {
        let mut set = |i: usize, j: usize, v: CMat| blk.view_mut((i * n, j * n), (n, n)).copy_from(&v);
        set(0, 0, &full[p] * c(1.0 - tm, 0.0) + &parts[0] * (q0[p] * tm));
        for j in 1..m {
            let mut v = &parts[j] * (q0[p] * tau.powi((m - j) as i32));
            if j == m - 1 {
                v += &parts[m] * (q1[p] * tau);
            }
            set(0, j, v);
        }
        for i in 1..m {
            set(i, i - 1, linalg::identity(n) * (-q1[p] * tau));
            set(i, i, linalg::identity(n) * q0[p]);
        }
    }
    out
}

fn normalized(poly: Vec<CMat>) -> Result<Vec<CMat>> {
    let inv = linalg::inverse(&poly[0])
        .map_err(|_| Error::NumericalInconsistency("leading coefficient of the reduced operator is singular".into()))?;
    Ok(poly.iter().map(|p| &inv * p).collect())
}

/// `D_tau` at the point, with the homogeneity in `|xi|` restored.
fn reduced_coefficients(op: &CollarOperator, p: &SymbolPoint, tau: f64) -> Result<Vec<CMat>> {
    let parts = operator_parts(op, p.x, p.t, p.xi)?;
    let full = op.principal_coefficients_at(p.x, p.t, sgn(p.xi));
    let mut coeffs = normalized(homotopy_polynomial(&parts, &full, tau))?;
    for (k, m) in coeffs.iter_mut().enumerate() {
        *m *= c(p.xi.abs().powi(k as i32), 0.0);
    }
    Ok(coeffs)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `D_+^m` on a bundle of rank `n`: no condition at the near end, all jets at
/// the far end.
fn dplus_power(problem: &BvpProblem, m: usize, n: usize) -> Result<BvpProblem> {
    let mut coefficients = vec![MatrixSymbol::identity(n)];
    for k in 1..=m {
        let z = I.powi(k as i32) * binomial(m, k);
        let f: SymbolFn = Arc::new(move |p: &SymbolPoint| linalg::identity(n) * (z * p.xi.abs().powi(k as i32)));
        coefficients.push(MatrixSymbol::custom(n, n, k as i32, format!("Dplus^{m}[{k}]"), true, true, f));
    }
    let operator = CollarOperator::new(coefficients, None)?;
    let jets = (0..m)
        .map(|j| {
            let mut block = linalg::zeros(m * n, n);
            block.view_mut((j * n, 0), (n, n)).copy_from(&linalg::identity(n));
            MatrixSymbol::constant(&block)
        })
        .collect();
    let ends = vec![EndCondition::empty(m, n), EndCondition::classical(BoundaryCondition::new(jets)?)];
    BvpProblem::new(format!("Dplus^{m}"), problem.manifold.clone(), operator, ends)
}

/// `(D, B)` plus `m - 1` copies of `D_+^m`.
fn stabilized(problem: &BvpProblem) -> Result<BvpProblem> {
    let (m, n) = (problem.order(), problem.rank());
    let extra = dplus_power(problem, m, n)?;
    let mut out = problem.clone();
    for _ in 1..m {
        out = direct_sum(&out, &extra)?;
    }
    Ok(out.with_name(format!("{}.stable", problem.name)))
}

fn reduced_problem(problem: &BvpProblem, stable: &BvpProblem, tau: f64) -> Result<BvpProblem> {
    if tau == 0.0 {
        return Ok(stable.clone());
    }
    let (m, n) = (problem.order(), problem.rank());
    let size = m * n;
    let mut coefficients = vec![MatrixSymbol::identity(size)];
    for k in 1..=m {
        let op = problem.operator.clone();
        let f: SymbolFn = Arc::new(move |p: &SymbolPoint| {
            reduced_coefficients(&op, p, tau)
                .map(|cs| cs[k].clone())
                .unwrap_or_else(|_| CMat::from_element(size, size, c(f64::NAN, 0.0)))
        });
        let (xi, ti) = (problem.operator.is_x_independent(), problem.operator.is_t_independent());
        coefficients.push(MatrixSymbol::custom(size, size, k as i32, format!("reduce[{k},{tau:.4}]"), xi, ti, f));
    }
    let operator = CollarOperator::new(coefficients, None)?;
    BvpProblem::new(stable.name.clone(), stable.manifold.clone(), operator, stable.ends.clone())
}

/// Endpoint first-order operator `D'` and its boundary condition `B'`.
fn first_order_problem(problem: &BvpProblem) -> Result<BvpProblem> {
    let (m, n) = (problem.order(), problem.rank());
    let size = m * n;
    let op = problem.operator.clone();
    let f: SymbolFn = Arc::new(move |p: &SymbolPoint| {
        let parts = match operator_parts(&op, p.x, p.t, p.xi) {
            Ok(v) => v,
            Err(_) => return CMat::from_element(size, size, c(f64::NAN, 0.0)),
        };
        let mut lead = CMat::zeros(size, size);
        let mut constant = CMat::zeros(size, size);
        for j in 0..m {
            let (l, k) = if j == m - 1 {
                (&parts[j] + &parts[m], (&parts[j] - &parts[m]) * I)
            } else {
                (parts[j].clone(), &parts[j] * I)
            };
            lead.view_mut((0, j * n), (n, n)).copy_from(&l);
            constant.view_mut((0, j * n), (n, n)).copy_from(&k);
        }
        for i in 1..m {
            lead.view_mut((i * n, (i - 1) * n), (n, n)).copy_from(&(-linalg::identity(n)));
            lead.view_mut((i * n, i * n), (n, n)).copy_from(&linalg::identity(n));
            constant.view_mut((i * n, (i - 1) * n), (n, n)).copy_from(&(linalg::identity(n) * I));
            constant.view_mut((i * n, i * n), (n, n)).copy_from(&(linalg::identity(n) * I));
        }
        match linalg::inverse(&lead) {
            Ok(inv) => inv * constant * c(p.xi.abs(), 0.0),
            Err(_) => CMat::from_element(size, size, c(f64::NAN, 0.0)),
        }
    });
    let (xi, ti) = (problem.operator.is_x_independent(), problem.operator.is_t_independent());
    let d1 = MatrixSymbol::custom(size, size, 1, "first-order", xi, ti, f);
    let operator = CollarOperator::new(vec![MatrixSymbol::identity(size), d1], None)?;
    let end = problem.ends[0].clone();
    let g = end.target_rank();
    let cond = end.condition.clone();
    let fb: SymbolFn = Arc::new(move |p: &SymbolPoint| match boundary_parts(&cond, p.x, p.xi) {
        Ok(parts) => {
            let refs: Vec<&CMat> = parts.iter().collect();
            linalg::hstack(&refs)
        }
        Err(_) => CMat::from_element(g, size, c(f64::NAN, 0.0)),
    });
    let b = MatrixSymbol::custom(g, size, 0, "first-order-b", end.condition.is_x_independent(), true, fb);
    let near = EndCondition { condition: BoundaryCondition::new(vec![b])?, projection: end.projection };
    let far = spectral_closing(&operator.reflect())?;
    BvpProblem::new(format!("{}.first-order", problem.name), problem.manifold.clone(), operator, vec![near, far])
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionSample {
    pub step: usize,
    pub tau: f64,
    /// Smallest and largest `dim L+(D_tau)` over the boundary grid.
    pub rank_plus: (usize, usize),
    pub rank_base: usize,
    /// Largest principal angle between `pr L+(D_tau)` and `L+(D)`.
    pub pr_angle: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderReductionTrace {
    pub order: usize,
    pub rank: usize,
    pub samples: Vec<ReductionSample>,
    /// `D_1` against `D' (lambda + i|xi|)^(m-1)`, coefficientwise.
    pub endpoint_residual: f64,
    /// `B pr` against `B' (lambda + i|xi|)^(m-1)` on `L+(D_1)`.
    pub boundary_residual: f64,
    /// Remainders of the triangular factorization `D'_tau = U_tau L_tau`.
    pub factor_remainder: f64,
    /// Variation in `tau` of the diagonal factor `L_tau`.
    pub diagonal_variation: f64,
    /// The homotopy is a product of triangular factors with constant diagonal.
    pub trivial: bool,
}

impl OrderReductionTrace {
    pub fn ranks_preserved(&self) -> bool {
        self.samples.iter().all(|s| s.rank_plus == (s.rank_base, s.rank_base))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "tau", "rank_plus_min", "rank_plus_max", "rank_base", "pr_angle"]).map_err(csv_err)?;
        for s in &self.samples {
            out.write_record([
                s.step.to_string(),
                format!("{:.12e}", s.tau),
                s.rank_plus.0.to_string(),
                s.rank_plus.1.to_string(),
                s.rank_base.to_string(),
                format!("{:.12e}", s.pr_angle),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OrderReduction {
    pub first_order: BvpProblem,
    /// Stabilized problem with the reduced operator pulled into the near collar.
    pub endpoint: BvpProblem,
    pub path: HomotopyPath,
    pub certificate: PathCertificate,
    pub trace: OrderReductionTrace,
}

fn poly_div(num: &[CMat], den: &[C64]) -> (Vec<CMat>, Vec<CMat>) {
    let shape = num[0].shape();
    let mut rem: Vec<CMat> = num.to_vec();
    let dq = den.len() - 1;
    if num.len() <= dq {
        return (vec![CMat::zeros(shape.0, shape.1)], rem);
    }
    let mut quot = vec![CMat::zeros(shape.0, shape.1); num.len() - dq];
    for k in 0..quot.len() {
        let lead = rem[k].clone() / den[0];
        for (j, &d) in den.iter().enumerate() {
            rem[k + j] -= &lead * d;
        }
        quot[k] = lead;
    }
    (quot, rem.split_off(num.len() - dq))
}

fn poly_mul(a: &[CMat], b: &[C64]) -> Vec<CMat> {
    let shape = a[0].shape();
    let mut out = vec![CMat::zeros(shape.0, shape.1); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[CMat], b: &[CMat]) -> Vec<CMat> {
    let len = a.len().max(b.len());
    let shape = a[0].shape();
    let at = |p: &[CMat], k: usize| if k + p.len() >= len { p[k + p.len() - len].clone() } else { CMat::zeros(shape.0, shape.1) };
    (0..len).map(|k| at(a, k) + at(b, k)).collect()
}

fn max_norm(p: &[CMat]) -> f64 {
    p.iter().map(linalg::norm2).fold(0.0, f64::max)
}

/// Back substitution for `D'_tau = U L` with `U` upper unipotent in the first
/// row and `L` lower bidiagonal with `D_+^m` below the corner. Returns the
/// largest division remainder and the corner entry of `L`.
fn triangular_factor(parts: &[CMat], full: &[CMat], tau: f64) -> (f64, Vec<CMat>) {
    let m = parts.len() - 1;
    let n = parts[0].nrows();
    let poly = homotopy_polynomial(parts, full, tau);
    let entry = |j: usize| -> Vec<CMat> { poly.iter().map(|p| p.view((0, j * n), (n, n)).into_owned()).collect() };
    let q0 = split_power(m, 0);
    let q1 = split_power(m, 1);
    let mut remainder: f64 = 0.0;
    let mut next: Option<Vec<CMat>> = None;
    for j in (1..m).rev() {
        let mut num = entry(j);
        if let Some(u) = &next {
            let shifted: Vec<CMat> = poly_mul(u, &q1).into_iter().map(|x| x * c(tau, 0.0)).collect();
            num = poly_add(&num, &shifted);
        }
        let (quot, rem) = poly_div(&num, &q0);
        remainder = remainder.max(max_norm(&rem));
        next = Some(quot);
    }
    let corner = match next {
        Some(u) => {
            let shifted: Vec<CMat> = poly_mul(&u, &q1).into_iter().map(|x| x * c(tau, 0.0)).collect();
            poly_add(&entry(0), &shifted)
        }
        None => entry(0),
    };
    (remainder, corner)
}

fn sample_trace(
    problem: &BvpProblem,
    path: &HomotopyPath,
    first: &BvpProblem,
    grid: &CertifyGrid,
) -> Result<OrderReductionTrace> {
    let (m, n) = (problem.order(), problem.rank());
    let size = m * n;
    let tol = grid.root_tol;
    let mut samples = Vec::with_capacity(path.steps.len());
    for (step, (step_problem, &tau)) in path.steps.iter().zip(&path.parameters).enumerate() {
        let op = step_problem.operator_at_end(0);
        let (mut lo, mut hi, mut base_rank, mut angle) = (usize::MAX, 0, 0, 0.0f64);
        for &x in &grid.boundary.x {
            for &xi in &grid.boundary.xi {
                let plus = frames_at(&op, x, xi, tol)?.0.columns;
                let base = frames_at(&problem.operator_at_end(0), x, xi, tol)?.0.columns;
                lo = lo.min(plus.ncols());
                hi = hi.max(plus.ncols());
                base_rank = base.ncols();
                let rows: Vec<CMat> = (0..m).map(|j| plus.rows(j * size, n).into_owned()).collect();
                let refs: Vec<&CMat> = rows.iter().collect();
                let projected = linalg::orth(&linalg::vstack(&refs), 1e-10);
                angle = angle.max(linalg::max_principal_angle_sin(&projected, &base));
            }
        }
        samples.push(ReductionSample { step, tau, rank_plus: (lo, hi), rank_base: base_rank, pr_angle: angle });
    }

    let end = path.end();
    let stable_b = &end.ends[0].condition;
    let first_b = &first.ends[0].condition;
    let mut endpoint_residual: f64 = 0.0;
    let mut boundary_residual: f64 = 0.0;
    let mut factor_remainder: f64 = 0.0;
    let mut diagonal_variation: f64 = 0.0;
    let factor = split_power(m - 1, 0);
    for &x in &grid.boundary.x {
        for &xi in &grid.boundary.xi {
            for &t in &grid.interior.t {
                let reduced = end.operator.principal_coefficients_at(x, t, xi);
                let d1 = &first.operator.principal_coefficients_at(x, t, xi)[1];
                let product = poly_mul(&[linalg::identity(size), d1.clone()], &factor);
                let scale = max_norm(&reduced).max(1.0);
                for (a, b) in reduced.iter().zip(&product) {
                    endpoint_residual = endpoint_residual.max(linalg::norm2(&(a - b)) / scale);
                }
                let parts = operator_parts(&problem.operator, x, t, xi)?;
                let full = problem.operator.principal_coefficients_at(x, t, sgn(xi));
                let (_, base_corner) = triangular_factor(&parts, &full, 0.0);
                for &tau in &path.parameters {
                    let (rem, corner) = triangular_factor(&parts, &full, tau);
                    factor_remainder = factor_remainder.max(rem);
                    let diff: Vec<CMat> = corner.iter().zip(&base_corner).map(|(a, b)| a - b).collect();
                    diagonal_variation = diagonal_variation.max(max_norm(&diff));
                }
            }
            let plus = frames_at(&end.operator_at_end(0), x, xi, tol)?.0.columns;
            let lhs = stable_b.stacked_at(x, xi) * &plus;
            let mut applied = CMat::zeros(size, plus.ncols());
            for j in 0..m {
                applied += plus.rows(j * size, size) * (I.powi((m - 1 - j) as i32) * binomial(m - 1, j));
            }
            let rhs = first_b.stacked_at(x, xi) * applied;
            boundary_residual = boundary_residual.max(linalg::norm2(&(&lhs - rhs)) / linalg::norm2(&lhs).max(1.0));
        }
    }
    let trivial = factor_remainder < TRIVIAL_TOL && diagonal_variation < TRIVIAL_TOL;
    Ok(OrderReductionTrace {
        order: m,
        rank: n,
        samples,
        endpoint_residual,
        boundary_residual,
        factor_remainder,
        diagonal_variation,
        trivial,
    })
}

/// Homotopy from `(D, B)` plus copies of `D_+^m` to `(D', B')` composed with
/// `D_+^(m-1)` on each component, with its certificate and trace. An operator
/// of order one is returned unchanged with an empty trace.
pub fn reduce_order(problem: &BvpProblem, steps: usize, grid: &CertifyGrid) -> Result<OrderReduction> {
    let m = problem.order();
    if m == 1 {
        let path = HomotopyPath::constant(PathKind::OrderReduce, problem.clone(), steps);
        let certificate = certify_path(&path, grid);
        let trace = OrderReductionTrace {
            order: 1,
            rank: problem.rank(),
            samples: Vec::new(),
            endpoint_residual: 0.0,
            boundary_residual: 0.0,
            factor_remainder: 0.0,
            diagonal_variation: 0.0,
            trivial: true,
        };
        return Ok(OrderReduction { first_order: problem.clone(), endpoint: problem.clone(), path, certificate, trace });
    }
    if problem.manifold.ends() != 2 || !problem.manifold.has_circle_boundary() {
        return Err(Error::Capability("order reduction is implemented on cylinders and annuli".into()));
    }
    if problem.ends[0].condition.jets().len() != m {
        return Err(Error::Order(format!("boundary condition has {} jets for an operator of order {m}", problem.ends[0].condition.jets().len())));
    }
    let stable = stabilized(problem)?;
    let (base, st) = (problem.clone(), stable.clone());
    let family: ProblemFamily = Arc::new(move |tau| reduced_problem(&base, &st, tau));
    let path = HomotopyPath::sample(PathKind::OrderReduce, steps, false, family)?;
    let certificate = certify_path(&path, grid);
    let first_order = first_order_problem(problem)?;
    let trace = sample_trace(problem, &path, &first_order, grid)?;
    let endpoint = collar_pull(&stable, &path, &Cutoff::standard(), 1.0)?.with_name(format!("{}.reduced", problem.name));
    Ok(OrderReduction { first_order, endpoint, path, certificate, trace })
}
