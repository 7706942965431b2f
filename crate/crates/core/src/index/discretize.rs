//! Discretization of boundary value problems on the model manifolds.
//!
//! Operators must have x-independent coefficients, so each Fourier mode `n`
//! decouples into an ODE in the collar variable, solved by rectangular
//! Chebyshev collocation. The interior equations of each mode are reduced to
//! their null space (the discrete solution space) and the boundary conditions
//! are applied to it. Boundary conditions may depend on `x` through finite
//! Fourier sums of bandwidth `K`; they couple modes, so the kernel is taken
//! from the section with solution modes `|n| <= N` and data modes
//! `|p| <= N + K`, and the cokernel from the transposed section.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::spectral::{discrete::fourier_coefficients, realize_projection};
use crate::symbol::{BvpProblem, EndCondition, ManifoldKind, SymbolPoint};

use super::cheb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Resolution {
    pub modes: usize,
    pub t_points: usize,
}

impl Resolution {
    pub fn from_modes(modes: usize) -> Self {
        Self { modes, t_points: (modes + 12).clamp(16, 48) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RowLabel {
    Interior { mode: i64, rows: usize },
    Boundary { end: usize, data_modes: usize, rows: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColLabel {
    pub mode: i64,
    pub cols: usize,
}

/// Discretized ODE of one Fourier mode.
#[derive(Debug, Clone)]
pub struct ModeBlock {
    pub mode: i64,
    pub interior: CMat,
    /// Orthonormal basis of the discrete solution space.
    pub kernel: CMat,
    pub interior_singular_values: Vec<f64>,
    /// Per end: map from grid values to jets at that end.
    pub jet_maps: Vec<CMat>,
}

/// Boundary conditions applied to the solution spaces of a range of modes.
#[derive(Debug, Clone)]
pub struct Section {
    pub matrix: CMat,
    pub solution_modes: usize,
    pub data_modes: usize,
    pub row_labels: Vec<RowLabel>,
    pub col_labels: Vec<ColLabel>,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub resolution: Resolution,
    pub manifold: ManifoldKind,
    pub bandwidth: usize,
    pub blocks: Vec<ModeBlock>,
    pub kernel_section: Section,
    /// Absent when the conditions do not couple modes.
    pub cokernel_section: Option<Section>,
    problem: BvpProblem,
}

fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|v| c(v, 0.0))
}

fn kron_identity(m: &CMat, r: usize) -> CMat {
    let mut out = linalg::zeros(m.nrows() * r, m.ncols() * r);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            for q in 0..r {
                out[(i * r + q, j * r + q)] = m[(i, j)];
            }
        }
    }
    out
}

fn collar_block(problem: &BvpProblem, mode: i64, res: Resolution) -> Result<ModeBlock> {
    let op = &problem.operator;
    let (m, r) = (op.order(), op.rank());
    let nt = res.t_points;
    let t = cheb::nodes(nt);
    let dt = to_complex(&cheb::diff_matrix(nt));
    let normal = &dt * c(0.0, -1.0);
    let id = linalg::identity(nt);
    let mut powers = vec![id.clone()];
    for k in 1..=m {
        powers.push(&powers[k - 1] * &normal);
    }
    let xi = mode as f64;
    let mut l = linalg::zeros(nt * r, nt * r);
    for k in 0..=m {
        let dk = kron_identity(&powers[m - k], r);
        let mut coef = linalg::zeros(nt * r, nt * r);
        for (j, &tj) in t.iter().enumerate() {
            let v = op.coefficients()[k].eval(&SymbolPoint::new(0.0, tj, xi, c(0.0, 0.0)));
            coef.view_mut((j * r, j * r), (r, r)).copy_from(&v);
        }
        l += coef * dk;
    }
    let resample = to_complex(&cheb::resample_matrix(nt, &cheb::interior_nodes(nt - m)));
    let interior = kron_identity(&resample, r) * l;
    let (kernel, sv) = linalg::null_space(&interior, 1e-9);
    let mut jet_maps = Vec::new();
    for end in 0..problem.manifold.ends() {
        let (row, sign) = if end == 0 { (0, 1.0f64) } else { (nt - 1, -1.0) };
        let mut jm = linalg::zeros(m * r, nt * r);
        for j in 0..m {
            // inward normal derivative flips sign at the far end
            let p = &powers[j] * c(sign.powi(j as i32), 0.0);
            let rowv = kron_identity(&p.rows(row, 1).into_owned(), r);
            jm.view_mut((j * r, 0), (r, nt * r)).copy_from(&rowv);
        }
        jet_maps.push(jm);
    }
    Ok(ModeBlock { mode, interior, kernel, interior_singular_values: sv, jet_maps })
}

/// Polar Laplacian on the unit disk for angular mode `n`, on the positive
/// half of an even Chebyshev grid with parity `(-1)^n` folded in.
fn disk_block(mode: i64, res: Resolution) -> Result<ModeBlock> {
    let half = res.t_points.max(8);
    let total = 2 * half;
    let d = cheb::diff_matrix(total) * 2.0;
    let d2 = &d * &d;
    let x: Vec<f64> = cheb::nodes(total).iter().map(|t| 2.0 * t - 1.0).collect();
    let s = if mode % 2 == 0 { 1.0 } else { -1.0 };
    let pos: Vec<usize> = (half..total).collect();
    let fold = |a: &DMatrix<f64>| {
        DMatrix::from_fn(half, half, |i, j| a[(pos[i], pos[j])] + s * a[(pos[i], total - 1 - pos[j])])
    };
    let (f1, f2) = (fold(&d), fold(&d2));
    let n2 = (mode * mode) as f64;
    let lap = DMatrix::from_fn(half, half, |i, j| {
        let r = x[pos[i]];
        f2[(i, j)] + f1[(i, j)] / r - if i == j { n2 / (r * r) } else { 0.0 }
    });
    // the last row sits on r = 1 and is left to the boundary condition
    let interior = to_complex(&lap.rows(0, half - 1).into_owned());
    let (kernel, sv) = linalg::null_space(&interior, 1e-9);
    let mut jm = linalg::zeros(2, half);
    jm[(0, half - 1)] = c(1.0, 0.0);
    for j in 0..half {
        // -i d/dt with t = 1 - r
        jm[(1, j)] = c(0.0, f1[(half - 1, j)]);
    }
    Ok(ModeBlock { mode, interior, kernel, interior_singular_values: sv, jet_maps: vec![jm] })
}

fn check_disk_operator(problem: &BvpProblem) -> Result<()> {
    let op = &problem.operator;
    let ok = op.rank() == 1
        && op.order() == 2
        && [1.0, -1.0, 2.5].iter().all(|&xi| {
            let cf = op.full_coefficients_at(0.3, 0.0, xi);
            cf[1][(0, 0)].norm() < 1e-14 && (cf[2][(0, 0)] - c(xi * xi, 0.0)).norm() < 1e-12
        });
    if ok {
        Ok(())
    } else {
        Err(Error::Capability("disk discretization supports the scalar Laplace-type operator lambda^2 + xi^2 only".into()))
    }
}

/// Data rows of one end condition applied to per-mode column maps (jets of
/// whatever the columns parametrize), for data modes `|p| <= data_modes`.
fn boundary_rows(
    end: &EndCondition,
    data_modes: usize,
    bandwidth: usize,
    columns: &[(i64, CMat)],
    interval: bool,
) -> Result<CMat> {
    let g = end.condition.target_rank();
    let total_cols: usize = columns.iter().map(|(_, m)| m.ncols()).sum();
    let kp = 2 * data_modes + 1;
    let mut rows = linalg::zeros(g * kp, total_cols);
    let x_indep = end.condition.is_x_independent() || interval;
    let mut offset = 0;
    for (n, cm) in columns {
        let xi = *n as f64;
        let coeffs: Vec<CMat> = if x_indep {
            vec![end.condition.stacked_at(0.0, xi)]
        } else {
            let len = 2 * bandwidth + 1;
            let samples: Vec<CMat> = (0..len)
                .map(|j| end.condition.stacked_at(2.0 * std::f64::consts::PI * j as f64 / len as f64, xi))
                .collect();
            fourier_coefficients(&samples, bandwidth)
        };
        let kmax = if x_indep { 0 } else { bandwidth as i64 };
        for k in -kmax..=kmax {
            let p = n + k;
            if p.abs() > data_modes as i64 {
                continue;
            }
            let block = &coeffs[(k + kmax) as usize] * cm;
            let row0 = (p + data_modes as i64) as usize * g;
            let mut view = rows.view_mut((row0, offset), (g, cm.ncols()));
            view += &block;
        }
        offset += cm.ncols();
    }
    match &end.projection {
        None => Ok(rows),
        Some(spec) => {
            if interval {
                return Err(Error::Capability("spectral conditions need a circle boundary".into()));
            }
            let p = realize_projection(spec, data_modes)?;
            let q = p.range_basis();
            Ok(q.adjoint() * p.matrix() * rows)
        }
    }
}

fn section(
    problem: &BvpProblem,
    blocks: &[ModeBlock],
    solution_modes: usize,
    data_modes: usize,
    bandwidth: usize,
    reduced: bool,
) -> Result<Section> {
    let interval = problem.manifold.kind() == ManifoldKind::Interval;
    let chosen: Vec<&ModeBlock> = blocks.iter().filter(|b| b.mode.unsigned_abs() as usize <= solution_modes).collect();
    let col_labels = chosen
        .iter()
        .map(|b| ColLabel { mode: b.mode, cols: if reduced { b.kernel.ncols() } else { b.interior.ncols() } })
        .collect();
    let mut parts = Vec::new();
    let mut row_labels = Vec::new();
    for (e, end) in problem.ends.iter().enumerate() {
        let columns: Vec<(i64, CMat)> = chosen
            .iter()
            .map(|b| (b.mode, if reduced { &b.jet_maps[e] * &b.kernel } else { b.jet_maps[e].clone() }))
            .collect();
        let rows = boundary_rows(end, data_modes, bandwidth, &columns, interval)?;
        row_labels.push(RowLabel::Boundary { end: e, data_modes, rows: rows.nrows() });
        parts.push(rows);
    }
    let refs: Vec<&CMat> = parts.iter().collect();
    let total_cols = chosen.iter().map(|b| if reduced { b.kernel.ncols() } else { b.interior.ncols() }).sum();
    let matrix = if refs.is_empty() { linalg::zeros(0, total_cols) } else { linalg::vstack(&refs) };
    Ok(Section { matrix, solution_modes, data_modes, row_labels, col_labels })
}

pub fn discretize_bvp(problem: &BvpProblem, res: Resolution) -> Result<DiscreteOperator> {
    let kind = problem.manifold.kind();
    if problem.order() == 0 {
        return Err(Error::Capability("zero-order operators have no boundary problem to discretize".into()));
    }
    if kind != ManifoldKind::Interval && !problem.operator.is_x_independent() {
        return Err(Error::Capability("operator coefficients must be independent of x".into()));
    }
    if kind == ManifoldKind::Disk {
        check_disk_operator(problem)?;
    }
    if res.t_points < problem.order() + 4 {
        return Err(Error::Capability(format!("{} collocation points are too few", res.t_points)));
    }
    let mut bandwidth = 0usize;
    if kind != ManifoldKind::Interval {
        for end in &problem.ends {
            let b = end
                .condition
                .bandwidth()
                .ok_or_else(|| Error::Capability("x-dependent conditions must be finite Fourier sums".into()))?;
            bandwidth = bandwidth.max(b as usize);
        }
    }
    let top = if kind == ManifoldKind::Interval { 0 } else { (res.modes + bandwidth) as i64 };
    let blocks = (-top..=top)
        .map(|n| if kind == ManifoldKind::Disk { disk_block(n, res) } else { collar_block(problem, n, res) })
        .collect::<Result<Vec<_>>>()?;
    let n = if kind == ManifoldKind::Interval { 0 } else { res.modes };
    let kernel_section = section(problem, &blocks, n, n + bandwidth, bandwidth, true)?;
    let cokernel_section =
        if bandwidth == 0 { None } else { Some(section(problem, &blocks, n + bandwidth, n, bandwidth, true)?) };
    Ok(DiscreteOperator {
        resolution: res,
        manifold: kind,
        bandwidth,
        blocks,
        kernel_section,
        cokernel_section,
        problem: problem.clone(),
    })
}

impl DiscreteOperator {
    /// Full collocation matrix of the kernel section: interior rows of every
    /// mode followed by the boundary rows, acting on grid values.
    pub fn dense(&self) -> Result<(CMat, Vec<RowLabel>, Vec<ColLabel>)> {
        let n = self.kernel_section.solution_modes;
        let chosen: Vec<&ModeBlock> = self.blocks.iter().filter(|b| b.mode.unsigned_abs() as usize <= n).collect();
        let rows_int: usize = chosen.iter().map(|b| b.interior.nrows()).sum();
        let cols: usize = chosen.iter().map(|b| b.interior.ncols()).sum();
        let bsec = section(&self.problem, &self.blocks, n, self.kernel_section.data_modes, self.bandwidth, false)?;
        let mut out = linalg::zeros(rows_int + bsec.matrix.nrows(), cols);
        let mut labels = Vec::new();
        let (mut r0, mut c0) = (0, 0);
        for b in &chosen {
            out.view_mut((r0, c0), b.interior.shape()).copy_from(&b.interior);
            labels.push(RowLabel::Interior { mode: b.mode, rows: b.interior.nrows() });
            r0 += b.interior.nrows();
            c0 += b.interior.ncols();
        }
        out.view_mut((r0, 0), bsec.matrix.shape()).copy_from(&bsec.matrix);
        labels.extend(bsec.row_labels);
        Ok((out, labels, bsec.col_labels))
    }

    pub fn problem(&self) -> &BvpProblem {
        &self.problem
    }

    /// Dimension of the discrete solution space of one mode.
    pub fn solution_dims(&self) -> Vec<(i64, usize)> {
        self.blocks.iter().map(|b| (b.mode, b.kernel.ncols())).collect()
    }
}
