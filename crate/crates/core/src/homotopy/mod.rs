//! Explicit deformations of boundary value problems: eigenvalue
//! flattening, rotation of the boundary condition, collar pullback, order
//! reduction and reduction to spectral form, each certified step by step.

mod collar;
mod flatten;
mod order;
mod rotate;

pub use collar::{collar_pull, Cutoff};
pub use flatten::{flatten_path, flattening_projection};
pub use order::{reduce_order, OrderReduction, OrderReductionTrace, ReductionSample};
pub use rotate::{
    is_model_form, projection_defect, reduce_to_spectral, rotate_path, stabilize, unitarize_path, SpectralReduction,
};

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{csv_err, frames_at, sl_sample, BoundaryGrid, DEFAULT_ROOT_TOL};
use crate::error::Result;
use crate::linalg;
use crate::symbol::{check_interior_ellipticity, BvpProblem, InteriorGrid};

pub const DEFAULT_STEPS: usize = 101;
pub const DEFAULT_MARGIN_TOL: f64 = 1e-8;
pub const DEFAULT_ANGLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Flatten,
    Rotate,
    Collar,
    OrderReduce,
    ToSpectral,
}

/// Problem at a path parameter in `[0, 1]`.
pub type ProblemFamily = Arc<dyn Fn(f64) -> Result<BvpProblem> + Send + Sync>;

#[derive(Clone)]
pub struct HomotopyPath {
    pub kind: PathKind,
    pub parameters: Vec<f64>,
    pub steps: Vec<BvpProblem>,
    /// The near-boundary frames of `L+` stay fixed along the path.
    pub fixed_frames: bool,
    family: ProblemFamily,
}

impl std::fmt::Debug for HomotopyPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HomotopyPath")
            .field("kind", &self.kind)
            .field("steps", &self.steps.len())
            .field("fixed_frames", &self.fixed_frames)
            .finish()
    }
}

/// `steps` equally spaced parameters on `[0, 1]`, endpoints exact.
pub fn parameter_grid(steps: usize) -> Vec<f64> {
    let n = steps.max(2);
    (0..n).map(|k| if k == n - 1 { 1.0 } else { k as f64 / (n - 1) as f64 }).collect()
}

impl HomotopyPath {
    pub fn sample(kind: PathKind, steps: usize, fixed_frames: bool, family: ProblemFamily) -> Result<Self> {
        let parameters = parameter_grid(steps);
        let steps = parameters.iter().map(|&s| family(s)).collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, parameters, steps, fixed_frames, family })
    }

    pub fn constant(kind: PathKind, problem: BvpProblem, steps: usize) -> Self {
        let p = problem.clone();
        let family: ProblemFamily = Arc::new(move |_| Ok(p.clone()));
        let parameters = parameter_grid(steps);
        let steps = vec![problem; parameters.len()];
        Self { kind, parameters, steps, fixed_frames: true, family }
    }

    pub fn at(&self, s: f64) -> Result<BvpProblem> {
        (self.family)(s.clamp(0.0, 1.0))
    }

    pub fn family(&self) -> ProblemFamily {
        self.family.clone()
    }

    pub fn start(&self) -> &BvpProblem {
        &self.steps[0]
    }

    pub fn end(&self) -> &BvpProblem {
        self.steps.last().expect("nonempty path")
    }

    /// Follow this path by `next`, reparametrized onto `[0, 1/2]` and `[1/2, 1]`.
    pub fn then(&self, next: &HomotopyPath, kind: PathKind) -> Result<Self> {
        Self::chain(&[self.clone(), next.clone()], kind)
    }

    /// Consecutive paths, each reparametrized onto an equal subinterval.
    pub fn chain(parts: &[HomotopyPath], kind: PathKind) -> Result<Self> {
        let n = parts.len();
        if n == 0 {
            return Err(crate::error::Error::Precondition("empty chain of paths".into()));
        }
        let families: Vec<ProblemFamily> = parts.iter().map(|p| p.family.clone()).collect();
        let family: ProblemFamily = Arc::new(move |s| {
            let k = ((s * n as f64).floor() as usize).min(n - 1);
            families[k](s * n as f64 - k as f64)
        });
        let mut parameters = Vec::new();
        let mut steps = Vec::new();
        for (k, part) in parts.iter().enumerate() {
            for (j, (s, p)) in part.parameters.iter().zip(&part.steps).enumerate() {
                if k > 0 && j == 0 {
                    continue;
                }
                parameters.push((k as f64 + s) / n as f64);
                steps.push(p.clone());
            }
        }
        let fixed_frames = parts.iter().all(|p| p.fixed_frames);
        Ok(Self { kind, parameters, steps, fixed_frames, family })
    }
}

/// Sample grids and tolerances used when certifying a path.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyGrid {
    pub boundary: BoundaryGrid,
    pub interior: InteriorGrid,
    pub root_tol: f64,
    pub margin_tol: f64,
    pub angle_tol: f64,
}

impl Default for CertifyGrid {
    fn default() -> Self {
        Self {
            boundary: BoundaryGrid::uniform(16),
            interior: InteriorGrid::uniform(8, 3, 32),
            root_tol: DEFAULT_ROOT_TOL,
            margin_tol: DEFAULT_MARGIN_TOL,
            angle_tol: DEFAULT_ANGLE_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepMargin {
    pub step: usize,
    pub parameter: f64,
    pub interior_margin: f64,
    pub boundary_margin: f64,
    pub max_angle: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathCertificate {
    pub kind: PathKind,
    pub steps: Vec<StepMargin>,
    pub margin_tol: f64,
    pub angle_tol: f64,
    pub fixed_frames: bool,
    pub valid: bool,
    /// First step at which a margin fails.
    pub first_failure: Option<usize>,
}

impl PathCertificate {
    pub fn min_interior_margin(&self) -> f64 {
        self.steps.iter().map(|s| s.interior_margin).fold(f64::INFINITY, f64::min)
    }

    pub fn min_boundary_margin(&self) -> f64 {
        self.steps.iter().map(|s| s.boundary_margin).fold(f64::INFINITY, f64::min)
    }

    pub fn max_angle(&self) -> f64 {
        self.steps.iter().map(|s| s.max_angle).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "parameter", "interior_margin", "boundary_margin", "max_principal_angle"]).map_err(csv_err)?;
        for s in &self.steps {
            out.write_record([
                s.step.to_string(),
                format!("{:.12e}", s.parameter),
                format!("{:.12e}", s.interior_margin),
                format!("{:.12e}", s.boundary_margin),
                format!("{:.12e}", s.max_angle),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Combined certificate of consecutive paths.
    pub fn concat(kind: PathKind, parts: &[PathCertificate]) -> Self {
        let mut steps = Vec::new();
        let n = parts.len() as f64;
        for (k, part) in parts.iter().enumerate() {
            for s in &part.steps {
                if k > 0 && s.step == 0 {
                    continue;
                }
                let mut s = s.clone();
                s.step = steps.len();
                s.parameter = (k as f64 + s.parameter) / n;
                steps.push(s);
            }
        }
        let margin_tol = parts.iter().map(|p| p.margin_tol).fold(0.0, f64::max);
        let angle_tol = parts.iter().map(|p| p.angle_tol).fold(f64::INFINITY, f64::min);
        let fixed_frames = parts.iter().all(|p| p.fixed_frames);
        finish(kind, steps, margin_tol, angle_tol, fixed_frames)
    }
}

fn finish(kind: PathKind, steps: Vec<StepMargin>, margin_tol: f64, angle_tol: f64, fixed_frames: bool) -> PathCertificate {
    let ok = |s: &StepMargin| {
        s.error.is_none()
            && s.interior_margin > margin_tol
            && s.boundary_margin > margin_tol
            && (!fixed_frames || s.max_angle < angle_tol)
    };
    let first_failure = steps.iter().position(|s| !ok(s));
    PathCertificate { kind, steps, margin_tol, angle_tol, fixed_frames, valid: first_failure.is_none(), first_failure }
}

type Frames = Vec<linalg::CMat>;

fn near_frames(problem: &BvpProblem, grid: &BoundaryGrid, root_tol: f64) -> Result<Frames> {
    let op = problem.operator_at_end(0);
    grid.x.iter().zip(&grid.xi).map(|(&x, &xi)| Ok(frames_at(&op, x, xi, root_tol)?.0.columns)).collect()
}

fn step_margin(problem: &BvpProblem, grid: &CertifyGrid, reference: Option<&Frames>) -> Result<(f64, f64, f64)> {
    let interior = check_interior_ellipticity(&problem.operator, &grid.interior, grid.margin_tol)?.min_abs_det;
    let op = problem.operator_at_end(0);
    let mut boundary = f64::INFINITY;
    let mut angle: f64 = 0.0;
    if problem.manifold.has_circle_boundary() {
        for (k, (&x, &xi)) in grid.boundary.x.iter().zip(&grid.boundary.xi).enumerate() {
            let (plus, _) = frames_at(&op, x, xi, grid.root_tol)?;
            boundary = boundary.min(sl_sample(0, &problem.ends[0], &plus)?.min_singular);
            if let Some(r) = reference {
                angle = angle.max(if r[k].ncols() == plus.columns.ncols() {
                    linalg::max_principal_angle_sin(&r[k], &plus.columns)
                } else {
                    1.0
                });
            }
        }
    }
    Ok((interior, boundary, angle))
}

/// Interior and near-end boundary margins at every step, plus the largest
/// principal angle between the `L+` frames and those of the first step.
pub fn certify_path(path: &HomotopyPath, grid: &CertifyGrid) -> PathCertificate {
    let reference = near_frames(path.start(), &grid.boundary, grid.root_tol).ok();
    let steps: Vec<StepMargin> = path
        .steps
        .par_iter()
        .zip(path.parameters.par_iter())
        .enumerate()
        .map(|(step, (problem, &parameter))| match step_margin(problem, grid, reference.as_ref()) {
            Ok((interior_margin, boundary_margin, max_angle)) => {
                StepMargin { step, parameter, interior_margin, boundary_margin, max_angle, error: None }
            }
            Err(e) => StepMargin {
                step,
                parameter,
                interior_margin: 0.0,
                boundary_margin: 0.0,
                max_angle: f64::NAN,
                error: Some(e.to_string()),
            },
        })
        .collect();
    finish(path.kind, steps, grid.margin_tol, grid.angle_tol, path.fixed_frames)
}

#[cfg(test)]
mod tests;
