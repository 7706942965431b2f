use serde::Serialize;

use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::symbol::BvpProblem;

use super::discretize::{discretize_bvp, DiscreteOperator, Resolution};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;
pub const REQUIRED_GAP: f64 = 1e3;

/// Rank of a matrix with the singular-value gap that separates the retained
/// values from the discarded ones.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RankEvidence {
    pub rank: usize,
    pub gap: f64,
    pub smallest_kept: f64,
    pub largest_dropped: f64,
}

pub fn rank_with_gap(m: &CMat, tol: f64) -> RankEvidence {
    if m.nrows() == 0 || m.ncols() == 0 {
        return RankEvidence { rank: 0, gap: f64::INFINITY, smallest_kept: f64::INFINITY, largest_dropped: 0.0 };
    }
    let s = linalg::singular_values(m);
    let smax = s[0];
    if smax == 0.0 {
        return RankEvidence { rank: 0, gap: f64::INFINITY, smallest_kept: f64::INFINITY, largest_dropped: 0.0 };
    }
    let rank = s.iter().filter(|&&v| v > tol * smax).count();
    let smallest_kept = s[rank - 1];
    let largest_dropped = s.get(rank).copied().unwrap_or(0.0);
    // floating-point noise floor stands in for an empty zero group
    let floor = s.len() as f64 * f64::EPSILON * smax;
    let gap = smallest_kept / largest_dropped.max(floor);
    RankEvidence { rank, gap, smallest_kept, largest_dropped }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexAtResolution {
    pub resolution: Resolution,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    /// Smallest singular-value gap over every rank decision.
    pub gap: f64,
    pub determinate: bool,
    pub kernel_section: (usize, usize),
    pub cokernel_section: (usize, usize),
    /// Interior equations that failed to be surjective, summed over modes.
    pub interior_defect: usize,
}

pub fn numeric_index(op: &DiscreteOperator, tol: f64) -> IndexAtResolution {
    let mut gap = f64::INFINITY;
    let mut interior_defect = 0;
    for b in &op.blocks {
        let ev = rank_with_gap(&b.interior, tol);
        gap = gap.min(ev.gap);
        interior_defect += b.interior.nrows() - ev.rank;
    }
    let ks = &op.kernel_section.matrix;
    let kev = rank_with_gap(ks, tol);
    gap = gap.min(kev.gap);
    let dim_ker = ks.ncols() - kev.rank;
    let (dim_coker, cshape) = match &op.cokernel_section {
        None => (ks.nrows() - kev.rank, ks.shape()),
        Some(cs) => {
            let cev = rank_with_gap(&cs.matrix, tol);
            gap = gap.min(cev.gap);
            (cs.matrix.nrows() - cev.rank, cs.matrix.shape())
        }
    };
    let dim_coker = dim_coker + interior_defect;
    IndexAtResolution {
        resolution: op.resolution,
        dim_ker,
        dim_coker,
        index: dim_ker as i64 - dim_coker as i64,
        gap,
        determinate: gap >= REQUIRED_GAP,
        kernel_section: ks.shape(),
        cokernel_section: cshape,
        interior_defect,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexVerdict {
    Stable,
    Unstable,
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    pub resolutions: Vec<IndexAtResolution>,
    pub gap: f64,
    pub verdict: IndexVerdict,
}

impl IndexReport {
    pub fn stable_index(&self) -> Option<i64> {
        (self.verdict == IndexVerdict::Stable).then_some(self.index)
    }
}

/// Index at every resolution (ascending); stable when the two finest agree
/// and every rank decision had a clean gap.
pub fn index_report(problem: &BvpProblem, resolutions: &[Resolution], tol: f64) -> Result<IndexReport> {
    let mut per = Vec::with_capacity(resolutions.len());
    for &r in resolutions {
        per.push(numeric_index(&discretize_bvp(problem, r)?, tol));
    }
    Ok(summarize(per))
}

pub fn summarize(per: Vec<IndexAtResolution>) -> IndexReport {
    let last = per.last().expect("at least one resolution").clone();
    let gap = per.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    let verdict = if per.iter().any(|r| !r.determinate) {
        IndexVerdict::Indeterminate
    } else if per.len() >= 2 && per[per.len() - 2].index != last.index {
        IndexVerdict::Unstable
    } else {
        IndexVerdict::Stable
    };
    IndexReport { dim_ker: last.dim_ker, dim_coker: last.dim_coker, index: last.index, resolutions: per, gap, verdict }
}

/// Standard pair of resolutions used for stability checks.
pub fn default_resolutions() -> Vec<Resolution> {
    vec![Resolution::from_modes(16), Resolution::from_modes(32)]
}
