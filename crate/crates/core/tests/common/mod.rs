#![allow(dead_code)]

use std::sync::Arc;

use ellbvp::index::{closed_spectral_problem, index_report, Resolution, DEFAULT_RANK_TOL};
use ellbvp::linalg::{c, CMat, C64};
use ellbvp::spectral::ProjectionSymbol;
use ellbvp::symbol::{
    BoundaryCondition, BvpProblem, CollarOperator, EndCondition, ManifoldKind, MatrixSymbol, ModelManifold,
    SpectralCondition, SymbolFn, SymbolPoint,
};
use nalgebra::DMatrix;
use rand::Rng;

pub fn sym(rows: &[&[&str]], degree: i32) -> MatrixSymbol {
    let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
    MatrixSymbol::parse(&rows, degree).unwrap()
}

pub fn cylinder() -> ModelManifold {
    ModelManifold::new(ManifoldKind::Cylinder)
}

pub fn resolutions(modes: &[usize]) -> Vec<Resolution> {
    modes.iter().map(|&n| Resolution::from_modes(n)).collect()
}

pub fn stable_index(p: &BvpProblem, modes: &[usize]) -> Option<i64> {
    index_report(p, &resolutions(modes), DEFAULT_RANK_TOL).ok()?.stable_index()
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> CMat {
    DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Tangential symbol `A(x, xi) = |xi| S(x) diag(mu) S(x)^-1` with separate
/// eigenvalues for the two signs of `xi`, known by construction.
pub struct RandomTangential {
    pub n: usize,
    pub plus_count: usize,
    pub mu_pos: Vec<C64>,
    pub mu_neg: Vec<C64>,
    s0: CMat,
    s1: CMat,
}

impl RandomTangential {
    pub fn new<R: Rng>(rng: &mut R, n: usize, plus_count: usize) -> Self {
        let mut mu = || {
            (0..n)
                .map(|j| {
                    let re = rng.gen_range(0.3..2.0);
                    let im = rng.gen_range(-1.0..1.0);
                    c(if j < plus_count { re } else { -re }, im)
                })
                .collect::<Vec<_>>()
        };
        let mu_pos = mu();
        let mu_neg = mu();
        let s0 = random_matrix(rng, n) * c(0.3, 0.0) + CMat::identity(n, n);
        let s1 = random_matrix(rng, n) * c(0.1, 0.0);
        Self { n, plus_count, mu_pos, mu_neg, s0, s1 }
    }

    pub fn frame(&self, x: f64) -> CMat {
        &self.s0 + &self.s1 * C64::from_polar(1.0, x)
    }

    pub fn eigenvalues(&self, xi: f64) -> &[C64] {
        if xi >= 0.0 {
            &self.mu_pos
        } else {
            &self.mu_neg
        }
    }

    pub fn at(&self, x: f64, xi: f64) -> CMat {
        let s = self.frame(x);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(self.eigenvalues(xi).to_vec()));
        &s * d * s.try_inverse().expect("invertible frame") * c(xi.abs(), 0.0)
    }

    pub fn symbol(&self) -> MatrixSymbol {
        let this = Arc::new(Self {
            n: self.n,
            plus_count: self.plus_count,
            mu_pos: self.mu_pos.clone(),
            mu_neg: self.mu_neg.clone(),
            s0: self.s0.clone(),
            s1: self.s1.clone(),
        });
        let f: SymbolFn = Arc::new(move |p: &SymbolPoint| this.at(p.x, p.xi));
        MatrixSymbol::custom(self.n, self.n, 1, "random-A", false, true, f)
    }

    /// `-i d/dt + d_1` with `d_1 = -i A`.
    pub fn operator(&self) -> CollarOperator {
        let d1 = self.symbol().scale(c(0.0, -1.0));
        CollarOperator::new(vec![MatrixSymbol::identity(self.n), d1], None).unwrap()
    }

    /// `(D, P+)` closed by the spectral condition at the far end.
    pub fn spectral_problem(&self) -> BvpProblem {
        let near = SpectralCondition::spectral(&self.symbol()).unwrap();
        closed_spectral_problem("random-spectral", self.operator(), near).unwrap()
    }

    /// `D` with a classical near condition and the spectral closing.
    pub fn classical_problem(&self, near: BoundaryCondition) -> BvpProblem {
        let mut p = self.spectral_problem();
        p.ends[0] = EndCondition::classical(near);
        p.with_name("random-classical")
    }
}

pub fn projection_symbol(rows: &[&[&str]]) -> ProjectionSymbol {
    ProjectionSymbol::new(sym(rows, 0)).unwrap()
}

/// Greedy matching of two eigenvalue lists; the largest matched distance.
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut left: Vec<C64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for z in a {
        let (k, d) = left
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|u, v| u.1.partial_cmp(&v.1).unwrap())
            .unwrap();
        worst = worst.max(d);
        left.remove(k);
    }
    worst
}
