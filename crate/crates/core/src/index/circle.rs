//! Winding numbers of invertible matrix loops and the index of circle
//! operators `a+ P+ + a- P-` built from a pair of loops.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};
use crate::spectral::discrete::fourier_coefficients;
use crate::symbol::{Expr, MatrixSymbol, SymbolPoint};

use super::numeric::{rank_with_gap, REQUIRED_GAP};

pub const DEFAULT_WINDING_SAMPLES: usize = 256;
pub const DEFAULT_DET_TOL: f64 = 1e-8;
const MAX_SAMPLES: usize = 1 << 16;

fn accumulate(f: &dyn Fn(f64) -> CMat, samples: usize, tol: f64) -> Result<(i64, f64)> {
    let dets: Vec<C64> = (0..samples).map(|j| linalg::determinant(&f(2.0 * PI * j as f64 / samples as f64))).collect();
    let mut total = 0.0;
    let mut worst_step: f64 = 0.0;
    for j in 0..samples {
        let (a, b) = (dets[j], dets[(j + 1) % samples]);
        if a.norm() < tol {
            return Err(Error::Tolerance(format!(
                "loop is near-singular at x = {:.6} (|det| = {:.3e})",
                2.0 * PI * j as f64 / samples as f64,
                a.norm()
            )));
        }
        let step = (b / a).arg();
        worst_step = worst_step.max(step.abs());
        total += step;
    }
    Ok(((total / (2.0 * PI)).round() as i64, worst_step))
}

/// Winding number of `det f(x)` over `[0, 2pi)`. Sampling is refined until
/// no phase step exceeds `pi/4`, then confirmed at twice the resolution.
pub fn winding_of(f: &dyn Fn(f64) -> CMat, samples: usize, tol: f64) -> Result<i64> {
    let mut n = samples.max(8);
    loop {
        let (w, step) = accumulate(f, n, tol)?;
        if step <= PI / 4.0 {
            let (w2, _) = accumulate(f, 2 * n, tol)?;
            if w2 != w {
                return Err(Error::Tolerance(format!("winding changed from {w} to {w2} under sample doubling")));
            }
            return Ok(w);
        }
        if n >= MAX_SAMPLES {
            return Err(Error::Tolerance(format!("phase step {step:.3} still above pi/4 at {n} samples")));
        }
        n *= 2;
    }
}

fn loop_at(a: &MatrixSymbol, x: f64) -> CMat {
    a.eval(&SymbolPoint::boundary(x, 1.0))
}

/// Winding number of a square zero-order symbol on the circle (`xi = 1`).
pub fn circle_winding_index(a: &MatrixSymbol, samples: usize) -> Result<i64> {
    if a.rows() != a.cols() {
        return Err(Error::Shape(format!("loop must be square, got {}x{}", a.rows(), a.cols())));
    }
    winding_of(&|x| loop_at(a, x), samples, DEFAULT_DET_TOL)
}

/// Index of `T = a+ P+ + a- P-` from a tall section (for the kernel) and a
/// wide section (for the cokernel) of its Galerkin matrix. `P+` keeps the
/// modes `n >= 0`.
#[derive(Debug, Clone, Serialize)]
pub struct ToeplitzIndex {
    pub modes: usize,
    pub bandwidth: usize,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    pub gap: f64,
    pub determinate: bool,
}

fn loop_bandwidth(a: &MatrixSymbol) -> Result<usize> {
    a.bandwidth()
        .map(|b| b as usize)
        .ok_or_else(|| Error::Capability(format!("loop {} is not a finite Fourier sum", a.label())))
}

pub fn toeplitz_index(a_plus: &MatrixSymbol, a_minus: &MatrixSymbol, modes: usize) -> Result<ToeplitzIndex> {
    if a_plus.shape() != a_minus.shape() || a_plus.rows() != a_plus.cols() {
        return Err(Error::Shape("loops must be square and of equal size".into()));
    }
    let r = a_plus.rows();
    let k = loop_bandwidth(a_plus)?.max(loop_bandwidth(a_minus)?);
    let len = 2 * k + 1;
    let grid = |a: &MatrixSymbol| -> Vec<CMat> {
        (0..len).map(|j| loop_at(a, 2.0 * PI * j as f64 / len as f64)).collect()
    };
    let cp = fourier_coefficients(&grid(a_plus), k);
    let cm = fourier_coefficients(&grid(a_minus), k);
    let block = |dom: i64, rng: i64| -> CMat {
        let (nd, nr) = ((2 * dom + 1) as usize, (2 * rng + 1) as usize);
        let mut m = linalg::zeros(nr * r, nd * r);
        for (b, n) in (-dom..=dom).enumerate() {
            let coeffs = if n >= 0 { &cp } else { &cm };
            for (a, p) in (-rng..=rng).enumerate() {
                let d = p - n;
                if d.unsigned_abs() as usize <= k {
                    m.view_mut((a * r, b * r), (r, r)).copy_from(&coeffs[(d + k as i64) as usize]);
                }
            }
        }
        m
    };
    let (n, kk) = (modes as i64, k as i64);
    let tall = block(n, n + kk);
    let wide = block(n + kk, n);
    let tol = super::numeric::DEFAULT_RANK_TOL;
    let te = rank_with_gap(&tall, tol);
    let we = rank_with_gap(&wide, tol);
    let dim_ker = tall.ncols() - te.rank;
    let dim_coker = wide.nrows() - we.rank;
    let gap = te.gap.min(we.gap);
    Ok(ToeplitzIndex {
        modes,
        bandwidth: k,
        dim_ker,
        dim_coker,
        index: dim_ker as i64 - dim_coker as i64,
        gap,
        determinate: gap >= REQUIRED_GAP,
    })
}

/// Circle-operator index from winding data. The sign matches
/// [`toeplitz_index`]: `ind = wind(a-) - wind(a+)`.
pub fn winding_index(a_plus: &MatrixSymbol, a_minus: &MatrixSymbol, samples: usize) -> Result<(i64, i64, i64)> {
    let wp = circle_winding_index(a_plus, samples)?;
    let wm = circle_winding_index(a_minus, samples)?;
    Ok((wp, wm, wm - wp))
}

#[derive(Debug, Clone, Serialize)]
pub struct CobordismReport {
    pub winding_plus: i64,
    pub winding_minus: i64,
    pub index: i64,
    pub oracle: Option<ToeplitzIndex>,
    /// Both loops extend over the disk (winding zero).
    pub extendable: bool,
    pub consistent: bool,
}

pub fn cobordism_check(a_plus: &MatrixSymbol, a_minus: &MatrixSymbol, modes: usize) -> Result<CobordismReport> {
    let (wp, wm, index) = winding_index(a_plus, a_minus, DEFAULT_WINDING_SAMPLES)?;
    let oracle = match (a_plus.bandwidth(), a_minus.bandwidth()) {
        (Some(_), Some(_)) => Some(toeplitz_index(a_plus, a_minus, modes)?),
        _ => None,
    };
    let extendable = wp == 0 && wm == 0;
    let consistent = oracle.as_ref().is_none_or(|o| o.determinate && o.index == index) && (!extendable || index == 0);
    Ok(CobordismReport { winding_plus: wp, winding_minus: wm, index, oracle, extendable, consistent })
}

/// Boundary pair `(a+, a-)` of a disk operator `D-` with boundary condition
/// `b`: both sides are the restriction of `b` and its antipodal pullback.
pub fn pair_from_disk_condition(b: &MatrixSymbol) -> (MatrixSymbol, MatrixSymbol) {
    (b.clone(), b.alpha_pullback())
}

fn trig_entry<R: Rng>(rng: &mut R, base: C64, bandwidth: i32, scale: f64) -> Expr {
    let mut e = Expr::constant(base);
    for k in -bandwidth..=bandwidth {
        if k == 0 {
            continue;
        }
        let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
        e = e.add(Expr::constant(z).mul(Expr::Fourier(k)));
    }
    e
}

/// Random trigonometric loop `U + E(x)` with winding zero: `U` is a random
/// unitary and `|E(x)| < 1/2`, so the straight line to `U` stays invertible.
pub fn random_null_loop<R: Rng>(rng: &mut R, rank: usize, bandwidth: i32) -> MatrixSymbol {
    let raw = CMat::from_fn(rank, rank, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let u = linalg::unitary_polar(&(raw + linalg::identity(rank)));
    // each entry of E is bounded by 2 * bandwidth * sqrt(2) * scale
    let scale = 0.5 / (2.0 * bandwidth.max(1) as f64 * 2f64.sqrt() * rank as f64 + 1.0);
    let entries: Vec<Expr> = (0..rank * rank).map(|i| trig_entry(rng, u[(i / rank, i % rank)], bandwidth, scale)).collect();
    MatrixSymbol::from_exprs(rank, rank, 0, entries).expect("consistent shape")
}

/// Random pair of loops that both extend over the disk.
pub fn random_extendable_pair<R: Rng>(rng: &mut R, rank: usize, bandwidth: i32) -> (MatrixSymbol, MatrixSymbol) {
    let g = random_null_loop(rng, rank, bandwidth);
    let h = random_null_loop(rng, rank, bandwidth);
    let b = g.mul(&h).expect("square loops");
    let (ap, am) = pair_from_disk_condition(&b);
    (ap, am.mul(&random_null_loop(rng, rank, bandwidth)).expect("square loops"))
}
