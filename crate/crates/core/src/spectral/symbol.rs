use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::symbol::{MatrixSymbol, SymbolFn, SymbolPoint};

pub const PARITY_TOL: f64 = 1e-10;
const IDEMPOTENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
    Neither,
}

/// Idempotent symbol of degree zero on the cosphere bundle of the circle.
#[derive(Debug, Clone)]
pub struct ProjectionSymbol {
    symbol: MatrixSymbol,
    pullback: bool,
    even: bool,
    odd: bool,
}

/// Sample points `(x, xi)` with `xi = +-1` used for every symbol-level test.
pub fn cosphere_samples(count: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(2 * count);
    for j in 0..count {
        let x = 2.0 * PI * (j as f64 + 0.25) / count as f64;
        out.push((x, 1.0));
        out.push((x, -1.0));
    }
    out
}

impl ProjectionSymbol {
    pub fn new(symbol: MatrixSymbol) -> Result<Self> {
        if symbol.rows() != symbol.cols() {
            return Err(Error::Shape(format!("projection symbol is {}x{}", symbol.rows(), symbol.cols())));
        }
        let symbol = symbol.with_degree(0);
        let mut worst = 0.0f64;
        let mut xi_dependent = false;
        let mut even = true;
        let mut odd = true;
        for (x, xi) in cosphere_samples(16) {
            if xi < 0.0 {
                continue;
            }
            let p = symbol.eval(&SymbolPoint::boundary(x, 1.0));
            let q = symbol.eval(&SymbolPoint::boundary(x, -1.0));
            worst = worst.max(linalg::max_abs_diff(&(&p * &p), &p));
            worst = worst.max(linalg::max_abs_diff(&(&q * &q), &q));
            let d = linalg::max_abs_diff(&p, &q);
            if d > 0.0 {
                xi_dependent = true;
            }
            even &= d <= PARITY_TOL;
            let n = p.nrows();
            odd &= linalg::max_abs_diff(&(&p + &q), &linalg::identity(n)) <= PARITY_TOL;
        }
        if worst > IDEMPOTENT_TOL {
            return Err(Error::Precondition(format!("projection symbol is not idempotent (residual {worst:.2e})")));
        }
        Ok(Self { pullback: !xi_dependent, symbol, even, odd })
    }

    pub fn constant(m: &CMat) -> Result<Self> {
        Self::new(MatrixSymbol::constant(m))
    }

    pub fn zero(rank: usize) -> Self {
        Self { symbol: MatrixSymbol::zero(rank, rank, 0), pullback: true, even: true, odd: rank == 0 }
    }

    pub fn identity(rank: usize) -> Self {
        Self { symbol: MatrixSymbol::identity(rank), pullback: true, even: true, odd: rank == 0 }
    }

    /// `P_+ sigma(A)`: projection onto the eigenvalues of the tangential symbol
    /// with nonnegative real part, along the rest.
    pub fn positive_part(a: &MatrixSymbol) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Shape("tangential symbol must be square".into()));
        }
        for (x, xi) in cosphere_samples(16) {
            let m = a.eval_principal(&SymbolPoint::boundary(x, xi));
            for ev in linalg::eigenvalues(&m) {
                if ev.re.abs() < PARITY_TOL {
                    return Err(Error::SpectralCut { eigenvalue: ev, tol: PARITY_TOL });
                }
            }
        }
        let x_ind = a.is_x_independent();
        let a = a.clone();
        let n = a.rows();
        let f: SymbolFn = Arc::new(move |p: &SymbolPoint| {
            let xi = if p.xi >= 0.0 { 1.0 } else { -1.0 };
            let m = a.eval_principal(&SymbolPoint::boundary(p.x, xi));
            linalg::spectral_projector(&m, |z| z.re >= 0.0).0
        });
        Self::new(MatrixSymbol::custom(n, n, 0, "P+(A)", x_ind, true, f))
    }

    pub fn symbol(&self) -> &MatrixSymbol {
        &self.symbol
    }

    pub fn rank(&self) -> usize {
        self.symbol.rows()
    }

    pub fn is_pullback(&self) -> bool {
        self.pullback
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    pub fn eval(&self, x: f64, xi: f64) -> CMat {
        self.symbol.eval(&SymbolPoint::boundary(x, xi))
    }

    /// Rank of the symbol's range at `xi = +1` and `xi = -1`.
    pub fn ranks(&self) -> (usize, usize) {
        let tr = |xi: f64| self.eval(0.0, xi).trace().re.round() as usize;
        (tr(1.0), tr(-1.0))
    }

    pub fn complement(&self) -> Self {
        let n = self.rank();
        let sym = MatrixSymbol::identity(n).add(&self.symbol.scale(crate::linalg::c(-1.0, 0.0))).expect("same shape");
        Self { symbol: sym.with_degree(0), pullback: self.pullback, even: self.even, odd: self.odd }
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let symbol = self.symbol.block_diag(&other.symbol)?;
        Ok(Self {
            symbol,
            pullback: self.pullback && other.pullback,
            even: self.even && other.even,
            odd: self.odd && other.odd,
        })
    }
}

pub fn parity_classify(p: &ProjectionSymbol) -> Parity {
    if p.even {
        Parity::Even
    } else if p.odd {
        Parity::Odd
    } else {
        Parity::Neither
    }
}
