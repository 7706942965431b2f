use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

use super::expr::{Expr, SymbolPoint};
use super::matrix::MatrixSymbol;

/// Near-boundary operator `D = sum_k D_k(t) (-i d/dt)^(m-k)` with tangential
/// coefficients `D_k` of degree `k` in `xi` and `D_0` the identity.
#[derive(Debug, Clone)]
pub struct CollarOperator {
    order: usize,
    rank: usize,
    coefficients: Vec<MatrixSymbol>,
    interior: Option<MatrixSymbol>,
}

impl CollarOperator {
    /// Build from `D_0, ..., D_m`. A constant invertible `D_0` is absorbed by
    /// left-multiplying every coefficient with its inverse.
    pub fn new(coefficients: Vec<MatrixSymbol>, interior: Option<MatrixSymbol>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Order("collar operator needs at least the coefficient D_0".into()));
        }
        let order = coefficients.len() - 1;
        let rank = coefficients[0].rows();
        for (k, c) in coefficients.iter().enumerate() {
            if c.shape() != (rank, rank) {
                return Err(Error::Shape(format!("coefficient D_{k} is {:?}, expected {rank}x{rank}", c.shape())));
            }
            if c.depends_on_lambda() && c.entries().is_some() {
                return Err(Error::MalformedSymbol(format!("coefficient D_{k} must not depend on lambda")));
            }
        }
        if let Some(int) = &interior {
            if int.shape() != (rank, rank) {
                return Err(Error::Shape(format!("interior symbol is {:?}, expected {rank}x{rank}", int.shape())));
            }
        }
        let mut coefficients: Vec<MatrixSymbol> =
            coefficients.into_iter().enumerate().map(|(k, c)| c.with_degree(k as i32)).collect();
        let d0 = &coefficients[0];
        let probe = [SymbolPoint::new(0.0, 0.0, 1.0, C64::new(0.0, 0.0)), SymbolPoint::new(1.3, 0.7, -2.0, C64::new(0.0, 0.0))];
        let d0_at: Vec<CMat> = probe.iter().map(|p| d0.eval(p)).collect();
        let constant = d0.is_x_independent()
            && d0.is_t_independent()
            && linalg::max_abs_diff(&d0_at[0], &d0_at[1]) == 0.0
            && d0.entries().map(|e| e.iter().all(|x| matches!(x, Expr::Const(_)))).unwrap_or(false);
        let identity = d0.is_x_independent()
            && d0.is_t_independent()
            && d0_at.iter().all(|m| linalg::is_identity(m, 0.0));
        if !identity {
            if !constant {
                return Err(Error::Normalization(
                    "leading coefficient D_0 must be a constant matrix to be normalized".into(),
                ));
            }
            let inv = linalg::inverse(&d0_at[0])
                .map_err(|_| Error::Normalization("leading coefficient D_0 is singular".into()))?;
            let inv_sym = MatrixSymbol::constant(&inv);
            coefficients = coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| inv_sym.mul(c).map(|s| s.with_degree(k as i32)))
                .collect::<Result<_>>()?;
            coefficients[0] = MatrixSymbol::identity(rank);
        }
        Ok(Self { order, rank, coefficients, interior })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coefficients(&self) -> &[MatrixSymbol] {
        &self.coefficients
    }

    pub fn interior(&self) -> Option<&MatrixSymbol> {
        self.interior.as_ref()
    }

    /// Numeric principal coefficients `D_0..D_m` at a point (lambda ignored).
    pub fn principal_coefficients_at(&self, x: f64, t: f64, xi: f64) -> Vec<CMat> {
        let p = SymbolPoint::new(x, t, xi, C64::new(0.0, 0.0));
        self.coefficients.iter().map(|c| c.eval_principal(&p)).collect()
    }

    /// Full coefficients including lower-order terms, used for quantization.
    pub fn full_coefficients_at(&self, x: f64, t: f64, xi: f64) -> Vec<CMat> {
        let p = SymbolPoint::new(x, t, xi, C64::new(0.0, 0.0));
        self.coefficients.iter().map(|c| c.eval(&p)).collect()
    }

    /// Principal symbol `sum_k D_k lambda^(m-k)` evaluated numerically.
    pub fn principal_symbol_at(&self, p: &SymbolPoint) -> CMat {
        let coeffs = self.principal_coefficients_at(p.x, p.t, p.xi);
        super::matrix::lambda_polynomial(&coeffs, p.lambda)
    }

    /// Principal symbol as a single matrix symbol of degree `m`.
    pub fn principal_symbol(&self) -> Result<MatrixSymbol> {
        let m = self.order;
        let mut acc = MatrixSymbol::zero(self.rank, self.rank, m as i32);
        for (k, c) in self.coefficients.iter().enumerate() {
            let lam = MatrixSymbol::scalar(Expr::Lambda.pow((m - k) as u32), (m - k) as i32, self.rank);
            acc = acc.add(&c.mul(&lam)?)?;
        }
        Ok(acc.with_degree(m as i32))
    }

    pub fn is_x_independent(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_x_independent())
    }

    pub fn is_t_independent(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_t_independent())
    }

    pub fn bandwidth(&self) -> Option<u32> {
        self.coefficients.iter().try_fold(0u32, |acc, c| c.bandwidth().map(|b| acc.max(b)))
    }

    /// The same operator in the inward coordinate `s = 1 - t` of the far end.
    pub fn reflect(&self) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let r = c.reflect_collar();
                if k % 2 == 1 {
                    r.scale(C64::new(-1.0, 0.0))
                } else {
                    r
                }
            })
            .collect();
        Self {
            order: self.order,
            rank: self.rank,
            coefficients,
            interior: self.interior.as_ref().map(|s| s.reflect_collar()),
        }
    }

    /// Operator with principal symbol `alpha^* sigma(D)`, renormalized.
    pub fn alpha_pullback(&self) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let r = c.alpha_pullback();
                if k % 2 == 1 {
                    r.scale(C64::new(-1.0, 0.0))
                } else {
                    r
                }
            })
            .collect();
        Self {
            order: self.order,
            rank: self.rank,
            coefficients,
            interior: self.interior.as_ref().map(|s| s.alpha_pullback()),
        }
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.order != other.order {
            return Err(Error::IncompatibleSum(format!("orders {} and {}", self.order, other.order)));
        }
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.block_diag(b))
            .collect::<Result<_>>()?;
        let interior = match (&self.interior, &other.interior) {
            (None, None) => None,
            (a, b) => {
                let a = a.clone().map(Ok).unwrap_or_else(|| self.principal_symbol())?;
                let b = b.clone().map(Ok).unwrap_or_else(|| other.principal_symbol())?;
                Some(a.block_diag(&b.with_degree(a.degree()))?)
            }
        };
        Ok(Self { order: self.order, rank: self.rank + other.rank, coefficients, interior })
    }

    pub fn with_interior(mut self, interior: Option<MatrixSymbol>) -> Self {
        self.interior = interior;
        self
    }
}

/// Boundary operator `B j^(m-1)`: jet coefficients `B_0..B_(m-1)`, each of
/// shape `rank(G) x rank(E)`.
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    jets: Vec<MatrixSymbol>,
    target_rank: usize,
}

impl BoundaryCondition {
    pub fn new(jets: Vec<MatrixSymbol>) -> Result<Self> {
        let first = jets.first().ok_or_else(|| Error::Shape("boundary condition needs jet coefficients".into()))?;
        let (g, n) = first.shape();
        for (k, b) in jets.iter().enumerate() {
            if b.shape() != (g, n) {
                return Err(Error::Shape(format!("jet coefficient B_{k} is {:?}, expected {g}x{n}", b.shape())));
            }
        }
        Ok(Self { jets, target_rank: g })
    }

    /// Dirichlet-type condition `u|_X`, padded with zero higher jets.
    pub fn trace(order: usize, rank: usize) -> Self {
        let mut jets = vec![MatrixSymbol::identity(rank)];
        for _ in 1..order {
            jets.push(MatrixSymbol::zero(rank, rank, 0));
        }
        Self { jets, target_rank: rank }
    }

    /// Zero-order condition `M u|_X` with a constant matrix `M`.
    pub fn from_matrix(order: usize, m: &CMat) -> Self {
        let mut jets = vec![MatrixSymbol::constant(m)];
        for _ in 1..order {
            jets.push(MatrixSymbol::zero(m.nrows(), m.ncols(), 0));
        }
        Self { jets, target_rank: m.nrows() }
    }

    pub fn jets(&self) -> &[MatrixSymbol] {
        &self.jets
    }

    pub fn jet_order(&self) -> usize {
        self.jets.len() - 1
    }

    pub fn order(&self) -> usize {
        self.jets.len()
    }

    pub fn target_rank(&self) -> usize {
        self.target_rank
    }

    pub fn source_rank(&self) -> usize {
        self.jets[0].cols()
    }

    /// `[B_0 | B_1 | ... | B_(m-1)]` at `(x, xi)`.
    pub fn stacked_at(&self, x: f64, xi: f64) -> CMat {
        let p = SymbolPoint::boundary(x, xi);
        let blocks: Vec<CMat> = self.jets.iter().map(|b| b.eval(&p)).collect();
        let refs: Vec<&CMat> = blocks.iter().collect();
        linalg::hstack(&refs)
    }

    pub fn is_x_independent(&self) -> bool {
        self.jets.iter().all(|b| b.is_x_independent())
    }

    pub fn bandwidth(&self) -> Option<u32> {
        self.jets.iter().try_fold(0u32, |acc, b| b.bandwidth().map(|w| acc.max(w)))
    }

    /// Block-diagonal sum acting on `E_a + E_b`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.jets.len() != other.jets.len() {
            return Err(Error::IncompatibleSum("jet orders differ".into()));
        }
        let jets = self
            .jets
            .iter()
            .zip(&other.jets)
            .map(|(a, b)| a.clone().with_degree(0).block_diag(&b.clone().with_degree(0)))
            .collect::<Result<_>>()?;
        Ok(Self { jets, target_rank: self.target_rank + other.target_rank })
    }

    /// Condition with no rows on a bundle of the given rank.
    pub fn empty(order: usize, rank: usize) -> Self {
        Self { jets: (0..order).map(|_| MatrixSymbol::zero(0, rank, 0)).collect(), target_rank: 0 }
    }

    pub fn left_multiply(&self, m: &MatrixSymbol) -> Result<Self> {
        let jets: Vec<MatrixSymbol> = self.jets.iter().map(|b| m.mul(b)).collect::<Result<_>>()?;
        let g = jets[0].rows();
        Ok(Self { jets, target_rank: g })
    }
}
