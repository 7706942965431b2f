use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};

use super::expr::{Expr, SymbolPoint};
use super::parse::parse_expr;

pub type SymbolFn = Arc<dyn Fn(&SymbolPoint) -> CMat + Send + Sync>;

/// Closed-form evaluator of a matrix symbol.
#[derive(Clone)]
pub enum Evaluator {
    /// Row-major entries from the expression grammar.
    Exprs(Vec<Expr>),
    /// Derived symbols (homotopy stages, inverses) that are not polynomial
    /// in the grammar. Assumed homogeneous of the declared degree.
    Custom { f: SymbolFn, label: String, x_independent: bool, t_independent: bool },
}

/// Matrix-valued symbol, positively homogeneous of `degree` in `(xi, lambda)`.
#[derive(Clone)]
pub struct MatrixSymbol {
    rows: usize,
    cols: usize,
    degree: i32,
    evaluator: Evaluator,
}

impl fmt::Debug for MatrixSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("MatrixSymbol");
        d.field("rows", &self.rows).field("cols", &self.cols).field("degree", &self.degree);
        match &self.evaluator {
            Evaluator::Exprs(e) => d.field("entries", &e.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
            Evaluator::Custom { label, .. } => d.field("custom", label),
        };
        d.finish()
    }
}

impl MatrixSymbol {
    pub fn from_exprs(rows: usize, cols: usize, degree: i32, entries: Vec<Expr>) -> Result<Self> {
        if rows == 0 && cols == 0 {
            return Ok(Self { rows, cols, degree, evaluator: Evaluator::Exprs(Vec::new()) });
        }
        if entries.len() != rows * cols {
            return Err(Error::MalformedSymbol(format!(
                "{} entries for a {rows}x{cols} symbol",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, degree, evaluator: Evaluator::Exprs(entries) })
    }

    /// Parse a matrix given as rows of expression strings.
    pub fn parse(rows: &[Vec<String>], degree: i32) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        let mut entries = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::MalformedSymbol(format!("row {i} has {} entries, expected {c}", row.len())));
            }
            for (j, s) in row.iter().enumerate() {
                entries.push(parse_expr(s).map_err(|e| match e {
                    Error::Parse { location, message } => Error::Parse {
                        location: format!("entry ({i},{j}), {location}"),
                        message,
                    },
                    other => other,
                })?);
            }
        }
        Self::from_exprs(r, c, degree, entries)
    }

    pub fn custom(
        rows: usize,
        cols: usize,
        degree: i32,
        label: impl Into<String>,
        x_independent: bool,
        t_independent: bool,
        f: SymbolFn,
    ) -> Self {
        Self {
            rows,
            cols,
            degree,
            evaluator: Evaluator::Custom { f, label: label.into(), x_independent, t_independent },
        }
    }

    pub fn constant(m: &CMat) -> Self {
        let entries = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| Expr::Const(m[(i, j)]))
            .collect();
        Self { rows: m.nrows(), cols: m.ncols(), degree: 0, evaluator: Evaluator::Exprs(entries) }
    }

    pub fn scalar(e: Expr, degree: i32, n: usize) -> Self {
        let mut entries = vec![Expr::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = e.clone();
        }
        Self { rows: n, cols: n, degree, evaluator: Evaluator::Exprs(entries) }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(Expr::one(), 0, n)
    }

    pub fn zero(rows: usize, cols: usize, degree: i32) -> Self {
        Self { rows, cols, degree, evaluator: Evaluator::Exprs(vec![Expr::zero(); rows * cols]) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn with_degree(mut self, degree: i32) -> Self {
        self.degree = degree;
        self
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn entries(&self) -> Option<&[Expr]> {
        match &self.evaluator {
            Evaluator::Exprs(e) => Some(e),
            Evaluator::Custom { .. } => None,
        }
    }

    pub fn eval(&self, p: &SymbolPoint) -> CMat {
        match &self.evaluator {
            Evaluator::Exprs(e) => {
                let mut m = CMat::zeros(self.rows, self.cols);
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        m[(i, j)] = e[i * self.cols + j].eval(p);
                    }
                }
                m
            }
            Evaluator::Custom { f, .. } => f(p),
        }
    }

    /// Part of exact homogeneity `degree`; lower-order terms are discarded.
    pub fn eval_principal(&self, p: &SymbolPoint) -> CMat {
        match &self.evaluator {
            Evaluator::Exprs(e) => {
                let mut m = CMat::zeros(self.rows, self.cols);
                if self.degree < 0 {
                    return self.eval(p);
                }
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        let g = e[i * self.cols + j].eval_graded(p);
                        m[(i, j)] = g.get(self.degree as usize).copied().unwrap_or(ZERO);
                    }
                }
                m
            }
            Evaluator::Custom { f, .. } => f(p),
        }
    }

    pub fn is_x_independent(&self) -> bool {
        match &self.evaluator {
            Evaluator::Exprs(e) => e.iter().all(|x| x.bandwidth() == 0),
            Evaluator::Custom { x_independent, .. } => *x_independent,
        }
    }

    pub fn is_t_independent(&self) -> bool {
        match &self.evaluator {
            Evaluator::Exprs(e) => e.iter().all(|x| !x.depends_on_t()),
            Evaluator::Custom { t_independent, .. } => *t_independent,
        }
    }

    pub fn depends_on_lambda(&self) -> bool {
        match &self.evaluator {
            Evaluator::Exprs(e) => e.iter().any(|x| x.depends_on_lambda()),
            Evaluator::Custom { .. } => true,
        }
    }

    /// Fourier bandwidth in `x`; `None` for custom symbols that depend on `x`.
    pub fn bandwidth(&self) -> Option<u32> {
        match &self.evaluator {
            Evaluator::Exprs(e) => Some(e.iter().map(|x| x.bandwidth()).max().unwrap_or(0)),
            Evaluator::Custom { x_independent: true, .. } => Some(0),
            Evaluator::Custom { .. } => None,
        }
    }

    fn map_custom(&self, label: &str, g: impl Fn(&SymbolPoint) -> SymbolPoint + Send + Sync + 'static) -> Self {
        let inner = self.clone();
        let (xi, ti) = (self.is_x_independent(), self.is_t_independent());
        Self::custom(
            self.rows,
            self.cols,
            self.degree,
            format!("{label}({})", self.label()),
            xi,
            ti,
            Arc::new(move |p| inner.eval(&g(p))),
        )
    }

    pub fn label(&self) -> String {
        match &self.evaluator {
            Evaluator::Exprs(_) => "expr".into(),
            Evaluator::Custom { label, .. } => label.clone(),
        }
    }

    /// Pullback by the antipodal involution `(xi, lambda) -> (-xi, -lambda)`.
    pub fn alpha_pullback(&self) -> Self {
        match &self.evaluator {
            Evaluator::Exprs(e) => Self {
                evaluator: Evaluator::Exprs(e.iter().map(Expr::antipodal).collect()),
                ..self.clone()
            },
            Evaluator::Custom { .. } => self.map_custom("alpha", |p| SymbolPoint { xi: -p.xi, lambda: -p.lambda, ..*p }),
        }
    }

    /// Re-express in the inward coordinate of the opposite collar end.
    pub fn reflect_collar(&self) -> Self {
        match &self.evaluator {
            Evaluator::Exprs(e) => Self {
                evaluator: Evaluator::Exprs(e.iter().map(Expr::reflect_collar).collect()),
                ..self.clone()
            },
            Evaluator::Custom { .. } => {
                self.map_custom("reflect", |p| SymbolPoint { t: 1.0 - p.t, lambda: -p.lambda, ..*p })
            }
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        match &self.evaluator {
            Evaluator::Exprs(e) => Self {
                evaluator: Evaluator::Exprs(e.iter().map(|x| Expr::Const(z).mul(x.clone())).collect()),
                ..self.clone()
            },
            Evaluator::Custom { .. } => {
                let inner = self.clone();
                Self::custom(
                    self.rows,
                    self.cols,
                    self.degree,
                    self.label(),
                    self.is_x_independent(),
                    self.is_t_independent(),
                    Arc::new(move |p| inner.eval(p) * z),
                )
            }
        }
    }

    /// Matrix product; degrees add.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let degree = self.degree + other.degree;
        match (&self.evaluator, &other.evaluator) {
            (Evaluator::Exprs(a), Evaluator::Exprs(b)) => {
                let mut entries = Vec::with_capacity(self.rows * other.cols);
                for i in 0..self.rows {
                    for j in 0..other.cols {
                        let mut acc = Expr::zero();
                        for k in 0..self.cols {
                            acc = acc.add(a[i * self.cols + k].clone().mul(b[k * other.cols + j].clone()));
                        }
                        entries.push(acc);
                    }
                }
                Self::from_exprs(self.rows, other.cols, degree, entries)
            }
            _ => {
                let (l, r) = (self.clone(), other.clone());
                Ok(Self::custom(
                    self.rows,
                    other.cols,
                    degree,
                    format!("({})*({})", self.label(), other.label()),
                    self.is_x_independent() && other.is_x_independent(),
                    self.is_t_independent() && other.is_t_independent(),
                    Arc::new(move |p| l.eval(p) * r.eval(p)),
                ))
            }
        }
    }

    /// Entrywise sum; keeps the degree of `self`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!("cannot add {:?} and {:?}", self.shape(), other.shape())));
        }
        match (&self.evaluator, &other.evaluator) {
            (Evaluator::Exprs(a), Evaluator::Exprs(b)) => Self::from_exprs(
                self.rows,
                self.cols,
                self.degree,
                a.iter().zip(b).map(|(x, y)| x.clone().add(y.clone())).collect(),
            ),
            _ => {
                let (l, r) = (self.clone(), other.clone());
                Ok(Self::custom(
                    self.rows,
                    self.cols,
                    self.degree,
                    format!("({})+({})", self.label(), other.label()),
                    self.is_x_independent() && other.is_x_independent(),
                    self.is_t_independent() && other.is_t_independent(),
                    Arc::new(move |p| l.eval(p) + r.eval(p)),
                ))
            }
        }
    }

    /// Block-diagonal sum. Degrees must agree unless one side is empty.
    pub fn block_diag(&self, other: &Self) -> Result<Self> {
        let degree = if self.rows == 0 && self.cols == 0 {
            other.degree
        } else if other.rows == 0 && other.cols == 0 {
            self.degree
        } else if self.degree != other.degree {
            return Err(Error::IncompatibleSum(format!("degrees {} and {}", self.degree, other.degree)));
        } else {
            self.degree
        };
        let (r, c) = (self.rows + other.rows, self.cols + other.cols);
        match (&self.evaluator, &other.evaluator) {
            (Evaluator::Exprs(a), Evaluator::Exprs(b)) => {
                let mut entries = vec![Expr::zero(); r * c];
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        entries[i * c + j] = a[i * self.cols + j].clone();
                    }
                }
                for i in 0..other.rows {
                    for j in 0..other.cols {
                        entries[(self.rows + i) * c + self.cols + j] = b[i * other.cols + j].clone();
                    }
                }
                Self::from_exprs(r, c, degree, entries)
            }
            _ => {
                let (l, rr) = (self.clone(), other.clone());
                Ok(Self::custom(
                    r,
                    c,
                    degree,
                    format!("({})+({})", self.label(), other.label()),
                    self.is_x_independent() && other.is_x_independent(),
                    self.is_t_independent() && other.is_t_independent(),
                    Arc::new(move |p| linalg::block_diag(&l.eval(p), &rr.eval(p))),
                ))
            }
        }
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!("hstack of {} and {} rows", self.rows, other.rows)));
        }
        let (l, r) = (self.clone(), other.clone());
        match (&self.evaluator, &other.evaluator) {
            (Evaluator::Exprs(a), Evaluator::Exprs(b)) => {
                let c = self.cols + other.cols;
                let mut entries = Vec::with_capacity(self.rows * c);
                for i in 0..self.rows {
                    entries.extend_from_slice(&a[i * self.cols..(i + 1) * self.cols]);
                    entries.extend_from_slice(&b[i * other.cols..(i + 1) * other.cols]);
                }
                Self::from_exprs(self.rows, c, self.degree, entries)
            }
            _ => Ok(Self::custom(
                self.rows,
                self.cols + other.cols,
                self.degree,
                format!("[{}, {}]", self.label(), other.label()),
                self.is_x_independent() && other.is_x_independent(),
                self.is_t_independent() && other.is_t_independent(),
                Arc::new(move |p| linalg::hstack(&[&l.eval(p), &r.eval(p)])),
            )),
        }
    }

    /// String form of each entry, row-major; `None` for custom symbols.
    pub fn to_strings(&self) -> Option<Vec<Vec<String>>> {
        let e = self.entries()?;
        Some((0..self.rows).map(|i| (0..self.cols).map(|j| e[i * self.cols + j].to_string()).collect()).collect())
    }
}

/// Worst relative homogeneity defect `|a(s p) - s^d a(p)| / |s^d a(p)|` over
/// the given samples and scalings, computed on the principal part.
pub fn homogeneity_defect(sym: &MatrixSymbol, points: &[SymbolPoint], scales: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in points {
        let base = sym.eval_principal(p);
        let bn = base.norm();
        for &s in scales {
            let scaled = sym.eval_principal(&p.scaled(s));
            let expect = &base * C64::new(s.powi(sym.degree()), 0.0);
            let denom = expect.norm().max(bn * 1e-300).max(f64::MIN_POSITIVE);
            if bn == 0.0 && scaled.norm() == 0.0 {
                continue;
            }
            worst = worst.max((scaled - expect).norm() / denom);
        }
    }
    worst
}

/// Evaluate `sum_k coeffs[k] * lambda^(m-k)` for numeric coefficient
/// matrices, `m = coeffs.len() - 1`.
pub fn lambda_polynomial(coeffs: &[CMat], lambda: C64) -> CMat {
    let mut acc = CMat::zeros(coeffs[0].nrows(), coeffs[0].ncols());
    for c in coeffs {
        acc = acc * lambda + c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    fn sym(rows: &[&[&str]], degree: i32) -> MatrixSymbol {
        let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
        MatrixSymbol::parse(&rows, degree).unwrap()
    }

    #[test]
    fn identity_symbol_evaluates_to_identity() {
        let id = MatrixSymbol::identity(3);
        let p = SymbolPoint::new(0.4, 0.2, -3.0, C64::new(1.0, 2.0));
        assert_eq!(id.eval(&p), CMat::identity(3, 3));
    }

    #[test]
    fn examples_from_direct_substitution() {
        let q = sym(&[&["lambda^2 + xi^2"]], 2);
        assert!(q.eval(&SymbolPoint::new(0.0, 0.0, 1.0, I))[(0, 0)].norm() < 1e-15);
        let l = sym(&[&["lambda + i*absxi"]], 1);
        assert_eq!(l.eval(&SymbolPoint::new(0.0, 0.0, -1.0, ZERO))[(0, 0)], I);
    }

    #[test]
    fn alpha_pullback_examples() {
        let k = sym(&[&["2", "i"]], 0);
        let p = SymbolPoint::new(0.1, 0.0, 0.7, C64::new(0.3, 0.0));
        assert_eq!(k.alpha_pullback().eval(&p), k.eval(&p));
        let x = sym(&[&["xi"]], 1);
        assert_eq!(x.alpha_pullback().eval(&p)[(0, 0)], C64::new(-0.7, 0.0));
    }

    #[test]
    fn block_diag_shapes() {
        let a = MatrixSymbol::identity(2);
        let b = MatrixSymbol::identity(3);
        assert_eq!(a.block_diag(&b).unwrap().shape(), (5, 5));
        let empty = MatrixSymbol::zero(0, 0, 0);
        assert_eq!(a.block_diag(&empty).unwrap().shape(), (2, 2));
    }

    #[test]
    fn homogeneity_of_mixed_degree_principal_part() {
        let s = sym(&[&["lambda^2 + xi^2 + 3*xi + 1"]], 2);
        let pts = [SymbolPoint::new(0.0, 0.0, 0.6, C64::new(0.8, 0.0))];
        assert!(homogeneity_defect(&s, &pts, &[0.5, 2.0, 7.0]) < 1e-12);
    }
}
