use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{C64, ONE, ZERO};

/// A point of the collar cotangent bundle: boundary coordinate `x`, collar
/// coordinate `t`, tangential covariable `xi` and normal covariable `lambda`.
///
/// `lambda` is complex so that symbols can be evaluated at ODE roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolPoint {
    pub x: f64,
    pub t: f64,
    pub xi: f64,
    pub lambda: C64,
}

impl SymbolPoint {
    pub fn new(x: f64, t: f64, xi: f64, lambda: C64) -> Self {
        Self { x, t, xi, lambda }
    }

    pub fn boundary(x: f64, xi: f64) -> Self {
        Self::new(x, 0.0, xi, ZERO)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { xi: self.xi * s, lambda: self.lambda * s, ..*self }
    }
}

/// Scalar symbol expression. Every atom has a fixed homogeneity degree in
/// `(xi, lambda)`: `xi`, `absxi`, `lambda`, `rho` have degree one, the rest
/// degree zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(C64),
    /// Collar coordinate `t`.
    T,
    Lambda,
    Xi,
    AbsXi,
    /// `sign(xi)`, with `sgn(0) = 1`.
    Sgn,
    /// `sqrt(xi^2 + lambda^2)` for real lambda; the full cotangent length.
    Rho,
    /// `e^{ikx}`.
    Fourier(i32),
    Cos(i32),
    Sin(i32),
    /// Smooth cutoff in `t`: one for `t <= a`, zero for `t >= b`. When
    /// `reflected` the argument is `1 - t`.
    Cutoff { a: f64, b: f64, reflected: bool },
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
}

/// Smooth step used by [`Expr::Cutoff`].
pub fn smooth_cutoff(t: f64, a: f64, b: f64) -> f64 {
    if t <= a {
        return 1.0;
    }
    if t >= b {
        return 0.0;
    }
    let s = (t - a) / (b - a);
    let f = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    let num = f(1.0 - s);
    num / (num + f(s))
}

fn add_graded(mut a: Vec<C64>, b: Vec<C64>) -> Vec<C64> {
    if a.len() < b.len() {
        a.resize(b.len(), ZERO);
    }
    for (i, v) in b.into_iter().enumerate() {
        a[i] += v;
    }
    a
}

fn mul_graded(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == ZERO {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Expr {
    pub fn constant(z: C64) -> Self {
        Expr::Const(z)
    }

    pub fn real(r: f64) -> Self {
        Expr::Const(C64::new(r, 0.0))
    }

    pub fn zero() -> Self {
        Expr::Const(ZERO)
    }

    pub fn one() -> Self {
        Expr::Const(ONE)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(z) if *z == ZERO)
    }

    pub fn add(self, other: Expr) -> Expr {
        match (&self, &other) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
            _ if self.is_zero() => other,
            _ if other.is_zero() => self,
            _ => Expr::Add(Box::new(self), Box::new(other)),
        }
    }

    pub fn mul(self, other: Expr) -> Expr {
        match (&self, &other) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
            _ if self.is_zero() || other.is_zero() => Expr::zero(),
            (Expr::Const(a), _) if *a == ONE => other,
            (_, Expr::Const(b)) if *b == ONE => self,
            _ => Expr::Mul(Box::new(self), Box::new(other)),
        }
    }

    pub fn neg(self) -> Expr {
        match self {
            Expr::Const(a) => Expr::Const(-a),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(self, n: u32) -> Expr {
        match (n, &self) {
            (0, _) => Expr::one(),
            (1, _) => self,
            (_, Expr::Const(a)) => Expr::Const(a.powu(n)),
            _ => Expr::Pow(Box::new(self), n),
        }
    }

    /// Evaluation split by homogeneity degree: entry `d` holds the part of
    /// degree `d` in `(xi, lambda)`.
    pub fn eval_graded(&self, p: &SymbolPoint) -> Vec<C64> {
        match self {
            Expr::Const(z) => vec![*z],
            Expr::T => vec![C64::new(p.t, 0.0)],
            Expr::Lambda => vec![ZERO, p.lambda],
            Expr::Xi => vec![ZERO, C64::new(p.xi, 0.0)],
            Expr::AbsXi => vec![ZERO, C64::new(p.xi.abs(), 0.0)],
            Expr::Sgn => vec![C64::new(sgn(p.xi), 0.0)],
            Expr::Rho => vec![ZERO, (C64::new(p.xi * p.xi, 0.0) + p.lambda * p.lambda).sqrt()],
            Expr::Fourier(k) => vec![C64::from_polar(1.0, *k as f64 * p.x)],
            Expr::Cos(k) => vec![C64::new((*k as f64 * p.x).cos(), 0.0)],
            Expr::Sin(k) => vec![C64::new((*k as f64 * p.x).sin(), 0.0)],
            Expr::Cutoff { a, b, reflected } => {
                let t = if *reflected { 1.0 - p.t } else { p.t };
                vec![C64::new(smooth_cutoff(t, *a, *b), 0.0)]
            }
            Expr::Add(a, b) => add_graded(a.eval_graded(p), b.eval_graded(p)),
            Expr::Mul(a, b) => mul_graded(&a.eval_graded(p), &b.eval_graded(p)),
            Expr::Neg(a) => a.eval_graded(p).into_iter().map(|z| -z).collect(),
            Expr::Pow(a, n) => {
                let base = a.eval_graded(p);
                let mut acc = vec![ONE];
                for _ in 0..*n {
                    acc = mul_graded(&acc, &base);
                }
                acc
            }
        }
    }

    pub fn eval(&self, p: &SymbolPoint) -> C64 {
        self.eval_graded(p).into_iter().sum()
    }

    /// Highest homogeneity degree that can occur (structural bound).
    pub fn max_degree(&self) -> u32 {
        match self {
            Expr::Lambda | Expr::Xi | Expr::AbsXi | Expr::Rho => 1,
            Expr::Add(a, b) => a.max_degree().max(b.max_degree()),
            Expr::Mul(a, b) => a.max_degree() + b.max_degree(),
            Expr::Neg(a) => a.max_degree(),
            Expr::Pow(a, n) => a.max_degree() * n,
            _ => 0,
        }
    }

    /// Fourier bandwidth in `x`.
    pub fn bandwidth(&self) -> u32 {
        match self {
            Expr::Fourier(k) | Expr::Cos(k) | Expr::Sin(k) => k.unsigned_abs(),
            Expr::Add(a, b) => a.bandwidth().max(b.bandwidth()),
            Expr::Mul(a, b) => a.bandwidth() + b.bandwidth(),
            Expr::Neg(a) => a.bandwidth(),
            Expr::Pow(a, n) => a.bandwidth() * n,
            _ => 0,
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            Expr::T | Expr::Cutoff { .. } => true,
            Expr::Add(a, b) | Expr::Mul(a, b) => a.depends_on_t() || b.depends_on_t(),
            Expr::Neg(a) | Expr::Pow(a, _) => a.depends_on_t(),
            _ => false,
        }
    }

    pub fn depends_on_lambda(&self) -> bool {
        match self {
            Expr::Lambda | Expr::Rho => true,
            Expr::Add(a, b) | Expr::Mul(a, b) => a.depends_on_lambda() || b.depends_on_lambda(),
            Expr::Neg(a) | Expr::Pow(a, _) => a.depends_on_lambda(),
            _ => false,
        }
    }

    /// Substitute `(xi, lambda) -> (-xi, -lambda)`.
    pub fn antipodal(&self) -> Expr {
        self.map_atoms(&|e| match e {
            Expr::Lambda => Some(Expr::Lambda.neg()),
            Expr::Xi => Some(Expr::Xi.neg()),
            Expr::Sgn => Some(Expr::Sgn.neg()),
            _ => None,
        })
    }

    /// Substitute `(t, lambda) -> (1 - t, -lambda)`: the same operator seen
    /// from the opposite end of a unit collar.
    pub fn reflect_collar(&self) -> Expr {
        self.map_atoms(&|e| match e {
            Expr::Lambda => Some(Expr::Lambda.neg()),
            Expr::T => Some(Expr::one().add(Expr::T.neg())),
            Expr::Cutoff { a, b, reflected } => Some(Expr::Cutoff { a: *a, b: *b, reflected: !reflected }),
            _ => None,
        })
    }

    fn map_atoms(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        if let Some(r) = f(self) {
            return r;
        }
        match self {
            Expr::Add(a, b) => Expr::Add(Box::new(a.map_atoms(f)), Box::new(b.map_atoms(f))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.map_atoms(f)), Box::new(b.map_atoms(f))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_atoms(f))),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.map_atoms(f)), *n),
            other => other.clone(),
        }
    }
}

/// Sign with `sgn(0) = 1`, so the zero Fourier mode lands on the
/// nonnegative side of every splitting.
pub fn sgn(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn fmt_complex(z: C64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if z.im == 0.0 {
        write!(f, "{}", z.re)
    } else if z.re == 0.0 {
        write!(f, "{}*i", z.im)
    } else {
        write!(f, "({}+{}*i)", z.re, z.im)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(z) => fmt_complex(*z, f),
            Expr::T => write!(f, "t"),
            Expr::Lambda => write!(f, "lambda"),
            Expr::Xi => write!(f, "xi"),
            Expr::AbsXi => write!(f, "absxi"),
            Expr::Sgn => write!(f, "sgn"),
            Expr::Rho => write!(f, "rho"),
            Expr::Fourier(k) => write!(f, "e({k})"),
            Expr::Cos(k) => write!(f, "cos({k})"),
            Expr::Sin(k) => write!(f, "sin({k})"),
            Expr::Cutoff { a, b, reflected } => {
                if *reflected {
                    write!(f, "chir({a},{b})")
                } else {
                    write!(f, "chi({a},{b})")
                }
            }
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Pow(a, n) => write!(f, "({a})^{n}"),
        }
    }
}
