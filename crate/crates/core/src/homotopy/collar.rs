use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbol::expr::smooth_cutoff;
use crate::symbol::{BvpProblem, CollarOperator, MatrixSymbol, SymbolFn, SymbolPoint};

use super::{HomotopyPath, ProblemFamily};

/// Smooth cutoff in the collar: one on `[0, a]`, zero from `b` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub a: f64,
    pub b: f64,
}

impl Cutoff {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a < b && b <= 0.5) {
            return Err(Error::InvalidCutoff(format!("need 0 < a < b <= 1/2, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn standard() -> Self {
        Self { a: 1.0 / 6.0, b: 0.5 }
    }

    pub fn at(&self, t: f64) -> f64 {
        smooth_cutoff(t, self.a, self.b)
    }
}

/// Family members by parameter, built once per distinct parameter.
#[derive(Clone)]
struct Memo {
    family: ProblemFamily,
    cache: Arc<Mutex<HashMap<u64, Arc<BvpProblem>>>>,
}

impl Memo {
    fn get(&self, s: f64) -> Option<Arc<BvpProblem>> {
        let key = s.to_bits();
        if let Some(p) = self.cache.lock().ok()?.get(&key) {
            return Some(p.clone());
        }
        let p = Arc::new((self.family)(s).ok()?);
        self.cache.lock().ok()?.insert(key, p.clone());
        Some(p)
    }
}

/// Problem whose collar coefficients at depth `t` are those of the base at
/// `s = t - psi(t) tau` when `s >= 0`, and of the path member at `-s`
/// evaluated at the boundary otherwise. The near condition is that of the
/// path at `tau`; beyond `b` nothing changes.
pub fn collar_pull(base: &BvpProblem, path: &HomotopyPath, cutoff: &Cutoff, tau: f64) -> Result<BvpProblem> {
    Cutoff::new(cutoff.a, cutoff.b)?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Precondition(format!("collar parameter {tau} outside [0, 1]")));
    }
    if tau == 0.0 {
        return Ok(base.clone());
    }
    let start = path.start();
    if start.rank() != base.rank() || start.order() != base.order() {
        return Err(Error::Shape(format!(
            "path of rank {} and order {} against a base of rank {} and order {}",
            start.rank(),
            start.order(),
            base.rank(),
            base.order()
        )));
    }
    let memo = Memo { family: path.family(), cache: Arc::new(Mutex::new(HashMap::new())) };
    let n = base.rank();
    let x_independent = base.operator.is_x_independent() && path.steps.iter().all(|p| p.operator.is_x_independent());
    let cut = *cutoff;
    let mut coefficients = vec![base.operator.coefficients()[0].clone()];
    for (k, own) in base.operator.coefficients().iter().enumerate().skip(1) {
        let (own, memo) = (own.clone(), memo.clone());
        let f: SymbolFn = Arc::new(move |p: &SymbolPoint| {
            let s = p.t - cut.at(p.t) * tau;
            if s >= 0.0 {
                return own.eval(&SymbolPoint { t: s, ..*p });
            }
            match memo.get(-s) {
                Some(m) => m.operator.coefficients()[k].eval(&SymbolPoint { t: 0.0, ..*p }),
                None => crate::linalg::CMat::from_element(n, n, crate::linalg::c(f64::NAN, 0.0)),
            }
        });
        coefficients.push(MatrixSymbol::custom(n, n, k as i32, format!("collar[{k},{tau:.4}]"), x_independent, false, f));
    }
    let operator = CollarOperator::new(coefficients, None)?;
    let near = path.at(tau)?.ends[0].clone();
    let ends = std::iter::once(near).chain(base.ends.iter().skip(1).cloned()).collect();
    BvpProblem::new(format!("{}.pulled", base.name), base.manifold.clone(), operator, ends)
}
