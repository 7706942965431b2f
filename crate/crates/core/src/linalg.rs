//! Dense complex linear algebra used throughout the crate: ordered Schur
//! forms, spectral projectors, null spaces and subspace comparisons.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, off), (rows, b.ncols())).copy_from(*b);
        off += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((off, 0), (b.nrows(), cols)).copy_from(*b);
        off += b.nrows();
    }
    out
}

/// Spectral norm (largest singular value).
pub fn norm2(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

pub fn min_singular_value(a: &CMat) -> f64 {
    if a.nrows() != a.ncols() {
        // rectangular: smallest of the min(r, c) values; zero if a dimension is empty
        if a.is_empty() {
            return 0.0;
        }
    }
    singular_values(a).last().copied().unwrap_or(0.0)
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!("cannot invert {}x{} matrix", a.nrows(), a.ncols())));
    }
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Shape("singular matrix".into()))
}

pub fn determinant(a: &CMat) -> C64 {
    if a.nrows() == 0 {
        return ONE;
    }
    a.clone().lu().determinant()
}

/// Complex Schur form `A = Q T Q^H` with `T` upper triangular.
pub fn schur(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (zeros(0, 0), zeros(0, 0));
    }
    // a nearly scalar matrix leaves only rounding noise below the diagonal,
    // which the QR iteration cannot reduce relative to the diagonal
    let mean = a.trace() / c(n as f64, 0.0);
    let shifted = a - CMat::identity(n, n) * mean;
    let max_iter = 500 * n.max(4);
    let (q, mut t) = [f64::EPSILON, 64.0 * f64::EPSILON]
        .iter()
        .find_map(|&eps| nalgebra::linalg::Schur::try_new(shifted.clone(), eps, max_iter))
        .expect("Schur iteration converges")
        .unpack();
    for j in 0..n {
        t[(j, j)] += mean;
        for i in (j + 1)..n {
            t[(i, j)] = ZERO;
        }
    }
    (q, t)
}

/// Swap the adjacent diagonal entries `j`, `j+1` of the triangular factor.
fn swap_adjacent(q: &mut CMat, t: &mut CMat, j: usize) {
    let a = t[(j, j)];
    let b = t[(j + 1, j + 1)];
    let cc = t[(j, j + 1)];
    let x1 = cc;
    let x2 = b - a;
    let r = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if r == 0.0 {
        return;
    }
    let (x1, x2) = (x1 / r, x2 / r);
    // Z = [[x1, -conj(x2)], [x2, conj(x1)]], first column is the eigenvector of b
    let z = [[x1, -x2.conj()], [x2, x1.conj()]];
    let n = t.nrows();
    // rows j, j+1 <- Z^H rows
    for col in 0..n {
        let u = t[(j, col)];
        let v = t[(j + 1, col)];
        t[(j, col)] = z[0][0].conj() * u + z[1][0].conj() * v;
        t[(j + 1, col)] = z[0][1].conj() * u + z[1][1].conj() * v;
    }
    // cols j, j+1 <- cols Z
    for row in 0..n {
        let u = t[(row, j)];
        let v = t[(row, j + 1)];
        t[(row, j)] = u * z[0][0] + v * z[1][0];
        t[(row, j + 1)] = u * z[0][1] + v * z[1][1];
    }
    for row in 0..q.nrows() {
        let u = q[(row, j)];
        let v = q[(row, j + 1)];
        q[(row, j)] = u * z[0][0] + v * z[1][0];
        q[(row, j + 1)] = u * z[0][1] + v * z[1][1];
    }
    t[(j + 1, j)] = ZERO;
    t[(j, j)] = b;
    t[(j + 1, j + 1)] = a;
}

/// Ordered Schur form: eigenvalues for which `select` holds are moved to the
/// leading block. Within each block the eigenvalues are sorted by real part,
/// then imaginary part. Returns `(Q, T, k)` with `k` the leading block size.
pub fn ordered_schur<F: Fn(C64) -> bool>(a: &CMat, select: F) -> (CMat, CMat, usize) {
    let (mut q, mut t) = schur(a);
    let n = t.nrows();
    let key = |z: C64| -> (u8, f64, f64) { (if select(z) { 0 } else { 1 }, z.re, z.im) };
    // bubble sort with adjacent swaps; n is small
    for pass in 0..n {
        let mut swapped = false;
        for j in 0..n.saturating_sub(1 + pass) {
            let kj = key(t[(j, j)]);
            let kn = key(t[(j + 1, j + 1)]);
            if kn < kj {
                swap_adjacent(&mut q, &mut t, j);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    let k = (0..n).filter(|&j| select(t[(j, j)])).count();
    (q, t, k)
}

pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    let (_, t) = schur(a);
    let mut ev: Vec<C64> = (0..t.nrows()).map(|j| t[(j, j)]).collect();
    ev.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
    ev
}

/// Solve `T11 X - X T22 = C` for upper-triangular `T11`, `T22`.
pub fn sylvester_triangular(t11: &CMat, t22: &CMat, rhs: &CMat) -> CMat {
    let k = t11.nrows();
    let l = t22.nrows();
    let mut x = zeros(k, l);
    for j in 0..l {
        let mut b: Vec<C64> = (0..k).map(|i| rhs[(i, j)]).collect();
        for p in 0..j {
            let s = t22[(p, j)];
            if s != ZERO {
                for i in 0..k {
                    b[i] += x[(i, p)] * s;
                }
            }
        }
        let shift = t22[(j, j)];
        for i in (0..k).rev() {
            let mut acc = b[i];
            for p in (i + 1)..k {
                acc -= t11[(i, p)] * x[(p, j)];
            }
            x[(i, j)] = acc / (t11[(i, i)] - shift);
        }
    }
    x
}

/// Orthonormal basis of the invariant subspace belonging to the selected
/// eigenvalues.
pub fn invariant_subspace<F: Fn(C64) -> bool>(a: &CMat, select: F) -> CMat {
    let (q, _, k) = ordered_schur(a, select);
    q.columns(0, k).into_owned()
}

/// Spectral projector onto the invariant subspace of the selected eigenvalues
/// along the complementary invariant subspace. Returns `(P, rank)`.
pub fn spectral_projector<F: Fn(C64) -> bool>(a: &CMat, select: F) -> (CMat, usize) {
    let n = a.nrows();
    let (q, t, k) = ordered_schur(a, select);
    let mut core = zeros(n, n);
    for i in 0..k {
        core[(i, i)] = ONE;
    }
    if k > 0 && k < n {
        let t11 = t.view((0, 0), (k, k)).into_owned();
        let t22 = t.view((k, k), (n - k, n - k)).into_owned();
        let t12 = t.view((0, k), (k, n - k)).into_owned();
        let x = sylvester_triangular(&t11, &t22, &t12);
        core.view_mut((0, k), (k, n - k)).copy_from(&x);
    }
    (&q * core * q.adjoint(), k)
}

/// Orthonormal basis of the column space, using a relative singular-value
/// threshold.
pub fn orth(a: &CMat, rel_tol: f64) -> CMat {
    if a.ncols() == 0 || a.nrows() == 0 {
        return zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.unwrap();
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] > rel_tol * smax.max(f64::MIN_POSITIVE)).collect();
    idx.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
    let mut out = zeros(a.nrows(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Right null space from a full SVD: columns of V whose singular values fall
/// below `rel_tol * sigma_max`. Also returns all singular values (descending,
/// padded with zeros up to the column count).
pub fn null_space(a: &CMat, rel_tol: f64) -> (CMat, Vec<f64>) {
    let (r, cols) = a.shape();
    if cols == 0 {
        return (zeros(0, 0), Vec::new());
    }
    if r == 0 {
        return (identity(cols), vec![0.0; cols]);
    }
    // pad to square so that V is complete
    let work = if r < cols { vstack(&[a, &zeros(cols - r, cols)]) } else { a.clone() };
    let svd = work.svd(false, true);
    let vt = svd.v_t.unwrap();
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let thresh = rel_tol * smax;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
    let null_idx: Vec<usize> = order.iter().copied().filter(|&i| s[i] <= thresh).collect();
    let mut basis = zeros(cols, null_idx.len());
    for (c, &i) in null_idx.iter().enumerate() {
        for k in 0..cols {
            basis[(k, c)] = vt[(i, k)].conj();
        }
    }
    let sorted: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    (basis, sorted)
}

/// Sine of the largest principal angle between two orthonormal frames.
/// Frames of different dimension are maximally apart (returns 1).
pub fn max_principal_angle_sin(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let resid = a - b * (b.adjoint() * a);
    let r2 = b - a * (a.adjoint() * b);
    norm2(&resid).max(norm2(&r2)).min(1.0)
}

/// Canonical orthonormal basis of the column space of an orthonormal frame:
/// pivoted Gram-Schmidt on the projected standard basis, ties broken by the
/// lowest index, with each column phased so its pivot entry is real positive.
pub fn canonical_frame(q: &CMat) -> CMat {
    let n = q.nrows();
    let k = q.ncols();
    if k == 0 {
        return zeros(n, 0);
    }
    let proj = q * q.adjoint();
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    for _ in 0..k {
        let mut best: Option<(usize, nalgebra::DVector<C64>, f64)> = None;
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut v = proj.column(i).into_owned();
            for w in &cols {
                let coeff = w.dotc(&v);
                v -= w * coeff;
            }
            let nv = v.norm();
            let better = match &best {
                None => true,
                Some((_, _, bn)) => nv > bn * (1.0 + 1e-9) + 1e-14,
            };
            if better {
                best = Some((i, v, nv));
            }
        }
        let (i, mut v, nv) = best.expect("frame rank exceeds ambient dimension");
        used[i] = true;
        v /= C64::new(nv, 0.0);
        let piv = v[i];
        if piv.norm() > 0.0 {
            v *= piv.conj() / piv.norm();
        }
        cols.push(v);
    }
    let mut out = zeros(n, k);
    for (j, v) in cols.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Unitary polar factor `U` of `B = U H`.
pub fn unitary_polar(b: &CMat) -> CMat {
    let svd = b.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Hermitian positive square root of a Hermitian positive semidefinite matrix.
pub fn hermitian_sqrt(a: &CMat) -> CMat {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn is_identity(a: &CMat, tol: f64) -> bool {
    a.nrows() == a.ncols() && max_abs_diff(a, &identity(a.nrows())) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        CMat::from_row_slice(
            4,
            4,
            &[
                c(1.0, 2.0), c(0.0, 1.0), c(3.0, 0.0), c(0.2, 0.0),
                c(1.0, 0.0), c(2.0, -1.0), c(0.0, 0.5), c(1.0, 1.0),
                c(0.0, 0.0), c(1.0, 1.0), c(-1.0, 0.0), c(0.3, -0.2),
                c(0.5, 0.0), c(0.0, -1.0), c(2.0, 2.0), c(-2.0, 0.5),
            ],
        )
    }

    #[test]
    fn ordered_schur_reconstructs_and_orders() {
        let a = sample();
        let (q, t, k) = ordered_schur(&a, |z| z.im > 0.0);
        assert!((&q * &t * q.adjoint() - &a).norm() < 1e-12);
        assert!((q.adjoint() * &q - identity(4)).norm() < 1e-12);
        for j in 0..4 {
            assert_eq!(t[(j, j)].im > 0.0, j < k);
        }
    }

    #[test]
    fn spectral_projector_is_idempotent_and_commutes() {
        let a = sample();
        let (p, k) = spectral_projector(&a, |z| z.re >= 0.0);
        assert!((&p * &p - &p).norm() < 1e-10);
        assert!((&a * &p - &p * &a).norm() < 1e-10);
        let tr: C64 = (0..4).map(|i| p[(i, i)]).sum();
        assert!((tr.re - k as f64).abs() < 1e-10);
    }

    #[test]
    fn defective_matrix_invariant_subspace() {
        // Jordan block at i plus a simple eigenvalue -i
        let a = CMat::from_row_slice(3, 3, &[I, ONE, ZERO, ZERO, I, ZERO, ZERO, ZERO, -I]);
        let v = invariant_subspace(&a, |z| z.im > 0.0);
        assert_eq!(v.ncols(), 2);
        let expect = CMat::from_row_slice(3, 2, &[ONE, ZERO, ZERO, ONE, ZERO, ZERO]);
        assert!(max_principal_angle_sin(&canonical_frame(&v), &expect) < 1e-12);
    }

    #[test]
    fn canonical_frame_is_basis_independent() {
        let v = CMat::from_row_slice(3, 2, &[ONE, ZERO, I, ONE, ZERO, c(0.0, -1.0)]);
        let q1 = orth(&v, 1e-12);
        let rot = CMat::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0)]);
        let q2 = &q1 * rot;
        assert!(max_abs_diff(&canonical_frame(&q1), &canonical_frame(&q2)) < 1e-12);
    }

    #[test]
    fn null_space_of_rank_deficient() {
        let a = CMat::from_row_slice(2, 3, &[ONE, ONE, ZERO, ZERO, ZERO, ONE]);
        let (ns, s) = null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 1);
        assert!((&a * &ns).norm() < 1e-12);
        assert_eq!(s.len(), 3);
    }
}
