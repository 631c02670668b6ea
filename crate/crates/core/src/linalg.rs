//! Small dense helpers shared by the channel, FIM and design code.

use nalgebra::{DMatrix, DVector};

use crate::{CMatrix, CVector, C64};

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigen-decomposition of a real symmetric matrix with eigenvalues in ascending order.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// Largest entrywise deviation from Hermitian symmetry, relative to the largest entry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

/// `m^{-1/2}` for a Hermitian positive definite matrix; `None` when the condition
/// number exceeds `max_condition`.
pub fn inverse_sqrt(m: &CMatrix, max_condition: f64) -> Option<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m);
    let top = *vals.last()?;
    let bottom = vals[0];
    if !(bottom > 0.0) || top / bottom > max_condition {
        return None;
    }
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::new(l.powf(-0.5), 0.0)));
    Some(&vecs * CMatrix::from_diagonal(&d) * vecs.adjoint())
}

/// Factor `m = F F^H` of a Hermitian PSD matrix, keeping eigenpairs above
/// `rel_floor · λ_max`.
pub fn psd_factor(m: &CMatrix, rel_floor: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let top = vals.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| top > 0.0 && vals[i] > rel_floor * top)
        .collect();
    let mut f = CMatrix::zeros(m.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        let scale = C64::new(vals[i].sqrt(), 0.0);
        f.set_column(j, &(vecs.column(i) * scale));
    }
    f
}

/// Orthonormal basis for the span of `cols`, built by modified Gram-Schmidt with one
/// re-orthogonalisation pass. Columns whose residual falls below `rel_tol` times their
/// original norm are dropped.
pub fn orthonormal_span(cols: &CMatrix, rel_tol: f64) -> CMatrix {
    let mut basis: Vec<CVector> = Vec::new();
    for j in 0..cols.ncols() {
        let original = cols.column(j).into_owned();
        let norm0 = original.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = original;
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&v);
                v -= q * c;
            }
        }
        let norm = v.norm();
        if norm > rel_tol * norm0 {
            basis.push(v / C64::new(norm, 0.0));
        }
    }
    let mut out = CMatrix::zeros(cols.nrows(), basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Orthogonal projector `Q Q^H` onto the span of orthonormal columns.
pub fn projector(q: &CMatrix) -> CMatrix {
    q * q.adjoint()
}

/// Moore-Penrose projector onto the column span of an arbitrary matrix, from the
/// SVD of its real embedding `[[Re A, -Im A], [Im A, Re A]]`.
pub fn pinv_projector(a: &CMatrix, rel_tol: f64) -> CMatrix {
    let (m, n) = a.shape();
    let e = DMatrix::<f64>::from_fn(2 * m, 2 * n, |i, j| {
        let z = a[(i % m, j % n)];
        match (i < m, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let svd = e.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut r = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > rel_tol * top {
            let col = u.column(i);
            r += &col * col.transpose();
        }
    }
    CMatrix::from_fn(m, m, |i, j| C64::new(r[(i, j)], r[(i + m, j)]))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Hermitian matrix from a real parameter vector laid out as
/// `[diag (n), Re upper (n(n-1)/2), Im upper (n(n-1)/2)]`, upper entries row-major.
pub fn hermitian_from_params(p: &[f64], n: usize) -> CMatrix {
    assert_eq!(p.len(), n * n);
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c(p[i]);
    }
    let half = n * (n - 1) / 2;
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(p[n + k], p[n + half + k]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 1;
        }
    }
    m
}

/// Inverse of [`hermitian_from_params`].
pub fn hermitian_to_params(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let half = n * (n - 1) / 2;
    let mut p = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        p[i] = m[(i, i)].re;
        for j in (i + 1)..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            p[n + k] = z.re;
            p[n + half + k] = z.im;
            k += 1;
        }
    }
    p
}
