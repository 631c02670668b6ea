//! Conic programs over the nonnegative orthant and real PSD cones.
//!
//! Problems are stored in the form
//!
//! ```text
//! minimize    c^T x
//! subject to  A x = b
//!             G x + s = h,   s ∈ K
//! ```
//!
//! with `K` a product of one orthant followed by PSD cones in scaled-vector
//! (svec) layout: the lower triangle column by column, off-diagonal entries
//! multiplied by √2 so that `svec(X)·svec(Y) = tr(XY)`.

mod admm;
mod ipm;
mod sdpa;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use admm::solve_admm;
pub use ipm::solve;
pub use sdpa::write_sdpa;

use crate::error::{Error, Result};
use crate::{linalg, CMatrix, RMatrix, RVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Nonneg(usize),
    /// Real symmetric PSD matrices of the given order.
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg(m) => m,
            Cone::Psd(p) => p * (p + 1) / 2,
        }
    }

    /// Barrier degree.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg(m) => m,
            Cone::Psd(p) => p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub c: RVector,
    pub a: RMatrix,
    pub b: RVector,
    pub g: RMatrix,
    pub h: RVector,
    pub cones: Vec<Cone>,
    /// Named variable ranges for diagnostics.
    pub var_names: Vec<(String, Range<usize>)>,
}

impl ConicProblem {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn cone_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|k| {
                let r = start..start + k.dim();
                start += k.dim();
                r
            })
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.c.len();
        let m: usize = self.cones.iter().map(Cone::dim).sum();
        let ok = self.g.ncols() == n
            && self.g.nrows() == m
            && self.h.len() == m
            && self.a.ncols() == n
            && self.a.nrows() == self.b.len();
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "conic problem: c {n}, G {}×{}, h {}, cones {m}, A {}×{}, b {}",
                self.g.nrows(),
                self.g.ncols(),
                self.h.len(),
                self.a.nrows(),
                self.a.ncols(),
                self.b.len()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Eigenvalue clamp used when post-processing PSD outputs.
    pub psd_eig_floor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_iters: 10_000,
            psd_eig_floor: 1e-9,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_iters > 0 && self.psd_eig_floor > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(vec![crate::scenario::Violation::NonPositive("solver settings")]))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: RVector,
    pub y: RVector,
    pub z: RVector,
    pub s: RVector,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

// ---------------------------------------------------------------------------
// svec and embeddings
// ---------------------------------------------------------------------------

/// Position of `(i, j)` in the svec of an order-`p` matrix. Column `j` of the
/// lower triangle starts at `Σ_{c<j} (p - c)`.
pub fn svec_index(p: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * p - j * j.saturating_sub(1) / 2 + (i - j)
}

pub fn svec(m: &RMatrix) -> RVector {
    let p = m.nrows();
    let mut out = RVector::zeros(p * (p + 1) / 2);
    let mut k = 0;
    for j in 0..p {
        for i in j..p {
            out[k] = if i == j { m[(i, j)] } else { std::f64::consts::SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]) };
            k += 1;
        }
    }
    out
}

pub fn smat(v: &[f64], p: usize) -> RMatrix {
    let mut m = RMatrix::zeros(p, p);
    let mut k = 0;
    for j in 0..p {
        for i in j..p {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

/// `[[Re H, -Im H], [Im H, Re H]]`. `H ⪰ 0` iff the embedding is PSD, and its trace
/// is twice that of `H`.
pub fn hermitian_to_real_embedding(h: &CMatrix) -> Result<RMatrix> {
    let defect = linalg::hermitian_defect(h);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(format!("relative defect {defect:e}")));
    }
    Ok(embed(h))
}

pub(crate) fn embed(h: &CMatrix) -> RMatrix {
    let n = h.nrows();
    let mut m = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            m[(i, j)] = z.re;
            m[(i + n, j + n)] = z.re;
            m[(i, j + n)] = -z.im;
            m[(i + n, j)] = z.im;
        }
    }
    m
}

/// Inverse of [`hermitian_to_real_embedding`], averaging the redundant blocks.
pub fn real_embedding_to_hermitian(m: &RMatrix) -> CMatrix {
    let n = m.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        C64::new(
            0.5 * (m[(i, j)] + m[(i + n, j + n)]),
            0.5 * (m[(i + n, j)] - m[(i, j + n)]),
        )
    })
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

/// Affine symmetric matrix `M0 + Σ x_i M_i`.
struct Lmi {
    order: usize,
    constant: RMatrix,
    terms: Vec<(usize, RMatrix)>,
}

/// Incremental construction of a [`ConicProblem`] from variables, linear
/// inequalities `a·x + c ≥ 0`, equalities and LMIs `M(x) ⪰ 0`.
#[derive(Default)]
pub struct ProblemBuilder {
    objective: Vec<f64>,
    names: Vec<(String, Range<usize>)>,
    linear: Vec<(Vec<(usize, f64)>, f64)>,
    equalities: Vec<(Vec<(usize, f64)>, f64)>,
    lmis: Vec<Lmi>,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vars(&mut self, name: impl Into<String>, count: usize) -> Range<usize> {
        let start = self.objective.len();
        self.objective.resize(start + count, 0.0);
        let r = start..start + count;
        self.names.push((name.into(), r.clone()));
        r
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_cost(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    /// `Σ a_i x_i + constant ≥ 0`.
    pub fn add_linear_ge(&mut self, coeffs: Vec<(usize, f64)>, constant: f64) {
        self.linear.push((coeffs, constant));
    }

    /// `Σ a_i x_i = rhs`.
    pub fn add_equality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push((coeffs, rhs));
    }

    /// `constant + Σ x_i M_i ⪰ 0`; the matrices are symmetrized.
    pub fn add_lmi(&mut self, constant: RMatrix, terms: Vec<(usize, RMatrix)>) {
        let order = constant.nrows();
        self.lmis.push(Lmi { order, constant, terms });
    }

    pub fn build(self) -> ConicProblem {
        let n = self.objective.len();
        let mut cones = Vec::new();
        let m_lin = self.linear.len();
        if m_lin > 0 {
            cones.push(Cone::Nonneg(m_lin));
        }
        for l in &self.lmis {
            cones.push(Cone::Psd(l.order));
        }
        let m: usize = cones.iter().map(Cone::dim).sum();
        let mut g = RMatrix::zeros(m, n);
        let mut h = RVector::zeros(m);
        // s = a·x + constant  ⇒  G = -a, h = constant
        for (row, (coeffs, constant)) in self.linear.iter().enumerate() {
            for &(j, a) in coeffs {
                g[(row, j)] -= a;
            }
            h[row] = *constant;
        }
        let mut offset = m_lin;
        for l in &self.lmis {
            let d = l.order * (l.order + 1) / 2;
            h.rows_mut(offset, d).copy_from(&svec(&l.constant));
            for (j, mj) in &l.terms {
                let col = svec(mj);
                for k in 0..d {
                    g[(offset + k, *j)] -= col[k];
                }
            }
            offset += d;
        }
        let p = self.equalities.len();
        let mut a = RMatrix::zeros(p, n);
        let mut b = RVector::zeros(p);
        for (row, (coeffs, rhs)) in self.equalities.iter().enumerate() {
            for &(j, v) in coeffs {
                a[(row, j)] += v;
            }
            b[row] = *rhs;
        }
        ConicProblem {
            c: RVector::from_vec(self.objective),
            a,
            b,
            g,
            h,
            cones,
            var_names: self.names,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_preserves_inner_product() {
        let a = RMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let b = RMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 1.5, 0.0, 1.5, -3.0]);
        let lhs = svec(&a).dot(&svec(&b));
        let rhs = (&a * &b).trace();
        assert!((lhs - rhs).abs() < 1e-12);
        assert!((smat(svec(&a).as_slice(), 3) - &a).norm() < 1e-14);
        assert!((svec(&a)[svec_index(3, 2, 1)] - 5.0 * std::f64::consts::SQRT_2).abs() < 1e-14);
        assert_eq!(svec(&a)[svec_index(3, 1, 1)], 4.0);
    }

    #[test]
    fn embedding_examples() {
        let i = CMatrix::identity(3, 3);
        assert_eq!(hermitian_to_real_embedding(&i).unwrap(), RMatrix::identity(6, 6));
        let j = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)]);
        let e = hermitian_to_real_embedding(&j).unwrap();
        let (vals, _) = linalg::symmetric_eigen(&e);
        for (v, want) in vals.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((v - want).abs() < 1e-12);
        }
        let real = CMatrix::from_row_slice(2, 2, &[C64::new(2.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(3.0, 0.0)]);
        let e = hermitian_to_real_embedding(&real).unwrap();
        assert_eq!(e.view((0, 2), (2, 2)).into_owned(), RMatrix::zeros(2, 2));
        assert_eq!(e.view((2, 2), (2, 2)).into_owned(), e.view((0, 0), (2, 2)).into_owned());
        let bad = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(matches!(hermitian_to_real_embedding(&bad), Err(Error::NotHermitian(_))));
    }

    mod props {
        use super::*;
        use crate::oracle;
        use proptest::prelude::*;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #[test]
            fn embedding_roundtrip_and_trace(seed in 0u64..1_000_000, n in 1usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = oracle::random_complex(&mut rng, n, n);
                let h = linalg::hermitian_part(&f);
                let e = hermitian_to_real_embedding(&h).unwrap();
                prop_assert_eq!(e.clone(), oracle::embedding_by_entries(&h));
                let back = real_embedding_to_hermitian(&e);
                prop_assert!((back - &h).norm() <= 1e-15 * h.norm().max(1.0));
                prop_assert!((e.trace() - 2.0 * linalg::trace_re(&h)).abs() <= 1e-12);
                let (he, _) = linalg::hermitian_eigen(&h);
                let (ee, _) = linalg::symmetric_eigen(&e);
                for i in 0..n {
                    prop_assert!((ee[2 * i] - he[i]).abs() <= 1e-10 * (1.0 + he[i].abs()));
                    prop_assert!((ee[2 * i + 1] - he[i]).abs() <= 1e-10 * (1.0 + he[i].abs()));
                }
            }
        }
    }
}
