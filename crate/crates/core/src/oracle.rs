//! Independent reference computations used by tests and the acceptance suite.
//! Nothing here is on a production path; the routines favour transparency over
//! speed.

use rand::Rng;

use crate::channel::ChannelSet;
use crate::{linalg, CMatrix, CVector, RMatrix, C64};

pub fn random_complex<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random Hermitian PSD matrix of the given rank, normalized to unit trace.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let f = random_complex(rng, n, rank);
    let m = &f * f.adjoint();
    let t = linalg::trace_re(&m);
    linalg::hermitian_part(&(m / C64::new(t, 0.0)))
}

/// Random Hermitian positive definite matrix with eigenvalues in `[lo, hi]`.
pub fn random_pd<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> CMatrix {
    let u = random_unitary(rng, n);
    let d = CVector::from_fn(n, |_, _| C64::new(rng.gen_range(lo..hi), 0.0));
    linalg::hermitian_part(&(&u * CMatrix::from_diagonal(&d) * u.adjoint()))
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    linalg::orthonormal_span(&random_complex(rng, n, n), 1e-12)
}

/// Hermitian square root of a PSD matrix, negative eigenvalues clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(m);
    let d = CVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)));
    &vecs * CMatrix::from_diagonal(&d) * vecs.adjoint()
}

/// Symbol matrix `X` (`N × L`) with `X X^H / L = R` exactly, `L ≥ N`.
pub fn symbol_matrix<R: Rng>(rng: &mut R, r: &CMatrix, snapshots: usize) -> CMatrix {
    let n = r.nrows();
    assert!(snapshots >= n, "need L >= N for an exact sample covariance");
    // Φ: N × L with orthonormal rows
    let phi = linalg::orthonormal_span(&random_complex(rng, snapshots, n), 1e-12).adjoint();
    psd_sqrt(r) * phi * C64::new((snapshots as f64).sqrt(), 0.0)
}

/// FIM by summing `2 Re{(∂μ_l/∂θ_i)^H Q^{-1} ∂μ_l/∂θ_j}` over the columns of `x`,
/// where `μ_l = Σ_k b_k a(l_k) v(l_k)^T x_l`.
pub fn brute_force_fim(ch: &ChannelSet, q: &CMatrix, x: &CMatrix) -> RMatrix {
    let k = ch.num_targets();
    let qinv = q.clone().try_inverse().expect("Q invertible");
    let mut f = RMatrix::zeros(5 * k, 5 * k);
    for l in 0..x.ncols() {
        let xl = x.column(l).into_owned();
        let mut derivs: Vec<CVector> = Vec::with_capacity(5 * k);
        for axis in 0..3 {
            for t in 0..k {
                let a = ch.a.column(t);
                let da = ch.da[axis].column(t);
                let vx = ch.v.column(t).transpose() * &xl;
                let dvx = ch.dv[axis].column(t).transpose() * &xl;
                derivs.push((da * vx[(0, 0)] + a * dvx[(0, 0)]) * ch.b[t]);
            }
        }
        for imag in [false, true] {
            for t in 0..k {
                let vx = ch.v.column(t).transpose() * &xl;
                let g = ch.a.column(t) * vx[(0, 0)];
                derivs.push(if imag { g * C64::new(0.0, 1.0) } else { g });
            }
        }
        let qd: Vec<CVector> = derivs.iter().map(|d| &qinv * d).collect();
        for i in 0..5 * k {
            for j in 0..5 * k {
                f[(i, j)] += 2.0 * derivs[i].dotc(&qd[j]).re;
            }
        }
    }
    f
}

/// Inverse of the real FIM by plain LU, for cross-checking the production path.
pub fn crb_by_lu(f: &RMatrix, k: usize) -> Vec<f64> {
    let c = f.clone().try_inverse().expect("FIM invertible");
    (0..k).map(|i| c[(i, i)] + c[(i + k, i + k)] + c[(i + 2 * k, i + 2 * k)]).collect()
}

/// Real embedding `[[Re H, -Im H], [Im H, Re H]]` written out entry by entry.
pub fn embedding_by_entries(h: &CMatrix) -> RMatrix {
    let n = h.nrows();
    RMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symbol_matrix_reproduces_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_psd(&mut rng, 5, 3);
        let x = symbol_matrix(&mut rng, &r, 8);
        let s = &x * x.adjoint() / C64::new(8.0, 0.0);
        assert!((s - &r).norm() < 1e-13);
    }
}
