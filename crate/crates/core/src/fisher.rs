//! Fisher information of the target parameters
//! `θ = [x_1..x_K, y_1..y_K, z_1..z_K, b_R1..b_RK, b_I1..b_IK]` and the derived
//! position CRBs.

use nalgebra::Cholesky;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::scenario::SensingNoise;
use crate::{linalg, CMatrix, RMatrix, C64};

/// Largest equilibrated condition number accepted before a FIM is treated as singular.
pub const MAX_FIM_CONDITION: f64 = 1e14;

/// Complex `K × K` sub-blocks before the real/imaginary split and the outer factor 2.
#[derive(Debug, Clone)]
pub struct FimBlocks {
    /// `F_uv` for `u, v ∈ {x, y, z}`; `uv[u][v]`, with `uv[v][u] = uv[u][v]^H`.
    pub uv: [[CMatrix; 3]; 3],
    /// `F_ub` for `u ∈ {x, y, z}`.
    pub ub: [CMatrix; 3],
    pub bb: CMatrix,
}

#[derive(Debug, Clone)]
pub struct Fim {
    /// Real symmetric `5K × 5K` matrix in `θ` order.
    pub matrix: RMatrix,
    pub blocks: FimBlocks,
    pub num_targets: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetCrb {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrbReport {
    pub per_target: Vec<TargetCrb>,
    pub sum_crb: f64,
    pub fim_condition_estimate: f64,
}

/// `[V, V̇x, V̇y, V̇z]`, `N × 4K`.
pub fn stacked_tx(ch: &ChannelSet) -> CMatrix {
    hstack(&[&ch.v, &ch.dv[0], &ch.dv[1], &ch.dv[2]])
}

/// `[A, Ȧx, Ȧy, Ȧz]`, `M × 4K`.
pub fn stacked_rx(ch: &ChannelSet) -> CMatrix {
    hstack(&[&ch.a, &ch.da[0], &ch.da[1], &ch.da[2]])
}

pub(crate) fn hstack(parts: &[&CMatrix]) -> CMatrix {
    let rows = parts.first().map_or(0, |p| p.nrows());
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        out.view_mut((0, c), (rows, p.ncols())).copy_from(p);
        c += p.ncols();
    }
    out
}

/// Receive-side Gram matrix `As^H Q^{-1} As`, `4K × 4K`.
pub fn rx_gram(ch: &ChannelSet, q: &CMatrix) -> Result<CMatrix> {
    let m = ch.num_rx();
    if q.nrows() != m || q.ncols() != m {
        return Err(Error::ShapeMismatch(format!("Q is {}×{}, expected {m}×{m}", q.nrows(), q.ncols())));
    }
    let chol = Cholesky::new(linalg::hermitian_part(q)).ok_or(Error::NonPsdInput {
        what: "sensing noise covariance",
        min_eigenvalue: linalg::min_eigenvalue(q),
    })?;
    let a = stacked_rx(ch);
    let qa = chol.solve(&a);
    Ok(linalg::hermitian_part(&(a.adjoint() * qa)))
}

/// [`rx_gram`] for a configured noise model; white noise skips the `M × M` solve.
pub fn rx_gram_for(ch: &ChannelSet, noise: &SensingNoise) -> Result<CMatrix> {
    match noise {
        SensingNoise::Scalar(s) => {
            let a = stacked_rx(ch);
            Ok(linalg::hermitian_part(&(a.adjoint() * &a)) / C64::new(*s, 0.0))
        }
        SensingNoise::Matrix(q) => rx_gram(ch, q),
    }
}

fn block(m: &CMatrix, p: usize, q: usize, k: usize) -> CMatrix {
    m.view((p * k, q * k), (k, k)).into_owned()
}

/// Assembles the real FIM from the receive Gram `s = As^H Q^{-1} As` and the
/// transmit Gram `t = Vs^H R_X^* Vs`. Linear in `t`; `t` need not be PSD.
pub fn fim_from_grams(s: &CMatrix, t: &CMatrix, b: &[C64], snapshots: usize) -> Fim {
    let k = b.len();
    let l = C64::new(snapshots as f64, 0.0);
    let sb = |p, q| block(s, p, q, k);
    let tb = |p, q| block(t, p, q, k);
    // (B^* X B)_ij = conj(b_i) X_ij b_j, (B^* X)_ij = conj(b_i) X_ij
    let bxb = |x: CMatrix| CMatrix::from_fn(k, k, |i, j| b[i].conj() * x[(i, j)] * b[j]);
    let bx = |x: CMatrix| CMatrix::from_fn(k, k, |i, j| b[i].conj() * x[(i, j)]);

    let s00 = sb(0, 0);
    let t00 = tb(0, 0);
    let uv_block = |u: usize, v: usize| -> CMatrix {
        let (u, v) = (u + 1, v + 1);
        (sb(u, v).component_mul(&bxb(t00.clone()))
            + sb(u, 0).component_mul(&bxb(tb(0, v)))
            + sb(0, v).component_mul(&bxb(tb(u, 0)))
            + s00.component_mul(&bxb(tb(u, v))))
            * l
    };
    let uv: [[CMatrix; 3]; 3] = std::array::from_fn(|u| std::array::from_fn(|v| uv_block(u, v)));
    let ub: [CMatrix; 3] = std::array::from_fn(|u| {
        (sb(u + 1, 0).component_mul(&bx(t00.clone())) + s00.component_mul(&bx(tb(u + 1, 0)))) * l
    });
    let bb = s00.component_mul(&t00) * l;

    let mut f = RMatrix::zeros(5 * k, 5 * k);
    for i in 0..k {
        for j in 0..k {
            for u in 0..3 {
                for v in 0..3 {
                    f[(u * k + i, v * k + j)] = 2.0 * uv[u][v][(i, j)].re;
                }
                f[(u * k + i, 3 * k + j)] = 2.0 * ub[u][(i, j)].re;
                f[(u * k + i, 4 * k + j)] = -2.0 * ub[u][(i, j)].im;
                f[(3 * k + j, u * k + i)] = 2.0 * ub[u][(i, j)].re;
                f[(4 * k + j, u * k + i)] = -2.0 * ub[u][(i, j)].im;
            }
            f[(3 * k + i, 3 * k + j)] = 2.0 * bb[(i, j)].re;
            f[(3 * k + i, 4 * k + j)] = -2.0 * bb[(i, j)].im;
            f[(4 * k + i, 3 * k + j)] = -2.0 * bb[(j, i)].im;
            f[(4 * k + i, 4 * k + j)] = 2.0 * bb[(i, j)].re;
        }
    }
    Fim {
        matrix: f,
        blocks: FimBlocks { uv, ub, bb },
        num_targets: k,
    }
}

/// FIM of the target parameters under transmit covariance `rx_cov`.
pub fn assemble_fim(ch: &ChannelSet, rx_cov: &CMatrix, q: &CMatrix, snapshots: usize) -> Result<Fim> {
    let n = ch.num_tx();
    if rx_cov.nrows() != n || rx_cov.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "R_X is {}×{}, expected {n}×{n}",
            rx_cov.nrows(),
            rx_cov.ncols()
        )));
    }
    let defect = linalg::hermitian_defect(rx_cov);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(format!("R_X relative defect {defect:e}")));
    }
    let r = linalg::hermitian_part(rx_cov);
    let min = linalg::min_eigenvalue(&r);
    if min < -1e-9 * linalg::trace_re(&r).abs() {
        return Err(Error::NonPsdInput { what: "R_X", min_eigenvalue: min });
    }
    Ok(assemble_fim_unchecked(ch, &r, q, snapshots)?)
}

/// [`assemble_fim`] without the Hermitian/PSD screening of `rx_cov`.
pub fn assemble_fim_unchecked(ch: &ChannelSet, rx_cov: &CMatrix, q: &CMatrix, snapshots: usize) -> Result<Fim> {
    let s = rx_gram(ch, q)?;
    let vs = stacked_tx(ch);
    let t = vs.adjoint() * rx_cov.conjugate() * &vs;
    Ok(fim_from_grams(&s, &t, &ch.b, snapshots))
}

/// Same FIM computed from a factor `R_X = F F^H`, avoiding the `N × N` product.
pub fn assemble_fim_factored(ch: &ChannelSet, factor: &CMatrix, q: &CMatrix, snapshots: usize) -> Result<Fim> {
    let s = rx_gram(ch, q)?;
    // Vs^H R^* Vs = (F^T Vs)^H (F^T Vs)
    let y = factor.transpose() * stacked_tx(ch);
    let t = y.adjoint() * y;
    Ok(fim_from_grams(&s, &t, &ch.b, snapshots))
}

/// [`assemble_fim_factored`] for a configured noise model.
pub fn fim_of_factor(ch: &ChannelSet, factor: &CMatrix, noise: &SensingNoise, snapshots: usize) -> Result<Fim> {
    let s = rx_gram_for(ch, noise)?;
    let y = factor.transpose() * stacked_tx(ch);
    let t = y.adjoint() * y;
    Ok(fim_from_grams(&s, &t, &ch.b, snapshots))
}

/// Jacobi-equilibrated eigen-analysis: returns (scaling, eigenvalues, eigenvectors, condition).
fn equilibrate(f: &RMatrix) -> (Vec<f64>, Vec<f64>, RMatrix, f64) {
    let n = f.nrows();
    let d: Vec<f64> = (0..n)
        .map(|i| if f[(i, i)] > 0.0 { 1.0 / f[(i, i)].sqrt() } else { 1.0 })
        .collect();
    let g = RMatrix::from_fn(n, n, |i, j| d[i] * f[(i, j)] * d[j]);
    let (vals, vecs) = linalg::symmetric_eigen(&g);
    let lo = vals.first().copied().unwrap_or(0.0);
    let hi = vals.last().copied().unwrap_or(0.0);
    let cond = if lo > 0.0 && (0..n).all(|i| f[(i, i)] > 0.0) { hi / lo } else { f64::INFINITY };
    (d, vals, vecs, cond)
}

/// Inverse of a real symmetric positive definite FIM, refusing near-singular input.
pub fn invert_fim(f: &RMatrix) -> Result<(RMatrix, f64)> {
    let n = f.nrows();
    let (d, _vals, vecs, cond) = equilibrate(f);
    let singular = |cond: f64| Error::SingularFim {
        condition: cond,
        null_direction: vecs.column(0).iter().copied().collect(),
    };
    if !(cond <= MAX_FIM_CONDITION) {
        return Err(singular(cond));
    }
    let g = RMatrix::from_fn(n, n, |i, j| d[i] * f[(i, j)] * d[j]);
    let chol = Cholesky::new(g).ok_or_else(|| singular(cond))?;
    let ginv = chol.inverse();
    Ok((RMatrix::from_fn(n, n, |i, j| d[i] * ginv[(i, j)] * d[j]), cond))
}

pub fn crb_from_fim(fim: &Fim) -> Result<CrbReport> {
    let k = fim.num_targets;
    let (c, cond) = invert_fim(&fim.matrix)?;
    let per_target: Vec<TargetCrb> = (0..k)
        .map(|i| {
            let (x, y, z) = (c[(i, i)], c[(i + k, i + k)], c[(i + 2 * k, i + 2 * k)]);
            TargetCrb { x, y, z, total: x + y + z }
        })
        .collect();
    Ok(CrbReport {
        sum_crb: per_target.iter().map(|t| t.total).sum(),
        per_target,
        fim_condition_estimate: cond,
    })
}

/// Convenience wrapper: FIM then CRB.
pub fn crb(ch: &ChannelSet, rx_cov: &CMatrix, q: &CMatrix, snapshots: usize) -> Result<CrbReport> {
    crb_from_fim(&assemble_fim(ch, rx_cov, q, snapshots)?)
}

/// Equivalent position FIM `D = G - H R^{-1} H^T`, with `R` the reflection block.
pub fn equivalent_fim_schur(fim: &Fim) -> Result<RMatrix> {
    let k = fim.num_targets;
    let f = &fim.matrix;
    let g = f.view((0, 0), (3 * k, 3 * k)).into_owned();
    let h = f.view((0, 3 * k), (3 * k, 2 * k)).into_owned();
    let r = f.view((3 * k, 3 * k), (2 * k, 2 * k)).into_owned();
    let chol = Cholesky::new(r).ok_or(Error::SingularBlock)?;
    let rinv_ht = chol.solve(&h.transpose());
    Ok(g - h * rinv_ht)
}

/// Orthonormal basis `[v/‖v‖, v̇x/‖v̇x‖, v̇y/‖v̇y‖, ω/‖ω‖]` of the single-target
/// subspace, with `ω` the component of `v̇z` orthogonal to `v`.
pub fn collocated_basis(ch: &ChannelSet) -> CMatrix {
    let v = ch.v.column(0).into_owned();
    let unit = |x: &crate::CVector| x / C64::new(x.norm(), 0.0);
    let vz = ch.dv[2].column(0).into_owned();
    let omega = unit(&vz) - &v * (v.dotc(&vz) / C64::new(v.norm_squared() * vz.norm(), 0.0));
    let cols = [
        unit(&v),
        unit(&ch.dv[0].column(0).into_owned()),
        unit(&ch.dv[1].column(0).into_owned()),
        unit(&omega),
    ];
    let mut q = CMatrix::zeros(v.len(), 4);
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    q
}

/// Checks the orthogonality and norm identities that make the single-target
/// closed form valid, to relative tolerance `tol`.
pub fn check_symmetric_configuration(ch: &ChannelSet, tol: f64) -> Result<()> {
    if ch.num_targets() != 1 {
        return Err(Error::ConfigNotSymmetric(format!("needs K = 1, got {}", ch.num_targets())));
    }
    let col = |m: &CMatrix| m.column(0).into_owned();
    let (a, v) = (col(&ch.a), col(&ch.v));
    let da: Vec<_> = ch.da.iter().map(col).collect();
    let dv: Vec<_> = ch.dv.iter().map(col).collect();
    let ortho = |p: &crate::CVector, q: &crate::CVector| p.dotc(q).norm() / (p.norm() * q.norm());
    let mut checks = vec![
        ("a^H ȧx", ortho(&a, &da[0])),
        ("a^H ȧy", ortho(&a, &da[1])),
        ("v^H v̇x", ortho(&v, &dv[0])),
        ("v^H v̇y", ortho(&v, &dv[1])),
        ("ȧx^H ȧy", ortho(&da[0], &da[1])),
        ("ȧx^H ȧz", ortho(&da[0], &da[2])),
        ("ȧy^H ȧz", ortho(&da[1], &da[2])),
        ("v̇x^H v̇y", ortho(&dv[0], &dv[1])),
        ("v̇x^H v̇z", ortho(&dv[0], &dv[2])),
        ("v̇y^H v̇z", ortho(&dv[1], &dv[2])),
    ];
    let same = |p: f64, q: f64| (p - q).abs() / p.max(q);
    checks.push(("‖a‖ = ‖v‖", same(a.norm(), v.norm())));
    checks.push(("‖ȧx‖ = ‖v̇x‖", same(da[0].norm(), dv[0].norm())));
    checks.push(("‖ȧy‖ = ‖v̇y‖", same(da[1].norm(), dv[1].norm())));
    checks.push(("‖v̇x‖ = ‖v̇y‖", same(dv[0].norm(), dv[1].norm())));
    checks.push(("‖ȧz‖ = ‖v̇z‖", same(da[2].norm(), dv[2].norm())));
    if let Some((name, err)) = checks.iter().find(|(_, e)| !(*e <= tol)) {
        return Err(Error::ConfigNotSymmetric(format!("{name} violated by {err:e}")));
    }
    Ok(())
}

/// `ξ = σ² / (2 |b|² L)`.
pub fn noise_scale(sigma2: f64, b: C64, snapshots: usize) -> f64 {
    sigma2 / (2.0 * b.norm_sqr() * snapshots as f64)
}

/// Per-axis CRBs of a single target in a symmetric layout when
/// `(R_X)^* = Q_r diag(x) Q_r^H` with `Q_r` from [`collocated_basis`].
pub fn closed_form_collocated_crb(ch: &ChannelSet, x: [f64; 4], xi: f64) -> Result<[f64; 3]> {
    check_symmetric_configuration(ch, 1e-8)?;
    if ch.b[0].norm() == 0.0 {
        return Err(Error::ZeroReflection { target: 0 });
    }
    let col = |m: &CMatrix| m.column(0).into_owned();
    let v = col(&ch.v);
    let (vx, vy, vz) = (col(&ch.dv[0]), col(&ch.dv[1]), col(&ch.dv[2]));
    let nv = v.norm_squared();
    let crb_x = xi / (vx.norm_squared() * nv * (x[0] + x[1]));
    let crb_y = xi / (vy.norm_squared() * nv * (x[0] + x[2]));
    let crb_z = xi / ((vz.norm_squared() * nv - vz.dotc(&v).norm_sqr()) * (x[0] + x[3]));
    Ok([crb_x, crb_y, crb_z])
}

/// Closed form with `ξ` taken from a scalar sensing noise `Q = σ² I`.
pub fn closed_form_from_noise(ch: &ChannelSet, q: &crate::SensingNoise, snapshots: usize, x: [f64; 4]) -> Result<[f64; 3]> {
    let sigma2 = q
        .scalar()
        .ok_or_else(|| Error::Unsupported("a scalar sensing noise covariance".into()))?;
    closed_form_collocated_crb(ch, x, noise_scale(sigma2, ch.b[0], snapshots))
}
