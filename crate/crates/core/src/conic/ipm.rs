//! Primal-dual interior-point method on the homogeneous self-dual embedding
//! with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
//!
//! Central-path variables are `(x, y, z, s, τ, κ)` with residuals
//!
//! ```text
//! r_x = A^T y + G^T z + c τ
//! r_y = b τ - A x
//! r_z = s + G x - h τ
//! r_τ = κ + c^T x + b^T y + h^T z
//! ```
//!
//! Each Newton step reduces to the KKT system
//! `[0 A^T G^T; A 0 0; G 0 -W^T W]`, solved by normal equations on
//! `G^T W^{-1} W^{-T} G` with a Schur complement for the equalities.

use nalgebra::Cholesky;

use super::{smat, svec, Cone, ConicProblem, ConicSolution, SolveStatus, SolverSettings};
use crate::error::Result;
use crate::{linalg, RMatrix, RVector};

const STEP_FRACTION: f64 = 0.99;
const INFEASIBILITY_TOL: f64 = 1e-8;
const STALL_LIMIT: usize = 12;
const MAX_REFINEMENT: usize = 10;

/// Scaling for one cone block.
enum Scaling {
    /// `W = diag(d)`, `d = sqrt(s / z)`; `λ = sqrt(s z)`.
    Nonneg { d: Vec<f64>, lambda: Vec<f64> },
    /// `W(Z) = R^T Z R`, `W^{-T}(S) = R^{-1} S R^{-T}`; both equal `diag(λ)`.
    Psd { p: usize, r: RMatrix, rinv: RMatrix, lambda: Vec<f64> },
}

struct Block {
    cone: Cone,
    start: usize,
    len: usize,
    /// Variables with a nonzero coefficient in this block.
    cols: Vec<usize>,
}

fn blocks(prob: &ConicProblem) -> Vec<Block> {
    let mut out = Vec::new();
    let mut start = 0;
    for &cone in &prob.cones {
        let len = cone.dim();
        let cols = (0..prob.g.ncols())
            .filter(|&j| (start..start + len).any(|i| prob.g[(i, j)] != 0.0))
            .collect();
        out.push(Block { cone, start, len, cols });
        start += len;
    }
    out
}

fn seg(v: &RVector, b: &Block) -> Vec<f64> {
    v.rows(b.start, b.len).iter().copied().collect()
}

impl Scaling {
    fn new(cone: Cone, s: &[f64], z: &[f64]) -> Option<Self> {
        match cone {
            Cone::Nonneg(_) => {
                if s.iter().chain(z).any(|&v| !(v > 0.0)) {
                    return None;
                }
                Some(Scaling::Nonneg {
                    d: s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect(),
                    lambda: s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect(),
                })
            }
            Cone::Psd(p) => {
                let ls = Cholesky::new(smat(s, p))?.l();
                let lz = Cholesky::new(smat(z, p))?.l();
                let svd = (lz.transpose() * &ls).svd(true, true);
                let u = svd.u?;
                let v = svd.v_t?.transpose();
                let lambda: Vec<f64> = svd.singular_values.iter().copied().collect();
                if lambda.iter().any(|&l| !(l > 0.0)) {
                    return None;
                }
                let inv_sqrt = RMatrix::from_diagonal(&RVector::from_iterator(p, lambda.iter().map(|l| l.powf(-0.5))));
                // R = L_s V Λ^{-1/2}, R^{-1} = Λ^{-1/2} U^T L_z^T
                let r = &ls * &v * &inv_sqrt;
                let rinv = &inv_sqrt * u.transpose() * lz.transpose();
                Some(Scaling::Psd { p, r, rinv, lambda })
            }
        }
    }

    fn lambda(&self) -> Vec<f64> {
        match self {
            Scaling::Nonneg { lambda, .. } => lambda.clone(),
            Scaling::Psd { p, lambda, .. } => svec(&RMatrix::from_diagonal(&RVector::from_column_slice(lambda)))
                .iter()
                .copied()
                .take(p * (p + 1) / 2)
                .collect(),
        }
    }

    /// `W v`.
    fn w(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Scaling::Nonneg { d, .. } => v.iter().zip(d).map(|(a, b)| a * b).collect(),
            Scaling::Psd { p, r, .. } => svec(&(r.transpose() * smat(v, *p) * r)).iter().copied().collect(),
        }
    }

    /// `W^T v`.
    fn wt(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Scaling::Nonneg { d, .. } => v.iter().zip(d).map(|(a, b)| a * b).collect(),
            Scaling::Psd { p, r, .. } => svec(&(r * smat(v, *p) * r.transpose())).iter().copied().collect(),
        }
    }

    /// `W^{-T} v`.
    fn winv_t(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Scaling::Nonneg { d, .. } => v.iter().zip(d).map(|(a, b)| a / b).collect(),
            Scaling::Psd { p, rinv, .. } => svec(&(rinv * smat(v, *p) * rinv.transpose())).iter().copied().collect(),
        }
    }

    /// `W^{-1} v`.
    fn winv(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Scaling::Nonneg { d, .. } => v.iter().zip(d).map(|(a, b)| a / b).collect(),
            Scaling::Psd { p, rinv, .. } => svec(&(rinv.transpose() * smat(v, *p) * rinv)).iter().copied().collect(),
        }
    }

    /// Solves `λ ∘ u = v` for `u`.
    fn lambda_div(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Scaling::Nonneg { lambda, .. } => v.iter().zip(lambda).map(|(a, b)| a / b).collect(),
            Scaling::Psd { p, lambda, .. } => {
                let m = smat(v, *p);
                let u = RMatrix::from_fn(*p, *p, |i, j| 2.0 * m[(i, j)] / (lambda[i] + lambda[j]));
                svec(&u).iter().copied().collect()
            }
        }
    }
}

fn jordan(cone: Cone, a: &[f64], b: &[f64]) -> Vec<f64> {
    match cone {
        Cone::Nonneg(_) => a.iter().zip(b).map(|(x, y)| x * y).collect(),
        Cone::Psd(p) => {
            let (ma, mb) = (smat(a, p), smat(b, p));
            svec(&((&ma * &mb + &mb * &ma) * 0.5)).iter().copied().collect()
        }
    }
}

fn identity(cone: Cone) -> Vec<f64> {
    match cone {
        Cone::Nonneg(m) => vec![1.0; m],
        Cone::Psd(p) => svec(&RMatrix::identity(p, p)).iter().copied().collect(),
    }
}

/// Largest `α` with `x + α d` in the cone (capped at `f64::MAX`).
fn max_step(cone: Cone, x: &[f64], d: &[f64]) -> f64 {
    match cone {
        Cone::Nonneg(_) => x
            .iter()
            .zip(d)
            .filter(|(_, &di)| di < 0.0)
            .map(|(&xi, &di)| -xi / di)
            .fold(f64::MAX, f64::min),
        Cone::Psd(p) => {
            let Some(chol) = Cholesky::new(smat(x, p)) else {
                return 0.0;
            };
            let l = chol.l();
            let linv = match l.clone().try_inverse() {
                Some(v) => v,
                None => return 0.0,
            };
            let m = &linv * smat(d, p) * linv.transpose();
            let min = linalg::symmetric_eigen(&m).0[0];
            if min >= 0.0 {
                f64::MAX
            } else {
                -1.0 / min
            }
        }
    }
}

/// Moves `v` into the interior of `cone`: returns `v + (1 + t) e` where `t` is
/// the most negative eigenvalue, when `v` is not already strictly inside.
fn shift_into_cone(cone: Cone, v: &[f64]) -> Vec<f64> {
    let min = match cone {
        Cone::Nonneg(_) => v.iter().copied().fold(f64::MAX, f64::min),
        Cone::Psd(p) => linalg::symmetric_eigen(&smat(v, p)).0[0],
    };
    if min > 1e-8 {
        return v.to_vec();
    }
    let e = identity(cone);
    v.iter().zip(&e).map(|(a, b)| a + (1.0 - min) * b).collect()
}

struct Kkt<'a> {
    prob: &'a ConicProblem,
    blocks: &'a [Block],
    scalings: Vec<Scaling>,
    chol_m: ScaledCholesky,
    /// Cholesky of `A M^{-1} A^T` and `M^{-1} A^T`, present with equalities.
    schur: Option<(ScaledCholesky, RMatrix)>,
}

/// Cholesky of `D^{-1} M D^{-1} + εI` with `D = diag(M)^{1/2}`, so the
/// regularization is relative to each diagonal entry.
struct ScaledCholesky {
    chol: Cholesky<f64, nalgebra::Dyn>,
    d: RVector,
}

impl ScaledCholesky {
    fn new(mut m: RMatrix) -> Option<Self> {
        let n = m.nrows();
        let top = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let d = RVector::from_fn(n, |i, _| m[(i, i)].max(1e-30 * top).sqrt());
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] /= d[i] * d[j];
            }
        }
        for i in 0..n {
            m[(i, i)] += 1e-13;
        }
        Some(Self { chol: Cholesky::new(m)?, d })
    }

    fn solve(&self, v: &RVector) -> RVector {
        let w = v.component_div(&self.d);
        self.chol.solve(&w).component_div(&self.d)
    }

    fn solve_mat(&self, v: &RMatrix) -> RMatrix {
        let mut w = v.clone();
        for mut col in w.column_iter_mut() {
            col.component_div_assign(&self.d);
        }
        let mut out = self.chol.solve(&w);
        for mut col in out.column_iter_mut() {
            col.component_div_assign(&self.d);
        }
        out
    }
}

impl<'a> Kkt<'a> {
    fn new(prob: &'a ConicProblem, blocks: &'a [Block], scalings: Vec<Scaling>) -> Option<Self> {
        let n = prob.num_vars();
        let mut m = RMatrix::zeros(n, n);
        for (b, sc) in blocks.iter().zip(&scalings) {
            if b.cols.is_empty() {
                continue;
            }
            let mut gh = RMatrix::zeros(b.len, b.cols.len());
            for (k, &j) in b.cols.iter().enumerate() {
                let col: Vec<f64> = prob.g.view((b.start, j), (b.len, 1)).iter().copied().collect();
                let scaled = sc.winv_t(&col);
                gh.column_mut(k).copy_from_slice(&scaled);
            }
            let local = gh.transpose() * &gh;
            for (ki, &i) in b.cols.iter().enumerate() {
                for (kj, &j) in b.cols.iter().enumerate() {
                    m[(i, j)] += local[(ki, kj)];
                }
            }
        }
        let chol_m = ScaledCholesky::new(m)?;
        let schur = if prob.a.nrows() > 0 {
            let minv_at = chol_m.solve_mat(&prob.a.transpose());
            let s = &prob.a * &minv_at;
            Some((ScaledCholesky::new(s)?, minv_at))
        } else {
            None
        };
        Some(Self { prob, blocks, scalings, chol_m, schur })
    }

    /// `H^{-1} v = W^{-1} W^{-T} v` blockwise.
    fn hinv(&self, v: &RVector) -> RVector {
        let mut out = RVector::zeros(v.len());
        for (b, sc) in self.blocks.iter().zip(&self.scalings) {
            let part = sc.winv(&sc.winv_t(&seg(v, b)));
            out.rows_mut(b.start, b.len).copy_from_slice(&part);
        }
        out
    }

    fn h(&self, v: &RVector) -> RVector {
        let mut out = RVector::zeros(v.len());
        for (b, sc) in self.blocks.iter().zip(&self.scalings) {
            let part = sc.wt(&sc.w(&seg(v, b)));
            out.rows_mut(b.start, b.len).copy_from_slice(&part);
        }
        out
    }

    fn solve_once(&self, r1: &RVector, r2: &RVector, r3: &RVector) -> (RVector, RVector, RVector) {
        let g = &self.prob.g;
        let rhs = r1 + g.transpose() * self.hinv(r3);
        let (dx, dy) = match &self.schur {
            None => (self.chol_m.solve(&rhs), RVector::zeros(0)),
            Some((chol_s, minv_at)) => {
                let minv_rhs = self.chol_m.solve(&rhs);
                let dy = chol_s.solve(&(&self.prob.a * &minv_rhs - r2));
                (minv_rhs - minv_at * &dy, dy)
            }
        };
        let dz = self.hinv(&(g * &dx - r3));
        (dx, dy, dz)
    }

    /// Solves `A^T dy + G^T dz = r1`, `A dx = r2`, `G dx - H dz = r3`, refining
    /// while the residual keeps shrinking.
    fn solve(&self, r1: &RVector, r2: &RVector, r3: &RVector) -> (RVector, RVector, RVector) {
        let (mut dx, mut dy, mut dz) = self.solve_once(r1, r2, r3);
        let (a, g) = (&self.prob.a, &self.prob.g);
        let rhs_norm = r1.norm() + r2.norm() + r3.norm();
        let mut last = f64::INFINITY;
        for _ in 0..MAX_REFINEMENT {
            let e1 = r1 - (a.transpose() * &dy + g.transpose() * &dz);
            let e2 = r2 - a * &dx;
            let e3 = r3 - (g * &dx - self.h(&dz));
            let err = e1.norm() + e2.norm() + e3.norm();
            if err <= 1e-15 * rhs_norm || err > 0.5 * last {
                break;
            }
            last = err;
            let (cx, cy, cz) = self.solve_once(&e1, &e2, &e3);
            dx += cx;
            dy += cy;
            dz += cz;
        }
        (dx, dy, dz)
    }
}

struct Iterate {
    x: RVector,
    y: RVector,
    z: RVector,
    s: RVector,
    tau: f64,
    kappa: f64,
}

struct Residuals {
    rx: RVector,
    ry: RVector,
    rz: RVector,
    rtau: f64,
}

fn residuals(p: &ConicProblem, it: &Iterate) -> Residuals {
    Residuals {
        rx: p.a.transpose() * &it.y + p.g.transpose() * &it.z + &p.c * it.tau,
        ry: &p.b * it.tau - &p.a * &it.x,
        rz: &it.s + &p.g * &it.x - &p.h * it.tau,
        rtau: it.kappa + p.c.dot(&it.x) + p.b.dot(&it.y) + p.h.dot(&it.z),
    }
}

struct Metrics {
    pres: f64,
    dres: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
}

fn metrics(p: &ConicProblem, it: &Iterate) -> Metrics {
    let t = it.tau;
    let x = &it.x / t;
    let y = &it.y / t;
    let z = &it.z / t;
    let s = &it.s / t;
    let pr = (&p.g * &x + &s - &p.h).norm().max((&p.a * &x - &p.b).norm());
    let dr = (p.a.transpose() * &y + p.g.transpose() * &z + &p.c).norm();
    let pobj = p.c.dot(&x);
    let dobj = -p.b.dot(&y) - p.h.dot(&z);
    Metrics {
        pres: pr / (1.0 + p.h.norm() + p.b.norm() + x.norm() + s.norm()),
        dres: dr / (1.0 + p.c.norm() + y.norm() + z.norm()),
        gap: (pobj - dobj).abs(),
        pobj,
        dobj,
    }
}

fn initial_point(p: &ConicProblem, blocks: &[Block]) -> Option<Iterate> {
    let m = p.h.len();
    let unit: Vec<Scaling> = blocks
        .iter()
        .map(|b| {
            let e = identity(b.cone);
            Scaling::new(b.cone, &e, &e).expect("identity is interior")
        })
        .collect();
    let kkt = Kkt::new(p, blocks, unit)?;
    let n = p.num_vars();
    // Primal: minimize ‖G x - h‖ subject to A x = b, s = h - G x.
    let (x, _, zp) = kkt.solve(&RVector::zeros(n), &p.b, &p.h);
    let s_hat = -zp;
    // Dual: minimize ‖z‖ subject to A^T y + G^T z + c = 0.
    let (_, y, z_hat) = kkt.solve(&(-&p.c), &RVector::zeros(p.b.len()), &RVector::zeros(m));
    let mut s = RVector::zeros(m);
    let mut z = RVector::zeros(m);
    for b in blocks {
        s.rows_mut(b.start, b.len).copy_from_slice(&shift_into_cone(b.cone, &seg(&s_hat, b)));
        z.rows_mut(b.start, b.len).copy_from_slice(&shift_into_cone(b.cone, &seg(&z_hat, b)));
    }
    Some(Iterate { x, y, z, s, tau: 1.0, kappa: 1.0 })
}

fn finish(status: SolveStatus, p: &ConicProblem, it: &Iterate, iterations: usize) -> ConicSolution {
    let m = metrics(p, it);
    let (x, y, z, s) = match status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => (it.x.clone(), it.y.clone(), it.z.clone(), it.s.clone()),
        _ => (&it.x / it.tau, &it.y / it.tau, &it.z / it.tau, &it.s / it.tau),
    };
    ConicSolution {
        status,
        x,
        y,
        z,
        s,
        primal_objective: m.pobj,
        dual_objective: m.dobj,
        primal_residual: m.pres,
        dual_residual: m.dres,
        gap: m.gap,
        iterations,
    }
}

/// Solves a conic problem. A solve that cannot reach the requested tolerances
/// returns its best iterate with status [`SolveStatus::NumericalLimit`].
pub fn solve(p: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    p.check()?;
    settings.validate()?;
    let blocks = blocks(p);
    let degree: usize = p.cones.iter().map(Cone::degree).sum();
    let Some(mut it) = initial_point(p, &blocks) else {
        let zero = Iterate {
            x: RVector::zeros(p.num_vars()),
            y: RVector::zeros(p.b.len()),
            z: RVector::zeros(p.h.len()),
            s: RVector::zeros(p.h.len()),
            tau: 1.0,
            kappa: 1.0,
        };
        return Ok(finish(SolveStatus::NumericalLimit, p, &zero, 0));
    };

    let mut best: Option<(f64, Iterate)> = None;
    let mut stall = 0;
    let mut iterations = 0;
    for iter in 0..settings.max_iters {
        iterations = iter;
        let res = residuals(p, &it);
        let met = metrics(p, &it);
        let gap_ok = met.gap <= settings.abs_tol + settings.rel_tol * met.pobj.abs().min(met.dobj.abs());
        let feas_tol = settings.abs_tol.max(settings.rel_tol);
        if met.pres <= feas_tol && met.dres <= feas_tol && gap_ok {
            return Ok(finish(SolveStatus::Optimal, p, &it, iter));
        }
        // Infeasibility certificates.
        let btz = p.b.dot(&it.y) + p.h.dot(&it.z);
        if btz < 0.0 {
            let cert = (p.a.transpose() * &it.y + p.g.transpose() * &it.z).norm();
            if cert <= INFEASIBILITY_TOL * (-btz) * (1.0 + p.c.norm()) {
                return Ok(finish(SolveStatus::Infeasible, p, &it, iter));
            }
        }
        let ctx = p.c.dot(&it.x);
        if ctx < 0.0 {
            let cert = (&p.g * &it.x + &it.s).norm().max((&p.a * &it.x).norm());
            if cert <= INFEASIBILITY_TOL * (-ctx) * (1.0 + p.h.norm()) {
                return Ok(finish(SolveStatus::Unbounded, p, &it, iter));
            }
        }
        if std::env::var_os("NFISAC_IPM_TRACE").is_some() {
            eprintln!("{iter:3} pres {:.2e} dres {:.2e} gap {:.2e} pobj {:.6e} dobj {:.6e} tau {:.2e} kappa {:.2e}", met.pres, met.dres, met.gap, met.pobj, met.dobj, it.tau, it.kappa);
        }
        let merit = met.pres.max(met.dres).max(met.gap / (1.0 + met.pobj.abs()));
        match &best {
            Some((b, _)) if merit >= 0.999 * b => stall += 1,
            _ => stall = 0,
        }
        if best.as_ref().map_or(true, |(b, _)| merit < *b) {
            best = Some((
                merit,
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                    s: it.s.clone(),
                    tau: it.tau,
                    kappa: it.kappa,
                },
            ));
        }
        if stall > STALL_LIMIT || best.as_ref().is_some_and(|(b, _)| *b < 1e-6 && merit > 1e3 * b) {
            break;
        }

        let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (degree as f64 + 1.0);
        let scalings: Option<Vec<Scaling>> = blocks
            .iter()
            .map(|b| Scaling::new(b.cone, &seg(&it.s, b), &seg(&it.z, b)))
            .collect();
        let Some(scalings) = scalings else { break };
        let lambdas: Vec<Vec<f64>> = scalings.iter().map(Scaling::lambda).collect();
        let Some(kkt) = Kkt::new(p, &blocks, scalings) else { break };

        // Direction for the τ coupling: K [x2; y2; z2] = [-c; b; h].
        let (x2, y2, z2) = kkt.solve(&(-&p.c), &p.b, &p.h);
        let denom = p.c.dot(&x2) + p.b.dot(&y2) + p.h.dot(&z2) - it.kappa / it.tau;

        let step = |ds_target: &[Vec<f64>], dkappa_target: f64, sigma_frac: f64| {
            // ds_target: per-block d_s; linear residual targets scaled by sigma_frac.
            let dx_t = &res.rx * sigma_frac;
            let dy_t = &res.ry * sigma_frac;
            let dz_t = &res.rz * sigma_frac;
            let dtau_t = res.rtau * sigma_frac;
            let mut r3 = -&dz_t;
            let mut ldiv: Vec<Vec<f64>> = Vec::with_capacity(blocks.len());
            for ((b, sc), dsb) in blocks.iter().zip(&kkt.scalings).zip(ds_target) {
                let u = sc.lambda_div(dsb);
                let wtu = sc.wt(&u);
                for (k, v) in wtu.iter().enumerate() {
                    r3[b.start + k] += v;
                }
                ldiv.push(u);
            }
            let (x1, y1, z1) = kkt.solve(&(-&dx_t), &dy_t, &r3);
            let num = -dtau_t + dkappa_target / it.tau - p.c.dot(&x1) - p.b.dot(&y1) - p.h.dot(&z1);
            let dtau = num / denom;
            let dx = x1 + &x2 * dtau;
            let dy = y1 + &y2 * dtau;
            let dz = z1 + &z2 * dtau;
            let dkappa = (-dkappa_target - it.kappa * dtau) / it.tau;
            // ds = -W^T (λ\d_s + W dz)
            let mut ds = RVector::zeros(p.h.len());
            let mut wdz_all = Vec::with_capacity(blocks.len());
            let mut wids_all = Vec::with_capacity(blocks.len());
            for ((b, sc), u) in blocks.iter().zip(&kkt.scalings).zip(&ldiv) {
                let wdz = sc.w(&seg(&dz, b));
                let inner: Vec<f64> = u.iter().zip(&wdz).map(|(a, c)| -(a + c)).collect();
                let part = sc.wt(&inner);
                ds.rows_mut(b.start, b.len).copy_from_slice(&part);
                wids_all.push(inner);
                wdz_all.push(wdz);
            }
            (dx, dy, dz, ds, dtau, dkappa, wdz_all, wids_all)
        };

        let max_alpha = |dz: &RVector, ds: &RVector, dtau: f64, dkappa: f64| {
            let mut a = f64::MAX;
            for b in &blocks {
                a = a.min(max_step(b.cone, &seg(&it.s, b), &seg(ds, b)));
                a = a.min(max_step(b.cone, &seg(&it.z, b), &seg(dz, b)));
            }
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-it.kappa / dkappa);
            }
            a
        };

        // Predictor.
        let ds_aff: Vec<Vec<f64>> = blocks.iter().zip(&lambdas).map(|(b, l)| jordan(b.cone, l, l)).collect();
        let (_, _, dz_a, ds_a, dtau_a, dkappa_a, wdz_a, wids_a) = step(&ds_aff, it.tau * it.kappa, 1.0);
        let alpha_aff = max_alpha(&dz_a, &ds_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // Corrector.
        let ds_cc: Vec<Vec<f64>> = blocks
            .iter()
            .zip(&lambdas)
            .zip(wdz_a.iter().zip(&wids_a))
            .map(|((b, l), (wdz, wids))| {
                let ll = jordan(b.cone, l, l);
                let cross = jordan(b.cone, wids, wdz);
                let e = identity(b.cone);
                (0..ll.len()).map(|k| ll[k] + cross[k] - sigma * mu * e[k]).collect()
            })
            .collect();
        let dk = it.tau * it.kappa + dtau_a * dkappa_a - sigma * mu;
        let (dx, dy, dz, ds, dtau, dkappa, _, _) = step(&ds_cc, dk, 1.0 - sigma);
        let alpha = (STEP_FRACTION * max_alpha(&dz, &ds, dtau, dkappa)).min(1.0);
        if !(alpha > 1e-12) {
            break;
        }
        it.x += &dx * alpha;
        it.y += &dy * alpha;
        it.z += &dz * alpha;
        it.s += &ds * alpha;
        it.tau += dtau * alpha;
        it.kappa += dkappa * alpha;
        if !(it.tau > 0.0 && it.kappa > 0.0) || it.x.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    let last = best.map_or(it, |(_, b)| b);
    Ok(finish(SolveStatus::NumericalLimit, p, &last, iterations))
}
