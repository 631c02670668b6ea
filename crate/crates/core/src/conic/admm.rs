//! Operator-splitting reference backend. Slow and only moderately accurate;
//! used to cross-check the interior-point solver on small problems.

use nalgebra::LU;

use super::{smat, svec, Cone, ConicProblem, ConicSolution, SolveStatus, SolverSettings};
use crate::error::Result;
use crate::{linalg, RMatrix, RVector};

const PROX: f64 = 1e-6;

fn project(p: &ConicProblem, v: &RVector) -> RVector {
    let mut out = v.clone();
    for (cone, r) in p.cones.iter().zip(p.cone_ranges()) {
        match *cone {
            Cone::Nonneg(_) => {
                for i in r {
                    out[i] = out[i].max(0.0);
                }
            }
            Cone::Psd(n) => {
                let m = smat(v.rows(r.start, r.len()).as_slice(), n);
                let (vals, vecs) = linalg::symmetric_eigen(&m);
                let d = RVector::from_iterator(n, vals.iter().map(|l| l.max(0.0)));
                let proj = &vecs * RMatrix::from_diagonal(&d) * vecs.transpose();
                out.rows_mut(r.start, r.len()).copy_from(&svec(&proj));
            }
        }
    }
    out
}

fn factor(p: &ConicProblem, rho: f64) -> LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let n = p.num_vars();
    let me = p.a.nrows();
    let mut k = RMatrix::zeros(n + me, n + me);
    let gtg = p.g.transpose() * &p.g * rho;
    k.view_mut((0, 0), (n, n)).copy_from(&gtg);
    for i in 0..n {
        k[(i, i)] += PROX;
    }
    k.view_mut((n, 0), (me, n)).copy_from(&p.a);
    k.view_mut((0, n), (n, me)).copy_from(&p.a.transpose());
    for i in 0..me {
        k[(n + i, n + i)] = -1e-12;
    }
    k.lu()
}

/// Solves `p` by ADMM with residual balancing. Returns `Optimal` once the
/// scaled primal and dual residuals fall below `settings.abs_tol`.
pub fn solve_admm(p: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    p.check()?;
    settings.validate()?;
    let n = p.num_vars();
    let m = p.h.len();
    let me = p.a.nrows();
    let mut rho = 1.0;
    let mut lu = factor(p, rho);
    let mut x = RVector::zeros(n);
    let mut y = RVector::zeros(me);
    let mut s = project(p, &p.h);
    let mut u = RVector::zeros(m);
    let scale_p = 1.0 + p.h.norm().max(p.b.norm());
    let scale_d = 1.0 + p.c.norm();
    let mut status = SolveStatus::NumericalLimit;
    let mut iterations = settings.max_iters;
    let (mut pres, mut dres) = (f64::INFINITY, f64::INFINITY);
    for it in 0..settings.max_iters {
        let mut rhs = RVector::zeros(n + me);
        let top = -&p.c - p.g.transpose() * ((&s - &p.h + &u) * rho) + &x * PROX;
        rhs.rows_mut(0, n).copy_from(&top);
        rhs.rows_mut(n, me).copy_from(&p.b);
        let sol = lu.solve(&rhs).unwrap_or_else(|| RVector::zeros(n + me));
        x = sol.rows(0, n).into_owned();
        y = sol.rows(n, me).into_owned();
        let gx = &p.g * &x;
        let s_prev = s.clone();
        s = project(p, &(&p.h - &gx - &u));
        let r = &gx + &s - &p.h;
        u += &r;
        pres = r.norm() / scale_p;
        dres = rho * (p.g.transpose() * (&s - &s_prev)).norm() / scale_d;
        if pres < settings.abs_tol && dres < settings.abs_tol {
            status = SolveStatus::Optimal;
            iterations = it + 1;
            break;
        }
        if it % 25 == 24 {
            if pres > 10.0 * dres {
                rho *= 2.0;
                u /= 2.0;
                lu = factor(p, rho);
            } else if dres > 10.0 * pres {
                rho /= 2.0;
                u *= 2.0;
                lu = factor(p, rho);
            }
        }
    }
    let z = &u * rho;
    let pobj = p.c.dot(&x);
    let dobj = -p.b.dot(&y) - p.h.dot(&z);
    Ok(ConicSolution {
        status,
        x,
        y,
        z,
        s,
        primal_objective: pobj,
        dual_objective: dobj,
        primal_residual: pres,
        dual_residual: dres,
        gap: (pobj - dobj).abs(),
        iterations,
    })
}
