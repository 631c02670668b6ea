use super::{hermitian_basis, quad_coeffs, trace_coeffs, FeasibilityReport};
use crate::channel::ChannelSet;
use crate::conic::{self, embed, ProblemBuilder, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scenario::{db_to_linear, linear_to_db, ScenarioConfig};
use crate::RMatrix;

/// Relative slack on the power budget when deciding feasibility.
const POWER_SLACK: f64 = 1e-7;

/// `P_T ‖h_u‖² / σ_c²`, reached by maximum-ratio transmission without interference.
pub fn single_user_max_sinr(ch: &ChannelSet, cfg: &ScenarioConfig, user: usize) -> f64 {
    cfg.total_power * ch.h(user).norm_squared() / cfg.comm_noise_power
}

/// Minimum total power meeting every SINR requirement, with covariances
/// restricted to the span of the user channels.
pub fn feasibility_probe(ch: &ChannelSet, cfg: &ScenarioConfig, settings: &SolverSettings) -> Result<FeasibilityReport> {
    let required: Vec<f64> = cfg.users.iter().map(|u| u.sinr_threshold).collect();
    let max_sinr: Vec<f64> = (0..ch.num_users()).map(|u| single_user_max_sinr(ch, cfg, u)).collect();
    let budget = cfg.total_power;
    let mut report = FeasibilityReport {
        required_sinr: required.clone(),
        max_sinr,
        min_power_w: 0.0,
        budget_w: budget,
        feasible: true,
    };
    if required.iter().all(|&g| g == 0.0) {
        return Ok(report);
    }
    if required.iter().zip(&report.max_sinr).any(|(r, m)| r > m) {
        report.min_power_w = f64::INFINITY;
        report.feasible = false;
        return Ok(report);
    }

    let b = linalg::orthonormal_span(&ch.hc, 1e-10);
    let r = b.ncols();
    let gs: Vec<_> = (0..ch.num_users()).map(|u| b.adjoint() * ch.h(u)).collect();
    let herm = hermitian_basis(r);
    let emb: Vec<RMatrix> = herm.iter().map(embed).collect();
    let mut pb = ProblemBuilder::new();
    let vars: Vec<_> = (0..ch.num_users()).map(|u| pb.add_vars(format!("S_{u}"), r * r)).collect();
    let tr = trace_coeffs(r);
    for range in &vars {
        pb.add_lmi(RMatrix::zeros(2 * r, 2 * r), range.clone().zip(emb.iter().cloned()).collect());
        for (i, c) in range.clone().zip(&tr) {
            pb.set_cost(i, *c);
        }
    }
    // Power in units of P_T: (1 + Γ) g^H S_u g - Γ Σ_k g^H S_k g ≥ Γ σ² / P_T
    for (u, g) in gs.iter().enumerate() {
        let gamma = required[u];
        if gamma == 0.0 {
            continue;
        }
        let q = quad_coeffs(g);
        let rhs = gamma * cfg.comm_noise_power / budget;
        let scale = (q.iter().fold(0.0f64, |a, v| a.max(v.abs())) * (1.0 + gamma)).max(rhs);
        let mut row = Vec::new();
        for (k, range) in vars.iter().enumerate() {
            let f = if k == u { 1.0 } else { -gamma };
            row.extend(range.clone().zip(q.iter().map(|v| f * v / scale)));
        }
        pb.add_linear_ge(row, -rhs / scale);
    }
    let sol = conic::solve(&pb.build(), settings)?;
    match sol.status {
        SolveStatus::Optimal => {
            report.min_power_w = sol.primal_objective * budget;
            report.feasible = sol.primal_objective <= 1.0 + POWER_SLACK;
        }
        SolveStatus::Infeasible => {
            report.min_power_w = f64::INFINITY;
            report.feasible = false;
        }
        SolveStatus::Unbounded | SolveStatus::NumericalLimit => {
            return Err(Error::NumericalLimit(format!(
                "SINR feasibility problem stopped with status {:?}",
                sol.status
            )));
        }
    }
    Ok(report)
}

/// Largest requirement `Γ` that every user can meet simultaneously within the
/// power budget, by bisection in dB between -60 dB and the smallest
/// single-user bound. Probes that stop at the solver's numerical limit count
/// as infeasible.
pub fn max_uniform_sinr(ch: &ChannelSet, cfg: &ScenarioConfig, settings: &SolverSettings) -> Result<f64> {
    let bound = (0..ch.num_users())
        .map(|u| single_user_max_sinr(ch, cfg, u))
        .fold(f64::INFINITY, f64::min);
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::Unsupported("at least one user with a nonzero channel".into()));
    }
    let (mut lo, mut hi) = (-60.0, linear_to_db(bound));
    if hi <= lo {
        return Ok(bound);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let feasible = match feasibility_probe(ch, &cfg.clone().with_uniform_sinr(db_to_linear(mid)), settings) {
            Ok(r) => r.feasible,
            Err(Error::NumericalLimit(_)) => false,
            Err(e) => return Err(e),
        };
        if feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(db_to_linear(lo))
}
