//! Single-target, single-user sensing/communication tradeoff: the endpoints
//! `P_c` (communication optimal), `P_s` (sensing optimal) and `P_s'` (matched
//! sensing beam reused for communication), SINR sweeps and distance sweeps.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_channel_set, ChannelSet};
use crate::conic::SolveStatus;
use crate::designs::{self, DesignOptions, RANK_TOL};
use crate::error::{Error, Result};
use crate::fisher;
use crate::io::fmt_f64;
use crate::metrics::{quad, MetricKind};
use crate::scenario::{linear_to_db, ScenarioConfig, ScenarioFile};
use crate::{linalg, CMatrix, CVector, C64};

const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone)]
pub struct TradeoffEndpoints {
    pub gamma_c: f64,
    pub crb_c: f64,
    pub gamma_s: f64,
    pub crb_s: f64,
    pub gamma_s_prime: f64,
    pub crb_s_prime: f64,
    pub w_c: CVector,
    pub w_s: CVector,
    pub w_s_prime: CVector,
    /// Orthonormal basis `U` of the range of `R_X^s`.
    pub range_s: CMatrix,
    /// Eigenvalues of `R_X^s` on `range_s`.
    pub sigma_s: Vec<f64>,
    /// `|α*|²`.
    pub alpha_sq: f64,
    /// `R_d^s = R_X^s - w^s (w^s)^H` in `range_s` coordinates.
    pub rd_s_reduced: CMatrix,
}

impl TradeoffEndpoints {
    pub fn r_x_s(&self) -> CMatrix {
        let d = CVector::from_iterator(self.sigma_s.len(), self.sigma_s.iter().map(|&s| C64::new(s, 0.0)));
        &self.range_s * CMatrix::from_diagonal(&d) * self.range_s.adjoint()
    }

    pub fn r_d_s(&self) -> CMatrix {
        &self.range_s * &self.rd_s_reduced * self.range_s.adjoint()
    }
}

/// Endpoint `P_c`, `P_s` or `P_s'` on its own.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub gamma: f64,
    pub crb: f64,
    pub beam: CVector,
}

fn single_link(ch: &ChannelSet) -> Result<()> {
    if ch.num_users() != 1 || ch.num_targets() != 1 {
        return Err(Error::Unsupported(format!(
            "exactly one target and one user (got K = {}, U = {})",
            ch.num_targets(),
            ch.num_users()
        )));
    }
    Ok(())
}

fn crb_of_factor(ch: &ChannelSet, cfg: &ScenarioConfig, factor: &CMatrix) -> Result<f64> {
    let fim = fisher::fim_of_factor(ch, factor, &cfg.sensing_noise, cfg.snapshots)?;
    Ok(fisher::crb_from_fim(&fim)?.sum_crb)
}

fn as_factor(w: &CVector) -> CMatrix {
    CMatrix::from_column_slice(w.len(), 1, w.as_slice())
}

/// Sum CRB of the isotropic covariance `(P_T / N) I`.
pub fn isotropic_crb(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<f64> {
    let vs = fisher::stacked_tx(ch);
    let t = vs.adjoint() * &vs * C64::new(cfg.total_power / ch.num_tx() as f64, 0.0);
    let s = fisher::rx_gram_for(ch, &cfg.sensing_noise)?;
    Ok(fisher::crb_from_fim(&fisher::fim_from_grams(&s, &linalg::hermitian_part(&t), &ch.b, cfg.snapshots))?.sum_crb)
}

/// Maximum-ratio transmission `w = √P_T h / ‖h‖`.
pub fn endpoint_pc(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<Endpoint> {
    if ch.num_users() != 1 {
        return Err(Error::Unsupported("exactly one user".into()));
    }
    let h = ch.h(0);
    let w = &h * C64::new((cfg.total_power / h.norm_squared()).sqrt(), 0.0);
    Ok(Endpoint {
        gamma: cfg.total_power * h.norm_squared() / cfg.comm_noise_power,
        crb: crb_of_factor(ch, cfg, &as_factor(&w))?,
        beam: w,
    })
}

/// Matched sensing beam `w = √P_T v^* / ‖v‖` also used for communication.
pub fn endpoint_ps_prime(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<Endpoint> {
    single_link(ch)?;
    let v = ch.v.column(0).conjugate();
    let w = &v * C64::new((cfg.total_power / v.norm_squared()).sqrt(), 0.0);
    let hv = ch.h(0).dotc(&v).norm_sqr();
    Ok(Endpoint {
        gamma: cfg.total_power * hv / (v.norm_squared() * cfg.comm_noise_power),
        crb: crb_of_factor(ch, cfg, &as_factor(&w))?,
        beam: w,
    })
}

/// Multiplies `w` by the unit phase making its largest-magnitude entry real positive.
pub fn canonical_phase(w: &CVector) -> CVector {
    let Some((_, top)) = w.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())) else {
        return w.clone();
    };
    if top.norm() == 0.0 {
        return w.clone();
    }
    w * (top.conj() / top.norm())
}

/// Largest `a ∈ [0, cap]` with `λ_min(Σ - a q q^H) ≥ 0`, by bisection.
pub fn alpha_bisection(sigma: &CMatrix, q: &CVector, cap: f64) -> f64 {
    let qq = q * q.adjoint();
    let lmin = |a: f64| linalg::min_eigenvalue(&(sigma - &qq * C64::new(a, 0.0)));
    if lmin(cap) >= 0.0 {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lmin(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sensing-optimal endpoint: unconstrained CRB minimization, then the largest
/// communication beam inside the range of `R_X^s` that keeps `R_d^s ⪰ 0`.
pub fn endpoint_ps(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &DesignOptions) -> Result<(Endpoint, TradeoffEndpoints)> {
    single_link(ch)?;
    let free = cfg.clone().with_uniform_sinr(0.0);
    let sol = designs::solve_crb_min(ch, &free, &DesignOptions { extract_rank_one: false, ..*opts })?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::NumericalLimit(format!("sensing-optimal design stopped with status {:?}", sol.status)));
    }
    let (vals, vecs) = linalg::hermitian_eigen(&sol.rx_reduced());
    let top = vals.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len()).rev().filter(|&i| vals[i] > RANK_TOL * top).collect();
    let mut ut = CMatrix::zeros(vals.len(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        ut.set_column(j, &vecs.column(i));
    }
    let range_s = &sol.basis * ut;
    let sigma_s: Vec<f64> = keep.iter().map(|&i| vals[i]).collect();
    let sigma_m = CMatrix::from_diagonal(&CVector::from_iterator(sigma_s.len(), sigma_s.iter().map(|&s| C64::new(s, 0.0))));

    let h = ch.h(0);
    let uh = range_s.adjoint() * &h;
    let q = &uh / C64::new(uh.norm(), 0.0);
    let alpha_sq = alpha_bisection(&sigma_m, &q, cfg.total_power);
    let w_s = canonical_phase(&(&range_s * &q * C64::new(alpha_sq.sqrt(), 0.0)));
    let wq = range_s.adjoint() * &w_s;
    let rd = linalg::hermitian_part(&(&sigma_m - &wq * wq.adjoint()));
    let gamma_s = h.dotc(&w_s).norm_sqr() / (quad(&rd, &uh) + cfg.comm_noise_power);
    let factor = &range_s * CMatrix::from_diagonal(&CVector::from_iterator(sigma_s.len(), sigma_s.iter().map(|&s| C64::new(s.sqrt(), 0.0))));
    let crb_s = crb_of_factor(ch, cfg, &factor)?;

    let pc = endpoint_pc(ch, cfg)?;
    let psp = endpoint_ps_prime(ch, cfg)?;
    let ps = Endpoint { gamma: gamma_s, crb: crb_s, beam: w_s.clone() };
    Ok((
        ps,
        TradeoffEndpoints {
            gamma_c: pc.gamma,
            crb_c: pc.crb,
            gamma_s,
            crb_s,
            gamma_s_prime: psp.gamma,
            crb_s_prime: psp.crb,
            w_c: pc.beam,
            w_s,
            w_s_prime: psp.beam,
            range_s,
            sigma_s,
            alpha_sq,
            rd_s_reduced: rd,
        },
    ))
}

pub fn endpoints(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &DesignOptions) -> Result<TradeoffEndpoints> {
    Ok(endpoint_ps(ch, cfg, opts)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Optimal,
    NumericalLimit,
    Infeasible,
    Failed,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Optimal => "optimal",
            PointStatus::NumericalLimit => "numerical_limit",
            PointStatus::Infeasible => "infeasible",
            PointStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TradeoffPoint {
    /// Linear SINR requirement applied to every user.
    pub gamma: f64,
    /// Sum CRB (m²) or the max-min power metric (W); NaN when no solution.
    pub value: f64,
    pub status: PointStatus,
    pub sinr: Vec<f64>,
    pub total_power_w: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub objective: MetricKind,
    pub points: Vec<TradeoffPoint>,
    pub scenario_hash: String,
}

impl TradeoffCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma_db,metric_value,status\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", fmt_f64(linear_to_db(p.gamma)), fmt_f64(p.value), p.status.as_str()));
        }
        out
    }
}

pub fn scenario_hash(cfg: &ScenarioConfig) -> String {
    let mut h = DefaultHasher::new();
    ScenarioFile::from_config(cfg, None).to_json().hash(&mut h);
    format!("{:016x}", h.finish())
}

/// `n` logarithmically spaced values from `lo` to `hi` (both linear, positive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

/// Solves the design at every uniform SINR requirement in `gamma_grid`.
/// Points are independent and solved in parallel; failures are recorded per point.
pub fn sweep(ch: &ChannelSet, cfg: &ScenarioConfig, objective: MetricKind, gamma_grid: &[f64], opts: &DesignOptions) -> TradeoffCurve {
    let points = gamma_grid
        .par_iter()
        .map(|&gamma| {
            let c = cfg.clone().with_uniform_sinr(gamma);
            let empty = |status, message| TradeoffPoint {
                gamma,
                value: f64::NAN,
                status,
                sinr: vec![],
                total_power_w: f64::NAN,
                message,
            };
            match designs::solve_by_kind(ch, &c, objective, opts) {
                Ok(sol) => TradeoffPoint {
                    gamma,
                    value: sol.achieved.value,
                    status: if sol.status == SolveStatus::Optimal { PointStatus::Optimal } else { PointStatus::NumericalLimit },
                    total_power_w: sol.total_power(),
                    sinr: sol.sinr,
                    message: None,
                },
                Err(Error::Infeasible(r)) => empty(PointStatus::Infeasible, Some(r.to_string())),
                Err(e) => empty(PointStatus::Failed, Some(e.to_string())),
            }
        })
        .collect();
    TradeoffCurve { objective, points, scenario_hash: scenario_hash(cfg) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub d_m: f64,
    pub crb_ps: f64,
    pub crb_pc: f64,
    pub crb_iso: f64,
    pub sinr_ps: f64,
    pub sinr_pc: f64,
}

/// Evaluates `P_s`, `P_c` and the isotropic covariance for the scenario
/// `template(d)` at every `d`.
pub fn collocated_distance_sweep<F>(template: F, d_values: &[f64], opts: &DesignOptions) -> Result<Vec<DistanceRow>>
where
    F: Fn(f64) -> ScenarioConfig + Sync,
{
    d_values
        .par_iter()
        .map(|&d| {
            let cfg = template(d);
            let ch = build_channel_set(&cfg)?;
            let (ps, _) = endpoint_ps(&ch, &cfg, opts)?;
            let pc = endpoint_pc(&ch, &cfg)?;
            Ok(DistanceRow {
                d_m: d,
                crb_ps: ps.crb,
                crb_pc: pc.crb,
                crb_iso: isotropic_crb(&ch, &cfg)?,
                sinr_ps: ps.gamma,
                sinr_pc: pc.gamma,
            })
        })
        .collect()
}

pub fn distance_csv(rows: &[DistanceRow]) -> String {
    let mut out = String::from("d_m,crb_ps,crb_pc,crb_iso,sinr_ps,sinr_pc\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(r.d_m),
            fmt_f64(r.crb_ps),
            fmt_f64(r.crb_pc),
            fmt_f64(r.crb_iso),
            fmt_f64(r.sinr_ps),
            fmt_f64(r.sinr_pc)
        ));
    }
    out
}
