//! SINR-constrained transmit covariance designs: sum-CRB minimization and
//! max-min illumination or echo power, solved as semidefinite programs over a
//! low-dimensional subspace, followed by rank-one beam extraction.
//!
//! Every covariance is parameterized in basis coordinates, `R = B S B^H` with `B`
//! orthonormal. The SDP variables are `S_X` (the total covariance) and one
//! `S_u` per user; the dedicated sensing part is `S_X - Σ_u S_u ⪰ 0`. Power is
//! normalized so the variables have unit trace budget.

mod probe;
mod subspace;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::conic::{self, embed, ProblemBuilder, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::fisher;
use crate::metrics::{self, quad, AchievedMetric, DesignSolution, MetricKind, SolveDiagnostics};
use crate::scenario::ScenarioConfig;
use crate::{linalg, CMatrix, CVector, RMatrix, C64};

pub use probe::{feasibility_probe, max_uniform_sinr, single_user_max_sinr};
pub use subspace::{build_subspace, SubspaceBasis, SubspaceKind};

/// Rank threshold relative to the largest eigenvalue.
pub const RANK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceMode {
    /// Variables of order `4K + U` (CRB) or `K + U` (power designs).
    Reduced,
    /// Full `N × N` variables.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub mode: SubspaceMode,
    pub settings: SolverSettings,
    pub extract_rank_one: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            mode: SubspaceMode::Reduced,
            settings: SolverSettings::default(),
            extract_rank_one: true,
        }
    }
}

impl DesignOptions {
    pub fn direct() -> Self {
        Self { mode: SubspaceMode::Direct, ..Self::default() }
    }
}

/// Outcome of the minimum-power SINR feasibility problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Linear SINR requirements.
    pub required_sinr: Vec<f64>,
    /// Interference-free bound `P_T ‖h_u‖² / σ_c²` per user.
    pub max_sinr: Vec<f64>,
    /// Least total power meeting every requirement; infinite if none does.
    pub min_power_w: f64,
    pub budget_w: f64,
    pub feasible: bool,
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "minimum power {:.6e} W vs budget {:.6e} W;", self.min_power_w, self.budget_w)?;
        for (u, (req, max)) in self.required_sinr.iter().zip(&self.max_sinr).enumerate() {
            write!(
                f,
                " user {u}: required {:.3} dB, max achievable {:.3} dB;",
                crate::scenario::linear_to_db(*req),
                crate::scenario::linear_to_db(*max)
            )?;
        }
        Ok(())
    }
}

enum Objective {
    Crb,
    MaxMin { kind: MetricKind, weights: Vec<f64> },
}

/// Hermitian basis matrices matching [`linalg::hermitian_from_params`].
fn hermitian_basis(r: usize) -> Vec<CMatrix> {
    let mut p = vec![0.0; r * r];
    (0..r * r)
        .map(|i| {
            p[i] = 1.0;
            let m = linalg::hermitian_from_params(&p, r);
            p[i] = 0.0;
            m
        })
        .collect()
}

/// `x^H B_i x` for every basis matrix, without forming `B_i`.
fn quad_coeffs(x: &CVector) -> Vec<f64> {
    let r = x.len();
    let half = r * (r - 1) / 2;
    let mut out = vec![0.0; r * r];
    let mut k = 0;
    for i in 0..r {
        out[i] = x[i].norm_sqr();
        for j in (i + 1)..r {
            // conj(x_i) X_ij x_j + conj(x_j) conj(X_ij) x_i = 2 Re(X_ij conj(x_i) x_j)
            let z = x[i].conj() * x[j];
            out[r + k] = 2.0 * z.re;
            out[r + half + k] = -2.0 * z.im;
            k += 1;
        }
    }
    out
}

fn trace_coeffs(r: usize) -> Vec<f64> {
    (0..r * r).map(|i| if i < r { 1.0 } else { 0.0 }).collect()
}

fn psd_clamp(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(m);
    let d = CVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::new(l.max(0.0), 0.0)));
    linalg::hermitian_part(&(&vecs * CMatrix::from_diagonal(&d) * vecs.adjoint()))
}

struct Chosen {
    basis: CMatrix,
    mode: SubspaceMode,
    fell_back: bool,
    dropped: usize,
}

fn choose_basis(ch: &ChannelSet, kind: SubspaceKind, mode: SubspaceMode) -> Result<Chosen> {
    let n = ch.num_tx();
    let direct = |fell_back| Chosen {
        basis: CMatrix::identity(n, n),
        mode: SubspaceMode::Direct,
        fell_back,
        dropped: 0,
    };
    match mode {
        SubspaceMode::Direct => Ok(direct(false)),
        SubspaceMode::Reduced => {
            if kind.dimension(ch.num_targets(), ch.num_users()) > n {
                return Ok(direct(true));
            }
            let sb = build_subspace(ch, kind)?;
            Ok(Chosen {
                dropped: sb.dropped_columns,
                basis: sb.q_orth,
                mode: SubspaceMode::Reduced,
                fell_back: false,
            })
        }
    }
}

fn check_users(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<()> {
    if ch.num_users() != cfg.num_users() || ch.num_targets() != cfg.num_targets() || ch.num_tx() != cfg.num_tx() {
        return Err(Error::ShapeMismatch("channel set does not match scenario".into()));
    }
    Ok(())
}

fn probe_if_needed(ch: &ChannelSet, cfg: &ScenarioConfig, settings: &SolverSettings) -> Result<Option<FeasibilityReport>> {
    if cfg.users.iter().all(|u| u.sinr_threshold == 0.0) {
        return Ok(None);
    }
    let report = feasibility_probe(ch, cfg, settings)?;
    if !report.feasible {
        return Err(Error::Infeasible(report));
    }
    Ok(Some(report))
}

/// Minimizes the sum of position CRBs under SINR and power constraints.
pub fn solve_crb_min(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &DesignOptions) -> Result<DesignSolution> {
    solve_design(ch, cfg, Objective::Crb, opts)
}

/// Maximizes the smallest illumination power `v^T R_X v^*` over targets.
pub fn solve_maxmin_illumination(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &DesignOptions) -> Result<DesignSolution> {
    let weights = vec![1.0; ch.num_targets()];
    solve_design(ch, cfg, Objective::MaxMin { kind: MetricKind::MinIllumination, weights }, opts)
}

/// Maximizes the smallest echo power `‖a‖² |b|^p v^T R_X v^*` over targets.
pub fn solve_maxmin_echo(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &DesignOptions) -> Result<DesignSolution> {
    for (k, b) in ch.b.iter().enumerate() {
        if b.norm() == 0.0 {
            return Err(Error::ZeroReflection { target: k });
        }
    }
    let weights = (0..ch.num_targets())
        .map(|k| metrics::echo_weight(ch, k, cfg.echo_power_exponent))
        .collect();
    solve_design(ch, cfg, Objective::MaxMin { kind: MetricKind::MinEcho, weights }, opts)
}

pub fn solve_by_kind(ch: &ChannelSet, cfg: &ScenarioConfig, kind: MetricKind, opts: &DesignOptions) -> Result<DesignSolution> {
    match kind {
        MetricKind::SumCrb => solve_crb_min(ch, cfg, opts),
        MetricKind::MinIllumination => solve_maxmin_illumination(ch, cfg, opts),
        MetricKind::MinEcho => solve_maxmin_echo(ch, cfg, opts),
    }
}

fn solve_design(ch: &ChannelSet, cfg: &ScenarioConfig, objective: Objective, opts: &DesignOptions) -> Result<DesignSolution> {
    check_users(ch, cfg)?;
    opts.settings.validate()?;
    let start = Instant::now();
    let report = probe_if_needed(ch, cfg, &opts.settings)?;

    let kind = match objective {
        Objective::Crb => SubspaceKind::SensingCommCrb,
        Objective::MaxMin { .. } => SubspaceKind::SensingCommPower,
    };
    let chosen = choose_basis(ch, kind, opts.mode)?;
    let b = &chosen.basis;
    let r = b.ncols();
    let rr = r * r;
    let num_users = ch.num_users();
    let p_t = cfg.total_power;
    let sigma2 = cfg.comm_noise_power;
    let gs: Vec<CVector> = (0..num_users).map(|u| b.adjoint() * ch.h(u)).collect();

    let mut pb = ProblemBuilder::new();
    let sx = pb.add_vars("S_X", rr);
    let su: Vec<_> = (0..num_users).map(|u| pb.add_vars(format!("S_{u}"), rr)).collect();

    // PSD of every user covariance and of the dedicated part S_X - Σ S_u.
    let herm = hermitian_basis(r);
    let emb: Vec<RMatrix> = herm.iter().map(embed).collect();
    let zero = RMatrix::zeros(2 * r, 2 * r);
    for range in &su {
        pb.add_lmi(zero.clone(), range.clone().zip(emb.iter().cloned()).collect());
    }
    let mut terms: Vec<(usize, RMatrix)> = sx.clone().zip(emb.iter().cloned()).collect();
    for range in &su {
        terms.extend(range.clone().zip(emb.iter().map(|e| -e)));
    }
    pb.add_lmi(zero, terms);

    // tr S_X ≤ 1
    pb.add_linear_ge(sx.clone().zip(trace_coeffs(r).into_iter().map(|c| -c)).collect(), 1.0);

    // (1 + Γ) g^H S_u g - Γ g^H S_X g ≥ Γ σ² / P_T
    for (u, g) in gs.iter().enumerate() {
        let gamma = cfg.users[u].sinr_threshold;
        if gamma == 0.0 {
            continue;
        }
        let q = quad_coeffs(g);
        let rhs = gamma * sigma2 / p_t;
        let scale = q.iter().fold(0.0f64, |a, v| a.max(v.abs())) * (1.0 + gamma);
        let scale = scale.max(rhs).max(f64::MIN_POSITIVE);
        let mut row: Vec<(usize, f64)> = su[u].clone().zip(q.iter().map(|v| (1.0 + gamma) * v / scale)).collect();
        row.extend(sx.clone().zip(q.iter().map(|v| -gamma * v / scale)));
        pb.add_linear_ge(row, -rhs / scale);
    }

    let objective_scale: f64;
    let mut crb_weights = Vec::new();
    let epi = match &objective {
        Objective::Crb => {
            let k = ch.num_targets();
            let s = fisher::rx_gram_for(ch, &cfg.sensing_noise)?;
            let ys = b.adjoint() * fisher::stacked_tx(ch).conjugate();
            // FIM of R_X = P_T B B_i B^H; T = conj(Ys^H B_i Ys)
            let coeffs: Vec<RMatrix> = herm
                .iter()
                .map(|bi| {
                    let t = (ys.adjoint() * bi * &ys).conjugate() * C64::new(p_t, 0.0);
                    fisher::fim_from_grams(&s, &t, &ch.b, cfg.snapshots).matrix
                })
                .collect();
            let dim = 5 * k;
            let mut reference = RMatrix::zeros(dim, dim);
            for c in coeffs.iter().take(r) {
                reference += c / r as f64;
            }
            let d: Vec<f64> = (0..dim)
                .map(|i| if reference[(i, i)] > 0.0 { reference[(i, i)].powf(-0.5) } else { 1.0 })
                .collect();
            let scaled: Vec<RMatrix> = coeffs
                .iter()
                .map(|c| RMatrix::from_fn(dim, dim, |i, j| d[i] * c[(i, j)] * d[j]))
                .collect();
            // t_j is measured in units of the reference CRB so correlated
            // parameters do not push the optimum far from the starting scale.
            let scaled_ref = RMatrix::from_fn(dim, dim, |i, j| d[i] * reference[(i, j)] * d[j]);
            let c_ref: Vec<f64> = match fisher::invert_fim(&scaled_ref) {
                Ok((inv, _)) => (0..3 * k).map(|j| inv[(j, j)].max(1.0)).collect(),
                Err(_) => vec![1.0; 3 * k],
            };
            crb_weights = (0..3 * k).map(|j| d[j] * d[j] * c_ref[j]).collect();
            objective_scale = crb_weights.iter().cloned().fold(0.0, f64::max);
            let t = pb.add_vars("t", 3 * k);
            for (j, tj) in t.clone().enumerate() {
                pb.set_cost(tj, crb_weights[j] / objective_scale);
                let mut m0 = RMatrix::zeros(dim + 1, dim + 1);
                m0[(j, dim)] = c_ref[j].powf(-0.5);
                m0[(dim, j)] = c_ref[j].powf(-0.5);
                let mut terms: Vec<(usize, RMatrix)> = sx
                    .clone()
                    .zip(&scaled)
                    .map(|(var, c)| {
                        let mut m = RMatrix::zeros(dim + 1, dim + 1);
                        m.view_mut((0, 0), (dim, dim)).copy_from(c);
                        (var, m)
                    })
                    .collect();
                let mut e = RMatrix::zeros(dim + 1, dim + 1);
                e[(dim, dim)] = 1.0;
                terms.push((tj, e));
                pb.add_lmi(m0, terms);
            }
            t
        }
        Objective::MaxMin { weights, .. } => {
            let cs: Vec<Vec<f64>> = (0..ch.num_targets())
                .map(|k| quad_coeffs(&(b.adjoint() * ch.v.column(k).conjugate())))
                .collect();
            let peak = (0..ch.num_targets())
                .map(|k| weights[k] * cs[k][..r].iter().sum::<f64>())
                .fold(0.0, f64::max);
            objective_scale = p_t * peak.max(f64::MIN_POSITIVE);
            let mu = pb.add_vars("mu", 1);
            pb.set_cost(mu.start, -1.0);
            // P_T w_k c_k^H S_X c_k ≥ μ scale
            for (k, c) in cs.iter().enumerate() {
                let f = p_t * weights[k] / objective_scale;
                let mut row: Vec<(usize, f64)> = sx.clone().zip(c.iter().map(|v| v * f)).collect();
                row.push((mu.start, -1.0));
                pb.add_linear_ge(row, 0.0);
            }
            mu
        }
    };

    let problem = pb.build();
    let sol = conic::solve(&problem, &opts.settings)?;
    match sol.status {
        SolveStatus::Infeasible => {
            let report = match report {
                Some(r) => r,
                None => feasibility_probe(ch, cfg, &opts.settings)?,
            };
            return Err(Error::Infeasible(report));
        }
        SolveStatus::Unbounded => {
            return Err(Error::NumericalLimit("design problem reported unbounded".into()));
        }
        _ => {}
    }

    let mat = |range: &std::ops::Range<usize>| {
        let p: Vec<f64> = range.clone().map(|i| sol.x[i]).collect();
        psd_clamp(&(linalg::hermitian_from_params(&p, r) * C64::new(p_t, 0.0)))
    };
    let rx = mat(&sx);
    let w_reduced: Vec<CMatrix> = su.iter().map(|range| mat(range)).collect();
    let rd = psd_clamp(&w_reduced.iter().fold(rx, |acc, w| acc - w));

    let objective_value = match &objective {
        Objective::Crb => epi.clone().zip(&crb_weights).map(|(i, w)| sol.x[i] * w).sum(),
        Objective::MaxMin { .. } => sol.x[epi.start] * objective_scale,
    };

    let mut out = DesignSolution {
        basis: chosen.basis.clone(),
        w_reduced,
        rd_reduced: rd,
        objective_value,
        sinr: Vec::new(),
        status: sol.status,
        achieved: AchievedMetric { kind: MetricKind::SumCrb, value: f64::NAN },
        diagnostics: SolveDiagnostics {
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            gap: sol.gap,
            wall_time_s: 0.0,
            variable_order: r,
            mode: Some(chosen.mode),
            fell_back_to_direct: chosen.fell_back,
            dropped_columns: chosen.dropped,
            rank_one_extracted: false,
        },
    };
    if opts.extract_rank_one {
        out = extract_rank_one(out, ch, cfg, &opts.settings)?;
    }
    out.sinr = metrics::all_sinr(ch, &out, sigma2);
    out.achieved = match &objective {
        Objective::Crb => AchievedMetric { kind: MetricKind::SumCrb, value: achieved_crb(ch, cfg, &out)? },
        Objective::MaxMin { kind, weights } => {
            let ill = metrics::illuminations(ch, &out);
            let value = ill.iter().zip(weights).map(|(e, w)| e * w).fold(f64::INFINITY, f64::min);
            AchievedMetric { kind: *kind, value }
        }
    };
    out.diagnostics.set_wall_time(start.elapsed());
    Ok(out)
}

/// Sum CRB of a solution's `R_X`, evaluated from its factor.
pub fn achieved_crb(ch: &ChannelSet, cfg: &ScenarioConfig, sol: &DesignSolution) -> Result<f64> {
    let fim = fisher::fim_of_factor(ch, &sol.rx_factor(), &cfg.sensing_noise, cfg.snapshots)?;
    Ok(fisher::crb_from_fim(&fim)?.sum_crb)
}

/// Replaces every `W_u` by the rank-one `ξ ξ^H`, `ξ = W_u h_u / sqrt(h_u^H W_u h_u)`,
/// and moves the remainder into `R_d`. `R_X` and every SINR are unchanged.
pub fn extract_rank_one(
    mut sol: DesignSolution,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    settings: &SolverSettings,
) -> Result<DesignSolution> {
    let mut rd = sol.rd_reduced.clone();
    for u in 0..sol.num_users() {
        let w = sol.w_reduced[u].clone();
        let g = sol.coords(&ch.h(u));
        let gain = quad(&w, &g);
        let tr = linalg::trace_re(&w);
        let bar = if gain > settings.psd_eig_floor * tr && gain > 0.0 {
            let xi = &w * &g / C64::new(gain.sqrt(), 0.0);
            &xi * xi.adjoint()
        } else if cfg.users[u].sinr_threshold > 0.0 {
            return Err(Error::DegenerateBeam { user: u });
        } else {
            CMatrix::zeros(w.nrows(), w.ncols())
        };
        rd += w - &bar;
        sol.w_reduced[u] = bar;
    }
    sol.rd_reduced = linalg::hermitian_part(&rd);
    sol.diagnostics.rank_one_extracted = true;
    Ok(sol)
}

/// Dedicated sensing beams `√λ_n u_n` from the eigen-decomposition of `R_d`.
pub fn dedicated_beamformers_from_rd(r_d: &CMatrix, psd_eig_floor: f64) -> Vec<CVector> {
    let (vals, vecs) = linalg::hermitian_eigen(r_d);
    let trace: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    (0..vals.len())
        .rev()
        .filter(|&i| vals[i] > psd_eig_floor * trace && vals[i] > 0.0)
        .map(|i| vecs.column(i) * C64::new(vals[i].sqrt(), 0.0))
        .collect()
}

#[cfg(test)]
mod tests;
