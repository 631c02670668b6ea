use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, ValueEnum};
use nfisac_core::designs::{self, SubspaceKind};
use nfisac_core::{
    build_channel_set, fisher, linalg, oracle, tradeoff, CMatrix, ChannelSet, DesignOptions, MetricKind, ScenarioConfig,
    SolveStatus, C64,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::failure::Failure;
use crate::scenario::ScenarioArgs;

/// Largest array handled by the brute-force FIM oracle.
const BRUTE_FORCE_MAX: usize = 64;
/// Largest array handled by direct-mode solves.
const DIRECT_MAX: usize = 16;

const FIM_REL: f64 = 1e-8;
const PROJECTOR_ABS: f64 = 1e-8;
const DIRECT_VS_REDUCED_REL: f64 = 1e-3;
const CLOSED_FORM_REL: f64 = 1e-4;
const CONSTRAINT_REL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "quick")]
    pub level: Level,
}

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Box<dyn Fn(&ScenarioConfig, &ChannelSet) -> Verdict>;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn fim_brute_force(cfg: &ScenarioConfig, ch: &ChannelSet) -> Verdict {
    let (n, m) = (ch.num_tx(), ch.num_rx());
    if n > BRUTE_FORCE_MAX || m > BRUTE_FORCE_MAX {
        return Verdict::Skip(format!("arrays larger than {BRUTE_FORCE_MAX} antennas"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r = oracle::random_psd(&mut rng, n, n) * C64::new(cfg.total_power, 0.0);
    let q = cfg.sensing_noise_matrix();
    let snapshots = n + 3;
    let x = oracle::symbol_matrix(&mut rng, &r, snapshots);
    let fim = match fisher::assemble_fim_unchecked(ch, &r, &q, snapshots) {
        Ok(f) => f.matrix,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let brute = oracle::brute_force_fim(ch, &q, &x);
    let scale = match uncancelled_scale(ch, &q, &x) {
        Some(s) => s,
        None => return Verdict::Fail("sensing noise covariance is singular".into()),
    };
    let mut worst: f64 = 0.0;
    for i in 0..fim.nrows() {
        for j in 0..fim.ncols() {
            worst = worst.max((fim[(i, j)] - brute[(i, j)]).abs() / (scale[i] * scale[j]));
        }
    }
    verdict(worst <= FIM_REL, format!("max relative entry error {worst:.2e}"))
}

/// Per-parameter magnitude `s_i` with `|F_ij| ≤ s_i s_j` before cancellation
/// between the transmit and receive derivative terms. Rounding in either FIM
/// evaluation is proportional to `s_i s_j`, not to `|F_ij|`.
fn uncancelled_scale(ch: &ChannelSet, q: &CMatrix, x: &CMatrix) -> Option<Vec<f64>> {
    let lmin = linalg::min_eigenvalue(q);
    if lmin <= 0.0 {
        return None;
    }
    let k = ch.num_targets();
    let mut s = vec![0.0; 5 * k];
    for l in 0..x.ncols() {
        let xl = x.column(l);
        for t in 0..k {
            let vx = ch.v.column(t).dot(&xl).norm();
            let a = ch.a.column(t).norm();
            let b = ch.b[t].norm();
            for axis in 0..3 {
                let dvx = ch.dv[axis].column(t).dot(&xl).norm();
                let m = b * (ch.da[axis].column(t).norm() * vx + a * dvx);
                s[axis * k + t] += 2.0 * m * m / lmin;
            }
            s[3 * k + t] += 2.0 * (a * vx).powi(2) / lmin;
            s[4 * k + t] += 2.0 * (a * vx).powi(2) / lmin;
        }
    }
    Some(s.into_iter().map(f64::sqrt).collect())
}

fn subspace_projector(cfg: &ScenarioConfig, ch: &ChannelSet) -> Verdict {
    let mut worst: f64 = 0.0;
    for kind in [SubspaceKind::SensingCommPower, SubspaceKind::SensingCommCrb] {
        if kind.dimension(cfg.targets.len(), cfg.users.len()) > ch.num_tx() {
            continue;
        }
        let basis = match designs::build_subspace(ch, kind) {
            Ok(b) => b,
            Err(e) => return Verdict::Fail(e.to_string()),
        };
        let diff = linalg::projector(&basis.q_orth) - linalg::pinv_projector(&basis.u_raw, 1e-12);
        worst = worst.max(linalg::frobenius(&diff));
    }
    verdict(worst <= PROJECTOR_ABS, format!("‖P_Q - P_pinv‖ {worst:.2e}"))
}

fn design(kind: MetricKind) -> impl Fn(&ScenarioConfig, &ChannelSet) -> Verdict {
    move |cfg, ch| {
        let opts = DesignOptions::default();
        match designs::feasibility_probe(ch, cfg, &opts.settings) {
            Ok(r) if !r.feasible => return Verdict::Skip(format!("SINR requirements infeasible: {r}")),
            Err(e) => return Verdict::Fail(e.to_string()),
            Ok(_) => {}
        }
        if kind == MetricKind::MinEcho && ch.b.iter().any(|b| b.norm() == 0.0) {
            return Verdict::Skip("zero reflection coefficient".into());
        }
        let sol = match designs::solve_by_kind(ch, cfg, kind, &opts) {
            Ok(s) => s,
            Err(e) => return Verdict::Fail(e.to_string()),
        };
        let power_ok = sol.total_power() <= cfg.total_power * (1.0 + CONSTRAINT_REL);
        let sinr_ok = sol
            .sinr
            .iter()
            .zip(&cfg.users)
            .all(|(s, u)| *s >= u.sinr_threshold * (1.0 - CONSTRAINT_REL));
        verdict(
            sol.status == SolveStatus::Optimal && power_ok && sinr_ok,
            format!(
                "{:?}, value {:e}, power {:.3e}/{:.3e} W, {} iterations",
                sol.status,
                sol.achieved.value,
                sol.total_power(),
                cfg.total_power,
                sol.diagnostics.iterations
            ),
        )
    }
}

fn direct_vs_reduced(cfg: &ScenarioConfig, ch: &ChannelSet) -> Verdict {
    if ch.num_tx() > DIRECT_MAX {
        return Verdict::Skip(format!("more than {DIRECT_MAX} transmit antennas"));
    }
    let reduced = DesignOptions { extract_rank_one: false, ..DesignOptions::default() };
    let direct = DesignOptions { extract_rank_one: false, ..DesignOptions::direct() };
    let solve = |o: &DesignOptions| designs::solve_crb_min(ch, cfg, o);
    match (solve(&direct), solve(&reduced)) {
        (Ok(d), Ok(r)) => {
            let diff = rel(r.achieved.value, d.achieved.value);
            let both = d.status == SolveStatus::Optimal && r.status == SolveStatus::Optimal;
            verdict(both && diff <= DIRECT_VS_REDUCED_REL, format!("relative CRB difference {diff:.2e}"))
        }
        (Err(e), _) | (_, Err(e)) => Verdict::Fail(e.to_string()),
    }
}

fn collocated_closed_form(cfg: &ScenarioConfig, ch: &ChannelSet) -> Verdict {
    if cfg.targets.len() != 1 || cfg.users.len() != 1 {
        return Verdict::Skip("needs one target and one user".into());
    }
    let u = &cfg.users[0];
    if u.nlos_coefficient != 0.0 || (u.position - cfg.targets[0].position).norm() > 0.0 {
        return Verdict::Skip("user is not a LoS user at the target".into());
    }
    if let Err(e) = fisher::check_symmetric_configuration(ch, SYMMETRY_TOL) {
        return Verdict::Skip(e.to_string());
    }
    let cf: f64 = match fisher::closed_form_from_noise(ch, &cfg.sensing_noise, cfg.snapshots, [cfg.total_power, 0.0, 0.0, 0.0]) {
        Ok(v) => v.iter().sum(),
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    match tradeoff::endpoints(ch, cfg, &DesignOptions::default()) {
        Ok(e) => {
            let crb_err = rel(e.crb_s, cf);
            let gap = rel(e.gamma_s, e.gamma_c);
            verdict(
                crb_err <= CLOSED_FORM_REL && gap <= CLOSED_FORM_REL,
                format!("CRB vs closed form {crb_err:.2e}, Γ_s vs Γ_c {gap:.2e}"),
            )
        }
        Err(e) => Verdict::Fail(e.to_string()),
    }
}

fn checks(level: Level) -> Vec<(&'static str, Check)> {
    let mut out: Vec<(&'static str, Check)> = vec![
        ("fim-brute-force", Box::new(fim_brute_force)),
        ("subspace-projector", Box::new(subspace_projector)),
        ("collocated-closed-form", Box::new(collocated_closed_form)),
        ("design-crb", Box::new(design(MetricKind::SumCrb))),
    ];
    if level == Level::Full {
        out.push(("design-illumination", Box::new(design(MetricKind::MinIllumination))));
        out.push(("design-echo", Box::new(design(MetricKind::MinEcho))));
        out.push(("direct-vs-reduced", Box::new(direct_vs_reduced)));
    }
    out
}

pub fn run(args: ValidateArgs) -> Result<ExitCode, Failure> {
    let loaded = args.scenario.load()?;
    let ch = build_channel_set(&loaded.cfg)?;
    println!(
        "scenario {}: N = {}, M = {}, K = {}, U = {}",
        loaded.source,
        ch.num_tx(),
        ch.num_rx(),
        ch.num_targets(),
        ch.num_users()
    );
    let mut failed = 0;
    for (name, check) in checks(args.level) {
        let t0 = Instant::now();
        let (tag, detail) = match check(&loaded.cfg, &ch) {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Skip(d) => ("SKIP", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag:<4}  {name:<24} {:>7.2}s  {detail}", t0.elapsed().as_secs_f64());
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
