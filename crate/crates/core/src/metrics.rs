//! Communication SINR, illumination and echo power, design solutions and
//! beampattern grids.

use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_vector, ChannelSet};
use crate::conic::SolveStatus;
use crate::designs::SubspaceMode;
use crate::error::{Error, Result};
use crate::scenario::{ArrayFile, Axis, Point};
use crate::{io, linalg, CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    SumCrb,
    MinIllumination,
    MinEcho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AchievedMetric {
    pub kind: MetricKind,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// Omitted from JSON when zero so that repeated runs serialize identically.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub wall_time_s: f64,
    /// Order of the per-beam variables actually solved for.
    pub variable_order: usize,
    pub mode: Option<SubspaceMode>,
    /// Reduced mode was requested but `4K + U > N`.
    pub fell_back_to_direct: bool,
    /// Basis columns dropped as linearly dependent.
    pub dropped_columns: usize,
    pub rank_one_extracted: bool,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl SolveDiagnostics {
    pub fn set_wall_time(&mut self, d: Duration) {
        self.wall_time_s = d.as_secs_f64();
    }
}

/// Transmit covariance design `R_X = Σ_u W_u + R_d`, stored as `B S B^H` with
/// `B` an `N × r` matrix of orthonormal columns and `S` the `r × r` blocks.
/// Direct solves use `B = I`.
#[derive(Debug, Clone)]
pub struct DesignSolution {
    pub basis: CMatrix,
    pub w_reduced: Vec<CMatrix>,
    pub rd_reduced: CMatrix,
    pub objective_value: f64,
    pub sinr: Vec<f64>,
    pub status: SolveStatus,
    pub achieved: AchievedMetric,
    pub diagnostics: SolveDiagnostics,
}

fn lift(b: &CMatrix, s: &CMatrix) -> CMatrix {
    b * s * b.adjoint()
}

impl DesignSolution {
    pub fn num_users(&self) -> usize {
        self.w_reduced.len()
    }

    pub fn w(&self, user: usize) -> CMatrix {
        lift(&self.basis, &self.w_reduced[user])
    }

    pub fn r_d(&self) -> CMatrix {
        lift(&self.basis, &self.rd_reduced)
    }

    pub fn rx_reduced(&self) -> CMatrix {
        self.w_reduced.iter().fold(self.rd_reduced.clone(), |acc, w| acc + w)
    }

    pub fn r_x(&self) -> CMatrix {
        lift(&self.basis, &self.rx_reduced())
    }

    /// Factor `F` with `R_X = F F^H`.
    pub fn rx_factor(&self) -> CMatrix {
        &self.basis * linalg::psd_factor(&self.rx_reduced(), 1e-14)
    }

    pub fn total_power(&self) -> f64 {
        linalg::trace_re(&self.rx_reduced())
    }

    /// Projects an `N`-vector into basis coordinates.
    pub fn coords(&self, x: &CVector) -> CVector {
        self.basis.adjoint() * x
    }

    /// Per-user beams `w_u` with `W_u = w_u w_u^H`, meaningful after rank-one extraction.
    pub fn beam(&self, user: usize) -> CVector {
        let f = linalg::psd_factor(&self.w_reduced[user], 1e-7);
        if f.ncols() == 0 {
            return CVector::zeros(self.basis.nrows());
        }
        &self.basis * f.column(f.ncols() - 1)
    }
}

/// Quadratic form `x^H S x`, real part.
pub(crate) fn quad(s: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(s * x)).re
}

/// SINR of `user` from per-user covariances and the dedicated sensing covariance.
pub fn sinr_from_parts(h: &CVector, w: &[CMatrix], r_d: &CMatrix, user: usize, comm_noise: f64) -> f64 {
    let signal = quad(&w[user], h);
    let interference: f64 = w
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != user)
        .map(|(_, wk)| quad(wk, h))
        .sum();
    signal / (interference + quad(r_d, h) + comm_noise)
}

pub fn sinr(ch: &ChannelSet, sol: &DesignSolution, user: usize, comm_noise: f64) -> f64 {
    let g = sol.coords(&ch.h(user));
    sinr_from_parts(&g, &sol.w_reduced, &sol.rd_reduced, user, comm_noise)
}

pub fn all_sinr(ch: &ChannelSet, sol: &DesignSolution, comm_noise: f64) -> Vec<f64> {
    (0..sol.num_users()).map(|u| sinr(ch, sol, u, comm_noise)).collect()
}

/// `v^T R_X v^*` at target `target`.
pub fn illumination_power(ch: &ChannelSet, rx_cov: &CMatrix, target: usize) -> f64 {
    quad(rx_cov, &ch.v.column(target).conjugate())
}

/// Weight `‖a‖² |b|^p` converting illumination into echo power.
pub fn echo_weight(ch: &ChannelSet, target: usize, exponent: u8) -> f64 {
    ch.a.column(target).norm_squared() * ch.b[target].norm().powi(exponent as i32)
}

/// `‖a‖² |b|^p v^T R_X v^*`; `p = 1` by default.
pub fn echo_power(ch: &ChannelSet, rx_cov: &CMatrix, target: usize, exponent: u8) -> f64 {
    echo_weight(ch, target, exponent) * illumination_power(ch, rx_cov, target)
}

/// Illumination of every target for a solution, computed in basis coordinates.
pub fn illuminations(ch: &ChannelSet, sol: &DesignSolution) -> Vec<f64> {
    let rx = sol.rx_reduced();
    (0..ch.num_targets())
        .map(|k| quad(&rx, &sol.coords(&ch.v.column(k).conjugate())))
        .collect()
}

pub fn echoes(ch: &ChannelSet, sol: &DesignSolution, exponent: u8) -> Vec<f64> {
    illuminations(ch, sol)
        .into_iter()
        .enumerate()
        .map(|(k, e)| e * echo_weight(ch, k, exponent))
        .collect()
}

// ---------------------------------------------------------------------------
// Beampattern grids
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    /// Parses `min:max:steps`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Parse(format!("range {s:?} is not min:max:steps"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Self {
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            steps: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

/// Beampattern samples on a plane orthogonal to `fixed_axis`. `power[j][i]` is at
/// `(first[i], second[j])` where `first`/`second` are the remaining axes in
/// x, y, z order.
#[derive(Debug, Clone)]
pub struct BeampatternGrid {
    pub fixed_axis: Axis,
    pub fixed_value: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub power: Vec<Vec<f64>>,
}

fn free_axes(fixed: Axis) -> (usize, usize) {
    match fixed {
        Axis::X => (1, 2),
        Axis::Y => (0, 2),
        Axis::Z => (0, 1),
    }
}

/// Samples `v^T(p) R_X v^*(p) = ‖F^H v^*(p)‖²` for `R_X = F F^H`. Cells that
/// coincide with a transmit antenna are NaN.
pub fn beampattern_grid(
    tx_positions: &[Point],
    wavelength: f64,
    rx_factor: &CMatrix,
    fixed_axis: Axis,
    fixed_value: f64,
    first: GridRange,
    second: GridRange,
) -> BeampatternGrid {
    let (a, b) = free_axes(fixed_axis);
    let xs = first.values();
    let ys = second.values();
    let fh = rx_factor.adjoint();
    let power = ys
        .par_iter()
        .map(|&yv| {
            xs.iter()
                .map(|&xv| {
                    let mut p = Point::zeros();
                    p[fixed_axis.index()] = fixed_value;
                    p[a] = xv;
                    p[b] = yv;
                    match steering_vector(tx_positions, &p, wavelength) {
                        Ok(v) => (&fh * v.conjugate()).norm_squared(),
                        Err(_) => f64::NAN,
                    }
                })
                .collect()
        })
        .collect();
    BeampatternGrid {
        fixed_axis,
        fixed_value,
        first: xs,
        second: ys,
        power,
    }
}

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

impl BeampatternGrid {
    /// CSV with one row per cell, the second axis varying slowest.
    pub fn to_csv(&self) -> String {
        let (a, b) = free_axes(self.fixed_axis);
        let mut out = format!("{}_m,{}_m,power_w\n", AXIS_NAMES[a], AXIS_NAMES[b]);
        for (j, yv) in self.second.iter().enumerate() {
            for (i, xv) in self.first.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    io::fmt_f64(*xv),
                    io::fmt_f64(*yv),
                    io::fmt_f64(self.power[j][i])
                ));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// JSON form
// ---------------------------------------------------------------------------

type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("ragged matrix in solution file".into()));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Geometry {
    pub carrier_hz: f64,
    pub tx: ArrayFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CovarianceJson {
    Full {
        w: Vec<JsonMatrix>,
        r_d: JsonMatrix,
        r_x: JsonMatrix,
    },
    Factored {
        basis: JsonMatrix,
        w_reduced: Vec<JsonMatrix>,
        rd_reduced: JsonMatrix,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub status: SolveStatus,
    pub objective_value: f64,
    pub achieved: AchievedMetric,
    pub sinr: Vec<f64>,
    pub illumination_w: Vec<f64>,
    pub echo_w: Vec<f64>,
    pub total_power_w: f64,
    pub diagnostics: SolveDiagnostics,
    pub geometry: Geometry,
    pub covariance: CovarianceJson,
}

impl SolutionFile {
    pub fn new(sol: &DesignSolution, ch: &ChannelSet, geometry: Geometry, echo_exponent: u8, factored: bool) -> Self {
        let covariance = if factored {
            CovarianceJson::Factored {
                basis: matrix_to_json(&sol.basis),
                w_reduced: sol.w_reduced.iter().map(matrix_to_json).collect(),
                rd_reduced: matrix_to_json(&sol.rd_reduced),
            }
        } else {
            CovarianceJson::Full {
                w: (0..sol.num_users()).map(|u| matrix_to_json(&sol.w(u))).collect(),
                r_d: matrix_to_json(&sol.r_d()),
                r_x: matrix_to_json(&sol.r_x()),
            }
        };
        Self {
            status: sol.status,
            objective_value: sol.objective_value,
            achieved: sol.achieved,
            sinr: sol.sinr.clone(),
            illumination_w: illuminations(ch, sol),
            echo_w: echoes(ch, sol, echo_exponent),
            total_power_w: sol.total_power(),
            diagnostics: sol.diagnostics.clone(),
            geometry,
            covariance,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serialization is infallible");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Factor `F` with `R_X = F F^H`.
    pub fn rx_factor(&self) -> Result<CMatrix> {
        match &self.covariance {
            CovarianceJson::Full { r_x, .. } => Ok(linalg::psd_factor(&matrix_from_json(r_x)?, 1e-14)),
            CovarianceJson::Factored { basis, w_reduced, rd_reduced } => {
                let b = matrix_from_json(basis)?;
                let mut s = matrix_from_json(rd_reduced)?;
                for w in w_reduced {
                    s += matrix_from_json(w)?;
                }
                Ok(b * linalg::psd_factor(&s, 1e-14))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{channel, oracle, presets};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn direct(w: Vec<CMatrix>, r_d: CMatrix) -> DesignSolution {
        let n = r_d.nrows();
        DesignSolution {
            basis: CMatrix::identity(n, n),
            w_reduced: w,
            rd_reduced: r_d,
            objective_value: 0.0,
            sinr: Vec::new(),
            status: SolveStatus::Optimal,
            achieved: AchievedMetric { kind: MetricKind::SumCrb, value: 0.0 },
            diagnostics: SolveDiagnostics::default(),
        }
    }

    fn small() -> (crate::ScenarioConfig, ChannelSet) {
        let mut cfg = presets::multi_target(4, 4, 0.3, Some(0.0));
        cfg.targets.truncate(1);
        let ch = channel::build_channel_set(&cfg).unwrap();
        (cfg, ch)
    }

    #[test]
    fn mrt_sinr() {
        let (cfg, ch) = small();
        let h = ch.h(0);
        let p = cfg.total_power;
        let w = &h * h.adjoint() * C64::new(p / h.norm_squared(), 0.0);
        let sol = direct(vec![w, CMatrix::zeros(16, 16)], CMatrix::zeros(16, 16));
        let got = sinr(&ch, &sol, 0, cfg.comm_noise_power);
        let cross = quad(&sol.w(0), &ch.h(1));
        let want = p * h.norm_squared() / (cross * 0.0 + cfg.comm_noise_power);
        assert!((got - want).abs() <= 1e-12 * want);
        assert_eq!(sinr(&ch, &sol, 1, cfg.comm_noise_power), 0.0);
    }

    #[test]
    fn sinr_matches_vector_form() {
        let (cfg, ch) = small();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let beams: Vec<CVector> = (0..2).map(|_| oracle::random_complex(&mut rng, 16, 1).column(0).into_owned()).collect();
        let rd = oracle::random_psd(&mut rng, 16, 3);
        let w: Vec<CMatrix> = beams.iter().map(|b| b * b.adjoint()).collect();
        let sol = direct(w, rd.clone());
        for u in 0..2 {
            let h = ch.h(u);
            let sig = h.dotc(&beams[u]).norm_sqr();
            let int = h.dotc(&beams[1 - u]).norm_sqr();
            let want = sig / (int + h.dotc(&(&rd * &h)).re + cfg.comm_noise_power);
            let got = sinr(&ch, &sol, u, cfg.comm_noise_power);
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn illumination_and_echo_reference_values() {
        let (cfg, ch) = small();
        let v = ch.v.column(0).into_owned();
        let p = cfg.total_power;
        let aligned = v.conjugate() * v.transpose() * C64::new(p / v.norm_squared(), 0.0);
        let e = illumination_power(&ch, &aligned, 0);
        assert!((e - p * v.norm_squared()).abs() <= 1e-12 * e);
        let iso = CMatrix::identity(16, 16) * C64::new(p / 16.0, 0.0);
        let e_iso = illumination_power(&ch, &iso, 0);
        assert!((e_iso - p / 16.0 * v.norm_squared()).abs() <= 1e-12 * e_iso);
        let mut zero_b = ch.clone();
        zero_b.b[0] = C64::new(0.0, 0.0);
        assert_eq!(echo_power(&zero_b, &aligned, 0, 1), 0.0);
        let weight = ch.a.column(0).norm_squared();
        assert!((echo_power(&ch, &aligned, 0, 1) - weight * e).abs() <= 1e-12 * weight * e);
    }

    #[test]
    fn grid_cell_at_target_equals_illumination_and_is_symmetric() {
        let cfg = presets::bistatic_collocated(28e9, 6, 0.0, 0.2);
        let ch = channel::build_channel_set(&cfg).unwrap();
        let v = ch.v.column(0).into_owned();
        let f = v.conjugate() * C64::new((cfg.total_power / v.norm_squared()).sqrt(), 0.0);
        let f = CMatrix::from_column_slice(v.len(), 1, f.as_slice());
        let one = GridRange { min: 0.0, max: 0.0, steps: 1 };
        let z = GridRange { min: 0.1, max: 0.1, steps: 1 };
        let g = beampattern_grid(&ch.tx_positions, ch.wavelength, &f, Axis::X, 0.0, one, z);
        let r = &f * f.adjoint();
        let e = illumination_power(&ch, &r, 0);
        assert!((g.power[0][0] - e).abs() <= 1e-12 * e);

        let ys = GridRange { min: -0.05, max: 0.05, steps: 11 };
        let zs = GridRange { min: 0.02, max: 0.2, steps: 5 };
        let g = beampattern_grid(&ch.tx_positions, ch.wavelength, &f, Axis::X, 0.0, ys, zs);
        for row in &g.power {
            for i in 0..row.len() {
                let mirror = row[row.len() - 1 - i];
                assert!(row[i] >= 0.0);
                assert!((row[i] - mirror).abs() <= 1e-9 * row[i].max(mirror));
            }
        }
        let csv = g.to_csv();
        assert!(csv.starts_with("y_m,z_m,power_w\n"));
        assert_eq!(csv.lines().count(), 1 + 55);
    }

    #[test]
    fn grid_marks_antenna_cells_nan() {
        let cfg = presets::bistatic_collocated(28e9, 3, 0.0, 0.2);
        let ch = channel::build_channel_set(&cfg).unwrap();
        let f = CMatrix::identity(9, 9);
        let at = GridRange { min: 0.0, max: 0.0, steps: 1 };
        let g = beampattern_grid(&ch.tx_positions, ch.wavelength, &f, Axis::Z, 0.0, at, at);
        assert!(g.power[0][0].is_nan());
    }

    #[test]
    fn grid_range_parsing() {
        let r = GridRange::parse("-1:1:5").unwrap();
        assert_eq!(r.values(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(GridRange::parse("1:2").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn metrics_linear_and_real(seed in 0u64..1_000_000, c in 1.0..10.0f64) {
                let (cfg, ch) = small();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let r = oracle::random_psd(&mut rng, 16, 4);
                let v = ch.v.column(0).conjugate();
                let raw = v.dotc(&(&r * &v));
                prop_assert!(raw.im.abs() <= 1e-12 * raw.re.abs());
                let e1 = illumination_power(&ch, &r, 0);
                let e2 = illumination_power(&ch, &(&r * C64::new(2.0, 0.0)), 0);
                prop_assert!((e2 - 2.0 * e1).abs() <= 1e-12 * e1);
                prop_assert!(e1 >= 0.0);

                let w: Vec<CMatrix> = (0..2).map(|_| oracle::random_psd(&mut rng, 16, 1)).collect();
                let rd = oracle::random_psd(&mut rng, 16, 2);
                let base = direct(w.clone(), rd.clone());
                let scaled = direct(w.iter().map(|x| x * C64::new(c, 0.0)).collect(), &rd * C64::new(c, 0.0));
                for u in 0..2 {
                    let g1 = sinr(&ch, &base, u, cfg.comm_noise_power);
                    let g2 = sinr(&ch, &scaled, u, cfg.comm_noise_power);
                    prop_assert!(g2 >= g1 * (1.0 - 1e-12));
                }
            }
        }
    }
}
