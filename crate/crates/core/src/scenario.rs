//! Problem instances: array geometry, targets, users, noise and power budget.
//!
//! The library works in linear units throughout (watts, linear SINR). The JSON
//! scenario file carries dBm / dB values and is converted at load time.
//!
//! Antenna ordering is row-major with the first in-plane index fastest. For an
//! array with `normal_axis = z` the in-plane axes are `(x, y)`, for `x` they are
//! `(y, z)` and for `y` they are `(x, z)`. Every steering vector, derivative and
//! beampattern in the crate uses this order.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{io, linalg, CMatrix, C64};

pub type Point = Vector3<f64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// In-plane axes (first, second) of an array whose normal is `self`.
    fn in_plane(self) -> (usize, usize) {
        match self {
            Axis::X => (1, 2),
            Axis::Y => (0, 2),
            Axis::Z => (0, 1),
        }
    }
}

/// Uniform planar array lying in a plane orthogonal to one coordinate axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ArraySpec {
    pub count_x: usize,
    pub count_y: usize,
    /// Inter-element spacing in wavelengths.
    pub spacing: f64,
    pub center: Point,
    pub normal_axis: Axis,
}

impl ArraySpec {
    pub fn upa(count_x: usize, count_y: usize, center: Point) -> Self {
        Self {
            count_x,
            count_y,
            spacing: 0.5,
            center,
            normal_axis: Axis::Z,
        }
    }

    pub fn len(&self) -> usize {
        self.count_x * self.count_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Antenna positions, row-major with the first in-plane index fastest.
    pub fn positions(&self, wavelength: f64) -> Vec<Point> {
        let pitch = self.spacing * wavelength;
        let (a, b) = self.normal_axis.in_plane();
        let off_x = (self.count_x as f64 - 1.0) / 2.0;
        let off_y = (self.count_y as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..self.count_y {
            for ix in 0..self.count_x {
                let mut p = self.center;
                p[a] += (ix as f64 - off_x) * pitch;
                p[b] += (iy as f64 - off_y) * pitch;
                out.push(p);
            }
        }
        out
    }

    /// Aperture diagonal `s·sqrt(nx² + ny²)`; a single antenna has no aperture.
    pub fn aperture_diagonal(&self, wavelength: f64) -> f64 {
        if self.len() <= 1 {
            return 0.0;
        }
        let s = self.spacing * wavelength;
        s * ((self.count_x.pow(2) + self.count_y.pow(2)) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub position: Point,
    pub reflection: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSpec {
    pub position: Point,
    /// Weight of the scattered path through target `nlos_target`; 0 means pure LoS.
    pub nlos_coefficient: f64,
    /// Linear SINR requirement; 0 disables the constraint.
    pub sinr_threshold: f64,
    pub nlos_target: usize,
}

impl UserSpec {
    pub fn los(position: Point, sinr_threshold: f64) -> Self {
        Self {
            position,
            nlos_coefficient: 0.0,
            sinr_threshold,
            nlos_target: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensingNoise {
    /// `Q = σ² I`.
    Scalar(f64),
    /// Full Hermitian positive definite `M × M` covariance.
    Matrix(CMatrix),
}

impl SensingNoise {
    pub fn matrix(&self, m: usize) -> CMatrix {
        match self {
            SensingNoise::Scalar(s) => CMatrix::identity(m, m) * C64::new(*s, 0.0),
            SensingNoise::Matrix(q) => q.clone(),
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match self {
            SensingNoise::Scalar(s) => Some(*s),
            SensingNoise::Matrix(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub carrier_hz: f64,
    pub tx: ArraySpec,
    pub rx: ArraySpec,
    pub targets: Vec<TargetSpec>,
    pub users: Vec<UserSpec>,
    /// Total transmit power budget in watts.
    pub total_power: f64,
    /// Receiver noise power at each user, watts.
    pub comm_noise_power: f64,
    pub sensing_noise: SensingNoise,
    /// Snapshot count `L`; the FIM scales linearly with it and the CRB as `1/L`.
    pub snapshots: usize,
    /// Exponent on `|b_k|` in the echo power metric (1 or 2).
    pub echo_power_exponent: u8,
}

/// One violated scenario invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositive(&'static str),
    EmptyArray(&'static str),
    NoTargets,
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    NoiseNotHermitian { defect: f64 },
    NoiseNotPsd { min_eigenvalue: f64 },
    SubspaceDimension { required: usize, available: usize },
    CoincidentPosition { what: &'static str, index: usize, array: &'static str, antenna: usize },
    NegativeNlos { user: usize },
    NegativeSinr { user: usize },
    NlosTargetOutOfRange { user: usize, index: usize },
    EchoExponent(u8),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositive(field) => write!(f, "{field} must be positive"),
            Violation::EmptyArray(which) => write!(f, "{which} array has no antennas"),
            Violation::NoTargets => write!(f, "at least one target is required"),
            Violation::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, found {found}")
            }
            Violation::NoiseNotHermitian { defect } => {
                write!(f, "sensing noise covariance not Hermitian (relative defect {defect:e})")
            }
            Violation::NoiseNotPsd { min_eigenvalue } => write!(
                f,
                "sensing noise covariance not PSD (minimum eigenvalue {min_eigenvalue:e})"
            ),
            Violation::SubspaceDimension { required, available } => write!(
                f,
                "subspace dimension exceeds N: 4K+U = {required} > {available}"
            ),
            Violation::CoincidentPosition { what, index, array, antenna } => write!(
                f,
                "{what} {index} coincides with {array} antenna {antenna}"
            ),
            Violation::NegativeNlos { user } => write!(f, "user {user}: nlos_coefficient must be >= 0"),
            Violation::NegativeSinr { user } => write!(f, "user {user}: SINR threshold must be >= 0"),
            Violation::NlosTargetOutOfRange { user, index } => {
                write!(f, "user {user}: nlos_target_index {index} out of range")
            }
            Violation::EchoExponent(e) => write!(f, "echo_power_exponent must be 1 or 2, got {e}"),
        }
    }
}

impl ScenarioConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength()
    }

    pub fn num_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn num_rx(&self) -> usize {
        self.rx.len()
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn tx_positions(&self) -> Vec<Point> {
        self.tx.positions(self.wavelength())
    }

    pub fn rx_positions(&self) -> Vec<Point> {
        self.rx.positions(self.wavelength())
    }

    /// `2 D² / λ` with `D` the transmit aperture diagonal.
    pub fn fresnel_distance(&self) -> f64 {
        let lambda = self.wavelength();
        let d = self.tx.aperture_diagonal(lambda);
        2.0 * d * d / lambda
    }

    pub fn sensing_noise_matrix(&self) -> CMatrix {
        self.sensing_noise.matrix(self.num_rx())
    }

    /// Sets every user's SINR requirement to `gamma` (linear).
    pub fn with_uniform_sinr(mut self, gamma: f64) -> Self {
        for u in &mut self.users {
            u.sinr_threshold = gamma;
        }
        self
    }

    /// Every violated invariant; empty iff the scenario is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            out.push(Violation::NonPositive("carrier_hz"));
        }
        for (name, a) in [("tx", &self.tx), ("rx", &self.rx)] {
            if a.is_empty() {
                out.push(Violation::EmptyArray(name));
            }
            if !(a.spacing > 0.0) {
                out.push(Violation::NonPositive(if name == "tx" { "tx.spacing" } else { "rx.spacing" }));
            }
        }
        if self.targets.is_empty() {
            out.push(Violation::NoTargets);
        }
        if !(self.total_power > 0.0) {
            out.push(Violation::NonPositive("total_power"));
        }
        if !(self.comm_noise_power > 0.0) {
            out.push(Violation::NonPositive("comm_noise_power"));
        }
        if self.snapshots == 0 {
            out.push(Violation::NonPositive("snapshots"));
        }
        if !matches!(self.echo_power_exponent, 1 | 2) {
            out.push(Violation::EchoExponent(self.echo_power_exponent));
        }
        match &self.sensing_noise {
            SensingNoise::Scalar(s) => {
                if !(*s > 0.0) {
                    out.push(Violation::NonPositive("sensing_noise"));
                }
            }
            SensingNoise::Matrix(q) => {
                let m = self.num_rx();
                if q.nrows() != m || q.ncols() != m {
                    out.push(Violation::DimensionMismatch {
                        what: "sensing noise matrix",
                        expected: m,
                        found: q.nrows().max(q.ncols()),
                    });
                } else {
                    let defect = linalg::hermitian_defect(q);
                    if defect > 1e-12 {
                        out.push(Violation::NoiseNotHermitian { defect });
                    }
                    let min = linalg::min_eigenvalue(q);
                    if !(min > 0.0) {
                        out.push(Violation::NoiseNotPsd { min_eigenvalue: min });
                    }
                }
            }
        }
        let k = self.num_targets();
        let u = self.num_users();
        if 4 * k + u > self.num_tx() {
            out.push(Violation::SubspaceDimension {
                required: 4 * k + u,
                available: self.num_tx(),
            });
        }
        for (i, user) in self.users.iter().enumerate() {
            if !(user.nlos_coefficient >= 0.0) {
                out.push(Violation::NegativeNlos { user: i });
            }
            if !(user.sinr_threshold >= 0.0) {
                out.push(Violation::NegativeSinr { user: i });
            }
            if user.nlos_target >= k.max(1) {
                out.push(Violation::NlosTargetOutOfRange { user: i, index: user.nlos_target });
            }
        }
        if self.carrier_hz > 0.0 {
            let tx = self.tx_positions();
            let rx = self.rx_positions();
            let pts = self
                .targets
                .iter()
                .map(|t| ("target", t.position))
                .enumerate()
                .chain(self.users.iter().map(|u| ("user", u.position)).enumerate());
            for (index, (what, p)) in pts {
                for (array, ants) in [("tx", &tx), ("rx", &rx)] {
                    if let Some(antenna) = ants.iter().position(|a| (a - p).norm() <= 1e-12) {
                        out.push(Violation::CoincidentPosition { what, index, array, antenna });
                    }
                }
            }
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Loads and validates a JSON scenario file. A relative
    /// `sensing_noise_matrix_file` is resolved against the scenario's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file = ScenarioFile::parse(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let cfg = file.into_config(&base)?;
        cfg.check()?;
        Ok(cfg)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

// ---------------------------------------------------------------------------
// JSON file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayFile {
    pub count_x: usize,
    pub count_y: usize,
    pub spacing_wavelengths: f64,
    pub center: [f64; 3],
    pub normal_axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    pub position: [f64; 3],
    pub reflection: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserFile {
    pub position: [f64; 3],
    pub nlos_coefficient: f64,
    /// `null` disables the SINR constraint for this user.
    pub sinr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nlos_target_index: Option<usize>,
}

/// On-disk scenario. Field order here is the canonical serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub carrier_hz: f64,
    pub tx: ArrayFile,
    pub rx: ArrayFile,
    pub targets: Vec<TargetFile>,
    #[serde(default)]
    pub users: Vec<UserFile>,
    pub total_power_dbm: f64,
    pub comm_noise_dbm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensing_noise_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensing_noise_matrix_file: Option<PathBuf>,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo_power_exponent: Option<u8>,
}

fn default_snapshots() -> usize {
    1
}

impl ArrayFile {
    pub fn into_spec(self) -> ArraySpec {
        ArraySpec {
            count_x: self.count_x,
            count_y: self.count_y,
            spacing: self.spacing_wavelengths,
            center: Point::from(self.center),
            normal_axis: self.normal_axis,
        }
    }

    pub fn from_spec(a: &ArraySpec) -> Self {
        Self {
            count_x: a.count_x,
            count_y: a.count_y,
            spacing_wavelengths: a.spacing,
            center: [a.center.x, a.center.y, a.center.z],
            normal_axis: a.normal_axis,
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Canonical pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serialization is infallible");
        s.push('\n');
        s
    }

    pub fn into_config(self, base_dir: &Path) -> Result<ScenarioConfig> {
        let m = self.rx.count_x * self.rx.count_y;
        let sensing_noise = match (self.sensing_noise_dbm, &self.sensing_noise_matrix_file) {
            (Some(dbm), None) => SensingNoise::Scalar(dbm_to_watts(dbm)),
            (None, Some(file)) => {
                let path = if file.is_absolute() { file.clone() } else { base_dir.join(file) };
                let q = io::read_complex_csv(&path)?;
                if q.nrows() != m || q.ncols() != m {
                    return Err(Error::InvalidConfig(vec![Violation::DimensionMismatch {
                        what: "sensing noise matrix",
                        expected: m,
                        found: q.nrows().max(q.ncols()),
                    }]));
                }
                SensingNoise::Matrix(q)
            }
            _ => {
                return Err(Error::Parse(
                    "exactly one of sensing_noise_dbm and sensing_noise_matrix_file is required".into(),
                ))
            }
        };
        Ok(ScenarioConfig {
            carrier_hz: self.carrier_hz,
            tx: self.tx.into_spec(),
            rx: self.rx.into_spec(),
            targets: self
                .targets
                .into_iter()
                .map(|t| TargetSpec {
                    position: Point::from(t.position),
                    reflection: C64::new(t.reflection[0], t.reflection[1]),
                })
                .collect(),
            users: self
                .users
                .into_iter()
                .map(|u| UserSpec {
                    position: Point::from(u.position),
                    nlos_coefficient: u.nlos_coefficient,
                    sinr_threshold: u.sinr_db.map_or(0.0, db_to_linear),
                    nlos_target: u.nlos_target_index.unwrap_or(0),
                })
                .collect(),
            total_power: dbm_to_watts(self.total_power_dbm),
            comm_noise_power: dbm_to_watts(self.comm_noise_dbm),
            sensing_noise,
            snapshots: self.snapshots,
            echo_power_exponent: self.echo_power_exponent.unwrap_or(1),
        })
    }

    /// File form of a configuration. A matrix-valued sensing noise must be written
    /// separately; its path is recorded as `matrix_file`.
    pub fn from_config(cfg: &ScenarioConfig, matrix_file: Option<PathBuf>) -> Self {
        let (sensing_noise_dbm, sensing_noise_matrix_file) = match &cfg.sensing_noise {
            SensingNoise::Scalar(s) => (Some(watts_to_dbm(*s)), None),
            SensingNoise::Matrix(_) => (None, matrix_file),
        };
        Self {
            carrier_hz: cfg.carrier_hz,
            tx: ArrayFile::from_spec(&cfg.tx),
            rx: ArrayFile::from_spec(&cfg.rx),
            targets: cfg
                .targets
                .iter()
                .map(|t| TargetFile {
                    position: [t.position.x, t.position.y, t.position.z],
                    reflection: [t.reflection.re, t.reflection.im],
                })
                .collect(),
            users: cfg
                .users
                .iter()
                .map(|u| UserFile {
                    position: [u.position.x, u.position.y, u.position.z],
                    nlos_coefficient: u.nlos_coefficient,
                    sinr_db: (u.sinr_threshold > 0.0).then(|| linear_to_db(u.sinr_threshold)),
                    nlos_target_index: (u.nlos_target != 0).then_some(u.nlos_target),
                })
                .collect(),
            total_power_dbm: watts_to_dbm(cfg.total_power),
            comm_noise_dbm: watts_to_dbm(cfg.comm_noise_power),
            sensing_noise_dbm,
            sensing_noise_matrix_file,
            snapshots: cfg.snapshots,
            echo_power_exponent: (cfg.echo_power_exponent != 1).then_some(cfg.echo_power_exponent),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        let lambda_1m = SPEED_OF_LIGHT;
        ScenarioConfig {
            carrier_hz: lambda_1m,
            tx: ArraySpec::upa(3, 3, Point::zeros()),
            rx: ArraySpec::upa(3, 3, Point::new(0.0, 0.0, 4.0)),
            targets: vec![
                TargetSpec { position: Point::new(0.0, 0.0, 2.0), reflection: C64::new(1.0, 0.0) },
                TargetSpec { position: Point::new(0.5, 0.0, 2.0), reflection: C64::new(1.0, 0.0) },
            ],
            users: vec![UserSpec::los(Point::new(0.0, 0.3, 1.0), 1.0)],
            total_power: 1.0,
            comm_noise_power: 1e-3,
            sensing_noise: SensingNoise::Scalar(1e-3),
            snapshots: 1,
            echo_power_exponent: 1,
        }
    }

    #[test]
    fn single_antenna_at_center() {
        let a = ArraySpec::upa(1, 1, Point::zeros());
        assert_eq!(a.positions(1.0), vec![Point::zeros()]);
    }

    #[test]
    fn symmetric_pair() {
        let a = ArraySpec::upa(2, 1, Point::zeros());
        let p = a.positions(1.0);
        assert_eq!(p, vec![Point::new(-0.25, 0.0, 0.0), Point::new(0.25, 0.0, 0.0)]);
    }

    #[test]
    fn row_major_ordering() {
        let a = ArraySpec::upa(3, 2, Point::zeros());
        let p = a.positions(2.0);
        // x index runs fastest
        assert!(p[1].x > p[0].x && p[1].y == p[0].y);
        assert!(p[3].y > p[0].y && p[3].x == p[0].x);
        let b = ArraySpec { normal_axis: Axis::X, ..a };
        let q = b.positions(2.0);
        assert!(q.iter().all(|p| p.x == 0.0));
    }

    #[test]
    fn aperture_and_fresnel_constants() {
        let mut cfg = small();
        cfg.carrier_hz = 28e9;
        cfg.tx = ArraySpec::upa(48, 48, Point::zeros());
        let d = cfg.tx.aperture_diagonal(cfg.wavelength());
        assert!((d - 0.364).abs() / 0.364 < 5e-3, "D = {d}");
        let dnf = cfg.fresnel_distance();
        assert!((dnf - 24.7).abs() / 24.7 < 5e-3, "d_nf = {dnf}");
    }

    #[test]
    fn fresnel_of_single_antenna_is_zero() {
        let mut cfg = small();
        cfg.tx = ArraySpec::upa(1, 1, Point::zeros());
        assert_eq!(cfg.fresnel_distance(), 0.0);
    }

    #[test]
    fn fresnel_of_three_by_three_at_l_band() {
        // 2 (nx² + ny²) s² / λ with s = λ/2 reduces to (nx² + ny²) λ / 2.
        let mut cfg = small();
        cfg.carrier_hz = 1.5e9;
        let lambda = SPEED_OF_LIGHT / 1.5e9;
        let expected = 18.0 * lambda / 2.0;
        assert!((cfg.fresnel_distance() - expected).abs() < 1e-12);
    }

    #[test]
    fn boundary_of_subspace_condition() {
        assert!(small().validate().is_empty());
        let mut cfg = small();
        cfg.targets.push(TargetSpec { position: Point::new(0.0, 0.5, 2.0), reflection: C64::new(1.0, 0.0) });
        let v = cfg.validate();
        assert_eq!(v, vec![Violation::SubspaceDimension { required: 13, available: 9 }]);
        assert!(v[0].to_string().contains("subspace dimension exceeds N"));
    }

    #[test]
    fn rejects_indefinite_noise() {
        let mut cfg = small();
        let mut q = CMatrix::identity(9, 9);
        q[(4, 4)] = C64::new(-0.5, 0.0);
        cfg.sensing_noise = SensingNoise::Matrix(q);
        let v = cfg.validate();
        assert!(matches!(v.as_slice(), [Violation::NoiseNotPsd { .. }]));
        assert!(v[0].to_string().contains("sensing noise covariance not PSD"));
    }

    #[test]
    fn rejects_coincident_target_and_empty_targets() {
        let mut cfg = small();
        cfg.targets[0].position = cfg.tx_positions()[4];
        assert!(cfg
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::CoincidentPosition { what: "target", index: 0, .. })));
        cfg.targets.clear();
        assert!(cfg.validate().contains(&Violation::NoTargets));
    }

    #[test]
    fn file_roundtrip_is_byte_identical() {
        let file = ScenarioFile::from_config(&small(), None);
        let text = file.to_json();
        let again = ScenarioFile::parse(&text).unwrap().to_json();
        assert_eq!(text, again);
    }

    #[test]
    fn unit_conversion() {
        assert!((dbm_to_watts(10.0) - 0.01).abs() < 1e-15);
        assert!((dbm_to_watts(-50.0) - 1e-8).abs() < 1e-22);
        assert!((db_to_linear(25.0) - 316.227_766_016_837_94).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn grid_centroid_is_center(nx in 1usize..7, ny in 1usize..7, cx in -5.0..5.0f64,
                                       cy in -5.0..5.0f64, cz in -5.0..5.0f64, axis in 0usize..3) {
                let a = ArraySpec {
                    count_x: nx, count_y: ny, spacing: 0.5,
                    center: Point::new(cx, cy, cz), normal_axis: Axis::ALL[axis],
                };
                let p = a.positions(0.0107);
                let mean = p.iter().fold(Point::zeros(), |acc, x| acc + x) / p.len() as f64;
                prop_assert!((mean - a.center).norm() <= 1e-12);
            }

            #[test]
            fn fresnel_translation_invariant(dx in -10.0..10.0f64, dy in -10.0..10.0f64) {
                let cfg = super::small();
                let mut moved = cfg.clone();
                moved.tx.center += Point::new(dx, dy, 0.0);
                prop_assert_eq!(cfg.fresnel_distance(), moved.fresnel_distance());
            }
        }
    }
}
