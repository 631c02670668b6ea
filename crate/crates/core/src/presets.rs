//! Reference geometries. All use half-wavelength UPAs facing each other along z,
//! the Tx centered at the origin and the Rx centered at `(0, 0, D_z)`, unit
//! reflection coefficients, 10 dBm power budget and -50 dBm noise floors.

use crate::scenario::{
    dbm_to_watts, ArraySpec, Point, ScenarioConfig, SensingNoise, TargetSpec, UserSpec, SPEED_OF_LIGHT,
};
use crate::C64;

pub const POWER_DBM: f64 = 10.0;
pub const NOISE_DBM: f64 = -50.0;

fn base(carrier_hz: f64, nx: usize, ny: usize, dz: f64) -> ScenarioConfig {
    ScenarioConfig {
        carrier_hz,
        tx: ArraySpec::upa(nx, ny, Point::zeros()),
        rx: ArraySpec::upa(nx, ny, Point::new(0.0, 0.0, dz)),
        targets: Vec::new(),
        users: Vec::new(),
        total_power: dbm_to_watts(POWER_DBM),
        comm_noise_power: dbm_to_watts(NOISE_DBM),
        sensing_noise: SensingNoise::Scalar(dbm_to_watts(NOISE_DBM)),
        snapshots: 1,
        echo_power_exponent: 1,
    }
}

fn target(x: f64, y: f64, z: f64) -> TargetSpec {
    TargetSpec {
        position: Point::new(x, y, z),
        reflection: C64::new(1.0, 0.0),
    }
}

/// `2 D² / λ` of an `nx × ny` half-wavelength UPA.
pub fn fresnel_distance(carrier_hz: f64, nx: usize, ny: usize) -> f64 {
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    ArraySpec::upa(nx, ny, Point::zeros()).aperture_diagonal(lambda).powi(2) * 2.0 / lambda
}

/// Bistatic layout with one target and one LoS user at the same point
/// `(0, d, D_z/2)`. The SINR requirement is zero.
pub fn bistatic_collocated(carrier_hz: f64, n: usize, d: f64, dz: f64) -> ScenarioConfig {
    let mut cfg = base(carrier_hz, n, n, dz);
    cfg.targets.push(target(0.0, d, dz / 2.0));
    cfg.users.push(UserSpec::los(Point::new(0.0, d, dz / 2.0), 0.0));
    cfg
}

/// Monostatic layout: Tx and Rx share the same `n × n` grid at the origin, with
/// a collocated target/user on the boresight at `(0, 0, z)`.
pub fn monostatic_collocated(carrier_hz: f64, n: usize, z: f64) -> ScenarioConfig {
    let mut cfg = base(carrier_hz, n, n, 0.0);
    cfg.targets.push(target(0.0, 0.0, z));
    cfg.users.push(UserSpec::los(Point::new(0.0, 0.0, z), 0.0));
    cfg
}

/// 28 GHz, 48×48 arrays, `D_z = d_nf / 10`, collocated target/user at `(0, d, D_z/2)`.
pub fn fig3(d: f64) -> ScenarioConfig {
    let dz = fresnel_distance(28e9, 48, 48) / 10.0;
    bistatic_collocated(28e9, 48, d, dz)
}

/// Separated target and user on the 48×48 layout. The target sits at
/// `(0, 23.5λ, D_z/2)`, the user at `(0, -D_z/12, 2D_z/3)` with a scattered path
/// of weight `eta` through the target.
pub fn separated(eta: f64, sinr_db: Option<f64>) -> ScenarioConfig {
    let carrier = 28e9;
    let lambda = SPEED_OF_LIGHT / carrier;
    let dz = fresnel_distance(carrier, 48, 48) / 10.0;
    let mut cfg = base(carrier, 48, 48, dz);
    cfg.targets.push(target(0.0, 23.5 * lambda, dz / 2.0));
    cfg.users.push(UserSpec {
        position: Point::new(0.0, -dz / 12.0, 2.0 * dz / 3.0),
        nlos_coefficient: eta,
        sinr_threshold: sinr_db.map_or(0.0, crate::scenario::db_to_linear),
        nlos_target: 0,
    });
    cfg
}

/// Two targets and two users on `nx × ny` arrays at 28 GHz with an explicit `D_z`.
pub fn multi_target(nx: usize, ny: usize, dz: f64, sinr_db: Option<f64>) -> ScenarioConfig {
    let gamma = sinr_db.map_or(0.0, crate::scenario::db_to_linear);
    let mut cfg = base(28e9, nx, ny, dz);
    cfg.targets.push(target(0.0, 0.0, 3.0 * dz / 4.0));
    cfg.targets.push(target(0.0, dz / 8.0, dz / 3.0));
    cfg.users.push(UserSpec::los(Point::new(0.0, 0.0, dz / 4.0), gamma));
    cfg.users.push(UserSpec::los(Point::new(0.0, 0.0, dz / 2.0), gamma));
    cfg
}

/// The 16×96 two-target, two-user layout with `D_z = 2.5371` m.
pub fn multi_target_large(sinr_db: Option<f64>) -> ScenarioConfig {
    multi_target(16, 96, 2.5371, sinr_db)
}

/// L-band `3 × ny` layout used for solver timing: two targets, one user, and
/// `D_z` given explicitly.
pub fn complexity(ny: usize, dz: f64, sinr_db: Option<f64>) -> ScenarioConfig {
    let gamma = sinr_db.map_or(0.0, crate::scenario::db_to_linear);
    let mut cfg = base(1.5e9, 3, ny, dz);
    cfg.targets.push(target(0.0, 0.0, 3.0 * dz / 4.0));
    cfg.targets.push(target(0.0, dz / 4.0, dz / 3.0));
    cfg.users.push(UserSpec::los(Point::new(0.0, 0.0, dz / 4.0), gamma));
    cfg
}

/// Named presets selectable from the command line.
pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    Some(match name {
        "collocated" => fig3(0.0),
        "separated-los" => separated(0.0, None),
        "separated-nlos" => separated(0.3, None),
        "multi-target" => multi_target_large(Some(5.0)),
        "complexity" => complexity(3, 1.205, Some(25.0)),
        _ => return None,
    })
}

pub const NAMES: [&str; 5] = ["collocated", "separated-los", "separated-nlos", "multi-target", "complexity"];
