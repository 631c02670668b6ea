//! Transmit covariance design for near-field integrated sensing and communication.
//!
//! The crate models a bistatic MIMO link with planar arrays, exact spherical
//! wavefronts, point targets and single-antenna users. It computes the Fisher
//! information of the target positions under a transmit covariance `R_X` and
//! designs `R_X` by semidefinite programming: minimizing the sum of position
//! CRBs, or maximizing the worst-case illumination or echo power, in every
//! case under per-user SINR constraints.
//!
//! ```no_run
//! use nfisac_core::{presets, designs, DesignOptions};
//! let cfg = presets::bistatic_collocated(28e9, 8, 0.0, 0.2);
//! let ch = nfisac_core::channel::build_channel_set(&cfg).unwrap();
//! let sol = designs::solve_crb_min(&ch, &cfg, &DesignOptions::default()).unwrap();
//! println!("sum CRB = {:e} m^2", sol.achieved.value);
//! ```

pub mod channel;
pub mod conic;
pub mod designs;
pub mod error;
pub mod fisher;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod presets;
pub mod scenario;
pub mod tradeoff;

pub use num_complex::Complex64 as C64;

pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;
pub type RMatrix = nalgebra::DMatrix<f64>;
pub type RVector = nalgebra::DVector<f64>;

pub use channel::{build_channel_set, ChannelSet};
pub use conic::{SolveStatus, SolverSettings};
pub use designs::{DesignOptions, FeasibilityReport, SubspaceMode};
pub use error::{Error, Result};
pub use fisher::{assemble_fim, crb_from_fim, CrbReport, Fim};
pub use metrics::{AchievedMetric, DesignSolution, MetricKind};
pub use scenario::{ArraySpec, Axis, Point, ScenarioConfig, SensingNoise, TargetSpec, UserSpec};
