//! Online estimation of the offset and linear drift of a wrist-mounted
//! six-axis force-torque sensor carrying a known rigid load.
//!
//! Encoder samples go through per-joint Kalman filters ([`joint`]), the
//! filtered joint states are mapped to sensor-frame motion with screw
//! kinematics ([`kinematics`], [`lie`]), the motion and the load's inertial
//! parameters predict the wrench ([`regressor`]), and the residual against the
//! measured wrench drives a 12-state bias/drift filter ([`bias`]).
//! [`pipeline`] wires these together over timestamped logs; [`sim`] produces
//! such logs with known ground truth.
//!
//! Runnable examples, one per stage:
//!
//! | example | shows |
//! |---|---|
//! | `screw_exponential` | product of exponentials, space Jacobian, adjoint |
//! | `joint_filter` | position/velocity/acceleration tracking of one joint |
//! | `sensor_kinematics` | sensor twist and acceleration from joint states |
//! | `inertial_regressor` | data matrix and pseudo-measurement for a load |
//! | `bias_drift_filter` | the 12-state filter on synthetic measurements |
//! | `simulate_and_estimate` | simulator plus full estimator against truth |
//! | `correct_wrench` | applying estimates to a raw wrench stream |

pub mod bias;
pub mod cli;
pub mod error;
pub mod joint;
pub mod kinematics;
pub mod lie;
pub mod pipeline;
pub mod records;
pub mod regressor;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
