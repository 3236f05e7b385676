//! Declarative configuration for the estimation pipeline and the simulator.
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Relative paths inside a config file are resolved against the directory
//! containing it.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bias::BiasFilterConfig;
use crate::error::{Error, Result};
use crate::joint::{InitialCovariance, ProcessModel};
use crate::kinematics::{franka_model_with_offset, RobotModel, DEFAULT_SENSOR_OFFSET};
use crate::lie::{RigidTransform, Screw};
use crate::regressor::{InertialParams, MeasurementNoise, Vector10, Vector36};
use crate::sim::{Motion, NoiseSpec, SimOptions, TrajectorySpec};
use crate::stats::chi2_quantile;

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV: &str = "FTBIAS_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointAxis {
    pub axis: [f64; 3],
    pub point: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    /// Row-major rotation matrix.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl PoseSpec {
    fn to_transform(&self) -> Result<RigidTransform> {
        let r = &self.rotation;
        #[rustfmt::skip]
        let rot = Matrix3::new(
            r[0][0], r[0][1], r[0][2],
            r[1][0], r[1][1], r[1][2],
            r[2][0], r[2][1], r[2][2],
        );
        RigidTransform::new(rot, Vector3::from(self.translation))
    }
}

/// Robot description file: joint axes at the zero configuration plus the
/// sensor's home pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDescription {
    pub name: String,
    pub joints: Vec<JointAxis>,
    pub sensor_home: PoseSpec,
}

impl RobotDescription {
    pub fn build(&self) -> Result<RobotModel> {
        let screws = self
            .joints
            .iter()
            .map(|j| Screw::new(Vector3::from(j.axis), Vector3::from(j.point)))
            .collect::<Result<Vec<_>>>()?;
        RobotModel::new(self.name.clone(), screws, self.sensor_home.to_transform()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RobotSpec {
    Franka {
        #[serde(default = "default_sensor_offset")]
        sensor_offset: f64,
    },
    /// A [`RobotDescription`] stored in a separate TOML file.
    File { path: PathBuf },
    Inline(RobotDescription),
}

fn default_sensor_offset() -> f64 {
    DEFAULT_SENSOR_OFFSET
}

impl Default for RobotSpec {
    fn default() -> Self {
        RobotSpec::Franka {
            sensor_offset: DEFAULT_SENSOR_OFFSET,
        }
    }
}

impl RobotSpec {
    pub fn build(&self, base_dir: &Path) -> Result<RobotModel> {
        match self {
            RobotSpec::Franka { sensor_offset } => {
                if !sensor_offset.is_finite() {
                    return Err(Error::Config("sensor_offset must be finite".into()));
                }
                Ok(franka_model_with_offset(*sensor_offset))
            }
            RobotSpec::File { path } => {
                let path = base_dir.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("robot file {}: {e}", path.display())))?;
                let desc: RobotDescription = toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("robot file {}: {e}", path.display())))?;
                desc.build()
            }
            RobotSpec::Inline(desc) => desc.build(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JointFilterConfig {
    /// Encoder noise standard deviations `[η_q, η_q̇]`.
    pub measurement_std: [f64; 2],
    /// Use this interval instead of timestamp differences.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_dt: Option<f64>,
    pub process: ProcessModel,
    pub initial: InitialCovariance,
}

impl Default for JointFilterConfig {
    fn default() -> Self {
        Self {
            measurement_std: [1e-4, 1e-3],
            fixed_dt: None,
            process: ProcessModel::IntegratedJerkNoise { psd: 1.0 },
            initial: InitialCovariance::default(),
        }
    }
}

impl JointFilterConfig {
    pub fn measurement_variances(&self) -> [f64; 2] {
        self.measurement_std.map(|s| s * s)
    }
}

/// A 0.73 kg parallel-jaw gripper with its centre of mass at
/// `[-0.01, 0, 0.03]` m, used when no load is configured.
pub fn default_load() -> InertialParams {
    InertialParams::new(Vector10::from([
        0.73, -0.0073, 0.0, 0.0219, 0.001657, 0.0, 0.000219, 0.00323, 0.0, 0.001773,
    ]))
    .expect("valid default load")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadConfig {
    /// `[m, m·c_x, m·c_y, m·c_z, I_xx, I_xy, I_xz, I_yy, I_yz, I_zz]`,
    /// inertia about the sensor origin.
    pub theta: InertialParams,
}

impl Default for LoadConfig {
    fn default() -> Self {
        Self { theta: default_load() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Standard deviation of every reduced data-matrix entry.
    pub data_matrix_std: f64,
    /// Per-entry variances of the 36 reduced entries; overrides
    /// `data_matrix_std` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_matrix_var: Option<Vec<f64>>,
    pub wrench_std: [f64; 6],
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            data_matrix_std: 0.01,
            data_matrix_var: None,
            wrench_std: [0.05, 0.05, 0.05, 0.005, 0.005, 0.005],
        }
    }
}

impl MeasurementConfig {
    pub fn noise(&self) -> Result<MeasurementNoise> {
        let mut noise = MeasurementNoise::isotropic(self.data_matrix_std, &self.wrench_std);
        if let Some(var) = &self.data_matrix_var {
            if var.len() != 36 {
                return Err(Error::Config(format!(
                    "data_matrix_var needs 36 entries, got {}",
                    var.len()
                )));
            }
            noise.data_var = Vector36::from_column_slice(var);
        }
        Ok(noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatingConfig {
    pub enabled: bool,
    /// χ² quantile (6 degrees of freedom) used as the rejection threshold.
    pub probability: f64,
}

impl Default for GatingConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            probability: 0.999,
        }
    }
}

impl GatingConfig {
    pub fn threshold(&self) -> Result<Option<f64>> {
        if !self.enabled {
            return Ok(None);
        }
        if !(self.probability > 0.0 && self.probability < 1.0) {
            return Err(Error::Config("gating probability must be in (0, 1)".into()));
        }
        Ok(Some(chi2_quantile(self.probability, 6.0)))
    }
}

/// How the bias enters the wrench measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasSign {
    /// `W + b = D θ`; corrected wrench is `W + b̂`.
    #[default]
    Plus,
    /// `W − b = D θ`; corrected wrench is `W − b̂`.
    Minus,
}

impl BiasSign {
    pub fn factor(self) -> f64 {
        match self {
            BiasSign::Plus => 1.0,
            BiasSign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Add the full 12×12 covariance to each estimate record.
    pub full_covariance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Base-frame gravity, m/s².
    pub gravity: [f64; 3],
    /// Maximum gap between a wrench sample and the last joint sample, s.
    pub pairing_tolerance: f64,
    pub bias_sign: BiasSign,
    pub robot: RobotSpec,
    pub joint_filter: JointFilterConfig,
    pub load: LoadConfig,
    pub measurement: MeasurementConfig,
    pub bias_filter: BiasFilterConfig,
    pub gating: GatingConfig,
    pub output: OutputConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            gravity: [0.0, 0.0, -9.81],
            pairing_tolerance: 2e-3,
            bias_sign: BiasSign::Plus,
            robot: RobotSpec::default(),
            joint_filter: JointFilterConfig::default(),
            load: LoadConfig::default(),
            measurement: MeasurementConfig::default(),
            bias_filter: BiasFilterConfig::default(),
            gating: GatingConfig::default(),
            output: OutputConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn base_dir_of(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_toml(path)?;
        cfg.base_dir = base_dir_of(path);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn robot_model(&self) -> Result<RobotModel> {
        self.robot.build(&self.base_dir)
    }

    /// Checks everything that can be checked before touching any data.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::Config("gravity must be finite".into()));
        }
        if !(self.pairing_tolerance >= 0.0 && self.pairing_tolerance.is_finite()) {
            return Err(Error::Config("pairing_tolerance must be >= 0".into()));
        }
        self.robot_model()?;
        let jf = &self.joint_filter;
        jf.process.validate().map_err(cfg_err)?;
        if !jf.measurement_std.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::Config("joint measurement_std must be positive".into()));
        }
        if jf.fixed_dt.is_some_and(|dt| !(dt > 0.0)) {
            return Err(Error::Config("fixed_dt must be positive".into()));
        }
        let init = &jf.initial;
        if ![init.position, init.velocity, init.acceleration].iter().all(|v| *v > 0.0) {
            return Err(Error::Config("initial joint variances must be positive".into()));
        }
        let noise = self.measurement.noise()?;
        if !noise.data_var.iter().all(|v| *v >= 0.0 && v.is_finite()) {
            return Err(Error::Config("data-matrix variances must be >= 0".into()));
        }
        if !self.measurement.wrench_std.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::Config("wrench_std must be positive".into()));
        }
        self.bias_filter.validate().map_err(cfg_err)?;
        self.gating.threshold()?;
        Ok(())
    }
}

/// Configuration of the `simulate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub robot: RobotSpec,
    pub load: LoadConfig,
    pub trajectory: TrajectorySpec,
    pub noise: NoiseSpec,
    pub options: SimOptions,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            robot: RobotSpec::default(),
            load: LoadConfig::default(),
            trajectory: TrajectorySpec {
                motion: Motion::Sinusoidal {
                    offset: vec![0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.8],
                    amplitude: vec![0.4, 0.3, 0.3, 0.3, 0.4, 0.3, 0.5],
                    frequency: vec![0.10, 0.13, 0.17, 0.11, 0.19, 0.23, 0.29],
                    phase: vec![0.0; 7],
                },
                duration: 60.0,
                rate: 100.0,
                seed: 0,
            },
            noise: NoiseSpec {
                joint_pos_std: 1e-4,
                joint_vel_std: 1e-3,
                wrench_std: [0.05, 0.05, 0.05, 0.005, 0.005, 0.005],
                data_matrix_std: 0.0,
                bias_initial: [2.0, -1.0, 0.5, 0.1, -0.05, 0.02],
                bias_drift: [2e-3, -1e-3, 5e-4, 1e-4, -5e-5, 2e-5],
                seed: 1,
            },
            options: SimOptions::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl SimulationConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_toml(path)?;
        cfg.base_dir = base_dir_of(path);
        cfg.robot_model()?;
        Ok(cfg)
    }

    pub fn robot_model(&self) -> Result<RobotModel> {
        self.robot.build(&self.base_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg = PipelineConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.joint_filter.fixed_dt = Some(1e-3);
        cfg.bias_sign = BiasSign::Minus;
        cfg.measurement.data_matrix_var = Some(vec![1e-4; 36]);
        let text = cfg.to_toml().unwrap();
        let back = PipelineConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn default_gate_is_chi2_999() {
        let g = GatingConfig::default().threshold().unwrap().unwrap();
        assert!((g - 22.457744484825323).abs() < 1e-9, "{g}");
        let off = GatingConfig {
            enabled: false,
            ..Default::default()
        };
        assert_eq!(off.threshold().unwrap(), None);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            "pairing_tolerance = -1.0",
            "[joint_filter]\nmeasurement_std = [0.0, 1e-3]",
            "[joint_filter.process]\nkind = \"integrated-jerk-noise\"\npsd = -1.0",
            "[bias_filter]\nsigma_q = 0.0",
            "[gating]\nprobability = 1.5",
            "[load]\ntheta = [0,0,0,0,0,0,0,0,0,0]",
            "[robot]\nmodel = \"file\"\npath = \"/nonexistent/robot.toml\"",
            "unknown_key = 1",
        ] {
            let err = PipelineConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{text}: {err}");
        }
    }

    #[test]
    fn inline_robot() {
        let text = r#"
            [robot]
            model = "inline"
            name = "one-link"
            joints = [{ axis = [0.0, 0.0, 1.0], point = [0.0, 0.0, 0.0] }]
            [robot.sensor_home]
            rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            translation = [0.5, 0.0, 0.0]
        "#;
        let cfg = PipelineConfig::from_toml_str(text).unwrap();
        let m = cfg.robot_model().unwrap();
        assert_eq!(m.dof(), 1);
        assert_eq!(m.name, "one-link");
    }

    #[test]
    fn simulation_defaults_round_trip() {
        let cfg = SimulationConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: SimulationConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
