//! Kalman filter over the stacked sensor bias and its drift rate.
//!
//! State `x = [b; ḃ]` (12). The drift is assumed not to accelerate; white
//! noise on `b̈` with spectral density `σ_Q²` accounts for deviations. The
//! observation is the bias itself, `C = [I₆ 0]`.

use log::debug;
use nalgebra::{SMatrix, SVector, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{SpatialKind, SpatialVector};

pub type Vector12 = SVector<f64, 12>;
pub type Matrix12 = SMatrix<f64, 12, 12>;
type Matrix6 = nalgebra::Matrix6<f64>;
type Matrix6x12 = SMatrix<f64, 6, 12>;
type Matrix12x6 = SMatrix<f64, 12, 6>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasState {
    pub mean: Vector12,
    pub covariance: Matrix12,
    pub timestamp: f64,
}

impl BiasState {
    pub fn bias(&self) -> Vector6<f64> {
        self.mean.fixed_rows::<6>(0).into_owned()
    }

    pub fn drift(&self) -> Vector6<f64> {
        self.mean.fixed_rows::<6>(6).into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasFilterConfig {
    /// `Q = σ_Q² I₆` is the spectral density of the drift's random walk.
    pub sigma_q: f64,
    pub p0_diag: [f64; 12],
    pub x0: [f64; 12],
}

impl Default for BiasFilterConfig {
    fn default() -> Self {
        Self {
            sigma_q: 1e-6,
            p0_diag: [100.0; 12],
            x0: [0.0; 12],
        }
    }
}

impl BiasFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_q > 0.0 && self.sigma_q.is_finite()) {
            return Err(Error::InvalidParameter("sigma_q must be positive".into()));
        }
        if !self.p0_diag.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(
                "initial bias covariance must be positive".into(),
            ));
        }
        if !self.x0.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("initial bias state"));
        }
        Ok(())
    }

    pub fn initial_state(&self, timestamp: f64) -> BiasState {
        BiasState {
            mean: Vector12::from(self.x0),
            covariance: Matrix12::from_diagonal(&Vector12::from(self.p0_diag)),
            timestamp,
        }
    }
}

/// Transition `[[I, dt·I], [0, I]]` and process covariance
/// `[[dt³/3·Q, dt²/2·Q], [dt²/2·Q, dt·Q]]`.
pub fn bias_transition(dt: f64, sigma_q: f64) -> Result<(Matrix12, Matrix12)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInterval(dt));
    }
    let q = sigma_q * sigma_q;
    let mut a = Matrix12::identity();
    let mut pn = Matrix12::zeros();
    for i in 0..6 {
        a[(i, i + 6)] = dt;
        pn[(i, i)] = dt * dt * dt / 3.0 * q;
        pn[(i, i + 6)] = dt * dt / 2.0 * q;
        pn[(i + 6, i)] = dt * dt / 2.0 * q;
        pn[(i + 6, i + 6)] = dt * q;
    }
    Ok((a, pn))
}

pub fn predict(state: &BiasState, cfg: &BiasFilterConfig, dt: f64) -> Result<BiasState> {
    let (a, q) = bias_transition(dt, cfg.sigma_q)?;
    let p = a * state.covariance * a.transpose() + q;
    Ok(BiasState {
        mean: a * state.mean,
        covariance: (p + p.transpose()) * 0.5,
        timestamp: state.timestamp + dt,
    })
}

fn observation() -> Matrix6x12 {
    let mut c = Matrix6x12::zeros();
    c.fixed_view_mut::<6, 6>(0, 0).fill_with_identity();
    c
}

/// Result of a correction: the posterior plus innovation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correction {
    pub state: BiasState,
    pub innovation: Vector6<f64>,
    /// Squared Mahalanobis distance of the innovation.
    pub mahalanobis_sq: f64,
}

/// Innovation and its squared Mahalanobis distance, without correcting.
pub fn innovation(state: &BiasState, y: &Vector6<f64>, r: &Matrix6) -> Result<(Vector6<f64>, f64, Matrix6)> {
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("bias pseudo-measurement"));
    }
    if r.cholesky().is_none() {
        return Err(Error::IllConditioned("measurement covariance is not positive definite"));
    }
    let p_bb = state.covariance.fixed_view::<6, 6>(0, 0).into_owned();
    let s = p_bb + r;
    let s_inv = s
        .cholesky()
        .ok_or(Error::IllConditioned("innovation covariance is not positive definite"))?
        .inverse();
    let nu = y - state.bias();
    let d2 = (nu.transpose() * s_inv * nu)[0];
    Ok((nu, d2, s_inv))
}

/// Kalman correction with Joseph-form covariance update.
pub fn update(state: &BiasState, y: &Vector6<f64>, r: &Matrix6) -> Result<Correction> {
    let (nu, d2, s_inv) = innovation(state, y, r)?;
    let c = observation();
    let p = &state.covariance;
    let k: Matrix12x6 = p * c.transpose() * s_inv;
    let ikc = Matrix12::identity() - k * c;
    let joseph = ikc * p * ikc.transpose() + k * r * k.transpose();
    Ok(Correction {
        state: BiasState {
            mean: state.mean + k * nu,
            covariance: (joseph + joseph.transpose()) * 0.5,
            timestamp: state.timestamp,
        },
        innovation: nu,
        mahalanobis_sq: d2,
    })
}

/// `biased + b̂ + dt·ḃ̂`, the wrench corrected with the estimate extrapolated
/// `dt ≥ 0` seconds past the state's timestamp.
pub fn correct_wrench(state: &BiasState, biased: &SpatialVector, dt: f64) -> Result<SpatialVector> {
    if biased.kind() != SpatialKind::Wrench {
        return Err(Error::KindMismatch {
            left: "wrench correction",
            right: "non-wrench vector",
        });
    }
    if !(dt >= 0.0) {
        return Err(Error::InvalidInterval(dt));
    }
    let offset = state.bias() + state.drift() * dt;
    let w = biased.to_vector6() + offset;
    Ok(SpatialVector::from_vector6(SpatialKind::Wrench, &w))
}

/// What happened to one measurement fed to [`BiasFilter::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub innovation: Vector6<f64>,
    pub mahalanobis_sq: f64,
    pub gated: bool,
}

/// Streaming bias filter with optional innovation gating.
#[derive(Debug, Clone)]
pub struct BiasFilter {
    cfg: BiasFilterConfig,
    gate: Option<f64>,
    state: Option<BiasState>,
    updates: usize,
    gated: usize,
}

impl BiasFilter {
    /// `gate` is the χ² threshold on the squared Mahalanobis innovation
    /// distance above which samples are rejected.
    pub fn new(cfg: BiasFilterConfig, gate: Option<f64>) -> Result<Self> {
        cfg.validate()?;
        if let Some(g) = gate {
            if !(g > 0.0) {
                return Err(Error::InvalidParameter("gating threshold must be positive".into()));
            }
        }
        Ok(Self {
            cfg,
            gate,
            state: None,
            updates: 0,
            gated: 0,
        })
    }

    pub fn config(&self) -> &BiasFilterConfig {
        &self.cfg
    }

    pub fn state(&self) -> Option<&BiasState> {
        self.state.as_ref()
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn gated(&self) -> usize {
        self.gated
    }

    /// Predicts to `t` (the first call only sets the clock) and corrects with
    /// `y` unless the innovation gate rejects it.
    pub fn step(&mut self, t: f64, y: &Vector6<f64>, r: &Matrix6) -> Result<StepOutcome> {
        let prior = match self.state {
            None => self.cfg.initial_state(t),
            Some(s) if t > s.timestamp => {
                let mut p = predict(&s, &self.cfg, t - s.timestamp)?;
                p.timestamp = t;
                p
            }
            Some(s) if t == s.timestamp => s,
            Some(s) => {
                return Err(Error::TimestampMismatch {
                    state: s.timestamp,
                    measurement: t,
                })
            }
        };
        let (nu, d2, _) = innovation(&prior, y, r)?;
        if self.gate.is_some_and(|g| d2 > g) {
            debug!("gating bias sample at t={t}: d²={d2:.3}");
            self.gated += 1;
            self.state = Some(prior);
            return Ok(StepOutcome {
                innovation: nu,
                mahalanobis_sq: d2,
                gated: true,
            });
        }
        let c = update(&prior, y, r)?;
        self.state = Some(c.state);
        self.updates += 1;
        Ok(StepOutcome {
            innovation: c.innovation,
            mahalanobis_sq: c.mahalanobis_sq,
            gated: false,
        })
    }
}
