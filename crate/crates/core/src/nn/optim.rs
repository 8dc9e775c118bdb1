//! Adadelta.

use serde::{Deserialize, Serialize};

use super::mlp::{GradSet, MlpParams, MlpSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdadeltaConfig {
    pub rho: f64,
    pub eps: f64,
    /// Multiplier on the update; 1.0 is plain Adadelta.
    pub lr: f64,
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        Self {
            rho: 0.95,
            eps: 1e-6,
            lr: 1.0,
        }
    }
}

impl AdadeltaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::invalid(format!(
                "adadelta rho must be in (0,1), got {}",
                self.rho
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!(
                "adadelta eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "adadelta lr must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaState {
    pub config: AdadeltaConfig,
    pub acc_grad_sq: MlpParams,
    pub acc_update_sq: MlpParams,
}

impl AdadeltaState {
    pub fn new(spec: &MlpSpec, config: AdadeltaConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            acc_grad_sq: MlpParams::zeros_like(spec),
            acc_update_sq: MlpParams::zeros_like(spec),
        })
    }

    /// Applies one update. A non-finite gradient rejects the whole step and
    /// leaves parameters and accumulators untouched.
    pub fn step(&mut self, params: &mut MlpParams, grads: &GradSet) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        let n = params.iter().count();
        if grads.iter().count() != n || self.acc_grad_sq.iter().count() != n {
            return Err(Error::shape("optimizer state does not match parameters"));
        }
        let AdadeltaConfig { rho, eps, lr } = self.config;
        for (((p, &g), eg), ex) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.acc_grad_sq.iter_mut())
            .zip(self.acc_update_sq.iter_mut())
        {
            *eg = rho * *eg + (1.0 - rho) * g * g;
            let delta = -((*ex + eps).sqrt() / (*eg + eps).sqrt()) * g;
            *ex = rho * *ex + (1.0 - rho) * delta * delta;
            *p += lr * delta;
        }
        Ok(())
    }
}

/// Convenience bundle: a network's parameters plus its optimizer state.
pub fn adadelta_step(
    params: &mut MlpParams,
    grads: &GradSet,
    state: &mut AdadeltaState,
) -> Result<()> {
    state.step(params, grads)
}
