//! Physical parameters. Rates and amplitudes are in units of the collective
//! decay rate `gamma` unless stated otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the adiabatically eliminated two-atom model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Driving amplitude.
    pub alpha: f64,
    /// Feedback amplitude.
    pub lambda: f64,
    /// Collective decay rate.
    pub gamma: f64,
    /// Individual decay rate of atom 1.
    pub gamma1: f64,
    /// Individual decay rate of atom 2.
    pub gamma2: f64,
    /// Homodyne detection efficiency.
    pub eta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 0.0,
            lambda: 0.0,
            gamma: 1.0,
            gamma1: 0.0,
            gamma2: 0.0,
            eta: 1.0,
        }
    }
}

impl ModelParams {
    pub fn new(alpha: f64, lambda: f64) -> Self {
        ModelParams {
            alpha,
            lambda,
            ..Default::default()
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        ModelParams { gamma, ..self }
    }

    pub fn with_individual_decay(self, gamma1: f64, gamma2: f64) -> Self {
        ModelParams {
            gamma1,
            gamma2,
            ..self
        }
    }

    pub fn with_eta(self, eta: f64) -> Self {
        ModelParams { eta, ..self }
    }

    pub fn has_individual_decay(&self) -> bool {
        self.gamma1 != 0.0 || self.gamma2 != 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha,
            self.lambda,
            self.gamma,
            self.gamma1,
            self.gamma2,
            self.eta,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must be > 0",
                self.gamma
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta = {} must lie in (0, 1]",
                self.eta
            )));
        }
        if self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(Error::InvalidParameter(
                "individual decay rates must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Parameters of the full atoms + cavity model in the displaced frame.
/// These are absolute rates, not `gamma` units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Atom-cavity coupling.
    pub g: f64,
    /// Cavity decay rate.
    pub gamma_p: f64,
    /// Raw cavity drive.
    pub alpha0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl CavityParams {
    /// Minimum `gamma_p / g` for the adiabatic regime.
    pub const ADIABATIC_RATIO: f64 = 10.0;

    /// Chooses `alpha0` so that the effective atomic drive
    /// `g alpha0 / (2 gamma_p)` equals `drive`.
    pub fn with_effective_drive(g: f64, gamma_p: f64, drive: f64) -> Result<Self> {
        if g <= 0.0 {
            return Err(Error::InvalidParameter(
                "an effective drive needs g > 0".into(),
            ));
        }
        Ok(CavityParams {
            g,
            gamma_p,
            alpha0: 2.0 * gamma_p * drive / g,
            gamma1: 0.0,
            gamma2: 0.0,
        })
    }

    /// Drive amplitude seen by the atoms, `g alpha0 / (2 gamma_p)`.
    pub fn effective_drive(&self) -> f64 {
        self.g * self.alpha0 / (2.0 * self.gamma_p)
    }

    /// Collective decay rate after eliminating the cavity, `g² / gamma_p`.
    pub fn collective_rate(&self) -> f64 {
        self.g * self.g / self.gamma_p
    }

    /// The eliminated model these parameters reduce to, in `gamma` units.
    pub fn eliminated(&self) -> ModelParams {
        let gamma = self.collective_rate();
        ModelParams {
            alpha: self.effective_drive() / gamma,
            lambda: 0.0,
            gamma: 1.0,
            gamma1: self.gamma1 / gamma,
            gamma2: self.gamma2 / gamma,
            eta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.g, self.gamma_p, self.alpha0, self.gamma1, self.gamma2]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if self.gamma_p <= 0.0 || self.g < 0.0 {
            return Err(Error::InvalidParameter(
                "need gamma_p > 0 and g >= 0".into(),
            ));
        }
        if self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(Error::InvalidParameter(
                "individual decay rates must be >= 0".into(),
            ));
        }
        if self.gamma_p < Self::ADIABATIC_RATIO * self.g {
            return Err(Error::InvalidParameter(format!(
                "gamma_p / g = {} is outside the adiabatic regime (>= {})",
                self.gamma_p / self.g,
                Self::ADIABATIC_RATIO
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_validation() {
        assert!(ModelParams::new(0.4, -0.8).validate().is_ok());
        assert!(ModelParams::new(0.4, -0.8)
            .with_gamma(0.0)
            .validate()
            .is_err());
        assert!(ModelParams::new(0.4, -0.8)
            .with_eta(0.0)
            .validate()
            .is_err());
        assert!(ModelParams::new(0.4, -0.8)
            .with_eta(1.5)
            .validate()
            .is_err());
        assert!(ModelParams::new(f64::NAN, 0.0).validate().is_err());
        assert!(ModelParams::default()
            .with_individual_decay(-0.1, 0.0)
            .validate()
            .is_err());
    }

    #[test]
    fn cavity_reduction() {
        let c = CavityParams::with_effective_drive(1.0, 100.0, 0.0038).unwrap();
        assert!((c.effective_drive() - 0.0038).abs() < 1e-15);
        assert!((c.collective_rate() - 0.01).abs() < 1e-15);
        assert!((c.eliminated().alpha - 0.38).abs() < 1e-12);
        assert!(c.validate().is_ok());
        let bad = CavityParams { gamma_p: 5.0, ..c };
        assert!(bad.validate().is_err());
    }
}
