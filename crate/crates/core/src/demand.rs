//! Demand process parameters: exponential growth plus a jump-diffusion
//! specification, and the jump-distribution moments the closed forms need.

use rand::Rng;

use crate::error::{ModelError, Result};

/// Distribution of a single downward jump magnitude.
///
/// Magnitudes are relative drops, so a value of `-0.10` means demand loses
/// 10% when the jump fires. Support is restricted to `(-1, 0]`: demand stays
/// positive and jumps never push it up.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpSpec {
    /// Every jump has the same magnitude.
    Constant(f64),
    /// Finite discrete distribution of `(magnitude, probability)` pairs.
    Discrete(Vec<(f64, f64)>),
}

impl JumpSpec {
    pub fn validate(&self) -> Result<()> {
        let check_z = |z: f64| -> Result<()> {
            if !z.is_finite() || z <= -1.0 || z > 0.0 {
                return Err(ModelError::InvalidParameter {
                    key: "jump_size",
                    reason: format!("jump magnitude must lie in (-1, 0], got {z}"),
                });
            }
            Ok(())
        };
        match self {
            JumpSpec::Constant(z) => check_z(*z),
            JumpSpec::Discrete(pairs) => {
                if pairs.is_empty() {
                    return Err(ModelError::InvalidParameter {
                        key: "jump_dist",
                        reason: "distribution must have at least one atom".into(),
                    });
                }
                let mut total = 0.0;
                for &(z, p) in pairs {
                    check_z(z)?;
                    if !p.is_finite() || p < 0.0 {
                        return Err(ModelError::InvalidParameter {
                            key: "jump_dist",
                            reason: format!("probabilities must be >= 0, got {p}"),
                        });
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(ModelError::InvalidParameter {
                        key: "jump_dist",
                        reason: format!("probabilities must sum to 1, got {total}"),
                    });
                }
                Ok(())
            }
        }
    }

    /// `E[(1+Z)^b]`, exact over the discrete support.
    pub fn power_moment(&self, b: f64) -> f64 {
        match self {
            JumpSpec::Constant(z) => (1.0 + z).powf(b),
            JumpSpec::Discrete(pairs) => pairs.iter().map(|&(z, p)| p * (1.0 + z).powf(b)).sum(),
        }
    }

    /// `E[(1+Z)^b * ln(1+Z)]`, the derivative of [`power_moment`] in `b`.
    ///
    /// [`power_moment`]: JumpSpec::power_moment
    pub fn power_moment_derivative(&self, b: f64) -> f64 {
        match self {
            JumpSpec::Constant(z) => (1.0 + z).powf(b) * (1.0 + z).ln(),
            JumpSpec::Discrete(pairs) => pairs
                .iter()
                .map(|&(z, p)| p * (1.0 + z).powf(b) * (1.0 + z).ln())
                .sum(),
        }
    }

    /// `E[Z]`.
    pub fn mean_jump(&self) -> f64 {
        self.power_moment(1.0) - 1.0
    }

    /// Draws one jump magnitude.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpSpec::Constant(z) => *z,
            JumpSpec::Discrete(pairs) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(z, p) in pairs {
                    acc += p;
                    if u < acc {
                        return z;
                    }
                }
                pairs.last().expect("validated non-empty").0
            }
        }
    }
}

/// Parameters of the jump-diffusion demand process.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandParams {
    /// Demand growth rate, per year.
    pub eta: f64,
    /// Volatility rate, per sqrt(year).
    pub sigma: f64,
    /// Poisson jump intensity, per year.
    pub lambda: f64,
    /// Jump magnitude distribution.
    pub jump: JumpSpec,
}

impl Default for DemandParams {
    /// Baseline values: 2% growth, 5% volatility, one -10% jump every 20
    /// years on average.
    fn default() -> Self {
        DemandParams {
            eta: 0.02,
            sigma: 0.05,
            lambda: 0.05,
            jump: JumpSpec::Constant(-0.10),
        }
    }
}

impl DemandParams {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() {
            return Err(ModelError::InvalidParameter {
                key: "eta",
                reason: format!("must be finite, got {}", self.eta),
            });
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(ModelError::InvalidParameter {
                key: "sigma",
                reason: format!("must be finite and >= 0, got {}", self.sigma),
            });
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(ModelError::InvalidParameter {
                key: "lambda",
                reason: format!("must be finite and >= 0, got {}", self.lambda),
            });
        }
        self.jump.validate()
    }

    /// Effective expected growth rate `eta + lambda * E[Z]` of the process.
    pub fn effective_growth(&self) -> f64 {
        self.eta + self.lambda * self.jump.mean_jump()
    }
}

/// Deterministic exponential demand `Q0 * exp(eta * t)`.
pub fn deterministic_demand(t: f64, q0: f64, eta: f64) -> f64 {
    q0 * (eta * t).exp()
}
