//! Static cost formulas of the runway system.
//!
//! Hourly system cost is operating cost plus capacity holding cost plus a
//! delay cost. The delay cost uses a modified Davidson form: polynomial
//! `A*q*(1 + alpha*(q/K)^beta)` up to `q = mu*K`, then the linear
//! continuation with matching value and slope, so over-capacity costs stay
//! finite. The annual cost difference between pre- and post-expansion
//! operation collapses to a three-region piecewise function of demand whose
//! coefficients (`alpha1..alpha6`) feed both dynamic solvers.

use crate::error::{ModelError, Result};

/// Monetary and cost constants of the runway system.
///
/// Units: `c`, `c_h`, `a` in $/operation; `f` in $; `v` in $*hour/operation;
/// `n_p` in hours/year; `rho` per year; `alpha`, `beta`, `mu` dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Unit operating cost.
    pub c: f64,
    /// Unit capacity holding (inventory) cost.
    pub c_h: f64,
    /// Monetary scaling factor of the delay function.
    pub a: f64,
    /// Delay-function constant (polynomial weight).
    pub alpha: f64,
    /// Delay-function exponent.
    pub beta: f64,
    /// Kink location of the modified Davidson form, as a fraction of capacity.
    pub mu: f64,
    /// Fixed capital cost of an expansion project.
    pub f: f64,
    /// Variable capital cost per unit of added capacity.
    pub v: f64,
    /// Operating hours per year.
    pub n_p: f64,
    /// Annual discount rate.
    pub rho: f64,
}

impl Default for CostParams {
    /// Baseline values used throughout the numerical studies.
    fn default() -> Self {
        CostParams {
            c: 1_000.0,
            c_h: 500.0,
            a: 50_000.0,
            alpha: 2.0,
            beta: 3.0,
            mu: 1.0,
            f: 8.0e6,
            v: 20.0,
            n_p: 4_000.0,
            rho: 0.07,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 10] = [
            ("c", self.c),
            ("c_h", self.c_h),
            ("A", self.a),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mu", self.mu),
            ("f", self.f),
            ("v", self.v),
            ("N_p", self.n_p),
            ("rho", self.rho),
        ];
        for (key, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ModelError::InvalidParameter {
                    key,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if self.beta < 1.0 {
            return Err(ModelError::InvalidParameter {
                key: "beta",
                reason: format!(
                    "must be >= 1 for a convex delay function, got {}",
                    self.beta
                ),
            });
        }
        Ok(())
    }
}

/// Discrete capacity layout: initial capacity and the expansion grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitySpec {
    /// Initial runway capacity, operations/hour.
    pub k0: f64,
    /// Throughput of one runway, operations/hour.
    pub runway_unit: f64,
    /// Upper bound on the number of runways an expansion may add.
    pub max_runways_added: u32,
}

impl Default for CapacitySpec {
    fn default() -> Self {
        CapacitySpec {
            k0: 40.0,
            runway_unit: 40.0,
            max_runways_added: 6,
        }
    }
}

impl CapacitySpec {
    pub fn validate(&self) -> Result<()> {
        if !self.runway_unit.is_finite() || self.runway_unit <= 0.0 {
            return Err(ModelError::InvalidParameter {
                key: "runway_unit",
                reason: format!("must be finite and > 0, got {}", self.runway_unit),
            });
        }
        let ratio = self.k0 / self.runway_unit;
        if !self.k0.is_finite() || self.k0 <= 0.0 || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(ModelError::InvalidParameter {
                key: "K0",
                reason: format!(
                    "must be a positive multiple of runway_unit = {}, got {}",
                    self.runway_unit, self.k0
                ),
            });
        }
        if self.max_runways_added < 1 {
            return Err(ModelError::InvalidParameter {
                key: "max_runways_added",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// The expansion-size search grid `{0, 1, ..., max_runways_added} * runway_unit`.
    pub fn dk_grid(&self) -> Vec<f64> {
        (0..=self.max_runways_added)
            .map(|i| f64::from(i) * self.runway_unit)
            .collect()
    }

    /// Upper bound of the demand search range used by the trigger solvers.
    pub fn q_search_max(&self) -> f64 {
        2.0 * (self.k0 + f64::from(self.max_runways_added) * self.runway_unit)
    }
}

/// Coefficients of the piecewise annual cost difference.
///
/// The cost difference is `a1*q^(beta+1) + a2` below the initial capacity,
/// `a3*q^(beta+1) + a4*q + a5` between the old and new capacity, and the
/// constant `a6` above the new capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
}

fn check_demand_capacity(q: f64, k: f64) -> Result<()> {
    if !q.is_finite() || q < 0.0 {
        return Err(ModelError::Domain(format!(
            "demand must be finite and >= 0, got {q}"
        )));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(ModelError::Domain(format!(
            "capacity must be finite and > 0, got {k}"
        )));
    }
    Ok(())
}

/// Hourly delay cost at demand `q` and capacity `k` (modified Davidson form).
///
/// Polynomial up to utilization `q/k = mu`, linear beyond it, with value and
/// slope matching at the kink.
pub fn delay_cost(q: f64, k: f64, p: &CostParams) -> Result<f64> {
    check_demand_capacity(q, k)?;
    let kink = p.mu * k;
    if q <= kink {
        Ok(p.a * q * (1.0 + p.alpha * (q / k).powf(p.beta)))
    } else {
        let slope = p.a * (1.0 + p.alpha * (p.beta + 1.0) * p.mu.powf(p.beta));
        let offset = p.a * p.alpha * p.beta * p.mu.powf(p.beta + 1.0) * k;
        Ok(slope * q - offset)
    }
}

/// Hourly system cost: operating + holding + delay.
pub fn hourly_cost(q: f64, k: f64, p: &CostParams) -> Result<f64> {
    Ok(p.c * q + p.c_h * k + delay_cost(q, k, p)?)
}

/// Lump-sum investment cost of an expansion of size `dk`.
///
/// The fixed part is incurred even when `dk = 0`.
pub fn investment_cost(dk: f64, p: &CostParams) -> Result<f64> {
    if !dk.is_finite() || dk < 0.0 {
        return Err(ModelError::Domain(format!(
            "expansion size must be finite and >= 0, got {dk}"
        )));
    }
    Ok(p.f + p.v * dk)
}

/// Coefficients of the annual cost difference for expansion `dk` from
/// initial capacity `k0`.
pub fn alpha_coefficients(dk: f64, k0: f64, p: &CostParams) -> Result<AlphaCoefficients> {
    if !dk.is_finite() || dk < 0.0 {
        return Err(ModelError::Domain(format!(
            "expansion size must be finite and >= 0, got {dk}"
        )));
    }
    check_demand_capacity(0.0, k0)?;
    let npaa = p.n_p * p.a * p.alpha;
    let a1 = npaa * (k0.powf(-p.beta) - (k0 + dk).powf(-p.beta));
    let a2 = -(p.n_p * p.c_h + p.rho * p.v) * dk - p.rho * p.f;
    let a3 = -npaa * (k0 + dk).powf(-p.beta);
    let a4 = npaa * (p.beta + 1.0);
    let a5 = a2 - p.n_p * p.a * p.alpha * p.beta * k0;
    let a6 = -(p.n_p * (p.c_h - p.a * p.alpha * p.beta) + p.rho * p.v) * dk - p.rho * p.f;
    Ok(AlphaCoefficients {
        a1,
        a2,
        a3,
        a4,
        a5,
        a6,
    })
}

impl AlphaCoefficients {
    /// Evaluates the piecewise annual cost difference at demand `q`.
    ///
    /// Region membership at the exact boundaries: `q = k0` belongs to the
    /// middle region, `q = k0 + dk` to the upper one. With `dk = 0` the
    /// middle region is empty and the function is constant.
    pub fn evaluate(&self, q: f64, k0: f64, dk: f64, beta: f64) -> f64 {
        if q >= k0 + dk {
            self.a6
        } else if q >= k0 {
            self.a3 * q.powf(beta + 1.0) + self.a4 * q + self.a5
        } else {
            self.a1 * q.powf(beta + 1.0) + self.a2
        }
    }
}

/// Annual cost difference between stage-1 and stage-2 operation at demand `q`.
pub fn annual_cost_difference(q: f64, dk: f64, k0: f64, p: &CostParams) -> Result<f64> {
    check_demand_capacity(q, k0)?;
    let alpha = alpha_coefficients(dk, k0, p)?;
    Ok(alpha.evaluate(q, k0, dk, p.beta))
}
