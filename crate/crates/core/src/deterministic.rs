//! Deterministic dynamic model: closed-form cumulative cost-saving function
//! and the NPV trigger rule.
//!
//! With demand growing as `q * exp(eta * t)`, the discounted integral of the
//! piecewise annual cost difference has a closed form. Below the initial
//! capacity it is `A1*q^(beta+1) + A2*q^(rho/eta) + A3`; starting demands in
//! the higher regions integrate the remaining pieces only, so the function
//! stays equal to the underlying integral everywhere.

use crate::cost::{alpha_coefficients, CapacitySpec, CostParams};
use crate::error::{ModelError, Result};

/// Tolerance below which `eta*(beta+1) - rho` or `eta - rho` is treated as a
/// removable singularity and rejected.
pub const SINGULARITY_TOL: f64 = 1e-9;

/// Absolute tolerance on trigger demands, operations/hour.
pub const TRIGGER_TOL: f64 = 1e-3;

const Q_GRID_POINTS: usize = 2000;
const Q_GRID_MIN: f64 = 0.1;

/// Coefficients of the closed-form cost saving for starting demands below
/// the initial capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetValueCoefficients {
    /// Coefficient of `q^(beta+1)`.
    pub poly: f64,
    /// Coefficient of `q^(rho/eta)`.
    pub homogeneous: f64,
    /// Constant term.
    pub constant: f64,
    /// Expansion size these coefficients were computed for.
    pub dk: f64,
}

/// Outcome of the NPV trigger search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NpvOutcome {
    Trigger(NpvDecision),
    /// The cost saving never reaches zero inside the search range.
    NoFiniteTrigger,
}

/// NPV investment rule result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpvDecision {
    /// Trigger demand, operations/hour.
    pub q_npv: f64,
    /// Expansion size at the trigger, operations/hour.
    pub dk_npv: f64,
}

fn check_rates(cost: &CostParams, eta: f64) -> Result<()> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(ModelError::InvalidParameter {
            key: "eta",
            reason: format!("the deterministic model needs eta > 0, got {eta}"),
        });
    }
    if (eta * (cost.beta + 1.0) - cost.rho).abs() < SINGULARITY_TOL {
        return Err(ModelError::SingularParameters(format!(
            "eta*(beta+1) = {} too close to rho = {}",
            eta * (cost.beta + 1.0),
            cost.rho
        )));
    }
    if (eta - cost.rho).abs() < SINGULARITY_TOL {
        return Err(ModelError::SingularParameters(format!(
            "eta = {eta} too close to rho = {}",
            cost.rho
        )));
    }
    Ok(())
}

/// Closed-form coefficients of the cost saving for `q < k0`.
pub fn det_value_coefficients(
    dk: f64,
    k0: f64,
    cost: &CostParams,
    eta: f64,
) -> Result<DetValueCoefficients> {
    check_rates(cost, eta)?;
    if dk == 0.0 {
        return Ok(DetValueCoefficients {
            poly: 0.0,
            homogeneous: 0.0,
            constant: -cost.f,
            dk,
        });
    }
    let a = alpha_coefficients(dk, k0, cost)?;
    let beta = cost.beta;
    let rho = cost.rho;
    let upper = k0 + dk;
    let g = eta * (beta + 1.0) - rho;
    let r = rho / eta;
    let poly = -a.a1 / g;
    let homogeneous = (a.a3 * upper.powf(beta + 1.0 - r) + (a.a1 - a.a3) * k0.powf(beta + 1.0 - r))
        / g
        + a.a4 * (upper.powf(1.0 - r) - k0.powf(1.0 - r)) / (eta - rho)
        + ((a.a6 - a.a5) * upper.powf(-r) + (a.a5 - a.a2) * k0.powf(-r)) / rho;
    let constant = a.a2 / rho;
    Ok(DetValueCoefficients {
        poly,
        homogeneous,
        constant,
        dk,
    })
}

/// Cumulative discounted cost saving of expanding by `dk` when demand is `q`.
///
/// Equals the discounted integral of the annual cost difference along the
/// exponential demand path, for any starting region.
pub fn det_value(q: f64, dk: f64, k0: f64, cost: &CostParams, eta: f64) -> Result<f64> {
    if !q.is_finite() || q <= 0.0 {
        return Err(ModelError::Domain(format!(
            "demand must be finite and > 0, got {q}"
        )));
    }
    check_rates(cost, eta)?;
    if dk == 0.0 {
        return Ok(-cost.f);
    }
    let beta = cost.beta;
    let rho = cost.rho;
    let upper = k0 + dk;
    if q < k0 {
        let c = det_value_coefficients(dk, k0, cost, eta)?;
        return Ok(c.poly * q.powf(beta + 1.0) + c.homogeneous * q.powf(rho / eta) + c.constant);
    }
    let a = alpha_coefficients(dk, k0, cost)?;
    if q >= upper {
        return Ok(a.a6 / rho);
    }
    // Starting in the middle region: integrate its piece until demand
    // reaches the expanded capacity, then the constant tail.
    let g = eta * (beta + 1.0) - rho;
    let t2 = (upper / q).ln() / eta;
    let mid = a.a3 * q.powf(beta + 1.0) * ((g * t2).exp() - 1.0) / g
        + a.a4 * q * (((eta - rho) * t2).exp() - 1.0) / (eta - rho)
        - a.a5 * ((-rho * t2).exp() - 1.0) / rho;
    Ok(mid + a.a6 * (-rho * t2).exp() / rho)
}

/// Largest cost saving over the expansion grid, with the smallest grid point
/// attaining it.
pub fn best_det_expansion(
    q: f64,
    k0: f64,
    cost: &CostParams,
    eta: f64,
    dk_grid: &[f64],
) -> Result<(f64, f64)> {
    let mut best_dk = dk_grid[0];
    let mut best = det_value(q, dk_grid[0], k0, cost, eta)?;
    for &dk in &dk_grid[1..] {
        let v = det_value(q, dk, k0, cost, eta)?;
        if v > best {
            best = v;
            best_dk = dk;
        }
    }
    Ok((best_dk, best))
}

/// NPV trigger: the smallest demand where the best expansion breaks even.
pub fn npv_trigger(cost: &CostParams, eta: f64, capacity: &CapacitySpec) -> Result<NpvOutcome> {
    cost.validate()?;
    capacity.validate()?;
    if cost.rho <= eta {
        return Err(ModelError::InvalidParameter {
            key: "rho",
            reason: format!(
                "discount rate rho = {} must exceed demand growth rate eta = {eta}",
                cost.rho
            ),
        });
    }
    check_rates(cost, eta)?;
    let dk_grid = capacity.dk_grid();
    let envelope =
        |q: f64| -> Result<f64> { Ok(best_det_expansion(q, capacity.k0, cost, eta, &dk_grid)?.1) };
    let q_max = capacity.q_search_max();
    let ratio = (q_max / Q_GRID_MIN).powf(1.0 / (Q_GRID_POINTS as f64 - 1.0));
    let mut prev_q = Q_GRID_MIN;
    let mut prev_v = envelope(prev_q)?;
    if prev_v >= 0.0 {
        // Already profitable at the bottom of the range; report the edge.
        let (dk, _) = best_det_expansion(prev_q, capacity.k0, cost, eta, &dk_grid)?;
        return Ok(NpvOutcome::Trigger(NpvDecision {
            q_npv: prev_q,
            dk_npv: dk,
        }));
    }
    let mut q = Q_GRID_MIN;
    for _ in 1..Q_GRID_POINTS {
        q *= ratio;
        let v = envelope(q)?;
        if v >= 0.0 {
            // bisect the sign change
            let (mut lo, mut hi) = (prev_q, q);
            while hi - lo > TRIGGER_TOL {
                let mid = 0.5 * (lo + hi);
                if envelope(mid)? >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let q_npv = 0.5 * (lo + hi);
            let (dk_npv, _) = best_det_expansion(q_npv, capacity.k0, cost, eta, &dk_grid)?;
            return Ok(NpvOutcome::Trigger(NpvDecision { q_npv, dk_npv }));
        }
        prev_q = q;
        prev_v = v;
    }
    let _ = prev_v;
    Ok(NpvOutcome::NoFiniteTrigger)
}

/// Break-even demand for a fixed expansion size (no optimization over the
/// grid). Used by the trigger-vs-size curves.
pub fn det_trigger_for_fixed_dk(
    dk: f64,
    cost: &CostParams,
    eta: f64,
    capacity: &CapacitySpec,
) -> Result<Option<f64>> {
    let value = |q: f64| det_value(q, dk, capacity.k0, cost, eta);
    let q_max = capacity.q_search_max();
    let ratio = (q_max / Q_GRID_MIN).powf(1.0 / (Q_GRID_POINTS as f64 - 1.0));
    let mut prev_q = Q_GRID_MIN;
    if value(prev_q)? >= 0.0 {
        return Ok(Some(prev_q));
    }
    let mut q = Q_GRID_MIN;
    for _ in 1..Q_GRID_POINTS {
        q *= ratio;
        if value(q)? >= 0.0 {
            let (mut lo, mut hi) = (prev_q, q);
            while hi - lo > TRIGGER_TOL {
                let mid = 0.5 * (lo + hi);
                if value(mid)? >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        prev_q = q;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn baseline() -> CostParams {
        CostParams::default()
    }

    #[test]
    fn coefficients_zero_expansion() {
        let c = det_value_coefficients(0.0, 40.0, &baseline(), 0.02).unwrap();
        assert_eq!(c.poly, 0.0);
        assert_eq!(c.homogeneous, 0.0);
        assert_eq!(c.constant, -8.0e6);
    }

    #[test]
    fn coefficients_baseline_expansion() {
        let c = det_value_coefficients(40.0, 40.0, &baseline(), 0.02).unwrap();
        // -alpha1 / (eta*(beta+1) - rho) = -5468.75 / 0.01
        assert_relative_eq!(c.poly, -546_875.0, max_relative = 1e-10);
        // alpha2 / rho
        assert_relative_eq!(c.constant, -80_560_056.0 / 0.07, max_relative = 1e-10);
    }

    #[test]
    fn singular_rates_rejected() {
        let p = baseline();
        // eta*(beta+1) == rho
        assert!(matches!(
            det_value_coefficients(40.0, 40.0, &p, 0.07 / 4.0),
            Err(ModelError::SingularParameters(_))
        ));
        assert!(matches!(
            det_value_coefficients(40.0, 40.0, &p, 0.07),
            Err(ModelError::SingularParameters(_))
        ));
    }

    #[test]
    fn value_zero_expansion_is_minus_fixed_cost() {
        let p = baseline();
        for q in [1.0, 10.0, 50.0, 200.0] {
            assert_eq!(det_value(q, 0.0, 40.0, &p, 0.02).unwrap(), -p.f);
        }
    }

    #[test]
    fn value_constant_above_expanded_capacity() {
        let p = baseline();
        let a = alpha_coefficients(40.0, 40.0, &p).unwrap();
        let v = det_value(90.0, 40.0, 40.0, &p, 0.02).unwrap();
        assert_relative_eq!(v, a.a6 / p.rho, max_relative = 1e-12);
    }

    #[test]
    fn value_continuous_across_regions() {
        let p = baseline();
        let eps = 1e-8;
        for b in [40.0, 80.0] {
            let lo = det_value(b - eps, 40.0, 40.0, &p, 0.02).unwrap();
            let hi = det_value(b + eps, 40.0, 40.0, &p, 0.02).unwrap();
            assert_relative_eq!(lo, hi, max_relative = 1e-5);
        }
    }

    #[test]
    fn npv_trigger_baseline() {
        let out = npv_trigger(&baseline(), 0.02, &CapacitySpec::default()).unwrap();
        let NpvOutcome::Trigger(d) = out else {
            panic!("expected a finite trigger")
        };
        assert!((d.q_npv - 5.4).abs() < 0.1, "q_npv = {}", d.q_npv);
        assert_eq!(d.dk_npv, 40.0);
    }

    #[test]
    fn fixed_dk_trigger_monotone() {
        let p = baseline();
        let cap = CapacitySpec::default();
        let q40 = det_trigger_for_fixed_dk(40.0, &p, 0.02, &cap)
            .unwrap()
            .unwrap();
        let q80 = det_trigger_for_fixed_dk(80.0, &p, 0.02, &cap)
            .unwrap()
            .unwrap();
        assert!(q80 > q40);
    }

    #[test]
    fn huge_fixed_cost_never_triggers() {
        let p = CostParams {
            f: 1e15,
            ..baseline()
        };
        let out = npv_trigger(&p, 0.02, &CapacitySpec::default()).unwrap();
        assert_eq!(out, NpvOutcome::NoFiniteTrigger);
    }

    #[test]
    fn staircase_expansion_nondecreasing_in_demand() {
        let p = baseline();
        let cap = CapacitySpec::default();
        let grid = cap.dk_grid();
        let mut prev = 0.0;
        let mut q = 1.0;
        while q <= 150.0 {
            let (dk, _) = best_det_expansion(q, cap.k0, &p, 0.02, &grid).unwrap();
            assert!(dk >= prev, "staircase decreased at q = {q}");
            prev = dk;
            q += 1.0;
        }
    }

    #[test]
    fn rho_not_larger_than_eta_rejected() {
        let err = npv_trigger(&baseline(), 0.08, &CapacitySpec::default()).unwrap_err();
        assert!(matches!(
            err,
            ModelError::InvalidParameter { key: "rho", .. }
        ));
    }
}
