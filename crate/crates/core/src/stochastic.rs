//! Stochastic dynamic model: closed-form expected cost saving under
//! jump-diffusion demand, the option function, and the optimal
//! trigger/expansion decision.
//!
//! The expected cost saving solves a Cauchy-Euler style ODE with a
//! non-local jump term in each demand region. Homogeneous solutions are
//! `q^b1` and `q^b2` with `b1 > 1 > 0 > b2` the roots of the characteristic
//! function; particular solutions mirror the piecewise cost difference.
//! Value matching and smooth pasting at the two region boundaries, plus
//! boundedness at zero and at infinity, pin the homogeneous coefficients in
//! closed form. The trigger maximizes the ratio of the best expansion's
//! saving to `q^b1`, branch by branch across the expansion grid.

use crate::cost::{alpha_coefficients, AlphaCoefficients, CapacitySpec, CostParams};
use crate::demand::DemandParams;
use crate::error::{ModelError, Result};

/// Characteristic roots must satisfy `|phi(b)| <= 1e-12` after refinement.
pub const ROOT_TOL: f64 = 1e-12;

/// Particular-solution denominators closer to zero than this are rejected.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Root brackets are expanded no further than this. The negative root
/// scales like `-2*(rho+lambda)/sigma^2`, so small volatilities push it far
/// out; the limit only guards against a runaway search.
const ROOT_BRACKET_LIMIT: f64 = 1e9;

const Q_GRID_POINTS: usize = 4000;
const Q_GRID_MIN: f64 = 0.05;

/// Roots of the characteristic function, with their residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoots {
    /// Positive root, > 1.
    pub b1: f64,
    /// Negative root.
    pub b2: f64,
    /// Residual of the characteristic function at `b1`.
    pub phi_b1: f64,
    /// Residual at `b2`.
    pub phi_b2: f64,
}

/// Per-region particular solution `pow*q^(beta+1) + lin*q + constant`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPoly {
    pub pow: f64,
    pub lin: f64,
    pub constant: f64,
}

impl RegionPoly {
    fn value(&self, q: f64, beta: f64) -> f64 {
        self.pow * q.powf(beta + 1.0) + self.lin * q + self.constant
    }

    fn derivative(&self, q: f64, beta: f64) -> f64 {
        self.pow * (beta + 1.0) * q.powf(beta) + self.lin
    }
}

/// The three-region closed-form expected cost saving for one expansion size.
///
/// Homogeneous terms are stored against reference scales, as
/// `coeff * (q / scale)^b`, which keeps every coefficient finite even when
/// `b2` is enormous (the near-deterministic limit). The unscaled
/// coefficients of `q^b2` in the lowest region and of `q^b1` in the highest
/// region are identically zero: demand zero is absorbing and the saving is
/// bounded at infinity, so those terms never appear.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseValue {
    /// Initial capacity (lower region boundary).
    pub k0: f64,
    /// Expansion size; upper boundary sits at `k0 + dk`.
    pub dk: f64,
    /// Delay-function exponent, copied from the cost parameters.
    pub beta: f64,
    pub roots: CharRoots,
    /// Particular solutions for the three regions, in increasing demand order.
    pub regions: [RegionPoly; 3],
    /// Coefficient of `(q/k0)^b1` in the lowest region.
    pub low_growth: f64,
    /// Coefficient of `(q/(k0+dk))^b1` in the middle region.
    pub mid_growth: f64,
    /// Coefficient of `(q/k0)^b2` in the middle region.
    pub mid_decay: f64,
    /// Coefficient of `(q/(k0+dk))^b2` in the highest region.
    pub high_decay: f64,
}

/// Residuals of the boundary conditions, relative to local value/slope scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryResiduals {
    pub value_at_k0: f64,
    pub slope_at_k0: f64,
    pub value_at_upper: f64,
    pub slope_at_upper: f64,
}

impl BoundaryResiduals {
    pub fn max_abs(&self) -> f64 {
        self.value_at_k0
            .abs()
            .max(self.slope_at_k0.abs())
            .max(self.value_at_upper.abs())
            .max(self.slope_at_upper.abs())
    }
}

/// Investment decision of the real-options model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionDecision {
    /// Trigger demand, operations/hour.
    pub q_star: f64,
    /// Expansion size at the trigger, operations/hour.
    pub dk_star: f64,
    /// Option coefficient: the option is worth `a1_bar * q^b1` while waiting.
    pub a1_bar: f64,
    /// Positive root used for the option function.
    pub b1: f64,
    /// Relative smooth-pasting residual at the trigger.
    pub smooth_pasting_residual: f64,
}

/// Outcome of the trigger search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptionOutcome {
    Invest(ExpansionDecision),
    /// No demand level makes exercising profitable.
    NeverInvest,
}

/// Characteristic function of the value ODE:
/// `(sigma^2/2) b (b-1) + eta b + lambda E[(1+Z)^b] - (rho + lambda)`.
pub fn characteristic_phi(b: f64, demand: &DemandParams, rho: f64) -> f64 {
    let jump_term = if demand.lambda == 0.0 {
        0.0
    } else {
        demand.lambda * demand.jump.power_moment(b)
    };
    0.5 * demand.sigma * demand.sigma * b * (b - 1.0) + demand.eta * b + jump_term
        - (rho + demand.lambda)
}

fn characteristic_phi_derivative(b: f64, demand: &DemandParams) -> f64 {
    let jump_term = if demand.lambda == 0.0 {
        0.0
    } else {
        demand.lambda * demand.jump.power_moment_derivative(b)
    };
    demand.sigma * demand.sigma * (b - 0.5) + demand.eta + jump_term
}

fn validate_rate_condition(demand: &DemandParams, rho: f64) -> Result<()> {
    if rho <= demand.effective_growth() {
        return Err(ModelError::InvalidParameter {
            key: "rho",
            reason: format!(
                "discount rate rho = {rho} must exceed the effective demand growth \
                 rate eta + lambda*E[Z] = {}",
                demand.effective_growth()
            ),
        });
    }
    Ok(())
}

/// Bisection followed by safeguarded Newton inside the final bracket.
fn refine_root(mut lo: f64, mut hi: f64, demand: &DemandParams, rho: f64) -> f64 {
    let phi = |b: f64| characteristic_phi(b, demand, rho);
    // phi(lo) and phi(hi) have opposite signs; orient so phi(lo) < 0.
    if phi(lo) > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut b = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = phi(b);
        if f.abs() <= ROOT_TOL {
            return b;
        }
        if f < 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        let d = characteristic_phi_derivative(b, demand);
        let newton = b - f / d;
        b = if d != 0.0 && (newton - lo) * (newton - hi) < 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    b
}

/// Finds the two characteristic roots `b1 > 1` and `b2 < 0`.
pub fn characteristic_roots(demand: &DemandParams, rho: f64) -> Result<CharRoots> {
    demand.validate()?;
    validate_rate_condition(demand, rho)?;
    let (b1, b2) = if demand.lambda == 0.0 {
        // Quadratic closed form; also covers near-zero sigma, where the
        // negative root escapes any reasonable bracket.
        let half_var = 0.5 * demand.sigma * demand.sigma;
        if half_var == 0.0 {
            return Err(ModelError::RootSearch(
                "sigma = 0 with lambda = 0 leaves a single characteristic root; \
                 use the deterministic solver"
                    .into(),
            ));
        }
        let b = demand.eta - half_var;
        let disc = (b * b + 4.0 * half_var * rho).sqrt();
        (
            (-b + disc) / (2.0 * half_var),
            (-b - disc) / (2.0 * half_var),
        )
    } else {
        let phi = |b: f64| characteristic_phi(b, demand, rho);
        // phi(1) < 0 by the rate condition; expand right until positive.
        let mut hi = 2.0;
        while phi(hi) < 0.0 {
            hi *= 2.0;
            if hi > ROOT_BRACKET_LIMIT {
                return Err(ModelError::RootSearch(format!(
                    "no positive root bracket within |b| <= {ROOT_BRACKET_LIMIT}"
                )));
            }
        }
        let b1 = refine_root(hi / 2.0, hi, demand, rho);
        let mut lo = -1.0;
        while phi(lo) < 0.0 {
            lo *= 2.0;
            if lo < -ROOT_BRACKET_LIMIT {
                return Err(ModelError::RootSearch(format!(
                    "no negative root bracket within |b| <= {ROOT_BRACKET_LIMIT}"
                )));
            }
        }
        let b2 = refine_root(lo, lo / 2.0, demand, rho);
        (b1, b2)
    };
    if b1 <= 1.0 || b2 >= 0.0 {
        return Err(ModelError::RootSearch(format!(
            "roots out of order: b1 = {b1}, b2 = {b2}"
        )));
    }
    Ok(CharRoots {
        b1,
        b2,
        phi_b1: characteristic_phi(b1, demand, rho),
        phi_b2: characteristic_phi(b2, demand, rho),
    })
}

/// Particular solutions of the value ODE in the three demand regions.
///
/// The denominators of the power and linear terms are the characteristic
/// function evaluated at `beta + 1` and at `1`.
pub fn particular_coefficients(
    alpha: &AlphaCoefficients,
    beta: f64,
    demand: &DemandParams,
    rho: f64,
) -> Result<[RegionPoly; 3]> {
    let phi_pow = characteristic_phi(beta + 1.0, demand, rho);
    let phi_lin = characteristic_phi(1.0, demand, rho);
    if phi_pow.abs() < RESONANCE_TOL {
        return Err(ModelError::Resonance(format!(
            "phi(beta+1) = {phi_pow} is too close to zero; the q^(beta+1) \
             particular term has no bounded coefficient for these parameters"
        )));
    }
    if phi_lin.abs() < RESONANCE_TOL {
        return Err(ModelError::Resonance(format!(
            "phi(1) = {phi_lin} is too close to zero"
        )));
    }
    Ok([
        RegionPoly {
            pow: -alpha.a1 / phi_pow,
            lin: 0.0,
            constant: alpha.a2 / rho,
        },
        RegionPoly {
            pow: -alpha.a3 / phi_pow,
            lin: -alpha.a4 / phi_lin,
            constant: alpha.a5 / rho,
        },
        RegionPoly {
            pow: 0.0,
            lin: 0.0,
            constant: alpha.a6 / rho,
        },
    ])
}

impl PiecewiseValue {
    /// Builds the closed-form value function for one expansion size.
    ///
    /// Requires `dk > 0`; a zero expansion has the constant value `-f` and
    /// needs no piecewise machinery.
    pub fn build(dk: f64, cost: &CostParams, k0: f64, demand: &DemandParams) -> Result<Self> {
        if !dk.is_finite() || dk <= 0.0 {
            return Err(ModelError::Domain(format!(
                "piecewise value needs dk > 0, got {dk}"
            )));
        }
        let roots = characteristic_roots(demand, cost.rho)?;
        let alpha = alpha_coefficients(dk, k0, cost)?;
        let regions = particular_coefficients(&alpha, cost.beta, demand, cost.rho)?;
        let beta = cost.beta;
        let (b1, b2) = (roots.b1, roots.b2);
        let lower = k0;
        let upper = k0 + dk;
        // Mismatches of the particular solutions at the boundaries.
        let d_up = regions[2].value(upper, beta) - regions[1].value(upper, beta);
        let d_up_slope = regions[2].derivative(upper, beta) - regions[1].derivative(upper, beta);
        let d_lo = regions[1].value(lower, beta) - regions[0].value(lower, beta);
        let d_lo_slope = regions[1].derivative(lower, beta) - regions[0].derivative(lower, beta);
        let mid_growth = (b2 * d_up - upper * d_up_slope) / (b2 - b1);
        let mid_decay = (b1 * d_lo - lower * d_lo_slope) / (b2 - b1);
        let low_growth = mid_growth * (lower / upper).powf(b1) + mid_decay + d_lo;
        let high_decay = mid_growth + mid_decay * (upper / lower).powf(b2) - d_up;
        Ok(PiecewiseValue {
            k0,
            dk,
            beta,
            roots,
            regions,
            low_growth,
            mid_growth,
            mid_decay,
            high_decay,
        })
    }

    /// Expected discounted cost saving at demand `q`.
    pub fn value(&self, q: f64) -> f64 {
        let (b1, b2) = (self.roots.b1, self.roots.b2);
        let upper = self.k0 + self.dk;
        if q < self.k0 {
            self.low_growth * (q / self.k0).powf(b1) + self.regions[0].value(q, self.beta)
        } else if q < upper {
            self.mid_growth * (q / upper).powf(b1)
                + self.mid_decay * (q / self.k0).powf(b2)
                + self.regions[1].value(q, self.beta)
        } else {
            self.high_decay * (q / upper).powf(b2) + self.regions[2].value(q, self.beta)
        }
    }

    /// First derivative in `q`.
    pub fn derivative(&self, q: f64) -> f64 {
        let (b1, b2) = (self.roots.b1, self.roots.b2);
        let upper = self.k0 + self.dk;
        if q < self.k0 {
            self.low_growth * b1 * (q / self.k0).powf(b1) / q
                + self.regions[0].derivative(q, self.beta)
        } else if q < upper {
            self.mid_growth * b1 * (q / upper).powf(b1) / q
                + self.mid_decay * b2 * (q / self.k0).powf(b2) / q
                + self.regions[1].derivative(q, self.beta)
        } else {
            self.high_decay * b2 * (q / upper).powf(b2) / q
                + self.regions[2].derivative(q, self.beta)
        }
    }

    /// Relative value/slope mismatches across the two region boundaries.
    pub fn boundary_residuals(&self) -> BoundaryResiduals {
        let (b1, b2) = (self.roots.b1, self.roots.b2);
        let upper = self.k0 + self.dk;
        let beta = self.beta;
        // Evaluate each side's closed form exactly at the boundary.
        let low_value = self.low_growth + self.regions[0].value(self.k0, beta);
        let mid_at_k0 = self.mid_growth * (self.k0 / upper).powf(b1)
            + self.mid_decay
            + self.regions[1].value(self.k0, beta);
        let low_slope = self.low_growth * b1 / self.k0 + self.regions[0].derivative(self.k0, beta);
        let mid_slope_at_k0 = self.mid_growth * b1 * (self.k0 / upper).powf(b1) / self.k0
            + self.mid_decay * b2 / self.k0
            + self.regions[1].derivative(self.k0, beta);
        let mid_at_up = self.mid_growth
            + self.mid_decay * (upper / self.k0).powf(b2)
            + self.regions[1].value(upper, beta);
        let high_at_up = self.high_decay + self.regions[2].value(upper, beta);
        let mid_slope_at_up = self.mid_growth * b1 / upper
            + self.mid_decay * b2 * (upper / self.k0).powf(b2) / upper
            + self.regions[1].derivative(upper, beta);
        let high_slope_at_up =
            self.high_decay * b2 / upper + self.regions[2].derivative(upper, beta);
        let rel = |a: f64, b: f64| (a - b) / a.abs().max(b.abs()).max(1.0);
        BoundaryResiduals {
            value_at_k0: rel(low_value, mid_at_k0),
            slope_at_k0: rel(low_slope, mid_slope_at_k0),
            value_at_upper: rel(mid_at_up, high_at_up),
            slope_at_upper: rel(mid_slope_at_up, high_slope_at_up),
        }
    }
}

/// Expected cost saving of expanding by `dk` when demand is `q`.
pub fn stochastic_value(
    q: f64,
    dk: f64,
    cost: &CostParams,
    k0: f64,
    demand: &DemandParams,
) -> Result<f64> {
    if !q.is_finite() || q <= 0.0 {
        return Err(ModelError::Domain(format!(
            "demand must be finite and > 0, got {q}"
        )));
    }
    if dk == 0.0 {
        return Ok(-cost.f);
    }
    Ok(PiecewiseValue::build(dk, cost, k0, demand)?.value(q))
}

/// Branch set for the trigger search: one closed form per positive grid
/// expansion, plus the constant `-f` branch for "no expansion".
struct BranchSet {
    fixed_cost: f64,
    branches: Vec<PiecewiseValue>,
}

impl BranchSet {
    fn build(cost: &CostParams, demand: &DemandParams, capacity: &CapacitySpec) -> Result<Self> {
        let branches = capacity
            .dk_grid()
            .into_iter()
            .filter(|&dk| dk > 0.0)
            .map(|dk| PiecewiseValue::build(dk, cost, capacity.k0, demand))
            .collect::<Result<Vec<_>>>()?;
        Ok(BranchSet {
            fixed_cost: cost.f,
            branches,
        })
    }

    /// `max_dk F(q, dk)` with the smallest maximizer (ties included).
    fn best(&self, q: f64) -> (f64, f64) {
        let mut best_dk = 0.0;
        let mut best = -self.fixed_cost;
        for pv in &self.branches {
            let v = pv.value(q);
            if v > best {
                best = v;
                best_dk = pv.dk;
            }
        }
        (best_dk, best)
    }
}

/// Best expansion size and its expected cost saving at demand `q`.
pub fn best_expansion(
    q: f64,
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
) -> Result<(f64, f64)> {
    if !q.is_finite() || q <= 0.0 {
        return Err(ModelError::Domain(format!(
            "demand must be finite and > 0, got {q}"
        )));
    }
    Ok(BranchSet::build(cost, demand, capacity)?.best(q))
}

/// Golden-section maximization of a unimodal-enough objective on `[lo, hi]`.
fn golden_max(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-10 * b.abs().max(1.0) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Optimal trigger demand and expansion size for the stochastic model.
///
/// The objective `F(q, dk) / q^b1` is maximized on each expansion branch
/// separately (the upper envelope has kinks where the best branch switches),
/// then the best branch wins.
pub fn option_trigger(
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
) -> Result<OptionOutcome> {
    cost.validate()?;
    demand.validate()?;
    capacity.validate()?;
    if cost.rho <= demand.eta {
        return Err(ModelError::InvalidParameter {
            key: "rho",
            reason: format!(
                "discount rate rho = {} must exceed demand growth rate eta = {}",
                cost.rho, demand.eta
            ),
        });
    }
    let set = BranchSet::build(cost, demand, capacity)?;
    if set.branches.is_empty() {
        return Ok(OptionOutcome::NeverInvest);
    }
    let b1 = set.branches[0].roots.b1;
    let q_max = capacity.q_search_max();
    let ratio = (q_max / Q_GRID_MIN).powf(1.0 / (Q_GRID_POINTS as f64 - 1.0));
    let mut best: Option<(f64, f64, &PiecewiseValue)> = None; // (a1_bar, q, branch)
    for pv in &set.branches {
        let objective = |q: f64| pv.value(q) / q.powf(b1);
        let mut grid_best = (f64::NEG_INFINITY, Q_GRID_MIN);
        let mut q = Q_GRID_MIN;
        let mut prev = q;
        let mut prev_prev = q;
        let mut best_bracket = (Q_GRID_MIN, q_max);
        for i in 0..Q_GRID_POINTS {
            let g = objective(q);
            if g > grid_best.0 {
                grid_best = (g, q);
                best_bracket = (prev_prev, (q * ratio).min(q_max));
            }
            prev_prev = prev;
            prev = q;
            if i + 1 < Q_GRID_POINTS {
                q *= ratio;
            }
        }
        let (q_opt, g_opt) = golden_max(best_bracket.0, best_bracket.1, objective);
        let (q_opt, g_opt) = if g_opt >= grid_best.0 {
            (q_opt, g_opt)
        } else {
            (grid_best.1, grid_best.0)
        };
        if best.is_none_or(|(a, _, _)| g_opt > a) {
            best = Some((g_opt, q_opt, pv));
        }
    }
    let (a1_bar, q_star, branch) = best.expect("at least one branch");
    if a1_bar.is_nan() || a1_bar <= 0.0 {
        return Ok(OptionOutcome::NeverInvest);
    }
    let (dk_star, f_star) = set.best(q_star);
    // Smooth pasting on the active branch: q F'(q*) - b1 F(q*) = 0.
    let slope = branch.derivative(q_star);
    let residual = (q_star * slope - b1 * f_star) / (b1 * f_star.abs()).max(1e-12);
    Ok(OptionOutcome::Invest(ExpansionDecision {
        q_star,
        dk_star,
        a1_bar,
        b1,
        smooth_pasting_residual: residual,
    }))
}

/// Option value: `a1_bar * q^b1` while waiting, the exercise payoff beyond
/// the trigger.
pub fn option_value(
    q: f64,
    decision: &ExpansionDecision,
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
) -> Result<f64> {
    if !q.is_finite() || q <= 0.0 {
        return Err(ModelError::Domain(format!(
            "demand must be finite and > 0, got {q}"
        )));
    }
    if q < decision.q_star {
        Ok(decision.a1_bar * q.powf(decision.b1))
    } else {
        Ok(best_expansion(q, cost, demand, capacity)?.1)
    }
}

/// Trigger demand when the expansion size is imposed (no grid optimization).
pub fn stoch_trigger_for_fixed_dk(
    dk: f64,
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
) -> Result<Option<f64>> {
    let pv = PiecewiseValue::build(dk, cost, capacity.k0, demand)?;
    let b1 = pv.roots.b1;
    let objective = |q: f64| pv.value(q) / q.powf(b1);
    let q_max = capacity.q_search_max();
    let ratio = (q_max / Q_GRID_MIN).powf(1.0 / (Q_GRID_POINTS as f64 - 1.0));
    let mut q = Q_GRID_MIN;
    let mut best = (f64::NEG_INFINITY, q);
    let mut lo = q;
    let mut prev = q;
    for _ in 0..Q_GRID_POINTS {
        let g = objective(q);
        if g > best.0 {
            best = (g, q);
            lo = prev;
        }
        prev = q;
        q *= ratio;
    }
    if best.0.is_nan() || best.0 <= 0.0 {
        return Ok(None);
    }
    let hi = (best.1 * ratio).min(q_max);
    let (q_opt, _) = golden_max(lo, hi, objective);
    Ok(Some(q_opt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::JumpSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn baseline_cost() -> CostParams {
        CostParams::default()
    }

    fn baseline_demand() -> DemandParams {
        DemandParams::default()
    }

    #[test]
    fn phi_examples() {
        let d = baseline_demand();
        // phi(1) = eta + lambda*E[Z] - rho
        assert_relative_eq!(
            characteristic_phi(1.0, &d, 0.07),
            -0.055,
            max_relative = 1e-12
        );
        let no_jump = DemandParams {
            lambda: 0.0,
            ..d.clone()
        };
        assert_relative_eq!(characteristic_phi(0.0, &no_jump, 0.07), -0.07);
        assert_relative_eq!(
            characteristic_phi(4.0, &d, 0.07),
            0.007805,
            max_relative = 1e-9
        );
    }

    #[test]
    fn roots_no_jump_match_quadratic() {
        let d = DemandParams {
            lambda: 0.0,
            ..baseline_demand()
        };
        let r = characteristic_roots(&d, 0.07).unwrap();
        assert!((r.b1 - 3.0948).abs() < 1e-3, "b1 = {}", r.b1);
        assert!((r.b2 + 18.095).abs() < 1e-2, "b2 = {}", r.b2);
    }

    #[test]
    fn roots_baseline_with_jump() {
        let d = baseline_demand();
        let r = characteristic_roots(&d, 0.07).unwrap();
        assert!((r.b1 - 3.69).abs() < 0.01, "b1 = {}", r.b1);
        assert!((r.b2 + 11.6).abs() < 0.05, "b2 = {}", r.b2);
        assert!(r.phi_b1.abs() <= ROOT_TOL * 10.0);
        assert!(r.phi_b2.abs() <= ROOT_TOL * 10.0);
        // independent fine-grid sign scan around the reported roots
        for (root, lo, hi) in [
            (r.b1, r.b1 - 0.01, r.b1 + 0.01),
            (r.b2, r.b2 - 0.01, r.b2 + 0.01),
        ] {
            let f_lo = characteristic_phi(lo, &d, 0.07);
            let f_hi = characteristic_phi(hi, &d, 0.07);
            assert!(f_lo * f_hi < 0.0, "no sign change around {root}");
        }
    }

    #[test]
    fn rate_condition_enforced() {
        let d = DemandParams {
            eta: 0.08,
            ..baseline_demand()
        };
        assert!(matches!(
            characteristic_roots(&d, 0.07),
            Err(ModelError::InvalidParameter { key: "rho", .. })
        ));
    }

    #[test]
    fn particular_solution_examples() {
        let cost = baseline_cost();
        let d = baseline_demand();
        let alpha = alpha_coefficients(40.0, 40.0, &cost).unwrap();
        let regions = particular_coefficients(&alpha, cost.beta, &d, cost.rho).unwrap();
        // region 3 constant, no q dependence
        assert_eq!(regions[2].pow, 0.0);
        assert_eq!(regions[2].lin, 0.0);
        assert_relative_eq!(regions[2].constant, alpha.a6 / cost.rho);
        // q^4 coefficient of the lowest region: -5468.75 / phi(4)
        assert_relative_eq!(regions[0].pow, -5468.75 / 0.007805, max_relative = 1e-6);
        // zero expansion kills the power term
        let alpha0 = alpha_coefficients(0.0, 40.0, &cost).unwrap();
        let r0 = particular_coefficients(&alpha0, cost.beta, &d, cost.rho).unwrap();
        assert_eq!(r0[0].pow, 0.0);
        assert_relative_eq!(r0[0].constant, -cost.f);
    }

    #[test]
    fn value_limits() {
        let cost = baseline_cost();
        let d = baseline_demand();
        let pv = PiecewiseValue::build(40.0, &cost, 40.0, &d).unwrap();
        let tail = pv.regions[2].constant;
        let far = pv.value(10.0 * 80.0);
        assert!(
            (far - tail).abs() <= 0.01 * tail.abs(),
            "far = {far}, tail = {tail}"
        );
        assert_eq!(
            stochastic_value(10.0, 0.0, &cost, 40.0, &d).unwrap(),
            -cost.f
        );
    }

    #[test]
    fn boundary_residuals_tiny() {
        let cost = baseline_cost();
        let d = baseline_demand();
        for dk in [40.0, 80.0, 120.0] {
            let pv = PiecewiseValue::build(dk, &cost, 40.0, &d).unwrap();
            assert!(
                pv.boundary_residuals().max_abs() < 1e-8,
                "dk = {dk}: {:?}",
                pv.boundary_residuals()
            );
        }
    }

    #[test]
    fn best_expansion_staircase() {
        let cost = baseline_cost();
        let d = baseline_demand();
        let cap = CapacitySpec::default();
        let (dk_small, _) = best_expansion(1.0, &cost, &d, &cap).unwrap();
        assert_eq!(dk_small, 0.0);
        let (dk_star, _) = best_expansion(13.7, &cost, &d, &cap).unwrap();
        assert_eq!(dk_star, 80.0);
        let mut prev = 0.0;
        let mut q = 0.5;
        while q < 150.0 {
            let (dk, _) = best_expansion(q, &cost, &d, &cap).unwrap();
            assert!(dk >= prev, "staircase decreased at q = {q}");
            prev = dk;
            q += 0.5;
        }
    }

    #[test]
    fn trigger_baseline() {
        let out = option_trigger(
            &baseline_cost(),
            &baseline_demand(),
            &CapacitySpec::default(),
        )
        .unwrap();
        let OptionOutcome::Invest(d) = out else {
            panic!("expected an investment decision")
        };
        assert!((d.q_star - 13.7).abs() < 0.2, "q_star = {}", d.q_star);
        assert_eq!(d.dk_star, 80.0);
        assert!(d.a1_bar > 0.0);
        assert!(
            d.smooth_pasting_residual.abs() < 1e-4,
            "residual = {}",
            d.smooth_pasting_residual
        );
    }

    #[test]
    fn option_value_matches_at_trigger() {
        let cost = baseline_cost();
        let d = baseline_demand();
        let cap = CapacitySpec::default();
        let OptionOutcome::Invest(dec) = option_trigger(&cost, &d, &cap).unwrap() else {
            panic!()
        };
        let v = option_value(dec.q_star, &dec, &cost, &d, &cap).unwrap();
        let (_, f) = best_expansion(dec.q_star, &cost, &d, &cap).unwrap();
        assert_relative_eq!(v, f, max_relative = 1e-9);
        // waiting-region dominance
        let mut q = 0.5;
        while q < dec.q_star {
            let v = option_value(q, &dec, &cost, &d, &cap).unwrap();
            let (_, f) = best_expansion(q, &cost, &d, &cap).unwrap();
            assert!(
                v >= f - 1e-6 * f.abs().max(1.0),
                "dominance fails at q = {q}"
            );
            q += 0.5;
        }
    }

    #[test]
    fn fixed_dk_trigger_monotone() {
        let cost = baseline_cost();
        let d = baseline_demand();
        let cap = CapacitySpec::default();
        let mut prev = 0.0;
        for dk in [40.0, 80.0, 120.0, 160.0] {
            let q = stoch_trigger_for_fixed_dk(dk, &cost, &d, &cap)
                .unwrap()
                .unwrap();
            assert!(q > prev, "trigger not increasing at dk = {dk}");
            prev = q;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn boundary_conditions_hold_for_random_parameters(
            k0_units in 1u32..4,
            dk_units in 1u32..5,
            eta in 0.005f64..0.03,
            sigma in 0.01f64..0.10,
            lambda in 0.0f64..0.10,
            z in -0.3f64..-0.01,
        ) {
            let cost = baseline_cost();
            let demand = DemandParams { eta, sigma, lambda, jump: JumpSpec::Constant(z) };
            let k0 = 40.0 * f64::from(k0_units);
            let dk = 40.0 * f64::from(dk_units);
            let pv = PiecewiseValue::build(dk, &cost, k0, &demand).unwrap();
            prop_assert!(pv.boundary_residuals().max_abs() < 1e-8);
            prop_assert!(pv.roots.phi_b1.abs() < 1e-10);
            prop_assert!(pv.roots.phi_b2.abs() < 1e-10);
        }

        #[test]
        fn b1_monotone_in_rho_and_sigma(
            rho in 0.05f64..0.10,
            sigma in 0.02f64..0.08,
        ) {
            let d = DemandParams { sigma, ..baseline_demand() };
            let b1 = characteristic_roots(&d, rho).unwrap().b1;
            let b1_higher_rho = characteristic_roots(&d, rho + 0.01).unwrap().b1;
            prop_assert!(b1_higher_rho > b1);
            let d2 = DemandParams { sigma: sigma + 0.01, ..d };
            let b1_higher_sigma = characteristic_roots(&d2, rho).unwrap().b1;
            prop_assert!(b1_higher_sigma < b1);
        }
    }
}
