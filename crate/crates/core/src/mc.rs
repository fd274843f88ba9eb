//! Monte Carlo oracle: brute-force estimation of the expected discounted
//! cost saving by simulating the jump-diffusion demand path directly.
//!
//! This module deliberately shares no machinery with the closed-form
//! solvers. Demand steps use the exact log-normal increment (no Euler drift
//! bias); jumps fire as a Bernoulli event per step, realized by sampling the
//! geometric gap between successes so that quiet stretches cost one uniform
//! draw instead of one per step. The investment outlay enters as a constant
//! spending rate `rho * I` under the same discounting, so the horizon
//! truncation hits both terms consistently and the analytic tail bound
//! covers the whole integrand.
//!
//! Reproducibility: every path gets its own counter-based RNG stream keyed
//! by the path index, and the per-path results are reduced in path order
//! with compensated summation, so the estimate is bit-identical no matter
//! how many workers run the paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cost::{alpha_coefficients, CapacitySpec, CostParams};
use crate::demand::DemandParams;
use crate::deterministic::det_value;
use crate::error::{ModelError, Result};
use crate::stochastic::stochastic_value;

/// Simulation settings for the Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Time step, years.
    pub dt: f64,
    /// Truncation horizon, years.
    pub horizon: f64,
    /// Number of independent paths.
    pub n_paths: u64,
    /// Master seed; path `i` uses stream `i` of this seed.
    pub seed: u64,
}

impl Default for SimConfig {
    /// Acceptance-run settings: daily steps over 200 years, 200k paths.
    fn default() -> Self {
        SimConfig {
            dt: 1.0 / 250.0,
            horizon: 200.0,
            n_paths: 200_000,
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 || self.dt > 0.1 {
            return Err(ModelError::InvalidParameter {
                key: "mc.dt",
                reason: format!("time step must lie in (0, 0.1] years, got {}", self.dt),
            });
        }
        if !self.horizon.is_finite() || self.horizon < 100.0 {
            return Err(ModelError::InvalidParameter {
                key: "mc.horizon",
                reason: format!(
                    "horizon must be at least 100 years so the discounted tail is \
                     negligible, got {}",
                    self.horizon
                ),
            });
        }
        if self.n_paths == 0 {
            return Err(ModelError::InvalidParameter {
                key: "mc.paths",
                reason: "need at least one path".into(),
            });
        }
        Ok(())
    }

    /// Number of steps; the grid is `0, dt, ..., steps * dt`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// A Monte Carlo estimate with its sampling and truncation uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    /// Bound on the bias from cutting the integral at the horizon.
    pub truncation_bound: f64,
}

/// One row of an oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub q: f64,
    pub dk: f64,
    pub closed_form: f64,
    pub mc_mean: f64,
    pub std_error: f64,
    pub truncation_bound: f64,
    /// Standardized discrepancy after subtracting the truncation allowance.
    pub z: f64,
}

fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Steps until the next Bernoulli(`p`) success, distributed Geometric(`p`)
/// on `{1, 2, ...}`. `u64::MAX` stands in for "never" when `p == 0`.
fn draw_gap<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p <= 0.0 {
        return u64::MAX;
    }
    let u: f64 = rng.random();
    let gap = ((1.0 - u).ln() / (1.0 - p).ln()).floor() + 1.0;
    gap as u64 // saturating cast; enormous gaps mean "never" in practice
}

/// State of one demand path, advanced step by step.
///
/// The log of demand is kept as `drift * t + sigma*sqrt(dt) * noise + jumps`
/// with the three parts accumulated separately, so the noiseless case
/// reproduces `Q0 * exp(eta * t)` bit-for-bit at the grid points.
struct PathState<'a> {
    demand: &'a DemandParams,
    rng: ChaCha8Rng,
    dt: f64,
    drift: f64,
    vol_sqrt_dt: f64,
    jump_prob: f64,
    step: u64,
    noise_sum: f64,
    jump_log: f64,
    jumps: u64,
    until_jump: u64,
}

impl<'a> PathState<'a> {
    fn new(demand: &'a DemandParams, cfg: &SimConfig, path_index: u64) -> Self {
        let mut rng = path_rng(cfg.seed, path_index);
        let jump_prob = demand.lambda * cfg.dt;
        let until_jump = draw_gap(&mut rng, jump_prob);
        PathState {
            demand,
            rng,
            dt: cfg.dt,
            drift: demand.eta - 0.5 * demand.sigma * demand.sigma,
            vol_sqrt_dt: demand.sigma * cfg.dt.sqrt(),
            jump_prob,
            step: 0,
            noise_sum: 0.0,
            jump_log: 0.0,
            jumps: 0,
            until_jump,
        }
    }

    /// Advances one step and returns the new log of `Q(t)/Q(0)`.
    #[inline]
    fn advance(&mut self) -> f64 {
        let eps: f64 = self.rng.sample(StandardNormal);
        self.noise_sum += eps;
        self.step += 1;
        if self.until_jump != u64::MAX {
            self.until_jump -= 1;
            if self.until_jump == 0 {
                self.jump_log += (1.0 + self.demand.jump.sample(&mut self.rng)).ln();
                self.jumps += 1;
                self.until_jump = draw_gap(&mut self.rng, self.jump_prob);
            }
        }
        self.log_ratio()
    }

    #[inline]
    fn log_ratio(&self) -> f64 {
        self.drift * (self.step as f64 * self.dt)
            + self.vol_sqrt_dt * self.noise_sum
            + self.jump_log
    }
}

/// Simulates one demand trajectory at the grid points `0, dt, ..., horizon`.
pub fn simulate_path(
    demand: &DemandParams,
    q0: f64,
    cfg: &SimConfig,
    path_index: u64,
) -> Result<Vec<f64>> {
    demand.validate()?;
    cfg.validate()?;
    if !q0.is_finite() || q0 <= 0.0 {
        return Err(ModelError::Domain(format!(
            "initial demand must be finite and > 0, got {q0}"
        )));
    }
    let steps = cfg.steps();
    let mut state = PathState::new(demand, cfg, path_index);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(q0);
    for _ in 0..steps {
        out.push(q0 * state.advance().exp());
    }
    Ok(out)
}

/// Terminal demand and realized jump count of one path; used to check the
/// simulator's marginal moments and jump law against theory.
pub fn simulate_terminal(
    demand: &DemandParams,
    q0: f64,
    cfg: &SimConfig,
    path_index: u64,
) -> (f64, u64) {
    let steps = cfg.steps();
    let mut state = PathState::new(demand, cfg, path_index);
    let mut x = 0.0;
    for _ in 0..steps {
        x = state.advance();
    }
    (q0 * x.exp(), state.jumps)
}

/// One panel point, pre-resolved for the hot path loop.
///
/// Region tests happen in log space against `x = ln(Q(t)/Q(0))`, so the
/// (expensive) exponential is only taken on steps where some point sits in a
/// polynomial region.
struct PointEval {
    q0: f64,
    /// `ln(K0 / q0)`: below this, the lowest region applies.
    lo_x: f64,
    /// `ln((K0+dK) / q0)`: at or above this, the flat region applies.
    hi_x: f64,
    a1: f64,
    a2: f64,
    a3: f64,
    a4: f64,
    a5: f64,
    a6: f64,
    /// `beta + 1`, the power-term exponent.
    pow_exp: f64,
    /// True when `pow_exp == 4`, enabling the multiply-only power.
    quartic: bool,
}

impl PointEval {
    fn build(q: f64, dk: f64, cost: &CostParams, k0: f64) -> Result<Self> {
        let alpha = alpha_coefficients(dk, k0, cost)?;
        let pow_exp = cost.beta + 1.0;
        Ok(PointEval {
            q0: q,
            lo_x: (k0 / q).ln(),
            hi_x: ((k0 + dk) / q).ln(),
            a1: alpha.a1,
            a2: alpha.a2,
            a3: alpha.a3,
            a4: alpha.a4,
            a5: alpha.a5,
            a6: alpha.a6,
            pow_exp,
            quartic: pow_exp == 4.0,
        })
    }

    /// Instantaneous cost-saving rate at log-demand `x`, demand `q0 * e_x`.
    #[inline]
    fn rate(&self, x: f64, e_x: f64) -> f64 {
        let q = self.q0 * e_x;
        let qp = if self.quartic {
            let q2 = q * q;
            q2 * q2
        } else {
            q.powf(self.pow_exp)
        };
        if x >= self.lo_x {
            self.a3 * qp + self.a4 * q + self.a5
        } else {
            self.a1 * qp + self.a2
        }
    }

    /// Largest possible |cost-saving rate| over all demand levels.
    fn rate_bound(&self, k0: f64, dk: f64) -> f64 {
        let upper = k0 + dk;
        let mut m = self
            .a2
            .abs()
            .max((self.a1 * k0.powf(self.pow_exp) + self.a2).abs())
            .max(self.a6.abs());
        let mid = |q: f64| (self.a3 * q.powf(self.pow_exp) + self.a4 * q + self.a5).abs();
        m = m.max(mid(k0)).max(mid(upper));
        // interior critical point of the middle piece, if any
        if self.a3 != 0.0 {
            let ratio = -self.a4 / (self.a3 * self.pow_exp);
            if ratio > 0.0 {
                let q_c = ratio.powf(1.0 / (self.pow_exp - 1.0));
                if q_c > k0 && q_c < upper {
                    m = m.max(mid(q_c));
                }
            }
        }
        m
    }
}

/// Neumaier compensated sum, independent of how the terms were produced.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Runs `f` for every path index, returning results in path order.
#[cfg(feature = "parallel")]
fn map_paths<T: Send>(n_paths: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n_paths).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_paths<T>(n_paths: u64, f: impl Fn(u64) -> T) -> Vec<T> {
    (0..n_paths).map(f).collect()
}

/// Discounted trapezoid weights `w_k ~ dt * e^(-rho * k * dt)` with the end
/// weights halved.
fn discount_weights(cfg: &SimConfig, rho: f64) -> Vec<f64> {
    let steps = cfg.steps();
    let mut w = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let mut wk = cfg.dt * (-rho * t).exp();
        if k == 0 || k == steps {
            wk *= 0.5;
        }
        w.push(wk);
    }
    w
}

/// Integrates the cost-saving rate of every panel point along one shared
/// demand path. Returns one discounted integral per point.
fn integrate_path(
    points: &[PointEval],
    weights: &[f64],
    demand: &DemandParams,
    cfg: &SimConfig,
    path_index: u64,
) -> Vec<f64> {
    let mut state = PathState::new(demand, cfg, path_index);
    let mut acc = vec![0.0f64; points.len()];
    // discounted time spent in the flat region, folded in once at the end
    let mut flat = vec![0.0f64; points.len()];
    let mut x = 0.0;
    for &w in weights {
        let mut e_x = f64::NAN;
        for (i, pt) in points.iter().enumerate() {
            if x >= pt.hi_x {
                flat[i] += w;
            } else {
                if e_x.is_nan() {
                    e_x = x.exp();
                }
                acc[i] += w * pt.rate(x, e_x);
            }
        }
        x = state.advance();
    }
    for i in 0..points.len() {
        acc[i] += points[i].a6 * flat[i];
    }
    acc
}

fn estimate_from_samples(samples: &[f64], truncation_bound: f64) -> McEstimate {
    let n = samples.len() as f64;
    let mean_integral = compensated_sum(samples) / n;
    let var = if samples.len() > 1 {
        let sq: Vec<f64> = samples
            .iter()
            .map(|&v| (v - mean_integral) * (v - mean_integral))
            .collect();
        compensated_sum(&sq) / (n - 1.0)
    } else {
        0.0
    };
    McEstimate {
        mean: mean_integral,
        std_error: (var / n).sqrt(),
        n_paths: samples.len() as u64,
        truncation_bound,
    }
}

/// Monte Carlo estimates of the expected discounted cost saving for a panel
/// of `(demand, expansion)` points, all sharing the same simulated paths.
///
/// Sharing paths across points is a common-random-numbers scheme: the point
/// estimates are correlated, but each marginal estimate is unbiased and the
/// path budget is paid once.
pub fn mc_panel(
    points: &[(f64, f64)],
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
    cfg: &SimConfig,
) -> Result<Vec<McEstimate>> {
    mc_panel_impl(points, cost, demand, capacity, cfg, true)
}

/// Single-threaded version of [`mc_panel`]; same estimates bit-for-bit.
pub fn mc_panel_seq(
    points: &[(f64, f64)],
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
    cfg: &SimConfig,
) -> Result<Vec<McEstimate>> {
    mc_panel_impl(points, cost, demand, capacity, cfg, false)
}

fn mc_panel_impl(
    points: &[(f64, f64)],
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
    cfg: &SimConfig,
    parallel: bool,
) -> Result<Vec<McEstimate>> {
    cost.validate()?;
    demand.validate()?;
    capacity.validate()?;
    cfg.validate()?;
    for &(q, dk) in points {
        if !q.is_finite() || q <= 0.0 {
            return Err(ModelError::Domain(format!(
                "demand must be finite and > 0, got {q}"
            )));
        }
        if !dk.is_finite() || dk < 0.0 {
            return Err(ModelError::Domain(format!(
                "expansion size must be finite and >= 0, got {dk}"
            )));
        }
    }
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let evals = points
        .iter()
        .map(|&(q, dk)| PointEval::build(q, dk, cost, capacity.k0))
        .collect::<Result<Vec<_>>>()?;
    let weights = discount_weights(cfg, cost.rho);
    let tail = (-cost.rho * cfg.horizon).exp() / cost.rho;
    let worker = |i: u64| integrate_path(&evals, &weights, demand, cfg, i);
    let rows = if parallel {
        map_paths(cfg.n_paths, worker)
    } else {
        (0..cfg.n_paths).map(worker).collect()
    };
    let mut out = Vec::with_capacity(points.len());
    for (j, (&(_, dk), eval)) in points.iter().zip(&evals).enumerate() {
        // the annualized outlay is part of dC, so bounding |dC| covers it
        let bound = eval.rate_bound(capacity.k0, dk) * tail;
        let samples: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        out.push(estimate_from_samples(&samples, bound));
    }
    Ok(out)
}

/// Monte Carlo estimate of the expected discounted cost saving at one point.
pub fn mc_value(
    q: f64,
    dk: f64,
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
    cfg: &SimConfig,
) -> Result<McEstimate> {
    Ok(mc_panel(&[(q, dk)], cost, demand, capacity, cfg)?[0])
}

/// Compares closed-form values against Monte Carlo on a panel of points.
///
/// The closed form is the stochastic solution, or the deterministic one when
/// the demand process has no randomness at all. The z-score charges the
/// discrepancy net of the truncation allowance against the standard error.
pub fn oracle_compare(
    points: &[(f64, f64)],
    cost: &CostParams,
    demand: &DemandParams,
    capacity: &CapacitySpec,
    cfg: &SimConfig,
) -> Result<Vec<OracleRow>> {
    let estimates = mc_panel(points, cost, demand, capacity, cfg)?;
    points
        .iter()
        .zip(estimates)
        .map(|(&(q, dk), est)| {
            let closed_form = if demand.sigma == 0.0 && demand.lambda == 0.0 {
                det_value(q, dk, capacity.k0, cost, demand.eta)?
            } else {
                stochastic_value(q, dk, cost, capacity.k0, demand)?
            };
            let excess = ((closed_form - est.mean).abs() - est.truncation_bound).max(0.0);
            let z = if excess == 0.0 {
                0.0
            } else {
                excess / est.std_error
            };
            Ok(OracleRow {
                q,
                dk,
                closed_form,
                mc_mean: est.mean,
                std_error: est.std_error,
                truncation_bound: est.truncation_bound,
                z,
            })
        })
        .collect()
}
