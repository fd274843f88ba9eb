//! Numeric oracle for the deterministic model: integrates the discounted
//! cost-saving rate along the noiseless demand path with adaptive Simpson
//! quadrature, splitting at the region-crossing times and closing with the
//! analytic constant tail.

use runway_capex::cost::{annual_cost_difference, CostParams};

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rule(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = rule(f, a, fa, m, fm);
        let (right, rm, frm) = rule(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = rule(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// Expected discounted cost saving of expanding by `dk` at demand `q`, by
/// quadrature along the deterministic path `q * exp(eta * t)`.
pub fn det_value_by_quadrature(q: f64, dk: f64, k0: f64, cost: &CostParams, eta: f64) -> f64 {
    let upper = k0 + dk;
    let rate = |t: f64| {
        let demand = q * (eta * t).exp();
        annual_cost_difference(demand, dk, k0, cost).unwrap() * (-cost.rho * t).exp()
    };
    // crossing times into the middle and flat regions
    let t1 = if q < k0 { (k0 / q).ln() / eta } else { 0.0 };
    let t2 = if q < upper {
        (upper / q).ln() / eta
    } else {
        0.0
    };
    // scale the absolute tolerance to the magnitude of the integrand
    let scale = rate(0.0).abs().max(rate(t2).abs()).max(1.0);
    let tol = 1e-10 * scale;
    let mut total = 0.0;
    if t1 > 0.0 {
        total += simpson(&rate, 0.0, t1, tol);
    }
    if t2 > t1 {
        total += simpson(&rate, t1, t2, tol);
    }
    // beyond t2 the rate is the constant a6; integrate the tail analytically
    let a6 = annual_cost_difference(2.0 * upper, dk, k0, cost).unwrap();
    total + a6 * (-cost.rho * t2).exp() / cost.rho
}
