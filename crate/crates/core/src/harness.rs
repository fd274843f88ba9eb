//! Scenario runner: dispatches configs to the solvers, drives sensitivity
//! sweeps and the comparative-study table, and writes the CSV outputs.
//!
//! CSV conventions: trigger demands are reported at 0.1 ops/hr precision
//! (the convention of the study being reproduced); the full-precision value
//! is retained in a trailing `q_star_exact` column so downstream tooling
//! loses nothing.

use std::io::Write;

use crate::config::{Model, ScenarioConfig, SweepParam, SweepSpec};
use crate::cost::{CapacitySpec, CostParams};
use crate::demand::{DemandParams, JumpSpec};
use crate::deterministic::{det_value, npv_trigger, NpvOutcome};
use crate::error::{ModelError, Result};
use crate::mc::{simulate_path, OracleRow};
use crate::stochastic::{
    best_expansion, characteristic_roots, option_trigger, option_value, OptionOutcome,
};

/// Residual thresholds beyond which a result row is flagged.
pub const DIAG_ROOT_TOL: f64 = 1e-10;
pub const DIAG_SMOOTH_PASTING_TOL: f64 = 1e-6;

/// Solver residuals attached to a result row; all zero for the
/// deterministic model, which has no characteristic roots.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub phi_b1: f64,
    pub phi_b2: f64,
    pub smooth_pasting: f64,
}

impl Diagnostics {
    pub fn within_tolerance(&self) -> bool {
        self.phi_b1.abs() <= DIAG_ROOT_TOL
            && self.phi_b2.abs() <= DIAG_ROOT_TOL
            && self.smooth_pasting.abs() <= DIAG_SMOOTH_PASTING_TOL
    }
}

/// One solved scenario. `q_trigger`/`dk` are `None` when the model never
/// invests inside the search range.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub swept_value: Option<f64>,
    pub q_trigger: Option<f64>,
    pub dk: Option<f64>,
    /// Option-function coefficient (stochastic model only).
    pub option_coefficient: Option<f64>,
    /// Cost saving of the chosen expansion at the trigger.
    pub value_at_trigger: Option<f64>,
    pub diagnostics: Diagnostics,
    /// True when some diagnostic exceeds its tolerance.
    pub flagged: bool,
}

/// One sweep point: either a solved row or the error that stopped it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub outcome: std::result::Result<ResultRow, String>,
}

/// Solves one scenario with the configured model.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ResultRow> {
    config.validate()?;
    match config.model {
        Model::Deterministic => {
            let outcome = npv_trigger(&config.cost, config.demand.eta, &config.capacity)?;
            let row = match outcome {
                NpvOutcome::Trigger(d) => {
                    let value = det_value(
                        d.q_npv,
                        d.dk_npv,
                        config.capacity.k0,
                        &config.cost,
                        config.demand.eta,
                    )?;
                    ResultRow {
                        scenario: "deterministic".into(),
                        swept_value: None,
                        q_trigger: Some(d.q_npv),
                        dk: Some(d.dk_npv),
                        option_coefficient: None,
                        value_at_trigger: Some(value),
                        diagnostics: Diagnostics::default(),
                        flagged: false,
                    }
                }
                NpvOutcome::NoFiniteTrigger => never_invests("deterministic"),
            };
            Ok(row)
        }
        Model::Stochastic => {
            let outcome = option_trigger(&config.cost, &config.demand, &config.capacity)?;
            let row = match outcome {
                OptionOutcome::Invest(d) => {
                    let roots = characteristic_roots(&config.demand, config.cost.rho)?;
                    let (_, value) =
                        best_expansion(d.q_star, &config.cost, &config.demand, &config.capacity)?;
                    let diagnostics = Diagnostics {
                        phi_b1: roots.phi_b1,
                        phi_b2: roots.phi_b2,
                        smooth_pasting: d.smooth_pasting_residual,
                    };
                    ResultRow {
                        scenario: "stochastic".into(),
                        swept_value: None,
                        q_trigger: Some(d.q_star),
                        dk: Some(d.dk_star),
                        option_coefficient: Some(d.a1_bar),
                        value_at_trigger: Some(value),
                        flagged: !diagnostics.within_tolerance(),
                        diagnostics,
                    }
                }
                OptionOutcome::NeverInvest => never_invests("stochastic"),
            };
            Ok(row)
        }
    }
}

fn never_invests(scenario: &str) -> ResultRow {
    ResultRow {
        scenario: scenario.into(),
        swept_value: None,
        q_trigger: None,
        dk: None,
        option_coefficient: None,
        value_at_trigger: None,
        diagnostics: Diagnostics::default(),
        flagged: false,
    }
}

/// Applies one swept value to a copy of the config.
fn apply_sweep_value(config: &ScenarioConfig, param: SweepParam, value: f64) -> ScenarioConfig {
    let mut cfg = config.clone();
    match param {
        SweepParam::K0 => cfg.capacity.k0 = value,
        SweepParam::Eta => cfg.demand.eta = value,
        SweepParam::Sigma => cfg.demand.sigma = value,
        SweepParam::Lambda => cfg.demand.lambda = value,
        SweepParam::JumpSize => cfg.demand.jump = JumpSpec::Constant(value),
    }
    cfg
}

fn solve_sweep_point(config: &ScenarioConfig, spec: &SweepSpec, value: f64) -> SweepRow {
    let cfg = apply_sweep_value(config, spec.param, value);
    let outcome = run_scenario(&cfg)
        .map(|mut row| {
            row.swept_value = Some(value);
            row.scenario = format!("{}={value}", spec.param.as_str());
            row
        })
        .map_err(|e| e.to_string());
    SweepRow {
        param: spec.param,
        value,
        outcome,
    }
}

/// Runs the configured sweep; failures at individual points are recorded in
/// their rows and do not stop the rest. Rows come back in input order.
pub fn sweep(config: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| ModelError::Config("config has no sweep.param / sweep.values".into()))?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(spec
            .values
            .par_iter()
            .map(|&v| solve_sweep_point(config, spec, v))
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(spec
            .values
            .iter()
            .map(|&v| solve_sweep_point(config, spec, v))
            .collect())
    }
}

/// One demand-uncertainty level of the comparative study.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyLevel {
    pub label: String,
    pub sigma: f64,
    pub lambda: f64,
    pub jump_size: f64,
}

/// The study's three uncertainty levels.
pub fn default_uncertainty_levels() -> Vec<UncertaintyLevel> {
    [
        ("Low", 0.02, 0.02, -0.10),
        ("Med", 0.04, 0.04, -0.15),
        ("High", 0.06, 0.06, -0.20),
    ]
    .into_iter()
    .map(|(label, sigma, lambda, jump_size)| UncertaintyLevel {
        label: label.into(),
        sigma,
        lambda,
        jump_size,
    })
    .collect()
}

/// One cell of the comparative table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub k0: f64,
    pub eta: f64,
    pub uncertainty: String,
    pub q_star: f64,
    pub dk_star: f64,
}

/// Comparative study over the default grids: two initial capacities, three
/// growth rates, three uncertainty levels.
pub fn comparative_table(cost: &CostParams, capacity: &CapacitySpec) -> Result<Vec<TableCell>> {
    comparative_table_with(
        &[40.0, 80.0],
        &[0.01, 0.015, 0.02],
        &default_uncertainty_levels(),
        cost,
        capacity,
    )
}

/// Comparative study over caller-chosen grids.
pub fn comparative_table_with(
    k0s: &[f64],
    etas: &[f64],
    levels: &[UncertaintyLevel],
    cost: &CostParams,
    capacity: &CapacitySpec,
) -> Result<Vec<TableCell>> {
    let mut cells = Vec::with_capacity(k0s.len() * etas.len() * levels.len());
    for &k0 in k0s {
        for &eta in etas {
            for level in levels {
                let demand = DemandParams {
                    eta,
                    sigma: level.sigma,
                    lambda: level.lambda,
                    jump: JumpSpec::Constant(level.jump_size),
                };
                let cap = CapacitySpec { k0, ..*capacity };
                let OptionOutcome::Invest(d) = option_trigger(cost, &demand, &cap)? else {
                    return Err(ModelError::Domain(format!(
                        "comparative cell (K0={k0}, eta={eta}, {}) never invests",
                        level.label
                    )));
                };
                cells.push(TableCell {
                    k0,
                    eta,
                    uncertainty: level.label.clone(),
                    q_star: d.q_star,
                    dk_star: d.dk_star,
                });
            }
        }
    }
    Ok(cells)
}

fn write_io<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_all(s.as_bytes()).map_err(ModelError::Io)
}

/// Sweep CSV: `param,value,q_star,dK_star,A1_bar,residual,q_star_exact`.
/// Failed points are skipped (they carry their error in the row itself).
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: &mut W) -> Result<()> {
    write_io(
        w,
        "param,value,q_star,dK_star,A1_bar,residual,q_star_exact\n",
    )?;
    for row in rows {
        let Ok(result) = &row.outcome else { continue };
        let (Some(q), Some(dk)) = (result.q_trigger, result.dk) else {
            continue;
        };
        let a1 = result.option_coefficient.unwrap_or(0.0);
        write_io(
            w,
            &format!(
                "{},{},{:.1},{},{},{},{}\n",
                row.param.as_str(),
                row.value,
                q,
                dk,
                a1,
                result.diagnostics.smooth_pasting,
                q
            ),
        )?;
    }
    Ok(())
}

/// Table CSV: `K0,eta,uncertainty,q_star,dK_star,q_star_exact`.
pub fn write_table_csv<W: Write>(cells: &[TableCell], w: &mut W) -> Result<()> {
    write_io(w, "K0,eta,uncertainty,q_star,dK_star,q_star_exact\n")?;
    for c in cells {
        write_io(
            w,
            &format!(
                "{},{},{},{:.1},{},{}\n",
                c.k0, c.eta, c.uncertainty, c.q_star, c.dk_star, c.q_star
            ),
        )?;
    }
    Ok(())
}

/// Oracle CSV: one row per compared point, full precision everywhere so two
/// runs can be diffed byte-for-byte.
pub fn write_oracle_csv<W: Write>(rows: &[OracleRow], w: &mut W) -> Result<()> {
    write_io(w, "q,dK,closed_form,mc_mean,std_error,truncation_bound,z\n")?;
    for r in rows {
        write_io(
            w,
            &format!(
                "{},{},{},{},{},{},{}\n",
                r.q, r.dk, r.closed_form, r.mc_mean, r.std_error, r.truncation_bound, r.z
            ),
        )?;
    }
    Ok(())
}

/// Plot-ready data series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Cost saving of the best expansion and the staircase of chosen sizes,
    /// over a demand grid.
    ValueCurve,
    /// Trigger demand as a function of an imposed expansion size.
    TriggerVsExpansion,
    /// Exercise payoff and option value over demand, tangent at the trigger.
    OptionTangency,
    /// Simulated demand trajectories.
    SamplePaths { count: u64 },
}

/// Writes one CSV data series for the requested plot.
pub fn emit_plot_data<W: Write>(kind: PlotKind, config: &ScenarioConfig, w: &mut W) -> Result<()> {
    config.validate()?;
    let q_max = config.capacity.q_search_max();
    match kind {
        PlotKind::ValueCurve => {
            write_io(w, "q,best_value,best_dk\n")?;
            let dk_grid = config.capacity.dk_grid();
            for i in 0..=400 {
                let q = 0.5 + (q_max - 0.5) * f64::from(i) / 400.0;
                let (dk, v) = match config.model {
                    Model::Deterministic => crate::deterministic::best_det_expansion(
                        q,
                        config.capacity.k0,
                        &config.cost,
                        config.demand.eta,
                        &dk_grid,
                    )?,
                    Model::Stochastic => {
                        best_expansion(q, &config.cost, &config.demand, &config.capacity)?
                    }
                };
                write_io(w, &format!("{q},{v},{dk}\n"))?;
            }
        }
        PlotKind::TriggerVsExpansion => {
            write_io(w, "dK,q_trigger\n")?;
            for dk in config.capacity.dk_grid() {
                if dk == 0.0 {
                    continue;
                }
                let trigger = match config.model {
                    Model::Deterministic => crate::deterministic::det_trigger_for_fixed_dk(
                        dk,
                        &config.cost,
                        config.demand.eta,
                        &config.capacity,
                    )?,
                    Model::Stochastic => crate::stochastic::stoch_trigger_for_fixed_dk(
                        dk,
                        &config.cost,
                        &config.demand,
                        &config.capacity,
                    )?,
                };
                if let Some(q) = trigger {
                    write_io(w, &format!("{dk},{q}\n"))?;
                }
            }
        }
        PlotKind::OptionTangency => {
            write_io(w, "q,exercise_value,option_value\n")?;
            let OptionOutcome::Invest(decision) =
                option_trigger(&config.cost, &config.demand, &config.capacity)?
            else {
                return Ok(()); // header-only: there is no tangency point
            };
            for i in 0..=400 {
                let q = 0.5 + (q_max - 0.5) * f64::from(i) / 400.0;
                let (_, f) = best_expansion(q, &config.cost, &config.demand, &config.capacity)?;
                let v = option_value(q, &decision, &config.cost, &config.demand, &config.capacity)?;
                write_io(w, &format!("{q},{f},{v}\n"))?;
            }
            // the tangency point itself, exactly at the trigger
            let (_, f) = best_expansion(
                decision.q_star,
                &config.cost,
                &config.demand,
                &config.capacity,
            )?;
            let v = option_value(
                decision.q_star,
                &decision,
                &config.cost,
                &config.demand,
                &config.capacity,
            )?;
            write_io(w, &format!("{},{f},{v}\n", decision.q_star))?;
        }
        PlotKind::SamplePaths { count } => {
            let mut header = String::from("t");
            for i in 0..count {
                header.push_str(&format!(",path_{i}"));
            }
            header.push('\n');
            write_io(w, &header)?;
            let q0 = config.capacity.k0 / 4.0;
            let paths: Vec<Vec<f64>> = (0..count)
                .map(|i| simulate_path(&config.demand, q0, &config.sim, i))
                .collect::<Result<_>>()?;
            if paths.is_empty() {
                return Ok(());
            }
            let steps = paths[0].len();
            let stride = (steps / 2000).max(1);
            for k in (0..steps).step_by(stride) {
                let mut line = format!("{}", k as f64 * config.sim.dt);
                for p in &paths {
                    line.push_str(&format!(",{}", p[k]));
                }
                line.push('\n');
                write_io(w, &line)?;
            }
        }
    }
    Ok(())
}

/// Convenience for tests and the CLI: render CSV into a string.
pub fn csv_to_string(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    String::from_utf8(buf).map_err(|e| ModelError::Config(format!("non-UTF8 CSV: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn stochastic_config() -> ScenarioConfig {
        ScenarioConfig::default()
    }

    fn deterministic_config() -> ScenarioConfig {
        ScenarioConfig {
            model: Model::Deterministic,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn baseline_deterministic_scenario() {
        let row = run_scenario(&deterministic_config()).unwrap();
        let q = row.q_trigger.unwrap();
        assert!((q - 5.4).abs() < 0.1, "q = {q}");
        assert_eq!(row.dk.unwrap(), 40.0);
        assert!(!row.flagged);
        assert_eq!(row.option_coefficient, None);
    }

    #[test]
    fn baseline_stochastic_scenario() {
        let row = run_scenario(&stochastic_config()).unwrap();
        let q = row.q_trigger.unwrap();
        assert!((q - 13.7).abs() < 0.2, "q = {q}");
        assert_eq!(row.dk.unwrap(), 80.0);
        assert!(row.option_coefficient.unwrap() > 0.0);
        assert!(!row.flagged, "diagnostics: {:?}", row.diagnostics);
    }

    #[test]
    fn invalid_discount_rate_names_the_key() {
        let mut cfg = stochastic_config();
        cfg.demand.eta = 0.08; // above rho = 0.07
        let err = run_scenario(&cfg).unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
    }

    #[test]
    fn sigma_sweep_is_monotone() {
        let cfg = ScenarioConfig {
            sweep: Some(SweepSpec {
                param: SweepParam::Sigma,
                values: vec![0.02, 0.04, 0.06, 0.08],
            }),
            ..stochastic_config()
        };
        let rows = sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        let mut prev_q = 0.0;
        let mut prev_dk = 0.0;
        for row in &rows {
            let r = row.outcome.as_ref().unwrap();
            let q = r.q_trigger.unwrap();
            let dk = r.dk.unwrap();
            assert!(q >= prev_q, "q* fell at sigma = {}", row.value);
            assert!(dk >= prev_dk, "dK* fell at sigma = {}", row.value);
            prev_q = q;
            prev_dk = dk;
        }
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let cfg = ScenarioConfig {
            sweep: Some(SweepSpec {
                param: SweepParam::Eta,
                // the middle value violates rho > eta and must fail alone
                values: vec![0.02, 0.09, 0.01],
            }),
            ..stochastic_config()
        };
        let rows = sweep(&cfg).unwrap();
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.is_err());
        assert!(rows[2].outcome.is_ok());
    }

    #[test]
    fn comparative_table_spot_checks() {
        let cells = comparative_table(&CostParams::default(), &CapacitySpec::default()).unwrap();
        assert_eq!(cells.len(), 18);
        let find = |k0: f64, eta: f64, label: &str| {
            cells
                .iter()
                .find(|c| c.k0 == k0 && c.eta == eta && c.uncertainty == label)
                .unwrap()
        };
        let c = find(40.0, 0.02, "High");
        assert!((c.q_star - 14.4).abs() < 0.2, "q* = {}", c.q_star);
        assert_eq!(c.dk_star, 80.0);
        let c = find(80.0, 0.015, "Med");
        assert!((c.q_star - 23.6).abs() < 0.2, "q* = {}", c.q_star);
        assert_eq!(c.dk_star, 80.0);
        let c = find(80.0, 0.02, "Med");
        assert!((c.q_star - 25.4).abs() < 0.2, "q* = {}", c.q_star);
        assert_eq!(c.dk_star, 120.0);
    }

    #[test]
    fn comparative_table_uncertainty_ordering() {
        // within a (K0, eta) row, more uncertainty with the same expansion
        // size must not lower the trigger
        let cells = comparative_table(&CostParams::default(), &CapacitySpec::default()).unwrap();
        for chunk in cells.chunks(3) {
            for pair in chunk.windows(2) {
                if pair[0].dk_star == pair[1].dk_star {
                    assert!(
                        pair[1].q_star >= pair[0].q_star,
                        "trigger fell within row {:?}",
                        pair
                    );
                }
            }
        }
    }

    #[test]
    fn empty_rows_give_header_only_csv() {
        let s = csv_to_string(|w| write_sweep_csv(&[], w)).unwrap();
        assert_eq!(
            s,
            "param,value,q_star,dK_star,A1_bar,residual,q_star_exact\n"
        );
        let s = csv_to_string(|w| write_table_csv(&[], w)).unwrap();
        assert_eq!(s, "K0,eta,uncertainty,q_star,dK_star,q_star_exact\n");
        let s = csv_to_string(|w| write_oracle_csv(&[], w)).unwrap();
        assert_eq!(s, "q,dK,closed_form,mc_mean,std_error,truncation_bound,z\n");
    }

    #[test]
    fn q_star_reported_at_tenth_precision() {
        let cells = comparative_table(&CostParams::default(), &CapacitySpec::default()).unwrap();
        let s = csv_to_string(|w| write_table_csv(&cells, w)).unwrap();
        let first = s.lines().nth(1).unwrap();
        let q_field = first.split(',').nth(3).unwrap();
        let decimals = q_field.split('.').nth(1).map_or(0, str::len);
        assert_eq!(decimals, 1, "line: {first}");
        // exact column keeps more precision than the display column
        let exact_field = first.split(',').nth(5).unwrap();
        assert!(exact_field.len() >= q_field.len());
    }

    #[test]
    fn value_curve_is_continuous() {
        let cfg = stochastic_config();
        let s = csv_to_string(|w| emit_plot_data(PlotKind::ValueCurve, &cfg, w)).unwrap();
        let values: Vec<f64> = s
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(values.len() > 300);
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for pair in values.windows(2) {
            assert!(
                (pair[1] - pair[0]).abs() < 0.02 * scale,
                "jump between {} and {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn tangency_point_matches_values() {
        let cfg = stochastic_config();
        let s = csv_to_string(|w| emit_plot_data(PlotKind::OptionTangency, &cfg, w)).unwrap();
        let last = s.lines().last().unwrap();
        let fields: Vec<f64> = last.split(',').map(|f| f.parse().unwrap()).collect();
        let (f, v) = (fields[1], fields[2]);
        assert!(
            (f - v).abs() <= 1e-6 * f.abs().max(v.abs()),
            "F = {f}, V = {v}"
        );
    }

    #[test]
    fn sample_paths_have_requested_columns() {
        let cfg = stochastic_config();
        let s =
            csv_to_string(|w| emit_plot_data(PlotKind::SamplePaths { count: 3 }, &cfg, w)).unwrap();
        let header = s.lines().next().unwrap();
        assert_eq!(header, "t,path_0,path_1,path_2");
        assert!(s.lines().count() > 100);
    }
}
