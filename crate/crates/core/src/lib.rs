//! Runway capacity expansion planning under demand uncertainty.
//!
//! An airport facing growing, uncertain demand must decide *when* to add
//! runway capacity and *how much* to add. This crate solves that problem two
//! ways and checks them against each other:
//!
//! - [`deterministic`]: demand grows exponentially with no noise; the
//!   decision rule is the break-even (NPV) trigger.
//! - [`stochastic`]: demand follows a jump-diffusion (geometric growth with
//!   volatility and occasional downward shocks); the decision rule is the
//!   real-options trigger, which waits strictly longer than break-even.
//! - [`mc`]: an independent Monte Carlo estimator of the same expected
//!   discounted cost saving, used as an oracle for the closed forms.
//!
//! [`cost`] holds the airport cost structure (operating, holding,
//! passenger-delay, and investment costs), [`demand`] the demand process,
//! [`config`] the text config format, and [`harness`] the scenario runner
//! behind the `runway-capex` CLI.
//!
//! With the default `parallel` feature, Monte Carlo paths and sweep points
//! run on a rayon thread pool; results are bit-identical to the sequential
//! fallback regardless of worker count.

pub mod config;
pub mod cost;
pub mod demand;
pub mod deterministic;
pub mod error;
pub mod harness;
pub mod mc;
pub mod stochastic;

pub use config::{Model, ScenarioConfig, SweepParam, SweepSpec};
pub use cost::{CapacitySpec, CostParams};
pub use demand::{DemandParams, JumpSpec};
pub use deterministic::{npv_trigger, NpvDecision, NpvOutcome};
pub use error::{ModelError, Result};
pub use mc::{mc_value, oracle_compare, McEstimate, SimConfig};
pub use stochastic::{option_trigger, ExpansionDecision, OptionOutcome};
