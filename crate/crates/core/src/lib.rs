//! Two-sided pricing of a congested network.
//!
//! An access provider charges users a price `p` and content providers a
//! price `q` per unit of traffic. Demand on each side falls with its
//! price, and the resulting traffic congests the network, which in turn
//! throttles throughput. This crate solves the induced congestion
//! equilibrium, finds profit-optimal and zero-profit welfare-optimal
//! prices, measures how those prices move with capacity and user
//! sensitivity, and runs the parameter sweeps comparing two-sided with
//! user-only pricing.

pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod numeric;
pub mod objectives;
pub mod optimize;
pub mod oracle;
pub mod primitives;
pub mod sensitivity;

pub use equilibrium::{
    comparative_statics, solve_equilibrium, solve_for_demands, ComparativeStatics, Equilibrium,
};
pub use error::{Error, Result};
pub use experiments::{emit_csv, price_trend_sweep, run_sweep, ScenarioConfig, SweepResult};
pub use objectives::{evaluate, Gradients, ObjectiveReport};
pub use optimize::{
    growth_rates, optimize_one_sided, optimize_profit, optimize_welfare, GrowthRates, OptimumReport,
};
pub use primitives::{
    CongestionCurve, CongestionFamily, DemandCurve, DemandFamily, GainCurve, GainFamily,
    MarketModel, Parameter, PricePair,
};
pub use sensitivity::{
    elasticity_slope_vs_congestion, optimal_price_sensitivity, SensitivityReport,
};
