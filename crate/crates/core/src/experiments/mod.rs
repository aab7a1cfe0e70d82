//! Config-driven parameter sweeps comparing two-sided with user-only
//! pricing, and their CSV output.

pub mod config;
mod output;
mod verify;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optimize::{growth_rates, optimize_profit, optimize_welfare};
use crate::primitives::{MarketModel, Parameter};

pub use config::{
    CongestionSpec, DemandSpec, GainSpec, ModelSpec, OutputSpec, ScenarioConfig, SweepSpec,
};
pub use output::{emit_csv, format_value, read_csv, write_csv};
pub use verify::{verify_model, verify_sweep, Mismatch, VerifyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// All four optima and both growth rates.
    Growth,
    /// The two-sided optima only.
    Prices,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Growth => "growth",
            SweepKind::Prices => "prices",
        }
    }

    pub fn columns(self) -> &'static [Column] {
        match self {
            SweepKind::Growth => &Column::ALL,
            SweepKind::Prices => &Column::PRICES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    ParamValue,
    PStar,
    QStar,
    UStarTwo,
    UStarOne,
    RStar,
    PCirc,
    QCirc,
    WCircTwo,
    WCircOne,
    RCirc,
    PhiStar,
    PhiCirc,
    EpsStar,
    EpsCirc,
    /// `ok`, or the error that voided the row.
    Status,
}

impl Column {
    pub const ALL: [Column; 16] = [
        Column::ParamValue,
        Column::PStar,
        Column::QStar,
        Column::UStarTwo,
        Column::UStarOne,
        Column::RStar,
        Column::PCirc,
        Column::QCirc,
        Column::WCircTwo,
        Column::WCircOne,
        Column::RCirc,
        Column::PhiStar,
        Column::PhiCirc,
        Column::EpsStar,
        Column::EpsCirc,
        Column::Status,
    ];

    pub const PRICES: [Column; 10] = [
        Column::ParamValue,
        Column::PStar,
        Column::QStar,
        Column::PCirc,
        Column::QCirc,
        Column::PhiStar,
        Column::PhiCirc,
        Column::EpsStar,
        Column::EpsCirc,
        Column::Status,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::ParamValue => "param_value",
            Column::PStar => "p_star",
            Column::QStar => "q_star",
            Column::UStarTwo => "u_star_two",
            Column::UStarOne => "u_star_one",
            Column::RStar => "r_star",
            Column::PCirc => "p_circ",
            Column::QCirc => "q_circ",
            Column::WCircTwo => "w_circ_two",
            Column::WCircOne => "w_circ_one",
            Column::RCirc => "r_circ",
            Column::PhiStar => "phi_star",
            Column::PhiCirc => "phi_circ",
            Column::EpsStar => "eps_star",
            Column::EpsCirc => "eps_circ",
            Column::Status => "status",
        }
    }

    pub fn parse(name: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Values of one successful row. One-sided fields are `None` in a price
/// sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RowValues {
    pub p_star: f64,
    pub q_star: f64,
    pub u_star_two: f64,
    pub u_star_one: Option<f64>,
    pub r_star: Option<f64>,
    pub p_circ: f64,
    pub q_circ: f64,
    pub w_circ_two: f64,
    pub w_circ_one: Option<f64>,
    pub r_circ: Option<f64>,
    pub phi_star: f64,
    pub phi_circ: f64,
    pub eps_star: f64,
    pub eps_circ: f64,
}

impl RowValues {
    /// The numeric value of `column`; `None` for `status`, `param_value`
    /// and fields the sweep kind does not compute.
    pub fn get(&self, column: Column) -> Option<f64> {
        match column {
            Column::ParamValue | Column::Status => None,
            Column::PStar => Some(self.p_star),
            Column::QStar => Some(self.q_star),
            Column::UStarTwo => Some(self.u_star_two),
            Column::UStarOne => self.u_star_one,
            Column::RStar => self.r_star,
            Column::PCirc => Some(self.p_circ),
            Column::QCirc => Some(self.q_circ),
            Column::WCircTwo => Some(self.w_circ_two),
            Column::WCircOne => self.w_circ_one,
            Column::RCirc => self.r_circ,
            Column::PhiStar => Some(self.phi_star),
            Column::PhiCirc => Some(self.phi_circ),
            Column::EpsStar => Some(self.eps_star),
            Column::EpsCirc => Some(self.eps_circ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param_value: f64,
    /// The row's error message when its optimization failed.
    pub values: std::result::Result<RowValues, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: Parameter,
    pub kind: SweepKind,
    pub columns: Vec<Column>,
    /// Sorted by `param_value`.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Successful values of `column` with their parameter values.
    pub fn series(&self, column: Column) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                let v = r.values.as_ref().ok()?;
                Some((r.param_value, v.get(column)?))
            })
            .collect()
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.values.is_err()).count()
    }
}

fn growth_row(model: &MarketModel) -> Result<RowValues> {
    let g = growth_rates(model)?;
    Ok(RowValues {
        p_star: g.profit_two.prices.user,
        q_star: g.profit_two.prices.cp,
        u_star_two: g.profit_two.objective,
        u_star_one: Some(g.profit_one.objective),
        r_star: Some(g.profit_rate),
        p_circ: g.welfare_two.prices.user,
        q_circ: g.welfare_two.prices.cp,
        w_circ_two: g.welfare_two.objective,
        w_circ_one: Some(g.welfare_one.objective),
        r_circ: Some(g.welfare_rate),
        phi_star: g.profit_two.equilibrium.congestion,
        phi_circ: g.welfare_two.equilibrium.congestion,
        eps_star: g.profit_two.equilibrium.elasticity,
        eps_circ: g.welfare_two.equilibrium.elasticity,
    })
}

fn price_row(model: &MarketModel) -> Result<RowValues> {
    let profit = optimize_profit(model)?;
    let welfare = optimize_welfare(model)?;
    Ok(RowValues {
        p_star: profit.prices.user,
        q_star: profit.prices.cp,
        u_star_two: profit.objective,
        p_circ: welfare.prices.user,
        q_circ: welfare.prices.cp,
        w_circ_two: welfare.objective,
        phi_star: profit.equilibrium.congestion,
        phi_circ: welfare.equilibrium.congestion,
        eps_star: profit.equilibrium.elasticity,
        eps_circ: welfare.equilibrium.elasticity,
        ..RowValues::default()
    })
}

fn sweep_with(config: &ScenarioConfig, kind: SweepKind) -> Result<SweepResult> {
    let spec = config
        .sweep
        .ok_or_else(|| Error::config("<config>", 0, "no sweep.parameter configured"))?;
    let base = config.model()?;
    let compute = match kind {
        SweepKind::Growth => growth_row,
        SweepKind::Prices => price_row,
    };
    // rows are independent; collect keeps them in grid order
    let rows = spec
        .values()
        .into_par_iter()
        .map(|x| SweepRow {
            param_value: x,
            values: base
                .with_parameter(spec.parameter, x)
                .and_then(|m| compute(&m))
                .map_err(|e| e.to_string()),
        })
        .collect();
    let columns = match &config.output.columns {
        Some(c) if config.sweep.map(|s| s.kind) == Some(kind) => c.clone(),
        _ => kind.columns().to_vec(),
    };
    Ok(SweepResult {
        parameter: spec.parameter,
        kind,
        columns,
        rows,
    })
}

/// For each grid value: rebuild the model, compute the four optima and
/// both growth rates. A failing row records its error and the sweep goes
/// on.
pub fn run_sweep(config: &ScenarioConfig) -> Result<SweepResult> {
    sweep_with(config, SweepKind::Growth)
}

/// As [`run_sweep`] with the two-sided optima only.
pub fn price_trend_sweep(config: &ScenarioConfig) -> Result<SweepResult> {
    sweep_with(config, SweepKind::Prices)
}

/// The sweep named by `sweep.kind`.
pub fn run_configured(config: &ScenarioConfig) -> Result<SweepResult> {
    let kind = config.sweep.map(|s| s.kind).unwrap_or(SweepKind::Growth);
    sweep_with(config, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_names_round_trip() {
        for c in Column::ALL {
            assert_eq!(Column::parse(c.name()), Some(c));
        }
        assert_eq!(Column::parse("nope"), None);
    }

    #[test]
    fn small_alpha_sweep() {
        let config =
            ScenarioConfig::parse("sweep.parameter = alpha\nsweep.range = 0.5:1.5:3", "t").unwrap();
        let r = run_sweep(&config).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.failed_rows(), 0);
        let rates = r.series(Column::RStar);
        assert!(
            rates[0].1 < rates[1].1 && rates[1].1 < rates[2].1,
            "{rates:?}"
        );
        for (_, v) in rates {
            assert!(v >= -1e-10);
        }
    }

    #[test]
    fn failing_rows_are_recorded() {
        // a huge cost leaves no profitable user-only price
        let config =
            ScenarioConfig::parse("c = 1.9\nsweep.parameter = mu\nsweep.range = 1:2:2", "t")
                .unwrap();
        let r = run_sweep(&config).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.failed_rows(), 2);
        assert!(r.rows[0]
            .values
            .as_ref()
            .unwrap_err()
            .contains("degenerate"));
    }

    #[test]
    fn price_sweep_skips_one_sided() {
        let config = ScenarioConfig::parse(
            "sweep.parameter = beta\nsweep.range = 1:2:2\nsweep.kind = prices",
            "t",
        )
        .unwrap();
        let r = run_configured(&config).unwrap();
        assert_eq!(r.kind, SweepKind::Prices);
        let v = r.rows[0].values.as_ref().unwrap();
        assert!(v.r_star.is_none());
        assert!(v.p_circ <= v.p_star && v.q_circ <= v.q_star);
    }

    #[test]
    fn sweep_needs_block() {
        let config = ScenarioConfig::default();
        assert!(run_sweep(&config).unwrap_err().is_config_error());
    }
}
