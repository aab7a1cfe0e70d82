//! `--verify`: two-sided optima against the brute-force grid.

use rayon::prelude::*;

use crate::error::Result;
use crate::optimize::{optimize_profit, optimize_welfare};
use crate::oracle::{grid_optimize, GridSpec, OracleObjective};
use crate::primitives::{MarketModel, PricePair};

use super::{ScenarioConfig, SweepResult};

/// Slack on the profit value comparison.
const VALUE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// Sweep value of the row, if any.
    pub param_value: Option<f64>,
    pub objective: &'static str,
    pub optimizer: PricePair,
    pub oracle: PricePair,
    pub cell: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    fn merge(mut self, other: VerifyReport) -> Self {
        self.checked += other.checked;
        self.mismatches.extend(other.mismatches);
        self
    }
}

fn within(a: PricePair, b: PricePair, cell: (f64, f64)) -> bool {
    // a hair of slack for the rounding of the grid coordinates
    (a.user - b.user).abs() <= cell.0 * (1.0 + 1e-9) && (a.cp - b.cp).abs() <= cell.1 * (1.0 + 1e-9)
}

/// Checks the given optima of `model`: the profit optimum must lie within
/// one grid cell of the grid argmax and be at least as profitable; the
/// welfare optimum within one cell along the zero-profit segment.
fn check(
    model: &MarketModel,
    points: usize,
    param_value: Option<f64>,
    profit: (PricePair, f64),
    welfare: PricePair,
) -> Result<VerifyReport> {
    let grid = GridSpec::for_model(model, points);
    let mut report = VerifyReport::default();
    let g = grid_optimize(model, OracleObjective::Profit, &grid)?;
    report.checked += 1;
    if !within(profit.0, g.prices, g.cell) || profit.1 < g.value - VALUE_TOL {
        report.mismatches.push(Mismatch {
            param_value,
            objective: "profit",
            optimizer: profit.0,
            oracle: g.prices,
            cell: g.cell,
        });
    }
    let g = grid_optimize(model, OracleObjective::RamseyWelfare, &grid)?;
    report.checked += 1;
    if !within(welfare, g.prices, g.cell) {
        report.mismatches.push(Mismatch {
            param_value,
            objective: "welfare",
            optimizer: welfare,
            oracle: g.prices,
            cell: g.cell,
        });
    }
    Ok(report)
}

/// Optimizes `model` and checks both two-sided optima against a grid of
/// `points` per axis.
pub fn verify_model(model: &MarketModel, points: usize) -> Result<VerifyReport> {
    let profit = optimize_profit(model)?;
    let welfare = optimize_welfare(model)?;
    check(
        model,
        points,
        None,
        (profit.prices, profit.objective),
        welfare.prices,
    )
}

/// Checks every successful row of `result`. Failed rows are skipped.
pub fn verify_sweep(config: &ScenarioConfig, result: &SweepResult) -> Result<VerifyReport> {
    let base = config.model()?;
    let reports: Vec<Result<VerifyReport>> = result
        .rows
        .par_iter()
        .filter_map(|row| Some((row.param_value, *row.values.as_ref().ok()?)))
        .map(|(x, v)| {
            let model = base.with_parameter(result.parameter, x)?;
            check(
                &model,
                config.verify_points,
                Some(x),
                (PricePair::new(v.p_star, v.q_star), v.u_star_two),
                PricePair::new(v.p_circ, v.q_circ),
            )
        })
        .collect();
    reports
        .into_iter()
        .try_fold(VerifyReport::default(), |acc, r| Ok(acc.merge(r?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::price_trend_sweep;

    #[test]
    fn baseline_verifies() {
        let r = verify_model(&MarketModel::baseline(), 201).unwrap();
        assert_eq!(r.checked, 2);
        assert!(r.passed(), "{:?}", r.mismatches);
    }

    #[test]
    fn wrong_prices_are_caught() {
        let model = MarketModel::baseline();
        let welfare = optimize_welfare(&model).unwrap().prices;
        let r = check(&model, 201, None, (PricePair::new(0.1, 0.1), 0.0), welfare).unwrap();
        assert_eq!(r.mismatches.len(), 1);
        assert_eq!(r.mismatches[0].objective, "profit");
    }

    #[test]
    fn sweep_rows_verify() {
        let config = ScenarioConfig::parse(
            "sweep.parameter = alpha\nsweep.range = 0.5:2:3\nsweep.kind = prices\nverify.grid = 101",
            "t",
        )
        .unwrap();
        let result = price_trend_sweep(&config).unwrap();
        let r = verify_sweep(&config, &result).unwrap();
        assert_eq!(r.checked, 6);
        assert!(r.passed(), "{:?}", r.mismatches);
    }
}
