//! Profit and welfare at given prices, with closed-form gradients.

use crate::equilibrium::{gap_slope, solve_equilibrium, Equilibrium};
use crate::error::Result;
use crate::primitives::{MarketModel, PricePair};

/// Closed-form gradients of profit `U` and of the Ramsey welfare objective
/// `W_m + W_n`.
///
/// The welfare gradients differentiate `W_m + W_n`, the objective
/// maximized on the zero-profit line `p + q = c`, where it coincides with
/// total welfare.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gradients {
    pub profit_user_price: f64,
    pub profit_cp_price: f64,
    pub profit_capacity: f64,
    pub welfare_user_price: f64,
    pub welfare_cp_price: f64,
    pub welfare_capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveReport {
    pub prices: PricePair,
    /// `U = (p + q − c)·λ`; negative below cost.
    pub profit: f64,
    /// `W_m = s_m(p)·λ`.
    pub user_welfare: f64,
    /// `W_n = s_n(q)·λ`.
    pub cp_welfare: f64,
    /// `W = W_m + W_n + U`.
    pub welfare: f64,
    pub gradients: Gradients,
    pub equilibrium: Equilibrium,
    /// No traffic at these prices; all values and gradients are zero.
    pub degenerate: bool,
}

impl ObjectiveReport {
    /// `W_m + W_n`, the welfare maximized under the zero-profit constraint.
    pub fn surplus_welfare(&self) -> f64 {
        self.user_welfare + self.cp_welfare
    }
}

/// Profit `U(p, q)` alone, for search loops.
pub(crate) fn profit_at(model: &MarketModel, prices: PricePair) -> Result<f64> {
    let eq = solve_equilibrium(model, prices)?;
    Ok((prices.total() - model.cost) * eq.throughput)
}

/// `W_m + W_n` alone, for search loops.
pub(crate) fn surplus_welfare_at(model: &MarketModel, prices: PricePair) -> Result<f64> {
    let eq = solve_equilibrium(model, prices)?;
    if eq.degenerate {
        return Ok(0.0);
    }
    // S_m·n·ρ + S_n·m·ρ, avoiding the division in s_m = S_m/m
    let rho = eq.throughput / (eq.user_demand * eq.cp_demand);
    let s_m = model.user_demand.eval_surplus(prices.user);
    let s_n = model.cp_demand.eval_surplus(prices.cp);
    Ok((s_m * eq.cp_demand + s_n * eq.user_demand) * rho)
}

/// Objectives and closed-form gradients at `(p, q)`.
pub fn evaluate(model: &MarketModel, prices: PricePair) -> Result<ObjectiveReport> {
    let eq = solve_equilibrium(model, prices)?;
    let margin = prices.total() - model.cost;
    if eq.degenerate {
        return Ok(ObjectiveReport {
            prices,
            profit: 0.0,
            user_welfare: 0.0,
            cp_welfare: 0.0,
            welfare: 0.0,
            gradients: Gradients::default(),
            equilibrium: eq,
            degenerate: true,
        });
    }
    let lambda = eq.throughput;
    let eps = eq.elasticity;
    let profit = margin * lambda;
    let user_welfare = model.user_demand.per_unit_surplus(prices.user)? * lambda;
    let cp_welfare = model.cp_demand.per_unit_surplus(prices.cp)? * lambda;
    let surplus = user_welfare + cp_welfare;

    let m_hazard = model.user_demand.hazard(prices.user)?;
    let n_hazard = model.cp_demand.hazard(prices.cp)?;
    let capacity_slope = model
        .congestion
        .eval_capacity_slope(eq.congestion, eq.capacity);
    let gain_hazard = model.gain.eval_slope(eq.congestion, eq.sensitivity).abs()
        / model.gain.eval(eq.congestion, eq.sensitivity);
    let dg = gap_slope(model, &eq);

    let gradients = Gradients {
        profit_user_price: lambda - margin * eps * lambda * m_hazard,
        profit_cp_price: lambda - margin * eps * lambda * n_hazard,
        profit_capacity: margin * capacity_slope * (1.0 - eps),
        welfare_user_price: -lambda - m_hazard * (cp_welfare - surplus * (1.0 - eps)),
        welfare_cp_price: -lambda - n_hazard * (user_welfare - surplus * (1.0 - eps)),
        welfare_capacity: surplus * gain_hazard * capacity_slope / dg,
    };

    Ok(ObjectiveReport {
        prices,
        profit,
        user_welfare,
        cp_welfare,
        welfare: surplus + profit,
        gradients,
        equilibrium: eq,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_margin_has_zero_profit() {
        let model = MarketModel::baseline();
        let r = evaluate(&model, PricePair::new(0.3, 0.4)).unwrap();
        assert_eq!(r.profit, 0.0);
        assert!((r.welfare - r.surplus_welfare()).abs() < 1e-15);
    }

    #[test]
    fn welfare_decomposition() {
        let model = MarketModel::baseline();
        let p = PricePair::new(0.45, 0.45);
        let r = evaluate(&model, p).unwrap();
        let lambda = r.equilibrium.throughput;
        assert!((r.user_welfare - 0.55 / 2.0 * lambda).abs() < 1e-15);
        assert!(
            (r.welfare - (r.user_welfare + r.cp_welfare + r.profit)).abs() <= 1e-12 * r.welfare
        );
        assert!((surplus_welfare_at(&model, p).unwrap() - r.surplus_welfare()).abs() < 1e-14);
        assert!((profit_at(&model, p).unwrap() - r.profit).abs() < 1e-15);
    }

    #[test]
    fn degenerate_prices() {
        let model = MarketModel::baseline();
        let r = evaluate(&model, PricePair::new(1.0, 0.2)).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.profit, 0.0);
        assert_eq!(r.gradients, Gradients::default());
    }

    #[test]
    fn negative_margin_is_legal() {
        let model = MarketModel::baseline();
        let r = evaluate(&model, PricePair::new(0.1, 0.1)).unwrap();
        assert!(r.profit < 0.0);
    }
}
