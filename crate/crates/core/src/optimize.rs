//! Profit-optimal and zero-profit welfare-optimal prices, the user-only
//! pricing benchmarks and the growth rates comparing the two.
//!
//! The two-sided profit search runs a 101×101 grid over the clamped price
//! box, refines the best cell by alternating golden-section line searches
//! on `p` and `q`, and finally polishes an interior optimum with Newton
//! steps on the closed-form gradient. Golden section alone cannot resolve
//! prices below about `10⁻⁸` because the objective is flat to rounding
//! there; the polish takes the prices to rounding level, which the
//! first-order residuals and the price sensitivities need.

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_section_max};
use crate::objectives::{evaluate, profit_at, surplus_welfare_at};
use crate::primitives::{MarketModel, PricePair};

const COARSE_POINTS: usize = 101;
const SEGMENT_POINTS: usize = 2001;
const MAX_SWEEPS: usize = 200;
const SWEEP_TOL: f64 = 1e-9;
const LINE_TOL: f64 = 1e-10;
const SEGMENT_LINE_TOL: f64 = 1e-9;
/// Distance from the price box below which an optimum counts as boundary.
pub const BOUNDARY_TOL: f64 = 1e-6;
const POLISH_STEPS: usize = 10;
const POLISH_JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimumKind {
    ProfitTwoSided,
    WelfareTwoSided,
    ProfitOneSided,
    WelfareOneSided,
}

/// First-order diagnostics at an optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `m̃^p`, hazard of user demand at `p`.
    pub user_hazard: f64,
    /// `ñ^q`, hazard of CP demand at `q`.
    pub cp_hazard: f64,
    pub elasticity: f64,
    /// Profit optima: `max |h·(p + q − c)·ε^λ − 1|` over the priced sides.
    pub kkt_residual: Option<f64>,
    /// Two-sided profit: `|(p+q−c)/(p+q) − 1/(ε^λ(ε^m_p + ε^n_q))|`.
    pub lerner_residual: Option<f64>,
    /// Two-sided welfare: the zero-profit first-order condition in
    /// cross-product form, divided by the larger hazard.
    pub ramsey_residual: Option<f64>,
    /// False when the optimum is within [`BOUNDARY_TOL`] of the search
    /// region's edge; the residuals then carry no guarantee.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumReport {
    pub kind: OptimumKind,
    pub prices: PricePair,
    /// Profit `U` for profit optima, `W_m + W_n` for welfare optima.
    pub objective: f64,
    pub equilibrium: Equilibrium,
    pub diagnostics: Diagnostics,
    /// Objective evaluations spent by the search.
    pub evaluations: usize,
}

/// Counts evaluations and parks the first solver error so closures handed
/// to the line searches can stay infallible.
struct Probe<'a> {
    model: &'a MarketModel,
    evaluations: usize,
    error: Option<Error>,
}

impl<'a> Probe<'a> {
    fn new(model: &'a MarketModel) -> Self {
        Probe {
            model,
            evaluations: 0,
            error: None,
        }
    }

    fn absorb(&mut self, r: Result<f64>) -> f64 {
        self.evaluations += 1;
        match r {
            Ok(v) => v,
            Err(e) => {
                self.error.get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    }

    fn profit(&mut self, p: f64, q: f64) -> f64 {
        let r = profit_at(self.model, PricePair::new(p, q));
        self.absorb(r)
    }

    fn ramsey(&mut self, p: f64) -> f64 {
        let q = (self.model.cost - p).max(0.0);
        let r = surplus_welfare_at(self.model, PricePair::new(p, q));
        self.absorb(r)
    }

    fn check(&mut self) -> Result<()> {
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

fn interior(x: f64, lo: f64, hi: f64) -> bool {
    x - lo > BOUNDARY_TOL && hi - x > BOUNDARY_TOL
}

/// Profit-maximizing two-sided prices `(p*, q*)`.
pub fn optimize_profit(model: &MarketModel) -> Result<OptimumReport> {
    model.validate()?;
    let pu = model.user_demand.search_upper();
    let qu = model.cp_demand.search_upper();
    let mut probe = Probe::new(model);

    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..COARSE_POINTS {
        let p = linspace(0.0, pu, COARSE_POINTS, i);
        for j in 0..COARSE_POINTS {
            let q = linspace(0.0, qu, COARSE_POINTS, j);
            let v = probe.profit(p, q);
            if v > best.2 {
                best = (p, q, v);
            }
        }
    }
    probe.check()?;

    let (cell_p, cell_q) = (
        pu / (COARSE_POINTS - 1) as f64,
        qu / (COARSE_POINTS - 1) as f64,
    );
    let (mut p, mut q) = (best.0, best.1);
    let (mut wp, mut wq) = (cell_p, cell_q);
    for _ in 0..MAX_SWEEPS {
        let line = golden_section_max(
            |x| probe.profit(x, q),
            (p - wp).max(0.0),
            (p + wp).min(pu),
            LINE_TOL,
        );
        probe.evaluations += line.evaluations;
        let dp = line.x - p;
        p = line.x;
        let line = golden_section_max(
            |y| probe.profit(p, y),
            (q - wq).max(0.0),
            (q + wq).min(qu),
            LINE_TOL,
        );
        probe.evaluations += line.evaluations;
        let dq = line.x - q;
        q = line.x;
        probe.check()?;
        if dp.abs().max(dq.abs()) < SWEEP_TOL {
            break;
        }
        // a step that reached the bracket edge keeps the bracket wide
        wp = (4.0 * dp.abs()).clamp(1e-7, cell_p);
        wq = (4.0 * dq.abs()).clamp(1e-7, cell_q);
    }

    let inside = interior(p, 0.0, pu) && interior(q, 0.0, qu);
    if inside {
        (p, q) = polish_profit(model, &mut probe, p, q, pu, qu)?;
    }
    let prices = PricePair::new(p, q);
    let report = evaluate(model, prices)?;
    let diagnostics = profit_diagnostics(model, &report.equilibrium, prices, true, inside)?;
    Ok(OptimumReport {
        kind: OptimumKind::ProfitTwoSided,
        prices,
        objective: report.profit,
        equilibrium: report.equilibrium,
        diagnostics,
        evaluations: probe.evaluations,
    })
}

/// Newton iteration on the closed-form profit gradient, with a
/// finite-difference Jacobian. Steps must stay inside the box and must
/// not lower the profit.
fn polish_profit(
    model: &MarketModel,
    probe: &mut Probe<'_>,
    mut p: f64,
    mut q: f64,
    pu: f64,
    qu: f64,
) -> Result<(f64, f64)> {
    let gradient = |p: f64, q: f64| -> Result<(f64, f64)> {
        let g = evaluate(model, PricePair::new(p, q))?.gradients;
        Ok((g.profit_user_price, g.profit_cp_price))
    };
    let mut value = probe.profit(p, q);
    let mut g = gradient(p, q)?;
    for _ in 0..POLISH_STEPS {
        let h = POLISH_JACOBIAN_STEP;
        let (gp_plus, gp_minus) = (gradient(p + h, q)?, gradient(p - h, q)?);
        let (gq_plus, gq_minus) = (gradient(p, q + h)?, gradient(p, q - h)?);
        probe.evaluations += 4;
        let a = (gp_plus.0 - gp_minus.0) / (2.0 * h);
        let b = (gq_plus.0 - gq_minus.0) / (2.0 * h);
        let c = (gp_plus.1 - gp_minus.1) / (2.0 * h);
        let d = (gq_plus.1 - gq_minus.1) / (2.0 * h);
        let det = a * d - b * c;
        if !(det.is_finite() && det != 0.0) {
            break;
        }
        let step_p = (d * g.0 - b * g.1) / det;
        let step_q = (a * g.1 - c * g.0) / det;
        let (np, nq) = (p - step_p, q - step_q);
        if !(interior(np, 0.0, pu) && interior(nq, 0.0, qu)) {
            break;
        }
        let next_value = probe.profit(np, nq);
        if next_value < value - 1e-15 * value.abs() {
            break;
        }
        let next_g = gradient(np, nq)?;
        let moved = step_p.abs().max(step_q.abs());
        let improved = next_g.0.hypot(next_g.1) <= g.0.hypot(g.1);
        if improved {
            (p, q, value, g) = (np, nq, next_value, next_g);
        }
        if !improved || moved < 1e-15 {
            break;
        }
    }
    probe.check()?;
    Ok((p, q))
}

fn profit_diagnostics(
    model: &MarketModel,
    eq: &Equilibrium,
    prices: PricePair,
    two_sided: bool,
    interior: bool,
) -> Result<Diagnostics> {
    let m_hazard = model.user_demand.hazard(prices.user)?;
    let n_hazard = model.cp_demand.hazard(prices.cp)?;
    let eps = eq.elasticity;
    let margin = prices.total() - model.cost;
    let user_kkt = (m_hazard * margin * eps - 1.0).abs();
    let (kkt, lerner) = if two_sided {
        let cp_kkt = (n_hazard * margin * eps - 1.0).abs();
        let price_elasticity = prices.user * m_hazard + prices.cp * n_hazard;
        let lerner = (margin / prices.total() - 1.0 / (eps * price_elasticity)).abs();
        (user_kkt.max(cp_kkt), Some(lerner))
    } else {
        (user_kkt, None)
    };
    Ok(Diagnostics {
        user_hazard: m_hazard,
        cp_hazard: n_hazard,
        elasticity: eps,
        kkt_residual: Some(kkt),
        lerner_residual: lerner,
        ramsey_residual: None,
        interior,
    })
}

/// The part of the zero-profit line `p + q = c` inside the price box, as
/// a range of `p`.
pub fn ramsey_segment(model: &MarketModel) -> Result<(f64, f64)> {
    let c = model.cost;
    let lo = (c - model.cp_demand.search_upper()).max(0.0);
    let hi = c.min(model.user_demand.search_upper());
    if !(lo <= hi) {
        return Err(Error::InvalidModel(format!(
            "zero-profit line p + q = {c} misses the price box"
        )));
    }
    Ok((lo, hi))
}

/// Welfare-maximizing prices `(p°, q°)` under zero profit, `q° = c − p°`.
pub fn optimize_welfare(model: &MarketModel) -> Result<OptimumReport> {
    model.validate()?;
    let c = model.cost;
    let (lo, hi) = ramsey_segment(model)?;
    let mut probe = Probe::new(model);

    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..SEGMENT_POINTS {
        let v = probe.ramsey(linspace(lo, hi, SEGMENT_POINTS, i));
        if v > best.1 {
            best = (i, v);
        }
    }
    probe.check()?;
    let a = linspace(lo, hi, SEGMENT_POINTS, best.0.saturating_sub(1));
    let b = linspace(lo, hi, SEGMENT_POINTS, (best.0 + 1).min(SEGMENT_POINTS - 1));
    let line = golden_section_max(|x| probe.ramsey(x), a, b, SEGMENT_LINE_TOL);
    probe.evaluations += line.evaluations;
    probe.check()?;
    let mut p = line.x;

    // The slope of W_m + W_n along the line is ∂W/∂p − ∂W/∂q; its root
    // pins the optimum far below the golden-section tolerance.
    let inside = interior(p, lo, hi);
    if inside {
        let slope = |x: f64| match evaluate(model, PricePair::new(x, c - x)) {
            Ok(r) => r.gradients.welfare_user_price - r.gradients.welfare_cp_price,
            Err(_) => f64::NAN,
        };
        if let Some(root) = bisect(slope, a, b, 1e-15) {
            if probe.ramsey(root) >= line.value - 1e-15 * line.value.abs() {
                p = root;
            }
        }
    }

    let prices = PricePair::new(p, (c - p).max(0.0));
    let report = evaluate(model, prices)?;
    let eq = report.equilibrium.clone();
    let m_hazard = model.user_demand.hazard(prices.user)?;
    let n_hazard = model.cp_demand.hazard(prices.cp)?;
    let s_m = model.user_demand.per_unit_surplus(prices.user)?;
    let s_n = model.cp_demand.per_unit_surplus(prices.cp)?;
    let ramsey = ramsey_residual(m_hazard, n_hazard, s_m, s_n, eq.elasticity);
    Ok(OptimumReport {
        kind: OptimumKind::WelfareTwoSided,
        prices,
        objective: report.surplus_welfare(),
        equilibrium: eq,
        diagnostics: Diagnostics {
            user_hazard: m_hazard,
            cp_hazard: n_hazard,
            elasticity: report.equilibrium.elasticity,
            kkt_residual: None,
            lerner_residual: None,
            ramsey_residual: Some(ramsey),
            interior: inside,
        },
        evaluations: probe.evaluations,
    })
}

/// `|m̃(ε−1+s_n/(s_m+s_n)) − ñ(ε−1+s_m/(s_m+s_n))| / max(m̃, ñ)`.
pub fn ramsey_residual(m_hazard: f64, n_hazard: f64, s_m: f64, s_n: f64, eps: f64) -> f64 {
    let total = s_m + s_n;
    let lhs = m_hazard * (eps - 1.0 + s_n / total);
    let rhs = n_hazard * (eps - 1.0 + s_m / total);
    (lhs - rhs).abs() / m_hazard.max(n_hazard)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Profit,
    Welfare,
}

/// User-only pricing, `q = 0`.
///
/// Profit: maximizes `U(p, 0)` over `p`. Welfare: zero profit with `q = 0`
/// leaves only `p = c`, so the report is `W` at `(c, 0)`.
pub fn optimize_one_sided(model: &MarketModel, objective: Objective) -> Result<OptimumReport> {
    model.validate()?;
    match objective {
        Objective::Profit => one_sided_profit(model),
        Objective::Welfare => {
            let prices = PricePair::new(model.cost, 0.0);
            let report = evaluate(model, prices)?;
            let m_hazard = model.user_demand.hazard(prices.user)?;
            let n_hazard = model.cp_demand.hazard(0.0)?;
            Ok(OptimumReport {
                kind: OptimumKind::WelfareOneSided,
                prices,
                objective: report.surplus_welfare(),
                diagnostics: Diagnostics {
                    user_hazard: m_hazard,
                    cp_hazard: n_hazard,
                    elasticity: report.equilibrium.elasticity,
                    kkt_residual: None,
                    lerner_residual: None,
                    ramsey_residual: None,
                    interior: false,
                },
                equilibrium: report.equilibrium,
                evaluations: 1,
            })
        }
    }
}

fn one_sided_profit(model: &MarketModel) -> Result<OptimumReport> {
    let pu = model.user_demand.search_upper();
    let mut probe = Probe::new(model);
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..COARSE_POINTS {
        let v = probe.profit(linspace(0.0, pu, COARSE_POINTS, i), 0.0);
        if v > best.1 {
            best = (i, v);
        }
    }
    probe.check()?;
    let a = linspace(0.0, pu, COARSE_POINTS, best.0.saturating_sub(1));
    let b = linspace(0.0, pu, COARSE_POINTS, (best.0 + 1).min(COARSE_POINTS - 1));
    let line = golden_section_max(|x| probe.profit(x, 0.0), a, b, LINE_TOL);
    probe.evaluations += line.evaluations;
    probe.check()?;
    let mut p = line.x;
    let inside = interior(p, 0.0, pu);
    if inside {
        let slope = |x: f64| match evaluate(model, PricePair::new(x, 0.0)) {
            Ok(r) => r.gradients.profit_user_price,
            Err(_) => f64::NAN,
        };
        if let Some(root) = bisect(slope, a, b, 1e-15) {
            if probe.profit(root, 0.0) >= line.value - 1e-15 * line.value.abs() {
                p = root;
            }
        }
    }
    let prices = PricePair::new(p, 0.0);
    let report = evaluate(model, prices)?;
    let diagnostics = profit_diagnostics(model, &report.equilibrium, prices, false, inside)?;
    Ok(OptimumReport {
        kind: OptimumKind::ProfitOneSided,
        prices,
        objective: report.profit,
        equilibrium: report.equilibrium,
        diagnostics,
        evaluations: probe.evaluations,
    })
}

/// The four optima and the two growth rates of two-sided over user-only
/// pricing.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRates {
    /// `r* = (U*_two − U*_one) / U*_one`.
    pub profit_rate: f64,
    /// `r° = (W°_two − W°_one) / W°_one`.
    pub welfare_rate: f64,
    pub profit_two: OptimumReport,
    pub profit_one: OptimumReport,
    pub welfare_two: OptimumReport,
    pub welfare_one: OptimumReport,
}

pub fn growth_rates(model: &MarketModel) -> Result<GrowthRates> {
    let profit_one = optimize_one_sided(model, Objective::Profit)?;
    if !(profit_one.objective > 0.0) {
        return Err(Error::DegenerateBaseline {
            what: "one-sided profit",
            value: profit_one.objective,
        });
    }
    let welfare_one = optimize_one_sided(model, Objective::Welfare)?;
    if !(welfare_one.objective > 0.0) {
        return Err(Error::DegenerateBaseline {
            what: "one-sided welfare",
            value: welfare_one.objective,
        });
    }
    let profit_two = optimize_profit(model)?;
    let welfare_two = optimize_welfare(model)?;
    Ok(GrowthRates {
        profit_rate: (profit_two.objective - profit_one.objective) / profit_one.objective,
        welfare_rate: (welfare_two.objective - welfare_one.objective) / welfare_one.objective,
        profit_two,
        profit_one,
        welfare_two,
        welfare_one,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{DemandCurve, GainCurve};

    fn worked_example(mu: f64) -> MarketModel {
        MarketModel::baseline()
            .with_gain(GainCurve::exponential())
            .with_sensitivity(std::f64::consts::E - 1.0)
            .with_cp_demand(DemandCurve::complement_power(2.0).unwrap())
            .with_capacity(mu)
    }

    #[test]
    fn symmetric_baseline_profit() {
        let r = optimize_profit(&MarketModel::baseline()).unwrap();
        assert!((r.prices.user - r.prices.cp).abs() < 1e-6, "{:?}", r.prices);
        assert!(r.diagnostics.interior);
        assert!(r.diagnostics.kkt_residual.unwrap() < 1e-5);
        assert!(r.diagnostics.lerner_residual.unwrap() < 1e-5);
    }

    #[test]
    fn symmetric_baseline_welfare() {
        let r = optimize_welfare(&MarketModel::baseline()).unwrap();
        assert!((r.prices.user - 0.35).abs() < 1e-6);
        assert_eq!(r.prices.user + r.prices.cp, 0.7);
        assert!(r.diagnostics.ramsey_residual.unwrap() < 1e-5);
    }

    #[test]
    fn worked_example_profit_prices() {
        let model = worked_example(1.0);
        let r = optimize_profit(&model).unwrap();
        let phi = r.equilibrium.congestion;
        let c = model.cost;
        assert!((r.prices.user - (phi + c + 2.0) / (phi + 4.0)).abs() < 1e-5);
        assert!((r.prices.cp - (phi + 2.0 * c) / (phi + 4.0)).abs() < 1e-5);
    }

    #[test]
    fn worked_example_welfare_price() {
        let model = worked_example(1.0);
        let r = optimize_welfare(&model).unwrap();
        let phi = r.equilibrium.congestion;
        let k = (-phi + (phi * phi + 48.0).sqrt()) / 6.0;
        let expected = (3.0 * k + 2.0 * model.cost - 2.0) / (3.0 * k + 2.0);
        assert!(
            (r.prices.user - expected).abs() < 1e-5,
            "{} vs {expected}",
            r.prices.user
        );
    }

    #[test]
    fn one_sided_welfare_is_fixed_point() {
        let r = optimize_one_sided(&MarketModel::baseline(), Objective::Welfare).unwrap();
        assert_eq!(r.prices, PricePair::new(0.7, 0.0));
    }

    #[test]
    fn baseline_growth_positive() {
        let g = growth_rates(&MarketModel::baseline()).unwrap();
        assert!(g.profit_rate > 0.0);
        assert!(g.welfare_rate >= 0.0);
    }

    #[test]
    fn degenerate_baseline() {
        // user demand vanishes past 0.5, so p = c = 0.6 sells nothing
        let user = DemandCurve::custom("short", 0.5, |p| 1.0 - 2.0 * p).unwrap();
        let model = MarketModel::baseline()
            .with_user_demand(user)
            .with_cost(0.6);
        assert!(matches!(
            growth_rates(&model),
            Err(Error::DegenerateBaseline { .. }) | Err(Error::Domain { .. })
        ));
    }
}
