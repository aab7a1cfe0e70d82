//! How optimal prices move with capacity, user sensitivity and the demand
//! shapes, measured by re-optimizing at perturbed parameters, together
//! with the sign and ratio rules that the capacity and sensitivity
//! results predict.

use rayon::prelude::*;

use crate::equilibrium::{solve_equilibrium, Sign};
use crate::error::{Error, Result};
use crate::optimize::{optimize_profit, optimize_welfare, OptimumReport};
use crate::primitives::{MarketModel, Parameter, PricePair};

/// Relative capacity offsets of the elasticity trace stencil.
const TRACE_OFFSETS: [f64; 5] = [-2e-3, -1e-3, 0.0, 1e-3, 2e-3];
const MIN_TRACE_SPREAD: f64 = 1e-10;
/// Below this, `∂ε^λ/∂φ` or `m̃ − ñ` is treated as zero and the rule
/// that depends on its sign is not judged.
pub const INCONCLUSIVE_TOL: f64 = 1e-6;
/// Relative tolerance of the ratio identities.
pub const RATIO_TOL: f64 = 1e-2;
pub const DEFAULT_STEP: f64 = 1e-3;

/// `dε^λ/dφ` along the equilibrium trace obtained by moving capacity with
/// `(p, q, s)` held fixed.
///
/// Five equilibria at `μ(1 + k·10⁻³)`, `k = −2..2`, give `(φ, ε^λ)` pairs
/// and the least-squares slope through them is returned. This is the
/// derivative with `μ` eliminated, not the partial at fixed `μ`.
pub fn elasticity_slope_vs_congestion(model: &MarketModel, prices: PricePair) -> Result<f64> {
    let mut points = [(0.0, 0.0); 5];
    for (slot, offset) in points.iter_mut().zip(TRACE_OFFSETS) {
        let perturbed = model.clone().with_capacity(model.capacity * (1.0 + offset));
        let eq = solve_equilibrium(&perturbed, prices)?;
        if eq.degenerate {
            return Err(Error::domain(
                "price (zero demand on the trace)",
                prices.user,
            ));
        }
        *slot = (eq.congestion, eq.elasticity);
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo >= MIN_TRACE_SPREAD) {
        return Err(Error::DegenerateTrace { spread: hi - lo });
    }
    let n = points.len() as f64;
    let mean_phi = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_eps = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (phi, eps) in points {
        sxy += (phi - mean_phi) * (eps - mean_eps);
        sxx += (phi - mean_phi) * (phi - mean_phi);
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// The sign the rule depends on is numerically zero.
    Inconclusive,
    /// The rule's premise is false here (e.g. `∂ε^λ/∂φ < 0` for a rule
    /// stated only for the positive branch); observed values are still
    /// reported.
    NotApplicable,
}

/// One predicted sign or ratio, compared with the finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: &'static str,
    /// For sign rules, `±1`; for ratio rules, the right-hand side.
    pub expected: f64,
    pub observed: f64,
    pub verdict: Verdict,
}

/// Local quantities at the two base optima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityContext {
    pub profit_user_hazard: f64,
    pub profit_cp_hazard: f64,
    /// `dm̃/dp` at `p*`.
    pub profit_user_hazard_slope: f64,
    /// `dñ/dq` at `q*`.
    pub profit_cp_hazard_slope: f64,
    /// `∂ε^λ/∂φ` along the capacity trace at `(p*, q*)`.
    pub profit_elasticity_slope: f64,
    pub welfare_user_hazard: f64,
    pub welfare_cp_hazard: f64,
    /// `∂ε^λ/∂φ` along the capacity trace at `(p°, q°)`.
    pub welfare_elasticity_slope: f64,
    /// Every optimum used, base and perturbed, is interior.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub parameter: Parameter,
    pub base_value: f64,
    /// Absolute finite-difference step.
    pub step: f64,
    pub profit_prices: PricePair,
    pub welfare_prices: PricePair,
    /// `(∂p*/∂x, ∂q*/∂x)`.
    pub profit_derivatives: (f64, f64),
    /// `(∂p°/∂x, ∂q°/∂x)`.
    pub welfare_derivatives: (f64, f64),
    pub context: SensitivityContext,
    pub predictions: Vec<Prediction>,
}

impl SensitivityReport {
    /// No judged prediction failed.
    pub fn consistent(&self) -> bool {
        self.predictions.iter().all(|p| p.verdict != Verdict::Fails)
    }

    pub fn prediction(&self, label: &str) -> Option<&Prediction> {
        self.predictions.iter().find(|p| p.label == label)
    }
}

fn sign_of(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sign_rule(label: &'static str, expected: f64, observed: f64, premise: Verdict) -> Prediction {
    let verdict = match premise {
        Verdict::Holds => {
            let sign = if expected > 0.0 {
                Sign::Positive
            } else {
                Sign::Negative
            };
            if sign.holds_for(observed) {
                Verdict::Holds
            } else {
                Verdict::Fails
            }
        }
        other => other,
    };
    Prediction {
        label,
        expected,
        observed,
        verdict,
    }
}

fn ratio_rule(label: &'static str, lhs: f64, rhs: f64, premise: Verdict) -> Prediction {
    let verdict = match premise {
        Verdict::Holds => {
            if (lhs - rhs).abs() <= RATIO_TOL * lhs.abs().max(rhs.abs()) {
                Verdict::Holds
            } else {
                Verdict::Fails
            }
        }
        other => other,
    };
    Prediction {
        label,
        expected: rhs,
        observed: lhs,
        verdict,
    }
}

/// Derivatives of `(p*, q*)` and `(p°, q°)` with respect to `parameter`
/// by central differences of re-optimized models at relative step
/// `step`, plus the predicted signs and ratios.
///
/// Capacity: both profit prices move with the sign of `∂ε^λ/∂φ`, in the
/// ratio `∂p*/∂μ · dm̃/dp = ∂q*/∂μ · dñ/dq`; the welfare prices move
/// oppositely with sign `sgn(m̃ − ñ)·sgn(∂ε^λ/∂φ)` for `p°`. Sensitivity:
/// the same ratio rule on both branches, and only when `∂ε^λ/∂φ > 0`, both
/// profit prices rise and `p°` moves with sign `sgn(m̃ − ñ)`. Demand shapes
/// get derivatives only.
pub fn optimal_price_sensitivity(
    model: &MarketModel,
    parameter: Parameter,
    step: f64,
) -> Result<SensitivityReport> {
    if parameter == Parameter::Cost {
        return Err(Error::InvalidModel(
            "price sensitivity to cost is not supported: it moves the zero-profit line".into(),
        ));
    }
    if !(step > 0.0 && step < 0.5) {
        return Err(Error::domain("relative step", step));
    }
    let x = model
        .parameter(parameter)
        .ok_or_else(|| Error::InvalidModel(format!("model has no numeric {}", parameter.name())))?;
    let h = step * x.abs().max(f64::MIN_POSITIVE);
    let plus = model.with_parameter(parameter, x + h)?;
    let minus = model.with_parameter(parameter, x - h)?;

    let jobs: [(&MarketModel, bool); 6] = [
        (model, true),
        (model, false),
        (&plus, true),
        (&plus, false),
        (&minus, true),
        (&minus, false),
    ];
    let optima: Vec<Result<OptimumReport>> = jobs
        .par_iter()
        .map(|(m, profit)| {
            if *profit {
                optimize_profit(m)
            } else {
                optimize_welfare(m)
            }
        })
        .collect();
    let mut optima = optima.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
    let (profit, welfare) = (optima.next().unwrap(), optima.next().unwrap());
    let (profit_plus, welfare_plus) = (optima.next().unwrap(), optima.next().unwrap());
    let (profit_minus, welfare_minus) = (optima.next().unwrap(), optima.next().unwrap());

    let diff = |a: &OptimumReport, b: &OptimumReport| {
        (
            (a.prices.user - b.prices.user) / (2.0 * h),
            (a.prices.cp - b.prices.cp) / (2.0 * h),
        )
    };
    let profit_derivatives = diff(&profit_plus, &profit_minus);
    let welfare_derivatives = diff(&welfare_plus, &welfare_minus);
    let interior = [
        &profit,
        &welfare,
        &profit_plus,
        &welfare_plus,
        &profit_minus,
        &welfare_minus,
    ]
    .iter()
    .all(|r| r.diagnostics.interior);

    let context = SensitivityContext {
        profit_user_hazard: profit.diagnostics.user_hazard,
        profit_cp_hazard: profit.diagnostics.cp_hazard,
        profit_user_hazard_slope: model.user_demand.hazard_slope(profit.prices.user)?,
        profit_cp_hazard_slope: model.cp_demand.hazard_slope(profit.prices.cp)?,
        profit_elasticity_slope: elasticity_slope_vs_congestion(model, profit.prices)?,
        welfare_user_hazard: welfare.diagnostics.user_hazard,
        welfare_cp_hazard: welfare.diagnostics.cp_hazard,
        welfare_elasticity_slope: elasticity_slope_vs_congestion(model, welfare.prices)?,
        interior,
    };
    let predictions = predictions(parameter, &context, profit_derivatives, welfare_derivatives);
    Ok(SensitivityReport {
        parameter,
        base_value: x,
        step: h,
        profit_prices: profit.prices,
        welfare_prices: welfare.prices,
        profit_derivatives,
        welfare_derivatives,
        context,
        predictions,
    })
}

fn predictions(
    parameter: Parameter,
    ctx: &SensitivityContext,
    (dp_star, dq_star): (f64, f64),
    (dp_circ, dq_circ): (f64, f64),
) -> Vec<Prediction> {
    let judged = |nonzero: bool| {
        if !ctx.interior || !nonzero {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        }
    };
    let profit_slope = ctx.profit_elasticity_slope;
    let welfare_slope = ctx.welfare_elasticity_slope;
    let hazard_gap = ctx.welfare_user_hazard - ctx.welfare_cp_hazard;
    let profit_premise = judged(profit_slope.abs() >= INCONCLUSIVE_TOL);
    let welfare_premise =
        judged(welfare_slope.abs() >= INCONCLUSIVE_TOL && hazard_gap.abs() >= INCONCLUSIVE_TOL);
    let ratio_lhs = dp_star * ctx.profit_user_hazard_slope;
    let ratio_rhs = dq_star * ctx.profit_cp_hazard_slope;
    let positive_branch = |premise: Verdict, slope: f64| {
        if premise == Verdict::Holds && slope < 0.0 {
            Verdict::NotApplicable
        } else {
            premise
        }
    };

    match parameter {
        Parameter::Capacity => {
            let welfare_sign = sign_of(hazard_gap) * sign_of(welfare_slope);
            vec![
                sign_rule(
                    "profit_user_price_vs_capacity",
                    sign_of(profit_slope),
                    dp_star,
                    profit_premise,
                ),
                sign_rule(
                    "profit_cp_price_vs_capacity",
                    sign_of(profit_slope),
                    dq_star,
                    profit_premise,
                ),
                ratio_rule("profit_capacity_ratio", ratio_lhs, ratio_rhs, judged(true)),
                sign_rule(
                    "welfare_user_price_vs_capacity",
                    welfare_sign,
                    dp_circ,
                    welfare_premise,
                ),
                sign_rule(
                    "welfare_cp_price_vs_capacity",
                    -welfare_sign,
                    dq_circ,
                    welfare_premise,
                ),
            ]
        }
        Parameter::Sensitivity => {
            let profit_premise = positive_branch(profit_premise, profit_slope);
            let welfare_premise = positive_branch(welfare_premise, welfare_slope);
            vec![
                sign_rule(
                    "profit_user_price_vs_sensitivity",
                    1.0,
                    dp_star,
                    profit_premise,
                ),
                sign_rule(
                    "profit_cp_price_vs_sensitivity",
                    1.0,
                    dq_star,
                    profit_premise,
                ),
                // the ratio follows from hazard equalization alone, so it is
                // judged on both branches
                ratio_rule(
                    "profit_sensitivity_ratio",
                    ratio_lhs,
                    ratio_rhs,
                    judged(true),
                ),
                sign_rule(
                    "welfare_user_price_vs_sensitivity",
                    sign_of(hazard_gap),
                    dp_circ,
                    welfare_premise,
                ),
                sign_rule(
                    "welfare_cp_price_vs_sensitivity",
                    -sign_of(hazard_gap),
                    dq_circ,
                    welfare_premise,
                ),
            ]
        }
        Parameter::Alpha | Parameter::Beta | Parameter::Cost => Vec::new(),
    }
}
