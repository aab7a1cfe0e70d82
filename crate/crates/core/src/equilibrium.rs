//! The congestion fixed point `φ = Φ(m·n·ρ(φ, s), μ)` and the
//! comparative statics of the solved system.
//!
//! The equilibrium is the unique zero of the gap
//! `g(φ) = Λ(φ, μ) − m·n·ρ(φ, s)`, which is increasing in `φ` because
//! supply `Λ` increases and demand `m·n·ρ` decreases with congestion.
//! [`solve_equilibrium`] brackets that zero from the zero-traffic floor
//! `Φ(0, μ)` and bisects.

use crate::error::{Error, Result};
use crate::primitives::{MarketModel, PricePair};

/// Offset above the zero-traffic floor where the gap is first evaluated.
const FLOOR_OFFSET: f64 = 1e-14;
const MAX_DOUBLINGS: usize = 200;
/// Bisection stops once the bracket is below this times `max(1, φ)`.
const BISECTION_TOL: f64 = 1e-13;
const MAX_POLISH_STEPS: usize = 4;

/// A solved congestion equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    /// Equilibrium congestion `φ`.
    pub congestion: f64,
    /// Aggregate throughput `λ = m·n·ρ(φ, s)`.
    pub throughput: f64,
    /// Elasticity of system throughput `ε^λ ∈ (0, 1]`.
    pub elasticity: f64,
    /// `|Λ(φ, μ) − m·n·ρ(φ, s)|` at the returned `φ`.
    pub gap_residual: f64,
    /// Gap evaluations spent by the solver.
    pub iterations: usize,
    /// User population `m`.
    pub user_demand: f64,
    /// Desirable throughput per user `n`.
    pub cp_demand: f64,
    /// Prices the demands came from, when solved from prices.
    pub prices: Option<PricePair>,
    pub capacity: f64,
    pub sensitivity: f64,
    /// Set when either demand is zero: no traffic, floor congestion.
    pub degenerate: bool,
}

/// Solves the equilibrium at prices `(p, q)`.
///
/// Zero demand on either side is not an error: the result is the
/// degenerate equilibrium at the zero-traffic floor with `λ = 0`.
pub fn solve_equilibrium(model: &MarketModel, prices: PricePair) -> Result<Equilibrium> {
    let m = model.user_demand.value(prices.user)?;
    let n = model.cp_demand.value(prices.cp)?;
    let mut eq = solve_for_demands(model, m, n)?;
    eq.prices = Some(prices);
    Ok(eq)
}

/// Solves the equilibrium of the physical system `(m, n, μ)` directly.
pub fn solve_for_demands(model: &MarketModel, m: f64, n: f64) -> Result<Equilibrium> {
    let mu = model.capacity;
    let s = model.sensitivity;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::domain("capacity", mu));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain("sensitivity", s));
    }
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::domain("user demand", m));
    }
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::domain("cp demand", n));
    }

    let floor = model.congestion.floor(mu);
    let demand = m * n;
    if demand == 0.0 {
        return Ok(Equilibrium {
            congestion: floor,
            throughput: 0.0,
            elasticity: 1.0,
            gap_residual: 0.0,
            iterations: 0,
            user_demand: m,
            cp_demand: n,
            prices: None,
            capacity: mu,
            sensitivity: s,
            degenerate: true,
        });
    }

    let gap =
        |phi: f64| model.congestion.eval_throughput(phi, mu) - demand * model.gain.eval(phi, s);
    let mut iterations = 0usize;

    let mut lo = floor + FLOOR_OFFSET;
    let mut hi = (lo * 2.0).max(1.0);
    let mut g_hi = gap(hi);
    iterations += 1;
    let mut doublings = 0;
    while !(g_hi > 0.0) {
        if doublings == MAX_DOUBLINGS || g_hi.is_nan() {
            return Err(Error::Bracket {
                phi_hi: hi,
                gap: g_hi,
                doublings,
            });
        }
        lo = hi;
        hi *= 2.0;
        g_hi = gap(hi);
        iterations += 1;
        doublings += 1;
    }

    while hi - lo > BISECTION_TOL * lo.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if gap(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // Newton polish inside the final bracket: makes φ a smooth function of
    // the inputs down to rounding, which the optimizers and finite
    // differences downstream rely on.
    let mut phi = 0.5 * (lo + hi);
    let mut g = gap(phi);
    iterations += 1;
    for _ in 0..MAX_POLISH_STEPS {
        if g == 0.0 {
            break;
        }
        let dg = model.congestion.eval_throughput_slope(phi, mu)
            - demand * model.gain.eval_slope(phi, s);
        if !(dg > 0.0) {
            break;
        }
        let next = phi - g / dg;
        if !(next >= lo && next <= hi) {
            break;
        }
        let g_next = gap(next);
        iterations += 1;
        if !(g_next.abs() < g.abs()) {
            break;
        }
        phi = next;
        g = g_next;
    }

    let throughput = demand * model.gain.eval(phi, s);
    let mut eq = Equilibrium {
        congestion: phi,
        throughput,
        elasticity: 0.0,
        gap_residual: g.abs(),
        iterations,
        user_demand: m,
        cp_demand: n,
        prices: None,
        capacity: mu,
        sensitivity: s,
        degenerate: false,
    };
    eq.elasticity = throughput_elasticity(model, &eq);
    Ok(eq)
}

/// `ε^λ = (1 + m·n·|∂ρ/∂φ| / (∂Λ/∂φ))⁻¹` at the solved congestion.
pub fn throughput_elasticity(model: &MarketModel, eq: &Equilibrium) -> f64 {
    let demand = eq.user_demand * eq.cp_demand;
    if demand == 0.0 {
        return 1.0;
    }
    let supply_slope = model
        .congestion
        .eval_throughput_slope(eq.congestion, eq.capacity);
    let demand_slope = demand * model.gain.eval_slope(eq.congestion, eq.sensitivity).abs();
    1.0 / (1.0 + demand_slope / supply_slope)
}

/// `∂g/∂φ = ∂Λ/∂φ − m·n·∂ρ/∂φ` at the solved congestion.
pub fn gap_slope(model: &MarketModel, eq: &Equilibrium) -> f64 {
    let demand = eq.user_demand * eq.cp_demand;
    model
        .congestion
        .eval_throughput_slope(eq.congestion, eq.capacity)
        - demand * model.gain.eval_slope(eq.congestion, eq.sensitivity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn holds_for(self, value: f64) -> bool {
        match self {
            Sign::Positive => value > 0.0,
            Sign::Negative => value < 0.0,
        }
    }
}

/// Derivatives of the equilibrium congestion and throughput with respect
/// to the demands, the capacity and the prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparativeStatics {
    pub equilibrium: Equilibrium,
    pub dphi_dm: f64,
    pub dlambda_dm: f64,
    pub dphi_dn: f64,
    pub dlambda_dn: f64,
    pub dphi_dmu: f64,
    pub dlambda_dmu: f64,
    pub dphi_dp: f64,
    pub dlambda_dp: f64,
    pub dphi_dq: f64,
    pub dlambda_dq: f64,
}

impl ComparativeStatics {
    /// Every entry with the sign the model predicts for it.
    pub fn entries(&self) -> [(&'static str, f64, Sign); 10] {
        use Sign::*;
        [
            ("dphi_dm", self.dphi_dm, Positive),
            ("dlambda_dm", self.dlambda_dm, Positive),
            ("dphi_dn", self.dphi_dn, Positive),
            ("dlambda_dn", self.dlambda_dn, Positive),
            ("dphi_dmu", self.dphi_dmu, Negative),
            ("dlambda_dmu", self.dlambda_dmu, Positive),
            ("dphi_dp", self.dphi_dp, Negative),
            ("dlambda_dp", self.dlambda_dp, Negative),
            ("dphi_dq", self.dphi_dq, Negative),
            ("dlambda_dq", self.dlambda_dq, Negative),
        ]
    }

    pub fn signs_hold(&self) -> bool {
        self.entries().iter().all(|(_, v, sign)| sign.holds_for(*v))
    }

    /// `ε^λ_m = (∂λ/∂m)·m/λ`.
    pub fn user_elasticity(&self) -> f64 {
        (self.dlambda_dm * self.equilibrium.user_demand / self.equilibrium.throughput).abs()
    }

    /// `ε^λ_n = (∂λ/∂n)·n/λ`.
    pub fn cp_elasticity(&self) -> f64 {
        (self.dlambda_dn * self.equilibrium.cp_demand / self.equilibrium.throughput).abs()
    }
}

/// Closed-form comparative statics at interior prices.
pub fn comparative_statics(model: &MarketModel, prices: PricePair) -> Result<ComparativeStatics> {
    let eq = solve_equilibrium(model, prices)?;
    if eq.degenerate {
        return Err(Error::domain(
            "price (zero demand, statics undefined)",
            prices.user,
        ));
    }
    let m_hazard = model.user_demand.hazard(prices.user)?;
    let n_hazard = model.cp_demand.hazard(prices.cp)?;
    let (m, n, lambda) = (eq.user_demand, eq.cp_demand, eq.throughput);
    let dg = gap_slope(model, &eq);
    let supply_slope = model
        .congestion
        .eval_throughput_slope(eq.congestion, eq.capacity);
    let capacity_slope = model
        .congestion
        .eval_capacity_slope(eq.congestion, eq.capacity);
    let gain_slope = model.gain.eval_slope(eq.congestion, eq.sensitivity);

    let dphi_dm = lambda / (m * dg);
    let dphi_dn = lambda / (n * dg);
    let dphi_dmu = -capacity_slope / dg;
    let dphi_dp = -lambda * m_hazard / dg;
    let dphi_dq = -lambda * n_hazard / dg;
    Ok(ComparativeStatics {
        dlambda_dm: supply_slope * dphi_dm,
        dlambda_dn: supply_slope * dphi_dn,
        dlambda_dmu: m * n * gain_slope * dphi_dmu,
        dlambda_dp: supply_slope * dphi_dp,
        dlambda_dq: supply_slope * dphi_dq,
        dphi_dm,
        dphi_dn,
        dphi_dmu,
        dphi_dp,
        dphi_dq,
        equilibrium: eq,
    })
}
