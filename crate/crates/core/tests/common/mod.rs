//! Random models and closed-form reference formulas shared by the
//! integration tests. Nothing here calls the library's own curve code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twosided::{CongestionCurve, DemandCurve, GainCurve, MarketModel, PricePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gain {
    Reciprocal,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Congestion {
    Sharing,
    Mm1,
}

/// A builtin-family model plus prices, with its parameters kept so the
/// reference formulas can be evaluated independently.
#[derive(Debug, Clone)]
pub struct Case {
    pub gain: Gain,
    pub congestion: Congestion,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub s: f64,
    pub cost: f64,
    pub p: f64,
    pub q: f64,
}

impl Case {
    pub fn model(&self) -> MarketModel {
        MarketModel::baseline()
            .with_gain(match self.gain {
                Gain::Reciprocal => GainCurve::reciprocal(),
                Gain::Exponential => GainCurve::exponential(),
            })
            .with_congestion(match self.congestion {
                Congestion::Sharing => CongestionCurve::capacity_sharing(),
                Congestion::Mm1 => CongestionCurve::mm1(),
            })
            .with_user_demand(DemandCurve::user_power(self.alpha).unwrap())
            .with_cp_demand(DemandCurve::cp_power(self.beta).unwrap())
            .with_cost(self.cost)
            .with_capacity(self.mu)
            .with_sensitivity(self.s)
    }

    pub fn prices(&self) -> PricePair {
        PricePair::new(self.p, self.q)
    }

    pub fn m(&self) -> f64 {
        1.0 - self.p.powf(1.0 / self.alpha)
    }

    pub fn n(&self) -> f64 {
        1.0 - self.q.powf(self.beta)
    }

    pub fn rho(&self, phi: f64) -> f64 {
        rho(self.gain, phi, self.s)
    }

    pub fn rho_slope(&self, phi: f64) -> f64 {
        rho_slope(self.gain, phi, self.s)
    }

    /// `∂Λ/∂φ`.
    pub fn supply_slope(&self, phi: f64) -> f64 {
        match self.congestion {
            Congestion::Sharing => self.mu,
            Congestion::Mm1 => 1.0 / (phi * phi),
        }
    }

    pub fn supply(&self, phi: f64) -> f64 {
        match self.congestion {
            Congestion::Sharing => phi * self.mu,
            Congestion::Mm1 => self.mu - 1.0 / phi,
        }
    }

    /// `m̃ = −m'/m` for `m = 1 − p^(1/α)`.
    pub fn user_hazard(&self) -> f64 {
        user_hazard(self.alpha, self.p)
    }

    pub fn cp_hazard(&self) -> f64 {
        cp_hazard(self.beta, self.q)
    }
}

pub fn rho(gain: Gain, phi: f64, s: f64) -> f64 {
    match gain {
        Gain::Reciprocal => 1.0 / (s * phi + 1.0),
        Gain::Exponential => (s + 1.0).powf(-phi),
    }
}

pub fn rho_slope(gain: Gain, phi: f64, s: f64) -> f64 {
    match gain {
        Gain::Reciprocal => -s / ((s * phi + 1.0) * (s * phi + 1.0)),
        Gain::Exponential => -(s + 1.0).ln() * (s + 1.0).powf(-phi),
    }
}

pub fn user_hazard(alpha: f64, p: f64) -> f64 {
    let k = 1.0 / alpha;
    k * p.powf(k - 1.0) / (1.0 - p.powf(k))
}

pub fn cp_hazard(beta: f64, q: f64) -> f64 {
    beta * q.powf(beta - 1.0) / (1.0 - q.powf(beta))
}

/// `∫_x^1 (1 − t^k) dt`.
pub fn power_surplus(k: f64, x: f64) -> f64 {
    (1.0 - x) - (1.0 - x.powf(k + 1.0)) / (k + 1.0)
}

/// Per-unit surplus `S/m` for `1 − x^k`.
pub fn per_unit_surplus(k: f64, x: f64) -> f64 {
    power_surplus(k, x) / (1.0 - x.powf(k))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random builtin model with prices inside `[lo, hi]` of the unit
/// supports.
pub fn random_case(rng: &mut impl Rng, lo: f64, hi: f64) -> Case {
    Case {
        gain: if rng.gen_bool(0.5) {
            Gain::Reciprocal
        } else {
            Gain::Exponential
        },
        congestion: if rng.gen_bool(0.5) {
            Congestion::Sharing
        } else {
            Congestion::Mm1
        },
        alpha: rng.gen_range(0.5..3.0),
        beta: rng.gen_range(0.5..3.0),
        mu: rng.gen_range(0.3..10.0),
        s: rng.gen_range(0.1..5.0),
        cost: rng.gen_range(0.0..1.0),
        p: rng.gen_range(lo..hi),
        q: rng.gen_range(lo..hi),
    }
}

pub fn random_cases(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<Case> {
    let mut r = rng(seed);
    (0..count).map(|_| random_case(&mut r, lo, hi)).collect()
}

/// Central difference at relative step `1e-5·max(1, |x|)`, written out
/// here rather than borrowed from the library.
pub fn central<F: FnMut(f64) -> f64>(mut f: F, x: f64) -> f64 {
    let h = 1e-5 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn rel_err(got: f64, want: f64, floor: f64) -> f64 {
    (got - want).abs() / want.abs().max(floor)
}
