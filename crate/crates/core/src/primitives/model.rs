use crate::error::{Error, Result};

use super::{CongestionCurve, DemandCurve, DemandFamily, GainCurve};

/// Side labels for a two-sided price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePair {
    /// User-side price `p`, per unit of traffic.
    pub user: f64,
    /// CP-side price `q`, per unit of traffic.
    pub cp: f64,
}

impl PricePair {
    pub fn new(user: f64, cp: f64) -> Self {
        PricePair { user, cp }
    }

    pub fn total(&self) -> f64 {
        self.user + self.cp
    }
}

/// Scalar model parameters that experiments sweep and sensitivity
/// analysis perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    /// Capacity `μ`.
    Capacity,
    /// Users' congestion sensitivity `s`.
    Sensitivity,
    /// User-market competition `α` of the `UserPower` demand.
    Alpha,
    /// Content traffic demand `β` of the `CpPower` demand.
    Beta,
    /// Per-unit traffic cost `c`.
    Cost,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Capacity => "capacity",
            Parameter::Sensitivity => "sensitivity",
            Parameter::Alpha => "alpha",
            Parameter::Beta => "beta",
            Parameter::Cost => "cost",
        }
    }

    /// Accepts the long names and the usual symbols (`mu`, `s`, `c`).
    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "capacity" | "mu" => Some(Parameter::Capacity),
            "sensitivity" | "s" => Some(Parameter::Sensitivity),
            "alpha" => Some(Parameter::Alpha),
            "beta" => Some(Parameter::Beta),
            "cost" | "c" => Some(Parameter::Cost),
            _ => None,
        }
    }
}

/// The full system: curves plus unit cost `c`, capacity `μ` and
/// sensitivity `s`.
#[derive(Debug, Clone)]
pub struct MarketModel {
    pub gain: GainCurve,
    pub congestion: CongestionCurve,
    pub user_demand: DemandCurve,
    pub cp_demand: DemandCurve,
    pub cost: f64,
    pub capacity: f64,
    pub sensitivity: f64,
}

impl MarketModel {
    pub fn new(
        gain: GainCurve,
        congestion: CongestionCurve,
        user_demand: DemandCurve,
        cp_demand: DemandCurve,
        cost: f64,
        capacity: f64,
        sensitivity: f64,
    ) -> Result<Self> {
        let model = MarketModel {
            gain,
            congestion,
            user_demand,
            cp_demand,
            cost,
            capacity,
            sensitivity,
        };
        model.validate()?;
        Ok(model)
    }

    /// Sharing congestion, reciprocal gain, linear demands on both sides,
    /// `μ = s = 1`, `c = 0.7`.
    pub fn baseline() -> Self {
        MarketModel {
            gain: GainCurve::reciprocal(),
            congestion: CongestionCurve::capacity_sharing(),
            user_demand: DemandCurve::user_power(1.0).unwrap(),
            cp_demand: DemandCurve::cp_power(1.0).unwrap(),
            cost: 0.7,
            capacity: 1.0,
            sensitivity: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > 0.0) || !self.capacity.is_finite() {
            return Err(Error::InvalidModel(format!(
                "capacity must be positive, got {}",
                self.capacity
            )));
        }
        if !(self.sensitivity > 0.0) || !self.sensitivity.is_finite() {
            return Err(Error::InvalidModel(format!(
                "sensitivity must be positive, got {}",
                self.sensitivity
            )));
        }
        let ceiling = self.user_demand.support() + self.cp_demand.support();
        if !(self.cost >= 0.0) || self.cost >= ceiling {
            return Err(Error::InvalidModel(format!(
                "cost must lie in [0, {ceiling}), got {}",
                self.cost
            )));
        }
        Ok(())
    }

    pub fn with_gain(mut self, gain: GainCurve) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_congestion(mut self, congestion: CongestionCurve) -> Self {
        self.congestion = congestion;
        self
    }

    pub fn with_user_demand(mut self, demand: DemandCurve) -> Self {
        self.user_demand = demand;
        self
    }

    pub fn with_cp_demand(mut self, demand: DemandCurve) -> Self {
        self.cp_demand = demand;
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_capacity(mut self, capacity: f64) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn with_sensitivity(mut self, sensitivity: f64) -> Self {
        self.sensitivity = sensitivity;
        self
    }

    /// Current value of a scalar parameter; `None` for `α`/`β` when the
    /// corresponding demand is not a power family.
    pub fn parameter(&self, parameter: Parameter) -> Option<f64> {
        match parameter {
            Parameter::Capacity => Some(self.capacity),
            Parameter::Sensitivity => Some(self.sensitivity),
            Parameter::Cost => Some(self.cost),
            Parameter::Alpha => match self.user_demand.family() {
                DemandFamily::UserPower => self.user_demand.shape(),
                _ => None,
            },
            Parameter::Beta => match self.cp_demand.family() {
                DemandFamily::CpPower => self.cp_demand.shape(),
                _ => None,
            },
        }
    }

    /// Copy of the model with one parameter replaced, validated.
    pub fn with_parameter(&self, parameter: Parameter, value: f64) -> Result<Self> {
        let mut model = self.clone();
        match parameter {
            Parameter::Capacity => model.capacity = value,
            Parameter::Sensitivity => model.sensitivity = value,
            Parameter::Cost => model.cost = value,
            Parameter::Alpha => {
                if self.user_demand.family() != DemandFamily::UserPower {
                    return Err(Error::InvalidModel(
                        "alpha needs a user_power demand".into(),
                    ));
                }
                model.user_demand = DemandCurve::user_power(value)?;
            }
            Parameter::Beta => {
                if self.cp_demand.family() != DemandFamily::CpPower {
                    return Err(Error::InvalidModel("beta needs a cp_power demand".into()));
                }
                model.cp_demand = DemandCurve::cp_power(value)?;
            }
        }
        model.validate()?;
        Ok(model)
    }
}
