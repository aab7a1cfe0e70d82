//! Congestion curves `Φ(λ, μ)` and their inverse in throughput,
//! the implied throughput `Λ(φ, μ)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type CurveFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CongestionFamily {
    /// `Φ = λ/μ`
    CapacitySharing,
    /// `Φ = 1/(μ − λ)`
    MM1,
    Custom,
}

#[derive(Clone)]
enum Kind {
    CapacitySharing,
    MM1,
    Custom {
        name: String,
        congestion: CurveFn,
        throughput: CurveFn,
    },
}

#[derive(Clone)]
pub struct CongestionCurve {
    kind: Kind,
}

const CUSTOM_STEP: f64 = 1e-6;

impl CongestionCurve {
    pub fn capacity_sharing() -> Self {
        CongestionCurve {
            kind: Kind::CapacitySharing,
        }
    }

    pub fn mm1() -> Self {
        CongestionCurve { kind: Kind::MM1 }
    }

    /// A custom pair of mutually inverse maps: `congestion(λ, μ) = φ` and
    /// `throughput(φ, μ) = λ`. Partial derivatives of the implied
    /// throughput are finite-differenced.
    pub fn custom<F, G>(name: impl Into<String>, congestion: F, throughput: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        CongestionCurve {
            kind: Kind::Custom {
                name: name.into(),
                congestion: Arc::new(congestion),
                throughput: Arc::new(throughput),
            },
        }
    }

    pub fn family(&self) -> CongestionFamily {
        match self.kind {
            Kind::CapacitySharing => CongestionFamily::CapacitySharing,
            Kind::MM1 => CongestionFamily::MM1,
            Kind::Custom { .. } => CongestionFamily::Custom,
        }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            Kind::CapacitySharing => "sharing",
            Kind::MM1 => "mm1",
            Kind::Custom { name, .. } => name,
        }
    }

    fn check_capacity(mu: f64) -> Result<()> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::domain("capacity", mu));
        }
        Ok(())
    }

    /// `Φ(λ, μ)`.
    pub fn congestion_of(&self, lambda: f64, mu: f64) -> Result<f64> {
        Self::check_capacity(mu)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::domain("throughput", lambda));
        }
        match &self.kind {
            Kind::CapacitySharing => Ok(lambda / mu),
            Kind::MM1 => {
                if lambda >= mu {
                    return Err(Error::domain("throughput (must be below capacity)", lambda));
                }
                Ok(1.0 / (mu - lambda))
            }
            Kind::Custom { congestion, .. } => Ok(congestion(lambda, mu)),
        }
    }

    /// `Λ(φ, μ)`, defined for `φ ≥ Φ(0, μ)`.
    pub fn implied_throughput(&self, phi: f64, mu: f64) -> Result<f64> {
        Self::check_capacity(mu)?;
        let floor = self.floor(mu);
        if !(phi >= floor) || !phi.is_finite() {
            return Err(Error::domain("congestion (below zero-traffic floor)", phi));
        }
        Ok(self.eval_throughput(phi, mu))
    }

    /// Zero-traffic congestion `Φ(0, μ)`.
    pub fn zero_traffic_congestion(&self, mu: f64) -> Result<f64> {
        Self::check_capacity(mu)?;
        Ok(self.floor(mu))
    }

    /// `∂Λ/∂φ`.
    pub fn throughput_slope(&self, phi: f64, mu: f64) -> Result<f64> {
        self.implied_throughput(phi, mu)?;
        Ok(self.eval_throughput_slope(phi, mu))
    }

    /// `∂Λ/∂μ`.
    pub fn capacity_slope(&self, phi: f64, mu: f64) -> Result<f64> {
        self.implied_throughput(phi, mu)?;
        Ok(self.eval_capacity_slope(phi, mu))
    }

    /// `∂²Λ/∂φ∂μ`: 1 for sharing, 0 for M/M/1.
    pub fn cross_slope(&self, phi: f64, mu: f64) -> Result<f64> {
        self.implied_throughput(phi, mu)?;
        Ok(match &self.kind {
            Kind::CapacitySharing => 1.0,
            Kind::MM1 => 0.0,
            Kind::Custom { .. } => {
                let h = CUSTOM_STEP * mu.max(1.0);
                (self.eval_throughput_slope(phi, mu + h) - self.eval_throughput_slope(phi, mu - h))
                    / (2.0 * h)
            }
        })
    }

    pub(crate) fn floor(&self, mu: f64) -> f64 {
        match &self.kind {
            Kind::CapacitySharing => 0.0,
            Kind::MM1 => 1.0 / mu,
            Kind::Custom { congestion, .. } => congestion(0.0, mu),
        }
    }

    pub(crate) fn eval_throughput(&self, phi: f64, mu: f64) -> f64 {
        match &self.kind {
            Kind::CapacitySharing => phi * mu,
            Kind::MM1 => mu - 1.0 / phi,
            Kind::Custom { throughput, .. } => throughput(phi, mu),
        }
    }

    pub(crate) fn eval_throughput_slope(&self, phi: f64, mu: f64) -> f64 {
        match &self.kind {
            Kind::CapacitySharing => mu,
            Kind::MM1 => 1.0 / (phi * phi),
            Kind::Custom { throughput, .. } => {
                let h = CUSTOM_STEP * phi.abs().max(1.0);
                let floor = self.floor(mu);
                if phi - h >= floor {
                    (throughput(phi + h, mu) - throughput(phi - h, mu)) / (2.0 * h)
                } else {
                    (throughput(phi + h, mu) - throughput(phi, mu)) / h
                }
            }
        }
    }

    pub(crate) fn eval_capacity_slope(&self, phi: f64, mu: f64) -> f64 {
        match &self.kind {
            Kind::CapacitySharing => phi,
            Kind::MM1 => 1.0,
            Kind::Custom { throughput, .. } => {
                let h = CUSTOM_STEP * mu.max(1.0);
                (throughput(phi, mu + h) - throughput(phi, mu - h)) / (2.0 * h)
            }
        }
    }
}

impl fmt::Debug for CongestionCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("CongestionCurve")
            .field(&self.name())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharing_round_trip() {
        let c = CongestionCurve::capacity_sharing();
        assert_eq!(c.congestion_of(0.5, 0.5).unwrap(), 1.0);
        assert_eq!(c.implied_throughput(1.0, 0.5).unwrap(), 0.5);
        assert_eq!(c.congestion_of(0.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn mm1_values() {
        let c = CongestionCurve::mm1();
        let lambda = 2.0 - 2f64.sqrt();
        let phi = c.congestion_of(lambda, 2.0).unwrap();
        assert!((phi - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.congestion_of(0.0, 2.0).unwrap(), 0.5);
        assert_eq!(c.zero_traffic_congestion(4.0).unwrap(), 0.25);
    }

    #[test]
    fn mm1_domain() {
        let c = CongestionCurve::mm1();
        assert!(matches!(
            c.congestion_of(2.0, 2.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            c.implied_throughput(0.4, 2.0),
            Err(Error::Domain { .. })
        ));
        assert!(c.congestion_of(1.0, 0.0).is_err());
    }

    #[test]
    fn slopes() {
        let s = CongestionCurve::capacity_sharing();
        assert_eq!(s.throughput_slope(2.0, 3.0).unwrap(), 3.0);
        assert_eq!(s.capacity_slope(2.0, 3.0).unwrap(), 2.0);
        assert_eq!(s.cross_slope(2.0, 3.0).unwrap(), 1.0);
        let m = CongestionCurve::mm1();
        assert_eq!(m.throughput_slope(2.0, 3.0).unwrap(), 0.25);
        assert_eq!(m.capacity_slope(2.0, 3.0).unwrap(), 1.0);
        assert_eq!(m.cross_slope(2.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn custom_matches_sharing() {
        let c = CongestionCurve::custom("lin", |l, m| l / m, |p, m| p * m);
        assert!((c.throughput_slope(2.0, 3.0).unwrap() - 3.0).abs() < 1e-8);
        assert!((c.capacity_slope(2.0, 3.0).unwrap() - 2.0).abs() < 1e-8);
        assert!((c.cross_slope(2.0, 3.0).unwrap() - 1.0).abs() < 1e-4);
    }
}
