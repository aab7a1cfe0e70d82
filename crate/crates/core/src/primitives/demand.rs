//! Demand curves for the two market sides: user population `m(p)` and the
//! CP-side desirable throughput `n(q)`, with their hazard rates and
//! surplus integrals.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

type DemandFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandFamily {
    /// `m(p) = 1 − p^(1/α)`
    UserPower,
    /// `n(q) = 1 − q^β`
    CpPower,
    Custom,
}

#[derive(Clone)]
enum Kind {
    /// `1 − x^k`; `k = 1/α` on the user side, `k = β` on the CP side.
    Power { family: DemandFamily, shape: f64 },
    Custom {
        name: String,
        value: DemandFn,
        slope: Option<DemandFn>,
        surplus: Option<DemandFn>,
    },
}

/// A decreasing demand curve on the price support `[0, v_max]`.
#[derive(Clone)]
pub struct DemandCurve {
    kind: Kind,
    support: f64,
}

/// Absolute tolerance of the surplus quadrature for custom curves.
pub const SURPLUS_QUADRATURE_TOL: f64 = 1e-10;
/// Recursion cap of the surplus quadrature.
pub const SURPLUS_QUADRATURE_DEPTH: u32 = 50;

const CUSTOM_SLOPE_STEP: f64 = 1e-6;
const HAZARD_SLOPE_STEP: f64 = 1e-4;

impl DemandCurve {
    /// `m(p, α) = 1 − p^(1/α)` on `[0, 1]`.
    pub fn user_power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain("alpha", alpha));
        }
        Ok(DemandCurve {
            kind: Kind::Power {
                family: DemandFamily::UserPower,
                shape: alpha,
            },
            support: 1.0,
        })
    }

    /// `n(q, β) = 1 − q^β` on `[0, 1]`.
    pub fn cp_power(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::domain("beta", beta));
        }
        Ok(DemandCurve {
            kind: Kind::Power {
                family: DemandFamily::CpPower,
                shape: beta,
            },
            support: 1.0,
        })
    }

    /// A user-supplied demand on `[0, support]`. It must be positive and
    /// decreasing on `[0, support)` and vanish at `support`. Slope and
    /// surplus are derived numerically unless supplied with
    /// [`with_slope`](Self::with_slope) / [`with_surplus`](Self::with_surplus).
    pub fn custom<F>(name: impl Into<String>, support: f64, value: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support > 0.0) || !support.is_finite() {
            return Err(Error::domain("demand support", support));
        }
        Ok(DemandCurve {
            kind: Kind::Custom {
                name: name.into(),
                value: Arc::new(value),
                slope: None,
                surplus: None,
            },
            support,
        })
    }

    pub fn with_slope<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Kind::Custom { slope, .. } = &mut self.kind {
            *slope = Some(Arc::new(f));
        }
        self
    }

    pub fn with_surplus<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Kind::Custom { surplus, .. } = &mut self.kind {
            *surplus = Some(Arc::new(f));
        }
        self
    }

    /// `(1 − x)^k` on `[0, 1]` with closed-form slope and surplus.
    pub fn complement_power(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::domain("complement power exponent", k));
        }
        Ok(
            Self::custom(format!("complement_power({k})"), 1.0, move |x| {
                (1.0 - x).powf(k)
            })?
            .with_slope(move |x| -k * (1.0 - x).powf(k - 1.0))
            .with_surplus(move |x| (1.0 - x).powf(k + 1.0) / (k + 1.0)),
        )
    }

    pub fn family(&self) -> DemandFamily {
        match self.kind {
            Kind::Power { family, .. } => family,
            Kind::Custom { .. } => DemandFamily::Custom,
        }
    }

    /// `α` for the user family, `β` for the CP family.
    pub fn shape(&self) -> Option<f64> {
        match self.kind {
            Kind::Power { shape, .. } => Some(shape),
            Kind::Custom { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Power {
                family: DemandFamily::UserPower,
                shape,
            } => format!("user_power(alpha={shape})"),
            Kind::Power { shape, .. } => format!("cp_power(beta={shape})"),
            Kind::Custom { name, .. } => name.clone(),
        }
    }

    /// Upper end of the price support, where demand reaches zero.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// Largest price any search visits: demand hazards diverge at the
    /// support bound.
    pub fn search_upper(&self) -> f64 {
        self.support * (1.0 - 1e-9)
    }

    fn exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Power {
                family: DemandFamily::UserPower,
                shape,
            } => Some(1.0 / shape),
            Kind::Power { shape, .. } => Some(shape),
            Kind::Custom { .. } => None,
        }
    }

    fn check_closed(&self, x: f64) -> Result<()> {
        if !(x >= 0.0) || x > self.support || !x.is_finite() {
            return Err(Error::domain("price", x));
        }
        Ok(())
    }

    fn check_open(&self, x: f64) -> Result<()> {
        if !(x >= 0.0) || x >= self.support || !x.is_finite() {
            return Err(Error::domain(
                "price (demand vanishes at the support bound)",
                x,
            ));
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.check_closed(x)?;
        Ok(self.eval(x))
    }

    /// `d value / dx`. Infinite at `x = 0` for power curves with exponent
    /// below one.
    pub fn slope(&self, x: f64) -> Result<f64> {
        self.check_closed(x)?;
        Ok(self.eval_slope(x))
    }

    /// Hazard rate `−value'(x) / value(x)`.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        self.check_open(x)?;
        Ok(self.eval_hazard(x))
    }

    /// `d hazard / dx`; analytic for the power families.
    pub fn hazard_slope(&self, x: f64) -> Result<f64> {
        self.check_open(x)?;
        Ok(self.eval_hazard_slope(x))
    }

    /// Surplus `S(x) = ∫ₓ^{v_max} value(t) dt`.
    pub fn surplus(&self, x: f64) -> Result<f64> {
        self.check_closed(x)?;
        Ok(self.eval_surplus(x))
    }

    /// Per-unit surplus `S(x) / value(x)`.
    pub fn per_unit_surplus(&self, x: f64) -> Result<f64> {
        self.check_open(x)?;
        Ok(self.eval_surplus(x) / self.eval(x))
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        if x >= self.support {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { .. } => {
                let k = self.exponent().unwrap();
                1.0 - x.powf(k)
            }
            Kind::Custom { value, .. } => value(x),
        }
    }

    pub(crate) fn eval_slope(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Power { .. } => {
                let k = self.exponent().unwrap();
                if x == 0.0 {
                    return if k < 1.0 {
                        f64::NEG_INFINITY
                    } else if k == 1.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
                -k * x.powf(k - 1.0)
            }
            Kind::Custom {
                slope: Some(slope), ..
            } => slope(x),
            Kind::Custom { value, .. } => {
                let h = CUSTOM_SLOPE_STEP * x.abs().max(self.support);
                let lo = (x - h).max(0.0);
                let hi = (x + h).min(self.support);
                (value(hi) - value(lo)) / (hi - lo)
            }
        }
    }

    pub(crate) fn eval_hazard(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Power { .. } => {
                let k = self.exponent().unwrap();
                if x == 0.0 {
                    return -self.eval_slope(0.0);
                }
                let u = x.powf(k);
                k * u / (x * (1.0 - u))
            }
            Kind::Custom { .. } => -self.eval_slope(x) / self.eval(x),
        }
    }

    pub(crate) fn eval_hazard_slope(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Power { .. } => {
                let k = self.exponent().unwrap();
                let u = x.powf(k);
                let d = 1.0 - u;
                // d/dx [k x^(k-1) / (1 - x^k)]
                k * ((k - 1.0) * x.powf(k - 2.0) * d + k * u * u / (x * x)) / (d * d)
            }
            Kind::Custom { .. } => {
                let h = HAZARD_SLOPE_STEP * self.support;
                let lo = (x - h).max(0.0);
                let hi = (x + h).min(self.search_upper());
                (self.eval_hazard(hi) - self.eval_hazard(lo)) / (hi - lo)
            }
        }
    }

    pub(crate) fn eval_surplus(&self, x: f64) -> f64 {
        if x >= self.support {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { .. } => {
                let k = self.exponent().unwrap();
                (1.0 - x) - (1.0 - x.powf(k + 1.0)) / (k + 1.0)
            }
            Kind::Custom {
                surplus: Some(surplus),
                ..
            } => surplus(x),
            Kind::Custom { value, .. } => adaptive_simpson(
                |t| value(t),
                x,
                self.support,
                SURPLUS_QUADRATURE_TOL,
                SURPLUS_QUADRATURE_DEPTH,
            ),
        }
    }
}

impl fmt::Debug for DemandCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DemandCurve")
            .field("name", &self.name())
            .field("support", &self.support)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn linear_user_demand() {
        let m = DemandCurve::user_power(1.0).unwrap();
        assert!(close(m.value(0.3).unwrap(), 0.7, 1e-15));
        assert!(close(m.hazard(0.3).unwrap(), 1.0 / 0.7, 1e-14));
        assert!(close(m.surplus(0.3).unwrap(), 0.245, 1e-15));
        assert!(close(m.per_unit_surplus(0.3).unwrap(), 0.35, 1e-15));
        assert!(close(m.hazard(0.0).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn quadratic_cp_demand() {
        let n = DemandCurve::cp_power(2.0).unwrap();
        assert!(close(n.value(0.5).unwrap(), 0.75, 1e-15));
        assert!(close(n.hazard(0.5).unwrap(), 4.0 / 3.0, 1e-14));
        // hazard slope against the quotient rule by hand: h = 2q/(1-q^2)
        let q = 0.5;
        let exact = (2.0 * (1.0 - q * q) + 4.0 * q * q) / ((1.0 - q * q) * (1.0 - q * q));
        assert!(close(n.hazard_slope(q).unwrap(), exact, 1e-12));
    }

    #[test]
    fn user_power_closed_surplus() {
        // S_m(p) = (1−p) − (α/(α+1))(1 − p^((α+1)/α))
        let alpha: f64 = 2.0;
        let m = DemandCurve::user_power(alpha).unwrap();
        let p: f64 = 0.4;
        let expected = (1.0 - p) - alpha / (alpha + 1.0) * (1.0 - p.powf((alpha + 1.0) / alpha));
        assert!(close(m.surplus(p).unwrap(), expected, 1e-15));
    }

    #[test]
    fn zero_at_support() {
        let m = DemandCurve::user_power(1.5).unwrap();
        assert_eq!(m.value(1.0).unwrap(), 0.0);
        assert_eq!(m.surplus(1.0).unwrap(), 0.0);
        assert!(matches!(m.hazard(1.0), Err(Error::Domain { .. })));
        assert!(matches!(m.per_unit_surplus(1.0), Err(Error::Domain { .. })));
        assert!(m.value(1.2).is_err());
        assert!(m.value(-0.1).is_err());
    }

    #[test]
    fn convex_user_demand_has_infinite_hazard_at_zero() {
        let m = DemandCurve::user_power(2.0).unwrap();
        assert!(m.hazard(0.0).unwrap().is_infinite());
        assert!(close(m.slope(0.25).unwrap(), -1.0, 1e-15));
    }

    #[test]
    fn custom_quadrature_surplus() {
        let n = DemandCurve::custom("sq", 1.0, |x| (1.0 - x) * (1.0 - x)).unwrap();
        for &q in &[0.0f64, 0.2, 0.7, 0.999] {
            let exact = (1.0 - q).powi(3) / 3.0;
            assert!(close(n.surplus(q).unwrap(), exact, 1e-10), "{q}");
            assert!(close(
                n.hazard(q).unwrap(),
                2.0 / (1.0 - q),
                1e-6 * 2.0 / (1.0 - q)
            ));
        }
    }

    #[test]
    fn complement_power_matches_numeric_custom() {
        let exact = DemandCurve::complement_power(2.0).unwrap();
        let numeric = DemandCurve::custom("sq", 1.0, |x| (1.0 - x) * (1.0 - x)).unwrap();
        for &q in &[0.1, 0.5, 0.9] {
            assert!(close(
                exact.surplus(q).unwrap(),
                numeric.surplus(q).unwrap(),
                1e-10
            ));
            let (a, b) = (
                exact.hazard_slope(q).unwrap(),
                numeric.hazard_slope(q).unwrap(),
            );
            assert!(close(a, b, 1e-4 * a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_shape() {
        assert!(DemandCurve::user_power(0.0).is_err());
        assert!(DemandCurve::cp_power(-1.0).is_err());
        assert!(DemandCurve::custom("x", 0.0, |x| 1.0 - x).is_err());
    }
}
