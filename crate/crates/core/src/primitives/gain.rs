//! Throughput gain curves `ρ(φ, s)`: the fraction of desirable throughput
//! that survives congestion `φ` for users of sensitivity `s`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type GainFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainFamily {
    /// `1 / (sφ + 1)`
    Reciprocal,
    /// `(s + 1)^(-φ)`
    Exponential,
    Custom,
}

#[derive(Clone)]
enum Kind {
    Reciprocal,
    Exponential,
    Custom {
        name: String,
        value: GainFn,
        slope: Option<GainFn>,
    },
}

/// A gain curve. Immutable and cheap to clone.
#[derive(Clone)]
pub struct GainCurve {
    kind: Kind,
}

/// Relative step for finite-difference slopes of custom curves.
pub(crate) const CUSTOM_SLOPE_STEP: f64 = 1e-6;

impl GainCurve {
    pub fn reciprocal() -> Self {
        GainCurve {
            kind: Kind::Reciprocal,
        }
    }

    pub fn exponential() -> Self {
        GainCurve {
            kind: Kind::Exponential,
        }
    }

    /// A user-supplied gain `value(φ, s)`. The slope is finite-differenced.
    pub fn custom<F>(name: impl Into<String>, value: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        GainCurve {
            kind: Kind::Custom {
                name: name.into(),
                value: Arc::new(value),
                slope: None,
            },
        }
    }

    /// A user-supplied gain with an analytic `dρ/dφ`.
    pub fn custom_with_slope<F, G>(name: impl Into<String>, value: F, slope: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        GainCurve {
            kind: Kind::Custom {
                name: name.into(),
                value: Arc::new(value),
                slope: Some(Arc::new(slope)),
            },
        }
    }

    /// `ρ(φ, s) = (w·e^(−aφ) + (1 − w)·e^(−bφ))^s` with `a < b`: a fast
    /// early drop that flattens out, so the congestion elasticity of the
    /// gain falls over part of its range. Convex like the gain of
    /// streaming video, with an analytic slope.
    pub fn video_like(weight: f64, slow: f64, fast: f64) -> Result<Self> {
        if !(weight > 0.0 && weight < 1.0) {
            return Err(Error::domain("video gain weight", weight));
        }
        if !(slow > 0.0 && slow.is_finite()) {
            return Err(Error::domain("video gain slow rate", slow));
        }
        if !(fast > slow && fast.is_finite()) {
            return Err(Error::domain("video gain fast rate", fast));
        }
        let base =
            move |phi: f64| weight * (-slow * phi).exp() + (1.0 - weight) * (-fast * phi).exp();
        let base_slope = move |phi: f64| {
            -weight * slow * (-slow * phi).exp() - (1.0 - weight) * fast * (-fast * phi).exp()
        };
        Ok(Self::custom_with_slope(
            "video",
            move |phi, s| base(phi).powf(s),
            move |phi, s| s * base(phi).powf(s - 1.0) * base_slope(phi),
        ))
    }

    pub fn family(&self) -> GainFamily {
        match self.kind {
            Kind::Reciprocal => GainFamily::Reciprocal,
            Kind::Exponential => GainFamily::Exponential,
            Kind::Custom { .. } => GainFamily::Custom,
        }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            Kind::Reciprocal => "reciprocal",
            Kind::Exponential => "exponential",
            Kind::Custom { name, .. } => name,
        }
    }

    fn check(phi: f64, s: f64) -> Result<()> {
        if !(phi >= 0.0) || !phi.is_finite() {
            return Err(Error::domain("congestion", phi));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::domain("sensitivity", s));
        }
        Ok(())
    }

    /// `ρ(φ, s)`.
    pub fn value(&self, phi: f64, s: f64) -> Result<f64> {
        Self::check(phi, s)?;
        Ok(self.eval(phi, s))
    }

    /// `∂ρ/∂φ`, analytic for the builtins.
    pub fn slope(&self, phi: f64, s: f64) -> Result<f64> {
        Self::check(phi, s)?;
        Ok(self.eval_slope(phi, s))
    }

    /// Congestion elasticity `φ·|∂ρ/∂φ| / ρ`; zero at `φ = 0`.
    pub fn elasticity(&self, phi: f64, s: f64) -> Result<f64> {
        Self::check(phi, s)?;
        if phi == 0.0 {
            return Ok(0.0);
        }
        Ok(phi * self.eval_slope(phi, s).abs() / self.eval(phi, s))
    }

    /// Hazard rate of the gain, `|∂ρ/∂φ| / ρ`.
    pub fn hazard(&self, phi: f64, s: f64) -> Result<f64> {
        Self::check(phi, s)?;
        Ok(self.eval_slope(phi, s).abs() / self.eval(phi, s))
    }

    pub(crate) fn eval(&self, phi: f64, s: f64) -> f64 {
        match &self.kind {
            Kind::Reciprocal => 1.0 / (s * phi + 1.0),
            Kind::Exponential => (-phi * s.ln_1p()).exp(),
            Kind::Custom { value, .. } => value(phi, s),
        }
    }

    pub(crate) fn eval_slope(&self, phi: f64, s: f64) -> f64 {
        match &self.kind {
            Kind::Reciprocal => {
                let d = s * phi + 1.0;
                -s / (d * d)
            }
            Kind::Exponential => {
                let a = s.ln_1p();
                -a * (-phi * a).exp()
            }
            Kind::Custom { value, slope, .. } => match slope {
                Some(slope) => slope(phi, s),
                None => {
                    let h = CUSTOM_SLOPE_STEP * phi.abs().max(1.0);
                    if phi >= h {
                        (value(phi + h, s) - value(phi - h, s)) / (2.0 * h)
                    } else {
                        // One-sided near the origin so the curve is never
                        // evaluated at negative congestion.
                        (value(phi + h, s) - value(phi, s)) / h
                    }
                }
            },
        }
    }
}

impl fmt::Debug for GainCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("GainCurve").field(&self.name()).finish()
    }
}
