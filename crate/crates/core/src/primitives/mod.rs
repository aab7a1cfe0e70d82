//! Function families of the model: gain, congestion and demand curves,
//! and the [`MarketModel`] bundling them.

mod congestion;
mod demand;
mod gain;
mod model;

pub use congestion::{CongestionCurve, CongestionFamily};
pub use demand::{DemandCurve, DemandFamily, SURPLUS_QUADRATURE_DEPTH, SURPLUS_QUADRATURE_TOL};
pub use gain::{GainCurve, GainFamily};
pub use model::{MarketModel, Parameter, PricePair};
