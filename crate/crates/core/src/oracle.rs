//! Brute-force reference solvers used to check the main code path: dense
//! price grids, a damped fixed-point equilibrium iteration and plain
//! finite differences.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objectives::{profit_at, surplus_welfare_at};
use crate::primitives::{CongestionFamily, MarketModel, PricePair};

/// One axis of a uniform price grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Axis { lo, hi, points }
    }

    pub fn at(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
    }

    pub fn cell(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }
}

/// A price grid over the user and CP axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub user: Axis,
    pub cp: Axis,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 2001;

    /// The clamped price box `[0, v_max(1 − 10⁻⁹)]²` of `model`.
    pub fn for_model(model: &MarketModel, points: usize) -> Self {
        GridSpec {
            user: Axis::new(0.0, model.user_demand.search_upper(), points),
            cp: Axis::new(0.0, model.cp_demand.search_upper(), points),
        }
    }

    /// Largest cell side, the resolution the oracle can promise.
    pub fn cell_diameter(&self) -> f64 {
        self.user.cell().max(self.cp.cell())
    }

    pub fn validate(&self, model: &MarketModel) -> Result<()> {
        for (axis, support) in [
            (&self.user, model.user_demand.support()),
            (&self.cp, model.cp_demand.support()),
        ] {
            if axis.points < 3 {
                return Err(Error::InvalidModel(format!(
                    "grid needs at least 3 points, got {}",
                    axis.points
                )));
            }
            if !(axis.lo >= 0.0 && axis.lo < axis.hi && axis.hi < support) {
                return Err(Error::InvalidModel(format!(
                    "grid axis [{}, {}] not inside the demand support [0, {support})",
                    axis.lo, axis.hi
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleObjective {
    /// Profit over the whole price box.
    Profit,
    /// `W_m + W_n` along the zero-profit segment `p + q = c`.
    RamseyWelfare,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub prices: PricePair,
    pub value: f64,
    /// Grid spacing `(Δp, Δq)` around the winning point.
    pub cell: (f64, f64),
    pub evaluations: usize,
}

/// Keeps the first maximum in scan order, which is the lexicographically
/// smallest `(p, q)` among ties.
fn better(value: f64, best: f64) -> bool {
    value > best || (best.is_nan() && !value.is_nan())
}

/// Exhaustive maximization over `grid`.
///
/// For [`OracleObjective::RamseyWelfare`] only the user axis is scanned:
/// `p` runs over the part of that axis whose partner `q = c − p` lies in
/// the CP range, with the user axis point count.
pub fn grid_optimize(
    model: &MarketModel,
    objective: OracleObjective,
    grid: &GridSpec,
) -> Result<GridOptimum> {
    grid.validate(model)?;
    match objective {
        OracleObjective::Profit => {
            let rows: Vec<Result<(usize, f64)>> = (0..grid.user.points)
                .into_par_iter()
                .map(|i| {
                    let p = grid.user.at(i);
                    let mut best = (0, f64::NAN);
                    for j in 0..grid.cp.points {
                        let v = profit_at(model, PricePair::new(p, grid.cp.at(j)))?;
                        if better(v, best.1) {
                            best = (j, v);
                        }
                    }
                    Ok(best)
                })
                .collect();
            let mut best = (0, 0, f64::NAN);
            for (i, row) in rows.into_iter().enumerate() {
                let (j, v) = row?;
                if better(v, best.2) {
                    best = (i, j, v);
                }
            }
            Ok(GridOptimum {
                prices: PricePair::new(grid.user.at(best.0), grid.cp.at(best.1)),
                value: best.2,
                cell: (grid.user.cell(), grid.cp.cell()),
                evaluations: grid.user.points * grid.cp.points,
            })
        }
        OracleObjective::RamseyWelfare => {
            let c = model.cost;
            let lo = grid.user.lo.max(c - grid.cp.hi);
            let hi = grid.user.hi.min(c - grid.cp.lo);
            if !(lo <= hi) {
                return Err(Error::InvalidModel(format!(
                    "zero-profit segment misses the grid (c = {c})"
                )));
            }
            let axis = Axis::new(lo, hi, grid.user.points);
            let values: Vec<Result<f64>> = (0..axis.points)
                .into_par_iter()
                .map(|i| {
                    let p = axis.at(i);
                    surplus_welfare_at(model, PricePair::new(p, (c - p).max(0.0)))
                })
                .collect();
            let mut best = (0, f64::NAN);
            for (i, v) in values.into_iter().enumerate() {
                let v = v?;
                if better(v, best.1) {
                    best = (i, v);
                }
            }
            let p = axis.at(best.0);
            Ok(GridOptimum {
                prices: PricePair::new(p, (c - p).max(0.0)),
                value: best.1,
                cell: (axis.cell(), axis.cell()),
                evaluations: axis.points,
            })
        }
    }
}

const DAMPING: f64 = 0.5;
const FIXED_POINT_START_OFFSET: f64 = 1e-6;
const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub congestion: f64,
    pub throughput: f64,
    pub iterations: usize,
    /// Damping factor in use when the iteration stopped.
    pub damping: f64,
}

/// Solves the equilibrium by damped iteration
/// `φ ← (1 − θ)φ + θ·Φ(m·n·ρ(φ, s), μ)`.
///
/// θ starts at 0.5 and is halved whenever the step flips sign without
/// shrinking. Under M/M/1, a demand at or above capacity means `φ` is
/// still too low, so `φ` is doubled instead of taking the step.
pub fn fixed_point_equilibrium(model: &MarketModel, prices: PricePair) -> Result<FixedPoint> {
    let m = model.user_demand.value(prices.user)?;
    let n = model.cp_demand.value(prices.cp)?;
    let (mu, s) = (model.capacity, model.sensitivity);
    let floor = model.congestion.zero_traffic_congestion(mu)?;
    let demand = m * n;
    if demand == 0.0 {
        return Ok(FixedPoint {
            congestion: floor,
            throughput: 0.0,
            iterations: 0,
            damping: DAMPING,
        });
    }
    let bounded = model.congestion.family() == CongestionFamily::MM1;

    let mut phi = floor + FIXED_POINT_START_OFFSET;
    let mut theta = DAMPING;
    let mut last_step = f64::INFINITY;
    for iteration in 1..=FIXED_POINT_MAX_ITERATIONS {
        let lambda = demand * model.gain.value(phi, s)?;
        if bounded && lambda >= mu {
            phi *= 2.0;
            continue;
        }
        let target = model.congestion.congestion_of(lambda, mu)?;
        let step = theta * (target - phi);
        if step.abs() <= FIXED_POINT_TOL * phi.max(1.0) {
            phi += step;
            return Ok(FixedPoint {
                congestion: phi,
                throughput: demand * model.gain.value(phi, s)?,
                iterations: iteration,
                damping: theta,
            });
        }
        if step.signum() != last_step.signum() && step.abs() >= last_step.abs() {
            theta *= 0.5;
            last_step = f64::INFINITY;
            continue;
        }
        phi += step;
        last_step = step;
    }
    Err(Error::NoConvergence {
        iterations: FIXED_POINT_MAX_ITERATIONS,
        last_step,
    })
}

/// Step rule for [`finite_difference`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    /// Step as a multiple of `max(1, |x|)`.
    pub relative: f64,
    /// Use the fourth-order five-point stencil instead of the plain
    /// central difference.
    pub five_point: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            relative: 1e-5,
            five_point: false,
        }
    }
}

impl StepPolicy {
    pub fn central(relative: f64) -> Self {
        StepPolicy {
            relative,
            five_point: false,
        }
    }

    pub fn five_point(relative: f64) -> Self {
        StepPolicy {
            relative,
            five_point: true,
        }
    }

    pub fn step(&self, x: f64) -> f64 {
        self.relative * x.abs().max(1.0)
    }
}

/// Central finite-difference estimate of `f'(x)`.
pub fn finite_difference<F>(mut f: F, x: f64, policy: StepPolicy) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = policy.step(x);
    if policy.five_point {
        let (a, b, c, d) = (f(x + 2.0 * h)?, f(x + h)?, f(x - h)?, f(x - 2.0 * h)?);
        Ok((-a + 8.0 * b - 8.0 * c + d) / (12.0 * h))
    } else {
        Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{CongestionCurve, DemandCurve, GainCurve};
    use crate::solve_equilibrium;

    fn coarse(model: &MarketModel) -> GridSpec {
        GridSpec::for_model(model, 201)
    }

    #[test]
    fn symmetric_profit_grid_is_diagonal() {
        let model = MarketModel::baseline();
        let best = grid_optimize(&model, OracleObjective::Profit, &coarse(&model)).unwrap();
        assert_eq!(best.prices.user, best.prices.cp);
    }

    #[test]
    fn symmetric_ramsey_grid_is_half_cost() {
        let model = MarketModel::baseline();
        let grid = coarse(&model);
        let best = grid_optimize(&model, OracleObjective::RamseyWelfare, &grid).unwrap();
        assert!((best.prices.user - 0.35).abs() <= best.cell.0);
        assert!((best.prices.total() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_axes() {
        let model = MarketModel::baseline();
        let mut grid = coarse(&model);
        grid.user.points = 2;
        assert!(grid_optimize(&model, OracleObjective::Profit, &grid).is_err());
        let mut grid = coarse(&model);
        grid.cp.hi = 1.0;
        assert!(grid.validate(&model).is_err());
    }

    #[test]
    fn fixed_point_closed_forms() {
        let sharing = MarketModel::baseline().with_capacity(0.5);
        let fp = fixed_point_equilibrium(&sharing, PricePair::new(0.0, 0.0)).unwrap();
        assert!((fp.congestion - 1.0).abs() < 1e-10);

        let mm1 = MarketModel::baseline()
            .with_congestion(CongestionCurve::mm1())
            .with_capacity(2.0);
        let fp = fixed_point_equilibrium(&mm1, PricePair::new(0.0, 0.0)).unwrap();
        assert!((fp.congestion - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn fixed_point_handles_steep_feedback() {
        // tiny capacity makes the undamped map strongly expanding
        let model = MarketModel::baseline()
            .with_gain(GainCurve::exponential())
            .with_capacity(1e-3)
            .with_sensitivity(5.0);
        let prices = PricePair::new(0.1, 0.2);
        let fp = fixed_point_equilibrium(&model, prices).unwrap();
        let eq = solve_equilibrium(&model, prices).unwrap();
        assert!(
            (fp.congestion - eq.congestion).abs() < 1e-10,
            "{fp:?} vs {}",
            eq.congestion
        );
        assert!(fp.damping < DAMPING);
    }

    #[test]
    fn fixed_point_mm1_overload_start() {
        let model = MarketModel::baseline()
            .with_congestion(CongestionCurve::mm1())
            .with_capacity(0.05);
        let fp = fixed_point_equilibrium(&model, PricePair::new(0.0, 0.0)).unwrap();
        let eq = solve_equilibrium(&model, PricePair::new(0.0, 0.0)).unwrap();
        assert!((fp.congestion - eq.congestion).abs() < 1e-10 * eq.congestion.max(1.0));
    }

    #[test]
    fn finite_difference_examples() {
        let d = finite_difference(|x| Ok(x * x), 3.0, StepPolicy::default()).unwrap();
        assert!((d - 6.0).abs() < 1e-8);
        let g = GainCurve::reciprocal();
        let d = finite_difference(|phi| g.value(phi, 1.0), 1.0, StepPolicy::default()).unwrap();
        assert!((d + 0.25).abs() < 1e-6);
        let m = DemandCurve::user_power(2.0).unwrap();
        let d = finite_difference(|p| m.value(p), 0.25, StepPolicy::default()).unwrap();
        assert!((d + 1.0).abs() < 1e-6);
        let d = finite_difference(|x: f64| Ok(x.sin()), 0.7, StepPolicy::five_point(1e-3)).unwrap();
        assert!((d - 0.7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_propagates_errors() {
        let m = DemandCurve::user_power(1.0).unwrap();
        assert!(finite_difference(|p| m.value(p), 1.0, StepPolicy::default()).is_err());
    }
}
