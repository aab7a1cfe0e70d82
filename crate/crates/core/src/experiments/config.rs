//! Scenario files: flat `key = value` lines.
//!
//! ```text
//! # comment
//! model.gain = reciprocal        # reciprocal | exponential | video
//! model.congestion = sharing     # sharing | mm1
//! model.alpha = 1.5
//! sweep.parameter = mu
//! sweep.range = 0.5:5:26         # start:stop[:count], count defaults to 26
//! output.path = mu.csv
//! ```
//!
//! The `model.` prefix is optional. Every key may appear at most once in a
//! file; `--set key=value` overrides are applied afterwards, in order.
//! Unknown keys are errors.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::primitives::{
    CongestionCurve, DemandCurve, GainCurve, MarketModel, Parameter, PricePair,
};
use crate::sensitivity::DEFAULT_STEP;

use super::{Column, SweepKind};

/// Grid points per sweep when the range gives no count.
pub const DEFAULT_SWEEP_POINTS: usize = 26;
/// Oracle grid points per axis for `--verify`.
pub const DEFAULT_VERIFY_POINTS: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainSpec {
    Reciprocal,
    Exponential,
    Video { weight: f64, slow: f64, fast: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CongestionSpec {
    Sharing,
    Mm1,
}

/// A demand family; the power shape is `alpha` or `beta` of [`ModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemandSpec {
    Power,
    ComplementPower(f64),
}

/// The model block. Defaults to the baseline: sharing, reciprocal,
/// `α = β = μ = s = 1`, `c = 0.7`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub gain: GainSpec,
    pub congestion: CongestionSpec,
    pub user_demand: DemandSpec,
    pub cp_demand: DemandSpec,
    pub alpha: f64,
    pub beta: f64,
    pub cost: f64,
    pub capacity: f64,
    pub sensitivity: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            gain: GainSpec::Reciprocal,
            congestion: CongestionSpec::Sharing,
            user_demand: DemandSpec::Power,
            cp_demand: DemandSpec::Power,
            alpha: 1.0,
            beta: 1.0,
            cost: 0.7,
            capacity: 1.0,
            sensitivity: 1.0,
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<MarketModel> {
        let gain = match self.gain {
            GainSpec::Reciprocal => GainCurve::reciprocal(),
            GainSpec::Exponential => GainCurve::exponential(),
            GainSpec::Video { weight, slow, fast } => GainCurve::video_like(weight, slow, fast)?,
        };
        let congestion = match self.congestion {
            CongestionSpec::Sharing => CongestionCurve::capacity_sharing(),
            CongestionSpec::Mm1 => CongestionCurve::mm1(),
        };
        let user_demand = match self.user_demand {
            DemandSpec::Power => DemandCurve::user_power(self.alpha)?,
            DemandSpec::ComplementPower(k) => DemandCurve::complement_power(k)?,
        };
        let cp_demand = match self.cp_demand {
            DemandSpec::Power => DemandCurve::cp_power(self.beta)?,
            DemandSpec::ComplementPower(k) => DemandCurve::complement_power(k)?,
        };
        let model = MarketModel::baseline()
            .with_gain(gain)
            .with_congestion(congestion)
            .with_user_demand(user_demand)
            .with_cp_demand(cp_demand)
            .with_cost(self.cost)
            .with_capacity(self.capacity)
            .with_sensitivity(self.sensitivity);
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub parameter: Parameter,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub kind: SweepKind,
}

impl SweepSpec {
    /// Grid values in increasing order; the last is `stop` exactly.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
                }
            })
            .collect()
    }
}

/// Default sweep ranges per parameter.
pub fn default_range(parameter: Parameter) -> Option<(f64, f64)> {
    match parameter {
        Parameter::Alpha | Parameter::Beta | Parameter::Sensitivity => Some((0.5, 3.0)),
        Parameter::Capacity => Some((0.5, 5.0)),
        Parameter::Cost => None,
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    /// `None` selects every column of the sweep kind.
    pub columns: Option<Vec<Column>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelSpec,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
    pub verify: bool,
    pub verify_points: usize,
    /// Prices for `solve-eq`.
    pub prices: Option<PricePair>,
    pub sensitivity_parameter: Parameter,
    pub sensitivity_step: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            model: ModelSpec::default(),
            sweep: None,
            output: OutputSpec::default(),
            verify: false,
            verify_points: DEFAULT_VERIFY_POINTS,
            prices: None,
            sensitivity_parameter: Parameter::Capacity,
            sensitivity_step: DEFAULT_STEP,
        }
    }
}

/// Where a value came from, for error messages.
#[derive(Debug, Clone, Copy)]
struct Origin<'a> {
    name: &'a str,
    line: usize,
}

impl Origin<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::config(self.name, self.line, message)
    }
}

/// Raw assignments collected before the model is assembled, so that
/// `model.gain.weight` may precede or follow `model.gain`.
#[derive(Debug, Default)]
struct Pending {
    gain: Option<String>,
    gain_weight: Option<f64>,
    gain_slow: Option<f64>,
    gain_fast: Option<f64>,
    user_demand: Option<String>,
    user_k: Option<f64>,
    cp_demand: Option<String>,
    cp_k: Option<f64>,
    sweep_parameter: Option<Parameter>,
    sweep_range: Option<(f64, f64, Option<usize>)>,
    sweep_kind: Option<SweepKind>,
    price_user: Option<f64>,
    price_cp: Option<f64>,
}

#[derive(Debug, Default)]
struct Lines {
    /// Last line that set each key, used to place assembly errors.
    seen: Vec<(String, String, usize)>,
}

impl Lines {
    fn line_of(&self, key: &str) -> Option<(&str, usize)> {
        self.seen
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, origin, line)| (origin.as_str(), *line))
    }
}

fn number(origin: Origin, key: &str, value: &str) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|_| origin.error(format!("{key}: expected a number, got {value:?}")))?;
    if !x.is_finite() {
        return Err(origin.error(format!("{key}: expected a finite number, got {value:?}")));
    }
    Ok(x)
}

fn positive(origin: Origin, key: &str, value: &str) -> Result<f64> {
    let x = number(origin, key, value)?;
    if !(x > 0.0) {
        return Err(origin.error(format!("{key}: must be positive, got {x}")));
    }
    Ok(x)
}

fn flag(origin: Origin, key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(origin.error(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn parse_range(origin: Origin, value: &str) -> Result<(f64, f64, Option<usize>)> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(origin.error(format!(
            "sweep.range: expected start:stop[:count], got {value:?}"
        )));
    }
    let start = number(origin, "sweep.range start", parts[0])?;
    let stop = number(origin, "sweep.range stop", parts[1])?;
    if start > stop {
        return Err(origin.error(format!("sweep.range: start {start} exceeds stop {stop}")));
    }
    let count = match parts.get(2) {
        None => None,
        Some(c) => {
            let n: usize = c.parse().map_err(|_| {
                origin.error(format!(
                    "sweep.range count: expected a positive integer, got {c:?}"
                ))
            })?;
            if n == 0 {
                return Err(origin.error("sweep.range count must be at least 1"));
            }
            if n == 1 && start != stop {
                return Err(origin.error("sweep.range with one point needs start = stop"));
            }
            Some(n)
        }
    };
    Ok((start, stop, count))
}

fn parameter(origin: Origin, key: &str, value: &str) -> Result<Parameter> {
    Parameter::parse(value).ok_or_else(|| {
        origin.error(format!(
            "{key}: unknown parameter {value:?} (alpha, beta, mu, s, c)"
        ))
    })
}

impl ScenarioConfig {
    /// Parses `text`; `origin` names it in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        Self::parse_with_overrides(text, origin, &[])
    }

    /// Reads `path` and applies `overrides` (`key=value`) on top.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_with_overrides(&text, &path.display().to_string(), overrides)
    }

    /// The baseline scenario with `overrides` applied.
    pub fn from_overrides(overrides: &[String]) -> Result<Self> {
        Self::parse_with_overrides("", "<defaults>", overrides)
    }

    pub fn parse_with_overrides(text: &str, origin: &str, overrides: &[String]) -> Result<Self> {
        let mut config = ScenarioConfig::default();
        let mut pending = Pending::default();
        let mut lines = Lines::default();

        for (i, raw) in text.lines().enumerate() {
            let at = Origin {
                name: origin,
                line: i + 1,
            };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| at.error(format!("expected key = value, got {content:?}")))?;
            let key = canonical(key.trim());
            if lines.seen.iter().any(|(k, o, _)| *k == key && o == origin) {
                return Err(at.error(format!("duplicate key {key}")));
            }
            config.assign(&mut pending, at, &key, value.trim())?;
            lines.seen.push((key, origin.to_string(), i + 1));
        }
        for (i, item) in overrides.iter().enumerate() {
            let at = Origin {
                name: "--set",
                line: i + 1,
            };
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| at.error(format!("expected key=value, got {item:?}")))?;
            let key = canonical(key.trim());
            config.assign(&mut pending, at, &key, value.trim())?;
            lines.seen.push((key, "--set".to_string(), i + 1));
        }
        config.finish(pending, &lines)?;
        Ok(config)
    }

    fn assign(&mut self, pending: &mut Pending, at: Origin, key: &str, value: &str) -> Result<()> {
        match key {
            "model.gain" => pending.gain = Some(value.to_ascii_lowercase()),
            "model.gain.weight" => pending.gain_weight = Some(number(at, key, value)?),
            "model.gain.slow" => pending.gain_slow = Some(positive(at, key, value)?),
            "model.gain.fast" => pending.gain_fast = Some(positive(at, key, value)?),
            "model.congestion" => {
                self.model.congestion = match value.to_ascii_lowercase().as_str() {
                    "sharing" => CongestionSpec::Sharing,
                    "mm1" => CongestionSpec::Mm1,
                    _ => {
                        return Err(
                            at.error(format!("{key}: expected sharing or mm1, got {value:?}"))
                        )
                    }
                }
            }
            "model.user_demand" => pending.user_demand = Some(value.to_ascii_lowercase()),
            "model.user_demand.k" => pending.user_k = Some(positive(at, key, value)?),
            "model.cp_demand" => pending.cp_demand = Some(value.to_ascii_lowercase()),
            "model.cp_demand.k" => pending.cp_k = Some(positive(at, key, value)?),
            "model.alpha" => self.model.alpha = positive(at, key, value)?,
            "model.beta" => self.model.beta = positive(at, key, value)?,
            "model.cost" => self.model.cost = number(at, key, value)?,
            "model.capacity" => self.model.capacity = positive(at, key, value)?,
            "model.sensitivity" => self.model.sensitivity = positive(at, key, value)?,
            "sweep.parameter" => pending.sweep_parameter = Some(parameter(at, key, value)?),
            "sweep.range" => pending.sweep_range = Some(parse_range(at, value)?),
            "sweep.kind" => {
                pending.sweep_kind = Some(match value.to_ascii_lowercase().as_str() {
                    "growth" => SweepKind::Growth,
                    "prices" => SweepKind::Prices,
                    _ => {
                        return Err(
                            at.error(format!("{key}: expected growth or prices, got {value:?}"))
                        )
                    }
                })
            }
            "output.path" => {
                if value.is_empty() {
                    return Err(at.error("output.path is empty"));
                }
                self.output.path = Some(PathBuf::from(value));
            }
            "output.columns" => {
                let columns = value
                    .split(',')
                    .map(|c| {
                        let c = c.trim();
                        Column::parse(c).ok_or_else(|| {
                            at.error(format!("output.columns: unknown column {c:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.output.columns = Some(columns);
            }
            "verify" => self.verify = flag(at, key, value)?,
            "verify.grid" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| at.error(format!("{key}: expected an integer, got {value:?}")))?;
                if n < 3 {
                    return Err(at.error(format!("{key}: needs at least 3 points, got {n}")));
                }
                self.verify_points = n;
            }
            "prices.user" => pending.price_user = Some(number(at, key, value)?),
            "prices.cp" => pending.price_cp = Some(number(at, key, value)?),
            "sensitivity.parameter" => self.sensitivity_parameter = parameter(at, key, value)?,
            "sensitivity.step" => {
                let h = positive(at, key, value)?;
                if h >= 0.5 {
                    return Err(
                        at.error(format!("{key}: relative step must be below 0.5, got {h}"))
                    );
                }
                self.sensitivity_step = h;
            }
            _ => return Err(at.error(format!("unknown key {key}"))),
        }
        Ok(())
    }

    fn finish(&mut self, pending: Pending, lines: &Lines) -> Result<()> {
        let at = |key: &str| {
            let (name, line) = lines.line_of(key).unwrap_or(("<defaults>", 0));
            Origin { name, line }
        };

        if let Some(gain) = &pending.gain {
            self.model.gain = match gain.as_str() {
                "reciprocal" => GainSpec::Reciprocal,
                "exponential" => GainSpec::Exponential,
                "video" => GainSpec::Video {
                    weight: pending.gain_weight.unwrap_or(0.6),
                    slow: pending.gain_slow.unwrap_or(0.01),
                    fast: pending.gain_fast.unwrap_or(10.0),
                },
                _ => {
                    return Err(at("model.gain").error(format!(
                        "model.gain: expected reciprocal, exponential or video, got {gain:?}"
                    )))
                }
            };
        }
        if !matches!(self.model.gain, GainSpec::Video { .. }) {
            for key in ["model.gain.weight", "model.gain.slow", "model.gain.fast"] {
                if lines.line_of(key).is_some() {
                    return Err(at(key).error(format!("{key} needs model.gain = video")));
                }
            }
        }
        self.model.user_demand = demand(
            &pending.user_demand,
            pending.user_k,
            "model.user_demand",
            &at,
        )?;
        self.model.cp_demand = demand(&pending.cp_demand, pending.cp_k, "model.cp_demand", &at)?;
        if self.model.user_demand != DemandSpec::Power && lines.line_of("model.alpha").is_some() {
            return Err(at("model.alpha").error("model.alpha needs model.user_demand = power"));
        }
        if self.model.cp_demand != DemandSpec::Power && lines.line_of("model.beta").is_some() {
            return Err(at("model.beta").error("model.beta needs model.cp_demand = power"));
        }

        let model = self
            .model
            .build()
            .map_err(|e| at("model.cost").error(format!("invalid model: {e}")))?;

        match (pending.price_user, pending.price_cp) {
            (Some(p), Some(q)) => self.prices = Some(PricePair::new(p, q)),
            (None, None) => {}
            (Some(_), None) => return Err(at("prices.user").error("prices.user needs prices.cp")),
            (None, Some(_)) => return Err(at("prices.cp").error("prices.cp needs prices.user")),
        }

        match pending.sweep_parameter {
            None => {
                for key in ["sweep.range", "sweep.kind"] {
                    if lines.line_of(key).is_some() {
                        return Err(at(key).error(format!("{key} needs sweep.parameter")));
                    }
                }
            }
            Some(parameter) => {
                let (start, stop, count) = match pending.sweep_range {
                    Some(range) => range,
                    None => {
                        let (lo, hi) = default_range(parameter).ok_or_else(|| {
                            at("sweep.parameter")
                                .error(format!("sweep over {} needs sweep.range", parameter.name()))
                        })?;
                        (lo, hi, None)
                    }
                };
                let spec = SweepSpec {
                    parameter,
                    start,
                    stop,
                    count: count.unwrap_or(DEFAULT_SWEEP_POINTS),
                    kind: pending.sweep_kind.unwrap_or(SweepKind::Growth),
                };
                let range_at = if pending.sweep_range.is_some() {
                    at("sweep.range")
                } else {
                    at("sweep.parameter")
                };
                // the admissible set of each parameter is an interval, so
                // the endpoints decide
                for x in [start, stop] {
                    model
                        .with_parameter(parameter, x)
                        .map_err(|e| range_at.error(format!("sweep value {x} is invalid: {e}")))?;
                }
                self.sweep = Some(spec);
            }
        }

        if let Some(columns) = &self.output.columns {
            let kind = self.sweep.map(|s| s.kind).unwrap_or(SweepKind::Growth);
            if let Some(c) = columns.iter().find(|c| !kind.columns().contains(c)) {
                return Err(at("output.columns").error(format!(
                    "output.columns: {} is not produced by a {} sweep",
                    c.name(),
                    kind.name()
                )));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<MarketModel> {
        self.model.build()
    }

    /// Output columns in effect for the configured sweep kind.
    pub fn columns(&self) -> Vec<Column> {
        let kind = self.sweep.map(|s| s.kind).unwrap_or(SweepKind::Growth);
        self.output
            .columns
            .clone()
            .unwrap_or_else(|| kind.columns().to_vec())
    }
}

fn demand<'a>(
    family: &Option<String>,
    k: Option<f64>,
    key: &str,
    at: &impl Fn(&str) -> Origin<'a>,
) -> Result<DemandSpec> {
    let k_key = format!("{key}.k");
    match family.as_deref() {
        None | Some("power") => {
            if k.is_some() {
                return Err(at(&k_key).error(format!("{k_key} needs {key} = complement_power")));
            }
            Ok(DemandSpec::Power)
        }
        Some("complement_power") => Ok(DemandSpec::ComplementPower(k.unwrap_or(1.0))),
        Some(other) => Err(at(key).error(format!(
            "{key}: expected power or complement_power, got {other:?}"
        ))),
    }
}

/// Adds the `model.` prefix to bare model keys and resolves symbols.
fn canonical(key: &str) -> String {
    let key = key.to_ascii_lowercase();
    let bare = key.strip_prefix("model.").unwrap_or(&key);
    let head = bare.split('.').next().unwrap_or("");
    let head = match head {
        "mu" => "capacity",
        "s" => "sensitivity",
        "c" => "cost",
        other => other,
    };
    let rest = &bare[bare.find('.').unwrap_or(bare.len())..];
    match (head, rest.is_empty()) {
        ("gain" | "user_demand" | "cp_demand", _) => format!("model.{head}{rest}"),
        // `sensitivity.parameter` is its own section
        ("congestion" | "alpha" | "beta" | "cost" | "capacity" | "sensitivity", true) => {
            format!("model.{head}")
        }
        _ if key.starts_with("model.") => format!("model.{head}{rest}"),
        _ => key.to_string(),
    }
}
