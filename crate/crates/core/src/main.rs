use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twosided::experiments::{self, format_value, ScenarioConfig};
use twosided::optimize::{
    growth_rates, optimize_one_sided, optimize_profit, optimize_welfare, Objective, OptimumReport,
};
use twosided::oracle::fixed_point_equilibrium;
use twosided::sensitivity::{optimal_price_sensitivity, Verdict};
use twosided::{solve_equilibrium, Error};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Agreement required between the bracketing and fixed-point equilibria.
const EQUILIBRIUM_VERIFY_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "twosided",
    version,
    about = "Two-sided pricing of a congested network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the congestion equilibrium at prices.user, prices.cp
    SolveEq(Common),
    /// Profit- and welfare-optimal prices, one- and two-sided
    Optimize(Common),
    /// Run the configured parameter sweep and write CSV
    Sweep(Common),
    /// Derivatives of the optimal prices in sensitivity.parameter
    Sensitivity(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file; the baseline model when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set model.capacity=2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Check the result against the brute-force oracle
    #[arg(long)]
    verify: bool,
    /// Write the result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Error(Error),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::SolveEq(args) => run(args, solve_eq),
        Command::Optimize(args) => run(args, optimize),
        Command::Sweep(args) => run(args, sweep),
        Command::Sensitivity(args) => run(args, sensitivity),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify(message)) => {
            eprintln!("verification failed: {message}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. }
                | Error::InvalidModel(_)
                | Error::Io { .. }
                | Error::Csv { .. } => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::from(EXIT_NUMERIC),
            }
        }
    }
}

fn run(args: &Common, command: fn(&ScenarioConfig, &Common) -> Outcome) -> Outcome {
    let mut config = match &args.config {
        Some(path) => ScenarioConfig::load(path, &args.set)?,
        None => ScenarioConfig::from_overrides(&args.set)?,
    };
    config.verify |= args.verify;
    command(&config, args)
}

// output.path names the sweep CSV; reports only go to --out
fn deliver(text: &str, args: &Common) -> Outcome {
    match args.out.as_ref() {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            Error::Io {
                path: path.clone(),
                source,
            }
            .into()
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn line(out: &mut String, key: &str, value: f64) {
    let _ = writeln!(out, "{key} = {}", format_value(value));
}

fn solve_eq(config: &ScenarioConfig, args: &Common) -> Outcome {
    let prices = config.prices.ok_or_else(|| Error::Config {
        origin: "<config>".into(),
        line: 0,
        message: "solve-eq needs prices.user and prices.cp".into(),
    })?;
    let model = config.model()?;
    let eq = solve_equilibrium(&model, prices)?;
    let mut out = String::new();
    line(&mut out, "congestion", eq.congestion);
    line(&mut out, "throughput", eq.throughput);
    line(&mut out, "elasticity", eq.elasticity);
    line(&mut out, "user_demand", eq.user_demand);
    line(&mut out, "cp_demand", eq.cp_demand);
    line(&mut out, "gap_residual", eq.gap_residual);
    deliver(&out, args)?;
    if config.verify {
        let fp = fixed_point_equilibrium(&model, prices)?;
        let gap = (fp.congestion - eq.congestion).abs();
        if gap > EQUILIBRIUM_VERIFY_TOL * eq.congestion.max(1.0) {
            return Err(Failure::Verify(format!(
                "fixed-point congestion {} differs from {} by {gap:e}",
                fp.congestion, eq.congestion
            )));
        }
        eprintln!("verified against the fixed-point iteration (difference {gap:e})");
    }
    Ok(())
}

fn optimum(out: &mut String, prefix: &str, r: &OptimumReport) {
    line(out, &format!("{prefix}.p"), r.prices.user);
    line(out, &format!("{prefix}.q"), r.prices.cp);
    line(out, &format!("{prefix}.objective"), r.objective);
    line(
        out,
        &format!("{prefix}.congestion"),
        r.equilibrium.congestion,
    );
    line(
        out,
        &format!("{prefix}.elasticity"),
        r.equilibrium.elasticity,
    );
    let _ = writeln!(out, "{prefix}.interior = {}", r.diagnostics.interior);
}

fn optimize(config: &ScenarioConfig, args: &Common) -> Outcome {
    let model = config.model()?;
    let mut out = String::new();
    let profit = optimize_profit(&model)?;
    let welfare = optimize_welfare(&model)?;
    optimum(&mut out, "profit", &profit);
    if let Some(r) = profit.diagnostics.lerner_residual {
        line(&mut out, "profit.lerner_residual", r);
    }
    optimum(&mut out, "welfare", &welfare);
    if let Some(r) = welfare.diagnostics.ramsey_residual {
        line(&mut out, "welfare.ramsey_residual", r);
    }
    optimum(
        &mut out,
        "profit_one_sided",
        &optimize_one_sided(&model, Objective::Profit)?,
    );
    match growth_rates(&model) {
        Ok(g) => {
            line(&mut out, "r_star", g.profit_rate);
            line(&mut out, "r_circ", g.welfare_rate);
        }
        Err(e @ Error::DegenerateBaseline { .. }) => {
            let _ = writeln!(out, "# growth rates undefined: {e}");
        }
        Err(e) => return Err(e.into()),
    }
    deliver(&out, args)?;
    if config.verify {
        let report = experiments::verify_model(&model, config.verify_points)?;
        if !report.passed() {
            return Err(Failure::Verify(format!("{:?}", report.mismatches)));
        }
        eprintln!(
            "verified {} optima on a {}-point grid",
            report.checked, config.verify_points
        );
    }
    Ok(())
}

fn sweep(config: &ScenarioConfig, args: &Common) -> Outcome {
    let result = experiments::run_configured(config)?;
    match args.out.as_ref().or(config.output.path.as_ref()) {
        Some(path) => experiments::emit_csv(&result, path)?,
        None => {
            let stdout = std::io::stdout();
            experiments::write_csv(&result, stdout.lock()).map_err(|source| Error::Csv {
                path: "<stdout>".into(),
                source,
            })?;
        }
    }
    let failed = result.failed_rows();
    if failed > 0 {
        eprintln!(
            "{failed} of {} rows failed; see the status column",
            result.rows.len()
        );
    }
    if config.verify {
        let report = experiments::verify_sweep(config, &result)?;
        if !report.passed() {
            let rows: Vec<String> = report
                .mismatches
                .iter()
                .map(|m| {
                    format!(
                        "{} at {}",
                        m.objective,
                        m.param_value.map(format_value).unwrap_or_default()
                    )
                })
                .collect();
            return Err(Failure::Verify(rows.join(", ")));
        }
        eprintln!(
            "verified {} optima on a {}-point grid",
            report.checked, config.verify_points
        );
    }
    Ok(())
}

fn sensitivity(config: &ScenarioConfig, args: &Common) -> Outcome {
    let model = config.model()?;
    let parameter = config.sensitivity_parameter;
    let report = optimal_price_sensitivity(&model, parameter, config.sensitivity_step)?;
    let mut out = String::new();
    let _ = writeln!(out, "parameter = {}", parameter.name());
    line(&mut out, "value", report.base_value);
    line(&mut out, "dp_star", report.profit_derivatives.0);
    line(&mut out, "dq_star", report.profit_derivatives.1);
    line(&mut out, "dp_circ", report.welfare_derivatives.0);
    line(&mut out, "dq_circ", report.welfare_derivatives.1);
    line(
        &mut out,
        "profit_elasticity_slope",
        report.context.profit_elasticity_slope,
    );
    line(
        &mut out,
        "welfare_elasticity_slope",
        report.context.welfare_elasticity_slope,
    );
    for p in &report.predictions {
        let _ = writeln!(out, "{} = {:?}", p.label, p.verdict);
    }
    deliver(&out, args)?;
    if report
        .predictions
        .iter()
        .any(|p| p.verdict == Verdict::Fails)
    {
        eprintln!("some predicted signs or ratios fail at this model");
    }
    if config.verify {
        // halving the step must not flip any derivative
        let half = optimal_price_sensitivity(&model, parameter, 0.5 * config.sensitivity_step)?;
        let pairs = [
            (report.profit_derivatives.0, half.profit_derivatives.0),
            (report.profit_derivatives.1, half.profit_derivatives.1),
            (report.welfare_derivatives.0, half.welfare_derivatives.0),
            (report.welfare_derivatives.1, half.welfare_derivatives.1),
        ];
        if pairs.iter().any(|(a, b)| a.signum() != b.signum()) {
            return Err(Failure::Verify(format!(
                "derivative signs change when the step is halved: {pairs:?}"
            )));
        }
        eprintln!("derivative signs stable under step halving");
    }
    Ok(())
}
