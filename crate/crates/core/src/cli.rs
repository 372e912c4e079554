//! Command-line front end. Every subcommand is a thin wrapper over a library
//! call; the printed summary is a single JSON line.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::encoder::{encode_direct, write_dimacs};
use crate::error::{Error, Result};
use crate::experiments::{
    estimate_mean_solution_count, estimate_sat_probability, estimate_subproblem_sat_probability, pruning_benchmark,
    Counter, ExperimentOptions, ExperimentReport, DEFAULT_TRIALS,
};
use crate::generator::{generate_instance, generate_instance_symmetric};
use crate::instance::{Instance, Variant};
use crate::model::{calibrate_r, derive_dimensions, Params};
use crate::solver::{
    restrict, solve_backtracking, subproblem_constraint_profile, ExhaustiveOracle, SolverConfig, VariableOrder,
    DEFAULT_ENUMERATION_LIMIT,
};
use crate::symmetry::{apply_symmetry_mapping_with, find_symmetry_quadruple, flip_experiment, MappingMode};

/// Environment variable naming the directory for outputs when `--out` is absent.
pub const OUT_DIR_ENV: &str = "RBLAB_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rblab", version, about = "Model RB random CSP laboratory")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for trial-level parallelism. Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Directory for outputs when `--out` is not given.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
}

/// `--r`: a positive number, or `auto` for the calibrated density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Auto,
    Fixed(f64),
}

impl FromStr for Density {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Density::Auto);
        }
        s.parse::<f64>()
            .map(Density::Fixed)
            .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "auto")]
    pub r: Density,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<Params> {
        let r = match self.r {
            Density::Auto => calibrate_r(self.n, self.alpha, self.p, self.k)?,
            Density::Fixed(r) => r,
        };
        let params = Params::new(self.n, self.alpha, r, self.p, self.k, self.seed);
        derive_dimensions(&params)?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GuardArgs {
    /// Largest `d^n` the exact counters may enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    pub oracle_limit: f64,
    /// Disable the enumeration guard.
    #[arg(long, conflicts_with = "oracle_limit")]
    pub force: bool,
}

impl GuardArgs {
    fn limit(&self) -> f64 {
        if self.force {
            f64::INFINITY
        } else {
            self.oracle_limit
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorVariant {
    Plain,
    Symmetric,
}

impl From<GeneratorVariant> for Variant {
    fn from(v: GeneratorVariant) -> Self {
        match v {
            GeneratorVariant::Plain => Variant::Plain,
            GeneratorVariant::Symmetric => Variant::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Order {
    Lex,
    Mrv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Local,
    RowSwap,
}

impl From<Mode> for MappingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Local => MappingMode::Local,
            Mode::RowSwap => MappingMode::RowSwap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CounterArg {
    Exhaustive,
    Backtracking,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[command(flatten)]
    pub guard: GuardArgs,
    #[arg(long, value_enum, default_value_t = GeneratorVariant::Plain)]
    pub variant: GeneratorVariant,
    /// Exact counter used per trial.
    #[arg(long, value_enum, default_value_t = CounterArg::Exhaustive)]
    pub counter: CounterArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall time in the report (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Model RB instance.
    Generate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = GeneratorVariant::Plain)]
        variant: GeneratorVariant,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the backtracking solver on an instance file.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Order::Lex)]
        order: Order,
        #[arg(long)]
        no_forward_checking: bool,
        #[arg(long)]
        count_all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count solutions exactly by enumeration.
    Count {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        guard: GuardArgs,
    },
    /// Fix one variable and write the subproblem.
    Restrict {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        var: usize,
        #[arg(long)]
        value: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the symmetry mapping to one binary constraint.
    Symmap {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        constraint: usize,
        /// Anchor value at scope position 0; requires --anchor-v.
        #[arg(long, requires = "anchor_v")]
        anchor_u: Option<usize>,
        #[arg(long, requires = "anchor_u")]
        anchor_v: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Local)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Satisfiability-flip experiment.
    Flip {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, value_enum, default_value_t = Mode::Local)]
        mode: Mode,
    },
    /// Estimate the probability of satisfiability.
    SatProb {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Estimate the mean number of solutions.
    MeanCount {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Estimate the satisfiability of one-variable subproblems.
    SubProb {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Always restrict this variable.
        #[arg(long)]
        fixed_variable: Option<usize>,
    },
    /// Node counts with and without forward checking.
    Bench {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Write the direct CNF encoding as DIMACS.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::GuardExceeded { .. } => EXIT_GUARD,
        Error::Io(_) | Error::Csv(_) => EXIT_FAILURE,
        _ => EXIT_VALIDATION,
    }
}

fn output_path(config: &RunConfig, out: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    out.clone()
        .or_else(|| config.out_dir.as_ref().map(|dir| dir.join(default_name)))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn read_instance(path: &Path) -> Result<Instance> {
    Instance::from_json(&fs::read_to_string(path)?)
}

fn path_value(path: &Option<PathBuf>) -> Value {
    path.as_ref()
        .map_or(Value::Null, |p| Value::String(p.display().to_string()))
}

fn experiment_options(config: &RunConfig, exp: &ExperimentArgs) -> ExperimentOptions {
    ExperimentOptions {
        oracle_limit: exp.guard.limit(),
        jobs: config.jobs,
        variant: exp.variant.into(),
        counter: match exp.counter {
            CounterArg::Exhaustive => Counter::Exhaustive,
            CounterArg::Backtracking => Counter::Backtracking,
        },
        ..ExperimentOptions::default()
    }
}

fn emit_report<R: Serialize>(config: &RunConfig, exp: &ExperimentArgs, report: ExperimentReport<R>) -> Result<Value> {
    let report = if exp.timing { report } else { report.without_timing() };
    let ext = match exp.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let path = output_path(config, &exp.out, &format!("{}.{ext}", report.experiment));
    if let Some(path) = &path {
        let bytes = match exp.format {
            Format::Json => report.to_json()?.into_bytes(),
            Format::Csv => {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                buf
            }
        };
        write_file(path, &bytes)?;
    }
    let mut summary = json!({
        "command": report.experiment,
        "params": report.params,
        "trials": report.trials,
        "estimate": report.estimate,
        "stderr": report.stderr,
        "theory": report.theory,
        "out": path_value(&path),
    });
    if !report.aggregates.is_empty() {
        summary["aggregates"] = json!(report.aggregates);
    }
    if let Some(t) = report.wall_time {
        summary["wall_time"] = json!(t);
    }
    Ok(summary)
}

/// Executes one subcommand and returns its summary line.
pub fn run(config: &RunConfig) -> Result<Value> {
    match &config.command {
        Command::Generate { params, variant, out } => {
            let params = params.resolve()?;
            let instance = match variant {
                GeneratorVariant::Plain => generate_instance(&params)?,
                GeneratorVariant::Symmetric => generate_instance_symmetric(&params)?,
            };
            let path = output_path(config, out, &format!("instance-{}.json", params.seed));
            if let Some(path) = &path {
                write_file(path, instance.to_json()?.as_bytes())?;
            }
            let dims = derive_dimensions(&params)?;
            Ok(json!({
                "command": "generate",
                "params": params,
                "variant": Variant::from(*variant),
                "dimensions": dims,
                "out": path_value(&path),
            }))
        }
        Command::Solve {
            input,
            order,
            no_forward_checking,
            count_all,
            out,
        } => {
            let instance = read_instance(input)?;
            let solver_config = SolverConfig {
                variable_order: match order {
                    Order::Lex => VariableOrder::Lexicographic,
                    Order::Mrv => VariableOrder::MinRemainingValues,
                },
                forward_checking: !no_forward_checking,
                count_all: *count_all,
            };
            let result = solve_backtracking(&instance, solver_config);
            if let Some(path) = output_path(config, out, "solve.json") {
                let mut text = serde_json::to_string(&result)?;
                text.push('\n');
                write_file(&path, text.as_bytes())?;
            }
            let mut summary = serde_json::to_value(&result)?;
            summary["command"] = json!("solve");
            Ok(summary)
        }
        Command::Count { input, guard } => {
            let instance = read_instance(input)?;
            let count = ExhaustiveOracle::with_limit(guard.limit()).count(&instance)?;
            Ok(json!({ "command": "count", "solution_count": count }))
        }
        Command::Restrict { input, var, value, out } => {
            let instance = read_instance(input)?;
            let profile = subproblem_constraint_profile(&instance, *var)?;
            let sub = restrict(&instance, *var, *value)?;
            let path = output_path(config, out, "restrict.json");
            if let Some(path) = &path {
                write_file(path, sub.to_json()?.as_bytes())?;
            }
            Ok(json!({
                "command": "restrict",
                "n": sub.n(),
                "projected": profile.projected,
                "copied": profile.copied,
                "out": path_value(&path),
            }))
        }
        Command::Symmap {
            input,
            constraint,
            anchor_u,
            anchor_v,
            mode,
            out,
        } => {
            let instance = read_instance(input)?;
            let anchor = anchor_u.zip(*anchor_v);
            let Some(quad) = find_symmetry_quadruple(&instance, *constraint, anchor)? else {
                return Ok(json!({ "command": "symmap", "quadruple": null, "out": null }));
            };
            let image = apply_symmetry_mapping_with(&instance, &quad, (*mode).into())?;
            let path = output_path(config, out, "symmap.json");
            if let Some(path) = &path {
                write_file(path, image.to_json()?.as_bytes())?;
            }
            Ok(json!({
                "command": "symmap",
                "quadruple": quad,
                "mode": MappingMode::from(*mode),
                "out": path_value(&path),
            }))
        }
        Command::Flip { exp, mode } => {
            let params = exp.params.resolve()?;
            let options = ExperimentOptions {
                mapping_mode: (*mode).into(),
                ..experiment_options(config, exp)
            };
            let report = flip_experiment(&params, exp.trials, &options)?;
            let report = if exp.timing { report } else { report.without_timing() };
            let ext = match exp.format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            let path = output_path(config, &exp.out, &format!("flip.{ext}"));
            if let Some(path) = &path {
                let bytes = match exp.format {
                    Format::Json => report.to_json()?.into_bytes(),
                    Format::Csv => {
                        let mut buf = Vec::new();
                        report.write_csv(&mut buf)?;
                        buf
                    }
                };
                write_file(path, &bytes)?;
            }
            let mut summary = serde_json::to_value(report.clone().summary())?;
            summary["command"] = json!("flip");
            summary["out"] = path_value(&path);
            Ok(summary)
        }
        Command::SatProb { exp } => {
            let params = exp.params.resolve()?;
            let report = estimate_sat_probability(&params, exp.trials, &experiment_options(config, exp))?;
            emit_report(config, exp, report)
        }
        Command::MeanCount { exp } => {
            let params = exp.params.resolve()?;
            let report = estimate_mean_solution_count(&params, exp.trials, &experiment_options(config, exp))?;
            emit_report(config, exp, report)
        }
        Command::SubProb { exp, fixed_variable } => {
            let params = exp.params.resolve()?;
            let options = ExperimentOptions {
                fixed_variable: *fixed_variable,
                ..experiment_options(config, exp)
            };
            let report = estimate_subproblem_sat_probability(&params, exp.trials, &options)?;
            emit_report(config, exp, report)
        }
        Command::Bench { exp } => {
            let params = exp.params.resolve()?;
            let report = pruning_benchmark(&params, exp.trials, &experiment_options(config, exp))?;
            emit_report(config, exp, report)
        }
        Command::Encode { input, out } => {
            let instance = read_instance(input)?;
            let cnf = encode_direct(&instance)?;
            let path = output_path(config, out, "instance.cnf");
            if let Some(path) = &path {
                write_file(path, write_dimacs(&cnf).as_bytes())?;
            }
            Ok(json!({
                "command": "encode",
                "num_vars": cnf.num_vars,
                "num_clauses": cnf.clauses.len(),
                "out": path_value(&path),
            }))
        }
    }
}

/// Parses `args`, runs, prints the summary or the error, and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(config) => config,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    if config.jobs == Some(0) {
        eprintln!("error: invalid value for --jobs: must be at least 1");
        return EXIT_VALIDATION;
    }
    match run(&config) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        RunConfig::command().debug_assert();
    }

    #[test]
    fn density_parsing() {
        assert_eq!("auto".parse::<Density>().unwrap(), Density::Auto);
        assert_eq!("1.5".parse::<Density>().unwrap(), Density::Fixed(1.5));
        assert!("fast".parse::<Density>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::GuardExceeded {
                what: "x",
                size: 2.0,
                limit: 1.0
            }),
            EXIT_GUARD
        );
        assert_eq!(exit_code(&Error::TooFewTrials(1)), EXIT_VALIDATION);
    }

    #[test]
    fn validation_errors_exit_two() {
        let code = main_with_args(["rblab", "generate", "--n", "4", "--alpha", "0.5", "--p", "1.5"]);
        assert_eq!(code, EXIT_VALIDATION);
        let code = main_with_args(["rblab", "count"]);
        assert_eq!(code, EXIT_VALIDATION);
    }
}
