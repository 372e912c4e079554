//! Monte Carlo harness.
//!
//! Trial `i` of an experiment with master seed `s` generates its instance
//! from `Params { seed: derive_seed(s, "trial", i), .. }`. Trials may run in
//! parallel; results are collected in trial order and aggregated
//! sequentially, so reports do not depend on the worker count.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{generate_instance_symmetric, generate_with_dimensions};
use crate::instance::{Instance, Variant};
use crate::model::{derive_dimensions, Dimensions, Params};
use crate::seed::{derive_seed, rng_for, stream};
use crate::solver::{
    restrict, solve_backtracking, subproblem_constraint_profile, Enumeration, ExhaustiveOracle, SolverConfig,
    DEFAULT_ENUMERATION_LIMIT,
};
use crate::symmetry::MappingMode;

pub const DEFAULT_TRIALS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    /// Guard on `d^n` for every exact count.
    pub oracle_limit: f64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Test hook replacing the derived constraint count (may be 0).
    pub constraint_count: Option<usize>,
    /// Generator used for every trial.
    pub variant: Variant,
    /// Subproblem experiments restrict this variable instead of a random one.
    pub fixed_variable: Option<usize>,
    pub mapping_mode: MappingMode,
    pub counter: Counter,
    pub keep_trials: bool,
}

/// Exact solution counter used inside experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counter {
    /// Flat enumeration of all `d^n` assignments.
    #[default]
    Exhaustive,
    /// Forward-checking backtracking with `count_all`; same counts, far fewer
    /// nodes. The `d^n` guard still applies.
    Backtracking,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            oracle_limit: DEFAULT_ENUMERATION_LIMIT,
            jobs: None,
            constraint_count: None,
            variant: Variant::Plain,
            fixed_variable: None,
            mapping_mode: MappingMode::Local,
            counter: Counter::Exhaustive,
            keep_trials: true,
        }
    }
}

impl ExperimentOptions {
    pub(crate) fn oracle(&self) -> ExactCounter {
        ExactCounter {
            oracle: ExhaustiveOracle::with_limit(self.oracle_limit),
            counter: self.counter,
        }
    }

    pub(crate) fn dimensions(&self, params: &Params) -> Result<Dimensions> {
        let dims = derive_dimensions(params)?;
        Ok(match self.constraint_count {
            Some(m) => dims.with_constraint_count(m),
            None => dims,
        })
    }

    pub(crate) fn check_guard(&self, params: &Params, dims: &Dimensions) -> Result<()> {
        let size = (dims.d as f64).powi(params.n as i32);
        if size > self.oracle_limit {
            return Err(Error::GuardExceeded {
                what: "assignment space d^n",
                size,
                limit: self.oracle_limit,
            });
        }
        Ok(())
    }

    pub(crate) fn generate(&self, params: &Params, dims: &Dimensions, seed: u64) -> Result<Instance> {
        let trial_params = params.with_seed(seed);
        match self.variant {
            Variant::Symmetric => {
                if self.constraint_count.is_some() {
                    return Err(Error::param(
                        "variant",
                        "the constraint-count override only applies to the plain generator",
                    ));
                }
                generate_instance_symmetric(&trial_params)
            }
            _ => generate_with_dimensions(&trial_params, dims),
        }
    }
}

pub(crate) struct ExactCounter {
    oracle: ExhaustiveOracle,
    counter: Counter,
}

impl ExactCounter {
    pub(crate) fn count(&self, instance: &Instance) -> Result<u64> {
        Ok(self.enumerate(instance)?.count)
    }

    pub(crate) fn enumerate(&self, instance: &Instance) -> Result<Enumeration> {
        match self.counter {
            Counter::Exhaustive => self.oracle.enumerate(instance),
            Counter::Backtracking => {
                self.oracle.check_guard(instance)?;
                let res = solve_backtracking(instance, SolverConfig::counting(true));
                Ok(Enumeration {
                    count: res.solution_count.unwrap_or(0),
                    first: res.witness,
                    nodes_explored: res.nodes_explored,
                })
            }
        }
    }
}

/// Runs `body(trial, seed)` for every trial and returns the results in trial
/// order.
pub(crate) fn run_trials<T, F>(params: &Params, trials: usize, options: &ExperimentOptions, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    let work = || {
        (0..trials)
            .into_par_iter()
            .map(|i| body(i, derive_seed(params.seed, stream::TRIAL, i as u64)))
            .collect::<Result<Vec<T>>>()
    };
    match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::param("jobs", e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Sample mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    }
}

/// A reference value an estimate is compared with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    pub value: f64,
    pub formula: String,
    /// Limit statement reported for context, never asserted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotic_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport<R> {
    pub experiment: String,
    pub params: Params,
    pub dimensions: Dimensions,
    pub trials: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub theory: Theory,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aggregates: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<R>>,
    /// Seconds; omitted from reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl<R> ExperimentReport<R> {
    /// `estimate <= theory + sigmas * stderr`.
    pub fn below_theory(&self, sigmas: f64) -> bool {
        self.estimate <= self.theory.value + sigmas * self.stderr
    }

    /// `|estimate - theory| <= sigmas * stderr`.
    pub fn matches_theory(&self, sigmas: f64) -> bool {
        (self.estimate - self.theory.value).abs() <= sigmas * self.stderr
    }

    pub fn without_timing(mut self) -> Self {
        self.wall_time = None;
        self
    }
}

impl<R: Serialize> ExperimentReport<R> {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// One row per trial, then a footer row
    /// `aggregate,trials=..,estimate=..,stderr=..,theory=..[,name=value..]`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(out);
        for row in self.per_trial.iter().flatten() {
            writer.serialize(row)?;
        }
        let mut footer = vec![
            "aggregate".to_string(),
            format!("trials={}", self.trials),
            format!("estimate={}", self.estimate),
            format!("stderr={}", self.stderr),
            format!("theory={}", self.theory.value),
        ];
        footer.extend(self.aggregates.iter().map(|(k, v)| format!("{k}={v}")));
        writer.write_record(&footer)?;
        writer.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTrial {
    pub trial: usize,
    pub seed: u64,
    pub solution_count: u64,
    pub satisfiable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubproblemTrial {
    pub trial: usize,
    pub seed: u64,
    pub variable: usize,
    pub value: usize,
    pub solution_count: u64,
    pub satisfiable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchTrial {
    pub trial: usize,
    pub seed: u64,
    pub satisfiable: bool,
    pub nodes_plain: u64,
    pub nodes_forward_checking: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTrial {
    pub trial: usize,
    pub seed: u64,
    pub variable: usize,
    pub projected: usize,
    pub copied: usize,
    pub mean_slice_fraction: Option<f64>,
}

fn require_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::TooFewTrials(trials));
    }
    Ok(())
}

struct Setup {
    start: Instant,
    dims: Dimensions,
    oracle: ExactCounter,
}

fn setup(params: &Params, trials: usize, options: &ExperimentOptions) -> Result<Setup> {
    require_trials(trials)?;
    let dims = options.dimensions(params)?;
    options.check_guard(params, &dims)?;
    Ok(Setup {
        start: Instant::now(),
        dims,
        oracle: options.oracle(),
    })
}

fn count_trials(params: &Params, trials: usize, options: &ExperimentOptions, setup: &Setup) -> Result<Vec<CountTrial>> {
    run_trials(params, trials, options, |trial, seed| {
        let instance = options.generate(params, &setup.dims, seed)?;
        let solution_count = setup.oracle.count(&instance)?;
        Ok(CountTrial {
            trial,
            seed,
            solution_count,
            satisfiable: solution_count > 0,
        })
    })
}

fn sat_report(params: &Params, setup: &Setup, records: Vec<CountTrial>, keep: bool) -> ExperimentReport<CountTrial> {
    let xs: Vec<f64> = records.iter().map(|r| f64::from(u8::from(r.satisfiable))).collect();
    let (estimate, stderr) = mean_and_stderr(&xs);
    let expected = setup.dims.expected_solution_count(params.n);
    ExperimentReport {
        experiment: "sat-prob".into(),
        params: *params,
        dimensions: setup.dims,
        trials: records.len(),
        estimate,
        stderr,
        theory: Theory {
            value: expected.min(1.0),
            formula: "min(1, d^n (relation_size/d^k)^m)".into(),
            asymptotic_window: Some([1.0 / 3.0, 0.5]),
        },
        aggregates: BTreeMap::from([("expected_solution_count".to_string(), expected)]),
        per_trial: keep.then_some(records),
        wall_time: Some(setup.start.elapsed().as_secs_f64()),
    }
}

fn mean_count_report(
    params: &Params,
    setup: &Setup,
    records: Vec<CountTrial>,
    keep: bool,
) -> ExperimentReport<CountTrial> {
    let xs: Vec<f64> = records.iter().map(|r| r.solution_count as f64).collect();
    let (estimate, stderr) = mean_and_stderr(&xs);
    ExperimentReport {
        experiment: "mean-count".into(),
        params: *params,
        dimensions: setup.dims,
        trials: records.len(),
        estimate,
        stderr,
        theory: Theory {
            value: setup.dims.expected_solution_count(params.n),
            formula: "d^n (relation_size/d^k)^m".into(),
            asymptotic_window: None,
        },
        aggregates: BTreeMap::new(),
        per_trial: keep.then_some(records),
        wall_time: Some(setup.start.elapsed().as_secs_f64()),
    }
}

/// Fraction of satisfiable instances, against the Markov bound
/// `min(1, E[#solutions])`.
pub fn estimate_sat_probability(
    params: &Params,
    trials: usize,
    options: &ExperimentOptions,
) -> Result<ExperimentReport<CountTrial>> {
    let setup = setup(params, trials, options)?;
    let records = count_trials(params, trials, options, &setup)?;
    Ok(sat_report(params, &setup, records, options.keep_trials))
}

/// Mean exact solution count, against the exact expectation.
pub fn estimate_mean_solution_count(
    params: &Params,
    trials: usize,
    options: &ExperimentOptions,
) -> Result<ExperimentReport<CountTrial>> {
    let setup = setup(params, trials, options)?;
    let records = count_trials(params, trials, options, &setup)?;
    Ok(mean_count_report(params, &setup, records, options.keep_trials))
}

/// Both of the above from a single pass over the same instances.
pub fn estimate_sat_and_mean(
    params: &Params,
    trials: usize,
    options: &ExperimentOptions,
) -> Result<(ExperimentReport<CountTrial>, ExperimentReport<CountTrial>)> {
    let setup = setup(params, trials, options)?;
    let records = count_trials(params, trials, options, &setup)?;
    let mean = mean_count_report(params, &setup, records.clone(), options.keep_trials);
    Ok((sat_report(params, &setup, records, options.keep_trials), mean))
}

fn choose_variable_value<R: Rng>(
    rng: &mut R,
    params: &Params,
    d: usize,
    options: &ExperimentOptions,
) -> Result<(usize, usize)> {
    let var = match options.fixed_variable {
        Some(x) if x >= params.n => {
            return Err(Error::IndexOutOfRange {
                what: "variable",
                index: x,
                bound: params.n,
            })
        }
        Some(x) => x,
        None => rng.random_range(0..params.n),
    };
    Ok((var, rng.random_range(0..d)))
}

/// Satisfiability of the subproblem obtained by fixing a random variable to a
/// random value. The theory value `E[#solutions] / d` is the exact expected
/// subproblem count and hence a Markov bound.
pub fn estimate_subproblem_sat_probability(
    params: &Params,
    trials: usize,
    options: &ExperimentOptions,
) -> Result<ExperimentReport<SubproblemTrial>> {
    let setup = setup(params, trials, options)?;
    let d = setup.dims.d;
    let records = run_trials(params, trials, options, |trial, seed| {
        let instance = options.generate(params, &setup.dims, seed)?;
        let mut rng = rng_for(seed, stream::SUBPROBLEM_CHOICE, 0);
        let (variable, value) = choose_variable_value(&mut rng, params, d, options)?;
        let solution_count = setup.oracle.count(&restrict(&instance, variable, value)?)?;
        Ok(SubproblemTrial {
            trial,
            seed,
            variable,
            value,
            solution_count,
            satisfiable: solution_count > 0,
        })
    })?;
    let xs: Vec<f64> = records.iter().map(|r| f64::from(u8::from(r.satisfiable))).collect();
    let (estimate, stderr) = mean_and_stderr(&xs);
    let counts: Vec<f64> = records.iter().map(|r| r.solution_count as f64).collect();
    let (mean_count, mean_count_stderr) = mean_and_stderr(&counts);
    let expected = setup.dims.expected_solution_count(params.n);
    Ok(ExperimentReport {
        experiment: "sub-prob".into(),
        params: *params,
        dimensions: setup.dims,
        trials,
        estimate,
        stderr,
        theory: Theory {
            value: expected / d as f64,
            formula: "d^(n-1) (relation_size/d^k)^m".into(),
            asymptotic_window: None,
        },
        aggregates: BTreeMap::from([
            ("expected_solution_count".to_string(), expected),
            ("mean_subproblem_count".to_string(), mean_count),
            ("mean_subproblem_count_stderr".to_string(), mean_count_stderr),
            ("reference_one_over_2d".to_string(), 1.0 / (2.0 * d as f64)),
        ]),
        per_trial: options.keep_trials.then_some(records),
        wall_time: Some(setup.start.elapsed().as_secs_f64()),
    })
}

/// Search-tree sizes with and without forward checking (lexicographic order,
/// first solution). The estimate is the mean forward-checking node count as a
/// fraction of the `d^n` leaves of full enumeration.
pub fn pruning_benchmark(
    params: &Params,
    trials: usize,
    options: &ExperimentOptions,
) -> Result<ExperimentReport<BenchTrial>> {
    let setup = setup(params, trials, options)?;
    let records = run_trials(params, trials, options, |trial, seed| {
        let instance = options.generate(params, &setup.dims, seed)?;
        let plain = solve_backtracking(
            &instance,
            SolverConfig {
                forward_checking: false,
                ..SolverConfig::default()
            },
        );
        let fc = solve_backtracking(&instance, SolverConfig::default());
        debug_assert_eq!(plain.status, fc.status);
        Ok(BenchTrial {
            trial,
            seed,
            satisfiable: fc.witness.is_some(),
            nodes_plain: plain.nodes_explored,
            nodes_forward_checking: fc.nodes_explored,
        })
    })?;
    let enumeration = (setup.dims.d as f64).powi(params.n as i32);
    let plain: Vec<f64> = records.iter().map(|r| r.nodes_plain as f64).collect();
    let fc: Vec<f64> = records.iter().map(|r| r.nodes_forward_checking as f64).collect();
    let ratios: Vec<f64> = fc.iter().map(|x| x / enumeration).collect();
    let (estimate, stderr) = mean_and_stderr(&ratios);
    let (mean_plain, _) = mean_and_stderr(&plain);
    let (mean_fc, _) = mean_and_stderr(&fc);
    let (median_plain, median_fc) = (median(&plain), median(&fc));
    Ok(ExperimentReport {
        experiment: "bench".into(),
        params: *params,
        dimensions: setup.dims,
        trials,
        estimate,
        stderr,
        theory: Theory {
            value: 1.0,
            formula: "full enumeration: d^n leaves".into(),
            asymptotic_window: None,
        },
        aggregates: BTreeMap::from([
            ("enumeration_nodes".to_string(), enumeration),
            ("mean_nodes_plain".to_string(), mean_plain),
            ("mean_nodes_forward_checking".to_string(), mean_fc),
            ("median_nodes_plain".to_string(), median_plain),
            ("median_nodes_forward_checking".to_string(), median_fc),
            ("median_ratio_plain".to_string(), median_plain / enumeration),
            ("median_ratio_forward_checking".to_string(), median_fc / enumeration),
        ]),
        per_trial: options.keep_trials.then_some(records),
        wall_time: Some(setup.start.elapsed().as_secs_f64()),
    })
}

/// How restriction reshapes the constraint set. The estimate is the mean
/// number of constraints that lose an arity, against `r k ln d`; the
/// aggregates carry the copied-constraint count against `r (n - k) ln d` and
/// the mean slice fraction against `relation_size / d^k`.
pub fn estimate_subproblem_profile(
    params: &Params,
    trials: usize,
    options: &ExperimentOptions,
) -> Result<ExperimentReport<ProfileTrial>> {
    require_trials(trials)?;
    let start = Instant::now();
    let dims = options.dimensions(params)?;
    let records = run_trials(params, trials, options, |trial, seed| {
        let instance = options.generate(params, &dims, seed)?;
        let mut rng = rng_for(seed, stream::SUBPROBLEM_CHOICE, 0);
        let (variable, _) = choose_variable_value(&mut rng, params, dims.d, options)?;
        let profile = subproblem_constraint_profile(&instance, variable)?;
        Ok(ProfileTrial {
            trial,
            seed,
            variable,
            projected: profile.projected,
            copied: profile.copied,
            mean_slice_fraction: profile.mean_slice_fraction(),
        })
    })?;
    let projected: Vec<f64> = records.iter().map(|r| r.projected as f64).collect();
    let copied: Vec<f64> = records.iter().map(|r| r.copied as f64).collect();
    let fractions: Vec<f64> = records.iter().filter_map(|r| r.mean_slice_fraction).collect();
    let (estimate, stderr) = mean_and_stderr(&projected);
    let (mean_copied, copied_stderr) = mean_and_stderr(&copied);
    let (mean_fraction, fraction_stderr) = mean_and_stderr(&fractions);
    let ln_d = (dims.d as f64).ln();
    let (n, k) = (params.n as f64, params.k as f64);
    Ok(ExperimentReport {
        experiment: "sub-profile".into(),
        params: *params,
        dimensions: dims,
        trials,
        estimate,
        stderr,
        theory: Theory {
            value: params.r * k * ln_d,
            formula: "r k ln d".into(),
            asymptotic_window: None,
        },
        aggregates: BTreeMap::from([
            ("mean_copied".to_string(), mean_copied),
            ("mean_copied_stderr".to_string(), copied_stderr),
            ("theory_copied".to_string(), params.r * (n - k) * ln_d),
            ("exact_projected".to_string(), dims.m as f64 * k / n),
            ("exact_copied".to_string(), dims.m as f64 * (n - k) / n),
            ("mean_slice_fraction".to_string(), mean_fraction),
            ("mean_slice_fraction_stderr".to_string(), fraction_stderr),
            ("theory_slice_fraction".to_string(), dims.satisfaction_probability()),
        ]),
        per_trial: options.keep_trials.then_some(records),
        wall_time: Some(start.elapsed().as_secs_f64()),
    })
}
