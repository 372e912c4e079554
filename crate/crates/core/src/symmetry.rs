//! The symmetry mapping on binary constraints and the satisfiability-flip
//! experiment built on it.
//!
//! A quadruple `(u1, u2, v1, v2)` on a binary constraint with relation `R`
//! requires `(u1, v1), (u2, v2)` in `R` and `(u1, v2), (u2, v1)` outside it.
//! The default [`MappingMode::Local`] rewiring replaces the first pair by the
//! second, which keeps every row and column degree of `R`.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{run_trials, ExperimentOptions};
use crate::instance::{Instance, Relation};
use crate::model::{Dimensions, Params};
use crate::solver::evaluate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetryQuadruple {
    pub constraint_index: usize,
    /// Values of scope position 0.
    pub u1: usize,
    pub u2: usize,
    /// Values of scope position 1.
    pub v1: usize,
    pub v2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingMode {
    /// `R' = R - {(u1,v1), (u2,v2)} + {(u1,v2), (u2,v1)}`.
    #[default]
    Local,
    /// Exchange the whole rows of `u1` and `u2`.
    RowSwap,
}

fn binary_relation(instance: &Instance, constraint_index: usize) -> Result<&Relation> {
    if instance.k() != 2 {
        return Err(Error::NotBinary(instance.k()));
    }
    let c = instance
        .constraints()
        .get(constraint_index)
        .ok_or(Error::IndexOutOfRange {
            what: "constraint",
            index: constraint_index,
            bound: instance.constraints().len(),
        })?;
    if c.arity() != 2 {
        return Err(Error::NotBinary(c.arity()));
    }
    Ok(&c.relation)
}

fn pattern_holds(rel: &Relation, u1: usize, u2: usize, v1: usize, v2: usize) -> bool {
    let d = rel.domain_size();
    let has = |u: usize, v: usize| rel.contains_index(u * d + v);
    u1 != u2 && v1 != v2 && has(u1, v1) && has(u2, v2) && !has(u1, v2) && !has(u2, v1)
}

/// First quadruple on the constraint in lexicographic order: over `(u1, v1)`
/// in `R` (or the anchor alone), then over `(u2, v2)`.
pub fn find_symmetry_quadruple(
    instance: &Instance,
    constraint_index: usize,
    anchor: Option<(usize, usize)>,
) -> Result<Option<SymmetryQuadruple>> {
    let rel = binary_relation(instance, constraint_index)?;
    let d = instance.d();
    let anchors: Vec<(usize, usize)> = match anchor {
        Some((u1, v1)) => {
            if u1 >= d || v1 >= d {
                return Err(Error::IndexOutOfRange {
                    what: "value",
                    index: u1.max(v1),
                    bound: d,
                });
            }
            vec![(u1, v1)]
        }
        None => rel.indices().map(|idx| (idx / d, idx % d)).collect(),
    };
    for (u1, v1) in anchors {
        for u2 in 0..d {
            for v2 in 0..d {
                if pattern_holds(rel, u1, u2, v1, v2) {
                    return Ok(Some(SymmetryQuadruple {
                        constraint_index,
                        u1,
                        u2,
                        v1,
                        v2,
                    }));
                }
            }
        }
    }
    Ok(None)
}

pub fn validate_quadruple(instance: &Instance, quad: &SymmetryQuadruple) -> Result<()> {
    let rel = binary_relation(instance, quad.constraint_index)?;
    let d = instance.d();
    if [quad.u1, quad.u2, quad.v1, quad.v2].iter().any(|&v| v >= d) {
        return Err(Error::InvalidQuadruple(format!("{quad:?} has values outside [0, {d})")));
    }
    if !pattern_holds(rel, quad.u1, quad.u2, quad.v1, quad.v2) {
        return Err(Error::InvalidQuadruple(format!(
            "{quad:?} does not match the required membership pattern"
        )));
    }
    Ok(())
}

pub fn apply_symmetry_mapping(instance: &Instance, quad: &SymmetryQuadruple) -> Result<Instance> {
    apply_symmetry_mapping_with(instance, quad, MappingMode::Local)
}

pub fn apply_symmetry_mapping_with(
    instance: &Instance,
    quad: &SymmetryQuadruple,
    mode: MappingMode,
) -> Result<Instance> {
    validate_quadruple(instance, quad)?;
    let d = instance.d();
    let &SymmetryQuadruple {
        constraint_index,
        u1,
        u2,
        v1,
        v2,
    } = quad;
    let mut constraints = instance.constraints().to_vec();
    let rel = &mut constraints[constraint_index].relation;
    match mode {
        MappingMode::Local => {
            rel.remove_index(u1 * d + v1);
            rel.remove_index(u2 * d + v2);
            rel.insert_index(u1 * d + v2);
            rel.insert_index(u2 * d + v1);
        }
        MappingMode::RowSwap => {
            for v in 0..d {
                let (a, b) = (u1 * d + v, u2 * d + v);
                let (in_a, in_b) = (rel.contains_index(a), rel.contains_index(b));
                if in_a != in_b {
                    if in_a {
                        rel.remove_index(a);
                        rel.insert_index(b);
                    } else {
                        rel.remove_index(b);
                        rel.insert_index(a);
                    }
                }
            }
        }
    }
    let step = format!(
        "symmetry-map {} c{constraint_index} u1={u1} u2={u2} v1={v1} v2={v2}",
        match mode {
            MappingMode::Local => "local",
            MappingMode::RowSwap => "row-swap",
        }
    );
    instance.derive(instance.n(), constraints, step)
}

/// Row degrees (tuples per first coordinate) and column degrees of a binary
/// relation.
pub fn degrees(rel: &Relation) -> (Vec<usize>, Vec<usize>) {
    let d = rel.domain_size();
    let mut rows = vec![0; d];
    let mut cols = vec![0; d];
    for idx in rel.indices() {
        rows[idx / d] += 1;
        cols[idx % d] += 1;
    }
    (rows, cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipDirection {
    /// Exactly one solution; the mapping is anchored at it.
    Forward,
    /// No solution; the mapping is anchored at the first candidate.
    Reverse,
    /// Two or more solutions; not mapped.
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipTrial {
    pub trial: usize,
    pub seed: u64,
    pub pre_count: u64,
    pub direction: FlipDirection,
    pub quadruple_found: bool,
    pub constraint_index: Option<usize>,
    pub post_count: Option<u64>,
    /// Forward trials only: whether the original solution is gone.
    pub anchored_solution_removed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipReport {
    pub params: Params,
    pub dimensions: Dimensions,
    pub trials: usize,
    pub mode: MappingMode,
    pub unique_instances: usize,
    pub multi_solution_excluded: usize,
    pub unsat_instances: usize,
    pub forward_no_quadruple: usize,
    pub forward_became_unsat: usize,
    /// `forward_became_unsat / unique_instances`.
    pub forward_unsat_fraction: Option<f64>,
    /// `forward_no_quadruple / unique_instances`.
    pub forward_no_quadruple_fraction: Option<f64>,
    /// Mean solution count after mapping, over forward trials with a quadruple.
    pub mean_post_count: Option<f64>,
    pub anchored_eliminations: usize,
    pub reverse_no_quadruple: usize,
    pub reverse_became_sat: usize,
    /// `reverse_became_sat / unsat_instances`.
    pub reverse_sat_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<FlipTrial>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl FlipReport {
    pub fn without_timing(mut self) -> Self {
        self.wall_time = None;
        self
    }

    /// The report without per-trial records.
    pub fn summary(mut self) -> Self {
        self.per_trial = None;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// One row per trial, then an `aggregate,name=value,..` footer row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(out);
        for row in self.per_trial.iter().flatten() {
            writer.serialize(row)?;
        }
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        writer.write_record([
            "aggregate".to_string(),
            format!("trials={}", self.trials),
            format!("unique_instances={}", self.unique_instances),
            format!("multi_solution_excluded={}", self.multi_solution_excluded),
            format!("unsat_instances={}", self.unsat_instances),
            format!("forward_unsat_fraction={}", opt(self.forward_unsat_fraction)),
            format!(
                "forward_no_quadruple_fraction={}",
                opt(self.forward_no_quadruple_fraction)
            ),
            format!("mean_post_count={}", opt(self.mean_post_count)),
            format!("anchored_eliminations={}", self.anchored_eliminations),
            format!("reverse_sat_fraction={}", opt(self.reverse_sat_fraction)),
        ])?;
        writer.flush()?;
        Ok(())
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Measures how often the symmetry mapping flips satisfiability.
///
/// Instances with exactly one solution are mapped at that solution's
/// projection on the first constraint (in index order) admitting an anchored
/// quadruple; unsatisfiable instances are mapped at the first quadruple of
/// the first constraint admitting one. Both are re-counted exactly.
pub fn flip_experiment(params: &Params, trials: usize, options: &ExperimentOptions) -> Result<FlipReport> {
    if params.k != 2 {
        return Err(Error::NotBinary(params.k));
    }
    let start = Instant::now();
    let dims = options.dimensions(params)?;
    let oracle = options.oracle();
    options.check_guard(params, &dims)?;

    let records = run_trials(params, trials, options, |trial, seed| {
        let instance = options.generate(params, &dims, seed)?;
        let before = oracle.enumerate(&instance)?;
        let mut record = FlipTrial {
            trial,
            seed,
            pre_count: before.count,
            direction: FlipDirection::Excluded,
            quadruple_found: false,
            constraint_index: None,
            post_count: None,
            anchored_solution_removed: None,
        };
        let solution = match before.count {
            0 => {
                record.direction = FlipDirection::Reverse;
                None
            }
            1 => {
                record.direction = FlipDirection::Forward;
                before.first
            }
            _ => return Ok(record),
        };
        for ci in 0..instance.constraints().len() {
            let anchor = solution.as_ref().map(|s| {
                let scope = &instance.constraints()[ci].scope;
                (s.values()[scope[0]], s.values()[scope[1]])
            });
            if let Some(quad) = find_symmetry_quadruple(&instance, ci, anchor)? {
                let image = apply_symmetry_mapping_with(&instance, &quad, options.mapping_mode)?;
                record.quadruple_found = true;
                record.constraint_index = Some(ci);
                record.post_count = Some(oracle.count(&image)?);
                if let Some(s) = &solution {
                    record.anchored_solution_removed = Some(!evaluate(&image, s)?);
                }
                break;
            }
        }
        Ok(record)
    })?;

    let count = |f: &dyn Fn(&FlipTrial) -> bool| records.iter().filter(|r| f(r)).count();
    let forward = |r: &FlipTrial| r.direction == FlipDirection::Forward;
    let reverse = |r: &FlipTrial| r.direction == FlipDirection::Reverse;
    let unique_instances = count(&forward);
    let unsat_instances = count(&reverse);
    let forward_no_quadruple = count(&|r| forward(r) && !r.quadruple_found);
    let forward_became_unsat = count(&|r| forward(r) && r.post_count == Some(0));
    let reverse_no_quadruple = count(&|r| reverse(r) && !r.quadruple_found);
    let reverse_became_sat = count(&|r| reverse(r) && r.post_count.is_some_and(|c| c > 0));
    let mapped_posts: Vec<u64> = records
        .iter()
        .filter(|r| forward(r))
        .filter_map(|r| r.post_count)
        .collect();
    let mean_post_count =
        (!mapped_posts.is_empty()).then(|| mapped_posts.iter().sum::<u64>() as f64 / mapped_posts.len() as f64);

    Ok(FlipReport {
        params: *params,
        dimensions: dims,
        trials,
        mode: options.mapping_mode,
        unique_instances,
        multi_solution_excluded: trials - unique_instances - unsat_instances,
        unsat_instances,
        forward_no_quadruple,
        forward_became_unsat,
        forward_unsat_fraction: ratio(forward_became_unsat, unique_instances),
        forward_no_quadruple_fraction: ratio(forward_no_quadruple, unique_instances),
        mean_post_count,
        anchored_eliminations: count(&|r| r.anchored_solution_removed == Some(true)),
        reverse_no_quadruple,
        reverse_became_sat,
        reverse_sat_fraction: ratio(reverse_became_sat, unsat_instances),
        per_trial: options.keep_trials.then_some(records),
        wall_time: Some(start.elapsed().as_secs_f64()),
    })
}
