//! Exhaustive counting oracle, instrumented backtracking search and the
//! restriction operator producing `(n - 1)`-variable subproblems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, Constraint, Instance, Relation};

/// Default guard on `d^n` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Assignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_count: Option<u64>,
    /// One node per variable-value extension attempt.
    pub nodes_explored: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariableOrder {
    #[default]
    Lexicographic,
    MinRemainingValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variable_order: VariableOrder,
    pub forward_checking: bool,
    pub count_all: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            variable_order: VariableOrder::Lexicographic,
            forward_checking: true,
            count_all: false,
        }
    }
}

impl SolverConfig {
    pub fn counting(forward_checking: bool) -> Self {
        SolverConfig {
            forward_checking,
            count_all: true,
            ..SolverConfig::default()
        }
    }
}

/// Whether every constraint permits the assignment's projection on its scope.
pub fn evaluate(instance: &Instance, assignment: &Assignment) -> Result<bool> {
    assignment.check_against(instance)?;
    Ok(instance.constraints().iter().all(|c| c.allows(assignment.values())))
}

/// Outcome of a flat enumeration of all `d^n` assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub count: u64,
    /// Lexicographically first solution.
    pub first: Option<Assignment>,
    pub nodes_explored: u64,
}

/// Ground-truth solution counter with a guard on `d^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExhaustiveOracle {
    /// Largest admissible `d^n`; `f64::INFINITY` disables the guard.
    pub limit: f64,
}

impl Default for ExhaustiveOracle {
    fn default() -> Self {
        ExhaustiveOracle {
            limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

impl ExhaustiveOracle {
    pub fn with_limit(limit: f64) -> Self {
        ExhaustiveOracle { limit }
    }

    pub fn check_guard(&self, instance: &Instance) -> Result<()> {
        let size = instance.assignment_space();
        if size > self.limit {
            return Err(Error::GuardExceeded {
                what: "assignment space d^n",
                size,
                limit: self.limit,
            });
        }
        Ok(())
    }

    pub fn count(&self, instance: &Instance) -> Result<u64> {
        Ok(self.enumerate(instance)?.count)
    }

    pub fn enumerate(&self, instance: &Instance) -> Result<Enumeration> {
        self.check_guard(instance)?;
        let (n, d) = (instance.n(), instance.d());
        let total = (d as u64).pow(n as u32);
        let mut values = vec![0usize; n];
        let mut count = 0u64;
        let mut first = None;
        for _ in 0..total {
            if instance.constraints().iter().all(|c| c.allows(&values)) {
                count += 1;
                if first.is_none() {
                    first = Some(Assignment(values.clone()));
                }
            }
            // odometer, last variable fastest
            for slot in values.iter_mut().rev() {
                *slot += 1;
                if *slot < d {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(Enumeration {
            count,
            first,
            nodes_explored: total,
        })
    }
}

/// Exact number of solutions under the default `d^n <= 10^9` guard.
pub fn count_solutions_exhaustive(instance: &Instance) -> Result<u64> {
    ExhaustiveOracle::default().count(instance)
}

pub fn solve_backtracking(instance: &Instance, config: SolverConfig) -> SolveResult {
    Search::new(instance, config).run()
}

struct Search<'a> {
    instance: &'a Instance,
    config: SolverConfig,
    var_constraints: Vec<Vec<usize>>,
    unassigned_in: Vec<usize>,
    values: Vec<usize>,
    assigned: Vec<bool>,
    domains: Vec<Vec<bool>>,
    domain_len: Vec<usize>,
    trail: Vec<(usize, usize)>,
    nodes: u64,
    count: u64,
    witness: Option<Vec<usize>>,
}

impl<'a> Search<'a> {
    fn new(instance: &'a Instance, config: SolverConfig) -> Self {
        let (n, d) = (instance.n(), instance.d());
        let mut var_constraints = vec![Vec::new(); n];
        for (ci, c) in instance.constraints().iter().enumerate() {
            for &x in &c.scope {
                var_constraints[x].push(ci);
            }
        }
        Search {
            instance,
            config,
            var_constraints,
            unassigned_in: instance.constraints().iter().map(Constraint::arity).collect(),
            values: vec![0; n],
            assigned: vec![false; n],
            domains: vec![vec![true; d]; n],
            domain_len: vec![d; n],
            trail: Vec::new(),
            nodes: 0,
            count: 0,
            witness: None,
        }
    }

    fn run(mut self) -> SolveResult {
        let trivially_unsat = self
            .instance
            .constraints()
            .iter()
            .any(|c| c.arity() == 0 && c.relation.is_empty());
        let root_ok = !trivially_unsat && (!self.config.forward_checking || self.filter_unary());
        if root_ok {
            self.descend(0);
        }
        SolveResult {
            status: if self.count > 0 { Status::Sat } else { Status::Unsat },
            witness: self.witness.map(Assignment),
            solution_count: self.config.count_all.then_some(self.count),
            nodes_explored: self.nodes,
        }
    }

    fn filter_unary(&mut self) -> bool {
        let instance = self.instance;
        for c in instance.constraints().iter().filter(|c| c.arity() == 1) {
            let x = c.scope[0];
            for v in 0..instance.d() {
                if self.domains[x][v] && !c.relation.contains_index(v) {
                    self.domains[x][v] = false;
                    self.domain_len[x] -= 1;
                }
            }
            if self.domain_len[x] == 0 {
                return false;
            }
        }
        true
    }

    fn select_variable(&self, depth: usize) -> usize {
        match self.config.variable_order {
            // variables are assigned in index order, so the depth is the next one
            VariableOrder::Lexicographic => depth,
            VariableOrder::MinRemainingValues => (0..self.instance.n())
                .filter(|&x| !self.assigned[x])
                .min_by_key(|&x| self.domain_len[x])
                .expect("an unassigned variable exists below full depth"),
        }
    }

    /// Returns `true` when the search should stop.
    fn descend(&mut self, depth: usize) -> bool {
        if depth == self.instance.n() {
            self.count += 1;
            if self.witness.is_none() {
                self.witness = Some(self.values.clone());
            }
            return !self.config.count_all;
        }
        let var = self.select_variable(depth);
        self.assigned[var] = true;
        for &ci in &self.var_constraints[var] {
            self.unassigned_in[ci] -= 1;
        }
        let mut stop = false;
        for v in 0..self.instance.d() {
            if self.config.forward_checking && !self.domains[var][v] {
                continue;
            }
            self.nodes += 1;
            self.values[var] = v;
            let mark = self.trail.len();
            if self.consistent(var) && (!self.config.forward_checking || self.propagate(var)) {
                stop = self.descend(depth + 1);
            }
            self.undo(mark);
            if stop {
                break;
            }
        }
        for &ci in &self.var_constraints[var] {
            self.unassigned_in[ci] += 1;
        }
        self.assigned[var] = false;
        stop
    }

    fn consistent(&self, var: usize) -> bool {
        let constraints = self.instance.constraints();
        self.var_constraints[var]
            .iter()
            .filter(|&&ci| self.unassigned_in[ci] == 0)
            .all(|&ci| constraints[ci].allows(&self.values))
    }

    /// Forward checking: prune the last open variable of every constraint on
    /// `var`. Returns `false` on a domain wipeout.
    fn propagate(&mut self, var: usize) -> bool {
        let instance = self.instance;
        let d = instance.d();
        for &ci in &self.var_constraints[var] {
            if self.unassigned_in[ci] != 1 {
                continue;
            }
            let c = &instance.constraints()[ci];
            let mut base = 0usize;
            let mut open = (0, 0);
            for (pos, &x) in c.scope.iter().enumerate() {
                let stride = c.relation.stride(pos);
                if self.assigned[x] {
                    base += self.values[x] * stride;
                } else {
                    open = (x, stride);
                }
            }
            let (y, stride) = open;
            for w in 0..d {
                if self.domains[y][w] && !c.relation.contains_index(base + w * stride) {
                    self.domains[y][w] = false;
                    self.domain_len[y] -= 1;
                    self.trail.push((y, w));
                }
            }
            if self.domain_len[y] == 0 {
                return false;
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        for (y, w) in self.trail.drain(mark..) {
            self.domains[y][w] = true;
            self.domain_len[y] += 1;
        }
    }
}

fn check_var_value(instance: &Instance, var: usize, value: Option<usize>) -> Result<()> {
    if var >= instance.n() {
        return Err(Error::IndexOutOfRange {
            what: "variable",
            index: var,
            bound: instance.n(),
        });
    }
    if let Some(v) = value.filter(|&v| v >= instance.d()) {
        return Err(Error::IndexOutOfRange {
            what: "value",
            index: v,
            bound: instance.d(),
        });
    }
    Ok(())
}

/// Index of `idx` with coordinate `pos` removed, and that coordinate's value.
fn split_index(relation: &Relation, idx: usize, pos: usize) -> (usize, usize) {
    let stride = relation.stride(pos);
    let d = relation.domain_size();
    let value = (idx / stride) % d;
    let reduced = (idx / (stride * d)) * stride + idx % stride;
    (reduced, value)
}

/// Subproblem obtained by fixing `var = value`.
///
/// Variables above `var` shift down by one. A constraint on `var` keeps the
/// slice of its relation whose `var` coordinate equals `value`, with that
/// coordinate dropped; an empty slice stays behind as an unsatisfiable
/// constraint with an empty relation.
pub fn restrict(instance: &Instance, var: usize, value: usize) -> Result<Instance> {
    check_var_value(instance, var, Some(value))?;
    let shift = |x: usize| if x > var { x - 1 } else { x };
    let constraints = instance
        .constraints()
        .iter()
        .map(|c| {
            let scope: Vec<usize> = c.scope.iter().filter(|&&x| x != var).map(|&x| shift(x)).collect();
            let relation = match c.position_of(var) {
                None => c.relation.clone(),
                Some(pos) => Relation::from_indices(
                    c.arity() - 1,
                    instance.d(),
                    c.relation
                        .indices()
                        .map(|idx| split_index(&c.relation, idx, pos))
                        .filter(|&(_, v)| v == value)
                        .map(|(reduced, _)| reduced),
                )?,
            };
            Constraint::new(scope, relation)
        })
        .collect::<Result<Vec<_>>>()?;
    instance.derive(instance.n() - 1, constraints, format!("restrict x{var}={value}"))
}

/// What [`restrict`] would do to the constraints when fixing `var`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubproblemProfile {
    /// Constraints mentioning `var`; they lose one arity.
    pub projected: usize,
    /// Constraints copied unchanged.
    pub copied: usize,
    /// For each projected constraint (in instance order), the slice size for
    /// every value of `var`.
    pub slice_sizes: Vec<Vec<usize>>,
    /// `d^(arity - 1)` of each projected constraint.
    pub slice_spaces: Vec<usize>,
}

impl SubproblemProfile {
    /// Mean of `slice size / d^(arity - 1)` over projected constraints and
    /// values; `None` when nothing is projected.
    pub fn mean_slice_fraction(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut cells = 0usize;
        for (sizes, &space) in self.slice_sizes.iter().zip(&self.slice_spaces) {
            for &s in sizes {
                sum += s as f64 / space as f64;
                cells += 1;
            }
        }
        (cells > 0).then(|| sum / cells as f64)
    }
}

pub fn subproblem_constraint_profile(instance: &Instance, var: usize) -> Result<SubproblemProfile> {
    check_var_value(instance, var, None)?;
    let d = instance.d();
    let mut profile = SubproblemProfile {
        projected: 0,
        copied: 0,
        slice_sizes: Vec::new(),
        slice_spaces: Vec::new(),
    };
    for c in instance.constraints() {
        match c.position_of(var) {
            None => profile.copied += 1,
            Some(pos) => {
                profile.projected += 1;
                let mut sizes = vec![0usize; d];
                for idx in c.relation.indices() {
                    sizes[split_index(&c.relation, idx, pos).1] += 1;
                }
                profile.slice_sizes.push(sizes);
                profile.slice_spaces.push(c.relation.space() / d);
            }
        }
    }
    Ok(profile)
}
