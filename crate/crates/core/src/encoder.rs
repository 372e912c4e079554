//! Direct CSP-to-CNF encoding and DIMACS output.
//!
//! Boolean variable `1 + x*d + v` stands for "CSP variable `x` takes value
//! `v`". Clauses, in order: one at-least-one clause per CSP variable, the
//! pairwise at-most-one clauses per CSP variable, then one conflict clause per
//! forbidden tuple of each constraint (constraints in instance order, tuples
//! in lexicographic order). CNF models are in bijection with CSP solutions.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Guard on the number of boolean variables for model enumeration.
pub const MAX_ENUMERATED_CNF_VARS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
    /// Emitted as `c` lines ahead of the header.
    pub comments: Vec<String>,
}

impl CnfFormula {
    pub fn validate(&self) -> Result<()> {
        for (i, clause) in self.clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(Error::MalformedInstance(format!("clause {i} is empty")));
            }
            for &lit in clause {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > self.num_vars {
                    return Err(Error::MalformedInstance(format!(
                        "clause {i} has literal {lit} outside 1..={}",
                        self.num_vars
                    )));
                }
                if clause.contains(&-lit) {
                    return Err(Error::MalformedInstance(format!(
                        "clause {i} contains {lit} and its negation"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn literal(x: usize, v: usize, d: usize) -> i32 {
    (1 + x * d + v) as i32
}

pub fn encode_direct(instance: &Instance) -> Result<CnfFormula> {
    let (n, d) = (instance.n(), instance.d());
    let num_vars = n as u64 * d as u64;
    if num_vars > i32::MAX as u64 {
        return Err(Error::LiteralOverflow(num_vars));
    }
    let mut clauses: Vec<Vec<i32>> = (0..n).map(|x| (0..d).map(|v| literal(x, v, d)).collect()).collect();
    for x in 0..n {
        for v in 0..d {
            for w in v + 1..d {
                clauses.push(vec![-literal(x, v, d), -literal(x, w, d)]);
            }
        }
    }
    for c in instance.constraints() {
        if c.arity() == 0 {
            if c.relation.is_empty() {
                // zero-arity contradiction left behind by restriction
                if n == 0 {
                    return Err(Error::MalformedInstance(
                        "cannot encode a contradiction without variables".into(),
                    ));
                }
                clauses.push(vec![1]);
                clauses.push(vec![-1]);
            }
            continue;
        }
        for idx in (0..c.relation.space()).filter(|&idx| !c.relation.contains_index(idx)) {
            let tuple = c.relation.tuple_of(idx);
            clauses.push(c.scope.iter().zip(&tuple).map(|(&x, &v)| -literal(x, v, d)).collect());
        }
    }

    let mut comments = vec![
        "direct encoding".to_string(),
        format!("literal(x, v) = 1 + x*{d} + v"),
        format!(
            "csp n={n} d={d} k={} constraints={}",
            instance.k(),
            instance.constraints().len()
        ),
    ];
    let prov = instance.provenance();
    if let Some(p) = &prov.params {
        comments.push(format!(
            "params n={} alpha={} r={} p={} k={} seed={}",
            p.n, p.alpha, p.r, p.p, p.k, p.seed
        ));
    }
    comments.extend(prov.derivation.iter().map(|step| format!("derived {step}")));
    Ok(CnfFormula {
        num_vars: num_vars as usize,
        clauses,
        comments,
    })
}

/// Expected clause count of [`encode_direct`] for instances without
/// zero-arity constraints: `n + n C(d,2) + sum_i (d^k_i - |R_i|)`.
pub fn expected_clause_count(instance: &Instance) -> usize {
    let (n, d) = (instance.n(), instance.d());
    n + n * d * (d - 1) / 2
        + instance
            .constraints()
            .iter()
            .map(|c| c.relation.space() - c.relation.len())
            .sum::<usize>()
}

pub fn write_dimacs(cnf: &CnfFormula) -> String {
    let mut out = String::new();
    for comment in &cnf.comments {
        let _ = writeln!(out, "c {comment}");
    }
    let _ = writeln!(out, "p cnf {} {}", cnf.num_vars, cnf.clauses.len());
    for clause in &cnf.clauses {
        for lit in clause {
            let _ = write!(out, "{lit} ");
        }
        out.push_str("0\n");
    }
    out
}

pub fn count_cnf_models_exhaustive(cnf: &CnfFormula) -> Result<u64> {
    if cnf.num_vars > MAX_ENUMERATED_CNF_VARS {
        return Err(Error::GuardExceeded {
            what: "boolean variable count",
            size: cnf.num_vars as f64,
            limit: MAX_ENUMERATED_CNF_VARS as f64,
        });
    }
    // clause as (positive mask, negative mask) over bit (var - 1)
    let masks: Vec<(u32, u32)> = cnf
        .clauses
        .iter()
        .map(|clause| {
            clause.iter().fold((0, 0), |(pos, neg), &lit| {
                let bit = 1u32 << (lit.unsigned_abs() - 1);
                if lit > 0 {
                    (pos | bit, neg)
                } else {
                    (pos, neg | bit)
                }
            })
        })
        .collect();
    let models = (0u32..1 << cnf.num_vars)
        .filter(|&m| masks.iter().all(|&(pos, neg)| m & pos != 0 || !m & neg != 0))
        .count();
    Ok(models as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Constraint, Relation};

    #[test]
    fn single_variable_two_values() {
        let inst = Instance::handcrafted(1, 2, 2, vec![]).unwrap();
        let cnf = encode_direct(&inst).unwrap();
        assert_eq!(cnf.num_vars, 2);
        assert_eq!(cnf.clauses, vec![vec![1, 2], vec![-1, -2]]);
        assert_eq!(count_cnf_models_exhaustive(&cnf).unwrap(), 2);
        let text = write_dimacs(&cnf);
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('c')).collect();
        assert_eq!(body, vec!["p cnf 2 2", "1 2 0", "-1 -2 0"]);
    }

    #[test]
    fn full_relation_adds_no_conflicts() {
        let full = Constraint::new(vec![0, 1], Relation::full(2, 3).unwrap()).unwrap();
        let inst = Instance::handcrafted(2, 3, 2, vec![full]).unwrap();
        let cnf = encode_direct(&inst).unwrap();
        assert_eq!(cnf.clauses.len(), 2 + 2 * 3);
        assert_eq!(cnf.clauses.len(), expected_clause_count(&inst));
    }

    #[test]
    fn empty_formula_header() {
        let cnf = CnfFormula {
            num_vars: 5,
            ..Default::default()
        };
        assert_eq!(write_dimacs(&cnf), "p cnf 5 0\n");
        assert_eq!(count_cnf_models_exhaustive(&cnf).unwrap(), 32);
    }

    #[test]
    fn model_counting_basics() {
        let unit = CnfFormula {
            num_vars: 2,
            clauses: vec![vec![-2]],
            comments: vec![],
        };
        assert_eq!(count_cnf_models_exhaustive(&unit).unwrap(), 2);
        let big = CnfFormula {
            num_vars: 25,
            ..Default::default()
        };
        assert!(count_cnf_models_exhaustive(&big).is_err());
    }

    #[test]
    fn validation() {
        let ok = CnfFormula {
            num_vars: 2,
            clauses: vec![vec![1, -2]],
            comments: vec![],
        };
        assert!(ok.validate().is_ok());
        for bad in [vec![], vec![3], vec![1, -1], vec![0]] {
            let cnf = CnfFormula {
                num_vars: 2,
                clauses: vec![bad],
                comments: vec![],
            };
            assert!(cnf.validate().is_err());
        }
    }

    #[test]
    fn zero_arity_contradiction_encodes_unsat() {
        let empty = Constraint::new(vec![], Relation::empty(0, 2).unwrap()).unwrap();
        let inst = Instance::handcrafted(1, 2, 2, vec![empty]).unwrap();
        let cnf = encode_direct(&inst).unwrap();
        cnf.validate().unwrap();
        assert_eq!(count_cnf_models_exhaustive(&cnf).unwrap(), 0);
    }
}
