#![allow(dead_code)]

use rand::seq::index;
use rand::Rng;
use rblab::{Constraint, Instance, Relation};

/// Solution count by decoding every integer below `d^n` into an assignment
/// and testing each constraint through tuple membership.
pub fn brute_force_count(instance: &Instance) -> u64 {
    let (n, d) = (instance.n(), instance.d());
    let total = (d as u64).pow(n as u32);
    (0..total)
        .filter(|&code| {
            let mut rest = code;
            let values: Vec<usize> = (0..n)
                .map(|_| {
                    let v = (rest % d as u64) as usize;
                    rest /= d as u64;
                    v
                })
                .collect();
            instance.constraints().iter().all(|c| {
                let tuple: Vec<usize> = c.scope.iter().map(|&x| values[x]).collect();
                c.relation.contains(&tuple)
            })
        })
        .count() as u64
}

/// Arbitrary instance with `n <= max_n`, `d <= max_d`, arity `<= max_k` and
/// relations of any size, including empty and full.
pub fn random_instance<R: Rng>(rng: &mut R, max_n: usize, max_d: usize, max_k: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let d = rng.random_range(1..=max_d);
    let k = rng.random_range(1..=max_k.min(n));
    let m = rng.random_range(0..=6);
    let density: f64 = rng.random_range(0.2..1.0);
    let constraints = (0..m)
        .map(|_| {
            let scope = index::sample(rng, n, k).into_vec();
            let space = d.pow(k as u32);
            let rel = Relation::from_indices(k, d, (0..space).filter(|_| rng.random_bool(density))).unwrap();
            Constraint::new(scope, rel).unwrap()
        })
        .collect();
    Instance::handcrafted(n, d, k, constraints).unwrap()
}

/// Model RB instance with `n <= max_n` and `d <= max_d` drawn through the
/// generator with random parameters.
pub fn random_model_rb<R: Rng>(rng: &mut R, max_n: usize, max_d: usize) -> Instance {
    loop {
        let n = rng.random_range(2..=max_n);
        let alpha = rng.random_range(0.0..1.2);
        let r = rng.random_range(0.3..2.5);
        let p = rng.random_range(0.1..0.9);
        let k = rng.random_range(2..=n.min(3));
        let params = rblab::Params::new(n, alpha, r, p, k, rng.random());
        if let Ok(dims) = rblab::derive_dimensions(&params) {
            if dims.d <= max_d {
                return rblab::generate_instance(&params).unwrap();
            }
        }
    }
}

/// Parses DIMACS text into `(num_vars, clauses)`, checking the header.
pub fn parse_dimacs(text: &str) -> (usize, Vec<Vec<i32>>) {
    let mut header = None;
    let mut clauses = Vec::new();
    for line in text.lines() {
        if line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf ") {
            let nums: Vec<usize> = rest.split_whitespace().map(|t| t.parse().unwrap()).collect();
            header = Some((nums[0], nums[1]));
            continue;
        }
        let lits: Vec<i32> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(lits.last(), Some(&0), "clause line must end with 0");
        clauses.push(lits[..lits.len() - 1].to_vec());
    }
    let (vars, count) = header.expect("missing header");
    assert_eq!(count, clauses.len());
    (vars, clauses)
}

/// Model count of a clause list by walking every boolean assignment.
pub fn naive_model_count(num_vars: usize, clauses: &[Vec<i32>]) -> u64 {
    (0u64..1 << num_vars)
        .filter(|bits| {
            clauses.iter().all(|clause| {
                clause.iter().any(|&lit| {
                    let on = bits >> (lit.unsigned_abs() - 1) & 1 == 1;
                    on == (lit > 0)
                })
            })
        })
        .count() as u64
}
