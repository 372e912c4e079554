mod common;

use proptest::prelude::*;
use rblab::experiments::{Counter, ExperimentOptions};
use rblab::instance::Variant;
use rblab::solver::ExhaustiveOracle;
use rblab::symmetry::{
    apply_symmetry_mapping, apply_symmetry_mapping_with, degrees, find_symmetry_quadruple, flip_experiment,
    FlipDirection, MappingMode, SymmetryQuadruple,
};
use rblab::{count_solutions_exhaustive, evaluate, generate_instance, Error, Instance, Params};

/// Checks the mapping laws for the first quadruple of every constraint.
fn check_mapping_laws(instance: &Instance) -> usize {
    let mut applied = 0;
    for ci in 0..instance.constraints().len() {
        let Some(quad) = find_symmetry_quadruple(instance, ci, None).unwrap() else {
            continue;
        };
        let image = apply_symmetry_mapping(instance, &quad).unwrap();
        let (before, after) = (&instance.constraints()[ci].relation, &image.constraints()[ci].relation);
        assert_eq!(before.len(), after.len());
        assert_eq!(degrees(before), degrees(after));
        for (j, (a, b)) in instance.constraints().iter().zip(image.constraints()).enumerate() {
            if j != ci {
                assert_eq!(a, b);
            }
        }
        let inverse = SymmetryQuadruple {
            v1: quad.v2,
            v2: quad.v1,
            ..quad
        };
        let back = apply_symmetry_mapping(&image, &inverse).unwrap();
        assert_eq!(back.constraints(), instance.constraints());
        applied += 1;
    }
    applied
}

#[test]
fn mapping_laws_on_generated_instances() {
    let mut applied = 0;
    for seed in 0..200 {
        let params = Params::calibrated(8, 0.5, 0.5, 2, seed).unwrap();
        applied += check_mapping_laws(&generate_instance(&params).unwrap());
        let symmetric = rblab::generate_instance_symmetric(&params.with_seed(seed + 1000)).unwrap();
        applied += check_mapping_laws(&symmetric);
    }
    assert!(applied > 1000);
}

#[test]
fn anchored_elimination_on_unique_solution_fixtures() {
    let oracle = ExhaustiveOracle::default();
    let mut fixtures = 0;
    let mut seed = 0;
    while fixtures < 100 {
        let params = Params::calibrated(8, 0.5, 0.5, 2, seed).unwrap();
        seed += 1;
        let instance = generate_instance(&params).unwrap();
        let enumeration = oracle.enumerate(&instance).unwrap();
        if enumeration.count != 1 {
            continue;
        }
        let sigma = enumeration.first.unwrap();
        for (ci, c) in instance.constraints().iter().enumerate() {
            let anchor = (sigma.values()[c.scope[0]], sigma.values()[c.scope[1]]);
            if let Some(quad) = find_symmetry_quadruple(&instance, ci, Some(anchor)).unwrap() {
                for mode in [MappingMode::Local, MappingMode::RowSwap] {
                    let image = apply_symmetry_mapping_with(&instance, &quad, mode).unwrap();
                    assert!(!evaluate(&image, &sigma).unwrap());
                }
                fixtures += 1;
                break;
            }
        }
    }
}

#[test]
fn invalid_quadruples_are_rejected() {
    let instance = generate_instance(&Params::calibrated(8, 0.5, 0.5, 2, 4).unwrap()).unwrap();
    let quad = (0..instance.constraints().len())
        .find_map(|ci| find_symmetry_quadruple(&instance, ci, None).unwrap())
        .unwrap();
    let swapped = SymmetryQuadruple {
        v1: quad.v2,
        v2: quad.v1,
        ..quad
    };
    assert!(matches!(
        apply_symmetry_mapping(&instance, &swapped),
        Err(Error::InvalidQuadruple(_))
    ));
    let ternary = generate_instance(&Params::new(5, 0.5, 1.0, 0.5, 3, 0)).unwrap();
    assert!(matches!(
        find_symmetry_quadruple(&ternary, 0, None),
        Err(Error::NotBinary(3))
    ));
}

#[test]
fn flip_fixture_at_n8() {
    let params = Params::calibrated(8, 0.5, 0.5, 2, 1).unwrap();
    let report = flip_experiment(&params, 2000, &ExperimentOptions::default()).unwrap();
    assert_eq!(report.unique_instances, 97);
    assert_eq!(report.forward_became_unsat, 56);
    assert_eq!(report.unsat_instances, 1656);
    assert_eq!(report.reverse_became_sat, 65);
    assert_eq!(
        report.unique_instances + report.unsat_instances + report.multi_solution_excluded,
        report.trials
    );
    assert_eq!(
        report.anchored_eliminations,
        report.unique_instances - report.forward_no_quadruple
    );
    for t in report.per_trial.as_ref().unwrap() {
        let instance = generate_instance(&params.with_seed(t.seed)).unwrap();
        assert_eq!(t.pre_count, count_solutions_exhaustive(&instance).unwrap());
        let expected = match t.pre_count {
            0 => FlipDirection::Reverse,
            1 => FlipDirection::Forward,
            _ => FlipDirection::Excluded,
        };
        assert_eq!(t.direction, expected);
        if t.direction == FlipDirection::Forward && t.quadruple_found {
            assert_eq!(t.anchored_solution_removed, Some(true));
        }
    }
}

#[test]
fn flip_counters_agree() {
    let params = Params::calibrated(8, 0.5, 0.5, 2, 9).unwrap();
    let run = |counter| {
        let options = ExperimentOptions {
            counter,
            ..ExperimentOptions::default()
        };
        flip_experiment(&params, 600, &options).unwrap().without_timing()
    };
    assert_eq!(
        run(Counter::Exhaustive).to_json().unwrap(),
        run(Counter::Backtracking).to_json().unwrap()
    );
}

#[test]
fn flip_supports_row_swap_and_symmetric_instances() {
    let params = Params::calibrated(6, 0.5, 0.5, 2, 3).unwrap();
    let options = ExperimentOptions {
        mapping_mode: MappingMode::RowSwap,
        variant: Variant::Symmetric,
        ..ExperimentOptions::default()
    };
    let report = flip_experiment(&params, 300, &options).unwrap();
    assert_eq!(report.mode, MappingMode::RowSwap);
    assert_eq!(
        report.anchored_eliminations,
        report.unique_instances - report.forward_no_quadruple
    );
    let ternary = Params::new(6, 0.5, 1.0, 0.5, 3, 0);
    assert!(matches!(
        flip_experiment(&ternary, 10, &ExperimentOptions::default()),
        Err(Error::NotBinary(3))
    ));
}

#[test]
fn flip_csv_has_one_row_per_trial() {
    let params = Params::calibrated(6, 0.5, 0.5, 2, 5).unwrap();
    let report = flip_experiment(&params, 50, &ExperimentOptions::default()).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 52);
    assert!(lines[51].starts_with("aggregate,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mapping_laws_on_arbitrary_binary_instances(seed in any::<u64>(), n in 2usize..7, alpha in 0.3f64..1.0, p in 0.1f64..0.9) {
        let params = Params::new(n, alpha, 1.2, p, 2, seed);
        check_mapping_laws(&generate_instance(&params).unwrap());
    }
}
