use proptest::prelude::*;

use cqmkit::hybrid::{extract_subproblem, hybrid_solve, select_best_feasible, HybridConfig, Subsolver};
use cqmkit::model::{
    Assignment, ConstrainedModel, ModelBuilder, QuadraticExpr, QuboModel, Sample, SampleSet, Tolerance,
};
use cqmkit::problems::{gen_blp_quadratic_constraint, gen_unit_commitment, uc_oracle, UcSpec};
use cqmkit::Error;

fn bits(mask: u32, n: usize) -> Vec<u8> {
    (0..n).map(|i| (mask >> i & 1) as u8).collect()
}

fn sample(energy: f64, feasible: bool) -> Sample {
    Sample {
        assignment: Assignment::from_pairs([("x", energy)]),
        energy,
        feasible,
        violations: Default::default(),
    }
}

/// One second, a handful of iterations and a small sampleset.
fn short(seed: u64) -> HybridConfig {
    HybridConfig {
        time_floor: 1.0,
        target: 12,
        max_iterations: Some(8),
        ..HybridConfig::default()
    }
    .with_time_limit(1.0)
    .with_seed(seed)
}

fn integer_qubo(n: usize, seed: u64) -> QuboModel {
    // small deterministic LCG keeps the coefficients integral
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) % 11) as f64 - 5.0
    };
    let mut q = QuboModel::new(n);
    for i in 0..n {
        q.add_linear(i, next());
        for j in i + 1..n {
            q.add_quadratic(i, j, next());
        }
    }
    q.add_offset(next());
    q
}

#[test]
fn best_feasible_ignores_lower_infeasible_samples() {
    let ss = SampleSet::new("t", vec![sample(-5.0, false), sample(2.0, true), sample(1.0, true)], 0.0, 0);
    assert_eq!(select_best_feasible(&ss).unwrap().energy, 1.0);
    let only = SampleSet::new("t", vec![sample(3.0, true)], 0.0, 0);
    assert_eq!(select_best_feasible(&only).unwrap().energy, 3.0);
    let none = SampleSet::new("t", vec![sample(-1.0, false), sample(0.0, false)], 0.0, 0);
    assert!(select_best_feasible(&none).is_none());
}

#[test]
fn full_size_subproblem_is_the_original() {
    let q = integer_qubo(6, 1);
    let inc = bits(0b101100, 6);
    let sub = extract_subproblem(&q, &inc, 6).unwrap();
    assert_eq!(sub.variables, (0..6).collect::<Vec<_>>());
    assert_eq!(sub.clamp_offset, q.offset());
    for mask in 0..64 {
        let x = bits(mask, 6);
        assert_eq!(sub.qubo.energy(&x) + sub.clamp_offset, q.energy(&x));
    }
}

#[test]
fn clamped_neighbour_folds_into_the_linear_term() {
    let mut q = QuboModel::new(2);
    q.add_linear(0, 1.0);
    q.add_linear(1, -10.0);
    q.add_quadratic(0, 1, 3.0);
    // at (1, 0) flipping x1 moves the energy by 7 and x0 by 1, so x0 is clamped
    let sub = extract_subproblem(&q, &[1, 0], 1).unwrap();
    assert_eq!(sub.variables, vec![1]);
    assert_eq!(sub.qubo.linear(), &[-10.0 + 3.0]);
    assert_eq!(sub.clamp_offset, 1.0);
}

#[test]
fn subproblem_size_must_be_in_range() {
    let q = integer_qubo(4, 2);
    assert!(extract_subproblem(&q, &[0; 4], 0).is_err());
    assert!(extract_subproblem(&q, &[0; 4], 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn clamp_identity_is_exact(seed in 0u64..10_000, inc in 0u32..1 << 14, k in 1usize..=8) {
        let q = integer_qubo(14, seed);
        let incumbent = bits(inc, 14);
        let sub = extract_subproblem(&q, &incumbent, k).unwrap();
        prop_assert_eq!(sub.variables.len(), k);
        prop_assert!(sub.variables.windows(2).all(|w| w[0] < w[1]));
        for m in 0..1u32 << k {
            let y = bits(m, k);
            prop_assert_eq!(sub.qubo.energy(&y) + sub.clamp_offset, q.energy(&sub.merge(&incumbent, &y)));
        }
    }
}

#[test]
fn config_rejects_out_of_range_values() {
    let bad = [
        HybridConfig { time_floor: 0.5, ..HybridConfig::default() },
        HybridConfig { target: 0, ..HybridConfig::default() },
        HybridConfig { subproblem_size: 0, ..HybridConfig::default() },
        HybridConfig::default().with_time_limit(-1.0),
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(Error::InvalidParams(_))), "{cfg:?}");
    }
    let from_json: HybridConfig = serde_json::from_str("{}").unwrap();
    assert_eq!(from_json, HybridConfig::default());
    assert!(from_json.validate().is_ok());
}

#[test]
fn short_limits_are_raised_to_the_floor_with_a_warning() {
    let cfg = HybridConfig::default().with_time_limit(2.0);
    let (t, warning) = cfg.effective_time_limit(10);
    assert_eq!(t, 5.0);
    assert!(warning.is_some());
    assert_eq!(HybridConfig::default().effective_time_limit(100_000), (20.0, None));
    assert_eq!(HybridConfig::default().effective_time_limit(10), (5.0, None));
}

#[test]
fn empty_model_gives_an_empty_report() {
    let r = hybrid_solve(&ConstrainedModel::empty(), &short(0)).unwrap();
    assert!(r.sampleset.is_empty());
    assert_eq!(r.feasible_count, 0);
}

#[test]
fn one_variable_model_is_solved_and_padded() {
    let mut b = ModelBuilder::new();
    b.binary("x");
    b.objective(QuadraticExpr::linear_sum([("x", -2.0)]));
    let m = b.finish().unwrap();
    let r = hybrid_solve(&m, &short(1)).unwrap();
    assert_eq!(r.sampleset.len(), 12);
    assert_eq!(r.feasible_count, r.sampleset.len());
    assert_eq!(r.best_feasible().unwrap().energy, -2.0);
}

#[test]
fn unit_commitment_toy_matches_enumeration() {
    let spec = UcSpec::random(3, 2, 1, 1, 41).unwrap();
    let model = gen_unit_commitment(&spec).unwrap();
    let oracle = uc_oracle(&spec).unwrap().cost;
    let r = hybrid_solve(&model, &short(2)).unwrap();
    let best = r.best_feasible().expect("a feasible schedule").energy;
    assert!((best - oracle).abs() <= 1e-6 * oracle.abs().max(1.0), "{best} vs {oracle}");
    assert!(r.wall_time <= r.time_limit + 1.0);
}

#[test]
fn incumbent_log_never_gets_worse() {
    let model = gen_blp_quadratic_constraint(20, 16, 3).unwrap();
    for sub in [Subsolver::Sa, Subsolver::Tabu, Subsolver::Sqa] {
        let cfg = HybridConfig { subsolver: sub, subproblem_size: 8, ..short(5) };
        let r = hybrid_solve(&model, &cfg).unwrap();
        assert!(!r.log.is_empty());
        assert!(r.log.windows(2).all(|w| w[1].incumbent_energy <= w[0].incumbent_energy), "{sub}");
        assert!(r.log.windows(2).all(|w| w[0].seq < w[1].seq));
    }
}

#[test]
fn feasible_flags_respect_quadratic_constraints() {
    let model = gen_blp_quadratic_constraint(12, 9, 8).unwrap();
    let r = hybrid_solve(&model, &short(3)).unwrap();
    assert_eq!(r.sampleset.len(), 12);
    for s in r.sampleset.samples() {
        let direct = model.check_feasibility(&s.assignment, Tolerance::Default).unwrap().0;
        assert_eq!(s.feasible, direct);
        if s.feasible {
            let ones: f64 = s.assignment.values().iter().sum();
            assert!(ones * ones >= 9.0);
        }
    }
}
