use std::collections::BTreeSet;

use proptest::prelude::*;

use cqmkit::compile::{
    auto_lambda, binarize, compile_penalties, encode_inequality, ising_to_qubo, log_weights,
    qubo_to_ising, suggest_lambda, PenaltyConfig,
};
use cqmkit::model::{
    ConstrainedModel, Constraint, IsingModel, ModelBuilder, QuadraticExpr, QuboModel, Sense,
    Tolerance,
};
use cqmkit::problems::{blp_weights, gen_blp, random_qubo, BlpSpec};
use cqmkit::Error;

fn bits(mask: u32, n: usize) -> Vec<u8> {
    (0..n).map(|i| (mask >> i & 1) as u8).collect()
}

fn spins(x: &[u8]) -> Vec<i8> {
    x.iter().map(|&v| 2 * v as i8 - 1).collect()
}

fn sum_of(n: usize) -> QuadraticExpr {
    QuadraticExpr::linear_sum((1..=n).map(|i| (format!("x{i}"), 1.0)))
}

/// Every subset sum of the weights.
fn reachable(w: &[u64]) -> BTreeSet<u64> {
    (0u32..1 << w.len())
        .map(|m| (0..w.len()).filter(|&j| m >> j & 1 == 1).map(|j| w[j]).sum())
        .collect()
}

fn argmin_set(n: usize, f: impl Fn(&[u8]) -> Option<f64>) -> (f64, Vec<u32>) {
    let mut best = f64::INFINITY;
    let mut set = Vec::new();
    for mask in 0..1u32 << n {
        let Some(e) = f(&bits(mask, n)) else { continue };
        if e < best - 1e-9 {
            best = e;
            set.clear();
        }
        if (e - best).abs() <= 1e-9 {
            set.push(mask);
        }
    }
    (best, set)
}

#[test]
fn zero_qubo_maps_to_zero_ising() {
    let m = qubo_to_ising(&QuboModel::new(3));
    assert!(m.h().iter().all(|&h| h == 0.0));
    assert!(m.j().is_empty());
    assert_eq!(m.offset(), 0.0);
    let back = ising_to_qubo(&IsingModel::new(3));
    assert!(back.linear().iter().all(|&c| c == 0.0));
    assert_eq!(back.offset(), 0.0);
}

#[test]
fn single_linear_term_halves_into_field_and_offset() {
    let mut q = QuboModel::new(1);
    q.add_linear(0, 3.0);
    let m = qubo_to_ising(&q);
    assert_eq!(m.h(), &[1.5]);
    assert_eq!(m.offset(), 1.5);
    assert_eq!(m.energy(&[-1]), 0.0);
    assert_eq!(m.energy(&[1]), 3.0);
}

#[test]
fn random_qubo_energies_survive_the_spin_map() {
    let q = random_qubo(12, 0.5, 3);
    let m = qubo_to_ising(&q);
    for mask in 0..1u32 << 12 {
        let x = bits(mask, 12);
        assert!((q.energy(&x) - m.energy(&spins(&x))).abs() <= 1e-9);
    }
}

#[test]
fn ferromagnetic_chain_qubo_image_matches() {
    let mut m = IsingModel::new(8);
    for i in 0..7 {
        m.add_coupling(i, i + 1, -1.0);
    }
    let q = ising_to_qubo(&m);
    for mask in 0..256 {
        let x = bits(mask, 8);
        assert!((q.energy(&x) - m.energy(&spins(&x))).abs() <= 1e-12);
    }
}

#[test]
fn round_trip_preserves_coefficients() {
    let q = random_qubo(10, 0.6, 8);
    let back = ising_to_qubo(&qubo_to_ising(&q));
    for (a, b) in q.linear().iter().zip(back.linear()) {
        assert!((a - b).abs() <= 1e-12);
    }
    for (k, c) in q.quadratic() {
        assert!((c - back.quadratic()[k]).abs() <= 1e-12);
    }
    assert!((q.offset() - back.offset()).abs() <= 1e-12);
}

#[test]
fn capacity_row_gets_weights_one_and_two() {
    let (eq, enc) = encode_inequality(&Constraint::new("cap", sum_of(5), Sense::Le, 3.0)).unwrap();
    assert_eq!(eq.sense, Sense::Eq);
    assert_eq!(enc.range, 3);
    assert_eq!(enc.weights, vec![1, 2]);
    assert_eq!(reachable(&enc.weights), (0..=3).collect());
    for id in &enc.slack_ids {
        assert_eq!(eq.lhs.linear()[id.as_str()], enc.weights[enc.slack_ids.iter().position(|s| s == id).unwrap()] as f64);
    }
}

#[test]
fn single_bound_needs_one_slack() {
    let (_, enc) = encode_inequality(&Constraint::new("one", sum_of(1), Sense::Le, 1.0)).unwrap();
    assert_eq!(enc.range, 1);
    assert_eq!(enc.weights, vec![1]);
}

#[test]
fn lower_bound_is_mirrored() {
    let (eq, enc) = encode_inequality(&Constraint::new("atleast", sum_of(4), Sense::Ge, 2.0)).unwrap();
    assert_eq!(enc.range, 2);
    assert_eq!(reachable(&enc.weights), (0..=2).collect());
    assert!(enc.slack_ids.iter().all(|id| eq.lhs.linear()[id.as_str()] < 0.0));
}

#[test]
fn encoding_rejects_fractional_and_impossible_rows() {
    let mut lhs = sum_of(2);
    lhs.add_linear("x1", 0.5);
    assert!(matches!(
        encode_inequality(&Constraint::new("frac", lhs, Sense::Le, 1.0)),
        Err(Error::UnsupportedEncoding { .. })
    ));
    assert!(matches!(
        encode_inequality(&Constraint::new("never", sum_of(3), Sense::Le, -1.0)),
        Err(Error::InfeasibleConstraint { .. })
    ));
}

proptest! {
    #[test]
    fn slack_weights_cover_the_range_without_gaps(range in 0u64..3000) {
        let w = log_weights(range);
        prop_assert_eq!(w.iter().sum::<u64>(), range);
        prop_assert_eq!(w.len() as u32, 64 - range.leading_zeros());
        prop_assert!(w.len() as u64 <= range.max(0));
        if w.len() <= 12 {
            prop_assert_eq!(reachable(&w), (0..=range).collect::<BTreeSet<_>>());
        }
    }

    #[test]
    fn integer_encodings_decode_every_value(lower in -20i64..20, width in 0i64..40) {
        let mut b = ModelBuilder::new();
        b.integer("z", lower, lower + width);
        let mut obj = QuadraticExpr::new();
        obj.add_linear("z", 1.0);
        b.objective(obj);
        let (bin, encs) = binarize(&b.finish().unwrap()).unwrap();
        prop_assert!(bin.is_all_binary());
        let enc = &encs[0];
        let values: BTreeSet<i64> = (0u32..1 << enc.weights.len())
            .map(|m| enc.decode((0..enc.weights.len()).map(|j| (m >> j & 1) as f64)) as i64)
            .collect();
        prop_assert_eq!(values, (lower..=lower + width).collect::<BTreeSet<_>>());
    }

    /// Feasible points pay nothing; infeasible ones pay at least the
    /// smallest λ, whatever the slack values.
    #[test]
    fn penalties_are_sound(
        rows in prop::collection::vec((prop::collection::vec(-2i32..=2, 6), 0..3u8, -3i32..=4), 1..3),
        lambda in 0.5..5.0f64,
    ) {
        let mut b = ModelBuilder::new();
        for i in 1..=6 {
            b.binary(format!("x{i}"));
        }
        for (k, (coeffs, sense, rhs)) in rows.iter().enumerate() {
            let lhs = QuadraticExpr::linear_sum(coeffs.iter().enumerate().map(|(i, &c)| (format!("x{}", i + 1), c as f64)));
            let sense = [Sense::Eq, Sense::Le, Sense::Ge][*sense as usize];
            b.constraint(format!("r{k}"), lhs, sense, *rhs as f64);
        }
        let model = b.finish().unwrap();
        let cfg = PenaltyConfig {
            lambdas: model.constraints().iter().map(|c| (c.label.clone(), lambda)).collect(),
            auto: false,
        };
        let compiled = match compile_penalties(&model, &cfg) {
            Ok(c) => c,
            Err(Error::InfeasibleConstraint { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let n = compiled.qubo.n();
        prop_assume!(n <= 16);
        // penalty = F − objective, minimised over the slack bits
        let mut best_penalty = vec![f64::INFINITY; 64];
        for mask in 0..1u32 << n {
            let x = bits(mask, n);
            let a = model.assignment(compiled.original_values(&x));
            let p = compiled.qubo.energy(&x) - model.evaluate_objective(&a).unwrap();
            prop_assert!(p >= -1e-9);
            let orig = (mask & 63) as usize;
            best_penalty[orig] = best_penalty[orig].min(p);
        }
        for (orig, &p) in best_penalty.iter().enumerate() {
            let a = model.assignment(bits(orig as u32, 6).iter().map(|&v| v as f64).collect());
            let feasible = model.check_feasibility(&a, Tolerance::Default).unwrap().0;
            if feasible {
                prop_assert!(p.abs() <= 1e-9, "feasible point pays {p}");
            } else {
                prop_assert!(p >= lambda - 1e-9, "infeasible point pays only {p}");
            }
        }
    }

    /// With the auto rule the penalized argmin, projected onto the model
    /// variables, is the constrained argmin.
    #[test]
    fn auto_lambda_preserves_the_argmin(
        obj in prop::collection::vec(-5i32..=5, 5),
        pair in -3i32..=3,
        coeffs in prop::collection::vec(0i32..=2, 5),
        sense in 0..3u8,
        rhs in 0i32..=4,
    ) {
        let mut b = ModelBuilder::new();
        for i in 1..=5 {
            b.binary(format!("x{i}"));
        }
        let mut o = QuadraticExpr::linear_sum(obj.iter().enumerate().map(|(i, &c)| (format!("x{}", i + 1), c as f64)));
        o.add_quadratic("x1", "x2", pair as f64);
        b.objective(o);
        let lhs = QuadraticExpr::linear_sum(coeffs.iter().enumerate().map(|(i, &c)| (format!("x{}", i + 1), c as f64)));
        b.constraint("row", lhs, [Sense::Eq, Sense::Le, Sense::Ge][sense as usize], rhs as f64);
        let model = b.finish().unwrap();
        let compiled = match compile_penalties(&model, &PenaltyConfig::default()) {
            Ok(c) => c,
            Err(Error::InfeasibleConstraint { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let n = compiled.qubo.n();
        prop_assume!(n <= 16);
        let (_, constrained) = argmin_set(5, |x| {
            let a = model.assignment(x.iter().map(|&v| v as f64).collect());
            model
                .check_feasibility(&a, Tolerance::Default)
                .unwrap()
                .0
                .then(|| model.evaluate_objective(&a).unwrap())
        });
        prop_assume!(!constrained.is_empty());
        let (_, penalized) = argmin_set(n, |x| Some(compiled.qubo.energy(x)));
        let projected: BTreeSet<u32> = penalized.iter().map(|m| m & 31).collect();
        prop_assert_eq!(projected, constrained.into_iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn argmin_maps_to_ising_argmin(seed in 0u64..500) {
        let q = random_qubo(8, 0.7, seed);
        let m = qubo_to_ising(&q);
        let (_, qa) = argmin_set(8, |x| Some(q.energy(x)));
        let (_, ia) = argmin_set(8, |x| Some(m.energy(&spins(x))));
        prop_assert_eq!(qa, ia);
    }
}

#[test]
fn unconstrained_model_compiles_to_its_objective() {
    let m = gen_blp(&BlpSpec::new(6, 0, 1)).unwrap();
    let stripped = ConstrainedModel::new(m.variables().to_vec(), m.objective().clone(), vec![]).unwrap();
    let c = compile_penalties(&stripped, &PenaltyConfig::default()).unwrap();
    assert!(c.lambdas.is_empty() && c.slacks.is_empty());
    for mask in 0..64 {
        let x = bits(mask, 6);
        let a = stripped.assignment(c.original_values(&x));
        assert_eq!(c.qubo.energy(&x), stripped.evaluate_objective(&a).unwrap());
    }
    assert!(suggest_lambda(&stripped).unwrap().lambdas.is_empty());
}

#[test]
fn one_hot_pair_minimizers_are_the_feasible_points() {
    let mut b = ModelBuilder::new();
    b.binary("x1").binary("x2");
    b.objective(sum_of(2));
    b.constraint("one", sum_of(2), Sense::Eq, 1.0);
    let m = b.finish().unwrap();
    let cfg = PenaltyConfig {
        lambdas: [("one".to_string(), 10.0)].into(),
        auto: false,
    };
    let c = compile_penalties(&m, &cfg).unwrap();
    let (best, set) = argmin_set(2, |x| Some(c.qubo.energy(x)));
    assert_eq!(best, 1.0);
    assert_eq!(set, vec![0b01, 0b10]);
}

#[test]
fn blp_penalized_argmin_is_the_smallest_weights() {
    let spec = BlpSpec::new(12, 4, 5);
    let c = compile_penalties(&gen_blp(&spec).unwrap(), &PenaltyConfig::default()).unwrap();
    assert_eq!(c.qubo.n(), 12);
    let (best, set) = argmin_set(12, |x| Some(c.qubo.energy(x)));
    let mut mu = blp_weights(12, 5);
    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]));
    let want_mask: u32 = order[..4].iter().map(|&i| 1u32 << i).sum();
    mu.sort_by(f64::total_cmp);
    assert!((best - mu[..4].iter().sum::<f64>()).abs() <= 1e-9);
    assert_eq!(set, vec![want_mask]);
}

#[test]
fn continuous_variables_must_be_binarized_first() {
    let mut b = ModelBuilder::new();
    b.continuous("p", 0.0, 1.0);
    let m = b.finish().unwrap();
    assert!(matches!(compile_penalties(&m, &PenaltyConfig::default()), Err(Error::MustBinarize(id)) if id == "p"));
}

#[test]
fn refined_lambda_is_below_auto_and_keeps_argmin_feasible() {
    let model = gen_blp(&BlpSpec::new(10, 3, 21)).unwrap();
    let s = suggest_lambda(&model).unwrap();
    assert!(s.refined);
    let auto = auto_lambda(&model);
    let cfg = PenaltyConfig {
        lambdas: s.lambdas.iter().map(|(k, e)| (k.clone(), e.lambda)).collect(),
        auto: false,
    };
    assert!(cfg.lambdas.values().all(|&l| l > 0.0 && l <= auto));
    let c = compile_penalties(&model, &cfg).unwrap();
    let (_, set) = argmin_set(c.qubo.n(), |x| Some(c.qubo.energy(x)));
    for mask in set {
        let x = bits(mask, c.qubo.n());
        let a = model.assignment(c.original_values(&x));
        assert!(model.check_feasibility(&a, Tolerance::Default).unwrap().0);
    }
}

#[test]
fn zero_objective_refines_to_the_grid_minimum() {
    let mut b = ModelBuilder::new();
    for i in 1..=4 {
        b.binary(format!("x{i}"));
    }
    b.constraint("card", sum_of(4), Sense::Eq, 2.0);
    let m = b.finish().unwrap();
    let s = suggest_lambda(&m).unwrap();
    let grid_min = auto_lambda(&m) * 0.5f64.powi(cqmkit::compile::BISECTION_STEPS as i32);
    assert!(s.refined);
    assert_eq!(s.lambdas["card"].lambda, grid_min);
}
