use proptest::prelude::*;

use cqmkit::compile::{compile_penalties, qubo_to_ising, PenaltyConfig};
use cqmkit::model::{IsingModel, QuboModel, SampleSet};
use cqmkit::problems::{
    blp_oracle, blp_quadratic_oracle, blp_weights, ferromagnetic_chain, gen_blp,
    gen_blp_quadratic_constraint, random_qubo, random_spin_glass, BlpSpec,
};
use cqmkit::solvers::{
    brute, brute_force, brute_force_qubo, greedy_descent, replica_coupling, simulated_annealing,
    simulated_annealing_qubo, simulated_quantum_annealing, simulated_quantum_annealing_qubo,
    tabu_search, AnnealSchedule, SchedulePoint, SolverParams,
};
use cqmkit::Error;

fn bits(mask: u32, n: usize) -> Vec<u8> {
    (0..n).map(|i| (mask >> i & 1) as u8).collect()
}

fn exhaustive_min_ising(m: &IsingModel) -> f64 {
    (0..1u32 << m.n())
        .map(|mask| {
            let s: Vec<i8> = (0..m.n()).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
            m.energy(&s)
        })
        .fold(f64::INFINITY, f64::min)
}

fn exhaustive_min_qubo(q: &QuboModel) -> f64 {
    (0..1u32 << q.n()).map(|m| q.energy(&bits(m, q.n()))).fold(f64::INFINITY, f64::min)
}

fn best(ss: &SampleSet) -> f64 {
    ss.first().expect("non-empty").energy
}

fn states(ss: &SampleSet) -> Vec<(Vec<f64>, u64)> {
    ss.samples()
        .iter()
        .map(|s| (s.assignment.values().to_vec(), s.energy.to_bits()))
        .collect()
}

fn quick(seed: u64) -> SolverParams {
    SolverParams::default().with_seed(seed).with_reads(10).with_sweeps(300)
}

#[test]
fn single_variable_qubo_brute_force() {
    let mut q = QuboModel::new(1);
    q.add_linear(0, -1.0);
    let ss = brute_force_qubo(&q).unwrap();
    assert_eq!(ss.len(), 1);
    assert_eq!(best(&ss), -1.0);
    assert_eq!(ss.samples()[0].assignment.values(), &[1.0]);
}

#[test]
fn brute_force_refuses_oversized_models() {
    assert!(matches!(brute_force_qubo(&QuboModel::new(40)), Err(Error::SizeExceeded { .. })));
}

#[test]
fn brute_force_blp_equals_sorted_weights() {
    let spec = BlpSpec::new(12, 4, 9);
    let ss = brute_force(&gen_blp(&spec).unwrap()).unwrap();
    let mut mu = blp_weights(12, 9);
    mu.sort_by(f64::total_cmp);
    let want: f64 = mu[..4].iter().sum();
    assert!((best(&ss) - want).abs() <= 1e-9);
    assert!((blp_oracle(&spec).unwrap() - want).abs() <= 1e-12);
}

#[test]
fn brute_force_quadratic_constraint_uses_ceil_sqrt() {
    let model = gen_blp_quadratic_constraint(12, 9, 4).unwrap();
    let ss = brute_force(&model).unwrap();
    let mut mu = blp_weights(12, 4);
    mu.sort_by(f64::total_cmp);
    let want: f64 = mu[..3].iter().sum();
    assert!((best(&ss) - want).abs() <= 1e-9);
    assert!((blp_quadratic_oracle(12, 9, 4).unwrap() - want).abs() <= 1e-9);
}

#[test]
fn cardinality_enumeration_matches_full_enumeration() {
    let q = random_qubo(10, 0.5, 17);
    for c in [0, 3, 10] {
        let (e, _) = brute::cardinality_minimizers(&q, c).unwrap();
        let want = (0..1u32 << 10)
            .filter(|m| m.count_ones() as usize == c)
            .map(|m| q.energy(&bits(m, 10)))
            .fold(f64::INFINITY, f64::min);
        assert!((e - want).abs() <= 1e-9);
    }
}

#[test]
fn sa_solves_the_ferromagnetic_chain() {
    let ss = simulated_annealing(&ferromagnetic_chain(64), &SolverParams::default().with_reads(10)).unwrap();
    let hits = ss.samples().iter().filter(|s| (s.energy + 63.0).abs() < 1e-9).count();
    assert!(hits >= 9, "{hits}/10 reads at the ground state");
}

#[test]
fn single_positive_field_points_down() {
    let mut m = IsingModel::new(1);
    m.add_field(0, 2.0);
    let ss = simulated_annealing(&m, &quick(1)).unwrap();
    assert!(ss.samples().iter().all(|s| s.energy == -2.0 && s.assignment.values() == [-1.0]));
}

#[test]
fn sa_finds_spin_glass_ground_states() {
    let hits = (0..5)
        .filter(|&seed| {
            let m = random_spin_glass(16, 100 + seed);
            let ss = simulated_annealing(&m, &quick(seed)).unwrap();
            (best(&ss) - exhaustive_min_ising(&m)).abs() <= 1e-9
        })
        .count();
    assert!(hits >= 4, "{hits}/5");
}

#[test]
fn sqa_finds_spin_glass_ground_states() {
    let hits = (0..5)
        .filter(|&seed| {
            let m = random_spin_glass(16, 200 + seed);
            let ss = simulated_quantum_annealing(&m, &AnnealSchedule::linear(64), &quick(seed)).unwrap();
            (best(&ss) - exhaustive_min_ising(&m)).abs() <= 1e-9
        })
        .count();
    assert!(hits >= 4, "{hits}/5");
}

#[test]
fn sqa_on_a_field_free_model_returns_the_offset() {
    let mut m = IsingModel::new(5);
    m.add_offset(1.25);
    let ss = simulated_quantum_annealing(&m, &AnnealSchedule::linear(8), &quick(3)).unwrap();
    assert!(ss.samples().iter().all(|s| s.energy == 1.25));
}

#[test]
fn schedules_must_be_non_negative_and_dominant_at_the_ends() {
    let pt = |s, a, b| SchedulePoint { s, a, b };
    assert!(matches!(
        AnnealSchedule::new(vec![pt(0.0, 1.0, -0.1), pt(1.0, 0.0, 1.0)]),
        Err(Error::InvalidSchedule(_))
    ));
    assert!(AnnealSchedule::new(vec![pt(0.0, 0.2, 1.0), pt(1.0, 0.0, 1.0)]).is_err());
    assert!(AnnealSchedule::new(vec![pt(0.0, 1.0, 0.0), pt(0.5, 0.5, 0.5), pt(0.5, 0.4, 0.6), pt(1.0, 0.0, 1.0)]).is_err());
    assert!(AnnealSchedule::new(vec![pt(0.0, 1.0, 0.0), pt(1.0, 0.0, 1.0)]).is_ok());
}

#[test]
fn sqa_needs_two_slices() {
    let p = SolverParams { trotter_slices: 1, ..quick(0) };
    assert!(simulated_quantum_annealing(&ferromagnetic_chain(4), &AnnealSchedule::linear(4), &p).is_err());
}

#[test]
fn tabu_single_variable_and_zero_model() {
    let mut q = QuboModel::new(1);
    q.add_linear(0, -3.0);
    assert_eq!(best(&tabu_search(&q, &quick(0)).unwrap()), -3.0);

    let mut zero = QuboModel::new(6);
    zero.add_offset(0.5);
    let ss = tabu_search(&zero, &quick(0)).unwrap();
    assert!(ss.samples().iter().all(|s| s.energy == 0.5));
}

#[test]
fn tabu_reaches_the_penalized_blp_optimum() {
    let hits = (0..5)
        .filter(|&seed| {
            let spec = BlpSpec::new(14, 5, 300 + seed);
            let c = compile_penalties(&gen_blp(&spec).unwrap(), &PenaltyConfig::default()).unwrap();
            let ss = tabu_search(&c.qubo, &SolverParams::default().with_seed(seed)).unwrap();
            (best(&ss) - blp_oracle(&spec).unwrap()).abs() <= 1e-9
        })
        .count();
    assert!(hits >= 4, "{hits}/5");
}

#[test]
fn greedy_keeps_a_global_optimum() {
    let q = random_qubo(10, 0.6, 4);
    let (e, argmins) = brute::qubo_minimizers(&q).unwrap();
    let s = greedy_descent(&q, &argmins[0]);
    assert_eq!(s.energy, e);
    let start: Vec<f64> = argmins[0].iter().map(|&v| v as f64).collect();
    assert_eq!(s.assignment.values(), start.as_slice());
}

#[test]
fn greedy_solves_separable_models_from_anywhere() {
    let mut q = QuboModel::new(8);
    for i in 0..8 {
        q.add_linear(i, if i % 2 == 0 { -1.0 } else { 2.0 });
    }
    for mask in 0..256 {
        assert_eq!(greedy_descent(&q, &bits(mask, 8)).energy, -4.0);
    }
}

#[test]
fn replica_coupling_is_ferromagnetic_and_diverges() {
    for a in [1.0, 0.5, 0.1, 1e-3, 1e-6] {
        assert!(replica_coupling(a, 20, 0.05).unwrap() <= 0.0);
    }
    let weak = replica_coupling(1e-6, 20, 0.05).unwrap();
    let strong = replica_coupling(1e-12, 20, 0.05).unwrap();
    assert!(strong < weak);
    assert!(replica_coupling(0.0, 20, 0.05).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn greedy_output_is_one_flip_stable(seed in 0u64..1000, mask in 0u32..4096) {
        let q = random_qubo(12, 0.5, seed);
        let s = greedy_descent(&q, &bits(mask, 12));
        let x: Vec<u8> = s.assignment.values().iter().map(|&v| v as u8).collect();
        prop_assert!(s.energy <= q.energy(&bits(mask, 12)) + 1e-12);
        for i in 0..12 {
            let mut y = x.clone();
            y[i] ^= 1;
            prop_assert!(q.energy(&y) >= s.energy - 1e-9);
        }
    }

    #[test]
    fn solvers_are_deterministic(seed in 0u64..1000) {
        let q = random_qubo(10, 0.5, seed);
        let m = qubo_to_ising(&q);
        let p = quick(seed).with_sweeps(50);
        let sched = AnnealSchedule::linear(16);
        prop_assert_eq!(states(&simulated_annealing(&m, &p).unwrap()), states(&simulated_annealing(&m, &p).unwrap()));
        prop_assert_eq!(
            states(&simulated_quantum_annealing(&m, &sched, &p).unwrap()),
            states(&simulated_quantum_annealing(&m, &sched, &p).unwrap())
        );
        prop_assert_eq!(states(&tabu_search(&q, &p).unwrap()), states(&tabu_search(&q, &p).unwrap()));
    }

    /// Solving the QUBO directly and solving its Ising image give the same
    /// best energy, and neither beats the exhaustive optimum.
    #[test]
    fn spin_and_binary_views_agree(seed in 0u64..1000) {
        let q = random_qubo(10, 0.5, seed);
        let m = qubo_to_ising(&q);
        let p = quick(seed).with_sweeps(100);
        let exact = exhaustive_min_qubo(&q);
        let direct = best(&simulated_annealing_qubo(&q, &p).unwrap());
        let image = best(&simulated_annealing(&m, &p).unwrap());
        prop_assert!((direct - image).abs() <= 1e-9);
        prop_assert!(direct >= exact - 1e-9);
        let sched = AnnealSchedule::linear(16);
        let direct = best(&simulated_quantum_annealing_qubo(&q, &sched, &p).unwrap());
        let image = best(&simulated_quantum_annealing(&m, &sched, &p).unwrap());
        prop_assert!((direct - image).abs() <= 1e-9);
    }

    #[test]
    fn reported_energies_are_exact(seed in 0u64..1000) {
        let q = random_qubo(9, 0.6, seed);
        let ss = tabu_search(&q, &quick(seed).with_sweeps(20)).unwrap();
        for s in ss.samples() {
            let x: Vec<u8> = s.assignment.values().iter().map(|&v| v as u8).collect();
            prop_assert!((q.energy(&x) - s.energy).abs() <= 1e-9);
        }
    }

    #[test]
    fn replica_coupling_never_positive(a in 1e-9..10.0f64, p in 2usize..64, t in 1e-3..1.0f64) {
        if let Some(j) = replica_coupling(a, p, t) {
            prop_assert!(j <= 0.0);
        }
    }
}
