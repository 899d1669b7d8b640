mod common;

use common::random_word_below;
use pharmonic::periodic_finite::{
    lift, max_principle_check, quotient_energy, residual_system, solve_periodic, CosetResistances,
    PeriodicProfile, PeriodicResistance,
};
use pharmonic::plaplace::{p_laplacian, Exponent, VertexField};
use pharmonic::subgroup::{quotient_graph, FiniteIndexSpec};
use pharmonic::word_group::multiply;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exp(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

fn random_profile(rng: &mut ChaCha8Rng, len: usize) -> PeriodicProfile {
    PeriodicProfile::new((0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect())
}

#[test]
fn lifts_are_periodic() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let spec = FiniteIndexSpec::new(3, vec![vec![1, 2], vec![3]]).unwrap();
    let prof = random_profile(&mut rng, 4);
    let u = lift(&prof, &spec).unwrap();
    let mut checked = 0;
    while checked < 500 {
        let y = random_word_below(&mut rng, 3, 10);
        if !spec.contains(&y) {
            continue;
        }
        let x = random_word_below(&mut rng, 3, 10);
        assert_eq!(u.value_at(&multiply(&y, &x).unwrap()), u.value_at(&x));
        checked += 1;
    }
}

#[test]
fn residual_system_matches_vertex_laplacian() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let spec = FiniteIndexSpec::new(3, vec![vec![1], vec![2, 3], vec![4, 1]]).unwrap();
    let q = quotient_graph(&spec);
    let r = CosetResistances::log_uniform(&q, &mut rng, 0.1, 10.0).unwrap();
    let rule = PeriodicResistance { spec: &spec, r: &r };
    for p in [1.5, 2.0, 3.0, 4.0] {
        let prof = random_profile(&mut rng, q.len());
        let res = residual_system(&prof, &q, &r, exp(p)).unwrap();
        let u = lift(&prof, &spec).unwrap();
        let mut seen = vec![0usize; q.len()];
        while seen.iter().any(|&c| c < 100) {
            let x = random_word_below(&mut rng, 3, 12);
            let v = spec.parity_label(&x).id();
            seen[v] += 1;
            let lap = p_laplacian(&u, &x, &rule, exp(p)).unwrap();
            assert!((lap - res[v]).abs() <= 1e-12 * (1.0 + lap.abs()));
        }
    }
}

#[test]
fn residual_is_gauge_invariant_and_energy_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let spec = FiniteIndexSpec::singletons(2, 3).unwrap();
    let q = quotient_graph(&spec);
    let r = CosetResistances::log_uniform(&q, &mut rng, 0.1, 10.0).unwrap();
    for p in [1.5, 2.5, 4.0] {
        let prof = random_profile(&mut rng, q.len());
        let shifted = PeriodicProfile::new(prof.values.iter().map(|v| v + 3.25).collect());
        let a = residual_system(&prof, &q, &r, exp(p)).unwrap();
        let b = residual_system(&shifted, &q, &r, exp(p)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        // dE/du_v = -p * residual_v.
        let h = 1e-6;
        for (v, &res) in a.iter().enumerate() {
            let mut plus = prof.clone();
            let mut minus = prof.clone();
            plus.values[v] += h;
            minus.values[v] -= h;
            let fd = (quotient_energy(&plus, &q, &r, exp(p)).unwrap()
                - quotient_energy(&minus, &q, &r, exp(p)).unwrap())
                / (2.0 * h);
            assert!((fd + p * res).abs() <= 1e-5 * fd.abs().max(1.0));
        }
    }
}

#[test]
fn index4_solver_from_random_starts() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let spec = FiniteIndexSpec::singletons(3, 2).unwrap();
    let q = quotient_graph(&spec);
    let r = CosetResistances::log_uniform(&q, &mut rng, 0.1, 10.0).unwrap();
    for p in [1.5, 4.0] {
        for _ in 0..100 {
            let start = random_profile(&mut rng, 4);
            let sol = solve_periodic(&q, &r, exp(p), &start, 1e-10).unwrap();
            assert!(sol.residual <= 1e-10);
            assert!(
                sol.profile.spread() <= 1e-6,
                "spread {}",
                sol.profile.spread()
            );
            assert_eq!(sol.profile.values[0], start.values[0]);
        }
    }
}

#[test]
fn max_principle_on_random_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let specs = [
        FiniteIndexSpec::singletons(3, 2).unwrap(),
        FiniteIndexSpec::new(2, vec![vec![1, 2], vec![2, 3]]).unwrap(),
        FiniteIndexSpec::singletons(1, 2).unwrap(),
    ];
    for spec in &specs {
        let q = quotient_graph(spec);
        let r = CosetResistances::log_uniform(&q, &mut rng, 0.1, 10.0).unwrap();
        for i in 0..3_000 {
            let p = [1.5, 2.0, 3.0, 4.0][i % 4];
            let mut prof = random_profile(&mut rng, q.len());
            // Ties at the maximum exercise the multi-argmax path.
            if i % 5 == 0 {
                let top = prof.values.iter().copied().fold(f64::MIN, f64::max);
                prof.values[rng.gen_range(0..q.len())] = top;
            }
            let rep = max_principle_check(&prof, &q, &r, exp(p)).unwrap();
            assert!(!rep.constant);
            assert!(rep.passed, "{rep:?}");
            // No non-constant profile solves the system.
            let res = residual_system(&prof, &q, &r, exp(p)).unwrap();
            assert!(res.iter().any(|&x| x != 0.0));
        }
    }
}
