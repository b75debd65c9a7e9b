//! Random conic programs with a planted optimum. A complementary pair
//! (s0, z0) is drawn on the cone boundaries, then b = A x0 + s0 and
//! c = -A' z0 make x0 optimal with value c'x0 = -b'z0.

use proptest::prelude::*;
use quietpath_conic::cones::{project_dual, project_primal};
use quietpath_conic::{solve, Cone, CscMatrix, Problem, Settings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Planted {
    problem: Problem,
    optimum: f64,
}

fn planted(seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..7);
    let n_eq = rng.gen_range(0..2);
    let n_nn = rng.gen_range(n + 1..n + 6);
    let n_soc = rng.gen_range(1..3);
    let mut cones = Vec::new();
    let mut s0 = Vec::new();
    let mut z0 = Vec::new();
    if n_eq > 0 {
        cones.push(Cone::Zero(n_eq));
        for _ in 0..n_eq {
            s0.push(0.0);
            z0.push(rng.gen_range(-1.0..1.0));
        }
    }
    cones.push(Cone::Nonnegative(n_nn));
    for _ in 0..n_nn {
        let v = rng.gen_range(0.1..2.0);
        if rng.gen_bool(0.5) {
            s0.push(v);
            z0.push(0.0);
        } else {
            s0.push(0.0);
            z0.push(v);
        }
    }
    for _ in 0..n_soc {
        let d = rng.gen_range(2..5);
        cones.push(Cone::SecondOrder(d));
        let mut u: Vec<f64> = (0..d - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        u.iter_mut().for_each(|x| *x /= nu);
        let a = rng.gen_range(0.2..2.0);
        let b = rng.gen_range(0.2..2.0);
        s0.push(a);
        s0.extend(u.iter().map(|x| a * x));
        z0.push(b);
        z0.extend(u.iter().map(|x| -b * x));
    }
    let m = s0.len();
    let mut trip = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if rng.gen_bool(0.6) {
                trip.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let a = CscMatrix::from_triplets(m, n, &trip);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut b = s0.clone();
    a.gemv(&x0, &mut b, 1.0);
    let mut c = vec![0.0; n];
    a.gemv_t(&z0, &mut c, -1.0);
    let optimum = c.iter().zip(&x0).map(|(p, q)| p * q).sum();
    Planted {
        problem: Problem::new(c, a, b, cones).unwrap(),
        optimum,
    }
}

fn check(p: &Planted, st: &Settings, tol: f64) {
    let sol = solve(&p.problem, st).unwrap();
    assert!(sol.status.is_optimal(), "{:?} {:?}", st.method, sol.status);
    let err = (sol.objective - p.optimum).abs() / p.optimum.abs().max(1.0);
    assert!(err <= tol, "{:?}: got {} want {}", st.method, sol.objective, p.optimum);
}

#[test]
fn interior_point_matches_planted_optimum() {
    for seed in 0..20 {
        check(&planted(seed), &Settings::default(), 1e-6);
    }
}

#[test]
fn splitting_matches_planted_optimum() {
    for seed in 0..20 {
        check(&planted(seed), &Settings::splitting(), 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn solution_lies_in_cones(seed in 0u64..10_000) {
        let p = planted(seed);
        let sol = solve(&p.problem, &Settings::default()).unwrap();
        prop_assert!(sol.status.is_optimal());
        let mut s = sol.s.clone();
        project_primal(&p.problem.cones, &mut s);
        let mut z = sol.z.clone();
        project_dual(&p.problem.cones, &mut z);
        for i in 0..s.len() {
            prop_assert!((s[i] - sol.s[i]).abs() <= 1e-7);
            prop_assert!((z[i] - sol.z[i]).abs() <= 1e-7);
        }
        let sz: f64 = sol.s.iter().zip(&sol.z).map(|(a, b)| a * b).sum();
        prop_assert!(sz.abs() <= 1e-6);
    }

    #[test]
    fn soc_projection_is_idempotent(v in prop::collection::vec(-10.0f64..10.0, 2..6)) {
        let cones = vec![Cone::SecondOrder(v.len())];
        let mut once = v.clone();
        project_primal(&cones, &mut once);
        let mut twice = once.clone();
        project_primal(&cones, &mut twice);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let tail: f64 = once[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(once[0] >= tail - 1e-12);
    }
}

