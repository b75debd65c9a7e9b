use quietpath_conic::{solve, Cone, CscMatrix, Problem, Settings, Status};

fn dense_problem(c: Vec<f64>, rows: Vec<Vec<f64>>, b: Vec<f64>, cones: Vec<Cone>) -> Problem {
    let mut t = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            if *v != 0.0 {
                t.push((i, j, *v));
            }
        }
    }
    let a = CscMatrix::from_triplets(rows.len(), c.len(), &t);
    Problem::new(c, a, b, cones).unwrap()
}

fn both_methods() -> Vec<Settings> {
    vec![Settings::default(), Settings::splitting()]
}

#[test]
fn scalar_lower_bound() {
    // minimize x s.t. x >= 1  <=>  -x + s = -1, s >= 0
    let p = dense_problem(vec![1.0], vec![vec![-1.0]], vec![-1.0], vec![Cone::Nonnegative(1)]);
    for st in both_methods() {
        let sol = solve(&p, &st).unwrap();
        assert_eq!(sol.status, Status::Optimal, "{:?}", st.method);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "{:?}: {}", st.method, sol.x[0]);
    }
}

#[test]
fn second_order_cone_norm() {
    // minimize t s.t. t >= ||(3,4)||: s = (t, 3, 4) = b - A x with x = t
    let p = dense_problem(
        vec![1.0],
        vec![vec![-1.0], vec![0.0], vec![0.0]],
        vec![0.0, 3.0, 4.0],
        vec![Cone::SecondOrder(3)],
    );
    for st in both_methods() {
        let sol = solve(&p, &st).unwrap();
        assert!(sol.status.is_optimal(), "{:?}", sol.status);
        assert!((sol.x[0] - 5.0).abs() < 1e-5, "{:?}: {}", st.method, sol.x[0]);
    }
}

#[test]
fn equality_and_bounds() {
    // minimize x + 2y s.t. x + y = 3, x <= 2, y >= 0  -> x = 2, y = 1, obj 4
    let p = dense_problem(
        vec![1.0, 2.0],
        vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, -1.0]],
        vec![3.0, 2.0, 0.0],
        vec![Cone::Zero(1), Cone::Nonnegative(2)],
    );
    for st in both_methods() {
        let sol = solve(&p, &st).unwrap();
        assert!(sol.status.is_optimal(), "{:?}", sol.status);
        assert!((sol.objective - 4.0).abs() < 1e-5, "{:?}: {}", st.method, sol.objective);
    }
}

#[test]
fn detects_primal_infeasibility() {
    // x >= 1 and x <= 0
    let p = dense_problem(
        vec![1.0],
        vec![vec![-1.0], vec![1.0]],
        vec![-1.0, 0.0],
        vec![Cone::Nonnegative(2)],
    );
    for st in both_methods() {
        let sol = solve(&p, &st).unwrap();
        assert_eq!(sol.status, Status::Infeasible, "{:?}", st.method);
    }
}

#[test]
fn detects_unboundedness() {
    // minimize -x s.t. x >= 0
    let p = dense_problem(vec![-1.0], vec![vec![-1.0]], vec![0.0], vec![Cone::Nonnegative(1)]);
    for st in both_methods() {
        let sol = solve(&p, &st).unwrap();
        assert_eq!(sol.status, Status::Unbounded, "{:?}", st.method);
    }
}
