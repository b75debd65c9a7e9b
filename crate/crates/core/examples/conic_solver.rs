//! The bundled conic solver on a small second-order cone program, with both
//! methods.

use quietpath_conic::{solve, Cone, CscMatrix, Problem, Settings};

fn main() -> Result<(), quietpath_conic::SolverError> {
    // minimize t + x  s.t.  x >= 1,  t >= ||(x - 3, 4)||
    // rows: -x + s0 = -1 (s0 >= 0); (t, x - 3, 4) in SOC
    let a = CscMatrix::from_triplets(4, 2, &[(0, 1, -1.0), (1, 0, -1.0), (2, 1, -1.0)]);
    let b = vec![-1.0, 0.0, -3.0, 4.0];
    let p = Problem::new(vec![1.0, 1.0], a, b, vec![Cone::Nonnegative(1), Cone::SecondOrder(3)])?;
    for st in [Settings::default(), Settings::splitting()] {
        let s = solve(&p, &st)?;
        println!(
            "{:?}: {:?} in {} iterations, t = {:.6}, x = {:.6}, objective {:.6}",
            st.method, s.status, s.iterations, s.x[0], s.x[1], s.objective
        );
    }
    Ok(())
}
