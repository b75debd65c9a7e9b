//! Clustered TSP through the Noon-Bean reduction to an asymmetric TSP.

use quietpath::tsp::{noon_bean, solve_atsp, AtspOptions, ClusterInstance, CostMatrix};

fn main() -> Result<(), quietpath::Error> {
    // three clusters of two nodes each
    let clusters = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
    let mut cost = CostMatrix::new(6);
    for u in 0..6 {
        for v in 0..6 {
            if u / 2 != v / 2 {
                cost.set(u, v, Some(10.0 + ((3 * u + 5 * v) % 7) as f64));
            }
        }
    }
    cost.set(1, 3, Some(2.0));
    cost.set(3, 4, Some(2.0));
    cost.set(4, 1, Some(2.0));
    let inst = ClusterInstance {
        clusters,
        cost,
        levels: vec![0.0; 6],
        d: 2,
    };
    let nb = noon_bean(&inst)?;
    println!("big M = {}", nb.big_m);
    let tour = solve_atsp(&nb.matrix, &AtspOptions::default())?;
    println!("ATSP order {:?} cost {}", tour.order, tour.cost);
    let nodes = nb.detransform(&tour.order);
    println!("one node per cluster: {nodes:?}, cost {:?}", inst.tour_cost(&nodes));

    let square = CostMatrix::from_rows(&[
        vec![None, Some(1.0), Some(1.5), Some(1.0)],
        vec![Some(1.0), None, Some(1.0), Some(1.5)],
        vec![Some(1.5), Some(1.0), None, Some(1.0)],
        vec![Some(1.0), Some(1.5), Some(1.0), None],
    ]);
    let t = solve_atsp(&square, &AtspOptions::default())?;
    println!("plain ATSP: {:?} cost {}", t.order, t.cost);
    Ok(())
}
