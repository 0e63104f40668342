//! Evaluates every energy on one partition of a small planted-partition
//! graph and shows that the modularity identities agree.

use balanced_tv::construct::planted_partition;
use balanced_tv::energy::{balanced_cut_i, balanced_cut_ii, balanced_tv_i, gl_energy, modularity};
use balanced_tv::partition::PartitionMatrix;

fn main() -> balanced_tv::Result<()> {
    let (graph, truth) = planted_partition(300, 3, 10.0, 2.0, 1)?;
    let gamma = 1.0;
    let two_m = graph.total_weight();
    let u = PartitionMatrix::from_labels(&truth, 3)?.to_dense();

    let q = modularity(&graph, &truth, gamma)?;
    let bc1 = balanced_cut_i(&graph, &truth, gamma)?;
    let bc2 = balanced_cut_ii(&graph, &truth, gamma, 3)?;
    let tv = balanced_tv_i(&graph, &u, gamma)?;

    println!("{} nodes, 2m = {two_m:.1}", graph.n_nodes());
    println!("modularity           {q:.6}");
    println!("1 - BC_I / 2m        {:.6}", 1.0 - bc1 / two_m);
    println!("balanced cut II      {bc2:.6}");
    println!("balanced TV (I)      {tv:.6}  (equals BC_I = {bc1:.6} on a partition)");
    for eps in [1.0, 0.1, 0.01] {
        println!("GL energy, eps = {eps:<5} {:.6}", gl_energy(&graph, &u, gamma, eps)?);
    }
    Ok(())
}
