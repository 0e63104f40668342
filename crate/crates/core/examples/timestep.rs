//! Computes the low end of the spectrum of M and prints the timestep
//! bounds that drive automatic dt selection.

use balanced_tv::construct::planted_partition;
use balanced_tv::eigen::{smallest_eigenpairs, EigenOptions, OperatorM};
use balanced_tv::mbo::{decay_timestep, freezing_timestep, select_timestep, MboConfig};

fn main() -> balanced_tv::Result<()> {
    let (graph, _) = planted_partition(500, 4, 10.0, 1.5, 2)?;
    let gamma = 1.0;
    let op = OperatorM::new(&graph, gamma)?;
    let basis = smallest_eigenpairs(&op, 20, &EigenOptions::default())?;
    println!("lowest eigenvalues: {:.4?}", &basis.eigenvalues[..8]);
    println!("orthonormality error {:.1e}", basis.orthonormality_error());

    let config = MboConfig::new(gamma, 4);
    let lo = freezing_timestep(&graph, gamma);
    let hi = decay_timestep(basis.lambda_1, graph.n_nodes(), config.decay_epsilon);
    println!("freezing bound {lo:.5}, decay bound {hi:.5}, selected dt {:.5}", select_timestep(&basis, &graph, &config));
    println!("‖M‖∞ ≤ {:.2}", op.m_inf_norm_bound());
    Ok(())
}
