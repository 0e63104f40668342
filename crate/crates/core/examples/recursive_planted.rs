//! Recursive bisection on a planted partition with eight communities.
//! Splits are kept only while they raise the full-graph modularity.

use balanced_tv::construct::planted_partition;
use balanced_tv::mbo::MboConfig;
use balanced_tv::metrics::purity;
use balanced_tv::partitioner::{recursive_partition, RecursiveParams};

fn main() -> balanced_tv::Result<()> {
    let (graph, truth) = planted_partition(2000, 8, 14.0, 2.0, 5)?;
    let config = MboConfig::new(1.0, 2).with_seed(1);
    let r = recursive_partition(&graph, &config, &RecursiveParams::default())?;
    for (level, q) in r.history.iter().enumerate() {
        println!("after {level} splits: Q = {q:.4}");
    }
    println!(
        "{} communities, Q = {:.4}, purity = {:.4}",
        r.labels.n_communities(),
        r.modularity,
        purity(&r.labels, &truth)?
    );
    Ok(())
}
