//! Chooses the number of communities by sweeping n̂ over one cached
//! eigenbasis and keeping the best modularity.

use balanced_tv::construct::planted_partition;
use balanced_tv::eigen::EigenCache;
use balanced_tv::mbo::MboConfig;
use balanced_tv::metrics::classification_rate;
use balanced_tv::partitioner::sweep_nhat;

fn main() -> balanced_tv::Result<()> {
    let (graph, truth) = planted_partition(1000, 5, 12.0, 2.0, 3)?;
    let cache = EigenCache::in_memory();
    let config = MboConfig::new(1.0, 2).with_seed(0);
    let sweep = sweep_nhat(&graph, 2..=8, &config, &cache)?;
    for (nhat, q) in &sweep.per_nhat {
        println!("n̂ = {nhat}: Q = {q:.4}");
    }
    println!(
        "best n̂ = {}, {} nonempty communities, classification = {:.4}, eigensolves = {}",
        sweep.best_nhat,
        sweep.best.labels.n_communities(),
        classification_rate(&sweep.best.labels, &truth)?,
        cache.computations()
    );
    Ok(())
}
