//! Unsupervised two-moons clustering: 2000 points in 100 dimensions, a
//! 13-NN self-tuning graph, n̂ = 2, best of 20 seeds.

use std::time::Instant;

use balanced_tv::construct::{knn_graph, two_moons, TWO_MOONS_NOISE};
use balanced_tv::eigen::EigenCache;
use balanced_tv::mbo::MboConfig;
use balanced_tv::metrics::{classification_rate, consistency, BatchField, RunBatch, RunRecord};
use balanced_tv::partitioner::fixed_partition;

fn main() -> balanced_tv::Result<()> {
    let start = Instant::now();
    let (points, truth) = two_moons(2000, 100, TWO_MOONS_NOISE, 0)?;
    let graph = knn_graph(&points, 13, 13)?;
    println!("graph: {} nodes, {} edges ({:.2?})", graph.n_nodes(), graph.n_edges(), start.elapsed());

    let cache = EigenCache::in_memory();
    let mut batch = RunBatch::default();
    for seed in 0..20 {
        let t = Instant::now();
        let config = MboConfig::new(0.2, 2).with_seed(seed);
        let r = fixed_partition(&graph, &config, None, &cache)?;
        batch.push(RunRecord {
            seed,
            modularity: r.modularity,
            classification: Some(classification_rate(&r.labels, &truth)?),
            wall_time_ms: t.elapsed().as_secs_f64() * 1e3,
        });
        println!(
            "seed {seed:2}: Q = {:.4}, classification = {:.4}, {} iterations",
            r.modularity,
            batch.runs.last().unwrap().classification.unwrap(),
            r.iterations
        );
    }
    println!(
        "best Q = {:.4}, best classification = {:.4}, consistency = {:.2}, total {:.2?}",
        batch.best(BatchField::Modularity).unwrap(),
        batch.best(BatchField::Classification).unwrap(),
        consistency(&batch, BatchField::Classification, 0.02),
        start.elapsed()
    );
    Ok(())
}
