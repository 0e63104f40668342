//! Two moons with 10% of the labels known, compared against the
//! unsupervised runs on the same graph.

use balanced_tv::construct::{knn_graph, two_moons, TWO_MOONS_NOISE};
use balanced_tv::eigen::EigenCache;
use balanced_tv::mbo::MboConfig;
use balanced_tv::metrics::{classification_rate, consistency, BatchField, RunBatch, RunRecord};
use balanced_tv::partition::Supervision;
use balanced_tv::partitioner::fixed_partition;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> balanced_tv::Result<()> {
    let (points, truth) = two_moons(2000, 100, TWO_MOONS_NOISE, 0)?;
    let graph = knn_graph(&points, 13, 13)?;
    let n = graph.n_nodes();
    let cache = EigenCache::in_memory();

    for supervised in [false, true] {
        let mut batch = RunBatch::default();
        for seed in 0..20u64 {
            let sup = if supervised {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let known: Vec<(usize, usize)> =
                    sample(&mut rng, n, n / 10).into_iter().map(|i| (i, truth.as_slice()[i])).collect();
                Some(Supervision::from_known_labels(&known, 2, 100.0)?)
            } else {
                None
            };
            let config = MboConfig::new(0.2, 2).with_seed(seed);
            let r = fixed_partition(&graph, &config, sup.as_ref(), &cache)?;
            let c = classification_rate(&r.labels, &truth)?;
            println!(
                "{} seed {seed:2}: Q = {:.4}, classification = {c:.4}, iterations = {}, dt = {:.4}",
                if supervised { "supervised  " } else { "unsupervised" },
                r.modularity,
                r.iterations,
                r.dt_used
            );
            batch.push(RunRecord { seed, modularity: r.modularity, classification: Some(c), wall_time_ms: 0.0 });
        }
        println!(
            "classification consistency: {:.2}",
            consistency(&batch, BatchField::Classification, 0.02)
        );
    }
    Ok(())
}
