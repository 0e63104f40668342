//! Nonlocal-means features on a synthetic hyperspectral cube: four
//! material regions with distinct noisy spectra, segmented by MBO on a
//! k-NN graph of the patch features.

use balanced_tv::construct::{knn_graph, nonlocal_means_features, HyperCube};
use balanced_tv::eigen::EigenCache;
use balanced_tv::mbo::MboConfig;
use balanced_tv::metrics::classification_rate;
use balanced_tv::partition::Labels;
use balanced_tv::partitioner::fixed_partition;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> balanced_tv::Result<()> {
    let (h, w, bands) = (40, 40, 30);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.15).unwrap();
    let region = |r: usize, c: usize| 2 * usize::from(r >= h / 2) + usize::from(c >= w / 2);
    let mut values = Vec::with_capacity(h * w * bands);
    let mut truth = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let k = region(r, c);
            truth.push(k);
            for b in 0..bands {
                let x = b as f64 / bands as f64;
                values.push((x * (k + 1) as f64 * 3.0).sin() + noise.sample(&mut rng));
            }
        }
    }
    let cube = HyperCube::new(h, w, bands, values)?;
    let features = nonlocal_means_features(&cube, 3)?;
    let graph = knn_graph(&features, 10, 10)?;

    let cache = EigenCache::in_memory();
    let config = MboConfig::new(1.0, 4).with_seed(0);
    let r = fixed_partition(&graph, &config, None, &cache)?;
    println!(
        "{} pixels, Q = {:.4}, classification = {:.4}",
        h * w,
        r.modularity,
        classification_rate(&r.labels, &Labels::new(truth))?
    );
    Ok(())
}
