//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own PASS/FAIL line; exits nonzero if any fails.

mod common;

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use balanced_tv::construct::{knn_graph, planted_partition, two_moons, TWO_MOONS_NOISE};
use balanced_tv::eigen::{smallest_eigenpairs, EigenCache, EigenOptions, OperatorM};
use balanced_tv::energy::{balanced_cut_i, balanced_cut_ii, balanced_tv_i, modularity};
use balanced_tv::graph::SparseGraph;
use balanced_tv::mbo::{diffuse, threshold, MboConfig};
use balanced_tv::metrics::{classification_rate, consistency, purity, BatchField, RunBatch, RunRecord};
use balanced_tv::oracle::{dense_eigen_oracle, dense_m, inf_norm};
use balanced_tv::partition::{Labels, PartitionMatrix, Supervision};
use balanced_tv::partitioner::{fixed_partition, recursive_partition, sweep_nhat, RecursiveParams};
use balanced_tv::Result;
use rand::seq::index::sample;
use rand::Rng;

use common::{all_partitions, dense_heat, random_graph, random_labels, rng, row_sum_norm};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn moons_graph() -> Result<(SparseGraph, Labels)> {
    let (points, truth) = two_moons(2000, 100, TWO_MOONS_NOISE, 0)?;
    Ok((knn_graph(&points, 13, 13)?, truth))
}

fn moons_batch(graph: &SparseGraph, truth: &Labels, supervised: bool) -> Result<RunBatch> {
    let cache = EigenCache::in_memory();
    let mut batch = RunBatch::default();
    for seed in 0..20u64 {
        let t = Instant::now();
        let config = MboConfig::new(0.2, 2).with_seed(seed);
        let sup = if supervised {
            let mut r = rng(1000 + seed);
            let n = graph.n_nodes();
            let known: Vec<(usize, usize)> =
                sample(&mut r, n, n / 10).into_iter().map(|i| (i, truth.as_slice()[i])).collect();
            Some(Supervision::from_known_labels(&known, 2, 100.0)?)
        } else {
            None
        };
        let res = fixed_partition(graph, &config, sup.as_ref(), &cache)?;
        batch.push(RunRecord {
            seed,
            modularity: res.modularity,
            classification: Some(classification_rate(&res.labels, truth)?),
            wall_time_ms: t.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(batch)
}

fn two_moons_end_to_end() -> Result<Outcome> {
    let start = Instant::now();
    let (graph, truth) = moons_graph()?;
    let batch = moons_batch(&graph, &truth, false)?;
    let elapsed = start.elapsed();
    let q = batch.best(BatchField::Modularity).unwrap();
    let c = batch.best(BatchField::Classification).unwrap();
    outcome(
        q >= 0.80 && c >= 0.93 && elapsed <= Duration::from_secs(60),
        format!("best modularity {q:.4}, best classification {c:.4}, {elapsed:.2?}"),
    )
}

fn supervision_consistency() -> Result<Outcome> {
    let (graph, truth) = moons_graph()?;
    let plain = consistency(&moons_batch(&graph, &truth, false)?, BatchField::Classification, 0.02);
    let sup = consistency(&moons_batch(&graph, &truth, true)?, BatchField::Classification, 0.02);
    outcome(
        sup >= 0.9 && sup >= plain,
        format!("supervised consistency {sup:.2}, unsupervised {plain:.2}"),
    )
}

fn equivalence_suite() -> Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(3);
    let mut worst = [0.0f64; 3];
    for _ in 0..200 {
        let n = r.random_range(2..150);
        let p = r.random_range(0.02..0.5);
        let g = random_graph(&mut r, n, p, false);
        let nhat = r.random_range(1..8);
        let labels = random_labels(&mut r, n, nhat);
        let gamma = r.random_range(0.01..5.0);
        let two_m = g.total_weight();
        let q = modularity(&g, &labels, gamma)?;
        let bc1 = balanced_cut_i(&g, &labels, gamma)?;
        let bc2 = balanced_cut_ii(&g, &labels, gamma, nhat)?;
        let u = PartitionMatrix::from_labels(&labels, nhat)?.to_dense();
        let tv = balanced_tv_i(&g, &u, gamma)?;
        worst[0] = worst[0].max((q - (1.0 - bc1 / two_m)).abs() / q.abs().max(1.0));
        worst[1] = worst[1].max((bc1 - bc2).abs());
        worst[2] = worst[2].max((tv - bc1).abs() / bc1.abs().max(1.0));
    }
    let elapsed = start.elapsed();
    outcome(
        worst[0] <= 1e-12 && worst[1] <= 1e-10 && worst[2] <= 1e-12 && elapsed <= Duration::from_secs(5),
        format!(
            "max deviations {:.1e} / {:.1e} / {:.1e}, {elapsed:.2?}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn freezing_bound() -> Result<Outcome> {
    let mut r = rng(4);
    let mut moved = 0;
    let mut moved_spectral = 0;
    for _ in 0..100 {
        let n = r.random_range(2..=50);
        let p = r.random_range(0.05..0.6);
        let g = random_graph(&mut r, n, p, false);
        let gamma = r.random_range(0.05..3.0);
        let op = OperatorM::new(&g, gamma)?;
        let u0 = PartitionMatrix::from_labels(&random_labels(&mut r, n, 2), 2)?;
        let tau = 0.99 * LN_2 / (2.0 * (gamma + 1.0) * g.max_degree());
        if threshold(&(dense_heat(&op, tau) * u0.to_dense()))? != u0 {
            moved += 1;
        }
        let rho = *dense_eigen_oracle(&op)?.eigenvalues.last().unwrap();
        let tau = 0.99 * (1.0 + 1.0 / (n as f64).sqrt()).ln() / rho;
        if threshold(&(dense_heat(&op, tau) * u0.to_dense()))? != u0 {
            moved_spectral += 1;
        }
    }
    outcome(
        moved == 0 && moved_spectral == 0,
        format!("{moved} degree-bound and {moved_spectral} spectral-bound graphs had switching nodes"),
    )
}

fn decay_and_growth() -> Result<Outcome> {
    let mut r = rng(5);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..100 {
        let n = r.random_range(2..=60);
        let p = r.random_range(0.05..0.5);
        let connected = r.random_bool(0.7);
        let g = random_graph(&mut r, n, p, connected);
        let gamma = r.random_range(0.05..3.0);
        let op = OperatorM::new(&g, gamma)?;
        let lambda_1 = dense_eigen_oracle(&op)?.eigenvalues[0].max(0.0);
        let m_inf = inf_norm(&dense_m(&op)?);
        let nhat = r.random_range(1..5);
        let u0 = PartitionMatrix::from_labels(&random_labels(&mut r, n, nhat), nhat)?.to_dense();
        let tau = 10f64.powf(r.random_range(-3.0..1.0));
        let u = dense_heat(&op, tau) * &u0;
        let decay_slack = (-tau * lambda_1).exp() * u0.norm() - u.norm();
        let growth_slack = (tau * m_inf).exp_m1() - row_sum_norm(&(&u - &u0));
        tightest = tightest.min(decay_slack.min(growth_slack));
        if decay_slack < -1e-10 || growth_slack < -1e-10 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations, smallest slack {tightest:.2e}"))
}

fn pseudospectral_exactness() -> Result<Outcome> {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = r.random_range(2..=100);
        let p = r.random_range(0.03..0.4);
        let g = random_graph(&mut r, n, p, false);
        let gamma = r.random_range(0.05..3.0);
        let op = OperatorM::new(&g, gamma)?;
        let basis = smallest_eigenpairs(&op, n, &EigenOptions::default())?;
        let nhat = r.random_range(2..5);
        let u = PartitionMatrix::from_labels(&random_labels(&mut r, n, nhat), nhat)?.to_dense();
        let dt = 10f64.powf(r.random_range(-2.0..0.5));
        worst = worst.max((diffuse(&basis, &u, dt)? - dense_heat(&op, dt) * &u).amax());
    }
    outcome(worst <= 1e-8, format!("max deviation {worst:.2e}"))
}

fn small_instance_optimality() -> Result<Outcome> {
    let mut r = rng(7);
    let mut hits = 0;
    let mut exceeded = 0;
    for _ in 0..50 {
        let n = r.random_range(5..=12);
        let p = r.random_range(0.2..0.6);
        let g = random_graph(&mut r, n, p, false);
        let optimum = all_partitions(n, 4)
            .into_iter()
            .map(|l| modularity(&g, &Labels::new(l), 1.0))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let cache = EigenCache::in_memory();
        let mut best = f64::NEG_INFINITY;
        for seed in 0..10 {
            let res = sweep_nhat(&g, 1..=4, &MboConfig::new(1.0, 2).with_seed(seed), &cache)?;
            best = best.max(res.best.modularity);
        }
        if best > optimum + 1e-12 {
            exceeded += 1;
        }
        if best >= optimum - 1e-12 {
            hits += 1;
        }
    }
    outcome(
        hits >= 40 && exceeded == 0,
        format!("optimum attained on {hits}/50 graphs, exceeded on {exceeded}"),
    )
}

fn recursive_recovery() -> Result<Outcome> {
    let start = Instant::now();
    let (g, truth) = planted_partition(400, 8, 10.0, 1.0, 0)?;
    let mut best = 0.0f64;
    let mut communities = 0;
    for seed in 0..5 {
        let res = recursive_partition(&g, &MboConfig::new(1.0, 2).with_seed(seed), &RecursiveParams::default())?;
        let p = purity(&res.labels, &truth)?;
        if p > best {
            best = p;
            communities = res.labels.n_communities();
        }
    }
    let elapsed = start.elapsed();
    outcome(
        best >= 0.9 && elapsed <= Duration::from_secs(30),
        format!("best purity {best:.4} with {communities} communities, {elapsed:.2?}"),
    )
}

fn eigensolver_conformance() -> Result<Outcome> {
    let mut r = rng(9);
    let mut worst_value = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut worst_orth = 0.0f64;
    for case in 0..50 {
        let n = r.random_range(2..=200);
        let p = r.random_range(0.01..0.2);
        let g = random_graph(&mut r, n, p, case % 4 != 0);
        let gamma = r.random_range(0.05..3.0);
        let op = OperatorM::new(&g, gamma)?;
        let n_eig = r.random_range(1..=n.min(30));
        let basis = smallest_eigenpairs(&op, n_eig, &EigenOptions { seed: case, ..EigenOptions::default() })?;
        let dense = dense_eigen_oracle(&op)?;
        for (i, &l) in basis.eigenvalues.iter().enumerate() {
            worst_value = worst_value.max((l - dense.eigenvalues[i]).abs());
            let v = basis.eigenvectors.column(i);
            let mv = op.apply(v.as_slice())?;
            let res = mv.iter().zip(v.iter()).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt();
            worst_residual = worst_residual.max(res / v.norm());
        }
        worst_orth = worst_orth.max(basis.orthonormality_error());
    }
    outcome(
        worst_value <= 1e-8 && worst_residual <= 1e-6 && worst_orth <= 1e-8,
        format!("max |Δλ| {worst_value:.2e}, max residual {worst_residual:.2e}, orthonormality {worst_orth:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("two moons end to end", two_moons_end_to_end),
        ("supervision consistency", supervision_consistency),
        ("equivalent forms of modularity", equivalence_suite),
        ("freezing bound", freezing_bound),
        ("decay and growth bounds", decay_and_growth),
        ("pseudospectral exactness", pseudospectral_exactness),
        ("small-instance optimality", small_instance_optimality),
        ("recursive recovery", recursive_recovery),
        ("eigensolver conformance", eigensolver_conformance),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("criterion {} {name}: {} ({detail})", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failures > 0 {
        println!("{failures} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
