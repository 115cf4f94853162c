// SPDX-License-Identifier: Apache-2.0

//! Thresholded aggregation: effective-probability probes and `K̂*` sweeps.

use super::table::{mean_stderr, num, Table};
use super::ExperimentSpec;
use crate::aggregate::{sum_all, threshold};
use crate::netgen::{generate, place_communities, realize_layer_probs, LayerProbs, Selection};
use crate::spectral::{detect, ModularityOperator, NullSource};
use crate::theory::{
    effective_p, effective_rho, kstar_summation, kstar_thresholded, overlap_prediction, theta_hat,
    SummationTheoryInput,
};
use crate::{par, Error, Result};

fn thresholds(spec: &ExperimentSpec) -> Vec<usize> {
    if spec.grid.thresholds.is_empty() {
        (1..=spec.ensemble.layers).collect()
    } else {
        spec.grid.thresholds.clone()
    }
}

fn probe_sizes(spec: &ExperimentSpec) -> Vec<usize> {
    if spec.grid.k.is_empty() {
        vec![spec.ensemble.communities[0].nodes.size()]
    } else {
        spec.grid.k.clone()
    }
}

struct ProbeRow {
    p_hat_emp: f64,
    p_hat: f64,
    p_hat_se: f64,
    rho_hat_emp: f64,
    rho_hat: f64,
    rho_hat_se: f64,
    overlap: f64,
    converged: bool,
    theta_hat: f64,
    kstar_hat: f64,
}

fn probe_trial(spec: &ExperimentSpec, size: usize, seed: u64, lts: &[usize]) -> Result<Vec<ProbeRow>> {
    let mut params = spec.ensemble.clone();
    params.seed = seed;
    params.communities[0].nodes = Selection::Random { random: size };
    let net = generate(&params)?;
    let community = &net.communities[0];
    let n = net.n;
    let mut inside = vec![false; n];
    for &i in &community.nodes {
        inside[i] = true;
    }
    let block_pairs = (size * (size + 1) / 2) as f64;
    let bg_pairs = (n * (n + 1) / 2) as f64 - block_pairs;
    let sum = sum_all(&net)?;
    let mut rows = Vec::with_capacity(lts.len());
    for &lt in lts {
        let th = threshold(&sum, lt as u32)?;
        let (mut bg, mut blk) = (0usize, 0usize);
        for &(i, j, _) in &th.entries {
            if inside[i as usize] && inside[j as usize] {
                blk += 1;
            } else {
                bg += 1;
            }
        }
        let p_hat = effective_p(&net.layer_probs, lt)?;
        let rho_hat = effective_rho(&net.layer_probs, &community.layers, community.rho, lt)?;
        let th_pred = theta_hat(n, size as f64, p_hat, rho_hat);
        let (overlap, converged) = if spec.detect {
            let op = match spec.null {
                NullSource::Empirical => ModularityOperator::empirical(&th),
                NullSource::Theoretical => ModularityOperator::new(&th, p_hat, NullSource::Theoretical),
            };
            match detect(&op, std::slice::from_ref(&community.nodes), spec.k_eigs(1), &spec.eig_options(seed)) {
                Ok(res) => (res.overlaps[0].overlap, true),
                Err(Error::NotConverged { .. }) => (f64::NAN, false),
                Err(e) => return Err(e),
            }
        } else {
            (f64::NAN, true)
        };
        rows.push(ProbeRow {
            p_hat_emp: bg as f64 / bg_pairs,
            p_hat,
            p_hat_se: (p_hat * (1.0 - p_hat) / bg_pairs).sqrt(),
            rho_hat_emp: blk as f64 / block_pairs,
            rho_hat,
            rho_hat_se: (rho_hat * (1.0 - rho_hat) / block_pairs).sqrt(),
            overlap,
            converged,
            theta_hat: th_pred,
            kstar_hat: kstar_thresholded(n, p_hat, rho_hat),
        });
    }
    Ok(rows)
}

/// Empirical thresholded edge frequencies (and optionally overlaps) against
/// the effective-probability predictions.
pub fn run_threshold_probe(spec: &ExperimentSpec) -> Result<Vec<Table>> {
    let lts = thresholds(spec);
    let sizes = probe_sizes(spec);
    let jobs: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let results = par::map(&jobs, |&(p, t)| probe_trial(spec, sizes[p], spec.job_seed(p, t), &lts));
    let results: Vec<Vec<ProbeRow>> = results.into_iter().collect::<Result<_>>()?;

    let mut trials = Table::new(
        "threshold_probe_trials",
        &[
            "K",
            "L_tilde",
            "trial",
            "seed",
            "p_hat_emp",
            "p_hat",
            "p_hat_se",
            "rho_hat_emp",
            "rho_hat",
            "rho_hat_se",
            "overlap_emp",
            "overlap_pred",
            "theta_hat",
            "kstar_hat",
            "converged",
        ],
    );
    let mut summary = Table::new(
        "threshold_probe_summary",
        &[
            "K",
            "L_tilde",
            "trials",
            "failures",
            "p_hat_emp",
            "p_hat",
            "rho_hat_emp",
            "rho_hat",
            "overlap_emp",
            "overlap_stderr",
            "overlap_pred",
            "theta_hat",
            "kstar_hat",
        ],
    );
    for (p, &size) in sizes.iter().enumerate() {
        let chunk = &results[p * spec.trials..(p + 1) * spec.trials];
        for (li, &lt) in lts.iter().enumerate() {
            for (t, rows) in chunk.iter().enumerate() {
                let r = &rows[li];
                trials.push(vec![
                    size.to_string(),
                    lt.to_string(),
                    t.to_string(),
                    spec.job_seed(p, t).to_string(),
                    num(r.p_hat_emp),
                    num(r.p_hat),
                    num(r.p_hat_se),
                    num(r.rho_hat_emp),
                    num(r.rho_hat),
                    num(r.rho_hat_se),
                    num(r.overlap),
                    num(overlap_prediction(r.theta_hat)),
                    num(r.theta_hat),
                    num(r.kstar_hat),
                    r.converged.to_string(),
                ]);
            }
            let col = |f: fn(&ProbeRow) -> f64| -> Vec<f64> { chunk.iter().map(|rows| f(&rows[li])).collect() };
            let (om, ose) = mean_stderr(&col(|r| r.overlap));
            let theta = mean_stderr(&col(|r| r.theta_hat)).0;
            let pred = mean_stderr(&col(|r| overlap_prediction(r.theta_hat))).0;
            summary.push(vec![
                size.to_string(),
                lt.to_string(),
                spec.trials.to_string(),
                chunk.iter().filter(|rows| !rows[li].converged).count().to_string(),
                num(mean_stderr(&col(|r| r.p_hat_emp)).0),
                num(mean_stderr(&col(|r| r.p_hat)).0),
                num(mean_stderr(&col(|r| r.rho_hat_emp)).0),
                num(mean_stderr(&col(|r| r.rho_hat)).0),
                num(om),
                num(ose),
                num(pred),
                num(theta),
                num(mean_stderr(&col(|r| r.kstar_hat)).0),
            ]);
        }
    }
    Ok(vec![trials, summary])
}

/// One row of a `K̂*` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct KstarPoint {
    pub threshold: usize,
    pub p_hat: f64,
    pub rho_hat: f64,
    pub kstar_hat: f64,
}

/// `K̂*` for every threshold and the summation `K*` for one mean probability.
pub fn kstar_curve(spec: &ExperimentSpec, mean_p: f64, seed: u64) -> Result<(Vec<KstarPoint>, f64, usize)> {
    let mut params = spec.ensemble.clone();
    params.seed = seed;
    params.layer_probs = match &spec.ensemble.layer_probs {
        LayerProbs::Gaussian { std, .. } => LayerProbs::Gaussian { mean: mean_p, std: *std },
        _ => LayerProbs::constant(mean_p, params.layers),
    };
    let probs = realize_layer_probs(&params)?;
    let community = place_communities(&params)?.remove(0);
    let t = community.persistence();
    let kstar = kstar_summation(&SummationTheoryInput {
        n: params.n,
        layer_probs: probs.clone(),
        size: 1.0,
        persistence: t as f64,
        rho: community.rho,
    })?;
    let points = thresholds(spec)
        .into_iter()
        .map(|lt| {
            let p_hat = effective_p(&probs, lt)?;
            let rho_hat = effective_rho(&probs, &community.layers, community.rho, lt)?;
            Ok(KstarPoint {
                threshold: lt,
                p_hat,
                rho_hat,
                kstar_hat: kstar_thresholded(params.n, p_hat, rho_hat),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((points, kstar, t))
}

/// Theory-level sweep of `K̂*` over thresholds for each mean probability.
pub fn run_threshold_kstar_sweep(spec: &ExperimentSpec) -> Result<Vec<Table>> {
    let mut table = Table::new(
        "threshold_kstar_sweep",
        &["p", "T", "L_tilde", "p_hat", "rho_hat", "kstar_hat", "kstar", "ratio", "is_argmin"],
    );
    let curves = par::map_range(spec.grid.p.len(), |i| kstar_curve(spec, spec.grid.p[i], spec.job_seed(i, 0)));
    for (i, curve) in curves.into_iter().enumerate() {
        let (points, kstar, t) = curve?;
        let best = points.iter().map(|p| p.kstar_hat).fold(f64::INFINITY, f64::min);
        for pt in points {
            table.push(vec![
                num(spec.grid.p[i]),
                t.to_string(),
                pt.threshold.to_string(),
                num(pt.p_hat),
                num(pt.rho_hat),
                num(pt.kstar_hat),
                num(kstar),
                num(pt.kstar_hat / kstar),
                (pt.kstar_hat == best).to_string(),
            ]);
        }
    }
    Ok(vec![table])
}
