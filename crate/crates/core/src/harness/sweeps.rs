// SPDX-License-Identifier: Apache-2.0

//! Overlap-versus-size sweeps under summation aggregation.

use super::table::{mean_stderr, num, Table};
use super::ExperimentSpec;
use crate::aggregate::sum_all;
use crate::netgen::{generate, CommunitySpec, Selection};
use crate::spectral::{detect, ModularityOperator, NullSource};
use crate::theory::{DetectabilityPrediction, SummationTheoryInput};
use crate::{par, Result};

/// Mean overlap level used to locate the localization transition.
pub const TRANSITION_LEVEL: f64 = 0.3;

/// First `K` whose mean overlap exceeds `level`.
pub fn transition_first_above(ks: &[f64], means: &[f64], level: f64) -> Option<f64> {
    ks.iter().zip(means).find(|(_, m)| **m > level).map(|(k, _)| *k)
}

/// `K` at which the mean overlap first crosses `level`, interpolated linearly
/// between the two bracketing grid points.
pub fn transition_crossing(ks: &[f64], means: &[f64], level: f64) -> Option<f64> {
    let idx = means.iter().position(|m| *m > level)?;
    if idx == 0 {
        return Some(ks[0]);
    }
    let (k0, k1) = (ks[idx - 1], ks[idx]);
    let (m0, m1) = (means[idx - 1], means[idx]);
    Some(k0 + (level - m0) * (k1 - k0) / (m1 - m0))
}

struct Trial {
    seed: u64,
    overlap: f64,
    eig_index: Option<usize>,
    eigenvalue: f64,
    converged: bool,
    prediction: DetectabilityPrediction,
}

fn run_trial(spec: &ExperimentSpec, persistence: Option<usize>, size: usize, seed: u64) -> Result<Trial> {
    let template = &spec.ensemble.communities[0];
    let mut params = spec.ensemble.clone();
    params.seed = seed;
    params.communities = vec![CommunitySpec {
        nodes: Selection::Random { random: size },
        layers: match persistence {
            Some(t) => Selection::Random { random: t },
            None => template.layers.clone(),
        },
        rho: template.rho,
    }];
    let net = generate(&params)?;
    let community = &net.communities[0];
    let prediction = DetectabilityPrediction::summation(&SummationTheoryInput {
        n: net.n,
        layer_probs: net.layer_probs.clone(),
        size: size as f64,
        persistence: community.persistence() as f64,
        rho: community.rho,
    })?;
    let agg = sum_all(&net)?;
    let op = match spec.null {
        NullSource::Empirical => ModularityOperator::empirical(&agg),
        NullSource::Theoretical => ModularityOperator::theoretical(&agg, &net.layer_probs)?,
    };
    let k = spec.k_eigs(1);
    Ok(match detect(&op, std::slice::from_ref(&community.nodes), k, &spec.eig_options(seed)) {
        Ok(res) => {
            let m = res.overlaps[0];
            Trial {
                seed,
                overlap: m.overlap,
                eig_index: Some(m.eig_index),
                eigenvalue: res.eigenvalues[m.eig_index],
                converged: true,
                prediction,
            }
        }
        Err(crate::Error::NotConverged { .. }) => Trial {
            seed,
            overlap: f64::NAN,
            eig_index: None,
            eigenvalue: f64::NAN,
            converged: false,
            prediction,
        },
        Err(e) => return Err(e),
    })
}

const TRIAL_HEADER: &[&str] = &[
    "T",
    "K",
    "trial",
    "seed",
    "overlap_emp",
    "overlap_pred",
    "theta_bar",
    "kstar",
    "eig_index",
    "eigenvalue",
    "converged",
];

const SUMMARY_HEADER: &[&str] = &[
    "T",
    "K",
    "trials",
    "failures",
    "overlap_emp",
    "overlap_stderr",
    "overlap_pred",
    "theta_bar",
    "kstar",
];

const TRANSITION_HEADER: &[&str] = &["T", "kstar", "first_above", "crossing"];

/// Points are `(T, K)`; `T = None` keeps the template's layer selection.
fn run_sweep(spec: &ExperimentSpec, points: &[(Option<usize>, usize)]) -> Result<Vec<Table>> {
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let results = par::map(&jobs, |&(p, t)| {
        let (persistence, size) = points[p];
        run_trial(spec, persistence, size, spec.job_seed(p, t))
    });
    let results: Vec<Trial> = results.into_iter().collect::<Result<_>>()?;

    let name = spec.kind.name();
    let mut trials = Table::new(format!("{name}_trials"), TRIAL_HEADER);
    let mut summary = Table::new(format!("{name}_summary"), SUMMARY_HEADER);
    let mut transitions = Table::new(format!("{name}_transitions"), TRANSITION_HEADER);
    let template_t = spec.ensemble.communities[0].layers.size();

    let mut by_t: Vec<(usize, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for (p, &(persistence, size)) in points.iter().enumerate() {
        let t_val = persistence.unwrap_or(template_t);
        let chunk = &results[p * spec.trials..(p + 1) * spec.trials];
        for (trial, r) in chunk.iter().enumerate() {
            trials.push(vec![
                t_val.to_string(),
                size.to_string(),
                trial.to_string(),
                r.seed.to_string(),
                num(r.overlap),
                num(r.prediction.overlap_pred),
                num(r.prediction.theta_bar),
                num(r.prediction.kstar),
                r.eig_index.map(|i| i.to_string()).unwrap_or_default(),
                num(r.eigenvalue),
                r.converged.to_string(),
            ]);
        }
        let overlaps: Vec<f64> = chunk.iter().map(|r| r.overlap).collect();
        let (m, se) = mean_stderr(&overlaps);
        let pred = mean_stderr(&chunk.iter().map(|r| r.prediction.overlap_pred).collect::<Vec<_>>()).0;
        let theta = mean_stderr(&chunk.iter().map(|r| r.prediction.theta_bar).collect::<Vec<_>>()).0;
        let kstar = mean_stderr(&chunk.iter().map(|r| r.prediction.kstar).collect::<Vec<_>>()).0;
        let failures = chunk.iter().filter(|r| !r.converged).count();
        summary.push(vec![
            t_val.to_string(),
            size.to_string(),
            spec.trials.to_string(),
            failures.to_string(),
            num(m),
            num(se),
            num(pred),
            num(theta),
            num(kstar),
        ]);
        match by_t.iter_mut().find(|e| e.0 == t_val) {
            Some(e) => {
                e.1.push(size as f64);
                e.2.push(m);
                e.3.push(kstar);
            }
            None => by_t.push((t_val, vec![size as f64], vec![m], vec![kstar])),
        }
    }
    for (t, ks, means, kstars) in by_t {
        transitions.push(vec![
            t.to_string(),
            num(mean_stderr(&kstars).0),
            num(transition_first_above(&ks, &means, TRANSITION_LEVEL).unwrap_or(f64::NAN)),
            num(transition_crossing(&ks, &means, TRANSITION_LEVEL).unwrap_or(f64::NAN)),
        ]);
    }
    Ok(vec![trials, summary, transitions])
}

/// Sweep community size at the template's persistence.
pub fn run_localization_sweep(spec: &ExperimentSpec) -> Result<Vec<Table>> {
    let points: Vec<(Option<usize>, usize)> = spec.grid.k.iter().map(|&k| (None, k)).collect();
    run_sweep(spec, &points)
}

/// Sweep community size for each persistence in `grid.t`.
pub fn run_persistence_sweep(spec: &ExperimentSpec) -> Result<Vec<Table>> {
    let points: Vec<(Option<usize>, usize)> = spec
        .grid
        .t
        .iter()
        .flat_map(|&t| spec.grid.k.iter().map(move |&k| (Some(t), k)))
        .collect();
    run_sweep(spec, &points)
}
