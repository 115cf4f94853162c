// SPDX-License-Identifier: Apache-2.0

//! Sliding-window binning of a temporal multilayer network.
//!
//! A window `W_w(t)` of odd width `w` centred on layer label `t` is treated
//! as an `L = w` layer network in which community `r` persists for
//! `T = |W_w(t) ∩ T_r|` layers.

use serde::{Deserialize, Serialize};

use super::table::{mean_stderr, num, Table};
use super::ExperimentSpec;
use crate::aggregate::{sum_layers, threshold, window_centers, window_layers, WindowSpec};
use crate::netgen::{
    generate, place_communities, realize_layer_probs, Community, CommunitySpec, EnsembleParams, LayerProbs,
    Selection,
};
use crate::spectral::{detect, ModularityOperator, NullSource};
use crate::theory::{effective_p, effective_rho, kstar_thresholded, overlap_prediction, theta_bar, theta_hat};
use crate::theory::SummationTheoryInput;
use crate::{par, Error, Result};

/// Fractions of `w` used as thresholds when the grid gives none.
pub const DEFAULT_THRESHOLD_FRACS: [f64; 3] = [1.0, 0.8, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TemporalMode {
    Summation,
    /// Threshold `L̃ = round(frac · w)`, at least 1.
    Thresholded { frac: f64 },
}

impl TemporalMode {
    pub fn name(&self) -> &'static str {
        match self {
            TemporalMode::Summation => "summation",
            TemporalMode::Thresholded { .. } => "thresholded",
        }
    }

    pub fn frac(&self) -> Option<f64> {
        match self {
            TemporalMode::Summation => None,
            TemporalMode::Thresholded { frac } => Some(*frac),
        }
    }

    pub fn threshold(&self, width: usize) -> Option<usize> {
        self.frac().map(|f| ((f * width as f64).round() as usize).clamp(1, width))
    }
}

/// Theory for one community in one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalCell {
    pub mode: TemporalMode,
    pub width: usize,
    /// 1-based centre label.
    pub center: usize,
    pub community: usize,
    pub t_window: usize,
    pub threshold: Option<usize>,
    pub theta: f64,
    pub overlap_pred: f64,
    pub p_hat: Option<f64>,
    pub rho_hat: Option<f64>,
    pub kstar_hat: Option<f64>,
    /// Attains the community's maximum over all windows in this mode.
    pub is_argmax: bool,
}

/// Four communities of eight nodes on 32 layers of density ≈ 0.01, active
/// at labels {3..5}, {7..15}, {18..22} and {24..30}.
pub fn default_temporal_ensemble() -> EnsembleParams {
    let spans = [(3, 5), (7, 15), (18, 22), (24, 30)];
    EnsembleParams {
        n: 10_000,
        layers: 32,
        layer_probs: LayerProbs::Gaussian {
            mean: 0.01,
            std: 0.001,
        },
        communities: spans
            .iter()
            .map(|&(a, b)| CommunitySpec {
                nodes: Selection::Random { random: 8 },
                layers: Selection::Explicit((a - 1..b).collect()),
                rho: 1.0,
            })
            .collect(),
        seed: 0,
    }
}

fn window_zero_based(layer_count: usize, width: usize, center: usize) -> Result<Vec<usize>> {
    Ok(window_layers(layer_count, WindowSpec::new(width, center))?
        .into_iter()
        .map(|l| l - 1)
        .collect())
}

fn cell(
    n: usize,
    probs: &[f64],
    window: &[usize],
    community: &Community,
    mode: TemporalMode,
) -> Result<(usize, f64, Option<f64>, Option<f64>, Option<f64>)> {
    let wprobs: Vec<f64> = window.iter().map(|&l| probs[l]).collect();
    // Community layers relative to the window.
    let local: Vec<usize> = window
        .iter()
        .enumerate()
        .filter(|(_, l)| community.layers.binary_search(l).is_ok())
        .map(|(i, _)| i)
        .collect();
    let t = local.len();
    match mode.threshold(window.len()) {
        None => {
            let theta = theta_bar(&SummationTheoryInput {
                n,
                layer_probs: wprobs,
                size: community.size() as f64,
                persistence: t as f64,
                rho: community.rho,
            })?;
            Ok((t, theta, None, None, None))
        }
        Some(lt) => {
            let p_hat = effective_p(&wprobs, lt)?;
            let rho_hat = effective_rho(&wprobs, &local, community.rho, lt)?;
            let theta = theta_hat(n, community.size() as f64, p_hat, rho_hat);
            Ok((t, theta, Some(p_hat), Some(rho_hat), Some(kstar_thresholded(n, p_hat, rho_hat))))
        }
    }
}

fn modes(fracs: &[f64]) -> Vec<TemporalMode> {
    let fracs: &[f64] = if fracs.is_empty() { &DEFAULT_THRESHOLD_FRACS } else { fracs };
    std::iter::once(TemporalMode::Summation)
        .chain(fracs.iter().map(|&frac| TemporalMode::Thresholded { frac }))
        .collect()
}

/// Theory over every mode, width, centre and community, in that order.
pub fn temporal_theory(
    n: usize,
    layer_probs: &[f64],
    communities: &[Community],
    widths: &[usize],
    threshold_fracs: &[f64],
) -> Result<Vec<TemporalCell>> {
    let layer_count = layer_probs.len();
    let mut cells = Vec::new();
    for mode in modes(threshold_fracs) {
        let start = cells.len();
        for &w in widths {
            for center in window_centers(layer_count, w) {
                let window = window_zero_based(layer_count, w, center)?;
                for (r, c) in communities.iter().enumerate() {
                    let (t_window, theta, p_hat, rho_hat, kstar_hat) = cell(n, layer_probs, &window, c, mode)?;
                    cells.push(TemporalCell {
                        mode,
                        width: w,
                        center,
                        community: r,
                        t_window,
                        threshold: mode.threshold(w),
                        theta,
                        overlap_pred: overlap_prediction(theta),
                        p_hat,
                        rho_hat,
                        kstar_hat,
                        is_argmax: false,
                    });
                }
            }
        }
        let block = &mut cells[start..];
        for r in 0..communities.len() {
            let best = block
                .iter()
                .filter(|c| c.community == r)
                .map(|c| c.overlap_pred)
                .fold(f64::NEG_INFINITY, f64::max);
            for c in block.iter_mut().filter(|c| c.community == r) {
                c.is_argmax = c.overlap_pred == best;
            }
        }
    }
    Ok(cells)
}

/// Per-community overlaps of one generated instance for every cell window.
fn empirical_trial(
    spec: &ExperimentSpec,
    cells: &[TemporalCell],
    communities: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut params = spec.ensemble.clone();
    params.seed = seed;
    let net = generate(&params)?;
    let truth: Vec<Vec<usize>> = net.communities.iter().map(|c| c.nodes.clone()).collect();
    // One solve per (mode, width, centre); cells list communities contiguously.
    let heads: Vec<&TemporalCell> = cells.iter().step_by(communities).collect();
    let solved = par::map(&heads, |c| -> Result<Vec<f64>> {
        let window = window_zero_based(net.num_layers(), c.width, c.center)?;
        let sum = sum_layers(&net, &window)?;
        let agg = match c.threshold {
            Some(lt) => threshold(&sum, lt as u32)?,
            None => sum,
        };
        let op = match spec.null {
            NullSource::Empirical => ModularityOperator::empirical(&agg),
            NullSource::Theoretical => ModularityOperator::theoretical(&agg, &net.layer_probs)?,
        };
        match detect(&op, &truth, spec.k_eigs(communities), &spec.eig_options(seed)) {
            Ok(res) => Ok(res.overlaps.iter().map(|m| m.overlap).collect()),
            Err(Error::NotConverged { .. }) => Ok(vec![f64::NAN; communities]),
            Err(e) => Err(e),
        }
    });
    let mut out = Vec::with_capacity(cells.len());
    for s in solved {
        out.extend(s?);
    }
    Ok(out)
}

pub(crate) fn run_temporal_binning(spec: &ExperimentSpec) -> Result<Vec<Table>> {
    let probs = realize_layer_probs(&spec.ensemble)?;
    let communities = place_communities(&spec.ensemble)?;
    let cells = temporal_theory(
        spec.ensemble.n,
        &probs,
        &communities,
        &spec.grid.widths,
        &spec.grid.threshold_fracs,
    )?;
    let r = communities.len();
    let empirical: Vec<Vec<f64>> = if spec.empirical {
        (0..spec.trials)
            .map(|t| empirical_trial(spec, &cells, r, spec.job_seed(0, t)))
            .collect::<Result<_>>()?
    } else {
        vec![]
    };
    let mut table = Table::new(
        "temporal_binning",
        &[
            "mode",
            "frac",
            "w",
            "t",
            "community",
            "T_window",
            "L_tilde",
            "theta",
            "overlap_pred",
            "p_hat",
            "rho_hat",
            "kstar_hat",
            "is_argmax",
            "overlap_emp",
            "overlap_stderr",
        ],
    );
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for (i, c) in cells.iter().enumerate() {
        let (emp, se) = if empirical.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            mean_stderr(&empirical.iter().map(|e| e[i]).collect::<Vec<_>>())
        };
        table.push(vec![
            c.mode.name().to_string(),
            opt(c.mode.frac()),
            c.width.to_string(),
            c.center.to_string(),
            (c.community + 1).to_string(),
            c.t_window.to_string(),
            c.threshold.map(|l| l.to_string()).unwrap_or_default(),
            num(c.theta),
            num(c.overlap_pred),
            opt(c.p_hat),
            opt(c.rho_hat),
            opt(c.kstar_hat),
            c.is_argmax.to_string(),
            num(emp),
            num(se),
        ]);
    }
    Ok(vec![table])
}
