// SPDX-License-Identifier: Apache-2.0

//! Closed-form detectability predictions.
//!
//! Summation aggregation: a community of size `K`, persistence `T` and density
//! `ρ` in an `L`-layer network with layer probabilities `{p_l}` has signal
//! strength
//!
//! ```text
//! θ̄ = T·K/√(N·L) · (ρ − ⟨p⟩)/√⟨p(1−p)⟩
//! ```
//!
//! and the dominant eigenvector overlap is `1 − 1/θ̄²` above `θ̄ = 1`, zero
//! below. Thresholding at `L̃` turns the layers into a single binary network
//! whose effective background and within-community probabilities are
//! Poisson-binomial upper tails; the same law then applies with `L = T = 1`.
//!
//! Averages `⟨·⟩` are over the realized per-layer probabilities handed in.

use serde::{Deserialize, Serialize};

use crate::pbdist::PoissonBinomial;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummationTheoryInput {
    pub n: usize,
    pub layer_probs: Vec<f64>,
    /// Community size `K` (real-valued so that limits can be solved for).
    pub size: f64,
    /// Persistence `T`: number of aggregated layers containing the community.
    pub persistence: f64,
    pub rho: f64,
}

impl SummationTheoryInput {
    pub fn layers(&self) -> usize {
        self.layer_probs.len()
    }

    pub fn mean_p(&self) -> f64 {
        mean(&self.layer_probs)
    }

    pub fn mean_pq(&self) -> f64 {
        mean_pq(&self.layer_probs)
    }

    fn check(&self) -> Result<()> {
        if self.layer_probs.is_empty() {
            return Err(Error::domain("no layer probabilities"));
        }
        if self.layer_probs.iter().any(|p| !(0.0..=1.0).contains(p)) || !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::domain("probability outside (0,1]"));
        }
        if self.persistence < 0.0 || self.persistence > self.layers() as f64 {
            return Err(Error::domain(format!(
                "persistence {} outside 0..={}",
                self.persistence,
                self.layers()
            )));
        }
        if self.mean_pq() <= 0.0 {
            return Err(Error::domain("degenerate ensemble: ⟨p(1−p)⟩ = 0"));
        }
        Ok(())
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn mean_pq(xs: &[f64]) -> f64 {
    xs.iter().map(|p| p * (1.0 - p)).sum::<f64>() / xs.len() as f64
}

/// Rescaled signal strength `θ̄` of a community under summation.
pub fn theta_bar(inp: &SummationTheoryInput) -> Result<f64> {
    inp.check()?;
    let nl = (inp.n as f64 * inp.layers() as f64).sqrt();
    Ok(inp.persistence * inp.size / nl * (inp.rho - inp.mean_p()) / inp.mean_pq().sqrt())
}

/// Limiting squared overlap `1 − 1/θ²` for `θ > 1`, otherwise 0.
pub fn overlap_prediction(theta: f64) -> f64 {
    if theta > 1.0 {
        1.0 - 1.0 / (theta * theta)
    } else {
        0.0
    }
}

/// Critical community size `K*` under summation. Infinite for `T = 0`.
pub fn kstar_summation(inp: &SummationTheoryInput) -> Result<f64> {
    inp.check()?;
    let mp = inp.mean_p();
    if inp.rho <= mp {
        return Err(Error::domain(format!(
            "community density {} not above background {mp}",
            inp.rho
        )));
    }
    if inp.persistence == 0.0 {
        return Ok(f64::INFINITY);
    }
    let t = inp.persistence;
    Ok((inp.n as f64 * inp.layers() as f64 / (t * t)).sqrt() * inp.mean_pq().sqrt() / (inp.rho - mp))
}

/// Large-`L` behaviour of `K*` when `T ∝ L^β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingLimit {
    Vanishes,
    Diverges,
    Constant,
}

pub fn kstar_scaling_limit(beta: f64) -> ScalingLimit {
    if beta > 0.5 {
        ScalingLimit::Vanishes
    } else if beta < 0.5 {
        ScalingLimit::Diverges
    } else {
        ScalingLimit::Constant
    }
}

fn check_threshold(layers: usize, threshold: usize) -> Result<()> {
    if threshold < 1 || threshold > layers {
        return Err(Error::domain(format!("threshold {threshold} outside 1..={layers}")));
    }
    Ok(())
}

/// Background effective edge probability `p̂ = P(Ā_ij ≥ L̃)`.
pub fn effective_p(layer_probs: &[f64], threshold: usize) -> Result<f64> {
    check_threshold(layer_probs.len(), threshold)?;
    Ok(PoissonBinomial::new(layer_probs.to_vec())?.sf(threshold as i64))
}

/// Within-community effective probability from the mixed list
/// `q_l = ρ` for `l ∈ layers`, `q_l = p_l` otherwise. `layers` are indices
/// into `layer_probs`.
pub fn effective_rho(layer_probs: &[f64], layers: &[usize], rho: f64, threshold: usize) -> Result<f64> {
    check_threshold(layer_probs.len(), threshold)?;
    let mut q = layer_probs.to_vec();
    for &l in layers {
        *q.get_mut(l)
            .ok_or_else(|| Error::domain(format!("community layer {l} out of range")))? = rho;
    }
    Ok(PoissonBinomial::new(q)?.sf(threshold as i64))
}

/// Clique form (`ρ = 1`): `1 − F(L̃ − T − 1; L − T, {p_l}_{l∉layers})`.
pub fn effective_rho_clique(layer_probs: &[f64], layers: &[usize], threshold: usize) -> Result<f64> {
    check_threshold(layer_probs.len(), threshold)?;
    if layers.iter().any(|&l| l >= layer_probs.len()) {
        return Err(Error::domain("community layer out of range"));
    }
    let rest: Vec<f64> = layer_probs
        .iter()
        .enumerate()
        .filter(|(l, _)| !layers.contains(l))
        .map(|(_, &p)| p)
        .collect();
    let t = layers.len() as i64;
    // P(X ≥ L̃ − T) over the layers without the community, i.e.
    // 1 − F(L̃ − T − 1) taken as a direct tail
    Ok(PoissonBinomial::new(rest)?.sf(threshold as i64 - t))
}

/// Signal strength of a thresholded network, `K(ρ̂ − p̂)/√(N p̂(1 − p̂))`.
/// Zero when the contrast is not positive.
pub fn theta_hat(n: usize, size: f64, p_hat: f64, rho_hat: f64) -> f64 {
    let contrast = rho_hat - p_hat;
    if contrast <= 0.0 {
        return 0.0;
    }
    let denom = (n as f64 * p_hat * (1.0 - p_hat)).sqrt();
    if denom == 0.0 {
        return f64::INFINITY;
    }
    size * contrast / denom
}

/// Critical size `K̂*` for a thresholded network. `+∞` when `ρ̂ ≤ p̂`.
pub fn kstar_thresholded(n: usize, p_hat: f64, rho_hat: f64) -> f64 {
    if rho_hat <= p_hat {
        return f64::INFINITY;
    }
    (n as f64 * p_hat * (1.0 - p_hat)).sqrt() / (rho_hat - p_hat)
}

/// Sparse-clique approximation `K̂* ≈ √(N p̂)` at `L̃ = T`.
pub fn kstar_sparse_clique_approx(n: usize, p_hat_at_t: f64) -> f64 {
    (n as f64 * p_hat_at_t).sqrt()
}

/// Limiting Hoeffding bound `p̂^(T) ≤ exp(−2T²/L)` for vanishing `⟨p⟩`.
pub fn hoeffding_bound(t: usize, l: usize) -> f64 {
    (-2.0 * (t * t) as f64 / l as f64).exp()
}

/// Hoeffding bound at finite mean probability, `exp(−2L(⟨p⟩ − T/L)²)`,
/// valid when `⟨p⟩ < T/L`.
pub fn hoeffding_bound_at(t: usize, l: usize, mean_p: f64) -> f64 {
    let d = mean_p - t as f64 / l as f64;
    (-2.0 * l as f64 * d * d).exp()
}

/// Sparse approximation of the summation limit, `√(N L ⟨p⟩ / T²)`.
pub fn kstar_summation_sparse(n: usize, l: usize, mean_p: f64, t: f64) -> f64 {
    (n as f64 * l as f64 * mean_p / (t * t)).sqrt()
}

/// Bundle of predictions for one community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectabilityPrediction {
    pub theta_bar: f64,
    pub overlap_pred: f64,
    pub kstar: f64,
    pub p_hat: Option<f64>,
    pub rho_hat: Option<f64>,
    pub theta_hat: Option<f64>,
    pub kstar_hat: Option<f64>,
}

impl DetectabilityPrediction {
    pub fn summation(inp: &SummationTheoryInput) -> Result<Self> {
        let theta = theta_bar(inp)?;
        Ok(Self {
            theta_bar: theta,
            overlap_pred: overlap_prediction(theta),
            kstar: kstar_summation(inp)?,
            p_hat: None,
            rho_hat: None,
            theta_hat: None,
            kstar_hat: None,
        })
    }

    /// Predictions for the summation and for the network thresholded at
    /// `threshold`. `layers` indexes the community's layers within
    /// `inp.layer_probs`; `overlap_pred` refers to the thresholded network.
    pub fn thresholded(inp: &SummationTheoryInput, layers: &[usize], threshold: usize) -> Result<Self> {
        let mut out = Self::summation(inp)?;
        let p_hat = effective_p(&inp.layer_probs, threshold)?;
        let rho_hat = effective_rho(&inp.layer_probs, layers, inp.rho, threshold)?;
        let th = theta_hat(inp.n, inp.size, p_hat, rho_hat);
        out.p_hat = Some(p_hat);
        out.rho_hat = Some(rho_hat);
        out.theta_hat = Some(th);
        out.kstar_hat = Some(kstar_thresholded(inp.n, p_hat, rho_hat));
        out.overlap_pred = overlap_prediction(th);
        Ok(out)
    }
}
