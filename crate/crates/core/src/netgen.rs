// SPDX-License-Identifier: Apache-2.0

//! Multilayer Erdős–Rényi ensembles with planted small communities.
//!
//! Each layer is an ER graph on `n` nodes with its own edge probability.
//! For every community and every layer it is active in, the pairs inside the
//! community block are drawn with the community density instead of the layer
//! probability: the background draw for those pairs is discarded, not
//! unioned. Self-loops are ordinary single Bernoulli draws, and the block
//! includes its diagonal.
//!
//! Background edges are sampled by geometric skipping over the upper
//! triangle (diagonal included), so a layer costs `O(expected edges)`.
//! Each layer has its own RNG stream (see [`crate::seed`]), so layers are
//! generated in parallel and the result does not depend on thread count.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{par, seed, Error, Result};

/// Realized probabilities are clamped to `(PROB_EPS, 1 - PROB_EPS)`.
pub const PROB_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerProbs {
    Explicit { values: Vec<f64> },
    Gaussian { mean: f64, std: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl LayerProbs {
    pub fn constant(p: f64, layers: usize) -> Self {
        LayerProbs::Explicit {
            values: vec![p; layers],
        }
    }
}

/// Either an explicit index list or "pick `random` indices uniformly".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Selection {
    Explicit(Vec<usize>),
    Random { random: usize },
}

impl Selection {
    pub fn size(&self) -> usize {
        match self {
            Selection::Explicit(v) => v.len(),
            Selection::Random { random } => *random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySpec {
    pub nodes: Selection,
    pub layers: Selection,
    pub rho: f64,
}

impl CommunitySpec {
    /// Community of `size` random nodes in `persistence` random layers.
    pub fn random(size: usize, persistence: usize, rho: f64) -> Self {
        Self {
            nodes: Selection::Random { random: size },
            layers: Selection::Random {
                random: persistence,
            },
            rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n: usize,
    pub layers: usize,
    pub layer_probs: LayerProbs,
    #[serde(default)]
    pub communities: Vec<CommunitySpec>,
    #[serde(default)]
    pub seed: u64,
}

/// A planted community after placement. Indices are sorted and 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub nodes: Vec<usize>,
    pub layers: Vec<usize>,
    pub rho: f64,
}

impl Community {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn persistence(&self) -> usize {
        self.layers.len()
    }
}

/// One undirected layer as sorted `(i, j)` pairs with `i <= j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layer {
    pub edges: Vec<(u32, u32)>,
}

impl Layer {
    pub fn from_edges(mut edges: Vec<(u32, u32)>) -> Self {
        for e in &mut edges {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Self { edges }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let key = (i.min(j) as u32, i.max(j) as u32);
        self.edges.binary_search(&key).is_ok()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilayerNetwork {
    pub n: usize,
    pub layers: Vec<Layer>,
    /// Realized per-layer edge probabilities.
    pub layer_probs: Vec<f64>,
    /// Realized community placements (ground truth).
    pub communities: Vec<Community>,
    pub params: Option<EnsembleParams>,
}

impl MultilayerNetwork {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }
}

/// Non-fatal findings from [`EnsembleParams::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub warnings: Vec<String>,
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<Validation> {
        let mut out = Validation::default();
        if self.n == 0 {
            return Err(Error::config("n must be positive"));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::config("n exceeds u32 node index range"));
        }
        if self.layers == 0 {
            return Err(Error::config("at least one layer is required"));
        }
        match &self.layer_probs {
            LayerProbs::Explicit { values } => {
                if values.len() != self.layers {
                    return Err(Error::config(format!(
                        "{} explicit layer probabilities for {} layers",
                        values.len(),
                        self.layers
                    )));
                }
                if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::config("explicit layer probability outside [0,1]"));
                }
            }
            LayerProbs::Gaussian { mean, std } => {
                if !(*mean > 0.0 && *mean < 1.0) {
                    return Err(Error::config(format!("gaussian mean {mean} outside (0,1)")));
                }
                if !(*std >= 0.0 && std.is_finite()) {
                    return Err(Error::config(format!("invalid gaussian std {std}")));
                }
            }
            LayerProbs::Uniform { lo, hi } => {
                if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) || !(0.0 < (lo + hi) / 2.0 && (lo + hi) / 2.0 < 1.0) {
                    return Err(Error::config(format!("invalid uniform range [{lo},{hi}]")));
                }
            }
        }
        let nominal_mean = self.nominal_mean();
        let mut total_k = 0usize;
        for (r, c) in self.communities.iter().enumerate() {
            let k = c.nodes.size();
            let t = c.layers.size();
            if k < 2 {
                return Err(Error::config(format!("community {r}: size {k} < 2")));
            }
            if t == 0 || t > self.layers {
                return Err(Error::config(format!(
                    "community {r}: persistence {t} outside 1..={}",
                    self.layers
                )));
            }
            if !(c.rho > 0.0 && c.rho <= 1.0) {
                return Err(Error::config(format!("community {r}: rho {} outside (0,1]", c.rho)));
            }
            if c.rho <= nominal_mean {
                return Err(Error::config(format!(
                    "community {r}: rho {} not above mean layer probability {nominal_mean}",
                    c.rho
                )));
            }
            if let Selection::Explicit(nodes) = &c.nodes {
                if nodes.iter().any(|&i| i >= self.n) {
                    return Err(Error::config(format!("community {r}: node index out of range")));
                }
                if has_duplicates(nodes) {
                    return Err(Error::config(format!("community {r}: repeated node")));
                }
            }
            if let Selection::Explicit(layers) = &c.layers {
                if layers.iter().any(|&l| l >= self.layers) {
                    return Err(Error::config(format!("community {r}: layer index out of range")));
                }
                if has_duplicates(layers) {
                    return Err(Error::config(format!("community {r}: repeated layer")));
                }
            }
            total_k += k;
        }
        if total_k > self.n {
            return Err(Error::config(format!(
                "communities cover {total_k} nodes but the network has {}",
                self.n
            )));
        }
        if total_k * 10 > self.n {
            out.warnings.push(format!(
                "communities cover {total_k} of {} nodes (more than 10%)",
                self.n
            ));
        }
        let mut seen = vec![false; self.n];
        for (r, c) in self.communities.iter().enumerate() {
            if let Selection::Explicit(nodes) = &c.nodes {
                for &i in nodes {
                    if std::mem::replace(&mut seen[i], true) {
                        return Err(Error::config(format!(
                            "community {r} overlaps an earlier community at node {i}"
                        )));
                    }
                }
            }
        }
        Ok(out)
    }

    fn nominal_mean(&self) -> f64 {
        match &self.layer_probs {
            LayerProbs::Explicit { values } => values.iter().sum::<f64>() / values.len().max(1) as f64,
            LayerProbs::Gaussian { mean, .. } => *mean,
            LayerProbs::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

fn has_duplicates(xs: &[usize]) -> bool {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.windows(2).any(|w| w[0] == w[1])
}

/// Per-layer edge probabilities, deterministic in the seed.
///
/// Explicit lists are returned as given; sampled values are clamped to
/// `(PROB_EPS, 1 - PROB_EPS)`.
pub fn realize_layer_probs(params: &EnsembleParams) -> Result<Vec<f64>> {
    let clamp = |p: f64| p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let mut rng = seed::rng(params.seed, seed::LAYER_PROBS, 0);
    match &params.layer_probs {
        LayerProbs::Explicit { values } => {
            if values.len() != params.layers {
                return Err(Error::config("explicit layer probabilities do not match layer count"));
            }
            Ok(values.clone())
        }
        LayerProbs::Gaussian { mean, std } => {
            if !(*mean > 0.0 && *mean < 1.0) {
                return Err(Error::config(format!("gaussian mean {mean} outside (0,1)")));
            }
            let normal = Normal::new(*mean, *std).map_err(|e| Error::config(e.to_string()))?;
            Ok((0..params.layers).map(|_| clamp(normal.sample(&mut rng))).collect())
        }
        LayerProbs::Uniform { lo, hi } => {
            let mid = 0.5 * (lo + hi);
            if !(mid > 0.0 && mid < 1.0) || lo > hi {
                return Err(Error::config(format!("invalid uniform range [{lo},{hi}]")));
            }
            Ok((0..params.layers)
                .map(|_| clamp(lo + (hi - lo) * rng.gen::<f64>()))
                .collect())
        }
    }
}

/// Resolve random node and layer selections into concrete, disjoint sets.
pub fn place_communities(params: &EnsembleParams) -> Result<Vec<Community>> {
    let mut rng = seed::rng(params.seed, seed::PLACEMENT, 0);
    let mut taken = vec![false; params.n];
    for c in &params.communities {
        if let Selection::Explicit(nodes) = &c.nodes {
            for &i in nodes {
                if i < params.n {
                    taken[i] = true;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(params.communities.len());
    for c in &params.communities {
        let mut nodes = match &c.nodes {
            Selection::Explicit(v) => v.clone(),
            Selection::Random { random } => {
                let free: Vec<usize> = (0..params.n).filter(|&i| !taken[i]).collect();
                if free.len() < *random {
                    return Err(Error::config("not enough free nodes for community placement"));
                }
                let picked: Vec<usize> = sample(&mut rng, free.len(), *random)
                    .into_iter()
                    .map(|k| free[k])
                    .collect();
                for &i in &picked {
                    taken[i] = true;
                }
                picked
            }
        };
        let mut layers = match &c.layers {
            Selection::Explicit(v) => v.clone(),
            Selection::Random { random } => {
                if *random > params.layers {
                    return Err(Error::config("persistence exceeds layer count"));
                }
                sample(&mut rng, params.layers, *random).into_vec()
            }
        };
        nodes.sort_unstable();
        layers.sort_unstable();
        out.push(Community {
            nodes,
            layers,
            rho: c.rho,
        });
    }
    Ok(out)
}

/// Generate a multilayer network from its ensemble description.
pub fn generate(params: &EnsembleParams) -> Result<MultilayerNetwork> {
    params.validate()?;
    let layer_probs = realize_layer_probs(params)?;
    let communities = place_communities(params)?;
    let mut net = generate_with(params.n, &layer_probs, &communities, params.seed)?;
    net.params = Some(params.clone());
    Ok(net)
}

/// Generate from already-realized probabilities and placements.
pub fn generate_with(
    n: usize,
    layer_probs: &[f64],
    communities: &[Community],
    master_seed: u64,
) -> Result<MultilayerNetwork> {
    let mut owner: Vec<u32> = vec![u32::MAX; n];
    for (r, c) in communities.iter().enumerate() {
        for &i in &c.nodes {
            if i >= n {
                return Err(Error::config(format!("community {r}: node {i} out of range")));
            }
            if owner[i] != u32::MAX {
                return Err(Error::config(format!("communities overlap at node {i}")));
            }
            owner[i] = r as u32;
        }
        if c.layers.iter().any(|&l| l >= layer_probs.len()) {
            return Err(Error::config(format!("community {r}: layer out of range")));
        }
    }
    let layers = par::map_range(layer_probs.len(), |l| {
        let active: Vec<bool> = communities.iter().map(|c| c.layers.binary_search(&l).is_ok()).collect();
        generate_layer(n, layer_probs[l], &owner, &active, communities, master_seed, l)
    });
    Ok(MultilayerNetwork {
        n,
        layers,
        layer_probs: layer_probs.to_vec(),
        communities: communities.to_vec(),
        params: None,
    })
}

fn generate_layer(
    n: usize,
    p: f64,
    owner: &[u32],
    active: &[bool],
    communities: &[Community],
    master_seed: u64,
    layer: usize,
) -> Layer {
    let mut rng = seed::rng(master_seed, seed::LAYER, layer as u64);
    let masked = |i: usize, j: usize| {
        let r = owner[i];
        r != u32::MAX && r == owner[j] && active[r as usize]
    };
    let mut edges = Vec::new();
    if p >= 1.0 {
        for i in 0..n {
            for j in i..n {
                if !masked(i, j) {
                    edges.push((i as u32, j as u32));
                }
            }
        }
    } else if p > 0.0 {
        let total = (n as u64) * (n as u64 + 1) / 2;
        edges.reserve((total as f64 * p * 1.05) as usize + 16);
        let log_q = (-p).ln_1p();
        let mut row = 0usize;
        let mut row_start = 0u64;
        let mut pos: u64 = 0;
        let mut first = true;
        loop {
            let u: f64 = rng.gen();
            let skip = ((1.0 - u).ln() / log_q).floor();
            let step = if skip >= (total as f64) { total } else { skip as u64 };
            pos = if first { step } else { pos.saturating_add(step + 1) };
            first = false;
            if pos >= total {
                break;
            }
            while pos >= row_start + (n - row) as u64 {
                row_start += (n - row) as u64;
                row += 1;
            }
            let col = row + (pos - row_start) as usize;
            if !masked(row, col) {
                edges.push((row as u32, col as u32));
            }
        }
    }
    for (r, c) in communities.iter().enumerate() {
        if !active[r] {
            continue;
        }
        for (a, &i) in c.nodes.iter().enumerate() {
            for &j in &c.nodes[a..] {
                if c.rho >= 1.0 || rng.gen::<f64>() < c.rho {
                    edges.push((i as u32, j as u32));
                }
            }
        }
    }
    edges.sort_unstable();
    Layer { edges }
}
