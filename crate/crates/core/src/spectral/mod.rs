// SPDX-License-Identifier: Apache-2.0

//! Modularity operators, dominant eigenpairs and eigenvector localization.
//!
//! The modularity matrix `B = A − c·11ᵀ` is never formed: [`ModularityOperator`]
//! applies it as `Bx = Ax − c(1ᵀx)1` with `A` in compressed sparse rows.

pub mod dense;
pub mod lanczos;

use serde::{Deserialize, Serialize};

pub use lanczos::{lanczos, power_iteration, EigOptions, EigenPairs};

use crate::aggregate::{AggregatedNetwork, AggregationKind};
use crate::{par, Error, Result};

/// A symmetric linear operator on `R^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = Op · x`. Both slices have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// An upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullSource {
    /// `c` from the generating probabilities (oracle experiments).
    Theoretical,
    /// `c` is the observed mean entry of the aggregated matrix.
    Empirical,
}

/// `B = A − c·11ᵀ` for an aggregated network `A`.
#[derive(Debug, Clone)]
pub struct ModularityOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    null_weight: f64,
    null_source: NullSource,
    kind: AggregationKind,
}

impl ModularityOperator {
    pub fn new(agg: &AggregatedNetwork, null_weight: f64, null_source: NullSource) -> Self {
        let n = agg.n;
        let mut degree = vec![0usize; n];
        for &(i, j, _) in &agg.entries {
            degree[i as usize] += 1;
            if i != j {
                degree[j as usize] += 1;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + degree[i];
        }
        let nnz = row_ptr[n];
        let mut cols = vec![0u32; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = row_ptr.clone();
        // entries are sorted by (i, j); columns within a row end up sorted
        // because lower-triangle entries (j < i) arrive before row i's own.
        for &(i, j, w) in &agg.entries {
            let (iu, ju) = (i as usize, j as usize);
            cols[fill[iu]] = j;
            vals[fill[iu]] = w as f64;
            fill[iu] += 1;
            if i != j {
                cols[fill[ju]] = i;
                vals[fill[ju]] = w as f64;
                fill[ju] += 1;
            }
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
            null_weight,
            null_source,
            kind: agg.kind,
        }
    }

    /// Null weight equal to the mean entry of the aggregated matrix.
    pub fn empirical(agg: &AggregatedNetwork) -> Self {
        Self::new(agg, agg.mean_entry(), NullSource::Empirical)
    }

    /// Null weight from the generating model: `Σ_l p_l` over the aggregated
    /// layers for a summation network, the background effective probability
    /// `p̂` for a thresholded one.
    pub fn theoretical(agg: &AggregatedNetwork, layer_probs: &[f64]) -> Result<Self> {
        let probs: Vec<f64> = agg
            .source_layers
            .iter()
            .map(|&l| {
                layer_probs
                    .get(l)
                    .copied()
                    .ok_or_else(|| Error::domain(format!("no probability for layer {l}")))
            })
            .collect::<Result<_>>()?;
        let c = match agg.kind {
            AggregationKind::Summation => probs.iter().sum(),
            AggregationKind::Thresholded { threshold } => crate::theory::effective_p(&probs, threshold as usize)?,
        };
        Ok(Self::new(agg, c, NullSource::Theoretical))
    }

    pub fn null_weight(&self) -> f64 {
        self.null_weight
    }

    pub fn null_source(&self) -> NullSource {
        self.null_source
    }

    pub fn kind(&self) -> AggregationKind {
        self.kind
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Checked `Bx`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// Dense row-major `B`, for small oracle checks.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut b = vec![-self.null_weight; n * n];
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                b[i * n + self.cols[k] as usize] += self.vals[k];
            }
        }
        b
    }
}

impl LinearOperator for ModularityOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let shift = self.null_weight * par::sum(x);
        par::fill_indexed(y, |i| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            s - shift
        });
    }

    fn norm_bound(&self) -> f64 {
        let max_row = (0..self.n)
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum::<f64>())
            .fold(0.0, f64::max);
        max_row + self.null_weight.abs() * self.n as f64
    }
}

/// Dense symmetric operator, mostly for tests and tiny instances.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub n: usize,
    pub data: Vec<f64>,
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Normalized indicator of a node set: `1/√K` on the set, 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorVector {
    nodes: Vec<usize>,
    n: usize,
}

impl IndicatorVector {
    pub fn new(nodes: &[usize], n: usize) -> Result<Self> {
        let mut nodes = nodes.to_vec();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::domain("indicator of an empty node set"));
        }
        if nodes.last().is_some_and(|&i| i >= n) {
            return Err(Error::domain("indicator node out of range"));
        }
        Ok(Self { nodes, n })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        let v = (1.0 / self.nodes.len() as f64).sqrt();
        for &i in &self.nodes {
            u[i] = v;
        }
        u
    }
}

/// Squared overlap `|⟨v, u⟩|²` of a unit vector with an indicator, in `[0, 1]`.
pub fn overlap(v: &[f64], u: &IndicatorVector) -> f64 {
    let s: f64 = u.nodes.iter().map(|&i| v[i]).sum();
    (s * s / u.size() as f64).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommunityMatch {
    pub community: usize,
    pub eig_index: usize,
    pub overlap: f64,
}

/// Greedy assignment of eigenvectors to communities by decreasing overlap.
///
/// Each eigenvector is used at most once; ties go to the lower eigenvector
/// index, then the lower community index. Output is ordered by community.
pub fn match_communities(vectors: &[Vec<f64>], indicators: &[IndicatorVector]) -> Result<Vec<CommunityMatch>> {
    if vectors.len() < indicators.len() {
        return Err(Error::domain(format!(
            "{} eigenvectors for {} communities",
            vectors.len(),
            indicators.len()
        )));
    }
    let mut candidates: Vec<CommunityMatch> = Vec::with_capacity(vectors.len() * indicators.len());
    for (r, u) in indicators.iter().enumerate() {
        for (e, v) in vectors.iter().enumerate() {
            candidates.push(CommunityMatch {
                community: r,
                eig_index: e,
                overlap: overlap(v, u),
            });
        }
    }
    candidates.sort_by(|a, b| {
        b.overlap
            .total_cmp(&a.overlap)
            .then(a.eig_index.cmp(&b.eig_index))
            .then(a.community.cmp(&b.community))
    });
    let mut used_eig = vec![false; vectors.len()];
    let mut assigned: Vec<Option<CommunityMatch>> = vec![None; indicators.len()];
    for c in candidates {
        if assigned[c.community].is_none() && !used_eig[c.eig_index] {
            used_eig[c.eig_index] = true;
            assigned[c.community] = Some(c);
        }
    }
    Ok(assigned.into_iter().map(|m| m.expect("every community assigned")).collect())
}

/// Outcome of an eigensolve with per-community overlaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub overlaps: Vec<CommunityMatch>,
    pub null_weight: f64,
    pub null_source: NullSource,
    pub iterations: usize,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
}

/// The `k` algebraically largest eigenpairs of `op`.
pub fn dominant_eigs(op: &ModularityOperator, k: usize, opts: &EigOptions) -> Result<EigenPairs> {
    lanczos(op, k, opts)
}

/// Eigensolve `op` and match the leading eigenvectors to `communities`.
pub fn detect(
    op: &ModularityOperator,
    communities: &[Vec<usize>],
    k: usize,
    opts: &EigOptions,
) -> Result<SpectralResult> {
    let indicators: Vec<IndicatorVector> = communities
        .iter()
        .map(|c| IndicatorVector::new(c, op.dim()))
        .collect::<Result<_>>()?;
    if k < indicators.len() {
        return Err(Error::domain(format!("k={k} is smaller than {} communities", indicators.len())));
    }
    let pairs = dominant_eigs(op, k, opts)?;
    let overlaps = match_communities(&pairs.vectors, &indicators)?;
    Ok(SpectralResult {
        eigenvalues: pairs.values,
        residuals: pairs.residuals,
        overlaps,
        null_weight: op.null_weight(),
        null_source: op.null_source(),
        iterations: pairs.iterations,
        eigenvectors: pairs.vectors,
    })
}
