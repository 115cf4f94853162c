// SPDX-License-Identifier: Apache-2.0

//! Layer aggregation by summation and thresholding, and time-window binning.

use serde::{Deserialize, Serialize};

use crate::netgen::MultilayerNetwork;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregationKind {
    Summation,
    Thresholded { threshold: u32 },
}

/// A symmetric aggregated network stored as its upper triangle.
///
/// `entries` holds `(i, j, weight)` with `i <= j`, sorted, weight > 0.
/// Summation weights lie in `1..=layers_aggregated`; thresholded weights are 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedNetwork {
    pub n: usize,
    pub kind: AggregationKind,
    pub layers_aggregated: usize,
    pub source_layers: Vec<usize>,
    pub entries: Vec<(u32, u32, u32)>,
}

impl AggregatedNetwork {
    /// Build from upper-triangle triples, merging duplicates by summation.
    pub fn from_entries(
        n: usize,
        kind: AggregationKind,
        layers_aggregated: usize,
        source_layers: Vec<usize>,
        mut entries: Vec<(u32, u32, u32)>,
    ) -> Result<Self> {
        for e in &mut entries {
            if e.0 > e.1 {
                *e = (e.1, e.0, e.2);
            }
            if e.1 as usize >= n {
                return Err(Error::domain(format!("node {} out of range for n={n}", e.1)));
            }
        }
        entries.sort_unstable();
        let mut merged: Vec<(u32, u32, u32)> = Vec::with_capacity(entries.len());
        for (i, j, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += w,
                _ => merged.push((i, j, w)),
            }
        }
        merged.retain(|e| e.2 > 0);
        Ok(Self {
            n,
            kind,
            layers_aggregated,
            source_layers,
            entries: merged,
        })
    }

    /// Entry `(i, j)` of the full symmetric matrix.
    pub fn get(&self, i: usize, j: usize) -> u32 {
        let key = (i.min(j) as u32, i.max(j) as u32);
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|k| self.entries[k].2)
            .unwrap_or(0)
    }

    /// Number of stored upper-triangle entries.
    pub fn nnz_upper(&self) -> usize {
        self.entries.len()
    }

    /// Sum of all entries of the full `n × n` matrix (off-diagonal counted twice).
    pub fn total_weight(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, w)| if i == j { w as f64 } else { 2.0 * w as f64 })
            .sum()
    }

    /// Mean entry of the full matrix, `total_weight / n²`.
    pub fn mean_entry(&self) -> f64 {
        self.total_weight() / (self.n as f64 * self.n as f64)
    }

    pub fn is_summation(&self) -> bool {
        self.kind == AggregationKind::Summation
    }
}

/// Entrywise sum of the selected layers.
pub fn sum_layers(net: &MultilayerNetwork, layers: &[usize]) -> Result<AggregatedNetwork> {
    if layers.is_empty() {
        return Err(Error::domain("empty layer selection"));
    }
    let mut sel = layers.to_vec();
    sel.sort_unstable();
    if sel.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("repeated layer in selection"));
    }
    if let Some(&l) = sel.iter().find(|&&l| l >= net.num_layers()) {
        return Err(Error::domain(format!(
            "layer {l} out of range for {} layers",
            net.num_layers()
        )));
    }
    let total: usize = sel.iter().map(|&l| net.layers[l].len()).sum();
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(total);
    for &l in &sel {
        pairs.extend_from_slice(&net.layers[l].edges);
    }
    pairs.sort_unstable();
    let mut entries: Vec<(u32, u32, u32)> = Vec::new();
    for (i, j) in pairs {
        match entries.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += 1,
            _ => entries.push((i, j, 1)),
        }
    }
    Ok(AggregatedNetwork {
        n: net.n,
        kind: AggregationKind::Summation,
        layers_aggregated: sel.len(),
        source_layers: sel,
        entries,
    })
}

/// Summation over all layers.
pub fn sum_all(net: &MultilayerNetwork) -> Result<AggregatedNetwork> {
    let all: Vec<usize> = (0..net.num_layers()).collect();
    sum_layers(net, &all)
}

/// Binary network with an edge wherever the summed weight is at least
/// `threshold`. Works on the stored summation only.
pub fn threshold(agg: &AggregatedNetwork, threshold: u32) -> Result<AggregatedNetwork> {
    if !agg.is_summation() {
        return Err(Error::domain("threshold requires a summation network"));
    }
    if threshold < 1 || threshold as usize > agg.layers_aggregated {
        return Err(Error::domain(format!(
            "threshold {threshold} outside 1..={}",
            agg.layers_aggregated
        )));
    }
    let entries = agg
        .entries
        .iter()
        .filter(|e| e.2 >= threshold)
        .map(|&(i, j, _)| (i, j, 1))
        .collect();
    Ok(AggregatedNetwork {
        n: agg.n,
        kind: AggregationKind::Thresholded { threshold },
        layers_aggregated: agg.layers_aggregated,
        source_layers: agg.source_layers.clone(),
        entries,
    })
}

/// A time window of odd `width` centered on the 1-based time label `center`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub width: usize,
    pub center: usize,
}

impl WindowSpec {
    pub fn new(width: usize, center: usize) -> Self {
        Self { width, center }
    }

    pub fn half(&self) -> usize {
        (self.width - 1) / 2
    }
}

/// 1-based time labels covered by the window. Windows must lie entirely in
/// `1..=layer_count`; nothing is padded or truncated.
pub fn window_layers(layer_count: usize, spec: WindowSpec) -> Result<Vec<usize>> {
    if spec.width == 0 || spec.width % 2 == 0 {
        return Err(Error::domain(format!("window width {} must be odd and positive", spec.width)));
    }
    let half = spec.half();
    if spec.center < 1 + half {
        return Err(Error::domain(format!(
            "window w={} at t={} starts before layer 1",
            spec.width, spec.center
        )));
    }
    if spec.center + half > layer_count {
        return Err(Error::domain(format!(
            "window w={} at t={} ends after layer {layer_count}",
            spec.width, spec.center
        )));
    }
    Ok((spec.center - half..=spec.center + half).collect())
}

/// Every valid window center for `width`, in increasing order.
pub fn window_centers(layer_count: usize, width: usize) -> Vec<usize> {
    let half = width.saturating_sub(1) / 2;
    if width == 0 || width % 2 == 0 || width > layer_count {
        return vec![];
    }
    (1 + half..=layer_count - half).collect()
}
