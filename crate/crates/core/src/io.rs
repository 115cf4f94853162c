// SPDX-License-Identifier: Apache-2.0

//! Edge-list and sidecar file formats.
//!
//! Multilayer networks are plain text, one edge per line:
//!
//! ```text
//! #N 10000
//! #L 16
//! <layer> <src> <dst>
//! ```
//!
//! Aggregated networks use the same header style with `src dst weight` lines
//! for summation networks and `src dst` lines for thresholded ones. Node and
//! layer indices are 0-based; each undirected edge is written once with
//! `src <= dst`. Ground truth (realized probabilities and community
//! placements) goes into a JSON sidecar.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::{AggregatedNetwork, AggregationKind};
use crate::netgen::{Community, EnsembleParams, Layer, MultilayerNetwork};
use crate::{Error, Result};

/// Ground truth recorded next to a generated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    pub layers: usize,
    pub layer_probs: Vec<f64>,
    pub communities: Vec<Community>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<EnsembleParams>,
}

impl Sidecar {
    pub fn of(net: &MultilayerNetwork) -> Self {
        Self {
            n: net.n,
            layers: net.num_layers(),
            layer_probs: net.layer_probs.clone(),
            communities: net.communities.clone(),
            params: net.params.clone(),
        }
    }
}

/// Default sidecar path: `<edges path>.json`.
pub fn sidecar_path(edges: &Path) -> PathBuf {
    let mut s = edges.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn write_multilayer(net: &MultilayerNetwork, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "#N {}", net.n).map_err(io)?;
    writeln!(w, "#L {}", net.num_layers()).map_err(io)?;
    for (l, layer) in net.layers.iter().enumerate() {
        for &(i, j) in &layer.edges {
            writeln!(w, "{l} {i} {j}").map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn write_sidecar(sidecar: &Sidecar, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, sidecar)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

/// Community node sets from either a sidecar or a bare JSON list of lists.
pub fn read_communities(path: &Path) -> Result<Vec<Vec<usize>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if let Ok(s) = serde_json::from_str::<Sidecar>(&text) {
        return Ok(s.communities.into_iter().map(|c| c.nodes).collect());
    }
    Ok(serde_json::from_str::<Vec<Vec<usize>>>(&text)?)
}

fn header_value(path: &Path, lineno: usize, rest: &str) -> Result<usize> {
    rest.trim()
        .parse()
        .map_err(|_| parse_err(path, lineno, format!("bad header value '{}'", rest.trim())))
}

fn fields<const K: usize>(path: &Path, lineno: usize, line: &str) -> Result<[u64; K]> {
    let mut out = [0u64; K];
    let mut it = line.split_whitespace();
    for slot in out.iter_mut() {
        let tok = it
            .next()
            .ok_or_else(|| parse_err(path, lineno, format!("expected {K} fields")))?;
        *slot = tok
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad integer '{tok}'")))?;
    }
    if it.next().is_some() {
        return Err(parse_err(path, lineno, format!("expected {K} fields")));
    }
    Ok(out)
}

/// Read a multilayer edge list. Probabilities and communities are taken from
/// the sidecar when one exists next to the file.
pub fn read_multilayer(path: &Path) -> Result<MultilayerNetwork> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut n = None;
    let mut num_layers = None;
    let mut edges: Vec<Vec<(u32, u32)>> = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#N") {
            n = Some(header_value(path, lineno, rest)?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("#L") {
            let l = header_value(path, lineno, rest)?;
            num_layers = Some(l);
            edges = vec![Vec::new(); l];
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (Some(n), Some(l)) = (n, num_layers) else {
            return Err(parse_err(path, lineno, "edge before #N/#L headers"));
        };
        let [layer, i, j] = fields::<3>(path, lineno, line)?;
        if layer as usize >= l || i as usize >= n || j as usize >= n {
            return Err(parse_err(path, lineno, "index out of range"));
        }
        edges[layer as usize].push((i as u32, j as u32));
    }
    let n = n.ok_or_else(|| parse_err(path, 0, "missing #N header"))?;
    let l = num_layers.ok_or_else(|| parse_err(path, 0, "missing #L header"))?;
    let mut net = MultilayerNetwork {
        n,
        layers: edges.into_iter().map(Layer::from_edges).collect(),
        layer_probs: vec![f64::NAN; l],
        communities: vec![],
        params: None,
    };
    let side = sidecar_path(path);
    if side.exists() {
        let s = read_sidecar(&side)?;
        if s.n != n || s.layers != l {
            return Err(parse_err(&side, 0, "sidecar does not match edge list"));
        }
        net.layer_probs = s.layer_probs;
        net.communities = s.communities;
        net.params = s.params;
    }
    Ok(net)
}

pub fn write_aggregated(agg: &AggregatedNetwork, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "#N {}", agg.n).map_err(io)?;
    match agg.kind {
        AggregationKind::Summation => writeln!(w, "#kind summation"),
        AggregationKind::Thresholded { threshold } => writeln!(w, "#kind thresholded {threshold}"),
    }
    .map_err(io)?;
    writeln!(w, "#L_agg {}", agg.layers_aggregated).map_err(io)?;
    let layers: Vec<String> = agg.source_layers.iter().map(|l| l.to_string()).collect();
    writeln!(w, "#layers {}", layers.join(",")).map_err(io)?;
    for &(i, j, wt) in &agg.entries {
        match agg.kind {
            AggregationKind::Summation => writeln!(w, "{i} {j} {wt}"),
            AggregationKind::Thresholded { .. } => writeln!(w, "{i} {j}"),
        }
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_aggregated(path: &Path) -> Result<AggregatedNetwork> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut n = None;
    let mut kind = None;
    let mut l_agg = None;
    let mut source_layers = Vec::new();
    let mut entries = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#N") {
            n = Some(header_value(path, lineno, rest)?);
        } else if let Some(rest) = line.strip_prefix("#kind") {
            let mut it = rest.split_whitespace();
            kind = Some(match (it.next(), it.next()) {
                (Some("summation"), None) => AggregationKind::Summation,
                (Some("thresholded"), Some(t)) => AggregationKind::Thresholded {
                    threshold: t
                        .parse()
                        .map_err(|_| parse_err(path, lineno, "bad threshold"))?,
                },
                _ => return Err(parse_err(path, lineno, "bad #kind header")),
            });
        } else if let Some(rest) = line.strip_prefix("#L_agg") {
            l_agg = Some(header_value(path, lineno, rest)?);
        } else if let Some(rest) = line.strip_prefix("#layers") {
            source_layers = rest
                .trim()
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.trim().parse().map_err(|_| parse_err(path, lineno, "bad layer list")))
                .collect::<Result<_>>()?;
        } else if line.starts_with('#') {
            continue;
        } else {
            let Some(kind) = kind else {
                return Err(parse_err(path, lineno, "edge before #kind header"));
            };
            let (i, j, w) = match kind {
                AggregationKind::Summation => {
                    let [i, j, w] = fields::<3>(path, lineno, line)?;
                    (i, j, w)
                }
                AggregationKind::Thresholded { .. } => {
                    let [i, j] = fields::<2>(path, lineno, line)?;
                    (i, j, 1)
                }
            };
            entries.push((i as u32, j as u32, w as u32));
        }
    }
    let n = n.ok_or_else(|| parse_err(path, 0, "missing #N header"))?;
    let kind = kind.ok_or_else(|| parse_err(path, 0, "missing #kind header"))?;
    let l_agg = l_agg.ok_or_else(|| parse_err(path, 0, "missing #L_agg header"))?;
    AggregatedNetwork::from_entries(n, kind, l_agg, source_layers, entries)
}

/// Write each vector as little-endian `f64` to `<dir>/<prefix>_<k>.f64`.
pub fn write_eigenvectors(dir: &Path, prefix: &str, vectors: &[Vec<f64>]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        let path = dir.join(format!("{prefix}_{k}.f64"));
        let mut w = create(&path)?;
        for x in v {
            w.write_all(&x.to_le_bytes()).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn read_eigenvector(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(parse_err(path, 0, "length is not a multiple of 8"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}
