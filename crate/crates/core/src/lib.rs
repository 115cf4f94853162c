// SPDX-License-Identifier: Apache-2.0

//! Small-community detectability in layer-aggregated multilayer networks.
//!
//! The crate generates Erdős–Rényi multilayer ensembles with planted small
//! communities, aggregates layers by summation or thresholding, measures
//! eigenvector localization on the resulting modularity matrices and compares
//! it with closed-form random-matrix predictions.
//!
//! Module map:
//!
//! - [`pbdist`]: Poisson-binomial pmf/cdf/tails.
//! - [`netgen`]: seeded multilayer generator with planted communities.
//! - [`aggregate`]: summation, thresholding and time-window selection.
//! - [`spectral`]: implicit modularity operator, Lanczos eigensolver, overlaps.
//! - [`theory`]: detectability limits and overlap laws.
//! - [`harness`]: experiment orchestration, CSV/JSON output.
//! - [`io`]: edge-list and sidecar formats.

pub mod aggregate;
pub mod error;
pub mod harness;
pub mod io;
pub mod netgen;
pub mod par;
pub mod pbdist;
pub mod seed;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
