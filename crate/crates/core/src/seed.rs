// SPDX-License-Identifier: Apache-2.0

//! Seed splitting.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded with
//! `derive(master, tag, index)`. The derivation is two rounds of SplitMix64
//! over `master`, the stream tag and the index, so a stream depends only on
//! its own coordinates and never on thread count or scheduling order.
//!
//! | stream                     | tag           | index            |
//! |----------------------------|---------------|------------------|
//! | layer probabilities        | `LAYER_PROBS` | 0                |
//! | community placement        | `PLACEMENT`   | 0                |
//! | layer `l` edges            | `LAYER`       | `l`              |
//! | eigensolver start vector   | `START`       | 0                |
//! | experiment job             | `JOB`         | grid point/trial |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const LAYER_PROBS: u64 = 0x6c61_7965_7270_7262;
pub const PLACEMENT: u64 = 0x706c_6163_656d_6e74;
pub const LAYER: u64 = 0x6c61_7965_7265_6467;
pub const START: u64 = 0x7374_6172_7476_6563;
pub const JOB: u64 = 0x6a6f_6273_6565_6473;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ tag).wrapping_add(index))
}

pub fn rng(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, tag, index))
}
