// SPDX-License-Identifier: Apache-2.0

//! Poisson-binomial distribution: the law of a sum of independent Bernoulli
//! variables with heterogeneous success probabilities.
//!
//! The pmf is built once by convolving the layers one at a time (an `O(L²)`
//! dynamic program). Upper tails are summed directly from the pmf rather than
//! as `1 - cdf`, so probabilities far below machine epsilon keep their
//! relative accuracy. Tails smaller than [`LOG_SWITCHOVER`] are recomputed
//! from a log-domain convolution.

use crate::{Error, Result};

/// Tail probabilities below this value are taken from the log-domain pmf.
pub const LOG_SWITCHOVER: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonBinomial {
    probs: Vec<f64>,
    pmf: Vec<f64>,
    log_pmf: Vec<f64>,
}

impl PoissonBinomial {
    pub fn new(probs: impl Into<Vec<f64>>) -> Result<Self> {
        let probs = probs.into();
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::domain(format!("success probability {p} not in [0,1]")));
        }
        let pmf = convolve(&probs);
        let log_pmf = convolve_log(&probs);
        Ok(Self {
            probs,
            pmf,
            log_pmf,
        })
    }

    /// Binomial(`trials`, `p`) as the homogeneous special case.
    pub fn homogeneous(p: f64, trials: usize) -> Result<Self> {
        Self::new(vec![p; trials])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of Bernoulli terms.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability mass over `0..=len()`.
    pub fn pmf_table(&self) -> &[f64] {
        &self.pmf
    }

    pub fn pmf(&self, a: usize) -> Result<f64> {
        self.pmf
            .get(a)
            .copied()
            .ok_or_else(|| Error::domain(format!("count {a} outside support 0..={}", self.len())))
    }

    /// `ln P(X = a)`; `-inf` where the mass is exactly zero.
    pub fn ln_pmf(&self, a: usize) -> Result<f64> {
        self.log_pmf
            .get(a)
            .copied()
            .ok_or_else(|| Error::domain(format!("count {a} outside support 0..={}", self.len())))
    }

    /// `P(X <= a)`. Clamped: 0 below the support, exactly 1 at or above `len()`.
    pub fn cdf(&self, a: i64) -> f64 {
        if a < 0 {
            return 0.0;
        }
        let a = a as usize;
        if a >= self.len() {
            return 1.0;
        }
        // Whichever side is smaller is summed directly.
        let lower: f64 = self.pmf[..=a].iter().sum();
        if lower <= 0.5 {
            lower.min(1.0)
        } else {
            (1.0 - self.upper_tail(a + 1)).clamp(0.0, 1.0)
        }
    }

    /// `P(X >= a)`, summed from the top of the support.
    pub fn sf(&self, a: i64) -> f64 {
        if a <= 0 {
            return 1.0;
        }
        let a = a as usize;
        if a > self.len() {
            return 0.0;
        }
        self.upper_tail(a)
    }

    fn upper_tail(&self, a: usize) -> f64 {
        let direct: f64 = self.pmf[a..].iter().rev().sum();
        if direct > 0.5 {
            // Large tails are better taken from the short lower side.
            let lower: f64 = self.pmf[..a].iter().sum();
            return (1.0 - lower).clamp(0.0, 1.0);
        }
        if direct < LOG_SWITCHOVER {
            return log_sum_exp(&self.log_pmf[a..]).exp();
        }
        direct
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        self.probs.iter().map(|p| p * (1.0 - p)).sum()
    }
}

fn convolve(probs: &[f64]) -> Vec<f64> {
    let mut dist = Vec::with_capacity(probs.len() + 1);
    dist.push(1.0);
    for &p in probs {
        let q = 1.0 - p;
        dist.push(0.0);
        for k in (1..dist.len()).rev() {
            dist[k] = dist[k] * q + dist[k - 1] * p;
        }
        dist[0] *= q;
    }
    for v in &mut dist {
        if *v <= 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = dist.iter().sum();
    if total > 0.0 && total != 1.0 {
        dist.iter_mut().for_each(|v| *v /= total);
    }
    dist
}

fn convolve_log(probs: &[f64]) -> Vec<f64> {
    let mut dist = vec![0.0_f64];
    for &p in probs {
        let (lp, lq) = (p.ln(), (-p).ln_1p());
        let mut next = vec![f64::NEG_INFINITY; dist.len() + 1];
        for (k, &v) in dist.iter().enumerate() {
            next[k] = log_add(next[k], v + lq);
            next[k + 1] = log_add(next[k + 1], v + lp);
        }
        dist = next;
    }
    dist
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    xs.iter().fold(f64::NEG_INFINITY, |acc, &x| log_add(acc, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Sum over all subsets of size `a`, literally.
    fn enumerate_pmf(probs: &[f64], a: usize) -> f64 {
        let l = probs.len();
        (0u32..(1 << l))
            .filter(|m| m.count_ones() as usize == a)
            .map(|m| {
                (0..l)
                    .map(|i| if m >> i & 1 == 1 { probs[i] } else { 1.0 - probs[i] })
                    .product::<f64>()
            })
            .sum()
    }

    fn choose(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn two_fair_coins() {
        let d = PoissonBinomial::new(vec![0.5, 0.5]).unwrap();
        assert!((d.pmf(1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_zero_count() {
        let d = PoissonBinomial::homogeneous(0.01, 16).unwrap();
        let closed = 0.99_f64.powi(16);
        assert!((d.pmf(0).unwrap() - closed).abs() < 1e-12);
        assert!((closed - 0.851458).abs() < 1e-6);
    }

    #[test]
    fn three_terms_against_enumeration() {
        let probs = [0.1, 0.2, 0.3];
        let d = PoissonBinomial::new(probs.to_vec()).unwrap();
        let oracle = enumerate_pmf(&probs, 2);
        assert!((oracle - 0.092).abs() < 1e-15);
        assert!((d.pmf(2).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn pmf_out_of_support() {
        let d = PoissonBinomial::new(vec![0.3; 4]).unwrap();
        assert!(matches!(d.pmf(5), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(PoissonBinomial::new(vec![0.2, 1.5]).is_err());
        assert!(PoissonBinomial::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn cdf_clamps_and_binomial_tail() {
        let d = PoissonBinomial::homogeneous(0.5, 16).unwrap();
        assert_eq!(d.cdf(-1), 0.0);
        assert_eq!(d.cdf(16), 1.0);
        assert_eq!(d.cdf(40), 1.0);
        let exact: f64 = (0..=4).map(|k| choose(16, k)).sum::<f64>() / 65536.0;
        assert!((exact - 2517.0 / 65536.0).abs() < 1e-15);
        assert!((d.cdf(4) - exact).abs() < 1e-14);
        assert!((d.cdf(4) - 0.038406).abs() < 1e-6);
    }

    #[test]
    fn moments() {
        let d = PoissonBinomial::new(vec![0.0; 7]).unwrap();
        assert_eq!((d.mean(), d.variance()), (0.0, 0.0));
        let d = PoissonBinomial::homogeneous(0.01, 16).unwrap();
        assert!((d.mean() - 0.16).abs() < 1e-15);
        assert!((d.variance() - 0.1584).abs() < 1e-15);
        let d = PoissonBinomial::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert!((d.mean() - 0.6).abs() < 1e-15);
        assert!((d.variance() - 0.46).abs() < 1e-15);
    }

    #[test]
    fn deep_tail_keeps_relative_accuracy() {
        // P(Bin(11, 0.01) >= 11) = 1e-22
        let d = PoissonBinomial::homogeneous(0.01, 11).unwrap();
        let t = d.sf(11);
        assert!((t / 1e-22 - 1.0).abs() < 1e-10, "{t}");
        // sum of the exact binomial terms from 5 up
        let d = PoissonBinomial::homogeneous(0.01, 16).unwrap();
        let exact: f64 = (5..=16)
            .map(|k| choose(16, k) * 0.01_f64.powi(k as i32) * 0.99_f64.powi(16 - k as i32))
            .sum();
        assert!((d.sf(5) / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_pmf_matches_direct() {
        let d = PoissonBinomial::new(vec![0.02, 0.5, 0.7, 0.01, 0.33]).unwrap();
        for a in 0..=5 {
            let direct = d.pmf(a).unwrap();
            assert!((d.ln_pmf(a).unwrap().exp() - direct).abs() < 1e-14 * direct.max(1e-300) + 1e-300);
        }
    }

    fn probs_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..=1.0, 1..=max_len)
    }

    proptest! {
        #[test]
        fn matches_enumeration(probs in probs_strategy(10)) {
            let d = PoissonBinomial::new(probs.clone()).unwrap();
            for a in 0..=probs.len() {
                prop_assert!((d.pmf(a).unwrap() - enumerate_pmf(&probs, a)).abs() < 1e-12);
            }
        }

        #[test]
        fn normalized_moments_monotone(probs in probs_strategy(32)) {
            let d = PoissonBinomial::new(probs.clone()).unwrap();
            let table = d.pmf_table();
            prop_assert!((table.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let m: f64 = table.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
            let v: f64 = table.iter().enumerate().map(|(k, p)| (k as f64 - m).powi(2) * p).sum();
            prop_assert!((m - d.mean()).abs() < 1e-10);
            prop_assert!((v - d.variance()).abs() < 1e-10);
            let mut prev = 0.0;
            for a in -1..=(probs.len() as i64 + 1) {
                let c = d.cdf(a);
                prop_assert!(c >= prev);
                prev = c;
            }
            prop_assert_eq!(d.cdf(probs.len() as i64), 1.0);
        }

        #[test]
        fn permutation_invariant(mut probs in probs_strategy(16), seed in any::<u64>()) {
            let d1 = PoissonBinomial::new(probs.clone()).unwrap();
            let n = probs.len();
            for i in (1..n).rev() {
                let j = (seed.wrapping_mul(i as u64 + 11) % (i as u64 + 1)) as usize;
                probs.swap(i, j);
            }
            let d2 = PoissonBinomial::new(probs).unwrap();
            for a in 0..=n {
                prop_assert!((d1.pmf(a).unwrap() - d2.pmf(a).unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn homogeneous_matches_binomial(p in 0.0f64..=1.0, n in 1usize..=32) {
            let d = PoissonBinomial::homogeneous(p, n).unwrap();
            for a in 0..=n {
                let closed = choose(n as u64, a as u64) * p.powi(a as i32) * (1.0 - p).powi((n - a) as i32);
                prop_assert!((d.pmf(a).unwrap() - closed).abs() < 1e-12);
            }
        }
    }
}
