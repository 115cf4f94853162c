// SPDX-License-Identifier: Apache-2.0

//! Data-parallel primitives with a sequential fallback.
//!
//! With the `parallel` feature (default) these run on the rayon pool; without
//! it they are plain loops. Reductions use fixed-size chunks summed in index
//! order, so results are bit-identical for any thread count and with the
//! feature disabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Reduction chunk length. Fixed so that the summation tree never depends on
/// the number of worker threads.
pub const CHUNK: usize = 4096;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "AGGDETECT_THREADS";

/// Configure the global pool from [`THREADS_ENV`] if set. Safe to call more
/// than once; later calls are ignored by rayon.
pub fn init_from_env() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let partial = |(a, b): (&[f64], &[f64])| -> f64 { a.iter().zip(b).map(|(p, q)| p * q).sum() };
    #[cfg(feature = "parallel")]
    {
        if x.len() > CHUNK {
            let parts: Vec<f64> = x
                .par_chunks(CHUNK)
                .zip(y.par_chunks(CHUNK))
                .map(partial)
                .collect();
            return parts.iter().sum();
        }
    }
    let parts: Vec<f64> = x.chunks(CHUNK).zip(y.chunks(CHUNK)).map(partial).collect();
    parts.iter().sum()
}

pub fn sum(x: &[f64]) -> f64 {
    let partial = |a: &[f64]| -> f64 { a.iter().sum() };
    #[cfg(feature = "parallel")]
    {
        if x.len() > CHUNK {
            let parts: Vec<f64> = x.par_chunks(CHUNK).map(partial).collect();
            return parts.iter().sum();
        }
    }
    let parts: Vec<f64> = x.chunks(CHUNK).map(partial).collect();
    parts.iter().sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    #[cfg(feature = "parallel")]
    {
        if y.len() > CHUNK {
            y.par_chunks_mut(CHUNK)
                .zip(x.par_chunks(CHUNK))
                .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(a, b)| *a += alpha * b));
            return;
        }
    }
    y.iter_mut().zip(x).for_each(|(a, b)| *a += alpha * b);
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    #[cfg(feature = "parallel")]
    {
        if x.len() > CHUNK {
            x.par_iter_mut().for_each(|v| *v *= alpha);
            return;
        }
    }
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Fill `out[i] = f(i)` for every index.
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if out.len() > CHUNK / 4 {
            out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
            return;
        }
    }
    out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
}

/// Map over a slice of independent work items, preserving order.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map over `0..n`, preserving order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
