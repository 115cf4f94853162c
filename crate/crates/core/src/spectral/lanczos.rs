// SPDX-License-Identifier: Apache-2.0

//! Restarted Lanczos with full reorthogonalization for the algebraically
//! largest eigenpairs of a symmetric operator.
//!
//! The projected matrix is kept explicitly, so the method is a symmetric
//! Krylov–Schur iteration: when the basis reaches its cap, the leading Ritz
//! vectors become the new basis (thick restart) and the last residual
//! direction continues the expansion. Every new direction is
//! Gram–Schmidt-orthogonalized twice against the whole basis.

use super::dense::symmetric_eigen;
use super::LinearOperator;
use crate::{par, seed, Error, Result};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct EigOptions {
    /// Relative residual tolerance: `‖Bv − λv‖ ≤ tol · max(1, |λ|)`.
    pub tol: f64,
    /// Maximum number of operator applications.
    pub max_iter: usize,
    /// Basis size cap before a restart. `None` picks one from `k`.
    pub max_basis: Option<usize>,
    /// Seed of the random start vector.
    pub seed: u64,
    /// Run the Rayleigh–Ritz convergence check every this many expansions.
    pub check_every: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            max_basis: None,
            seed: 0,
            check_every: 8,
        }
    }
}

/// Converged eigenpairs in descending eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// True residual norms `‖Bv − λv‖`.
    pub residuals: Vec<f64>,
    /// Operator applications used.
    pub iterations: usize,
}

pub fn default_basis(k: usize) -> usize {
    (3 * k + 40).max(64)
}

/// The `k` algebraically largest eigenpairs of `op`.
pub fn lanczos<O: LinearOperator + ?Sized>(op: &O, k: usize, opts: &EigOptions) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::domain(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    let m_max = opts.max_basis.unwrap_or_else(|| default_basis(k)).max(k + 2).min(n);
    let keep = if m_max >= n { k } else { (k + (m_max - k) / 2).min(m_max - 1) };
    let check_every = opts.check_every.max(1);

    let mut rng = seed::rng(opts.seed, seed::START, 0);
    let mut next = random_unit(n, &mut rng);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut h = vec![0.0; m_max * m_max];
    let mut w = vec![0.0; n];
    let mut iterations = 0usize;
    let mut residual_norm;
    let mut best_residual = f64::INFINITY;
    let scale = op.norm_bound().max(1.0);

    loop {
        // expansion
        loop {
            let j = basis.len();
            basis.push(std::mem::take(&mut next));
            op.apply(&basis[j], &mut w);
            iterations += 1;
            let mut coef = vec![0.0; j + 1];
            for _ in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c = par::dot(b, &w);
                    coef[i] += c;
                    par::axpy(-c, b, &mut w);
                }
            }
            for (i, &c) in coef.iter().enumerate() {
                h[i * m_max + j] = c;
                h[j * m_max + i] = c;
            }
            residual_norm = par::norm(&w);
            let m = basis.len();
            let exhausted = m == n;
            let breakdown = residual_norm <= 1e-13 * scale;

            if exhausted || breakdown || m == m_max || m % check_every == 0 || iterations >= opts.max_iter {
                let f_norm = if breakdown || exhausted { 0.0 } else { residual_norm };
                let (vals, vecs) = projected_eigen(&h, m_max, m);
                let have = k.min(m);
                let mut worst: f64 = 0.0;
                for i in 0..have {
                    let est = f_norm * vecs[(m - 1) * m + i].abs();
                    worst = worst.max(est / vals[i].abs().max(1.0));
                }
                if have < k {
                    worst = f64::INFINITY;
                }
                best_residual = best_residual.min(worst);
                if have == k && worst <= 0.5 * opts.tol {
                    let pairs = ritz_pairs(op, &basis, &vecs, m, k, iterations);
                    let ok = pairs
                        .values
                        .iter()
                        .zip(&pairs.residuals)
                        .all(|(l, r)| *r <= opts.tol * l.abs().max(1.0));
                    if ok || exhausted {
                        return Ok(pairs);
                    }
                }
                if iterations >= opts.max_iter {
                    return Err(Error::NotConverged {
                        iterations,
                        best_residual,
                    });
                }
            }

            if exhausted {
                // Full space spanned: Ritz values are exact up to rounding.
                let (_, vecs) = projected_eigen(&h, m_max, m);
                return Ok(ritz_pairs(op, &basis, &vecs, m, k, iterations));
            }
            if breakdown {
                // Invariant subspace: continue with a fresh orthogonal direction.
                let mut r = random_unit(n, &mut rng);
                for _ in 0..2 {
                    for b in &basis {
                        let c = par::dot(b, &r);
                        par::axpy(-c, b, &mut r);
                    }
                }
                let nr = par::norm(&r);
                par::scale(1.0 / nr, &mut r);
                next = r;
            } else {
                next = w.clone();
                par::scale(1.0 / residual_norm, &mut next);
            }
            if basis.len() == m_max {
                break;
            }
        }

        // thick restart
        let m = basis.len();
        let (vals, vecs) = projected_eigen(&h, m_max, m);
        let mut restarted = Vec::with_capacity(m_max);
        for i in 0..keep {
            restarted.push(combine(&basis, &vecs, m, i));
        }
        basis = restarted;
        h.iter_mut().for_each(|x| *x = 0.0);
        for (i, &v) in vals.iter().take(keep).enumerate() {
            h[i * m_max + i] = v;
        }
    }
}

fn projected_eigen(h: &[f64], stride: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sub = vec![0.0; m * m];
    for i in 0..m {
        sub[i * m..(i + 1) * m].copy_from_slice(&h[i * stride..i * stride + m]);
    }
    symmetric_eigen(&sub, m)
}

/// `Σ_j basis[j] · vecs[j, col]` for an `m × m` row-major `vecs`.
fn combine(basis: &[Vec<f64>], vecs: &[f64], m: usize, col: usize) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    par::fill_indexed(&mut out, |r| {
        let mut s = 0.0;
        for j in 0..m {
            s += basis[j][r] * vecs[j * m + col];
        }
        s
    });
    out
}

fn ritz_pairs<O: LinearOperator + ?Sized>(
    op: &O,
    basis: &[Vec<f64>],
    vecs: &[f64],
    m: usize,
    k: usize,
    iterations: usize,
) -> EigenPairs {
    let n = op.dim();
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut bx = vec![0.0; n];
    for i in 0..k {
        let mut x = combine(basis, vecs, m, i);
        let norm = par::norm(&x);
        par::scale(1.0 / norm, &mut x);
        fix_sign(&mut x);
        op.apply(&x, &mut bx);
        let lambda = par::dot(&x, &bx);
        par::axpy(-lambda, &x, &mut bx);
        residuals.push(par::norm(&bx));
        values.push(lambda);
        vectors.push(x);
    }
    EigenPairs {
        values,
        vectors,
        residuals,
        iterations,
    }
}

/// Make the largest-magnitude component positive (first one on ties).
pub fn fix_sign(x: &mut [f64]) {
    let mut best = 0usize;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    if x.get(best).is_some_and(|v| *v < 0.0) {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

fn random_unit(n: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = par::norm(&v);
    par::scale(1.0 / norm, &mut v);
    v
}

/// Power iteration with deflation on the shifted operator `B + σI`, where
/// `σ` is the operator's norm bound. Slow on clustered spectra; kept as an
/// independent cross-check of [`lanczos`].
pub fn power_iteration<O: LinearOperator + ?Sized>(op: &O, k: usize, opts: &EigOptions) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::domain(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    let shift = op.norm_bound();
    let mut rng = seed::rng(opts.seed, seed::START, 1);
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut iterations = 0;
    let mut y = vec![0.0; n];
    for _ in 0..k {
        let mut x = random_unit(n, &mut rng);
        let mut best = f64::INFINITY;
        loop {
            for f in &found {
                let c = par::dot(f, &x);
                par::axpy(-c, f, &mut x);
            }
            let nx = par::norm(&x);
            par::scale(1.0 / nx, &mut x);
            op.apply(&x, &mut y);
            iterations += 1;
            let lambda = par::dot(&x, &y);
            let mut r = y.clone();
            par::axpy(-lambda, &x, &mut r);
            let res = par::norm(&r);
            best = best.min(res / lambda.abs().max(1.0));
            if res <= opts.tol * lambda.abs().max(1.0) {
                fix_sign(&mut x);
                values.push(lambda);
                residuals.push(res);
                found.push(x);
                break;
            }
            if iterations >= opts.max_iter {
                return Err(Error::NotConverged {
                    iterations,
                    best_residual: best,
                });
            }
            par::axpy(shift, &x, &mut y);
            std::mem::swap(&mut x, &mut y);
        }
    }
    Ok(EigenPairs {
        values,
        vectors: found,
        residuals,
        iterations,
    })
}
