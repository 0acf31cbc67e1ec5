use std::sync::Arc;

use rayon::prelude::*;

use super::cache::RowCache;
use super::Gamma;
use crate::error::{Error, Result};
use crate::features::SparseVector;

/// `exp(-gamma * |x - y|^2)` with the squared distance expanded as
/// `|x|^2 + |y|^2 - 2<x, y>` over the sparse entries.
pub fn rbf_kernel(x: &SparseVector, y: &SparseVector, gamma: f64) -> f64 {
    rbf_from_parts(x.squared_norm(), y.squared_norm(), x.dot(y), gamma)
}

#[inline]
pub(crate) fn rbf_from_parts(sq_x: f64, sq_y: f64, dot: f64, gamma: f64) -> f64 {
    // rounding can push the expansion slightly below zero
    let d2 = (sq_x + sq_y - 2.0 * dot).max(0.0);
    (-gamma * d2).exp()
}

/// Resolves `Gamma::Scale` to `1 / (n_features * var)`, where `var` is the
/// variance of every entry of the `n x n_features` matrix, implicit zeros
/// included. Explicit values pass through.
pub fn resolve_gamma(gamma: Gamma, vectors: &[SparseVector], n_features: usize) -> Result<f64> {
    let value = match gamma {
        Gamma::Value(g) => g,
        Gamma::Scale => {
            if vectors.is_empty() {
                return Err(Error::Config("cannot resolve gamma on an empty training set".into()));
            }
            let n_features = n_features.max(vectors.iter().map(SparseVector::dim_hint).max().unwrap_or(0));
            if n_features == 0 {
                return Err(Error::Config("cannot resolve gamma with zero features".into()));
            }
            let cells = vectors.len() as f64 * n_features as f64;
            let total: f64 = vectors.iter().flat_map(|v| v.values()).sum();
            let mean = total / cells;
            let stored = vectors.iter().map(SparseVector::nnz).sum::<usize>() as f64;
            let sq_dev: f64 = vectors
                .iter()
                .flat_map(|v| v.values())
                .map(|x| (x - mean) * (x - mean))
                .sum();
            let var = (sq_dev + (cells - stored) * mean * mean) / cells;
            if var > 0.0 {
                1.0 / (n_features as f64 * var)
            } else {
                log::warn!("feature variance is zero; falling back to gamma = 1/{n_features}");
                1.0 / n_features as f64
            }
        }
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Config(format!("gamma must be positive and finite, got {value}")));
    }
    Ok(value)
}

/// Kernel rows over a fixed training set, computed on demand and cached.
pub(crate) struct KernelMatrix<'a> {
    vectors: &'a [SparseVector],
    sq_norms: Vec<f64>,
    gamma: f64,
    scratch: Vec<f64>,
    cache: RowCache,
}

impl<'a> KernelMatrix<'a> {
    pub(crate) fn new(vectors: &'a [SparseVector], gamma: f64, cache_bytes: usize) -> Self {
        let dim = vectors.iter().map(SparseVector::dim_hint).max().unwrap_or(0);
        KernelMatrix {
            vectors,
            sq_norms: vectors.iter().map(SparseVector::squared_norm).collect(),
            gamma,
            scratch: vec![0.0; dim],
            cache: RowCache::new(cache_bytes, vectors.len()),
        }
    }

    /// Row `i` of the kernel matrix. Entries equal `rbf_kernel` bit for bit.
    pub(crate) fn row(&mut self, i: usize) -> Arc<[f64]> {
        if let Some(row) = self.cache.get(i) {
            return row;
        }
        let xi = &self.vectors[i];
        for (k, v) in xi.iter() {
            self.scratch[k as usize] = v;
        }
        let dense = &self.scratch;
        let sq_i = self.sq_norms[i];
        let gamma = self.gamma;
        let row: Vec<f64> = self
            .vectors
            .par_iter()
            .zip(self.sq_norms.par_iter())
            .with_min_len(256)
            .map(|(xj, &sq_j)| rbf_from_parts(sq_i, sq_j, xj.dot_dense(dense), gamma))
            .collect();
        for (k, _) in xi.iter() {
            self.scratch[k as usize] = 0.0;
        }
        let row: Arc<[f64]> = Arc::from(row);
        self.cache.insert(i, Arc::clone(&row));
        row
    }

    pub(crate) fn cache_stats(&self) -> (u64, u64) {
        (self.cache.hits, self.cache.misses)
    }
}
