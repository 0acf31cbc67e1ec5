use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A sparse vector with strictly increasing indices and no stored zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Data(format!(
                "sparse vector has {} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Data("sparse indices must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v == 0.0) {
            return Err(Error::Data(format!("sparse vector stores invalid value {v}")));
        }
        Ok(SparseVector { indices, values })
    }

    /// Builds from `(index, value)` pairs sorted by index, dropping zeros.
    pub(crate) fn from_sorted_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let (indices, values) = pairs.into_iter().filter(|&(_, v)| v != 0.0).unzip();
        SparseVector { indices, values }
    }

    pub fn from_dense(dense: &[f64]) -> Result<Self> {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v))
            .unzip();
        Self::new(indices, values)
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// One past the largest stored index (0 for the empty vector).
    pub fn dim_hint(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize + 1)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    /// Dot product against a dense scratch buffer.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter()
            .map(|(i, v)| dense.get(i as usize).map_or(0.0, |d| d * v))
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    /// `index:value` pairs separated by single spaces. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, (i, v)) in self.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            write!(out, "{i}:{v:?}").expect("writing to a String cannot fail");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in text.split_whitespace() {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| Error::Data(format!("sparse entry {tok:?} is not index:value")))?;
            indices.push(
                i.parse::<u32>()
                    .map_err(|_| Error::Data(format!("bad sparse index in {tok:?}")))?,
            );
            values.push(
                v.parse::<f64>()
                    .map_err(|_| Error::Data(format!("bad sparse value in {tok:?}")))?,
            );
        }
        Self::new(indices, values)
    }
}
