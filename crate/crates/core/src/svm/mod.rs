//! Soft-margin RBF-kernel SVM trained with SMO over sparse TF-IDF vectors.

mod cache;
mod kernel;
mod smo;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::SparseVector;

pub use kernel::{rbf_kernel, resolve_gamma};
pub use smo::{train_smo, train_smo_with_features};

/// Kernel width: either fixed or derived from the training data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gamma {
    /// `1 / (n_features * variance of the feature matrix)`
    Scale,
    Value(f64),
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Scale => f.write_str("scale"),
            Gamma::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("scale") {
            return Ok(Gamma::Scale);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Gamma::Value(v)),
            _ => Err(Error::Config(format!("gamma must be \"scale\" or a positive number, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmConfig {
    /// Soft-margin penalty.
    pub c: f64,
    pub gamma: Gamma,
    /// KKT tolerance.
    pub tol: f64,
    /// Iteration budget, in units of one update per training example.
    pub max_passes: usize,
    /// Byte budget for cached kernel rows.
    pub cache_bytes: usize,
    /// Seeds the fallback sweep used when the greedy working pair stalls.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_passes: 1000,
            cache_bytes: 256 << 20,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingMeta {
    pub c: f64,
    pub tol: f64,
    pub iterations: usize,
    /// Final dual objective, `sum a - 1/2 a^T Q a`.
    pub objective: f64,
    pub converged: bool,
}

/// A trained detector. Immutable; safe to share across scoring threads.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<SparseVector>,
    /// `a_i * y_i` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub meta: TrainingMeta,
}

const MODEL_MAGIC: &str = "detext-svm 1";

impl SvmModel {
    /// Signed margin `sum_i coef_i K(sv_i, x) + b`; positive means machine.
    pub fn decision_value(&self, x: &SparseVector) -> f64 {
        let sq_x = x.squared_norm();
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * kernel::rbf_from_parts(sv.squared_norm(), sq_x, sv.dot(x), self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// `+1` for a non-negative margin, `-1` otherwise.
    pub fn predict(&self, x: &SparseVector) -> i8 {
        sign(self.decision_value(x))
    }

    pub fn decision_values(&self, xs: &[SparseVector]) -> Vec<f64> {
        xs.par_iter().map(|x| self.decision_value(x)).collect()
    }

    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{MODEL_MAGIC}")?;
        writeln!(out, "c {:?}", self.meta.c)?;
        writeln!(out, "tol {:?}", self.meta.tol)?;
        writeln!(out, "gamma {:?}", self.gamma)?;
        writeln!(out, "bias {:?}", self.bias)?;
        writeln!(out, "iterations {}", self.meta.iterations)?;
        writeln!(out, "objective {:?}", self.meta.objective)?;
        writeln!(out, "converged {}", self.meta.converged)?;
        writeln!(out, "support_vectors {}", self.support_vectors.len())?;
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            writeln!(out, "{coef:?}\t{}", sv.to_text())?;
        }
        out.flush()
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n + 1, l)),
                Some((n, Err(e))) => Err(Error::Data(format!("model line {}: {e}", n + 1))),
                None => Err(Error::Data(format!("model file ends before {what}"))),
            }
        };
        let (_, magic) = next("header")?;
        if magic.trim() != MODEL_MAGIC {
            return Err(Error::Data(format!("not a model file (header {magic:?})")));
        }
        let mut field = |key: &str| -> Result<String> {
            let (n, line) = next(key)?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| Error::Data(format!("model line {n}: expected {key}")))
        };
        fn num<T: FromStr>(key: &str, v: String) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Data(format!("model field {key}: cannot parse {v:?}")))
        }
        let c: f64 = num("c", field("c")?)?;
        let tol: f64 = num("tol", field("tol")?)?;
        let gamma: f64 = num("gamma", field("gamma")?)?;
        let bias: f64 = num("bias", field("bias")?)?;
        let iterations: usize = num("iterations", field("iterations")?)?;
        let objective: f64 = num("objective", field("objective")?)?;
        let converged: bool = num("converged", field("converged")?)?;
        let count: usize = num("support_vectors", field("support_vectors")?)?;

        let mut support_vectors = Vec::with_capacity(count);
        let mut dual_coefs = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("support vector")?;
            let (coef, vec) = line
                .split_once('\t')
                .ok_or_else(|| Error::Data(format!("model line {n}: expected coef<TAB>vector")))?;
            dual_coefs.push(num::<f64>("dual coefficient", coef.to_string())?);
            support_vectors.push(
                SparseVector::parse(vec).map_err(|e| Error::Data(format!("model line {n}: {e}")))?,
            );
        }
        let model = SvmModel {
            support_vectors,
            dual_coefs,
            bias,
            gamma,
            meta: TrainingMeta {
                c,
                tol,
                iterations,
                objective,
                converged,
            },
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks the structural invariants of a trained model.
    pub fn validate(&self) -> Result<()> {
        if self.support_vectors.is_empty() || self.support_vectors.len() != self.dual_coefs.len() {
            return Err(Error::Data(format!(
                "model has {} support vectors and {} coefficients",
                self.support_vectors.len(),
                self.dual_coefs.len()
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) || !self.bias.is_finite() {
            return Err(Error::Data("model gamma or bias is invalid".into()));
        }
        let bound = self.meta.c * (1.0 + 1e-12);
        if let Some(c) = self.dual_coefs.iter().find(|c| !c.is_finite() || c.abs() > bound) {
            return Err(Error::Data(format!("dual coefficient {c} exceeds c = {}", self.meta.c)));
        }
        let sum: f64 = self.dual_coefs.iter().sum();
        if sum.abs() > 1e-6 {
            return Err(Error::Data(format!("dual coefficients sum to {sum}, not 0")));
        }
        Ok(())
    }
}

/// Sign with zero mapped to `+1`.
pub fn sign(decision: f64) -> i8 {
    if decision >= 0.0 {
        1
    } else {
        -1
    }
}
