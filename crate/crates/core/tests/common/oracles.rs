//! Brute-force reference computations. Nothing here calls into the crate's
//! algorithms; inputs and outputs are plain vectors.
#![allow(dead_code)]

/// AUC by exhaustive pair counting: the fraction of (positive, negative)
/// pairs where the positive scores higher, ties counting one half.
pub fn pair_count_auc(positive: &[f64], negative: &[f64]) -> Option<f64> {
    if positive.is_empty() || negative.is_empty() {
        return None;
    }
    let mut twice_wins: u64 = 0;
    for &p in positive {
        for &n in negative {
            if p > n {
                twice_wins += 2;
            } else if p == n {
                twice_wins += 1;
            }
        }
    }
    Some(twice_wins as f64 / (2.0 * positive.len() as f64 * negative.len() as f64))
}

pub fn rbf_dense(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

pub fn kernel_matrix(xs: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    xs.iter()
        .map(|a| xs.iter().map(|b| rbf_dense(a, b, gamma)).collect())
        .collect()
}

/// Dual objective `sum a - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], k: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 <= a <= c, y^T a = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let h = |lambda: f64| -> f64 {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c) * yi)
            .sum()
    };
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    v.iter()
        .zip(y)
        .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c))
        .collect()
}

/// Solves the SVM dual with accelerated projected gradient (FISTA with
/// function-value restart). Returns the multipliers. Stops early once the
/// projected-gradient fixed-point residual is below 1e-10.
pub fn qp_dual_oracle(k: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> Vec<f64> {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect())
        .collect();
    // Gershgorin bound on the largest eigenvalue
    let lipschitz = q
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let q_times = |a: &[f64]| -> Vec<f64> {
        q.iter()
            .map(|row| row.iter().zip(a).map(|(qij, aj)| qij * aj).sum::<f64>())
            .collect()
    };
    // 1/2 a^T Q a - e^T a
    let primal = |a: &[f64], qa: &[f64]| -> f64 {
        a.iter().zip(qa).map(|(ai, qai)| 0.5 * ai * qai - ai).sum::<f64>()
    };
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut fx = 0.0;
    for it in 0..iterations {
        if it % 100 == 99 {
            let qx = q_times(&x);
            let g: Vec<f64> = x.iter().zip(&qx).map(|(xi, qxi)| xi - (qxi - 1.0) / lipschitz).collect();
            let residual = project(&g, y, c)
                .iter()
                .zip(&x)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if residual < 1e-10 {
                break;
            }
        }
        let qz = q_times(&z);
        let step: Vec<f64> = z
            .iter()
            .zip(&qz)
            .map(|(zi, qzi)| zi - (qzi - 1.0) / lipschitz)
            .collect();
        let next = project(&step, y, c);
        let f_next = primal(&next, &q_times(&next));
        if f_next > fx {
            t = 1.0;
            z = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        x = next;
        fx = f_next;
        t = t_next;
    }
    x
}

/// Dense TF-IDF with smoothed idf and L2 row normalization, straight from
/// the definitions: rows are documents, columns are `terms`.
pub fn dense_tfidf(docs: &[Vec<&str>], terms: &[&str]) -> Vec<Vec<f64>> {
    dense_tfidf_transform(docs, docs, terms)
}

/// Like [`dense_tfidf`] with idf fitted on `fit` and rows for `queries`.
pub fn dense_tfidf_transform(fit: &[Vec<&str>], queries: &[Vec<&str>], terms: &[&str]) -> Vec<Vec<f64>> {
    let n = fit.len() as f64;
    let idf: Vec<f64> = terms
        .iter()
        .map(|t| {
            let df = fit.iter().filter(|d| d.contains(t)).count() as f64;
            ((1.0 + n) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    queries
        .iter()
        .map(|d| {
            let row: Vec<f64> = terms
                .iter()
                .zip(&idf)
                .map(|(t, w)| d.iter().filter(|x| *x == t).count() as f64 * w)
                .collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter().map(|v| if norm > 0.0 { v / norm } else { 0.0 }).collect()
        })
        .collect()
}
