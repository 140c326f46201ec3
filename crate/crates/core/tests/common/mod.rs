//! Independent oracles shared by the integration tests.
//!
//! Everything here is written against dense adjacency matrices and plain
//! enumeration so it shares no code path with the library internals.

#![allow(dead_code)]

pub mod brute;
pub mod enumerate;
pub mod quadrature;

use alaam::{Covariates, DirectedGraph};
use rand::Rng;

/// Random digraph with independent arcs of probability `density`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> DirectedGraph {
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(density) {
                arcs.push((i, j));
            }
        }
    }
    DirectedGraph::from_arcs(n, arcs).unwrap()
}

pub fn random_outcomes<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.random_bool(p))).collect()
}

/// Covariates on a quarter-integer grid so float sums stay exact.
pub fn random_covariates<R: Rng>(rng: &mut R, n: usize) -> Covariates {
    let mut c = Covariates::new();
    c.insert(
        "w",
        (0..n)
            .map(|_| f64::from(rng.random_range(-8i32..=8)) / 4.0)
            .collect(),
    )
    .unwrap();
    c.insert(
        "g",
        (0..n)
            .map(|_| f64::from(u8::from(rng.random_bool(0.5))))
            .collect(),
    )
    .unwrap();
    c
}

/// Every catalogue term, with covariate bindings to the columns above.
pub const ALL_TERMS: [&str; 14] = [
    "intercept",
    "out-activity",
    "in-activity",
    "out-star(2)",
    "out-star(3)",
    "contagion",
    "reciprocal-contagion",
    "indirect-contagion",
    "indirect-ties",
    "mixed-two-path",
    "closure-contagion",
    "transitive-contagion",
    "covariate(w)",
    "contagion-interaction(g)",
];

pub fn adjacency(g: &DirectedGraph) -> Vec<Vec<u8>> {
    let n = g.node_count();
    let mut x = vec![vec![0u8; n]; n];
    for (i, j) in g.arcs() {
        x[i][j] = 1;
    }
    x
}

pub fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Standard error of a mean from non-overlapping batch means.
pub fn batch_means_se(series: &[f64], batches: usize) -> f64 {
    let len = series.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Logistic-regression MLE by plain Newton iteration with Gaussian
/// elimination; rows are design vectors.
pub fn logistic_mle(rows: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let p = rows[0].len();
    let mut beta = vec![0.0; p];
    for _ in 0..100 {
        let mut grad = vec![0.0; p];
        let mut hess = vec![vec![0.0; p]; p];
        for (x, &yi) in rows.iter().zip(y) {
            let mu = logistic(x.iter().zip(&beta).map(|(a, b)| a * b).sum());
            for a in 0..p {
                grad[a] += (f64::from(yi) - mu) * x[a];
                for b in 0..p {
                    hess[a][b] += mu * (1.0 - mu) * x[a] * x[b];
                }
            }
        }
        let step = solve(hess, grad);
        let size: f64 = step.iter().map(|s| s.abs()).sum();
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if size < 1e-12 {
            break;
        }
    }
    beta
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}
