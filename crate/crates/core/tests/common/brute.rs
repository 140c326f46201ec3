//! Naive ordered-tuple recount of every statistic.

use alaam::{Covariates, DirectedGraph};

use super::adjacency;

/// Statistic values for `super::ALL_TERMS`, by enumeration of node tuples.
pub fn catalogue(y: &[u8], g: &DirectedGraph, covs: &Covariates) -> Vec<f64> {
    let x = adjacency(g);
    let n = y.len();
    let y: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let x = |i: usize, j: usize| f64::from(x[i][j]);
    let w = covs.get("w").unwrap();
    let gind = covs.get("g").unwrap();

    let mut z = vec![0.0; 14];
    for i in 0..n {
        z[0] += y[i];
        for j in 0..n {
            if j == i {
                continue;
            }
            z[1] += y[i] * x(i, j);
            z[2] += y[i] * x(j, i);
            z[5] += y[i] * y[j] * x(i, j);
            if i < j {
                z[6] += y[i] * y[j] * x(i, j) * x(j, i);
            }
            z[13] += y[i] * y[j] * x(i, j) * gind[i];
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                z[7] += y[i] * y[j] * x(i, k) * x(k, j);
                z[8] += y[i] * x(i, k) * x(k, j);
                z[9] += y[i] * x(i, j) * x(i, k);
                if j < k {
                    z[3] += y[i] * x(i, j) * x(i, k);
                    for l in (k + 1)..n {
                        if l != i {
                            z[4] += y[i] * x(i, j) * x(i, k) * x(i, l);
                        }
                    }
                }
                z[10] += y[j] * y[k] * x(j, i) * x(i, k) * x(j, k);
                z[11] += y[i] * y[j] * y[k] * x(j, i) * x(i, k) * x(j, k);
            }
        }
        z[12] += y[i] * w[i];
    }
    z
}

/// The goodness-of-fit battery in `alaam::GOF_NAMES` order.
pub fn battery(y: &[u8], g: &DirectedGraph) -> Vec<f64> {
    let xm = adjacency(g);
    let n = y.len();
    let y: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let x = |i: usize, j: usize| f64::from(xm[i][j]);
    let mut s = vec![0.0; 15];
    for i in 0..n {
        s[0] += y[i];
        for j in 0..n {
            if j == i {
                continue;
            }
            s[1] += y[i] * y[j] * x(i, j);
            if i < j {
                s[2] += y[i] * y[j] * x(i, j) * x(j, i);
            }
            s[6] += y[i] * x(j, i);
            s[7] += y[i] * x(i, j);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                s[3] += y[i] * y[j] * x(i, k) * x(k, j);
                s[4] += y[j] * y[k] * x(j, i) * x(i, k) * x(j, k);
                s[5] += y[i] * y[j] * y[k] * x(j, i) * x(i, k) * x(j, k);
                s[8] += y[i] * x(i, j) * x(i, k);
                if j < k {
                    s[9] += y[i] * x(i, j) * x(i, k);
                    s[10] += y[i] * x(j, i) * x(k, i);
                }
                s[11] += y[i] * x(i, j) * x(i, k) * x(j, k);
                s[12] += y[i] * x(j, i) * x(k, i) * x(j, k);
                s[13] += y[i] * x(j, i) * x(i, k) * x(j, k);
                s[14] += y[i] * x(i, k) * x(k, j);
            }
        }
    }
    s
}
