//! Gaussian quadrature rules used across the crate.
//!
//! Nodes and weights come from the Golub-Welsch construction: eigenvalues of
//! the symmetric tridiagonal Jacobi matrix of the orthogonal-polynomial
//! recurrence, weights from the squared first eigenvector components times
//! the zeroth moment. The tridiagonal eigensolve is an implicit-shift QL
//! that rotates only the tracked first-component row, so building a rule
//! with `n` nodes costs O(n^2) and stays practical for n in the tens of
//! thousands.

use crate::error::{Error, Result};

/// Implicit-shift QL on a symmetric tridiagonal matrix, accumulating only
/// the first row of the eigenvector matrix.
///
/// `diag` holds the diagonal, `off` the subdiagonal (`off[i]` couples i and
/// i+1). Returns `(eigenvalues, first_components)` unsorted.
fn tridiag_ql(mut diag: Vec<f64>, mut off: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    off.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Numeric(
                    "tridiagonal QL failed to converge in 50 sweeps".into(),
                ));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok((diag, z))
}

fn golub_welsch(diag: Vec<f64>, off: Vec<f64>, mu0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (vals, z) = tridiag_ql(diag, off)?;
    let mut pairs: Vec<(f64, f64)> = vals
        .into_iter()
        .zip(z.into_iter().map(|zi| mu0 * zi * zi))
        .collect();
    pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

/// Gauss-Jacobi rule on `[0, 1]` for the weight `(1 - t)^beta`:
/// `int_0^1 f(t) (1-t)^beta dt ~= sum_i w_i f(t_i)`.
///
/// Exact for polynomial `f` of degree up to `2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussJacobi01 {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    beta: f64,
}

impl GaussJacobi01 {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 nodes, got {n}")));
        }
        if !(beta > -1.0) || !beta.is_finite() {
            return Err(Error::Domain(format!(
                "weight exponent must be finite and > -1, got {beta}"
            )));
        }
        // recurrence for (1-x)^alpha (1+x)^0 on [-1, 1], alpha = beta
        let a = beta;
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n - 1);
        diag.push(-a / (a + 2.0));
        for k in 1..n {
            let kf = k as f64;
            let denom = 2.0 * kf + a;
            diag.push(-(a * a) / (denom * (denom + 2.0)));
            let b2 = 4.0 * kf * (kf + a) * kf * (kf + a)
                / (denom * denom * (denom + 1.0) * (denom - 1.0));
            off.push(b2.sqrt());
        }
        // mu0 on [-1,1] is 2^(a+1)/(a+1); the map t = (x+1)/2 divides by 2^(a+1)
        let mu0 = 1.0 / (a + 1.0);
        let (x, w) = golub_welsch(diag, off, mu0)?;
        Ok(Self {
            nodes: x.into_iter().map(|xi| 0.5 * (xi + 1.0)).collect(),
            weights: w,
            beta,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Gauss-Laguerre rule for `int_0^inf f(t) e^-t dt ~= sum_i w_i f(t_i)`.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 nodes, got {n}")));
        }
        let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
        let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
        let (nodes, weights) = golub_welsch(diag, off, 1.0)?;
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Compensated (Neumaier) accumulator for sums whose terms vary over many
/// orders of magnitude.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        self.comp += if self.sum.abs() >= term.abs() {
            (self.sum - t) + term
        } else {
            (term - t) + self.sum
        };
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
