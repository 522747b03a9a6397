//! Limit null covariance kernel and Rayleigh-Ritz eigenvalue
//! approximation.
//!
//! Under the null the statistic converges to `||Z||^2` for a centered
//! Gaussian process Z on [0, 1] whose covariance kernel has an explicit
//! series form. The distribution of `||Z||^2` is a weighted chi-square sum
//! `sum_j lambda_j N_j^2`, with the `lambda_j` the eigenvalues of the
//! kernel's integral operator on the weighted space. The eigenproblem has
//! no analytic solution; restricting to the first `dim` normalized shifted
//! Jacobi polynomials and solving the projected symmetric eigenproblem
//! gives Rayleigh-Ritz approximations from below.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::distributions::ZetaModel;
use crate::error::{Error, Result};
use crate::quad::{CompensatedSum, GaussJacobi01};
use crate::stein::WeightBeta;

/// `a(t) = E[g_s0(X, t)]` under the null: the mean sensitivity of the
/// Stein process to the plugged-in shape.
///
/// Series `(1-t)/zeta(s0) sum_{k>=2} t^(k-1) (k/(k-1))^s0 k^-s0 ln(k/(k-1))`,
/// truncated once the geometric tail bound drops below 1e-15.
pub fn a_function(s0: f64, t: f64) -> Result<f64> {
    if !(s0 > 1.0) {
        return Err(Error::Domain(format!("s0 must exceed 1, got {s0}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t must lie in [0, 1], got {t}")));
    }
    if t == 0.0 || t == 1.0 {
        return Ok(0.0);
    }
    let zeta0 = ZetaModel::new(s0)?.zeta();
    let bound = 2f64.powf(s0) * 2f64.ln();
    let mut acc = CompensatedSum::default();
    let mut k = 2u64;
    loop {
        let kf = k as f64;
        let ratio = kf / (kf - 1.0);
        acc.add(t.powf(kf - 1.0) * ratio.powf(s0) * kf.powf(-s0) * ratio.ln());
        // remaining terms are below bound * t^k / (1 - t) termwise summed
        if k > 8 && bound * t.powf(kf) / (1.0 - t) * kf.powf(-s0) < 1e-15 {
            break;
        }
        k += 1;
        if k > 100_000_000 {
            return Err(Error::Convergence(format!(
                "a(t) series stalled at t = {t}"
            )));
        }
    }
    Ok((1.0 - t) / zeta0 * acc.value())
}

/// The limit covariance kernel `C(u, v)` for a given `s0` and weight.
///
/// Kernel arguments are named `(u, v)` on [0, 1]; `s0` is the shape
/// parameter of the null point the process is anchored at.
#[derive(Debug, Clone)]
pub struct CovarianceKernel {
    s0: f64,
    beta: WeightBeta,
    zeta0: f64,
    fisher: f64,
    /// Series truncation target for the k-sums inside the kernel.
    tail_tol: f64,
}

impl CovarianceKernel {
    pub fn new(s0: f64, beta: WeightBeta) -> Result<Self> {
        let model = ZetaModel::new(s0)?;
        let z0 = model.zeta();
        let fisher = model.zeta_second() / z0 - (model.zeta_prime() / z0).powi(2);
        Ok(Self {
            s0,
            beta,
            zeta0: z0,
            fisher,
            tail_tol: 1e-13,
        })
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn beta(&self) -> WeightBeta {
        self.beta
    }

    /// `C(u, v) = uv(1-u)(1-v)/zeta - a(u)a(v)/I
    ///  + (1-u)(1-v)/zeta sum_{k>=2} k^-s0 (uv)^(k-1) (c_k - u)(c_k - v)`
    /// with `c_k = (k/(k-1))^s0`.
    ///
    /// The summand carries the geometric factor `(uv)^(k-1)`, so the
    /// truncation point follows from `(2^s0 + 1)^2 (uv)^k` dropping below
    /// the tail tolerance.
    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        for x in [u, v] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("kernel argument {x} outside [0, 1]")));
            }
        }
        let s0 = self.s0;
        let base = u * v * (1.0 - u) * (1.0 - v) / self.zeta0
            - a_function(s0, u)? * a_function(s0, v)? / self.fisher;
        let uv = u * v;
        if uv == 0.0 || u == 1.0 || v == 1.0 {
            return Ok(base);
        }
        let bracket_bound = (2f64.powf(s0) + 1.0).powi(2);
        let mut acc = CompensatedSum::default();
        let mut k = 2u64;
        loop {
            let kf = k as f64;
            let c = (kf / (kf - 1.0)).powf(s0);
            acc.add(kf.powf(-s0) * uv.powf(kf - 1.0) * (c - u) * (c - v));
            if k > 8 && bracket_bound * uv.powf(kf) / (1.0 - uv) < self.tail_tol {
                break;
            }
            k += 1;
            if k > 100_000_000 {
                return Err(Error::Convergence(format!(
                    "kernel series stalled at ({u}, {v})"
                )));
            }
        }
        Ok(base + (1.0 - u) * (1.0 - v) / self.zeta0 * acc.value())
    }
}

/// Normalized shifted Jacobi polynomial `phi_{index,beta}(t)`, orthonormal
/// on [0, 1] under `(1-t)^beta`, evaluated by the three-term recurrence.
pub fn jacobi_basis(index: usize, beta: WeightBeta, t: f64) -> f64 {
    let a = beta.value();
    let norm = (2.0 * index as f64 + a + 1.0).sqrt();
    norm * jacobi_poly(index, a, 2.0 * t - 1.0)
}

/// Classical Jacobi polynomial `P_n^(a,0)(x)` via the stable recurrence.
fn jacobi_poly(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p_prev = 1.0;
    let mut p = (a + 1.0) + (a + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let kf = k as f64;
        let den = 2.0 * kf * (kf + a) * (2.0 * kf + a - 2.0);
        let b1 = (2.0 * kf + a - 1.0) * ((2.0 * kf + a) * (2.0 * kf + a - 2.0) * x + a * a);
        let b2 = 2.0 * (kf + a - 1.0) * (kf - 1.0) * (2.0 * kf + a);
        let next = (b1 * p - b2 * p_prev) / den;
        p_prev = p;
        p = next;
    }
    p
}

/// Eigenvalues of the projected covariance operator.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub schema: u32,
    pub s0: f64,
    pub beta: f64,
    pub dim: usize,
    pub quad_order: usize,
    /// Descending, clipped at zero.
    pub eigenvalues: Vec<f64>,
    /// |sum of eigenvalues - int C(t,t) w(t) dt|.
    pub trace_residual: f64,
    /// Total magnitude clipped away from negative discretization noise.
    pub clipped_mass: f64,
}

/// Rayleigh-Ritz approximation: project the kernel operator onto the first
/// `dim` orthonormal Jacobi polynomials with a `quad_order`-node
/// Gauss-Jacobi rule, solve the dense symmetric eigenproblem.
pub fn rayleigh_ritz(
    kernel: &CovarianceKernel,
    dim: usize,
    quad_order: usize,
) -> Result<EigenResult> {
    if dim < 1 {
        return Err(Error::Domain("basis dimension must be >= 1".into()));
    }
    if quad_order < 2 * dim {
        return Err(Error::Domain(format!(
            "quadrature order {quad_order} too small for dimension {dim}; need >= {}",
            2 * dim
        )));
    }
    let beta = kernel.beta();
    let rule = GaussJacobi01::new(quad_order, beta.value())?;
    let nodes = rule.nodes();
    let weights = rule.weights();
    let q = nodes.len();

    // basis values scaled by quadrature weights: row i holds w_m phi_i(t_m)
    let mut scaled = vec![vec![0.0f64; q]; dim];
    for (i, row) in scaled.iter_mut().enumerate() {
        for (m, value) in row.iter_mut().enumerate() {
            *value = weights[m] * jacobi_basis(i, beta, nodes[m]);
        }
    }
    // kernel on the node grid (symmetric; fill the upper triangle)
    let mut kmat = vec![vec![0.0f64; q]; q];
    for m in 0..q {
        for l in m..q {
            let v = kernel.eval(nodes[m], nodes[l])?;
            kmat[m][l] = v;
            kmat[l][m] = v;
        }
    }
    let mut a = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for m in 0..q {
                let mut inner = 0.0;
                for l in 0..q {
                    inner += kmat[m][l] * scaled[j][l];
                }
                acc += scaled[i][m] * inner;
            }
            a[(i, j)] = acc;
        }
    }
    let asymmetry = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - a[(j, i)]).abs())
        .fold(0.0f64, f64::max);
    if asymmetry > 1e-8 {
        return Err(Error::Numeric(format!(
            "projected operator asymmetry {asymmetry:.3e} exceeds 1e-8"
        )));
    }
    let sym = (&a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap());
    let clipped_mass: f64 = eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    for l in eigenvalues.iter_mut() {
        *l = l.max(0.0);
    }
    let trace_quad: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| kernel.eval(t, t).map(|c| w * c))
        .sum::<Result<f64>>()?;
    let trace_residual = (eigenvalues.iter().sum::<f64>() - trace_quad).abs();
    Ok(EigenResult {
        schema: 1,
        s0: kernel.s0(),
        beta: beta.value(),
        dim,
        quad_order,
        eigenvalues,
        trace_residual,
        clipped_mass,
    })
}
