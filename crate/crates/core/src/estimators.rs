//! Estimators built from the score matrices `Z_n`: the truncated lag-`h`
//! covariance and its partial-trace factors, the Bartlett long-run
//! covariance `Γ̂` of the product process `Z_n ⊗ Z_{n+h}`, the derivative
//! tensors of the factor maps, and the delta-method covariance `Q̂` of the
//! separability residual `Ĉ₁ ⊗̃ Ĉ₂ − Ĉ`.
//!
//! Order-4 tensors are indexed `(k, j, k', j')`; with `d = KJ` their row-major
//! vectorization has index `(k·J + j)·d + (k'·J + j')`. Order-8 tensors are
//! kept as `d² × d²` matrices in the same linearization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{compose, Matrix};
use crate::reduction::ScorePanel;
use crate::tensor::{flatten, full_trace, partial_trace_over_first, partial_trace_over_second, Tensor};

/// `Ĉ^(h)_KJ` together with `Ĉ₁ = Tr₂(Ĉ)/Tr(Ĉ)` and `Ĉ₂ = Tr₁(Ĉ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LagCovariance {
    pub h: usize,
    /// Shape `(K, J, K, J)`.
    pub c: Tensor,
    /// `K × K`, unit trace.
    pub c1: Matrix,
    /// `J × J`.
    pub c2: Matrix,
    pub trace: f64,
}

impl LagCovariance {
    pub fn k(&self) -> usize {
        self.c1.rows()
    }

    pub fn j(&self) -> usize {
        self.c2.rows()
    }

    /// `‖Ĉ₁ ⊗̃ Ĉ₂ − Ĉ‖²_F`.
    pub fn residual_norm_sq(&self) -> f64 {
        let (k, j) = (self.k(), self.j());
        let mut acc = 0.0;
        let data = self.c.data();
        let mut at = 0;
        for a in 0..k {
            for b in 0..j {
                for c in 0..k {
                    let c1 = self.c1[(a, c)];
                    for d in 0..j {
                        let r = c1 * self.c2[(b, d)] - data[at];
                        acc += r * r;
                        at += 1;
                    }
                }
            }
        }
        acc
    }
}

/// `vec(Z_n ⊗ Z_{n+h})` for `n = 0 .. N−h−1`.
fn lagged_products(z: &ScorePanel, h: usize) -> Vec<Vec<f64>> {
    let m = z.n() - h;
    (0..m)
        .map(|n| {
            let (left, right) = (z.observation(n), z.observation(n + h));
            let mut p = Vec::with_capacity(left.len() * right.len());
            for &a in left {
                p.extend(right.iter().map(|&b| a * b));
            }
            p
        })
        .collect()
}

fn check_lag(n: usize, h: usize) -> Result<()> {
    if h + 2 > n {
        return Err(Error::InsufficientLag { h, n });
    }
    Ok(())
}

pub fn lag_covariance(z: &ScorePanel, h: usize) -> Result<LagCovariance> {
    check_lag(z.n(), h)?;
    let (k, j) = (z.k(), z.j());
    let products = lagged_products(z, h);
    let mut mean = vec![0.0; products[0].len()];
    for p in &products {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    let inv = 1.0 / products.len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv);

    let c = Tensor::new(vec![k, j, k, j], mean)?;
    let trace = full_trace(&c)?;
    let floor = 1e-12 * c.frobenius_norm() * libm::sqrt((k * j) as f64);
    if !(trace.abs() > floor) {
        return Err(Error::DegenerateCovariance(trace));
    }
    let c1 = partial_trace_over_second(&c)?.scale(1.0 / trace);
    let c2 = partial_trace_over_first(&c)?;
    Ok(LagCovariance { h, c, c1, c2, trace })
}

/// `q = ⌊1.1447 (N/4)^{1/3}⌋`, at least 1.
pub fn bartlett_bandwidth(n: usize) -> usize {
    let q = 1.1447 * libm::cbrt(n as f64 / 4.0);
    (libm::floor(q) as usize).max(1)
}

/// `ω_i = 1 − i/(1+q)` for `i ≤ q`, zero beyond; index `i` runs `0..=max_lag`.
pub fn bartlett_weights(q: usize, max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|i| {
            if i <= q {
                1.0 - i as f64 / (1.0 + q as f64)
            } else {
                0.0
            }
        })
        .collect()
}

/// Bartlett estimate `Γ̂ = R̂₀ + Σ_{i=1}^{q} ω_i (R̂_i + R̂_i*)`, flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct LongRunCov {
    /// `d² × d²`.
    pub gamma: Matrix,
    pub q: usize,
    /// `ω_0 … ω_{N−h−1}`.
    pub weights: Vec<f64>,
}

impl LongRunCov {
    pub fn as_tensor(&self, k: usize, j: usize) -> Result<Tensor> {
        self.gamma.reshape(&[k, j, k, j, k, j, k, j])
    }
}

/// Lag-`i` autocovariance of the centered products,
/// `R̂_i = (1/(N−i−h)) Σ_n (P_n − Ĉ) ⊗ (P_{n+i} − Ĉ)` with `P_n = Z_n ⊗ Z_{n+h}`.
/// The adjoint `R̂_i*` is its transpose.
pub fn product_autocovariance(z: &ScorePanel, cov: &LagCovariance, i: usize) -> Result<Matrix> {
    let centered = centered_products(z, cov)?;
    autocov_from_centered(&centered, i)
}

fn centered_products(z: &ScorePanel, cov: &LagCovariance) -> Result<Vec<Vec<f64>>> {
    check_lag(z.n(), cov.h)?;
    if z.k() != cov.k() || z.j() != cov.j() {
        return Err(Error::Dimension(format!(
            "scores are {}x{} but the covariance is for {}x{}",
            z.k(),
            z.j(),
            cov.k(),
            cov.j()
        )));
    }
    let mut products = lagged_products(z, cov.h);
    let mean = cov.c.data();
    for p in products.iter_mut() {
        for (v, m) in p.iter_mut().zip(mean) {
            *v -= m;
        }
    }
    Ok(products)
}

fn autocov_from_centered(y: &[Vec<f64>], i: usize) -> Result<Matrix> {
    if i >= y.len() {
        return Err(Error::Dimension(format!(
            "autocovariance lag {i} needs more than {} products",
            y.len()
        )));
    }
    let dim = y[0].len();
    let mut r = Matrix::zeros(dim, dim);
    let terms = y.len() - i;
    for n in 0..terms {
        let (left, right) = (&y[n], &y[n + i]);
        for (a, &ya) in left.iter().enumerate() {
            if ya == 0.0 {
                continue;
            }
            let row = &mut r.data_mut()[a * dim..(a + 1) * dim];
            for (out, &yb) in row.iter_mut().zip(right) {
                *out += ya * yb;
            }
        }
    }
    Ok(r.scale(1.0 / terms as f64))
}

pub fn long_run_cov(z: &ScorePanel, cov: &LagCovariance, q: usize) -> Result<LongRunCov> {
    if q == 0 {
        return Err(Error::Config("bandwidth must be at least 1".into()));
    }
    let limit = z.n() - cov.h - 1;
    if q > limit {
        return Err(Error::BandwidthTooLarge { q, limit });
    }
    let y = centered_products(z, cov)?;
    let weights = bartlett_weights(q, limit);
    let mut gamma = autocov_from_centered(&y, 0)?;
    // Fixed summation order i = 1..=q keeps the result reproducible.
    for (i, &w) in weights.iter().enumerate().skip(1).take(q) {
        let r = autocov_from_centered(&y, i)?;
        let dim = r.rows();
        for a in 0..dim {
            for b in 0..dim {
                gamma[(a, b)] += w * (r[(a, b)] + r[(b, a)]);
            }
        }
    }
    Ok(LongRunCov { gamma, q, weights })
}

/// Jacobians of `f₁(C) = Tr₂(C)/Tr(C)`, `f₂(C) = Tr₁(C)` and `f₃(C) = C`,
/// evaluated at `Ĉ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeTensors {
    /// `(K, K, K, J, K, J)`.
    pub m1: Tensor,
    /// `(J, J, K, J, K, J)`.
    pub m2: Tensor,
    /// `(K, J, K, J, K, J, K, J)`, the identity.
    pub m3: Tensor,
}

pub fn derivative_tensors(cov: &LagCovariance) -> Result<DerivativeTensors> {
    let (k, j) = (cov.k(), cov.j());
    let tr = cov.trace;
    if !(tr.abs() > 0.0) || !tr.is_finite() {
        return Err(Error::DegenerateCovariance(tr));
    }
    // Tr₂(Ĉ) = Ĉ₁ · Tr(Ĉ).
    let tr2 = cov.c1.scale(tr);
    let tr_sq = tr * tr;
    // M1 = (Δ·Tr − Tr₂ ⊗ I₄) / Tr², Δ[i,k,i',j,k',l] = δ_ii' δ_kk' δ_jl,
    // I₄[i',j,k',l] = δ_i'k' δ_jl.
    let m1 = Tensor::from_fn(&[k, k, k, j, k, j], |x| {
        let (i, kk, ip, jj, kp, l) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        if jj != l {
            return 0.0;
        }
        let delta = if i == ip && kk == kp { tr } else { 0.0 };
        let ident = if ip == kp { tr2[(i, kk)] } else { 0.0 };
        (delta - ident) / tr_sq
    })?;
    let m2 = Tensor::from_fn(&[j, j, k, j, k, j], |x| {
        let (jj, l, i, jp, kk, lp) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        if jj == jp && l == lp && i == kk {
            1.0
        } else {
            0.0
        }
    })?;
    let m3 = Tensor::from_fn(&[k, j, k, j, k, j, k, j], |x| {
        if x[0] == x[4] && x[1] == x[5] && x[2] == x[6] && x[3] == x[7] {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(DerivativeTensors { m1, m2, m3 })
}

impl DerivativeTensors {
    /// `[M1, M2, M3]` flattened to `K² × d²`, `J² × d²`, `d² × d²`.
    pub fn flattened(&self) -> Result<[Matrix; 3]> {
        Ok([
            flatten(&self.m1, 2)?,
            flatten(&self.m2, 2)?,
            flatten(&self.m3, 4)?,
        ])
    }
}

/// The nine blocks `W_ab = M_a Γ̂ M_b*`, indexed `blocks[a][b]` from zero.
#[derive(Clone, Debug, PartialEq)]
pub struct WBlocks {
    pub blocks: [[Matrix; 3]; 3],
}

impl WBlocks {
    pub fn get(&self, a: usize, b: usize) -> &Matrix {
        &self.blocks[a - 1][b - 1]
    }
}

fn is_identity(m: &Matrix) -> bool {
    m.is_square()
        && (0..m.rows()).all(|i| m.row(i).iter().enumerate().all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 }))
}

pub fn w_blocks(derivs: &DerivativeTensors, gamma: &LongRunCov) -> Result<WBlocks> {
    let [m1, m2, m3] = derivs.flattened()?;
    let g = &gamma.gamma;
    let ms = [&m1, &m2, &m3];
    for m in ms {
        if m.cols() != g.rows() || g.rows() != g.cols() {
            return Err(Error::Dimension(format!(
                "derivative with {} columns does not match Γ of size {}x{}",
                m.cols(),
                g.rows(),
                g.cols()
            )));
        }
    }
    // M3 is the identity, so products with it are skipped; W33 is Γ̂ itself.
    let m3_is_identity = is_identity(&m3);
    let left = |a: usize| -> Result<Matrix> {
        if a == 2 && m3_is_identity {
            Ok(g.clone())
        } else {
            ms[a].matmul(g)
        }
    };
    let lg = [left(0)?, left(1)?, left(2)?];
    let block = |a: usize, b: usize| -> Result<Matrix> {
        if b == 2 && m3_is_identity {
            Ok(lg[a].clone())
        } else {
            lg[a].matmul_transposed(ms[b])
        }
    };
    Ok(WBlocks {
        blocks: [
            [block(0, 0)?, block(0, 1)?, block(0, 2)?],
            [block(1, 0)?, block(1, 1)?, block(1, 2)?],
            [block(2, 0)?, block(2, 1)?, block(2, 2)?],
        ],
    })
}

/// `Q̂` and its nine addends `Q̂_1 … Q̂_9`.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    /// `d² × d²`, symmetrized.
    pub q: Matrix,
    pub components: Vec<Matrix>,
}

impl QOperator {
    pub fn as_tensor(&self, k: usize, j: usize) -> Result<Tensor> {
        self.q.reshape(&[k, j, k, j, k, j, k, j])
    }
}

/// `Ĝ₁ = I₄ ⊗̃ Ĉ₂` flattened to `d² × K²`:
/// `Ĝ₁[(i,j,k,l), (i',k')] = δ_ii' δ_kk' Ĉ₂(j,l)`.
pub fn g1_matrix(cov: &LagCovariance) -> Matrix {
    let (k, j) = (cov.k(), cov.j());
    let mut g = Matrix::zeros(k * j * k * j, k * k);
    for i in 0..k {
        for jj in 0..j {
            for kk in 0..k {
                for l in 0..j {
                    let row = ((i * j + jj) * k + kk) * j + l;
                    g[(row, i * k + kk)] = cov.c2[(jj, l)];
                }
            }
        }
    }
    g
}

/// `Ĝ₂ = Ĉ₁ ⊗̃ I₄` flattened to `d² × J²`:
/// `Ĝ₂[(i,j,k,l), (j',l')] = Ĉ₁(i,k) δ_jj' δ_ll'`.
pub fn g2_matrix(cov: &LagCovariance) -> Matrix {
    let (k, j) = (cov.k(), cov.j());
    let mut g = Matrix::zeros(k * j * k * j, j * j);
    for i in 0..k {
        for jj in 0..j {
            for kk in 0..k {
                for l in 0..j {
                    let row = ((i * j + jj) * k + kk) * j + l;
                    g[(row, jj * j + l)] = cov.c1[(i, kk)];
                }
            }
        }
    }
    g
}

pub fn q_assemble(cov: &LagCovariance, w: &WBlocks) -> Result<QOperator> {
    let g1 = g1_matrix(cov);
    let g2 = g2_matrix(cov);
    let dim = g1.rows();
    let w33 = w.get(3, 3);
    if w33.rows() != dim || w33.cols() != dim {
        return Err(Error::Dimension(format!(
            "W33 is {}x{} but the covariance has d² = {dim}",
            w33.rows(),
            w33.cols()
        )));
    }
    let components = vec![
        compose(&g1, w.get(1, 1), &g1)?,
        compose(&g2, w.get(2, 1), &g1)?,
        w.get(3, 1).matmul_transposed(&g1)?.scale(-1.0),
        compose(&g1, w.get(1, 2), &g2)?,
        compose(&g2, w.get(2, 2), &g2)?,
        w.get(3, 2).matmul_transposed(&g2)?.scale(-1.0),
        g1.matmul(w.get(1, 3))?.scale(-1.0),
        g2.matmul(w.get(2, 3))?.scale(-1.0),
        w33.clone(),
    ];
    let mut sum = Matrix::zeros(dim, dim);
    for c in &components {
        sum.add_scaled_in_place(1.0, c)?;
    }
    Ok(QOperator {
        q: sum.symmetrized()?,
        components,
    })
}
