//! Dense multiway arrays with a fixed row-major linearization.
//!
//! Order-4 covariance tensors have shape `(K, J, K, J)`: the first pair of
//! indices belongs to the left factor `Z_n`, the second pair to `Z_{n+h}`.
//! Order-8 tensors (`Γ̂`, `Q̂`) are stored flattened as `(KJ)² × (KJ)²`
//! matrices and reshaped on demand.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Maximum number of elements any single tensor may hold unless a budget is
/// passed explicitly.
pub const DEFAULT_ELEMENT_BUDGET: usize = 1 << 28;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn element_count(shape: &[usize], budget: usize) -> Result<usize> {
    let mut total: usize = 1;
    for &extent in shape {
        if extent == 0 {
            return Err(Error::Dimension(format!("zero extent in shape {shape:?}")));
        }
        total = total.checked_mul(extent).ok_or(Error::Capacity {
            requested: usize::MAX,
            budget,
        })?;
    }
    if total > budget {
        return Err(Error::Capacity {
            requested: total,
            budget,
        });
    }
    Ok(total)
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let total = element_count(&shape, DEFAULT_ELEMENT_BUDGET)?;
        if total != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {total} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor data"));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let total = element_count(shape, DEFAULT_ELEMENT_BUDGET)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; total],
        })
    }

    /// Build a tensor by evaluating `f` at every multi-index, in row-major
    /// order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let total = element_count(shape, DEFAULT_ELEMENT_BUDGET)?;
        let mut data = Vec::with_capacity(total);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..total {
            data.push(f(&idx));
            for axis in (0..shape.len()).rev() {
                idx[axis] += 1;
                if idx[axis] < shape[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        Self::new(shape.to_vec(), data)
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &extent)| acc * extent + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let at = self.offset(idx);
        self.data[at] = value;
    }

    pub fn scale(&self, alpha: f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn sub(&self, rhs: &Tensor) -> Result<Tensor> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn add(&self, rhs: &Tensor) -> Result<Tensor> {
        self.zip_with(rhs, |a, b| a + b)
    }

    fn zip_with(&self, rhs: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != rhs.shape {
            return Err(Error::Dimension(format!(
                "shapes {:?} and {:?} differ",
                self.shape, rhs.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frobenius_norm_sq())
    }
}

/// Outer product: shape is the concatenation of the operand shapes.
pub fn outer(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    outer_with_budget(a, b, DEFAULT_ELEMENT_BUDGET)
}

pub fn outer_with_budget(a: &Tensor, b: &Tensor, budget: usize) -> Result<Tensor> {
    let mut shape = a.shape.clone();
    shape.extend_from_slice(&b.shape);
    let total = element_count(&shape, budget)?;
    let mut data = Vec::with_capacity(total);
    for &x in &a.data {
        data.extend(b.data.iter().map(|&y| x * y));
    }
    Ok(Tensor { shape, data })
}

fn check_paired(c: &Tensor, what: &str) -> Result<(usize, usize)> {
    match *c.shape() {
        [k, j, k2, j2] if k == k2 && j == j2 => Ok((k, j)),
        _ => Err(Error::Dimension(format!(
            "{what} expects shape (K, J, K, J), got {:?}",
            c.shape()
        ))),
    }
}

/// `Tr₁`: contract the paired panel indices, `out(j, l) = Σ_i c(i, j, i, l)`.
pub fn partial_trace_over_first(c: &Tensor) -> Result<Matrix> {
    let (k, j) = check_paired(c, "partial_trace_over_first")?;
    let mut out = Matrix::zeros(j, j);
    for i in 0..k {
        for a in 0..j {
            for b in 0..j {
                out[(a, b)] += c.get(&[i, a, i, b]);
            }
        }
    }
    Ok(out)
}

/// `Tr₂`: contract the paired temporal indices, `out(i, k) = Σ_j c(i, j, k, j)`.
pub fn partial_trace_over_second(c: &Tensor) -> Result<Matrix> {
    let (k, j) = check_paired(c, "partial_trace_over_second")?;
    let mut out = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            out[(a, b)] = (0..j).map(|l| c.get(&[a, l, b, l])).sum();
        }
    }
    Ok(out)
}

/// `Σ_{ij} c(i, j, i, j)`.
pub fn full_trace(c: &Tensor) -> Result<f64> {
    let (k, j) = check_paired(c, "full_trace")?;
    let mut acc = 0.0;
    for a in 0..k {
        for b in 0..j {
            acc += c.get(&[a, b, a, b]);
        }
    }
    Ok(acc)
}

/// Rows index the first `split` indices, columns the remaining ones.
pub fn flatten(c: &Tensor, split: usize) -> Result<Matrix> {
    if split == 0 || split >= c.order() {
        return Err(Error::Dimension(format!(
            "split {split} must lie strictly between 0 and the order {}",
            c.order()
        )));
    }
    let rows: usize = c.shape[..split].iter().product();
    let cols: usize = c.shape[split..].iter().product();
    Matrix::new(rows, cols, c.data.clone())
}

/// `(A ⊗̃ B)(i, j, k, l) = A(i, k) · B(j, l)` for square `A` (K×K) and `B`
/// (J×J), giving a `(K, J, K, J)` tensor.
pub fn separable_product(a: &Matrix, b: &Matrix) -> Result<Tensor> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension(format!(
            "separable product needs square factors, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (k, j) = (a.rows(), b.rows());
    Tensor::from_fn(&[k, j, k, j], |idx| a[(idx[0], idx[2])] * b[(idx[1], idx[3])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    fn random(shape: &[usize], seed: &mut u64) -> Tensor {
        Tensor::from_fn(shape, |_| lcg(seed)).unwrap()
    }

    #[test]
    fn outer_of_vectors() {
        let a = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::new(vec![2], vec![3.0, 4.0]).unwrap();
        let c = outer(&a, &b).unwrap();
        assert_eq!(c.shape(), &[2, 2]);
        assert_eq!(c.data(), &[3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn outer_with_zero_vector_is_zero() {
        let a = Tensor::zeros(&[2]).unwrap();
        let mut s = 9;
        let b = random(&[3, 2], &mut s);
        assert!(outer(&a, &b).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn outer_matches_triple_loop() {
        let mut s = 1;
        let a = random(&[2, 3], &mut s);
        let b = random(&[4], &mut s);
        let c = outer(&a, &b).unwrap();
        assert_eq!(c.shape(), &[2, 3, 4]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(c.get(&[i, j, k]), a.get(&[i, j]) * b.get(&[k]));
                }
            }
        }
    }

    #[test]
    fn outer_respects_budget() {
        let a = Tensor::zeros(&[100]).unwrap();
        let err = outer_with_budget(&a, &a, 1000).unwrap_err();
        assert_eq!(
            err,
            Error::Capacity {
                requested: 10_000,
                budget: 1000
            }
        );
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Tensor::new(vec![2], vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn partial_trace_first_small() {
        // shape (2,1,2,1), 1-based c(1,1,1,1)=2, c(2,1,2,1)=3
        let mut c = Tensor::zeros(&[2, 1, 2, 1]).unwrap();
        c.set(&[0, 0, 0, 0], 2.0);
        c.set(&[1, 0, 1, 0], 3.0);
        let out = partial_trace_over_first(&c).unwrap();
        assert_eq!(out.data(), &[5.0]);
    }

    #[test]
    fn partial_trace_second_small() {
        let mut c = Tensor::zeros(&[2, 1, 2, 1]).unwrap();
        c.set(&[0, 0, 0, 0], 2.0);
        c.set(&[0, 0, 1, 0], 1.0);
        c.set(&[1, 0, 0, 0], 1.0);
        c.set(&[1, 0, 1, 0], 3.0);
        let out = partial_trace_over_second(&c).unwrap();
        assert_eq!(out.data(), &[2.0, 1.0, 1.0, 3.0]);
    }

    #[test]
    fn partial_traces_of_separable_product() {
        let a = Matrix::identity(2);
        let mut s = 4;
        let b = Matrix::from_fn(3, 3, |_, _| lcg(&mut s));
        let c = separable_product(&a, &b).unwrap();
        assert_eq!(partial_trace_over_first(&c).unwrap(), b.scale(2.0));

        let b1 = Matrix::from_diagonal(&[0.25, 0.75]);
        let a1 = Matrix::from_fn(3, 3, |_, _| lcg(&mut s));
        let c = separable_product(&a1, &b1).unwrap();
        let tr2 = partial_trace_over_second(&c).unwrap();
        for (x, y) in tr2.data().iter().zip(a1.data()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn partial_trace_second_of_diagonal_is_diagonal() {
        let c = Tensor::from_fn(&[3, 2, 3, 2], |i| {
            if i[0] == i[2] && i[1] == i[3] {
                (i[0] + 1) as f64
            } else {
                0.0
            }
        })
        .unwrap();
        let out = partial_trace_over_second(&c).unwrap();
        assert_eq!(out, Matrix::from_diagonal(&[2.0, 4.0, 6.0]));
    }

    #[test]
    fn zero_tensor_traces() {
        let c = Tensor::zeros(&[2, 3, 2, 3]).unwrap();
        assert!(partial_trace_over_first(&c).unwrap().data().iter().all(|&v| v == 0.0));
        assert_eq!(full_trace(&c).unwrap(), 0.0);
    }

    #[test]
    fn full_trace_counts_diagonal() {
        let c = Tensor::from_fn(&[2, 3, 2, 3], |i| {
            if i[0] == i[2] && i[1] == i[3] {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert_eq!(full_trace(&c).unwrap(), 6.0);
    }

    #[test]
    fn full_trace_of_separable_is_product_of_traces() {
        let mut s = 21;
        let a = Matrix::from_fn(2, 2, |_, _| lcg(&mut s));
        let b = Matrix::from_fn(3, 3, |_, _| lcg(&mut s));
        let c = separable_product(&a, &b).unwrap();
        assert!((full_trace(&c).unwrap() - a.trace() * b.trace()).abs() < 1e-14);
    }

    #[test]
    fn full_trace_four_term_loop() {
        let mut s = 33;
        let c = random(&[2, 2, 2, 2], &mut s);
        let expected = c.get(&[0, 0, 0, 0])
            + c.get(&[0, 1, 0, 1])
            + c.get(&[1, 0, 1, 0])
            + c.get(&[1, 1, 1, 1]);
        assert_eq!(full_trace(&c).unwrap(), expected);
    }

    #[test]
    fn trace_shape_errors() {
        let c = Tensor::zeros(&[2, 3, 3, 3]).unwrap();
        assert!(matches!(partial_trace_over_first(&c), Err(Error::Dimension(_))));
        assert!(matches!(partial_trace_over_second(&c), Err(Error::Dimension(_))));
        assert!(matches!(full_trace(&c), Err(Error::Dimension(_))));
    }

    #[test]
    fn flatten_layout_and_errors() {
        let mut s = 8;
        let c = random(&[2, 3, 4], &mut s);
        let m = flatten(&c, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 12));
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(m[(i, j * 4 + k)], c.get(&[i, j, k]));
                }
            }
        }
        assert_eq!(m.reshape(&[2, 3, 4]).unwrap(), c);
        assert!(flatten(&c, 0).is_err());
        assert!(flatten(&c, 3).is_err());

        let q = Tensor::zeros(&[2, 3, 2, 3, 2, 3, 2, 3]).unwrap();
        let qm = flatten(&q, 4).unwrap();
        assert_eq!((qm.rows(), qm.cols()), (36, 36));
    }
}
