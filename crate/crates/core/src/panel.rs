//! Functional panels `X_ns(t)` on a uniform grid over `[0, 1]`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `N × S × T` curves, stored `n`-major then `s` then `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalPanel {
    n: usize,
    s: usize,
    t: usize,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FunctionalPanel {
    pub fn new(n: usize, s: usize, t: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || s < 1 || t < 2 {
            return Err(Error::InvalidPanel(format!(
                "need N >= 2, S >= 1, T >= 2; got N={n}, S={s}, T={t}"
            )));
        }
        if values.len() != n * s * t {
            return Err(Error::InvalidPanel(format!(
                "N*S*T = {} values expected, got {}",
                n * s * t,
                values.len()
            )));
        }
        if let Some(at) = values.iter().position(|v| !v.is_finite()) {
            let (nn, rest) = (at / (s * t), at % (s * t));
            return Err(Error::InvalidPanel(format!(
                "non-finite value at n={}, s={}, t={}",
                nn + 1,
                rest / t + 1,
                rest % t + 1
            )));
        }
        Ok(Self {
            n,
            s,
            t,
            values,
            labels: None,
        })
    }

    /// Attach one label per observation (for example a month tag).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidPanel(format!(
                "{} labels for {} observations",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn s(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, n: usize, s: usize, t: usize) -> f64 {
        self.values[(n * self.s + s) * self.t + t]
    }

    pub fn curve(&self, n: usize, s: usize) -> &[f64] {
        let start = (n * self.s + s) * self.t;
        &self.values[start..start + self.t]
    }

    /// The `T` grid points `t / (T - 1)`.
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.t - 1) as f64;
        (0..self.t).map(|i| i as f64 / last).collect()
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        Self::new(out.n, out.s, out.t, out.values).map(|p| Self {
            labels: self.labels.clone(),
            ..p
        })
    }

    /// Subtract the sample mean curve `μ̂_s(t) = (1/N) Σ_n X_ns(t)`.
    pub fn center(&self) -> Self {
        let groups = vec![0usize; self.n];
        self.remove_group_means(&groups, 1)
    }

    /// Subtract, within each season, the mean over the observations carrying
    /// that season label. `season_of` is keyed by 0-based observation index.
    pub fn deseasonalize(&self, season_of: &BTreeMap<usize, String>) -> Result<Self> {
        let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
        let mut groups = Vec::with_capacity(self.n);
        for n in 0..self.n {
            let label = season_of.get(&n).ok_or(Error::MissingLabel(n + 1))?;
            let next = ids.len();
            groups.push(*ids.entry(label.as_str()).or_insert(next));
        }
        Ok(self.remove_group_means(&groups, ids.len()))
    }

    fn remove_group_means(&self, groups: &[usize], n_groups: usize) -> Self {
        let st = self.s * self.t;
        let mut sums = vec![0.0; n_groups * st];
        let mut counts = vec![0usize; n_groups];
        for (n, &g) in groups.iter().enumerate() {
            counts[g] += 1;
            let row = &self.values[n * st..(n + 1) * st];
            for (acc, v) in sums[g * st..(g + 1) * st].iter_mut().zip(row) {
                *acc += v;
            }
        }
        for (g, &count) in counts.iter().enumerate() {
            let inv = 1.0 / count.max(1) as f64;
            sums[g * st..(g + 1) * st].iter_mut().for_each(|v| *v *= inv);
        }
        let mut values = self.values.clone();
        for (n, &g) in groups.iter().enumerate() {
            let mean = &sums[g * st..(g + 1) * st];
            for (v, m) in values[n * st..(n + 1) * st].iter_mut().zip(mean) {
                *v -= m;
            }
        }
        Self {
            values,
            ..self.clone()
        }
    }
}

/// Quadrature weights on the grid; `⟨f, g⟩ ≈ Σ_t w_t f(t) g(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridQuadrature {
    weights: Vec<f64>,
}

impl GridQuadrature {
    /// Rectangle rule, `w_t = 1/T`.
    pub fn uniform(t: usize) -> Self {
        Self {
            weights: vec![1.0 / t as f64; t],
        }
    }

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPanel(
                "quadrature weights must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn panel(n: usize, s: usize, t: usize, f: impl Fn(usize, usize, usize) -> f64) -> FunctionalPanel {
        let mut values = Vec::new();
        for a in 0..n {
            for b in 0..s {
                for c in 0..t {
                    values.push(f(a, b, c));
                }
            }
        }
        FunctionalPanel::new(n, s, t, values).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(FunctionalPanel::new(1, 1, 2, vec![0.0; 2]).is_err());
        assert!(FunctionalPanel::new(2, 1, 1, vec![0.0; 2]).is_err());
        assert!(FunctionalPanel::new(2, 1, 2, vec![0.0; 3]).is_err());
        assert!(FunctionalPanel::new(2, 1, 2, vec![0.0, 1.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let p = panel(2, 1, 5, |_, _, _| 0.0);
        assert_eq!(p.grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn center_constant_panel() {
        let p = panel(4, 2, 3, |_, _, _| 7.5).center();
        assert!(p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn center_two_values() {
        let p = FunctionalPanel::new(2, 1, 2, vec![1.0, 0.0, 3.0, 0.0]).unwrap();
        assert_eq!(p.center().values(), &[-1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn center_is_idempotent() {
        let p = panel(5, 2, 4, |a, b, c| ((a * 7 + b * 3 + c) % 5) as f64 * 0.37 - 1.1);
        let once = p.center();
        let twice = once.center();
        for (x, y) in once.values().iter().zip(twice.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        for s in 0..2 {
            for t in 0..4 {
                let mean: f64 = (0..5).map(|n| once.get(n, s, t)).sum::<f64>() / 5.0;
                assert!(mean.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_season_equals_center() {
        let p = panel(6, 2, 3, |a, b, c| (a as f64).sin() + b as f64 * 0.5 - c as f64);
        let map: BTreeMap<usize, String> = (0..6).map(|n| (n, "all".to_string())).collect();
        assert_eq!(p.deseasonalize(&map).unwrap(), p.center());
    }

    #[test]
    fn two_constant_seasons_vanish() {
        let p = panel(6, 1, 3, |a, _, _| if a % 2 == 0 { 3.0 } else { -8.0 });
        let map: BTreeMap<usize, String> =
            (0..6).map(|n| (n, if n % 2 == 0 { "a" } else { "b" }.to_string())).collect();
        assert!(p.deseasonalize(&map).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn seasonal_offsets_removed() {
        // Known per-month offsets on top of a residual that is zero-mean
        // within each month.
        let offsets = [2.0, -1.0, 0.5];
        let residual = |a: usize, c: usize| if (a / 3).is_multiple_of(2) { 0.1 * c as f64 } else { -0.1 * c as f64 };
        let p = panel(12, 1, 4, |a, _, c| offsets[a % 3] + residual(a, c));
        let map: BTreeMap<usize, String> = (0..12).map(|n| (n, format!("m{}", n % 3))).collect();
        let out = p.deseasonalize(&map).unwrap();
        for a in 0..12 {
            for c in 0..4 {
                assert!((out.get(a, 0, c) - residual(a, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn missing_label() {
        let p = panel(3, 1, 2, |_, _, _| 0.0);
        let map: BTreeMap<usize, String> = [(0, "a".to_string()), (2, "a".to_string())].into();
        assert_eq!(p.deseasonalize(&map), Err(Error::MissingLabel(2)));
    }

    #[test]
    fn quadrature_uniform() {
        let q = GridQuadrature::uniform(7);
        let sum: f64 = q.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(GridQuadrature::new(vec![0.5, 0.6]).is_err());
    }
}
