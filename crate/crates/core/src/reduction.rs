//! Dimension reduction: pooled temporal FPCA, variance-adjusted panel PCA,
//! and the resulting `K × J` score matrices `Z_n`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::matrix::Matrix;
use crate::panel::{FunctionalPanel, GridQuadrature};

/// Default cumulative-proportion-of-variance target.
pub const DEFAULT_CPV: f64 = 0.85;
/// Default cap on `J` and `K`; `Q̂` costs `(KJ)⁴` memory.
pub const DEFAULT_MAX_COMPONENTS: usize = 6;

/// How many principal components to keep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentRule {
    /// Smallest count reaching `target` explained variance, capped at `max`.
    Cpv { target: f64, max: usize },
    Fixed(usize),
}

impl Default for ComponentRule {
    fn default() -> Self {
        ComponentRule::Cpv {
            target: DEFAULT_CPV,
            max: DEFAULT_MAX_COMPONENTS,
        }
    }
}

impl ComponentRule {
    fn validate(&self) -> Result<()> {
        match *self {
            ComponentRule::Cpv { target, max } => {
                if !(target > 0.0 && target <= 1.0) {
                    return Err(Error::Config(format!("cpv target {target} must lie in (0, 1]")));
                }
                if max == 0 {
                    return Err(Error::Config("component cap must be at least 1".into()));
                }
            }
            ComponentRule::Fixed(0) => {
                return Err(Error::Config("fixed component count must be at least 1".into()))
            }
            ComponentRule::Fixed(_) => {}
        }
        Ok(())
    }

    /// Number of components to keep given clamped, non-increasing eigenvalues.
    fn select(&self, eigenvalues: &[f64]) -> Result<usize> {
        self.validate()?;
        let available = eigenvalues.len();
        match *self {
            ComponentRule::Fixed(count) => {
                if count > available {
                    return Err(Error::Config(format!(
                        "asked for {count} components but only {available} exist"
                    )));
                }
                Ok(count)
            }
            ComponentRule::Cpv { target, max } => {
                let total: f64 = eigenvalues.iter().sum();
                let cap = max.min(available);
                let mut cum = 0.0;
                for (i, &lam) in eigenvalues.iter().take(cap).enumerate() {
                    cum += lam;
                    if cum / total >= target - 1e-12 {
                        return Ok(i + 1);
                    }
                }
                Ok(cap)
            }
        }
    }
}

fn cpv_of(eigenvalues: &[f64], kept: usize) -> f64 {
    let total: f64 = eigenvalues.iter().sum();
    let cum: f64 = eigenvalues[..kept].iter().sum();
    (cum / total).clamp(0.0, 1.0)
}

/// Temporal eigenfunctions of the pooled covariance `ĉ₂(t, t')`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalBasis {
    /// `J` functions on the grid, unit norm under the quadrature.
    pub functions: Vec<Vec<f64>>,
    /// Retained eigenvalues `λ_1 ≥ … ≥ λ_J`.
    pub eigenvalues: Vec<f64>,
    /// Every (clamped) eigenvalue of the pooled operator; the CPV denominator.
    pub spectrum: Vec<f64>,
    pub cpv_time: f64,
    pub quadrature: GridQuadrature,
}

impl TemporalBasis {
    pub fn j(&self) -> usize {
        self.functions.len()
    }
}

/// Pooled temporal FPCA with uniform quadrature, `J` chosen by CPV.
pub fn temporal_fpca(p: &FunctionalPanel, target_cpv: f64, j_max: usize) -> Result<TemporalBasis> {
    temporal_fpca_with(
        p,
        &GridQuadrature::uniform(p.t()),
        ComponentRule::Cpv {
            target: target_cpv,
            max: j_max,
        },
    )
}

/// Eigenpairs of `ĉ₂(t,t') = (1/NS) Σ_n Σ_s X_ns(t) X_ns(t')` as an integral
/// operator under `quad`. The panel is expected to be centered.
pub fn temporal_fpca_with(
    p: &FunctionalPanel,
    quad: &GridQuadrature,
    rule: ComponentRule,
) -> Result<TemporalBasis> {
    let t = p.t();
    if quad.len() != t {
        return Err(Error::Dimension(format!(
            "{} quadrature weights for a grid of {t} points",
            quad.len()
        )));
    }
    if quad.weights().iter().any(|&w| w <= 0.0) {
        return Err(Error::Config("FPCA needs strictly positive quadrature weights".into()));
    }
    let root_w: Vec<f64> = quad.weights().iter().map(|&w| libm::sqrt(w)).collect();

    // W^½ ĉ₂ W^½ is symmetric and shares the operator's eigenvalues.
    let mut pooled = Matrix::zeros(t, t);
    let mut y = vec![0.0; t];
    for n in 0..p.n() {
        for s in 0..p.s() {
            for ((yi, &x), &rw) in y.iter_mut().zip(p.curve(n, s)).zip(&root_w) {
                *yi = x * rw;
            }
            for a in 0..t {
                let ya = y[a];
                if ya == 0.0 {
                    continue;
                }
                for b in a..t {
                    pooled[(a, b)] += ya * y[b];
                }
            }
        }
    }
    let scale = 1.0 / (p.n() * p.s()) as f64;
    for a in 0..t {
        for b in a..t {
            let v = pooled[(a, b)] * scale;
            pooled[(a, b)] = v;
            pooled[(b, a)] = v;
        }
    }

    let eig = sym_eigen(&pooled)?;
    let spectrum: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = spectrum.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData(
            "pooled temporal covariance is zero; every curve is identically zero".into(),
        ));
    }
    let j = rule.select(&spectrum)?;
    let functions = (0..j)
        .map(|r| {
            eig.eigenvector(r)
                .iter()
                .zip(&root_w)
                .map(|(e, rw)| e / rw)
                .collect()
        })
        .collect();
    Ok(TemporalBasis {
        functions,
        eigenvalues: spectrum[..j].to_vec(),
        cpv_time: cpv_of(&spectrum, j),
        spectrum,
        quadrature: quad.clone(),
    })
}

/// `ξ_{nsj} = ⟨X_ns, v̂_j⟩`, stored `(n, s, j)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalScores {
    n: usize,
    s: usize,
    j: usize,
    data: Vec<f64>,
}

impl TemporalScores {
    pub fn new(n: usize, s: usize, j: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * s * j {
            return Err(Error::Dimension(format!(
                "scores of shape ({n},{s},{j}) need {} values, got {}",
                n * s * j,
                data.len()
            )));
        }
        Ok(Self { n, s, j, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n, self.s, self.j)
    }

    #[inline]
    pub fn get(&self, n: usize, s: usize, j: usize) -> f64 {
        self.data[(n * self.s + s) * self.j + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

pub fn temporal_scores(p: &FunctionalPanel, basis: &TemporalBasis) -> Result<TemporalScores> {
    if basis.quadrature.len() != p.t() {
        return Err(Error::Dimension(format!(
            "basis grid has {} points, panel has {}",
            basis.quadrature.len(),
            p.t()
        )));
    }
    let j = basis.j();
    let mut data = Vec::with_capacity(p.n() * p.s() * j);
    for n in 0..p.n() {
        for s in 0..p.s() {
            let curve = p.curve(n, s);
            data.extend(basis.functions.iter().map(|v| basis.quadrature.inner(curve, v)));
        }
    }
    TemporalScores::new(p.n(), p.s(), j, data)
}

/// Panel principal components `û_1, …, û_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelBasis {
    /// `K` unit vectors of length `S`.
    pub vectors: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub spectrum: Vec<f64>,
    pub cpv_panel: f64,
    /// The identity basis used when panel reduction is skipped (`K = S`).
    pub passthrough: bool,
}

impl PanelBasis {
    /// Standard basis of `R^S`; scores are then the temporal scores
    /// themselves and the panel CPV is 1.
    pub fn passthrough(s: usize) -> Self {
        PanelBasis {
            vectors: (0..s)
                .map(|k| (0..s).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
                .collect(),
            eigenvalues: Vec::new(),
            spectrum: Vec::new(),
            cpv_panel: 1.0,
            passthrough: true,
        }
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }
}

pub fn panel_pca(
    xi: &TemporalScores,
    lambdas: &[f64],
    target_cpv: f64,
    k_max: usize,
) -> Result<PanelBasis> {
    panel_pca_with(
        xi,
        lambdas,
        ComponentRule::Cpv {
            target: target_cpv,
            max: k_max,
        },
    )
}

/// Eigenvectors of `c̃₁(s,s') = (1/NJ) Σ_n Σ_j ξ_{nsj} ξ_{ns'j} / λ_j`.
pub fn panel_pca_with(xi: &TemporalScores, lambdas: &[f64], rule: ComponentRule) -> Result<PanelBasis> {
    let (n, s, j) = xi.shape();
    if lambdas.len() != j {
        return Err(Error::Dimension(format!(
            "{} eigenvalues for {j} temporal components",
            lambdas.len()
        )));
    }
    let floor = 1e-12 * lambdas.first().copied().unwrap_or(0.0).abs();
    for (index, &value) in lambdas.iter().enumerate() {
        if !(value > floor) {
            return Err(Error::IllConditioned {
                index: index + 1,
                value,
                floor,
            });
        }
    }

    let mut c1 = Matrix::zeros(s, s);
    for nn in 0..n {
        for (jj, &lam) in lambdas.iter().enumerate() {
            for a in 0..s {
                let xa = xi.get(nn, a, jj) / lam;
                for b in a..s {
                    c1[(a, b)] += xa * xi.get(nn, b, jj);
                }
            }
        }
    }
    let scale = 1.0 / (n * j) as f64;
    for a in 0..s {
        for b in a..s {
            let v = c1[(a, b)] * scale;
            c1[(a, b)] = v;
            c1[(b, a)] = v;
        }
    }

    let eig = sym_eigen(&c1)?;
    let spectrum: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    if !(spectrum.iter().sum::<f64>() > 0.0) {
        return Err(Error::DegenerateData("panel covariance of the scores is zero".into()));
    }
    let k = rule.select(&spectrum)?;
    Ok(PanelBasis {
        vectors: (0..k).map(|r| eig.eigenvector(r)).collect(),
        eigenvalues: spectrum[..k].to_vec(),
        cpv_panel: cpv_of(&spectrum, k),
        spectrum,
        passthrough: false,
    })
}

/// Observations reduced to `K × J` matrices, stored `(n, k, j)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorePanel {
    n: usize,
    k: usize,
    j: usize,
    data: Vec<f64>,
}

impl ScorePanel {
    pub fn new(n: usize, k: usize, j: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || k == 0 || j == 0 {
            return Err(Error::Dimension(format!("empty score panel ({n},{k},{j})")));
        }
        if data.len() != n * k * j {
            return Err(Error::Dimension(format!(
                "score panel of shape ({n},{k},{j}) needs {} values, got {}",
                n * k * j,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scores"));
        }
        Ok(Self { n, k, j, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn j(&self) -> usize {
        self.j
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize, j: usize) -> f64 {
        self.data[(n * self.k + k) * self.j + j]
    }

    /// `Z_n` as a row-major `K × J` slice.
    pub fn observation(&self, n: usize) -> &[f64] {
        let kj = self.k * self.j;
        &self.data[n * kj..(n + 1) * kj]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
    }
}

/// `Z_n(k, j) = ⟨ξ_{n·j}, û_k⟩`.
pub fn build_scores(xi: &TemporalScores, basis: &PanelBasis) -> Result<ScorePanel> {
    let (n, s, j) = xi.shape();
    if basis.vectors.iter().any(|u| u.len() != s) {
        return Err(Error::Dimension(format!(
            "panel basis vectors must have length S={s}"
        )));
    }
    let k = basis.k();
    let mut data = Vec::with_capacity(n * k * j);
    for nn in 0..n {
        for u in &basis.vectors {
            for jj in 0..j {
                data.push((0..s).map(|ss| u[ss] * xi.get(nn, ss, jj)).sum());
            }
        }
    }
    ScorePanel::new(n, k, j, data)
}

pub fn combined_cpv(t: &TemporalBasis, p: &PanelBasis) -> f64 {
    t.cpv_time * p.cpv_panel
}
