//! The end-to-end separability test.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    bartlett_bandwidth, derivative_tensors, lag_covariance, long_run_cov, q_assemble, w_blocks,
    LagCovariance, QOperator,
};
use crate::linalg::sym_eigenvalues;
use crate::panel::{FunctionalPanel, GridQuadrature};
use crate::pvalue::{weighted_chisq_pvalue, PValueMethod, DEFAULT_MC_DRAWS};
use crate::reduction::{
    build_scores, combined_cpv, panel_pca_with, temporal_fpca_with, temporal_scores, ComponentRule,
    PanelBasis, ScorePanel,
};

pub const SCHEMA: &str = "sepstat/1";

/// Combined CPV below which a warning is attached to the diagnostics.
pub const CPV_WARNING: f64 = 0.85;

/// Relative size of a negative eigenvalue of `Q̂` that triggers a warning.
const NEGATIVE_EIGEN_WARNING: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelReduction {
    /// Keep all `S` coordinates (`K = S`).
    #[default]
    Passthrough,
    Reduce(ComponentRule),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub h: usize,
    pub temporal: ComponentRule,
    pub panel: PanelReduction,
    /// Bartlett bandwidth; `None` uses [`bartlett_bandwidth`].
    pub bandwidth: Option<usize>,
    pub method: PValueMethod,
    pub mc_draws: usize,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            h: 0,
            temporal: ComponentRule::default(),
            panel: PanelReduction::default(),
            bandwidth: None,
            method: PValueMethod::default(),
            mc_draws: DEFAULT_MC_DRAWS,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub schema: String,
    pub statistic: f64,
    pub eigenvalues: Vec<f64>,
    pub p_value: f64,
    pub effect_size: f64,
    pub h: usize,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub cpv: f64,
    pub n_used: usize,
    pub method: PValueMethod,
    pub mc_draws: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub bandwidth: usize,
    pub cpv_time: f64,
    pub cpv_panel: f64,
    pub passthrough: bool,
    pub temporal_eigenvalues: Vec<f64>,
    pub panel_eigenvalues: Vec<f64>,
    pub trace: f64,
    pub norm_c: f64,
    pub norm_c1: f64,
    pub norm_c2: f64,
    pub norm_gamma: f64,
    /// Frobenius norms of `Q̂_1 … Q̂_9`.
    pub q_component_norms: Vec<f64>,
    /// Smallest eigenvalue of `Q̂` before clamping.
    pub min_raw_eigenvalue: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome {
    pub result: TestResult,
    pub diagnostics: Diagnostics,
}

/// `T̂_F = N ‖Ĉ₁ ⊗̃ Ĉ₂ − Ĉ‖²_F`.
pub fn statistic(cov: &LagCovariance, n: usize) -> f64 {
    n as f64 * cov.residual_norm_sq()
}

fn null_spectrum(q: &QOperator) -> Result<(Vec<f64>, f64)> {
    if !q.q.is_finite() {
        return Err(Error::NonFinite("Q operator"));
    }
    let mut raw = sym_eigenvalues(&q.q)?;
    raw.sort_by(|a, b| b.total_cmp(a));
    let min = raw.last().copied().unwrap_or(0.0);
    let clamped = raw.into_iter().map(|v| v.max(0.0)).collect();
    Ok((clamped, min))
}

/// Eigenvalues of `Q̂`, negatives clamped to zero, non-increasing.
pub fn null_eigenvalues(q: &QOperator) -> Result<Vec<f64>> {
    null_spectrum(q).map(|(e, _)| e)
}

/// Steps after the dimension reduction: covariance, `Γ̂`, `Q̂`, statistic and
/// p-value, all computed from the score matrices.
pub fn test_scores(z: &ScorePanel, config: &TestConfig) -> Result<(TestResult, Diagnostics)> {
    let n = z.n();
    let cov = lag_covariance(z, config.h)?;
    let q = config.bandwidth.unwrap_or_else(|| bartlett_bandwidth(n));
    let gamma = long_run_cov(z, &cov, q)?;
    let derivs = derivative_tensors(&cov)?;
    let w = w_blocks(&derivs, &gamma)?;
    let q_op = q_assemble(&cov, &w)?;
    let (eigenvalues, min_raw) = null_spectrum(&q_op)?;

    let t = statistic(&cov, n);
    let p_value = weighted_chisq_pvalue(t, &eigenvalues, config.method, config.mc_draws, config.seed)?;

    let mut warnings = Vec::new();
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    if min_raw < -NEGATIVE_EIGEN_WARNING * top {
        warnings.push(format!(
            "Q has eigenvalue {min_raw:.3e} below -1e-6 of the largest ({top:.3e}); \
             the long-run covariance may be ill-conditioned for N={n} and KJ={}",
            z.k() * z.j()
        ));
    }

    let result = TestResult {
        schema: SCHEMA.into(),
        statistic: t,
        eigenvalues,
        p_value,
        effect_size: t / n as f64,
        h: config.h,
        j: z.j(),
        k: z.k(),
        cpv: 1.0,
        n_used: n,
        method: config.method,
        mc_draws: config.mc_draws,
        seed: config.seed,
    };
    let diagnostics = Diagnostics {
        bandwidth: q,
        trace: cov.trace,
        norm_c: cov.c.frobenius_norm(),
        norm_c1: cov.c1.frobenius_norm(),
        norm_c2: cov.c2.frobenius_norm(),
        norm_gamma: gamma.gamma.frobenius_norm(),
        q_component_norms: q_op.components.iter().map(|m| m.frobenius_norm()).collect(),
        min_raw_eigenvalue: min_raw,
        warnings,
        ..Diagnostics::default()
    };
    Ok((result, diagnostics))
}

/// Center the panel, reduce it to score matrices and run the test.
pub fn run_test(p: &FunctionalPanel, config: &TestConfig) -> Result<TestOutcome> {
    if config.mc_draws == 0 && config.method == PValueMethod::MonteCarlo {
        return Err(Error::Config("Monte Carlo needs at least one draw".into()));
    }
    if config.h + 2 > p.n() {
        return Err(Error::InsufficientLag { h: config.h, n: p.n() });
    }
    let centered = p.center();
    let time = temporal_fpca_with(&centered, &GridQuadrature::uniform(p.t()), config.temporal)?;
    let xi = temporal_scores(&centered, &time)?;
    let panel = match config.panel {
        PanelReduction::Passthrough => PanelBasis::passthrough(p.s()),
        PanelReduction::Reduce(rule) => panel_pca_with(&xi, &time.eigenvalues, rule)?,
    };
    let z = build_scores(&xi, &panel)?;
    let (mut result, mut diagnostics) = test_scores(&z, config)?;

    let cpv = combined_cpv(&time, &panel);
    result.cpv = cpv;
    diagnostics.cpv_time = time.cpv_time;
    diagnostics.cpv_panel = panel.cpv_panel;
    diagnostics.passthrough = panel.passthrough;
    diagnostics.temporal_eigenvalues = time.eigenvalues.clone();
    diagnostics.panel_eigenvalues = panel.eigenvalues.clone();
    if cpv < CPV_WARNING {
        diagnostics.warnings.insert(
            0,
            format!("combined CPV {cpv:.3} is below {CPV_WARNING}; consider more components"),
        );
    }
    Ok(TestOutcome { result, diagnostics })
}
