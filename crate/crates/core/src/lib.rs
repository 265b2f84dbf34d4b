//! Separability test for the lag-`h` covariance operator of a panel of
//! functional time series.
//!
//! A panel observation `X_n` is an `S`-vector of curves sampled on a uniform
//! grid over `[0, 1]`. The lag-`h` covariance `C = E[X_n ⊗ X_{n+h}]` is
//! *separable* when it factors as `C1 ⊗̃ C2`, with `C1` acting on panel
//! coordinates and `C2` on time. This crate implements the full pipeline:
//!
//! 1. pooled temporal FPCA and (optionally) a variance-adjusted panel PCA,
//!    reducing each observation to a `K × J` score matrix ([`reduction`]);
//! 2. the truncated lag-`h` covariance tensor, its partial-trace factors,
//!    the Bartlett long-run covariance of the product process and the
//!    delta-method covariance `Q` of the separability residual
//!    ([`estimators`]);
//! 3. the statistic `N‖Ĉ₁ ⊗̃ Ĉ₂ − Ĉ‖²_F` and its weighted chi-square null
//!    law ([`engine`], [`pvalue`]);
//! 4. the Gaussian space-time simulation designs and a size/power harness
//!    ([`sim`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the parallel study runner live in the companion `sepstat` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod engine;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod matrix;
pub mod panel;
pub mod pvalue;
pub mod reduction;
pub mod sim;
pub mod tensor;

mod special;

pub use crate::engine::{
    null_eigenvalues, run_test, statistic, test_scores, Diagnostics, PanelReduction, TestConfig,
    TestOutcome, TestResult, SCHEMA,
};
pub use crate::error::{Error, Result};
pub use crate::estimators::{
    bartlett_bandwidth, bartlett_weights, derivative_tensors, lag_covariance, long_run_cov,
    q_assemble, w_blocks, DerivativeTensors, LagCovariance, LongRunCov, QOperator, WBlocks,
};
pub use crate::linalg::{cholesky, sym_eigen, sym_eigenvalues, SymEigen};
pub use crate::matrix::Matrix;
pub use crate::panel::{FunctionalPanel, GridQuadrature};
pub use crate::pvalue::{weighted_chisq_pvalue, MixtureSample, PValueMethod};
pub use crate::reduction::{
    build_scores, combined_cpv, panel_pca, temporal_fpca, temporal_scores, ComponentRule,
    PanelBasis, ScorePanel, TemporalBasis, TemporalScores,
};
pub use crate::sim::{
    kernel_matrix, ma1_panel, sample_innovations, size_power_study, InnovationSampler,
    KernelFamily, KernelSpec, ReplicateOutcome, StudyConfig, StudySummary,
};
pub use crate::tensor::Tensor;
