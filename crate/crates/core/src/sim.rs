//! Gaussian space-time innovations, the MA(1) panel designs and a size/power
//! harness.
//!
//! Kernel matrices and innovation fields are flattened `s`-major: entry
//! `s·T + t` holds coordinate `s` at grid point `t / (T − 1)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{run_test, TestConfig};
use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::matrix::Matrix;
use crate::panel::FunctionalPanel;

/// Diagonal jitter tried in turn, relative to each diagonal entry.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `σ²/(a|Δt|+1)^{1/2} · exp(−b²(|Δs|/(S−1))² / (a|Δt|+1)^c)`.
    Cov1,
    /// As `Cov1` with `(Δt)²` in place of `|Δt|`.
    Cov2,
    /// `σ² exp(−a[(Δt)² + 2βΔtΔs + (Δs)²])`, with `Δs` rescaled by `S−1`
    /// as for the other families (raw when `S = 1`).
    Covh1,
}

impl KernelFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelFamily::Cov1 => "cov1",
            KernelFamily::Cov2 => "cov2",
            KernelFamily::Covh1 => "covh1",
        }
    }
}

impl core::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cov1" => Ok(KernelFamily::Cov1),
            "cov2" => Ok(KernelFamily::Cov2),
            "covh1" => Ok(KernelFamily::Covh1),
            other => Err(Error::Kernel(format!("unknown kernel family {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub a: f64,
    pub b: f64,
    pub sigma2: f64,
    /// Separability parameter of `cov1`/`cov2`; `c = 0` is separable.
    pub c: f64,
    /// Separability parameter of `covh1`; `β = 0` is separable.
    pub beta: f64,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "T")]
    pub t: usize,
}

impl KernelSpec {
    /// `a = 3, b = 2, σ² = 1, T = 50`.
    pub fn new(family: KernelFamily, s: usize) -> Self {
        Self {
            family,
            a: 3.0,
            b: 2.0,
            sigma2: 1.0,
            c: 0.0,
            beta: 0.0,
            s,
            t: 50,
        }
    }

    pub fn with_c(self, c: f64) -> Self {
        Self { c, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Kernel(msg.into()));
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return bad("sigma2 must be positive");
        }
        if !(self.a >= 0.0 && self.b >= 0.0) || !self.a.is_finite() || !self.b.is_finite() {
            return bad("a and b must be finite and nonnegative");
        }
        if !(0.0..=1.0).contains(&self.c) {
            return bad("c must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1)");
        }
        if self.t < 2 {
            return bad("T must be at least 2");
        }
        match self.family {
            KernelFamily::Cov1 | KernelFamily::Cov2 if self.s < 2 => Err(Error::Kernel(format!(
                "{} rescales |s-s'| by S-1 and needs S >= 2",
                self.family.as_str()
            ))),
            _ if self.s < 1 => bad("S must be at least 1"),
            _ => Ok(()),
        }
    }

    /// Kernel value between `(s, t)` and `(s', t')`, grid indices.
    pub fn eval(&self, s: usize, t: usize, s2: usize, t2: usize) -> f64 {
        let step = 1.0 / (self.t - 1) as f64;
        let dt = (t as f64 - t2 as f64) * step;
        let ds = s as f64 - s2 as f64;
        match self.family {
            KernelFamily::Cov1 | KernelFamily::Cov2 => {
                let lag = if self.family == KernelFamily::Cov1 {
                    dt.abs()
                } else {
                    dt * dt
                };
                let base = self.a * lag + 1.0;
                let rs = ds / (self.s - 1) as f64;
                self.sigma2 / libm::sqrt(base)
                    * libm::exp(-self.b * self.b * rs * rs / libm::pow(base, self.c))
            }
            KernelFamily::Covh1 => {
                let rs = if self.s > 1 { ds / (self.s - 1) as f64 } else { ds };
                self.sigma2 * libm::exp(-self.a * (dt * dt + 2.0 * self.beta * dt * rs + rs * rs))
            }
        }
    }
}

/// The `(S·T) × (S·T)` kernel matrix, built on the upper triangle and
/// mirrored so it is exactly symmetric.
pub fn kernel_matrix(spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    let (s, t) = (spec.s, spec.t);
    let dim = s * t;
    let mut m = Matrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = spec.eval(a / t, a % t, b / t, b % t);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

/// Lower Cholesky factor of `m`, adding diagonal jitter when needed.
pub fn jittered_cholesky(m: &Matrix) -> Result<Matrix> {
    let mut last = None;
    for &rel in &JITTER_LADDER {
        let mut k = m.clone();
        if rel > 0.0 {
            for i in 0..k.rows() {
                k[(i, i)] *= 1.0 + rel;
            }
        }
        match cholesky(&k) {
            Ok(l) => return Ok(l),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::Kernel(format!(
        "kernel matrix is not positive definite even with 1e-8 jitter ({})",
        last.map(|e| format!("{e}")).unwrap_or_default()
    )))
}

/// Draws zero-mean Gaussian fields with the kernel's covariance.
#[derive(Clone, Debug)]
pub struct InnovationSampler {
    spec: KernelSpec,
    factor: Matrix,
}

impl InnovationSampler {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        let factor = jittered_cholesky(&kernel_matrix(spec)?)?;
        Ok(Self { spec: *spec, factor })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// One field of length `S·T`, `s`-major.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let dim = self.factor.rows();
        let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        (0..dim)
            .map(|i| {
                let row = &self.factor.row(i)[..=i];
                row.iter().zip(&z).map(|(l, x)| l * x).sum()
            })
            .collect()
    }

    /// MA(1) panel `X_n = Ψ(e_n + e_{n−1})` for `n = 1..N`, from `N + 1`
    /// innovation fields `e_0 … e_N`.
    pub fn ma1_panel(&self, n: usize, seed: u64) -> Result<FunctionalPanel> {
        if n < 2 {
            return Err(Error::InvalidPanel(format!("need N >= 2, got {n}")));
        }
        let (s, t) = (self.spec.s, self.spec.t);
        let psi = mixing_matrix(&self.spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut prev = self.draw(&mut rng);
        let mut values = Vec::with_capacity(n * s * t);
        let mut sum = vec![0.0; s * t];
        for _ in 0..n {
            let next = self.draw(&mut rng);
            for ((o, a), b) in sum.iter_mut().zip(&next).zip(&prev) {
                *o = a + b;
            }
            match &psi {
                None => values.extend_from_slice(&sum),
                Some(psi) => {
                    for si in 0..s {
                        for ti in 0..t {
                            values.push((0..s).map(|sj| psi[(si, sj)] * sum[sj * t + ti]).sum());
                        }
                    }
                }
            }
            prev = next;
        }
        FunctionalPanel::new(n, s, t, values)
    }
}

/// `Ψ_ss' = exp(−25 (s−s')² / (S−1)²)`; `[1]` when `S = 1`.
pub fn psi_matrix(s: usize) -> Matrix {
    if s == 1 {
        return Matrix::identity(1);
    }
    let scale = ((s - 1) * (s - 1)) as f64;
    Matrix::from_fn(s, s, |i, j| {
        let d = i as f64 - j as f64;
        libm::exp(-25.0 * d * d / scale)
    })
}

/// `None` means identity mixing (used by `covh1`).
fn mixing_matrix(spec: &KernelSpec) -> Option<Matrix> {
    match spec.family {
        KernelFamily::Cov1 | KernelFamily::Cov2 => Some(psi_matrix(spec.s)),
        KernelFamily::Covh1 => None,
    }
}

pub fn sample_innovations(spec: &KernelSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = InnovationSampler::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

pub fn ma1_panel(spec: &KernelSpec, n: usize, seed: u64) -> Result<FunctionalPanel> {
    InnovationSampler::new(spec)?.ma1_panel(n, seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(master + splitmix64(index))`. Injective in `index` for a
/// fixed master seed.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(splitmix64(index)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub kernel: KernelSpec,
    #[serde(rename = "N")]
    pub n: usize,
    pub replications: usize,
    pub alpha: f64,
    pub master_seed: u64,
    /// Lag, truncation, bandwidth and p-value settings. Its `seed` is
    /// replaced per replicate.
    pub test: TestConfig,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} must lie in (0, 1)", self.alpha)));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("N must be at least 2, got {}", self.n)));
        }
        Ok(())
    }

    /// Seeds for the panel and for the Monte Carlo p-value of replicate `i`.
    pub fn seeds(&self, index: usize) -> (u64, u64) {
        let i = 2 * index as u64;
        (
            replicate_seed(self.master_seed, i),
            replicate_seed(self.master_seed, i + 1),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub p_value: f64,
    pub statistic: f64,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub cpv: f64,
}

pub fn run_replicate(cfg: &StudyConfig, sampler: &InnovationSampler, index: usize) -> Result<ReplicateOutcome> {
    let (data_seed, mc_seed) = cfg.seeds(index);
    let wrap = |e: Error| Error::Replicate {
        index,
        source: alloc::boxed::Box::new(e),
    };
    let panel = sampler.ma1_panel(cfg.n, data_seed).map_err(wrap)?;
    let test = TestConfig {
        seed: mc_seed,
        ..cfg.test.clone()
    };
    let r = run_test(&panel, &test).map_err(wrap)?.result;
    Ok(ReplicateOutcome {
        replicate: index,
        p_value: r.p_value,
        statistic: r.statistic,
        j: r.j,
        k: r.k,
        cpv: r.cpv,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub rejection_rate: f64,
    pub mean_cpv: f64,
    pub replicates: Vec<ReplicateOutcome>,
}

impl StudySummary {
    /// Aggregate outcomes; they are sorted by replicate index first so the
    /// summary does not depend on execution order.
    pub fn from_outcomes(mut replicates: Vec<ReplicateOutcome>, alpha: f64) -> Self {
        replicates.sort_by_key(|r| r.replicate);
        let m = replicates.len().max(1) as f64;
        let rejected = replicates.iter().filter(|r| r.p_value < alpha).count();
        let mean_cpv = replicates.iter().map(|r| r.cpv).sum::<f64>() / m;
        Self {
            rejection_rate: rejected as f64 / m,
            mean_cpv,
            replicates,
        }
    }
}

/// Sequential study. The `sepstat` crate runs the same replicates on a
/// thread pool.
pub fn size_power_study(cfg: &StudyConfig) -> Result<StudySummary> {
    cfg.validate()?;
    let sampler = InnovationSampler::new(&cfg.kernel)?;
    let outcomes = (0..cfg.replications)
        .map(|i| run_replicate(cfg, &sampler, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(StudySummary::from_outcomes(outcomes, cfg.alpha))
}
