//! Tail probabilities of the weighted chi-square law `Σ_r γ_r Z_r²`.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma_q;

pub const DEFAULT_MC_DRAWS: usize = 100_000;

/// Draws per RNG substream. Chunk `c` uses stream `c` of a ChaCha8 generator
/// keyed by the seed, so chunks can be generated in any order.
const CHUNK: usize = 4096;

/// Statistics at or below this are treated as zero when every weight is zero.
const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    /// `(1 + #{draws ≥ t}) / (1 + draws)`.
    #[default]
    MonteCarlo,
    /// Two-moment `a·χ²_b` approximation.
    Satterthwaite,
}

impl PValueMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PValueMethod::MonteCarlo => "monte-carlo",
            PValueMethod::Satterthwaite => "satterthwaite",
        }
    }
}

impl core::str::FromStr for PValueMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monte-carlo" | "mc" => Ok(PValueMethod::MonteCarlo),
            "satterthwaite" => Ok(PValueMethod::Satterthwaite),
            other => Err(Error::Config(format!("unknown p-value method {other:?}"))),
        }
    }
}

fn positive_weights(gammas: &[f64]) -> Result<Vec<f64>> {
    if gammas.is_empty() {
        return Err(Error::EmptyEigenvalues);
    }
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("null-distribution weights"));
    }
    Ok(gammas.iter().copied().filter(|&g| g > 0.0).collect())
}

/// Sorted draws of `Σ_r γ_r Z_r²`, shared by every statistic evaluated
/// against the same weights and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSample {
    sorted: Vec<f64>,
}

impl MixtureSample {
    pub fn draw(gammas: &[f64], draws: usize, seed: u64) -> Result<Self> {
        if draws == 0 {
            return Err(Error::Config("Monte Carlo needs at least one draw".into()));
        }
        positive_weights(gammas)?;
        // Every weight consumes one normal, so the draws for two weight
        // vectors of equal length share the same Z_r.
        let weights: Vec<f64> = gammas.iter().map(|g| g.max(0.0)).collect();
        let mut sorted = Vec::with_capacity(draws);
        let chunks = draws.div_ceil(CHUNK);
        for chunk in 0..chunks {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(draws - chunk * CHUNK);
            for _ in 0..count {
                let mut acc = 0.0;
                for &g in &weights {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    acc += g * z * z;
                }
                sorted.push(acc);
            }
        }
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Add-one estimate, never exactly zero.
    pub fn p_value(&self, t: f64) -> f64 {
        let below = self.sorted.partition_point(|&x| x < t);
        let at_or_above = self.sorted.len() - below;
        (1 + at_or_above) as f64 / (1 + self.sorted.len()) as f64
    }
}

pub fn satterthwaite_pvalue(t: f64, gammas: &[f64]) -> Result<f64> {
    let weights = positive_weights(gammas)?;
    if weights.is_empty() {
        return Ok(degenerate_pvalue(t));
    }
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|g| g * g).sum();
    let scale = sum_sq / sum;
    let dof = sum * sum / sum_sq;
    Ok(gamma_q(dof / 2.0, t / (2.0 * scale)).clamp(0.0, 1.0))
}

fn degenerate_pvalue(t: f64) -> f64 {
    if t <= DEGENERATE_TOL {
        1.0
    } else {
        0.0
    }
}

/// `P(Σ γ_r Z_r² ≥ t)`. Negative weights are ignored; when no weight is
/// positive the law is a point mass at zero and the p-value is 1 for `t ≈ 0`,
/// else 0.
pub fn weighted_chisq_pvalue(
    t: f64,
    gammas: &[f64],
    method: PValueMethod,
    mc_draws: usize,
    seed: u64,
) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("statistic must be finite and nonnegative, got {t}")));
    }
    let weights = positive_weights(gammas)?;
    if weights.is_empty() {
        return Ok(degenerate_pvalue(t));
    }
    match method {
        PValueMethod::MonteCarlo => Ok(MixtureSample::draw(gammas, mc_draws, seed)?.p_value(t)),
        PValueMethod::Satterthwaite => satterthwaite_pvalue(t, &weights),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_degree_of_freedom() {
        let p = weighted_chisq_pvalue(3.841, &[1.0], PValueMethod::MonteCarlo, 100_000, 1).unwrap();
        assert!((p - 0.05).abs() < 0.005, "{p}");
        let s = weighted_chisq_pvalue(3.841, &[1.0], PValueMethod::Satterthwaite, 0, 0).unwrap();
        assert!((s - 0.05).abs() < 1e-4);
    }

    #[test]
    fn two_degrees_of_freedom() {
        let p = weighted_chisq_pvalue(5.991, &[1.0, 1.0], PValueMethod::MonteCarlo, 100_000, 2).unwrap();
        assert!((p - 0.05).abs() < 0.005, "{p}");
    }

    #[test]
    fn degenerate_weights() {
        assert_eq!(weighted_chisq_pvalue(0.0, &[0.0, 0.0], PValueMethod::MonteCarlo, 10, 0), Ok(1.0));
        assert_eq!(weighted_chisq_pvalue(1.0, &[0.0], PValueMethod::Satterthwaite, 10, 0), Ok(0.0));
        assert_eq!(
            weighted_chisq_pvalue(1.0, &[], PValueMethod::MonteCarlo, 10, 0),
            Err(Error::EmptyEigenvalues)
        );
    }

    #[test]
    fn deterministic_and_monotone() {
        let g = [2.0, 1.0, 0.5];
        let a = MixtureSample::draw(&g, 10_000, 9).unwrap();
        let b = MixtureSample::draw(&g, 10_000, 9).unwrap();
        assert_eq!(a, b);
        let mut last = 1.0;
        for i in 0..200 {
            let p = a.p_value(i as f64 * 0.1);
            assert!(p <= last);
            last = p;
        }
        assert!(a.p_value(1e9) > 0.0);

        let mut last = 1.0;
        for i in 0..200 {
            let p = satterthwaite_pvalue(i as f64 * 0.1, &g).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn rejects_bad_statistic() {
        assert!(weighted_chisq_pvalue(-1.0, &[1.0], PValueMethod::MonteCarlo, 10, 0).is_err());
        assert!(weighted_chisq_pvalue(f64::NAN, &[1.0], PValueMethod::MonteCarlo, 10, 0).is_err());
    }
}
