use sepstat_core::pvalue::{weighted_chisq_pvalue, PValueMethod};

struct SplitMix(u64);

impl SplitMix {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `(0, 1]`.
    fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64
    }

    /// Box–Muller pair.
    fn normals(&mut self) -> (f64, f64) {
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * self.uniform();
        (r * th.cos(), r * th.sin())
    }
}

/// Upper 5% point of `2Z₁² + Z₂² + 0.5Z₃²` from a million brute-force sums.
fn empirical_quantile() -> f64 {
    let gammas = [2.0, 1.0, 0.5];
    let mut rng = SplitMix(2024);
    let mut sums: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let (a, b) = rng.normals();
            let (c, _) = rng.normals();
            gammas[0] * a * a + gammas[1] * b * b + gammas[2] * c * c
        })
        .collect();
    sums.sort_by(f64::total_cmp);
    sums[950_000]
}

#[test]
fn three_weight_mixture_matches_brute_force() {
    let t = empirical_quantile();
    // Frozen output of the oracle above.
    assert!((t - 9.827334284289778).abs() < 1e-12, "{t}");
    let p = weighted_chisq_pvalue(t, &[2.0, 1.0, 0.5], PValueMethod::MonteCarlo, 100_000, 17).unwrap();
    let se = (0.05f64 * 0.95 / 100_000.0).sqrt();
    assert!((p - 0.05).abs() < 3.0 * se, "p = {p}, 3 SE = {}", 3.0 * se);
}

#[test]
fn satterthwaite_close_on_mixture() {
    let t = empirical_quantile();
    let p = weighted_chisq_pvalue(t, &[2.0, 1.0, 0.5], PValueMethod::Satterthwaite, 0, 0).unwrap();
    assert!((p - 0.05).abs() < 0.01, "{p}");
}

#[test]
fn chi_square_quantiles() {
    let p1 = weighted_chisq_pvalue(3.841, &[1.0], PValueMethod::MonteCarlo, 100_000, 0).unwrap();
    let p2 = weighted_chisq_pvalue(5.991, &[1.0, 1.0], PValueMethod::MonteCarlo, 100_000, 0).unwrap();
    assert!((p1 - 0.05).abs() <= 0.005, "{p1}");
    assert!((p2 - 0.05).abs() <= 0.005, "{p2}");
}
