//! Brute-force reference implementations on nested `Vec`s.
//!
//! Nothing here calls into the library's estimators; each quantity is
//! written out with explicit index loops straight from its definition.

#![allow(dead_code, clippy::needless_range_loop)]

use sepstat_core::reduction::ScorePanel;

pub type Mat = Vec<Vec<f64>>;
pub type T4 = Vec<Vec<Vec<Vec<f64>>>>;

pub struct Lcg(pub u64);

impl Lcg {
    /// Uniform on `[-1, 1)`.
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

pub fn zeros4(k: usize, j: usize) -> T4 {
    vec![vec![vec![vec![0.0; j]; k]; j]; k]
}

pub fn random_scores(n: usize, k: usize, j: usize, rng: &mut Lcg) -> ScorePanel {
    let data = (0..n * k * j).map(|_| rng.next()).collect();
    ScorePanel::new(n, k, j, data).unwrap()
}

/// `z[n][k][j]`.
pub fn score_array(z: &ScorePanel) -> Vec<Mat> {
    (0..z.n())
        .map(|n| {
            (0..z.k())
                .map(|k| (0..z.j()).map(|j| z.get(n, k, j)).collect())
                .collect()
        })
        .collect()
}

pub fn random4(k: usize, j: usize, rng: &mut Lcg) -> T4 {
    let mut c = zeros4(k, j);
    for a in 0..k {
        for b in 0..j {
            for x in 0..k {
                for y in 0..j {
                    c[a][b][x][y] = rng.next();
                }
            }
        }
    }
    c
}

pub fn flat4(c: &T4) -> Vec<f64> {
    let mut out = Vec::new();
    for a in c {
        for b in a {
            for x in b {
                out.extend_from_slice(x);
            }
        }
    }
    out
}

/// `Σ_i c(i, j, i, l)`.
pub fn tr1(c: &T4) -> Mat {
    let (k, j) = (c.len(), c[0].len());
    let mut out = vec![vec![0.0; j]; j];
    for a in 0..j {
        for b in 0..j {
            for i in 0..k {
                out[a][b] += c[i][a][i][b];
            }
        }
    }
    out
}

/// `Σ_j c(i, j, k, j)`.
pub fn tr2(c: &T4) -> Mat {
    let (k, j) = (c.len(), c[0].len());
    let mut out = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            for jj in 0..j {
                out[a][b] += c[a][jj][b][jj];
            }
        }
    }
    out
}

pub fn trace(c: &T4) -> f64 {
    let mut t = 0.0;
    for a in 0..c.len() {
        for b in 0..c[0].len() {
            t += c[a][b][a][b];
        }
    }
    t
}

/// `(x ⊗ y)(a, b, c, d) = x(a, b) y(c, d)`.
pub fn outer(x: &Mat, y: &Mat) -> T4 {
    let (k, j) = (x.len(), x[0].len());
    let mut out = zeros4(k, j);
    for a in 0..k {
        for b in 0..j {
            for c in 0..k {
                for d in 0..j {
                    out[a][b][c][d] = x[a][b] * y[c][d];
                }
            }
        }
    }
    out
}

/// `(1/(N−h)) Σ_n Z_n ⊗ Z_{n+h}`.
pub fn lag_cov(z: &[Mat], h: usize) -> T4 {
    let (k, j) = (z[0].len(), z[0][0].len());
    let m = z.len() - h;
    let mut c = zeros4(k, j);
    for n in 0..m {
        let p = outer(&z[n], &z[n + h]);
        for a in 0..k {
            for b in 0..j {
                for x in 0..k {
                    for y in 0..j {
                        c[a][b][x][y] += p[a][b][x][y] / m as f64;
                    }
                }
            }
        }
    }
    c
}

pub fn f1(c: &T4) -> Mat {
    let t = trace(c);
    tr2(c)
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / t).collect())
        .collect()
}

/// `R_i` as a `d² × d²` matrix, 8 nested index loops per term.
pub fn autocov(z: &[Mat], h: usize, i: usize) -> Mat {
    let (k, j) = (z[0].len(), z[0][0].len());
    let d = k * j;
    let c = lag_cov(z, h);
    let m = z.len() - h;
    let terms = m - i;
    let y = |n: usize, a: usize, b: usize, x: usize, w: usize| z[n][a][b] * z[n + h][x][w] - c[a][b][x][w];
    let mut r = vec![vec![0.0; d * d]; d * d];
    for n in 0..terms {
        for a in 0..k {
            for b in 0..j {
                for x in 0..k {
                    for w in 0..j {
                        let row = (a * j + b) * d + x * j + w;
                        let left = y(n, a, b, x, w);
                        for a2 in 0..k {
                            for b2 in 0..j {
                                for x2 in 0..k {
                                    for w2 in 0..j {
                                        let col = (a2 * j + b2) * d + x2 * j + w2;
                                        r[row][col] += left * y(n + i, a2, b2, x2, w2) / terms as f64;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    r
}

/// `R_0 + Σ_{i≤q} (1 − i/(1+q)) (R_i + R_iᵀ)`.
pub fn long_run(z: &[Mat], h: usize, q: usize) -> Mat {
    let mut g = autocov(z, h, 0);
    let dim = g.len();
    for i in 1..=q {
        let w = 1.0 - i as f64 / (1.0 + q as f64);
        let r = autocov(z, h, i);
        for a in 0..dim {
            for b in 0..dim {
                g[a][b] += w * (r[a][b] + r[b][a]);
            }
        }
    }
    g
}

/// Jacobian of `C ↦ f₁(C) ⊗̃ f₂(C) − C` with `f₁ = Tr₂(C)/Tr(C)` and
/// `f₂ = Tr₁(C)`, derived entry by entry.
pub fn residual_jacobian(c: &T4) -> Mat {
    let (k, j) = (c.len(), c[0].len());
    let d = k * j;
    let t = trace(c);
    let p2 = tr2(c);
    let a1 = f1(c);
    let a2 = tr1(c);
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    let mut l = vec![vec![0.0; d * d]; d * d];
    for i in 0..k {
        for jj in 0..j {
            for kk in 0..k {
                for ll in 0..j {
                    let row = (i * j + jj) * d + kk * j + ll;
                    for i2 in 0..k {
                        for j2 in 0..j {
                            for k2 in 0..k {
                                for l2 in 0..j {
                                    let col = (i2 * j + j2) * d + k2 * j + l2;
                                    // ∂f₁(i,kk)/∂C(i2,j2,k2,l2)
                                    let df1 = delta(j2, l2)
                                        * (delta(i, i2) * delta(kk, k2) * t - p2[i][kk] * delta(i2, k2))
                                        / (t * t);
                                    // ∂f₂(jj,ll)/∂C(i2,j2,k2,l2)
                                    let df2 = delta(jj, j2) * delta(ll, l2) * delta(i2, k2);
                                    l[row][col] = df1 * a2[jj][ll] + a1[i][kk] * df2
                                        - delta(row, col);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    l
}

/// `L Γ Lᵀ`.
pub fn congruence(l: &Mat, g: &Mat) -> Mat {
    let n = l.len();
    let m = g.len();
    let mut lg = vec![vec![0.0; m]; n];
    for a in 0..n {
        for b in 0..m {
            for c in 0..m {
                lg[a][b] += l[a][c] * g[c][b];
            }
        }
    }
    let mut out = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..m {
                out[a][b] += lg[a][c] * l[b][c];
            }
        }
    }
    out
}

pub fn flat(m: &Mat) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

/// `max |a − b| / max |b|`, with the scale floored at the smallest normal.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
