//! Gauss rules from the Golub–Welsch eigenvalue problem.
//!
//! Nodes are the eigenvalues of the Jacobi matrix of the orthogonal
//! polynomial family; weights are `μ0·v₀²` with `v₀` the first component of
//! each normalized eigenvector. Only that first row is tracked through the
//! QL sweeps, so building an `n`-point rule costs `O(n²)`.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Legendre on `[-1, 1]`.
    pub fn legendre(n: usize) -> Result<Self> {
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            })
            .collect();
        Self::golub_welsch(vec![0.0; n], off, 2.0)
    }

    /// Gauss–Hermite for the standard normal law: `Σ w_i f(x_i) ≈ E[f(X)]`,
    /// `X ~ N(0, 1)`. Weights sum to one.
    ///
    /// Central nodes are spaced about `π/√n` apart, so `E[cos(ωX)]` is only
    /// resolved for `ω` up to roughly `1.7√n`; beyond that the rule aliases.
    pub fn hermite(n: usize) -> Result<Self> {
        let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
        Self::golub_welsch(vec![0.0; n], off, 1.0)
    }

    fn golub_welsch(mut diag: Vec<f64>, off: Vec<f64>, mu0: f64) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::domain("quadrature rule needs at least one node"));
        }
        let mut e = off;
        e.push(0.0);
        let mut z0 = vec![0.0; n];
        z0[0] = 1.0;
        tridiagonal_ql(&mut diag, &mut e, &mut z0)?;

        let mut pairs: Vec<(f64, f64)> = diag
            .into_iter()
            .zip(z0)
            .map(|(x, v)| (x, mu0 * v * v))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // The families used here are symmetric; enforce it exactly.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(GaussRule { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(x, w)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Nodes and weights of the composite rule on `[a, b]` split into
    /// `panels` equal sub-intervals. Only meaningful for a Legendre rule.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut out = Vec::with_capacity(panels * self.len());
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            out.extend(self.iter().map(|(x, w)| (mid + half * x, half * w)));
        }
        out
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal and receives the eigenvalues. `e[i]` couples rows
/// `i` and `i + 1` (the last slot is scratch). `z0` is the first row of the
/// accumulated eigenvector matrix.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z0: &mut [f64]) -> Result<()> {
    let n = d.len();
    const MAX_SWEEPS: usize = 60;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::Quadrature {
                    nodes: n,
                    last_change: e[l].abs(),
                    tolerance: f64::EPSILON,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z0[i + 1];
                z0[i + 1] = s * z0[i] + c * f;
                z0[i] = c * z0[i] - s * f;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
