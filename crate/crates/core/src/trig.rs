//! Finite harmonic series in the environment phase and 3×3 matrices of them.
//!
//! Every step matrix is a trigonometric polynomial in the base-unit phase `θ`,
//! so products of steps stay exact: multiplication uses the product-to-sum
//! identities and the Gaussian average of each harmonic is known in closed form.

use std::fmt;

use nalgebra::Matrix3;

use crate::bloch::{BlochMap, Spectrum};

/// `Σ_h [c_h cos(hθ) + d_h sin(hθ)]`, stored densely as `coeffs[h] = (c_h, d_h)`.
///
/// `d_0` is always zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigSeries {
    coeffs: Vec<(f64, f64)>,
}

impl TrigSeries {
    pub fn zero() -> Self {
        TrigSeries { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        let mut s = TrigSeries::zero();
        s.add_term(0, c, 0.0);
        s
    }

    /// `cos_amp·cos(hθ) + sin_amp·sin(hθ)`.
    pub fn harmonic(h: u32, cos_amp: f64, sin_amp: f64) -> Self {
        let mut s = TrigSeries::zero();
        s.add_term(h, cos_amp, sin_amp);
        s
    }

    /// Adds `c·cos(hθ) + d·sin(hθ)`. A sine amplitude at `h = 0` is dropped.
    pub fn add_term(&mut self, h: u32, c: f64, d: f64) {
        let h = h as usize;
        if c == 0.0 && (d == 0.0 || h == 0) {
            return;
        }
        if self.coeffs.len() <= h {
            self.coeffs.resize(h + 1, (0.0, 0.0));
        }
        let slot = &mut self.coeffs[h];
        slot.0 += c;
        if h > 0 {
            slot.1 += d;
        }
    }

    /// Adds a term at a signed harmonic index, folding `h < 0` by the parity
    /// of cosine and sine.
    fn add_signed(&mut self, h: i64, c: f64, d: f64) {
        if h < 0 {
            self.add_term((-h) as u32, c, -d);
        } else {
            self.add_term(h as u32, c, d);
        }
    }

    /// `(c_h, d_h)`; zero beyond the stored range.
    pub fn coefficient(&self, h: u32) -> (f64, f64) {
        self.coeffs.get(h as usize).copied().unwrap_or((0.0, 0.0))
    }

    /// Highest harmonic index carrying a non-zero coefficient (0 for constants
    /// and the zero series).
    pub fn max_harmonic(&self) -> u32 {
        self.coeffs
            .iter()
            .rposition(|&(c, d)| c != 0.0 || d != 0.0)
            .unwrap_or(0) as u32
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&(c, d)| c == 0.0 && d == 0.0)
    }

    /// Iterator over `(h, c_h, d_h)` for stored harmonics.
    pub fn terms(&self) -> impl Iterator<Item = (u32, f64, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(h, &(c, d))| (h as u32, c, d))
    }

    pub fn evaluate(&self, theta: f64) -> f64 {
        // Direct sin_cos per harmonic keeps the error independent of h.
        self.terms()
            .filter(|&(_, c, d)| c != 0.0 || d != 0.0)
            .map(|(h, c, d)| {
                if h == 0 {
                    c
                } else {
                    let (s, co) = (f64::from(h) * theta).sin_cos();
                    c * co + d * s
                }
            })
            .sum()
    }

    pub fn derivative(&self) -> TrigSeries {
        let mut out = TrigSeries::zero();
        for (h, c, d) in self.terms() {
            let hf = f64::from(h);
            out.add_term(h, hf * d, -hf * c);
        }
        out
    }

    pub fn add_assign(&mut self, other: &TrigSeries) {
        for (h, c, d) in other.terms() {
            self.add_term(h, c, d);
        }
    }

    pub fn scaled(&self, factor: f64) -> TrigSeries {
        TrigSeries {
            coeffs: self
                .coeffs
                .iter()
                .map(|&(c, d)| (factor * c, factor * d))
                .collect(),
        }
    }

    /// Pointwise product via product-to-sum identities.
    pub fn mul(&self, other: &TrigSeries) -> TrigSeries {
        let mut out = TrigSeries::zero();
        self.mul_add_into(other, &mut out);
        out
    }

    fn mul_add_into(&self, other: &TrigSeries, out: &mut TrigSeries) {
        let rhs: Vec<(i64, f64, f64)> = other
            .terms()
            .filter(|&(_, c, d)| c != 0.0 || d != 0.0)
            .map(|(h, c, d)| (i64::from(h), c, d))
            .collect();
        if rhs.is_empty() {
            return;
        }
        for (ha, ca, da) in self.terms() {
            if ca == 0.0 && da == 0.0 {
                continue;
            }
            let ha = i64::from(ha);
            for &(hb, cb, db) in &rhs {
                let (sum, diff) = (ha + hb, ha - hb);
                // cos a cos b = ½[cos(a−b) + cos(a+b)]
                // sin a sin b = ½[cos(a−b) − cos(a+b)]
                // sin a cos b = ½[sin(a+b) + sin(a−b)]
                // cos a sin b = ½[sin(a+b) − sin(a−b)]
                let cc = 0.5 * ca * cb;
                let ss = 0.5 * da * db;
                let sc = 0.5 * da * cb;
                let cs = 0.5 * ca * db;
                out.add_signed(diff, cc + ss, sc - cs);
                out.add_signed(sum, cc - ss, sc + cs);
            }
        }
    }

    /// Expectation over the phase distribution: harmonic `h` is damped by
    /// `exp(−h²s²/2)` and evaluated at the mean phase.
    pub fn average(&self, spectrum: &Spectrum) -> f64 {
        self.terms()
            .map(|(h, c, d)| {
                if c == 0.0 && d == 0.0 {
                    return 0.0;
                }
                let (mc, ms) = spectrum.harmonic_moment(h);
                c * mc + d * ms
            })
            .sum()
    }
}

/// A 3×3 matrix whose entries are [`TrigSeries`] in the same phase variable.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigMatrix {
    entries: [[TrigSeries; 3]; 3],
}

impl TrigMatrix {
    pub fn from_entries(entries: [[TrigSeries; 3]; 3]) -> Self {
        TrigMatrix { entries }
    }

    pub fn constant(m: &Matrix3<f64>) -> Self {
        TrigMatrix {
            entries: std::array::from_fn(|i| std::array::from_fn(|j| TrigSeries::constant(m[(i, j)]))),
        }
    }

    pub fn identity() -> Self {
        TrigMatrix::constant(&Matrix3::identity())
    }

    pub fn entry(&self, i: usize, j: usize) -> &TrigSeries {
        &self.entries[i][j]
    }

    pub fn max_harmonic(&self) -> u32 {
        self.entries
            .iter()
            .flatten()
            .map(TrigSeries::max_harmonic)
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, theta: f64) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entries[i][j].evaluate(theta))
    }

    pub fn derivative(&self) -> TrigMatrix {
        TrigMatrix {
            entries: std::array::from_fn(|i| std::array::from_fn(|j| self.entries[i][j].derivative())),
        }
    }

    /// Matrix product `self(θ) · rhs(θ)` as a harmonic series.
    pub fn compose(&self, rhs: &TrigMatrix) -> TrigMatrix {
        let entries = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut acc = TrigSeries::zero();
                for l in 0..3 {
                    self.entries[i][l].mul_add_into(&rhs.entries[l][j], &mut acc);
                }
                acc
            })
        });
        TrigMatrix { entries }
    }

    /// Spectral average, harmonic by harmonic.
    pub fn gaussian_average(&self, spectrum: &Spectrum) -> BlochMap {
        BlochMap::from_matrix(Matrix3::from_fn(|i, j| self.entries[i][j].average(spectrum)))
    }

    /// Keeps only the `h = 0` part of every entry.
    pub fn constant_part(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entries[i][j].coefficient(0).0)
    }
}

impl fmt::Display for TrigSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (h, c, d) in self.terms() {
            for (amp, name) in [(c, "cos"), (d, "sin")] {
                if amp == 0.0 {
                    continue;
                }
                if !first {
                    f.write_str(" + ")?;
                }
                first = false;
                if h == 0 {
                    write!(f, "{amp}")?;
                } else {
                    write!(f, "{amp}·{name}({h}θ)")?;
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}
