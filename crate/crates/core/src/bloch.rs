//! Qubit states, unital channels and the protocol description.
//!
//! States are Bloch vectors `a` with `ρ = ½(1 + a·σ)`. Horizontal polarization
//! `|H⟩` sits at the north pole `(0, 0, 1)`.

use std::f64::consts::{LN_2, TAU};
use std::fmt;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Slack allowed on the unit-ball and contraction bounds.
pub const BALL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector(Vector3<f64>);

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector(Vector3::new(0.0, 0.0, 0.0));

    /// Checked constructor: the vector must lie in the closed unit ball.
    pub fn new(ax: f64, ay: f64, az: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(ax, ay, az))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::domain(format!("Bloch vector has non-finite component: {v:?}")));
        }
        let n2 = v.norm_squared();
        if n2 > 1.0 + BALL_TOLERANCE {
            return Err(Error::domain(format!(
                "Bloch vector outside the unit ball: |a|² = {n2}"
            )));
        }
        Ok(BlochVector(v))
    }

    /// Wraps the output of a contraction without re-checking the bound.
    pub(crate) fn from_vector_unchecked(v: Vector3<f64>) -> Self {
        BlochVector(v)
    }

    pub fn e_x() -> Self {
        BlochVector(Vector3::x())
    }

    pub fn e_y() -> Self {
        BlochVector(Vector3::y())
    }

    pub fn e_z() -> Self {
        BlochVector(Vector3::z())
    }

    pub fn ax(&self) -> f64 {
        self.0.x
    }

    pub fn ay(&self) -> f64 {
        self.0.y
    }

    pub fn az(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `tr ρ² = (1 + |a|²) / 2`.
    pub fn purity(&self) -> f64 {
        0.5 * (1.0 + self.0.norm_squared())
    }
}

impl std::ops::Neg for BlochVector {
    type Output = BlochVector;

    fn neg(self) -> BlochVector {
        BlochVector(-self.0)
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0.x, self.0.y, self.0.z)
    }
}

/// A unital qubit channel in Bloch form: `a ↦ M a`.
///
/// Spectral averages of rotations are convex mixtures of rotations, so every
/// singular value of `M` is at most one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochMap(Matrix3<f64>);

impl BlochMap {
    pub fn identity() -> Self {
        BlochMap(Matrix3::identity())
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        BlochMap(m)
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        BlochMap(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.0[(i, j)]))
    }

    pub fn apply(&self, a: &BlochVector) -> BlochVector {
        BlochVector::from_vector_unchecked(self.0 * a.0)
    }

    pub fn singular_values(&self) -> Vector3<f64> {
        self.0.singular_values()
    }

    pub fn is_contraction(&self) -> bool {
        self.singular_values().max() <= 1.0 + BALL_TOLERANCE
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &BlochMap) -> f64 {
        (self.0 - other.0).amax()
    }
}

/// One operation unit: a polarization rotation with parameter `eta`
/// followed by a birefringent phase `k·θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlStep {
    eta: f64,
    k: u32,
}

impl ControlStep {
    pub fn new(eta: f64, k: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain(format!("rotation parameter eta = {eta} not in [0, 1]")));
        }
        Ok(ControlStep { eta, k })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

/// Which factor of an operation unit acts first on the Bloch vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StepOrder {
    /// Rotation first, then the frequency-dependent phase: `U(kθ)·C(η)`.
    #[default]
    PhaseAfterRotation,
    /// Phase first, then the rotation: `C(η)·U(kθ)`.
    RotationAfterPhase,
}

impl StepOrder {
    /// Name used on the command line and in configuration files.
    pub fn flag(&self) -> &'static str {
        match self {
            StepOrder::PhaseAfterRotation => "eq2b",
            StepOrder::RotationAfterPhase => "eq4a",
        }
    }

    pub fn from_flag(s: &str) -> Option<Self> {
        match s {
            "eq2b" => Some(StepOrder::PhaseAfterRotation),
            "eq4a" => Some(StepOrder::RotationAfterPhase),
            _ => None,
        }
    }
}

impl fmt::Display for StepOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag())
    }
}

/// One period of operation units, applied cyclically with `steps[0]` acting
/// first.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    steps: Vec<ControlStep>,
    order: StepOrder,
}

impl Protocol {
    pub fn new(steps: Vec<ControlStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::domain("protocol period must contain at least one step"));
        }
        Ok(Protocol {
            steps,
            order: StepOrder::default(),
        })
    }

    /// Protocol with a common rotation parameter and the given phase
    /// multipliers.
    pub fn uniform_eta(eta: f64, ks: &[u32]) -> Result<Self> {
        let steps = ks
            .iter()
            .map(|&k| ControlStep::new(eta, k))
            .collect::<Result<Vec<_>>>()?;
        Protocol::new(steps)
    }

    pub fn with_order(mut self, order: StepOrder) -> Self {
        self.order = order;
        self
    }

    pub fn steps(&self) -> &[ControlStep] {
        &self.steps
    }

    pub fn period(&self) -> usize {
        self.steps.len()
    }

    pub fn order(&self) -> StepOrder {
        self.order
    }

    /// The step applied at (1-based) time `n ≥ 1`.
    pub fn step_at(&self, n: usize) -> &ControlStep {
        debug_assert!(n >= 1);
        &self.steps[(n - 1) % self.steps.len()]
    }
}

/// Statistics of the base-unit environment phase `θ`.
///
/// `s = +∞` stands for the fully dephased limit with `θ` uniform over a period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    theta_bar: f64,
    s: f64,
}

impl Spectrum {
    pub fn new(theta_bar: f64, s: f64) -> Result<Self> {
        if !theta_bar.is_finite() {
            return Err(Error::domain(format!("mean phase must be finite, got {theta_bar}")));
        }
        if s.is_nan() || s < 0.0 || s == f64::NEG_INFINITY {
            return Err(Error::domain(format!("phase spread must be >= 0, got {s}")));
        }
        Ok(Spectrum { theta_bar, s })
    }

    pub fn fully_dephased() -> Self {
        Spectrum {
            theta_bar: 0.0,
            s: f64::INFINITY,
        }
    }

    /// Converts source parameters into base-unit phase statistics.
    ///
    /// `fwhm` is read as the full width at half maximum of a Gaussian line, so
    /// `σ_λ = fwhm / (2√(2 ln 2))`. The base unit has optical path difference
    /// `delta_l_over_lambda · λ0`.
    pub fn from_physical(lambda0: f64, fwhm: f64, delta_l_over_lambda: f64) -> Result<Self> {
        for (name, v) in [
            ("lambda0", lambda0),
            ("fwhm", fwhm),
            ("delta_L_over_lambda", delta_l_over_lambda),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let sigma_lambda = fwhm / (2.0 * (2.0 * LN_2).sqrt());
        let theta_bar = if delta_l_over_lambda.fract() == 0.0 {
            0.0
        } else {
            (TAU * delta_l_over_lambda).rem_euclid(TAU)
        };
        let s = TAU * delta_l_over_lambda * sigma_lambda / lambda0;
        Spectrum::new(theta_bar, s)
    }

    pub fn theta_bar(&self) -> f64 {
        self.theta_bar
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn is_fully_dephased(&self) -> bool {
        self.s.is_infinite()
    }

    /// `E[cos(hθ)]` and `E[sin(hθ)]` under this spectrum.
    pub fn harmonic_moment(&self, h: u32) -> (f64, f64) {
        if h == 0 {
            return (1.0, 0.0);
        }
        if self.is_fully_dephased() {
            return (0.0, 0.0);
        }
        let hf = f64::from(h);
        let damping = (-0.5 * hf * hf * self.s * self.s).exp();
        let (sin, cos) = (hf * self.theta_bar).sin_cos();
        (damping * cos, damping * sin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ball_bound_enforced() {
        assert!(BlochVector::new(0.0, 0.0, 1.0).is_ok());
        assert!(BlochVector::new(0.6, 0.0, 0.8).is_ok());
        assert!(BlochVector::new(0.8, 0.0, 0.8).is_err());
        assert!(BlochVector::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn control_step_rejects_out_of_range_eta() {
        assert!(ControlStep::new(-0.01, 1).is_err());
        assert!(ControlStep::new(1.01, 1).is_err());
        assert!(ControlStep::new(1.0, 0).is_ok());
    }

    #[test]
    fn empty_protocol_rejected() {
        assert!(Protocol::new(vec![]).is_err());
    }

    #[test]
    fn step_assignment_is_cyclic() {
        let p = Protocol::uniform_eta(0.5, &[3, 2, 1]).unwrap();
        let ks: Vec<u32> = (1..=7).map(|n| p.step_at(n).k()).collect();
        assert_eq!(ks, vec![3, 2, 1, 3, 2, 1, 3]);
        // the 50th unit carries the middle plate
        assert_eq!(p.step_at(50).k(), 2);
    }

    #[test]
    fn physical_spectrum_for_forty_wavelengths() {
        let sp = Spectrum::from_physical(800e-9, 3e-9, 40.0).unwrap();
        assert_eq!(sp.theta_bar(), 0.0);
        // 2π·40·(3/2.354820045)/800
        assert_relative_eq!(sp.s(), 0.400_233_469_2, epsilon = 1e-9);
    }

    #[test]
    fn physical_spectrum_fractional_path() {
        let sp = Spectrum::from_physical(800.0, 3.0, 40.25).unwrap();
        assert_relative_eq!(sp.theta_bar(), TAU * 0.25, epsilon = 1e-9);
    }

    #[test]
    fn narrow_line_means_no_dephasing() {
        let sp = Spectrum::from_physical(800.0, 1e-12, 40.0).unwrap();
        assert!(sp.s() < 1e-12);
    }

    #[test]
    fn physical_spectrum_rejects_non_positive() {
        assert!(Spectrum::from_physical(0.0, 3.0, 40.0).is_err());
        assert!(Spectrum::from_physical(800.0, -3.0, 40.0).is_err());
        assert!(Spectrum::from_physical(800.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn harmonic_moments() {
        let sp = Spectrum::new(0.0, 0.4).unwrap();
        let (c, s) = sp.harmonic_moment(1);
        assert_relative_eq!(c, 0.923_116_346_386_636, epsilon = 1e-12);
        assert_eq!(s, 0.0);
        assert_eq!(Spectrum::fully_dephased().harmonic_moment(0), (1.0, 0.0));
        assert_eq!(Spectrum::fully_dephased().harmonic_moment(3), (0.0, 0.0));
    }

    #[test]
    fn purity_of_pure_and_mixed() {
        assert_relative_eq!(BlochVector::e_z().purity(), 1.0);
        assert_relative_eq!(BlochVector::ZERO.purity(), 0.5);
    }
}
