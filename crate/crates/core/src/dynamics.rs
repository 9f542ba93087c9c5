//! Step matrices and propagation of the driven dephasing dynamics.
//!
//! The state after `n` steps is the spectral average of the *whole* `n`-step
//! product of rotations. All steps see the same environment phase, so
//! averaging step by step and multiplying would discard the environment memory.

use nalgebra::Matrix3;

use crate::bloch::{BlochMap, BlochVector, ControlStep, Protocol, Spectrum, StepOrder};
use crate::error::{Error, Result};
use crate::trig::{TrigMatrix, TrigSeries};

/// Bloch matrix of the polarization rotation `√η σ_z + √(1−η) σ_x`.
///
/// With `β = 1 − 2η` and `α = 2√(η(1−η))` this is
/// `[[β, 0, α], [0, −1, 0], [α, 0, −β]]`, a π rotation: it squares to one.
pub fn c_rotation(eta: f64) -> Result<Matrix3<f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain(format!("rotation parameter eta = {eta} not in [0, 1]")));
    }
    let beta = 1.0 - 2.0 * eta;
    let alpha = 2.0 * (eta * (1.0 - eta)).sqrt();
    #[rustfmt::skip]
    let m = Matrix3::new(
        beta,  0.0, alpha,
        0.0,  -1.0, 0.0,
        alpha, 0.0, -beta,
    );
    Ok(m)
}

/// Birefringent phase `kθ`: rotation about the z axis by `kθ`.
pub fn quartz_rotation(k: u32) -> TrigMatrix {
    if k == 0 {
        return TrigMatrix::identity();
    }
    let cos = TrigSeries::harmonic(k, 1.0, 0.0);
    let sin = TrigSeries::harmonic(k, 0.0, 1.0);
    TrigMatrix::from_entries([
        [cos.clone(), sin.scaled(-1.0), TrigSeries::zero()],
        [sin, cos, TrigSeries::zero()],
        [TrigSeries::zero(), TrigSeries::zero(), TrigSeries::constant(1.0)],
    ])
}

/// Exact Bloch matrix of one operation unit.
pub fn step_matrix(step: &ControlStep, order: StepOrder) -> TrigMatrix {
    // eta was validated when the step was built
    let c = TrigMatrix::constant(&c_rotation(step.eta()).expect("validated eta"));
    let u = quartz_rotation(step.k());
    match order {
        StepOrder::PhaseAfterRotation => u.compose(&c),
        StepOrder::RotationAfterPhase => c.compose(&u),
    }
}

/// Evaluates one step at a fixed phase without building the harmonic series.
pub fn step_matrix_at(step: &ControlStep, order: StepOrder, theta: f64) -> Matrix3<f64> {
    let c = c_rotation(step.eta()).expect("validated eta");
    let (s, co) = (f64::from(step.k()) * theta).sin_cos();
    #[rustfmt::skip]
    let u = Matrix3::new(
        co, -s, 0.0,
        s,  co, 0.0,
        0.0, 0.0, 1.0,
    );
    match order {
        StepOrder::PhaseAfterRotation => u * c,
        StepOrder::RotationAfterPhase => c * u,
    }
}

/// `W_n ⋯ W_1` with `W_i` the step matrix of `p.step_at(i)`; identity for `n = 0`.
pub fn protocol_product(p: &Protocol, n: usize) -> TrigMatrix {
    ProductSequence::new(p)
        .nth(n)
        .expect("product sequence is infinite")
}

/// Yields the exact products for `n = 0, 1, 2, …`.
pub struct ProductSequence<'a> {
    protocol: &'a Protocol,
    steps: Vec<TrigMatrix>,
    current: Option<TrigMatrix>,
    n: usize,
}

impl<'a> ProductSequence<'a> {
    pub fn new(protocol: &'a Protocol) -> Self {
        let steps = protocol
            .steps()
            .iter()
            .map(|s| step_matrix(s, protocol.order()))
            .collect();
        ProductSequence {
            protocol,
            steps,
            current: None,
            n: 0,
        }
    }
}

impl Iterator for ProductSequence<'_> {
    type Item = TrigMatrix;

    fn next(&mut self) -> Option<TrigMatrix> {
        let next = match self.current.take() {
            None => TrigMatrix::identity(),
            Some(prev) => {
                self.n += 1;
                let idx = (self.n - 1) % self.protocol.period();
                self.steps[idx].compose(&prev)
            }
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// Averaged maps `Φ_0, …, Φ_n`.
pub fn averaged_maps(p: &Protocol, sp: &Spectrum, n: usize) -> Vec<BlochMap> {
    ProductSequence::new(p)
        .take(n + 1)
        .map(|m| m.gaussian_average(sp))
        .collect()
}

/// Trajectory `a_0, a_1, …, a_n` with `a_m = Φ_m a_0`.
pub fn propagate(p: &Protocol, sp: &Spectrum, n: usize, a0: &BlochVector) -> Vec<BlochVector> {
    averaged_maps(p, sp, n).iter().map(|m| m.apply(a0)).collect()
}
