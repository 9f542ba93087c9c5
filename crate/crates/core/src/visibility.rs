//! Size of the steady cycle as a function of the initial pure state.
//!
//! For a two-point cycle the size is the squared distance between the two
//! cycle points; for three points it is the area of the triangle they span
//! (half the parallelogram on two of its edges). Neither is normalized against
//! the other, so values are only comparable within one period.

use nalgebra::{Matrix3, Vector3};

use crate::asymptotics::AsymptoticCycle;
use crate::error::{Error, Result};
use crate::sphere::{
    fibonacci_points, gradient, hessian, local_search, newton_polish, Definiteness, LocalChart,
    NelderMeadOptions, SphereAngles,
};

pub const MULTI_START: usize = 32;
pub const GRADIENT_STEP: f64 = 1e-5;
pub const STATIONARITY_TOLERANCE: f64 = 1e-9;
pub const HESSIAN_TOLERANCE: f64 = 1e-8;
const HESSIAN_STEP: f64 = 1e-4;
const NEWTON_ITERATIONS: usize = 60;
/// Starts landing on a maximum not equivalent to the reported one (within
/// this value tolerance) are counted towards the degeneracy flag.
pub const DEGENERACY_VALUE_TOLERANCE: f64 = 1e-9;
pub const DEGENERACY_MIN_STARTS: usize = 10;
const EQUIVALENCE_DISTANCE: f64 = 1e-4;

fn require_period(cycle: &AsymptoticCycle, t: usize) -> Result<()> {
    if cycle.period() != t {
        return Err(Error::domain(format!(
            "functional needs a cycle of period {t}, got {}",
            cycle.period()
        )));
    }
    Ok(())
}

fn two_point(cycle: &AsymptoticCycle, a: &Vector3<f64>) -> f64 {
    ((cycle.map(0).matrix() - cycle.map(1).matrix()) * a).norm_squared()
}

fn three_point(cycle: &AsymptoticCycle, a: &Vector3<f64>) -> f64 {
    let x = cycle.map(0).matrix() * a;
    let x1 = cycle.map(1).matrix() * a;
    let x2 = cycle.map(2).matrix() * a;
    0.5 * (x.cross(&x1) + x1.cross(&x2) + x2.cross(&x)).norm()
}

/// `‖(Φ̃_0 − Φ̃_1) a‖²`.
pub fn volume_two(cycle: &AsymptoticCycle, a: &SphereAngles) -> Result<f64> {
    require_period(cycle, 2)?;
    Ok(two_point(cycle, &a.to_vector()))
}

/// `½‖x × x′ + x′ × x″ + x″ × x‖` with `x = Φ̃_0 a`, `x′ = Φ̃_1 a`, `x″ = Φ̃_2 a`.
pub fn volume_three(cycle: &AsymptoticCycle, a: &SphereAngles) -> Result<f64> {
    require_period(cycle, 3)?;
    Ok(three_point(cycle, &a.to_vector()))
}

/// The functional matching the cycle's period, as a function of a unit vector.
pub fn functional(cycle: &AsymptoticCycle) -> Result<impl Fn(&Vector3<f64>) -> f64 + '_> {
    let t = cycle.period();
    if t != 2 && t != 3 {
        return Err(Error::domain(format!("visibility is defined for periods 2 and 3, got {t}")));
    }
    Ok(move |a: &Vector3<f64>| {
        let a = a.normalize();
        if t == 2 {
            two_point(cycle, &a)
        } else {
            three_point(cycle, &a)
        }
    })
}

/// Exact maximum of the two-point functional: the squared largest singular
/// value of `Φ̃_0 − Φ̃_1` and its right singular vector.
pub fn volume_two_closed_form(cycle: &AsymptoticCycle) -> Result<(Vector3<f64>, f64)> {
    require_period(cycle, 2)?;
    let d: Matrix3<f64> = cycle.map(0).matrix() - cycle.map(1).matrix();
    let eig = (d.transpose() * d).symmetric_eigen();
    let (i, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("three eigenvalues");
    Ok((eig.eigenvectors.column(i).into_owned(), value))
}

#[derive(Clone, Debug)]
pub struct VisibilityOptimum {
    pub angles: SphereAngles,
    pub value: f64,
    /// Gradient norm in an orthonormal chart at the maximizer.
    pub gradient_norm: f64,
    pub hessian_eigenvalues: [f64; 2],
    pub definiteness: Definiteness,
    /// Set when at least [`DEGENERACY_MIN_STARTS`] starts reached the same
    /// value at points not equivalent (up to sign) to the reported one.
    pub degenerate: bool,
}

/// Multi-start maximization of the visibility functional over pure states.
///
/// Each of [`MULTI_START`] lattice starts runs Nelder–Mead in a pole-free
/// chart; the best result is polished by Newton steps on central-difference
/// derivatives until the gradient norm drops below
/// [`STATIONARITY_TOLERANCE`]. The Hessian verdict is taken in the same
/// orthonormal chart, where it agrees in sign with the `(θ, φ)` Hessian away
/// from the coordinate poles.
pub fn maximize_visibility(cycle: &AsymptoticCycle) -> Result<VisibilityOptimum> {
    let f = functional(cycle)?;
    let opts = NelderMeadOptions::default();
    let locals: Vec<_> = fibonacci_points(MULTI_START)
        .iter()
        .map(|s| local_search(&f, s, &opts))
        .collect();
    let best = locals
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");

    let (point, value, gradient_norm) = newton_polish(
        &f,
        &best.direction,
        GRADIENT_STEP,
        STATIONARITY_TOLERANCE,
        NEWTON_ITERATIONS,
    )?;

    let chart = LocalChart::centered_at(&point);
    let g = |x: &nalgebra::Vector2<f64>| f(&chart.to_global(x));
    let h = hessian(&g, &LocalChart::ORIGIN, HESSIAN_STEP);
    let eig = h.symmetric_eigenvalues();
    let hessian_eigenvalues = [eig[0].min(eig[1]), eig[0].max(eig[1])];
    debug_assert!(gradient(&g, &LocalChart::ORIGIN, GRADIENT_STEP).norm() < STATIONARITY_TOLERANCE);

    let others = locals
        .iter()
        .filter(|m| (m.value - value).abs() <= DEGENERACY_VALUE_TOLERANCE)
        .filter(|m| {
            let d = m.direction.normalize();
            (d - point).norm() > EQUIVALENCE_DISTANCE && (d + point).norm() > EQUIVALENCE_DISTANCE
        })
        .count();

    Ok(VisibilityOptimum {
        angles: SphereAngles::from_direction(&point),
        value,
        gradient_norm,
        hessian_eigenvalues,
        definiteness: Definiteness::classify(&hessian_eigenvalues, HESSIAN_TOLERANCE),
        degenerate: others >= DEGENERACY_MIN_STARTS,
    })
}
