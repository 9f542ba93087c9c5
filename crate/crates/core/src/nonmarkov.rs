//! Trace-distance dynamics and the BLP non-Markovianity measure.
//!
//! In discrete time the measure is the sum of all one-step increases of the
//! trace distance between two evolving states. A steady cycle in which the
//! distance rises and falls every period makes the measure grow without bound.

use nalgebra::Vector3;

use crate::asymptotics::AsymptoticCycle;
use crate::bloch::{BlochVector, Protocol, Spectrum};
use crate::dynamics::averaged_maps;
use crate::error::{Error, Result};
use crate::sphere::{fibonacci_points, local_search, NelderMeadOptions, SphereAngles};

/// `D(ρ₁, ρ₂) = ½‖a₁ − a₂‖`.
pub fn trace_distance(x: &BlochVector, y: &BlochVector) -> f64 {
    0.5 * (x.as_vector() - y.as_vector()).norm()
}

/// `tr[F(ρ_x − ρ_y)] = ½ f·(x − y)` for the effect `F = ½(1 + f·σ)`.
///
/// Bounded above by the trace distance, with equality when `f` is the unit
/// vector along `x − y`.
pub fn trace_distance_povm(x: &BlochVector, y: &BlochVector, f: &Vector3<f64>) -> Result<f64> {
    let n = f.norm();
    if !(n <= 1.0 + crate::bloch::BALL_TOLERANCE) {
        return Err(Error::domain(format!(
            "effect vector must satisfy |f| <= 1, got |f| = {n}"
        )));
    }
    Ok(0.5 * f.dot(&(x.as_vector() - y.as_vector())))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatePair {
    pub a_plus: BlochVector,
    pub a_minus: BlochVector,
}

impl StatePair {
    pub fn new(a_plus: BlochVector, a_minus: BlochVector) -> Self {
        StatePair { a_plus, a_minus }
    }

    /// `(a, −a)`: orthogonal states when `a` is pure.
    pub fn antipodal(a: BlochVector) -> Self {
        StatePair {
            a_plus: a,
            a_minus: -a,
        }
    }

    /// The `±e_y` pair of circular polarizations.
    pub fn y_pair() -> Self {
        StatePair::antipodal(BlochVector::e_y())
    }

    pub fn swapped(&self) -> Self {
        StatePair {
            a_plus: self.a_minus,
            a_minus: self.a_plus,
        }
    }

    pub fn is_antipodal(&self, tol: f64) -> bool {
        (self.a_plus.as_vector() + self.a_minus.as_vector()).amax() <= tol
    }

    pub fn distance(&self) -> f64 {
        trace_distance(&self.a_plus, &self.a_minus)
    }
}

/// `D_0, …, D_n` along the driven trajectory of both members.
pub fn trace_distance_series(p: &Protocol, sp: &Spectrum, pair: &StatePair, n: usize) -> Vec<f64> {
    averaged_maps(p, sp, n)
        .iter()
        .map(|m| trace_distance(&m.apply(&pair.a_plus), &m.apply(&pair.a_minus)))
        .collect()
}

/// Sum of the positive parts of consecutive differences.
pub fn positive_increments(distances: &[f64]) -> f64 {
    distances
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .sum()
}

/// BLP measure accumulated over the first `n` steps.
pub fn blp_accumulate(p: &Protocol, sp: &Spectrum, pair: &StatePair, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("BLP accumulation needs at least one step"));
    }
    Ok(positive_increments(&trace_distance_series(p, sp, pair, n)))
}

/// Trace distances `D_K` on the steady cycle, `K = 0, …, T − 1`.
pub fn cycle_distances(cycle: &AsymptoticCycle, pair: &StatePair) -> Vec<f64> {
    cycle
        .maps()
        .iter()
        .map(|m| trace_distance(&m.apply(&pair.a_plus), &m.apply(&pair.a_minus)))
        .collect()
}

/// `D_{K+1} − D_K` around the cycle, the last entry wrapping back to phase 0.
pub fn cycle_increments(cycle: &AsymptoticCycle, pair: &StatePair) -> Vec<f64> {
    let d = cycle_distances(cycle, pair);
    let t = d.len();
    (0..t).map(|k| d[(k + 1) % t] - d[k]).collect()
}

/// Asymptotic growth of the BLP measure per drive period.
pub fn asymptotic_blp_rate(cycle: &AsymptoticCycle, pair: &StatePair) -> f64 {
    cycle_increments(cycle, pair)
        .into_iter()
        .map(|x| x.max(0.0))
        .sum()
}

#[derive(Clone, Copy, Debug)]
pub struct OptimalPair {
    pub pair: StatePair,
    pub angles: SphereAngles,
    pub rate: f64,
    /// Largest minus smallest purity `(1 + |a_K|²)/2` of the `+` member over
    /// the cycle.
    pub purity_swing: f64,
}

fn antipodal_rate(cycle: &AsymptoticCycle, a: &Vector3<f64>) -> f64 {
    // Reflection symmetry: D_K = |Φ̃_K a|.
    let norms: Vec<f64> = cycle.maps().iter().map(|m| (m.matrix() * a).norm()).collect();
    let t = norms.len();
    (0..t).map(|k| (norms[(k + 1) % t] - norms[k]).max(0.0)).sum()
}

/// Number of grid starts for the antipodal-pair search.
pub const PAIR_SEARCH_STARTS: usize = 32;

/// Maximizes the asymptotic rate over antipodal pure-state pairs `±a`.
pub fn optimal_pair_search(cycle: &AsymptoticCycle) -> OptimalPair {
    let f = |a: &Vector3<f64>| antipodal_rate(cycle, &a.normalize());
    let opts = NelderMeadOptions::default();
    let best = fibonacci_points(PAIR_SEARCH_STARTS)
        .iter()
        .map(|s| local_search(&f, s, &opts))
        .fold(None, |acc: Option<crate::sphere::LocalMaximum>, m| match acc {
            Some(b) if b.value >= m.value => Some(b),
            _ => Some(m),
        })
        .expect("at least one start");
    let dir = best.direction.normalize();
    let a = BlochVector::from_vector(dir).expect("unit vector");
    let pair = StatePair::antipodal(a);
    let purities: Vec<f64> = cycle.apply(&a).iter().map(BlochVector::purity).collect();
    let hi = purities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = purities.iter().cloned().fold(f64::INFINITY, f64::min);
    OptimalPair {
        pair,
        angles: SphereAngles::from_direction(&dir),
        rate: asymptotic_blp_rate(cycle, &pair),
        purity_swing: hi - lo,
    }
}
