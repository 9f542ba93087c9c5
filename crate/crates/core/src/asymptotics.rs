//! Non-equilibrium steady states of the periodically driven dynamics.
//!
//! For a fixed environment phase the one-period map `W` is a rotation. The
//! generating function `H(z) = Σ zⁿ Wⁿ A = (1 − zW)⁻¹ A` has a simple pole at
//! `z = 1`, and `lim_{z→1} (1 − z) H(z)` is the projector onto the rotation
//! axis applied to `A`. Averaging that projector over the phase distribution
//! gives the steady-state map for each phase `K` of the drive.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bloch::{BlochMap, BlochVector, Protocol, Spectrum};
use crate::dynamics::{propagate, step_matrix};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::trig::TrigMatrix;

/// `|tr W − 3|` below which a rotation is treated as the identity.
pub const IDENTITY_TRACE_THRESHOLD: f64 = 1e-9;
/// Distance of the rotation angle from π below which the axis is read from
/// the symmetric part instead of the antisymmetric part.
pub const NEAR_PI_THRESHOLD: f64 = 1e-4;
/// Entrywise change between successive quadrature refinements that counts
/// as converged.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;
/// Half-width of the Gaussian integration window in units of `s`.
pub const GAUSSIAN_WINDOW: f64 = 8.0;
pub const MIN_NODES: usize = 64;
pub const MAX_NODES: usize = 1 << 16;
const PANEL_ORDER: usize = 16;

/// Distance to the limit cycle below which a trajectory counts as settled.
pub const SETTLED_DISTANCE: f64 = 1e-2;

const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
const POLE_TOLERANCE: f64 = 1e-13;

/// `(I − zW)⁻¹` from the adjugate and determinant.
pub fn resolvent(w: &Matrix3<f64>, z: Complex64) -> Result<Matrix3<Complex64>> {
    let a: Matrix3<Complex64> =
        Matrix3::identity() - w.map(|x| Complex64::new(x, 0.0)) * z;
    let det = a.determinant();
    if det.norm() <= POLE_TOLERANCE {
        return Err(Error::Pole { z, det: det.norm() });
    }
    Ok(adjugate(&a) / det)
}

fn adjugate(a: &Matrix3<Complex64>) -> Matrix3<Complex64> {
    let m = |i: usize, j: usize| a[(i, j)];
    // transpose of the cofactor matrix
    let cof = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0)
    };
    Matrix3::from_fn(|i, j| cof(j, i))
}

fn check_rotation(w: &Matrix3<f64>) -> Result<()> {
    let dev = (w.transpose() * w - Matrix3::identity()).amax();
    let det = w.determinant();
    if !(dev <= ORTHOGONALITY_TOLERANCE && (det - 1.0).abs() <= ORTHOGONALITY_TOLERANCE) {
        return Err(Error::domain(format!(
            "expected a rotation: |WᵀW − I| = {dev:e}, det W = {det}"
        )));
    }
    Ok(())
}

/// `2 sin φ · u` for a rotation by `φ` about `u`.
fn axial_vector(w: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        w[(2, 1)] - w[(1, 2)],
        w[(0, 2)] - w[(2, 0)],
        w[(1, 0)] - w[(0, 1)],
    )
}

fn outer_normalized(v: &Vector3<f64>) -> Matrix3<f64> {
    v * v.transpose() / v.norm_squared()
}

/// Axis projector `u uᵀ`, or `None` when `W` is within the identity threshold.
fn axis_projector(w: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let trace = w.trace();
    if (trace - 3.0).abs() < IDENTITY_TRACE_THRESHOLD {
        return None;
    }
    let cos_phi = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0);
    let phi = cos_phi.acos();
    if std::f64::consts::PI - phi < NEAR_PI_THRESHOLD {
        // (W + Wᵀ)/2 − cos φ·I = (1 − cos φ) u uᵀ: its largest column is ∝ u.
        let sym = 0.5 * (w + w.transpose()) - Matrix3::identity() * cos_phi;
        let col = (0..3)
            .map(|j| sym.column(j).into_owned())
            .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
            .expect("three columns");
        Some(outer_normalized(&col))
    } else {
        Some(outer_normalized(&axial_vector(w)))
    }
}

/// Residue of `(I − zW)⁻¹` at `z = 1` for a rotation `W`: the projector onto
/// its fixed axis, or the identity when `W` is (numerically) the identity.
pub fn abel_limit(w: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    check_rotation(w)?;
    Ok(axis_projector(w).unwrap_or_else(Matrix3::identity))
}

/// Axis projector extended by continuity through isolated identity points.
///
/// `dw` is `dW/dθ` at the same phase. Near the identity the axis is read from
/// the small antisymmetric part of `W` while it is resolvable, otherwise from
/// the angular velocity `W′Wᵀ`.
fn continued_axis_projector(w: &Matrix3<f64>, dw: impl FnOnce() -> Matrix3<f64>) -> Matrix3<f64> {
    if let Some(p) = axis_projector(w) {
        return p;
    }
    let v = axial_vector(w);
    if v.norm() >= 1e-7 {
        return outer_normalized(&v);
    }
    let omega = axial_vector(&(dw() * w.transpose()));
    if omega.norm() > 1e-12 {
        outer_normalized(&omega)
    } else {
        Matrix3::identity()
    }
}

/// Applies `cyc` `k` times to a factor list written in product order
/// (leftmost factor first): `cyc(W_T ⋯ W_1) = W_1 W_T ⋯ W_2`.
pub fn cyc_shift<T: Clone>(factors: &[T], k: usize) -> Result<Vec<T>> {
    let t = factors.len();
    if k >= t.max(1) {
        return Err(Error::domain(format!("phase {k} not in [0, {t})")));
    }
    let mut out = factors.to_vec();
    out.rotate_right(k);
    Ok(out)
}

/// The recursion `H_{mT+K} = cyc^K(W_T ⋯ W_1)^m W_K ⋯ W_1` with exact
/// phase-dependent factors.
#[derive(Clone, Debug)]
pub struct PeriodicRecursion {
    /// `W_1, …, W_T` in application order.
    factors: Vec<TrigMatrix>,
    phase: usize,
}

impl PeriodicRecursion {
    pub fn new(factors: Vec<TrigMatrix>, phase: usize) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::domain("periodic recursion needs at least one factor"));
        }
        if phase >= factors.len() {
            return Err(Error::domain(format!(
                "phase {phase} not in [0, {})",
                factors.len()
            )));
        }
        Ok(PeriodicRecursion { factors, phase })
    }

    pub fn from_protocol(p: &Protocol, phase: usize) -> Result<Self> {
        let factors = p
            .steps()
            .iter()
            .map(|s| step_matrix(s, p.order()))
            .collect();
        PeriodicRecursion::new(factors, phase)
    }

    pub fn period(&self) -> usize {
        self.factors.len()
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    /// `cyc^K(W_T ⋯ W_1)`.
    pub fn period_product(&self) -> TrigMatrix {
        let product_order: Vec<&TrigMatrix> = self.factors.iter().rev().collect();
        let shifted = cyc_shift(&product_order, self.phase).expect("phase checked on construction");
        shifted
            .iter()
            .fold(TrigMatrix::identity(), |acc, w| acc.compose(w))
    }

    /// `W_K ⋯ W_1` (identity for `K = 0`).
    pub fn prefix(&self) -> TrigMatrix {
        self.factors[..self.phase]
            .iter()
            .fold(TrigMatrix::identity(), |acc, w| w.compose(&acc))
    }
}

/// Steady-state maps for every phase of one drive period.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticCycle {
    maps: Vec<BlochMap>,
    y_eigenvalues: Vec<f64>,
}

impl AsymptoticCycle {
    /// Builds a cycle from given maps; `y_eigenvalues` are their `(y, y)` entries.
    pub fn from_maps(maps: Vec<BlochMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::domain("asymptotic cycle needs at least one map"));
        }
        let y_eigenvalues = maps.iter().map(|m| m.matrix()[(1, 1)]).collect();
        Ok(AsymptoticCycle { maps, y_eigenvalues })
    }

    pub fn period(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[BlochMap] {
        &self.maps
    }

    pub fn map(&self, k: usize) -> &BlochMap {
        &self.maps[k]
    }

    pub fn y_eigenvalues(&self) -> &[f64] {
        &self.y_eigenvalues
    }

    /// Cycle points `Φ̃_K a` for `K = 0, …, T − 1`.
    pub fn apply(&self, a: &BlochVector) -> Vec<BlochVector> {
        self.maps.iter().map(|m| m.apply(a)).collect()
    }

    /// Largest magnitude of any entry coupling `y` to `x` or `z`.
    pub fn y_coupling(&self) -> f64 {
        self.maps
            .iter()
            .flat_map(|m| {
                let m = m.matrix();
                [m[(0, 1)], m[(2, 1)], m[(1, 0)], m[(1, 2)]]
            })
            .fold(0.0, |acc, x| acc.max(x.abs()))
    }
}

/// Weighted sum of `f` over the nodes, evaluated in parallel and reduced in
/// node order.
fn weighted_sum<F>(nodes: &[(f64, f64)], f: &F) -> Matrix3<f64>
where
    F: Fn(f64) -> Matrix3<f64> + Sync,
{
    let terms: Vec<Matrix3<f64>> = nodes.par_iter().map(|&(x, w)| f(x) * w).collect();
    terms.iter().fold(Matrix3::zeros(), |acc, t| acc + t)
}

/// Integrates `f` against the phase distribution with composite
/// Gauss–Legendre panels, doubling the node count until successive results
/// agree to [`QUADRATURE_TOLERANCE`].
pub fn spectral_integral<F>(sp: &Spectrum, f: F) -> Result<Matrix3<f64>>
where
    F: Fn(f64) -> Matrix3<f64> + Sync,
{
    let rule = GaussRule::legendre(PANEL_ORDER)?;
    let (a, b, density): (f64, f64, Box<dyn Fn(f64) -> f64 + Sync>) = if sp.is_fully_dephased() {
        let tau = std::f64::consts::TAU;
        (0.0, tau, Box::new(move |_| 1.0 / tau))
    } else {
        let (mean, s) = (sp.theta_bar(), sp.s());
        let norm = 1.0 / ((std::f64::consts::TAU).sqrt() * s);
        (
            mean - GAUSSIAN_WINDOW * s,
            mean + GAUSSIAN_WINDOW * s,
            Box::new(move |x: f64| {
                let u = (x - mean) / s;
                norm * (-0.5 * u * u).exp()
            }),
        )
    };
    let integrand = |x: f64| f(x) * density(x);

    let mut panels = MIN_NODES / PANEL_ORDER;
    let mut previous = weighted_sum(&rule.composite(a, b, panels), &integrand);
    let mut last_change = f64::INFINITY;
    while panels * PANEL_ORDER < MAX_NODES {
        panels *= 2;
        let current = weighted_sum(&rule.composite(a, b, panels), &integrand);
        last_change = (current - previous).amax();
        previous = current;
        if last_change < QUADRATURE_TOLERANCE {
            return Ok(previous);
        }
    }
    Err(Error::Quadrature {
        nodes: panels * PANEL_ORDER,
        last_change,
        tolerance: QUADRATURE_TOLERANCE,
    })
}

/// Steady-state map `Φ̃_{mT+K}`: the phase average of the axis projector of
/// the cyclically shifted period map, times the prefix `W_K ⋯ W_1`.
pub fn asymptotic_map(p: &Protocol, sp: &Spectrum, phase: usize) -> Result<BlochMap> {
    let rec = PeriodicRecursion::from_protocol(p, phase)?;
    let period = rec.period_product();
    let period_rate = period.derivative();
    let prefix = rec.prefix();

    if !sp.is_fully_dephased() && sp.s() == 0.0 {
        let theta = sp.theta_bar();
        let w = period.evaluate(theta);
        let proj = axis_projector(&w).unwrap_or_else(Matrix3::identity);
        return Ok(BlochMap::from_matrix(proj * prefix.evaluate(theta)));
    }

    let m = spectral_integral(sp, |theta| {
        let w = period.evaluate(theta);
        continued_axis_projector(&w, || period_rate.evaluate(theta)) * prefix.evaluate(theta)
    })?;
    Ok(BlochMap::from_matrix(m))
}

pub fn asymptotic_cycle(p: &Protocol, sp: &Spectrum) -> Result<AsymptoticCycle> {
    let maps = (0..p.period())
        .map(|k| asymptotic_map(p, sp, k))
        .collect::<Result<Vec<_>>>()?;
    AsymptoticCycle::from_maps(maps)
}

/// The `T` states the trajectory from `a0` approaches, one per drive phase.
pub fn limit_cycle(p: &Protocol, sp: &Spectrum, a0: &BlochVector) -> Result<Vec<BlochVector>> {
    Ok(asymptotic_cycle(p, sp)?.apply(a0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceProfile {
    /// `|a_{mT+K} − Φ̃_K a0|` for `m = 0, …, m_max`.
    pub distances: Vec<f64>,
    /// Whether the trajectory settles onto the limit cycle: the last third of
    /// the profile stays below [`SETTLED_DISTANCE`] and below the first third.
    pub converged: bool,
}

pub fn convergence_profile(
    p: &Protocol,
    sp: &Spectrum,
    a0: &BlochVector,
    phase: usize,
    m_max: usize,
) -> Result<ConvergenceProfile> {
    let t = p.period();
    let target = asymptotic_map(p, sp, phase)?.apply(a0);
    let traj = propagate(p, sp, m_max * t + phase, a0);
    let distances: Vec<f64> = (0..=m_max)
        .map(|m| (traj[m * t + phase].as_vector() - target.as_vector()).norm())
        .collect();
    let third = (distances.len() / 3).max(1);
    let head = distances[..third].iter().cloned().fold(0.0, f64::max);
    let tail = distances[distances.len() - third..]
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let converged = tail < SETTLED_DISTANCE && tail <= head;
    Ok(ConvergenceProfile {
        distances,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Rotation3, Unit};

    fn rot(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
        Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
    }

    #[test]
    fn resolvent_of_identity_is_geometric_sum() {
        let r = resolvent(&Matrix3::identity(), Complex64::new(0.5, 0.0)).unwrap();
        let expected = Matrix3::identity().map(|x: f64| Complex64::new(2.0 * x, 0.0));
        assert!((r - expected).iter().all(|d| d.norm() < 1e-15));
    }

    #[test]
    fn resolvent_pole_at_one() {
        let w = rot(Vector3::new(1.0, 2.0, 0.5), 0.8);
        assert!(matches!(
            resolvent(&w, Complex64::new(1.0, 0.0)),
            Err(Error::Pole { .. })
        ));
        // det(I − zW) vanishes linearly as z → 1
        let dets: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|eps| {
                let a = Matrix3::identity() - w * (1.0 - eps);
                a.determinant() / eps
            })
            .collect();
        assert_abs_diff_eq!(dets[1], dets[2], epsilon = 1e-2 * dets[2].abs());
        assert!(dets[2].abs() > 0.1);
    }

    #[test]
    fn abel_limit_of_z_rotation() {
        let w = rot(Vector3::z(), std::f64::consts::FRAC_PI_2);
        let p = abel_limit(&w).unwrap();
        let expected = Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 1.0));
        assert!((p - expected).amax() < 1e-15);
        assert_eq!(abel_limit(&Matrix3::identity()).unwrap(), Matrix3::identity());
    }

    #[test]
    fn abel_limit_near_half_turn() {
        let axis = Vector3::new(0.3, -0.4, 0.8).normalize();
        for angle in [std::f64::consts::PI, std::f64::consts::PI - 5e-5, std::f64::consts::PI - 2e-4] {
            let p = abel_limit(&rot(axis, angle)).unwrap();
            assert!((p - axis * axis.transpose()).amax() < 1e-10, "angle {angle}");
        }
    }

    #[test]
    fn abel_limit_rejects_non_rotation() {
        assert!(abel_limit(&(Matrix3::identity() * 0.9)).is_err());
        assert!(abel_limit(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))).is_err());
    }

    #[test]
    fn cyc_shift_rotates_rightmost_factor_to_front() {
        let f = ['A', 'B', 'C'];
        assert_eq!(cyc_shift(&f, 0).unwrap(), vec!['A', 'B', 'C']);
        assert_eq!(cyc_shift(&f, 1).unwrap(), vec!['C', 'A', 'B']);
        assert_eq!(cyc_shift(&f, 2).unwrap(), vec!['B', 'C', 'A']);
        assert!(cyc_shift(&f, 3).is_err());
    }

    #[test]
    fn continuity_through_identity_point() {
        // W(θ) = R_z(2θ)·R_x(3θ) is the identity at θ = 0; the projector just
        // off that point must match the one at it.
        let w = |t: f64| rot(Vector3::z(), 2.0 * t) * rot(Vector3::x(), 3.0 * t);
        let dw = |t: f64| (w(t + 1e-6) - w(t - 1e-6)) / 2e-6;
        let at_zero = continued_axis_projector(&w(0.0), || dw(0.0));
        let nearby = continued_axis_projector(&w(1e-3), || dw(1e-3));
        assert!((at_zero - nearby).amax() < 5e-3);
        let tiny = continued_axis_projector(&w(1e-9), || dw(1e-9));
        assert!((at_zero - tiny).amax() < 1e-6);
    }

    #[test]
    fn recursion_prefix_and_period() {
        let p = Protocol::uniform_eta(0.3, &[3, 2, 1]).unwrap();
        let rec = PeriodicRecursion::from_protocol(&p, 2).unwrap();
        let theta = 0.41;
        let w: Vec<Matrix3<f64>> = p
            .steps()
            .iter()
            .map(|s| crate::dynamics::step_matrix_at(s, p.order(), theta))
            .collect();
        let expected_period = w[1] * w[0] * w[2];
        let expected_prefix = w[1] * w[0];
        assert!((rec.period_product().evaluate(theta) - expected_period).amax() < 1e-13);
        assert!((rec.prefix().evaluate(theta) - expected_prefix).amax() < 1e-13);
        // H_{mT+K} = cyc^K(W_T⋯W_1)^m W_K⋯W_1 = (W_T⋯W_1)^m advanced by K steps
        let full = w[2] * w[1] * w[0];
        let lhs = expected_period * expected_period * expected_prefix;
        let rhs = expected_prefix * full * full;
        assert!((lhs - rhs).amax() < 1e-13);
    }

    #[test]
    fn recursion_phase_out_of_range() {
        let p = Protocol::uniform_eta(0.5, &[3, 2]).unwrap();
        assert!(PeriodicRecursion::from_protocol(&p, 2).is_err());
        let sp = Spectrum::new(0.0, 0.4).unwrap();
        assert!(asymptotic_map(&p, &sp, 2).is_err());
    }

    #[test]
    fn zero_initial_state_has_zero_cycle() {
        let p = Protocol::uniform_eta(0.5, &[3, 2]).unwrap();
        let sp = Spectrum::new(0.0, 0.4).unwrap();
        let cyc = limit_cycle(&p, &sp, &BlochVector::ZERO).unwrap();
        assert_eq!(cyc.len(), 2);
        assert!(cyc.iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn unitary_profile_is_flagged() {
        let p = Protocol::uniform_eta(0.5, &[3, 2]).unwrap();
        let sp = Spectrum::new(0.3, 0.0).unwrap();
        let prof = convergence_profile(&p, &sp, &BlochVector::e_z(), 0, 30).unwrap();
        assert!(!prof.converged);
    }
}
