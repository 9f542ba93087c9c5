//! Maximization of functions of a unit vector.
//!
//! Each search runs in a local chart whose equator passes through the current
//! point, so the spherical-coordinate singularities never sit near an iterate.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::bloch::BlochVector;
use crate::error::{Error, Result};

/// Polar angle `theta ∈ [0, π]` and azimuth `phi ∈ [0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereAngles {
    theta: f64,
    phi: f64,
}

impl SphereAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !(0.0..TAU).contains(&phi) {
            return Err(Error::domain(format!(
                "sphere angles out of range: theta = {theta}, phi = {phi}"
            )));
        }
        Ok(SphereAngles { theta, phi })
    }

    /// Angles of the direction of `v` (which need not be normalized).
    pub fn from_direction(v: &Vector3<f64>) -> Self {
        let n = v.norm();
        let theta = (v.z / n).clamp(-1.0, 1.0).acos();
        let mut phi = v.y.atan2(v.x);
        if phi < 0.0 {
            phi += TAU;
        }
        if phi >= TAU {
            phi = 0.0;
        }
        SphereAngles { theta, phi }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `(cos φ sin θ, sin φ sin θ, cos θ)`.
    pub fn to_vector(&self) -> Vector3<f64> {
        spherical(self.theta, self.phi)
    }

    pub fn to_bloch(&self) -> BlochVector {
        BlochVector::from_vector(self.to_vector()).expect("unit vector")
    }
}

fn spherical(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(cp * st, sp * st, ct)
}

/// Orthonormal frame mapping the local point `(θ, φ) = (π/2, 0)` to `center`.
#[derive(Clone, Copy, Debug)]
pub struct LocalChart {
    frame: Matrix3<f64>,
}

impl LocalChart {
    pub fn centered_at(center: &Vector3<f64>) -> Self {
        let c = center.normalize();
        let helper = if c.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e2 = (helper - c * c.dot(&helper)).normalize();
        let e3 = c.cross(&e2);
        LocalChart {
            frame: Matrix3::from_columns(&[c, e2, e3]),
        }
    }

    pub fn to_global(&self, local: &Vector2<f64>) -> Vector3<f64> {
        self.frame * spherical(local.x, local.y)
    }

    pub const ORIGIN: Vector2<f64> = Vector2::new(FRAC_PI_2, 0.0);

    /// Whether a local point has drifted within `margin` of a chart pole.
    pub fn near_pole(local: &Vector2<f64>, margin: f64) -> bool {
        let t = local.x.rem_euclid(TAU);
        let t = if t > PI { TAU - t } else { t };
        t < margin || PI - t < margin
    }
}

/// `n` nearly uniform unit vectors (Fibonacci lattice).
pub fn fibonacci_points(n: usize) -> Vec<Vector3<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let az = golden * i as f64;
            Vector3::new(r * az.cos(), r * az.sin(), z)
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub x_tolerance: f64,
    pub f_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.1,
            x_tolerance: 1e-11,
            f_tolerance: 1e-16,
            max_iterations: 4000,
        }
    }
}

/// Nelder–Mead maximization in two variables. Returns the best vertex and its
/// value.
pub fn nelder_mead_max<F>(f: F, start: Vector2<f64>, opts: &NelderMeadOptions) -> (Vector2<f64>, f64)
where
    F: Fn(&Vector2<f64>) -> f64,
{
    // minimize −f
    let g = |x: &Vector2<f64>| -f(x);
    let mut simplex = [
        start,
        start + Vector2::new(opts.initial_step, 0.0),
        start + Vector2::new(0.0, opts.initial_step),
    ];
    let mut values = simplex.map(|x| g(&x));

    for _ in 0..opts.max_iterations {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.map(|i| simplex[i]);
        values = idx.map(|i| values[i]);

        let diameter = (simplex[1] - simplex[0])
            .norm()
            .max((simplex[2] - simplex[0]).norm());
        if diameter < opts.x_tolerance || (values[2] - values[0]).abs() < opts.f_tolerance {
            break;
        }

        let centroid = (simplex[0] + simplex[1]) / 2.0;
        let reflected = centroid + (centroid - simplex[2]);
        let fr = g(&reflected);
        if fr < values[0] {
            let expanded = centroid + 2.0 * (centroid - simplex[2]);
            let fe = g(&expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let (contracted, fc) = if fr < values[2] {
                let c = centroid + 0.5 * (reflected - centroid);
                (c, g(&c))
            } else {
                let c = centroid + 0.5 * (simplex[2] - centroid);
                (c, g(&c))
            };
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
                    values[i] = g(&simplex[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("three vertices");
    (simplex[best], -values[best])
}

/// Central-difference gradient.
pub fn gradient<F>(f: &F, x: &Vector2<f64>, h: f64) -> Vector2<f64>
where
    F: Fn(&Vector2<f64>) -> f64,
{
    let dx = Vector2::new(h, 0.0);
    let dy = Vector2::new(0.0, h);
    Vector2::new(
        (f(&(x + dx)) - f(&(x - dx))) / (2.0 * h),
        (f(&(x + dy)) - f(&(x - dy))) / (2.0 * h),
    )
}

/// Central-difference Hessian.
pub fn hessian<F>(f: &F, x: &Vector2<f64>, h: f64) -> Matrix2<f64>
where
    F: Fn(&Vector2<f64>) -> f64,
{
    let e = [Vector2::new(h, 0.0), Vector2::new(0.0, h)];
    let f0 = f(x);
    let mut out = Matrix2::zeros();
    for i in 0..2 {
        out[(i, i)] = (f(&(x + e[i])) - 2.0 * f0 + f(&(x - e[i]))) / (h * h);
    }
    let cross = (f(&(x + e[0] + e[1])) - f(&(x + e[0] - e[1])) - f(&(x - e[0] + e[1]))
        + f(&(x - e[0] - e[1])))
        / (4.0 * h * h);
    out[(0, 1)] = cross;
    out[(1, 0)] = cross;
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    NegativeDefinite,
    NegativeSemidefinite,
    Indefinite,
}

impl Definiteness {
    /// Classifies symmetric-matrix eigenvalues with absolute tolerance `tol`.
    pub fn classify(eigenvalues: &[f64], tol: f64) -> Self {
        if eigenvalues.iter().all(|&l| l < -tol) {
            Definiteness::NegativeDefinite
        } else if eigenvalues.iter().all(|&l| l <= tol) {
            Definiteness::NegativeSemidefinite
        } else {
            Definiteness::Indefinite
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Definiteness::NegativeDefinite => "negative definite",
            Definiteness::NegativeSemidefinite => "negative semidefinite",
            Definiteness::Indefinite => "indefinite",
        }
    }
}

/// Result of a local search started from one direction.
#[derive(Clone, Copy, Debug)]
pub struct LocalMaximum {
    pub direction: Vector3<f64>,
    pub value: f64,
}

/// Margin to a chart pole that triggers a re-centred restart.
pub const POLE_MARGIN: f64 = 1e-3;

/// Nelder–Mead from `start`, re-centring the chart whenever the simplex
/// approaches one of its poles.
pub fn local_search<F>(f: &F, start: &Vector3<f64>, opts: &NelderMeadOptions) -> LocalMaximum
where
    F: Fn(&Vector3<f64>) -> f64,
{
    let mut center = start.normalize();
    let mut best = LocalMaximum {
        direction: center,
        value: f(&center),
    };
    // Two full passes: the second restarts at the first optimum with a fresh
    // simplex, which removes most premature collapses.
    for _ in 0..2 {
        for _restart in 0..8 {
            let chart = LocalChart::centered_at(&center);
            let g = |x: &Vector2<f64>| f(&chart.to_global(x));
            let (x, v) = nelder_mead_max(g, LocalChart::ORIGIN, opts);
            let dir = chart.to_global(&x);
            if v >= best.value {
                best = LocalMaximum { direction: dir, value: v };
            }
            center = dir;
            if !LocalChart::near_pole(&x, POLE_MARGIN) {
                break;
            }
        }
        center = best.direction;
    }
    best
}

/// Newton refinement of a smooth maximum in the chart centred on the point.
/// Returns the refined point, its value and the final gradient norm.
pub fn newton_polish<F>(
    f: &F,
    start: &Vector3<f64>,
    gradient_step: f64,
    gradient_tolerance: f64,
    max_iterations: usize,
) -> Result<(Vector3<f64>, f64, f64)>
where
    F: Fn(&Vector3<f64>) -> f64,
{
    let mut point = start.normalize();
    let mut grad_norm = f64::INFINITY;
    for _ in 0..max_iterations {
        let chart = LocalChart::centered_at(&point);
        let g = |x: &Vector2<f64>| f(&chart.to_global(x));
        let x0 = LocalChart::ORIGIN;
        let grad = gradient(&g, &x0, gradient_step);
        grad_norm = grad.norm();
        if grad_norm < gradient_tolerance {
            return Ok((point, f(&point), grad_norm));
        }
        let h = hessian(&g, &x0, 1e-4);
        let newton = h.try_inverse().map(|hi| -(hi * grad));
        let f0 = g(&x0);
        let mut step = match newton {
            Some(s) if h.symmetric_eigenvalues().iter().all(|&l| l < 0.0) => s,
            _ => grad * 1e-2,
        };
        let mut accepted = false;
        for _ in 0..40 {
            if g(&(x0 + step)) >= f0 - 1e-15 {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        point = chart.to_global(&(x0 + step));
    }
    Err(Error::Stationarity {
        gradient_norm: grad_norm,
        iterations: max_iterations,
    })
}
