//! Cross-checks run by `nessim verify`.
//!
//! Each check compares two independent computations of the same quantity:
//! the harmonic-series average against direct quadrature over the phase, the
//! series product against explicit matrix products, and the steady-state maps
//! against long iteration.

use std::f64::consts::TAU;

use nalgebra::Matrix3;
use serde_json::{json, Value};

use nessim_core::asymptotics::asymptotic_cycle;
use nessim_core::dynamics::{averaged_maps, protocol_product, step_matrix_at};
use nessim_core::quadrature::GaussRule;
use nessim_core::{BlochMap, Experiment, Spectrum, TrigMatrix, TrigSeries};

use crate::format::num;
use crate::CliError;

const AVERAGE_TOLERANCE: f64 = 1e-10;
const PRODUCT_TOLERANCE: f64 = 1e-10;
const CONTRACTION_TOLERANCE: f64 = 1e-12;
/// Window mean of iterated maps over steps `[ITERATION_STEPS/2, ITERATION_STEPS)`
/// against the steady maps. The plain iterate converges only like `n^(-1/2)`,
/// the window mean much faster.
const ITERATION_STEPS: usize = 800;
const WINDOW_TOLERANCE: f64 = 1e-3;
const HERMITE_NODES: usize = 1000;
/// Harmonics with `h·s` above this average to less than `e^(−800)` and are
/// left out of the quadrature; the Hermite rule resolves everything below.
const HERMITE_CUT: f64 = 40.0;
const SAMPLE_PHASES: [f64; 5] = [0.0, 0.37, 1.9, 3.3, 5.8];

pub struct Check {
    name: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

pub struct Report {
    checks: Vec<Check>,
}

impl Report {
    pub fn failure(&self) -> Option<String> {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        (!failed.is_empty()).then(|| failed.join(", "))
    }

    pub fn to_json(&self, command: &str) -> Value {
        json!({
            "command": command,
            "pass": self.failure().is_none(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "value": num(c.value),
                "tolerance": num(c.tolerance),
                "pass": c.pass,
            })).collect::<Vec<_>>(),
        })
    }
}

fn quadrature_average(w: &TrigMatrix, sp: &Spectrum, hermite: &GaussRule) -> BlochMap {
    let h = w.max_harmonic();
    let m = if sp.is_fully_dephased() {
        // Equispaced points integrate harmonics below their count exactly.
        let n = 2 * h as usize + 2;
        (0..n)
            .map(|i| w.evaluate(TAU * i as f64 / n as f64))
            .fold(Matrix3::zeros(), |acc, x| acc + x)
            / n as f64
    } else if sp.s() == 0.0 {
        w.evaluate(sp.theta_bar())
    } else {
        let low = low_pass(w, (HERMITE_CUT / sp.s()) as u32);
        hermite
            .iter()
            .map(|(x, wt)| low.evaluate(sp.theta_bar() + sp.s() * x) * wt)
            .fold(Matrix3::zeros(), |acc, x| acc + x)
    };
    BlochMap::from_matrix(m)
}

fn low_pass(w: &TrigMatrix, max_h: u32) -> TrigMatrix {
    let cut = |i: usize, j: usize| {
        let mut s = TrigSeries::zero();
        for (h, c, d) in w.entry(i, j).terms().filter(|t| t.0 <= max_h) {
            s.add_term(h, c, d);
        }
        s
    };
    TrigMatrix::from_entries(std::array::from_fn(|i| std::array::from_fn(|j| cut(i, j))))
}

pub fn run(exp: &Experiment) -> Result<Report, CliError> {
    let p = &exp.protocol;
    let sp = &exp.spectrum;
    let t = p.period();
    let mut checks = Vec::new();

    let hermite = GaussRule::hermite(HERMITE_NODES)?;
    let mut lengths = vec![1, t, exp.n_steps.max(1)];
    lengths.dedup();
    for n in lengths {
        let w = protocol_product(p, n);
        let q = quadrature_average(&w, sp, &hermite);
        checks.push(Check::below(
            format!("average_vs_quadrature_n{n}"),
            w.gaussian_average(sp).max_abs_diff(&q),
            AVERAGE_TOLERANCE,
        ));

        let mut worst: f64 = 0.0;
        for &theta in &SAMPLE_PHASES {
            let direct = (1..=n).fold(Matrix3::identity(), |acc, j| {
                step_matrix_at(p.step_at(j), p.order(), theta) * acc
            });
            worst = worst.max((w.evaluate(theta) - direct).amax());
        }
        checks.push(Check::below(
            format!("series_vs_matrix_product_n{n}"),
            worst,
            PRODUCT_TOLERANCE,
        ));
    }

    let maps = averaged_maps(p, sp, ITERATION_STEPS + t);
    let excess = maps
        .iter()
        .map(|m| m.singular_values().max() - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::below("contraction", excess.max(0.0), CONTRACTION_TOLERANCE));

    let cycle = asymptotic_cycle(p, sp)?;
    let window = |end: usize| -> f64 {
        let (lo, hi) = (end / 2 / t, end / t);
        (0..t)
            .map(|k| {
                let mean = (lo..hi)
                    .map(|m| *maps[m * t + k].matrix())
                    .fold(Matrix3::zeros(), |a, x| a + x)
                    / (hi - lo) as f64;
                (mean - cycle.map(k).matrix()).amax()
            })
            .fold(0.0, f64::max)
    };
    checks.push(Check::below(
        format!("steady_maps_vs_window_mean_n{ITERATION_STEPS}"),
        window(ITERATION_STEPS),
        WINDOW_TOLERANCE,
    ));
    let direct = |end: usize| -> f64 {
        let base = end - end % t;
        (0..t)
            .map(|k| maps[base + k].max_abs_diff(cycle.map(k)))
            .fold(0.0, f64::max)
    };
    let (early, late) = (direct(ITERATION_STEPS / 4), direct(ITERATION_STEPS));
    checks.push(Check {
        name: format!(
            "steady_maps_iteration_error_decreases_n{}_to_n{ITERATION_STEPS}",
            ITERATION_STEPS / 4
        ),
        value: late,
        tolerance: early,
        pass: late <= early,
    });

    Ok(Report { checks })
}
