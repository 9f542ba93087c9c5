//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nessim_core::asymptotics::{abel_limit, asymptotic_cycle};
use nessim_core::config::calibrate;
use nessim_core::dynamics::{averaged_maps, protocol_product};
use nessim_core::nonmarkov::{
    asymptotic_blp_rate, blp_accumulate, cycle_increments, trace_distance, trace_distance_povm,
    StatePair,
};
use nessim_core::quadrature::GaussRule;
use nessim_core::reference::{self, THREE_CONTROL_Y_PAIR_RATE};
use nessim_core::sphere::{Definiteness, SphereAngles};
use nessim_core::visibility::{maximize_visibility, volume_two, volume_two_closed_form};
use nessim_core::{
    AsymptoticCycle, BlochMap, BlochVector, ControlStep, Protocol, Spectrum, StepOrder, TrigMatrix,
    TrigSeries,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn two_controls() -> Protocol {
    Protocol::uniform_eta(0.5, &[3, 2]).unwrap()
}

fn three_controls() -> Protocol {
    Protocol::uniform_eta(0.5, &[3, 2, 1]).unwrap()
}

fn calibrated() -> Spectrum {
    calibrate(&two_controls(), 0.0).unwrap().spectrum
}

/// Largest entrywise gap between the steady maps and the iterated maps at
/// the step count `≈ target` of matching phase, for every phase.
fn iteration_gap(p: &Protocol, cycle: &AsymptoticCycle, maps: &[BlochMap], target: usize) -> f64 {
    let t = p.period();
    let base = target - target % t;
    (0..t)
        .map(|k| maps[base + k].max_abs_diff(cycle.map(k)))
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let s_cal = calibrated().s();
    let mut cases: Vec<(String, Protocol, Spectrum)> = vec![
        ("two_controls".into(), two_controls(), Spectrum::new(0.0, s_cal).unwrap()),
        ("three_controls".into(), three_controls(), Spectrum::new(0.0, s_cal).unwrap()),
    ];
    for i in 0..5 {
        let t = rng.random_range(1..=4);
        let steps: Vec<ControlStep> = (0..t)
            .map(|_| {
                let eta = [0.3, 0.5, 0.7][rng.random_range(0..3)];
                ControlStep::new(eta, rng.random_range(1..=4)).unwrap()
            })
            .collect();
        let s = [0.3, 0.6][rng.random_range(0..2)];
        let label = format!(
            "random{i}(k={:?},eta={:?},s={s})",
            steps.iter().map(|x| x.k()).collect::<Vec<_>>(),
            steps.iter().map(|x| x.eta()).collect::<Vec<_>>()
        );
        cases.push((label, Protocol::new(steps).unwrap(), Spectrum::new(0.0, s).unwrap()));
    }

    let checkpoints = [50, 100, 200];
    let mut worst: f64 = 0.0;
    let mut all_decreasing = true;
    let mut lines = Vec::new();
    for (label, p, sp) in &cases {
        let cycle = asymptotic_cycle(p, sp).unwrap();
        let maps = averaged_maps(p, sp, 200 + p.period());
        let gaps: Vec<f64> = checkpoints
            .iter()
            .map(|&n| iteration_gap(p, &cycle, &maps, n))
            .collect();
        let decreasing = gaps.windows(2).all(|w| w[1] <= w[0]);
        all_decreasing &= decreasing;
        worst = worst.max(gaps[2]);
        lines.push(format!(
            "{label}: gap@50={:.2e} @100={:.2e} @200={:.2e}{}",
            gaps[0],
            gaps[1],
            gaps[2],
            if decreasing { "" } else { " (not decreasing)" }
        ));
    }
    outcome(
        worst <= 1e-4 && all_decreasing,
        format!("max gap at ~200 steps {worst:.3e} (tol 1e-4); {}", lines.join("; ")),
    )
}

/// Nonzero reference entries other than the calibration anchor.
fn reference_gap(computed: &AsymptoticCycle, want: &AsymptoticCycle, skip_anchor: bool) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (k, (m, r)) in computed.maps().iter().zip(want.maps()).enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let w = r.matrix()[(i, j)];
                if w == 0.0 || (skip_anchor && k == 0 && i == 1 && j == 1) {
                    continue;
                }
                count += 1;
                worst = worst.max((m.matrix()[(i, j)] - w).abs());
            }
        }
    }
    (worst, count)
}

fn criterion_2() -> Outcome {
    let sp = calibrated();
    let want = reference::two_control_cycle();
    let mut report = Vec::new();
    let mut best = (f64::INFINITY, StepOrder::PhaseAfterRotation);
    for order in [StepOrder::PhaseAfterRotation, StepOrder::RotationAfterPhase] {
        let c = asymptotic_cycle(&two_controls().with_order(order), &sp).unwrap();
        let (gap, n) = reference_gap(&c, &want, true);
        report.push(format!("{}: {n} entries, max gap {gap:.3e}", order.flag()));
        if gap < best.0 {
            best = (gap, order);
        }
        if order == StepOrder::PhaseAfterRotation && gap <= 2e-3 {
            break;
        }
    }
    outcome(
        best.0 <= 2e-3,
        format!(
            "calibrated s = {:.9}; {}; best order {}",
            sp.s(),
            report.join(", "),
            best.1.flag()
        ),
    )
}

fn criterion_3() -> Outcome {
    let sp = calibrated();
    let c = asymptotic_cycle(&three_controls(), &sp).unwrap();
    let (gap, n) = reference_gap(&c, &reference::three_control_cycle(), false);
    let y = c.y_eigenvalues();
    outcome(
        gap <= 5e-3,
        format!(
            "{n} entries, max gap {gap:.3e} (tol 5e-3); y eigenvalues {:.7} {:.6} {:.7}",
            y[0], y[1], y[2]
        ),
    )
}

fn criterion_4() -> Outcome {
    let sp = calibrated();
    let p = three_controls();
    let pair = StatePair::y_pair();
    let c = asymptotic_cycle(&p, &sp).unwrap();
    let inc = cycle_increments(&c, &pair);
    let signs_ok = inc[0] > 0.0 && inc[1] < 0.0 && inc[2] > 0.0;
    let rate = asymptotic_blp_rate(&c, &pair);
    let rate_rel = (rate - THREE_CONTROL_Y_PAIR_RATE).abs() / THREE_CONTROL_Y_PAIR_RATE;

    // Least-squares slope of the accumulated measure at cycle boundaries.
    let cycles = 60;
    let m: Vec<f64> = (1..=cycles).map(|x| x as f64).collect();
    let b: Vec<f64> = (1..=cycles)
        .map(|x| blp_accumulate(&p, &sp, &pair, 3 * x).unwrap())
        .collect();
    let (mx, mb) = (m.iter().sum::<f64>() / cycles as f64, b.iter().sum::<f64>() / cycles as f64);
    let slope = m.iter().zip(&b).map(|(x, y)| (x - mx) * (y - mb)).sum::<f64>()
        / m.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let slope_rel = (slope - rate).abs() / rate;
    outcome(
        signs_ok && rate_rel <= 0.10 && slope_rel <= 0.05,
        format!(
            "increments ({:+.6}, {:+.6}, {:+.6}); rate {rate:.7} vs {THREE_CONTROL_Y_PAIR_RATE} (rel {rate_rel:.2e}, tol 0.1); \
             60-cycle slope {slope:.7} (rel to rate {slope_rel:.2e}, tol 0.05); total {:.5}",
            inc[0], inc[1], inc[2], b[cycles - 1]
        ),
    )
}

fn criterion_5() -> Outcome {
    let c = asymptotic_cycle(&two_controls(), &calibrated()).unwrap();
    let (a, b) = (c.map(0).matrix(), c.map(1).matrix());
    let swap = [(0, 0, 2, 0), (0, 2, 2, 2), (2, 0, 0, 0), (2, 2, 0, 2)]
        .iter()
        .map(|&(i, j, si, sj)| (b[(i, j)] - a[(si, sj)]).abs())
        .fold((a[(1, 1)] - b[(1, 1)]).abs(), f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let norm_gap = (0..100)
        .map(|_| {
            let phi: f64 = rng.random_range(0.0..TAU);
            let r: f64 = rng.random_range(0.0..=1.0);
            let v = Vector3::new(r * phi.cos(), 0.0, r * phi.sin());
            ((a * v).norm() - (b * v).norm()).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        swap <= 1e-6 && norm_gap <= 1e-10,
        format!("row-swap gap {swap:.3e} (tol 1e-6); norm gap {norm_gap:.3e} (tol 1e-10)"),
    )
}

fn grid_max(f: impl Fn(&SphereAngles) -> f64) -> (f64, SphereAngles) {
    let mut best = (f64::NEG_INFINITY, SphereAngles::new(0.0, 0.0).unwrap());
    for i in 0..=180 {
        for j in 0..360 {
            let a = SphereAngles::new((i as f64).to_radians(), (j as f64).to_radians()).unwrap();
            let v = f(&a);
            if v > best.0 {
                best = (v, a);
            }
        }
    }
    best
}

fn criterion_6() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    let printed = reference::two_control_cycle();
    let computed = asymptotic_cycle(&two_controls(), &calibrated()).unwrap();
    for (label, cycle, published) in [("printed", &printed, Some(0.158668)), ("computed", &computed, None)] {
        let opt = maximize_visibility(cycle).unwrap();
        let (dir, exact) = volume_two_closed_form(cycle).unwrap();
        let closed_gap = (opt.value - exact).abs();
        let published_gap = published.map_or(0.0, |v: f64| (opt.value - v).abs());
        let hessian_ok = matches!(
            opt.definiteness,
            Definiteness::NegativeDefinite | Definiteness::NegativeSemidefinite
        );
        let (g, ga) = grid_max(|a| volume_two(cycle, a).unwrap());
        let grid_excess = g - opt.value;
        let angle = ga.to_vector().dot(&dir).abs().min(1.0).acos().to_degrees();
        let ok = closed_gap <= 1e-6
            && published_gap <= 1e-6
            && hessian_ok
            && grid_excess <= 1e-6
            && angle <= 1.0;
        pass &= ok;
        details.push(format!(
            "{label}: value {:.7} closed form {exact:.7} (gap {closed_gap:.1e}){} hessian {} grid max {g:.7} (excess {grid_excess:.1e}, {angle:.2} deg from maximizer)",
            opt.value,
            published.map_or(String::new(), |v| format!(" published {v} (gap {published_gap:.1e})")),
            opt.definiteness.as_str(),
        ));
    }
    outcome(pass, details.join("; "))
}

fn rotation(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
}

fn random_series(rng: &mut ChaCha8Rng, max_h: u32) -> TrigSeries {
    let mut s = TrigSeries::zero();
    for _ in 0..rng.random_range(1..8) {
        s.add_term(
            rng.random_range(0..=max_h),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
    }
    s
}

fn random_matrix(rng: &mut ChaCha8Rng, max_h: u32) -> TrigMatrix {
    TrigMatrix::from_entries(std::array::from_fn(|_| {
        std::array::from_fn(|_| random_series(rng, max_h))
    }))
}

fn random_protocol(rng: &mut ChaCha8Rng) -> Protocol {
    let steps = (0..rng.random_range(1..=4))
        .map(|_| ControlStep::new(rng.random_range(0.0..=1.0), rng.random_range(0..=4)).unwrap())
        .collect();
    Protocol::new(steps).unwrap()
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut so3: f64 = 0.0;
    let mut hom: f64 = 0.0;
    let mut sv: f64 = 0.0;
    for _ in 0..40 {
        let p = random_protocol(&mut rng);
        let n = rng.random_range(0..=50);
        let theta = rng.random_range(-10.0..10.0);
        let r = protocol_product(&p, n).evaluate(theta);
        so3 = so3
            .max((r.transpose() * r - Matrix3::identity()).amax())
            .max((r.determinant() - 1.0).abs());
        let (a, b) = (random_matrix(&mut rng, 6), random_matrix(&mut rng, 6));
        let rhs = a.evaluate(theta) * b.evaluate(theta);
        hom = hom.max((a.compose(&b).evaluate(theta) - rhs).amax() / (1.0 + rhs.amax()));
        let sp = Spectrum::new(rng.random_range(0.0..TAU), rng.random_range(0.0..3.0)).unwrap();
        for m in averaged_maps(&p, &sp, 12) {
            sv = sv.max(m.singular_values().max() - 1.0);
        }
    }

    let rule = GaussRule::hermite(1000).unwrap();
    let mut gh: f64 = 0.0;
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 150);
        let (tb, s) = (rng.random_range(-3.0..3.0), rng.random_range(0.01..=2.0));
        // Harmonics above h·s = 40 average below e^(−800).
        let cut = (40.0 / s) as u32;
        let low = TrigMatrix::from_entries(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut t = TrigSeries::zero();
                for (h, c, d) in a.entry(i, j).terms().filter(|x| x.0 <= cut) {
                    t.add_term(h, c, d);
                }
                t
            })
        }));
        let q = rule
            .iter()
            .fold(Matrix3::zeros(), |acc, (x, w)| acc + low.evaluate(tb + s * x) * w);
        gh = gh.max((a.gaussian_average(&Spectrum::new(tb, s).unwrap()).matrix() - q).amax());
    }

    let mut proj: f64 = 0.0;
    for _ in 0..40 {
        let w = rotation(random_unit(&mut rng), rng.random_range(0.05..PI));
        let p = abel_limit(&w).unwrap();
        proj = proj
            .max((p * p - p).amax())
            .max((p * w - p).amax())
            .max((w * p - p).amax());
    }
    let w = rotation(Vector3::new(0.3, -1.0, 0.6), 1.1);
    let n = 1_000_000;
    let (mut pow, mut sum) = (Matrix3::identity(), Matrix3::zeros());
    for _ in 0..n {
        sum += pow;
        pow = w * pow;
    }
    let cesaro = (sum / n as f64 - abel_limit(&w).unwrap()).amax();

    let mut povm_excess: f64 = f64::NEG_INFINITY;
    let mut aligned: f64 = 0.0;
    for _ in 0..200 {
        let a = BlochVector::from_vector(random_unit(&mut rng) * rng.random_range(0.0..=1.0)).unwrap();
        let b = BlochVector::from_vector(random_unit(&mut rng) * rng.random_range(0.0..=1.0)).unwrap();
        let d = trace_distance(&a, &b);
        let f = random_unit(&mut rng) * rng.random_range(0.0..=1.0);
        povm_excess = povm_excess.max(trace_distance_povm(&a, &b, &f).unwrap() - d);
        let diff = a.as_vector() - b.as_vector();
        if diff.norm() > 1e-9 {
            aligned = aligned.max((trace_distance_povm(&a, &b, &diff.normalize()).unwrap() - d).abs());
        }
    }

    let checks = [
        ("SO(3)", so3, 1e-10),
        ("homomorphism", hom, 1e-12),
        ("Gauss-Hermite", gh, 1e-10),
        ("projector laws", proj, 1e-12),
        ("Cesaro", cesaro, 1e-5),
        ("singular values - 1", sv, 1e-12),
        ("POVM excess", povm_excess, 0.0),
        ("aligned POVM", aligned, 1e-14),
    ];
    outcome(
        checks.iter().all(|c| c.1 <= c.2),
        checks
            .iter()
            .map(|(n, v, t)| format!("{n} {v:.2e} (tol {t:.0e})"))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 steady maps agree with long iteration", criterion_1),
        ("2 two-control reference maps", criterion_2),
        ("3 three-control reference maps", criterion_3),
        ("4 unbounded backflow for the y pair", criterion_4),
        ("5 two-control flip structure", criterion_5),
        ("6 two-point visibility optimum", criterion_6),
        ("7 property suites", criterion_7),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = std::time::Instant::now();
        let o = run();
        println!(
            "{} criterion {name} [{:.1}s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("{} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
