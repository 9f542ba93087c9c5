//! Command line driver: reads a run configuration, performs one analysis and
//! writes its results as CSV or JSON into an output directory.

pub mod format;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use nessim_core::asymptotics::{asymptotic_cycle, convergence_profile};
use nessim_core::config::{self, calibrate, preset, Experiment, RunConfig};
use nessim_core::dynamics::propagate;
use nessim_core::nonmarkov::{
    asymptotic_blp_rate, blp_accumulate, cycle_distances, cycle_increments, optimal_pair_search,
    trace_distance_series, StatePair,
};
use nessim_core::visibility::{maximize_visibility, volume_two_closed_form};
use nessim_core::{asymptotic_map, reference, Spectrum, StepOrder};

use format::{fmt_num, map, num, nums, vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Per-step averaged trajectory of the initial state.
    Simulate,
    /// Steady-state maps of every drive phase and convergence towards them.
    Asymptotics,
    /// Trace distance of the initial state and its antipode, with BLP growth.
    Nonmarkov,
    /// Initial pure state maximizing the size of the steady cycle.
    Visibility,
    /// Internal cross-checks; exits with status 4 if any fails.
    Verify,
    /// Fits the phase spread to the two-control anchor eigenvalue.
    Calibrate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Asymptotics => "asymptotics",
            Command::Nonmarkov => "nonmarkov",
            Command::Visibility => "visibility",
            Command::Verify => "verify",
            Command::Calibrate => "calibrate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nessim", version, about = "Steady cycles and non-Markovianity of a periodically driven dephasing qubit")]
pub struct Args {
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Shipped configuration: two_controls or three_controls.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Step operator order: eq2b (phase after rotation) or eq4a.
    #[arg(long)]
    pub order: Option<String>,
    /// Phase spread `s` of the base unit; `inf` for the fully dephased limit.
    #[arg(long, allow_negative_numbers = true)]
    pub spectrum_s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub steps: Option<i64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Verify(_) => 4,
        }
    }
}

impl From<nessim_core::Error> for CliError {
    fn from(e: nessim_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

/// The configuration after applying command-line overrides.
pub fn effective_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            RunConfig::from_json(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => preset("two_controls")?,
    };
    if let Some(order) = &args.order {
        if StepOrder::from_flag(order).is_none() {
            return Err(CliError::Config(format!(
                "invalid value for `--order`: expected eq2b or eq4a, got \"{order}\""
            )));
        }
        cfg.protocol.order = order.clone();
    }
    if let Some(s) = args.spectrum_s {
        let theta_bar = cfg.spectrum()?.theta_bar();
        let sp = Spectrum::new(theta_bar, s)
            .map_err(|e| CliError::Config(format!("invalid value for `--spectrum-s`: {e}")))?;
        cfg.set_spectrum(&sp);
    }
    if let Some(n) = args.steps {
        cfg.n_steps = n;
    }
    Ok(cfg)
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
        s.push('\n');
        self.text(name, &s)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let bad = |e: csv::Error| CliError::Config(format!("{name}: {e}"));
        w.write_record(header).map_err(bad)?;
        for r in rows {
            w.write_record(r).map_err(bad)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        self.text(name, &String::from_utf8(bytes).expect("ASCII output"))
    }
}

/// Runs one command and returns the files written.
pub fn run(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let cfg = effective_config(args)?;
    let exp = cfg.resolve()?;
    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    let mut out = Writer {
        dir: &args.out,
        written: Vec::new(),
    };
    let names = &cfg.outputs;
    match args.command {
        Command::Simulate => simulate(&exp, names, &mut out)?,
        Command::Asymptotics => asymptotics(&exp, names, &mut out)?,
        Command::Nonmarkov => nonmarkov(&exp, names, &mut out)?,
        Command::Visibility => visibility(&exp, names, &mut out)?,
        Command::Verify => {
            let report = verify::run(&exp)?;
            out.json(&names.verify, &report.to_json(args.command.name()))?;
            out.json(&names.effective_config, &config_value(&cfg))?;
            if let Some(msg) = report.failure() {
                return Err(CliError::Verify(msg));
            }
            return Ok(out.written);
        }
        Command::Calibrate => {
            let calibrated = calibration(&cfg, &exp, names, &mut out)?;
            out.json(&names.effective_config, &config_value(&calibrated))?;
            return Ok(out.written);
        }
    }
    out.json(&names.effective_config, &config_value(&cfg))?;
    Ok(out.written)
}

fn config_value(cfg: &RunConfig) -> Value {
    serde_json::from_str(&cfg.to_json()).expect("config JSON parses")
}

fn spectrum_value(sp: &Spectrum) -> Value {
    json!({ "theta_bar": num(sp.theta_bar()), "s": num(sp.s()) })
}

fn simulate(exp: &Experiment, names: &config::Outputs, out: &mut Writer) -> Result<(), CliError> {
    let traj = propagate(&exp.protocol, &exp.spectrum, exp.n_steps, &exp.initial);
    let rows: Vec<Vec<String>> = traj
        .iter()
        .enumerate()
        .map(|(n, a)| {
            vec![
                n.to_string(),
                fmt_num(a.ax()),
                fmt_num(a.ay()),
                fmt_num(a.az()),
                fmt_num(a.purity()),
            ]
        })
        .collect();
    out.csv(&names.trajectory, &["step", "ax", "ay", "az", "purity"], &rows)
}

fn asymptotics(exp: &Experiment, names: &config::Outputs, out: &mut Writer) -> Result<(), CliError> {
    let p = &exp.protocol;
    let cycle = asymptotic_cycle(p, &exp.spectrum)?;
    let t = p.period();
    let m_max = (exp.n_steps / t).max(1);
    let profiles = (0..t)
        .map(|k| {
            convergence_profile(p, &exp.spectrum, &exp.initial, k, m_max).map(|c| {
                json!({ "phase": k, "distances": nums(&c.distances), "converged": c.converged })
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reference_diff = reference::for_period(t).map(|r| {
        let d = cycle
            .maps()
            .iter()
            .zip(r.maps())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        num(d)
    });
    let v = json!({
        "period": t,
        "order": p.order().flag(),
        "spectrum": spectrum_value(&exp.spectrum),
        "maps": cycle.maps().iter().map(map).collect::<Vec<_>>(),
        "y_eigenvalues": nums(cycle.y_eigenvalues()),
        "y_coupling": num(cycle.y_coupling()),
        "initial_state": vector(&exp.initial),
        "limit_cycle": cycle.apply(&exp.initial).iter().map(vector).collect::<Vec<_>>(),
        "convergence": profiles,
        "max_abs_diff_from_reference": reference_diff,
    });
    out.json(&names.asymptotics, &v)
}

fn pair_report(cycle: &nessim_core::AsymptoticCycle, pair: &StatePair) -> Value {
    json!({
        "a_plus": vector(&pair.a_plus),
        "a_minus": vector(&pair.a_minus),
        "cycle_distances": nums(&cycle_distances(cycle, pair)),
        "cycle_increments": nums(&cycle_increments(cycle, pair)),
        "rate_per_cycle": num(asymptotic_blp_rate(cycle, pair)),
    })
}

fn nonmarkov(exp: &Experiment, names: &config::Outputs, out: &mut Writer) -> Result<(), CliError> {
    let p = &exp.protocol;
    let pair = StatePair::antipodal(exp.initial);
    let d = trace_distance_series(p, &exp.spectrum, &pair, exp.n_steps);
    let rows: Vec<Vec<String>> = d
        .iter()
        .enumerate()
        .map(|(n, x)| vec![n.to_string(), fmt_num(*x)])
        .collect();
    out.csv(&names.trace_distance, &["step", "distance"], &rows)?;

    let total = if exp.n_steps == 0 {
        0.0
    } else {
        blp_accumulate(p, &exp.spectrum, &pair, exp.n_steps)?
    };
    let cycle = asymptotic_cycle(p, &exp.spectrum)?;
    let best = optimal_pair_search(&cycle);
    let v = json!({
        "period": p.period(),
        "n_steps": exp.n_steps,
        "spectrum": spectrum_value(&exp.spectrum),
        "pair": pair_report(&cycle, &pair),
        "blp_total": num(total),
        "y_pair": pair_report(&cycle, &StatePair::y_pair()),
        "optimal_antipodal_pair": {
            "theta": num(best.angles.theta()),
            "phi": num(best.angles.phi()),
            "a": vector(&best.pair.a_plus),
            "rate_per_cycle": num(best.rate),
            "purity_swing": num(best.purity_swing),
        },
    });
    out.json(&names.nonmarkov, &v)
}

fn visibility(exp: &Experiment, names: &config::Outputs, out: &mut Writer) -> Result<(), CliError> {
    let cycle = asymptotic_cycle(&exp.protocol, &exp.spectrum)?;
    let opt = maximize_visibility(&cycle)?;
    let closed_form = match cycle.period() {
        2 => {
            let (dir, value) = volume_two_closed_form(&cycle)?;
            let dir = if dir.iter().find(|x| x.abs() > 1e-12).is_some_and(|x| *x < 0.0) {
                -dir
            } else {
                dir
            };
            json!({ "direction": nums(dir.as_slice()), "value": num(value) })
        }
        _ => Value::Null,
    };
    let a = opt.angles.to_bloch();
    let v = json!({
        "period": cycle.period(),
        "spectrum": spectrum_value(&exp.spectrum),
        "theta": num(opt.angles.theta()),
        "phi": num(opt.angles.phi()),
        "direction": vector(&a),
        "value": num(opt.value),
        "gradient_norm": num(opt.gradient_norm),
        "hessian_eigenvalues": nums(&opt.hessian_eigenvalues),
        "hessian": opt.definiteness.as_str(),
        "degenerate": opt.degenerate,
        "cycle_points": cycle.apply(&a).iter().map(vector).collect::<Vec<_>>(),
        "closed_form": closed_form,
    });
    out.json(&names.visibility, &v)
}

fn calibration(
    cfg: &RunConfig,
    exp: &Experiment,
    names: &config::Outputs,
    out: &mut Writer,
) -> Result<RunConfig, CliError> {
    let p = &exp.protocol;
    let cal = match calibrate(p, exp.spectrum.theta_bar()) {
        Ok(c) => c,
        Err(nessim_core::Error::Calibration { reason, sweep }) => {
            let table: Vec<Value> = sweep
                .iter()
                .map(|(s, r)| json!({ "s": num(*s), "residual": num(*r) }))
                .collect();
            out.json(
                &names.calibration,
                &json!({ "calibrated": false, "reason": reason, "sweep": table }),
            )?;
            return Err(CliError::Numerical(format!("calibration failed: {reason}")));
        }
        Err(e) => return Err(e.into()),
    };
    let cycle = asymptotic_cycle(p, &cal.spectrum)?;
    let residuals: Vec<Value> = reference::for_period(p.period())
        .map(|r| {
            let mut rows = Vec::new();
            for (k, (m, refm)) in cycle.maps().iter().zip(r.maps()).enumerate() {
                for i in 0..3 {
                    for j in 0..3 {
                        let want = refm.matrix()[(i, j)];
                        if want == 0.0 {
                            continue;
                        }
                        let got = m.matrix()[(i, j)];
                        rows.push(json!({
                            "phase": k, "row": i, "col": j,
                            "computed": num(got), "reference": num(want), "residual": num(got - want),
                        }));
                    }
                }
            }
            rows
        })
        .unwrap_or_default();
    let uniform_y = asymptotic_map(p, &Spectrum::fully_dephased(), 0)?.matrix()[(1, 1)];
    let v = json!({
        "calibrated": true,
        "theta_bar": num(cal.spectrum.theta_bar()),
        "s": num(cal.spectrum.s()),
        "anchor": num(reference::TWO_CONTROL_Y_EIGENVALUE),
        "anchor_residual": num(cal.anchor_residual),
        "iterations": cal.iterations,
        "configured_s": num(exp.spectrum.s()),
        "uniform_limit_y_eigenvalue": num(uniform_y),
        "residuals": residuals,
    });
    out.json(&names.calibration, &v)?;
    let mut calibrated = cfg.clone();
    calibrated.set_spectrum(&cal.spectrum);
    Ok(calibrated)
}
