//! Run configuration, shipped presets and spectral-width calibration.
//!
//! A configuration is a JSON object:
//!
//! ```json
//! {
//!   "protocol": {
//!     "base_unit_wavelengths": 40.0,
//!     "order": "eq2b",
//!     "steps": [{ "k": 3, "eta": 0.5 }, { "k": 2, "eta": 0.5 }]
//!   },
//!   "spectrum": { "lambda_nm": 800.0, "fwhm_nm": 3.0 },
//!   "initial_state": "H",
//!   "n_steps": 50
//! }
//! ```
//!
//! `spectrum` may instead be `{ "theta_bar": 0.0, "s": 0.4 }`, with `s` given
//! as `"inf"` for the fully dephased limit. `initial_state` is one of `"H"`,
//! `"V"`, `"+y"`, `"-y"` or `{ "theta": …, "phi": … }`. `protocol.period`, if
//! present, must equal the number of steps. `outputs` renames the files the
//! command-line tool writes.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::asymptotics::asymptotic_map;
use crate::bloch::{BlochVector, ControlStep, Protocol, Spectrum, StepOrder};
use crate::error::{Error, Result};
use crate::reference::TWO_CONTROL_Y_EIGENVALUE;
use crate::sphere::SphereAngles;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolConfig,
    pub spectrum: SpectrumConfig,
    #[serde(default = "InitialState::horizontal")]
    pub initial_state: InitialState,
    pub n_steps: i64,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Optical path difference of the shortest plate, in wavelengths.
    pub base_unit_wavelengths: f64,
    pub steps: Vec<StepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(default = "default_order")]
    pub order: String,
}

fn default_order() -> String {
    StepOrder::default().flag().to_string()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub k: u32,
    pub eta: f64,
}

/// Exactly one of the two forms; unknown keys are rejected so mixing them fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpectrumConfig {
    Phase(PhaseSpectrum),
    Physical(PhysicalSpectrum),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpectrum {
    pub theta_bar: f64,
    #[serde(serialize_with = "write_width", deserialize_with = "read_width")]
    pub s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSpectrum {
    pub lambda_nm: f64,
    pub fwhm_nm: f64,
}

fn write_width<S: Serializer>(s: &f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    if s.is_infinite() {
        ser.serialize_str("inf")
    } else {
        ser.serialize_f64(*s)
    }
}

fn read_width<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Width {
        Number(f64),
        Text(String),
    }
    match Width::deserialize(de)? {
        Width::Number(x) => Ok(x),
        Width::Text(t) if matches!(t.as_str(), "inf" | "+inf" | "infinity") => Ok(f64::INFINITY),
        Width::Text(t) => Err(serde::de::Error::custom(format!(
            "expected a number or \"inf\", got \"{t}\""
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(String),
    Angles { theta: f64, phi: f64 },
}

impl InitialState {
    fn horizontal() -> Self {
        InitialState::Named("H".into())
    }

    pub fn to_bloch(&self) -> Result<BlochVector> {
        match self {
            InitialState::Named(name) => match name.as_str() {
                "H" => Ok(BlochVector::e_z()),
                "V" => Ok(-BlochVector::e_z()),
                "+y" => Ok(BlochVector::e_y()),
                "-y" => Ok(-BlochVector::e_y()),
                _ => Err(Error::config(
                    "initial_state",
                    format!("unknown state \"{name}\" (expected H, V, +y or -y)"),
                )),
            },
            InitialState::Angles { theta, phi } => SphereAngles::new(*theta, *phi)
                .map(|a| a.to_bloch())
                .map_err(|e| Error::config("initial_state", e.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub trajectory: String,
    pub asymptotics: String,
    pub trace_distance: String,
    pub nonmarkov: String,
    pub visibility: String,
    pub verify: String,
    pub calibration: String,
    pub effective_config: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            trajectory: "trajectory.csv".into(),
            asymptotics: "asymptotics.json".into(),
            trace_distance: "trace_distance.csv".into(),
            nonmarkov: "nonmarkov.json".into(),
            visibility: "visibility.json".into(),
            verify: "verify.json".into(),
            calibration: "calibration.json".into(),
            effective_config: "effective_config.json".into(),
        }
    }
}

/// A validated configuration in library types.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub protocol: Protocol,
    pub spectrum: Spectrum,
    pub initial: BlochVector,
    pub n_steps: usize,
}

pub const PRESET_NAMES: [&str; 2] = ["two_controls", "three_controls"];

/// Plates of 120λ, 80λ and 40λ at 800 nm behind a 3 nm filter.
pub fn preset(name: &str) -> Result<RunConfig> {
    let ks: &[u32] = match name {
        "two_controls" => &[3, 2],
        "three_controls" => &[3, 2, 1],
        _ => {
            return Err(Error::config(
                "preset",
                format!("unknown preset \"{name}\" (expected one of {PRESET_NAMES:?})"),
            ))
        }
    };
    Ok(RunConfig {
        protocol: ProtocolConfig {
            base_unit_wavelengths: 40.0,
            steps: ks.iter().map(|&k| StepConfig { k, eta: 0.5 }).collect(),
            period: None,
            order: default_order(),
        },
        spectrum: SpectrumConfig::Physical(PhysicalSpectrum {
            lambda_nm: 800.0,
            fwhm_nm: 3.0,
        }),
        initial_state: InitialState::horizontal(),
        n_steps: 50,
        outputs: Outputs::default(),
    })
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn order(&self) -> Result<StepOrder> {
        StepOrder::from_flag(&self.protocol.order).ok_or_else(|| {
            Error::config(
                "protocol.order",
                format!("expected eq2b or eq4a, got \"{}\"", self.protocol.order),
            )
        })
    }

    pub fn protocol(&self) -> Result<Protocol> {
        let pc = &self.protocol;
        if pc.steps.is_empty() {
            return Err(Error::config("protocol.steps", "at least one step is required"));
        }
        if let Some(t) = pc.period {
            if t != pc.steps.len() {
                return Err(Error::config(
                    "protocol.period",
                    format!("period {t} does not match {} listed steps", pc.steps.len()),
                ));
            }
        }
        let steps = pc
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                ControlStep::new(s.eta, s.k)
                    .map_err(|e| Error::config(format!("protocol.steps[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Protocol::new(steps)?.with_order(self.order()?))
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        let base = self.protocol.base_unit_wavelengths;
        let r = match self.spectrum {
            SpectrumConfig::Phase(PhaseSpectrum { theta_bar, s }) => Spectrum::new(theta_bar, s),
            SpectrumConfig::Physical(PhysicalSpectrum { lambda_nm, fwhm_nm }) => {
                if !(base.is_finite() && base > 0.0) {
                    return Err(Error::config(
                        "protocol.base_unit_wavelengths",
                        format!("must be positive, got {base}"),
                    ));
                }
                Spectrum::from_physical(lambda_nm, fwhm_nm, base)
            }
        };
        r.map_err(|e| Error::config("spectrum", e.to_string()))
    }

    pub fn resolve(&self) -> Result<Experiment> {
        if self.n_steps < 0 {
            return Err(Error::config(
                "n_steps",
                format!("must be >= 0, got {}", self.n_steps),
            ));
        }
        Ok(Experiment {
            protocol: self.protocol()?,
            spectrum: self.spectrum()?,
            initial: self.initial_state.to_bloch()?,
            n_steps: self.n_steps as usize,
        })
    }

    /// Replaces the spectrum by explicit phase statistics.
    pub fn set_spectrum(&mut self, sp: &Spectrum) {
        self.spectrum = SpectrumConfig::Phase(PhaseSpectrum {
            theta_bar: sp.theta_bar(),
            s: sp.s(),
        });
    }
}

pub const CALIBRATION_BRACKET: (f64, f64) = (0.05, 1.5);
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;
const SWEEP_POINTS: usize = 15;

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub spectrum: Spectrum,
    /// `λ_y(s) − anchor` at the returned width.
    pub anchor_residual: f64,
    pub iterations: usize,
}

/// `(y, y)` entry of the phase-0 steady map minus the anchor.
pub fn anchor_residual(p: &Protocol, theta_bar: f64, s: f64) -> Result<f64> {
    let sp = Spectrum::new(theta_bar, s)?;
    Ok(asymptotic_map(p, &sp, 0)?.matrix()[(1, 1)] - TWO_CONTROL_Y_EIGENVALUE)
}

/// Fits the phase spread `s` so that the steady `y` eigenvalue at phase 0
/// equals the two-control anchor, by bisection over [`CALIBRATION_BRACKET`].
pub fn calibrate(p: &Protocol, theta_bar: f64) -> Result<Calibration> {
    let (mut lo, mut hi) = CALIBRATION_BRACKET;
    let mut r_lo = anchor_residual(p, theta_bar, lo)?;
    let r_hi = anchor_residual(p, theta_bar, hi)?;
    if r_lo.signum() == r_hi.signum() {
        let sweep = (0..SWEEP_POINTS)
            .map(|i| {
                let s = lo + (hi - lo) * i as f64 / (SWEEP_POINTS - 1) as f64;
                anchor_residual(p, theta_bar, s).map(|r| (s, r))
            })
            .collect::<Result<Vec<_>>>()?;
        return Err(Error::Calibration {
            reason: format!(
                "anchor {TWO_CONTROL_Y_EIGENVALUE} is not bracketed on s in [{lo}, {hi}]"
            ),
            sweep,
        });
    }
    let mut iterations = 0;
    while hi - lo > 1e-13 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let r = anchor_residual(p, theta_bar, mid)?;
        if r == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if r.signum() == r_lo.signum() {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let residual = anchor_residual(p, theta_bar, s)?;
    if residual.abs() > CALIBRATION_TOLERANCE {
        return Err(Error::Calibration {
            reason: format!("bisection ended with residual {residual:e}"),
            sweep: vec![(s, residual)],
        });
    }
    Ok(Calibration {
        spectrum: Spectrum::new(theta_bar, s)?,
        anchor_residual: residual,
        iterations,
    })
}
