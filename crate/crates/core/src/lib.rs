//! Simulation of a qubit driven through a periodic sequence of polarization
//! rotations and birefringent phases, dephased by a Gaussian frequency
//! spectrum shared across all steps.
//!
//! Step maps are kept as exact trigonometric polynomials in the base-unit
//! phase, so averaging a product of any length is a closed-form sum over
//! harmonics. Steady-state cycles, trace-distance backflow and cycle
//! visibility are built on top of that.

pub mod asymptotics;
pub mod bloch;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod nonmarkov;
pub mod quadrature;
pub mod reference;
pub mod sphere;
pub mod trig;
pub mod visibility;

pub use asymptotics::{asymptotic_cycle, asymptotic_map, AsymptoticCycle};
pub use bloch::{BlochMap, BlochVector, ControlStep, Protocol, Spectrum, StepOrder};
pub use config::{preset, Experiment, RunConfig};
pub use error::{Error, Result};
pub use sphere::SphereAngles;
pub use trig::{TrigMatrix, TrigSeries};
