//! Six-digit reference values of the steady maps for the two shipped presets.
//!
//! These are the targets the calibrated model is checked against; the
//! `(y, y)` entry of the two-control phase-0 map is the calibration anchor.

use crate::asymptotics::AsymptoticCycle;
use crate::bloch::BlochMap;

/// Calibration anchor: `λ_y` of the two-control steady maps.
pub const TWO_CONTROL_Y_EIGENVALUE: f64 = 0.114589;

pub const TWO_CONTROL_MAPS: [[[f64; 3]; 3]; 2] = [
    [
        [0.635946, 0.0, 0.394485],
        [0.0, 0.114589, 0.0],
        [0.394485, 0.0, 0.249465],
    ],
    [
        [0.394485, 0.0, 0.249465],
        [0.0, 0.114589, 0.0],
        [0.635946, 0.0, 0.394485],
    ],
];

pub const THREE_CONTROL_MAPS: [[[f64; 3]; 3]; 3] = [
    [
        [0.363253, 0.0, 0.331023],
        [0.0, 0.0590277, 0.0],
        [0.331023, 0.0, 0.577719],
    ],
    [
        [0.350767, 0.0, 0.399416],
        [0.0, 0.127151, 0.0],
        [0.363253, 0.0, 0.331023],
    ],
    [
        [0.331023, 0.0, 0.577719],
        [0.0, -0.0386657, 0.0],
        [0.350767, 0.0, 0.399416],
    ],
];

/// Per-cycle BLP growth of the `±e_y` pair implied by the three-control
/// `y` eigenvalues.
pub const THREE_CONTROL_Y_PAIR_RATE: f64 = 0.0884853;

fn cycle(maps: &[[[f64; 3]; 3]]) -> AsymptoticCycle {
    AsymptoticCycle::from_maps(maps.iter().map(|r| BlochMap::from_rows(*r)).collect())
        .expect("non-empty")
}

pub fn two_control_cycle() -> AsymptoticCycle {
    cycle(&TWO_CONTROL_MAPS)
}

pub fn three_control_cycle() -> AsymptoticCycle {
    cycle(&THREE_CONTROL_MAPS)
}

/// Reference maps for a period, if one is shipped.
pub fn for_period(t: usize) -> Option<AsymptoticCycle> {
    match t {
        2 => Some(two_control_cycle()),
        3 => Some(three_control_cycle()),
        _ => None,
    }
}
