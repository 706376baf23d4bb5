//! Published 22-wave decomposition of the monthly S&P 500 (July 1982 to
//! April 2025, 514 observations), used as a fixture and as the generator
//! for synthetic round-trip tests.

use crate::model::{LogisticWave, MultilogisticModel};

/// Linear drift that accompanies the wave table.
pub const TABLE1_DRIFT: f64 = 13.9;

/// Number of monthly observations the table was fitted on.
pub const TABLE1_LENGTH: usize = 514;

/// `(id, a, b, y_sat)`: carriers A and B, positive waves 1-10, negative
/// waves 11-20.
pub const TABLE1: [(&str, f64, f64, f64); 22] = [
    ("A", 40.7, 354.0, -201_951.0),
    ("B", 139.5, 511.0, 2_377_300.0),
    ("1", 4.3, 60.0, 3419.0),
    ("2", 3.4, 88.0, 1650.0),
    ("3", 11.6, 209.0, 57_083.0),
    ("4", 1.8, 259.0, 1651.0),
    ("5", 2.0, 270.0, 1368.0),
    ("6", 10.0, 303.0, 28_921.0),
    ("7", 4.9, 390.0, 5600.0),
    ("8", 3.6, 427.0, 3460.0),
    ("9", 4.4, 471.0, 23_238.0),
    ("10", 4.5, 509.0, 33_808.0),
    ("11", 1.5, 101.0, -500.0),
    ("12", 3.0, 151.0, -1700.0),
    ("13", 4.4, 246.0, -5042.0),
    ("14", 1.9, 289.0, -1096.0),
    ("15", 5.4, 319.0, -15_831.0),
    ("16", 1.2, 321.0, -608.0),
    ("17", 1.9, 338.0, -1600.0),
    ("18", 1.5, 352.0, -1300.0),
    ("19", 1.7, 365.0, -700.0),
    ("20", 4.6, 406.0, -4500.0),
];

pub fn table1_waves() -> Vec<LogisticWave> {
    TABLE1
        .iter()
        .map(|&(id, a, b, y_sat)| LogisticWave::new(id, a, b, y_sat).expect("valid table"))
        .collect()
}

/// The tabulated waves with `d = 13.9` and `c = 0`.
pub fn table1_model() -> MultilogisticModel {
    MultilogisticModel {
        c: 0.0,
        d: TABLE1_DRIFT,
        waves: table1_waves(),
    }
}
