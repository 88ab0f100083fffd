use serde::{Deserialize, Serialize};

use crate::config::ModeName;

pub const MOTZKIN: &str = "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1";
/// `x1²x2²(x1² + x2² − 1)`, minimum `−1/27` at `(±3^{−1/2}, ±3^{−1/2})`.
pub const LASSERRE_EX3: &str = "x1^4*x2^2 + x1^2*x2^4 - x1^2*x2^2";
pub const ROBINSON: &str =
    "x1^6 + x2^6 - x1^4*x2^2 - x1^2*x2^4 - x1^4 - x2^4 - x1^2 - x2^2 + 3*x1^2*x2^2 + 1";

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "motzkin" => Some(MOTZKIN),
        "laserre-ex3" => Some(LASSERRE_EX3),
        "robinson" => Some(ROBINSON),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 3] = ["motzkin", "laserre-ex3", "robinson"];

/// A published row: `U`, flatness, `‖A_M − B_M‖`, minimizers and iteration count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub lambda: String,
    pub upper_bound: String,
    pub flat: String,
    pub flat_residual: String,
    pub minimizers: String,
    pub iterations: u32,
}

pub struct TableSpec {
    pub id: u8,
    pub preset: &'static str,
    pub mode: ModeName,
    pub rows: &'static [(&'static str, &'static str, &'static str, &'static str, &'static str, u32)],
}

impl TableSpec {
    pub fn reference(&self) -> Vec<ReferenceRow> {
        self.rows
            .iter()
            .map(|&(lambda, u, flat, res, minimizers, iterations)| ReferenceRow {
                lambda: lambda.into(),
                upper_bound: u.into(),
                flat: flat.into(),
                flat_residual: res.into(),
                minimizers: minimizers.into(),
                iterations,
            })
            .collect()
    }
}

pub const TABLES: [TableSpec; 4] = [
    TableSpec {
        id: 1,
        preset: "motzkin",
        mode: ModeName::Moment,
        rows: &[
            ("1/1000", "-209.9332", "no", "1.8995e7", "-", 73),
            ("1/100", "-48.50", "no", "1.584e5", "-", 73),
            ("1/60", "0.00156", "yes", "9.16135", "(±1.0109, ±1.0109)", 66),
            ("1/4", "0.0650", "no", "2.0449e-4", "-", 66),
            ("1/2", "0.2537", "no", "9.0867e-4", "-", 66),
            ("3/4", "0.3543", "approx", "0.0015", "(±0.9960, ±0.9960)", 74),
            ("1", "0.2870", "no", "0.0013", "-", 115),
        ],
    },
    TableSpec {
        id: 2,
        preset: "laserre-ex3",
        mode: ModeName::Moment,
        rows: &[
            ("1/1000", "-4.4169", "no", "7.8542e4", "-", 76),
            ("1/100", "-0.0305", "approx", "7.928e-4", "(±0.6354, ±0.6354)", 85),
            ("1/60", "-0.0255", "yes", "9.9708e-5", "(±0.6566, ±0.6566)", 76),
            ("1/4", "0.0802", "no", "0.0627", "-", 50),
            ("1/2", "0.1634", "yes", "9.5965e-5", "(±0.8233, ±0.8233)", 123),
            ("3/4", "0.2399", "no", "0.0430", "-", 50),
            ("1", "0.1331", "no", "0.0103", "-", 84),
        ],
    },
    TableSpec {
        id: 3,
        preset: "robinson",
        mode: ModeName::Nds,
        rows: &[
            ("1/100", "-0.9278", "no", "7.329e3", "-", 10),
            ("1/60", "-0.9288", "no", "7.1978e3", "-", 10),
            ("1/30", "-0.5709", "no", "6.8149e3", "-", 10),
            ("1/10", "-0.0159", "no", "6.1421e3", "-", 10),
            ("1/5", "0.0549", "no", "5.9942e3", "-", 10),
            ("1/4", "0.0670", "no", "6.0629e3", "-", 500),
            ("3/4", "0.1018", "no", "5.8919e3", "-", 10),
            ("1", "1.060", "no", "5.7389e3", "-", 10),
        ],
    },
    TableSpec {
        id: 4,
        preset: "motzkin",
        mode: ModeName::Nds,
        rows: &[
            ("1/1000", "-30.6672", "no", "1.1486e6", "-", 50),
            ("1/100", "0.1688", "no", "1.1486e6", "-", 10),
            ("1/60", "0.2458", "no", "1.4886e6", "-", 10),
            ("1/4", "-0.8789", "no", "1.4887e6", "-", 50),
            ("1/2", "0.4232", "no", "1.1485e6", "-", 10),
            ("3/4", "1", "yes", "1.1629e6", "(0, ±44.9350), (±44.9350, 0)", 50),
            ("1", "1", "yes", "1.1629e6", "(0, ±44.9352), (±44.9352, 0)", 20),
        ],
    },
];

pub fn table(id: u8) -> Option<&'static TableSpec> {
    TABLES.iter().find(|t| t.id == id)
}
