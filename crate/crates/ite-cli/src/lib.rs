//! Result types and serialization shared by the `ite` binary and its tests.
//!
//! Output contract: CSV schemas are fixed per record kind (header row
//! mandatory, UTF-8, LF, floats with 17 significant digits); JSON mirrors
//! the full [`ResultEnvelope`] and round-trips losslessly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One output row; the variant fixes the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Eigenvalue {
        k: f64,
        p: usize,
        multiplicity_hint: String,
        residual: f64,
    },
    LsmPoint {
        k: f64,
        gnorm: f64,
        is_peak: bool,
    },
    Eoc {
        eta: f64,
        index: usize,
        abs_error: f64,
        eoc: Option<f64>,
    },
    Curve {
        eta: f64,
        k: f64,
    },
    Dirichlet {
        k: f64,
        p: usize,
        ball: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Eigenvalues,
    Lsm,
    Eoc,
    Curve,
    Dirichlet,
}

impl Schema {
    pub fn header(self) -> &'static str {
        match self {
            Schema::Eigenvalues => "k,p,multiplicity_hint,residual",
            Schema::Lsm => "k,gnorm,is_peak",
            Schema::Eoc => "eta,index,abs_error,eoc",
            Schema::Curve => "eta,k",
            Schema::Dirichlet => "k,p,ball",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub wall_time_seconds: f64,
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
}

/// 17 significant digits: enough to reconstruct any f64 bit-exactly.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(record: &Record) -> String {
    match record {
        Record::Eigenvalue { k, p, multiplicity_hint, residual } => {
            format!("{},{p},{multiplicity_hint},{}", sig17(*k), sig17(*residual))
        }
        Record::LsmPoint { k, gnorm, is_peak } => {
            format!("{},{},{is_peak}", sig17(*k), sig17(*gnorm))
        }
        Record::Eoc { eta, index, abs_error, eoc } => {
            let eoc = eoc.map(sig17).unwrap_or_default();
            format!("{},{index},{},{eoc}", sig17(*eta), sig17(*abs_error))
        }
        Record::Curve { eta, k } => format!("{},{}", sig17(*eta), sig17(*k)),
        Record::Dirichlet { k, p, ball } => format!("{},{p},{ball}", sig17(*k)),
    }
}

pub fn render(envelope: &ResultEnvelope, schema: Schema, json: bool) -> String {
    if json {
        let mut out = serde_json::to_string_pretty(envelope).expect("envelope serializes");
        out.push('\n');
        out
    } else {
        let mut out = String::new();
        out.push_str(schema.header());
        out.push('\n');
        for record in &envelope.records {
            out.push_str(&csv_row(record));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trips_byte_identically() {
        let envelope = ResultEnvelope {
            version: "0.1.0".into(),
            command: "sweep".into(),
            config: BTreeMap::from([("n".into(), sig17(4.0))]),
            wall_time_seconds: 1.234_567_890_123_456_7,
            records: vec![
                Record::Eigenvalue {
                    k: std::f64::consts::PI,
                    p: 0,
                    multiplicity_hint: "touching_zero".into(),
                    residual: 1e-12,
                },
                Record::Eoc { eta: 0.5, index: 2, abs_error: 5.468e-2, eoc: Some(1.032) },
                Record::Eoc { eta: 1.0, index: 2, abs_error: 1.118e-1, eoc: None },
            ],
            warnings: vec![],
        };
        let text = render(&envelope, Schema::Eigenvalues, true);
        let back: ResultEnvelope = serde_json::from_str(&text).unwrap();
        assert_eq!(back, envelope);
        assert_eq!(render(&back, Schema::Eigenvalues, true), text);
    }

    #[test]
    fn seventeen_digit_floats_survive_parse() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, 6.626e-34, -2.998e8] {
            let printed = sig17(x);
            assert_eq!(printed.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_record_list_renders_header_only() {
        let envelope = ResultEnvelope {
            version: "0.1.0".into(),
            command: "sweep".into(),
            config: BTreeMap::new(),
            wall_time_seconds: 0.0,
            records: vec![],
            warnings: vec![],
        };
        assert_eq!(
            render(&envelope, Schema::Lsm, false),
            "k,gnorm,is_peak\n"
        );
    }
}
