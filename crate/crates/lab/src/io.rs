use std::io::{Read, Write};

use heavyreg_core::harness::RunRecord;
use heavyreg_core::rates::{PhaseCell, RateResult, Regime};
use serde::{Deserialize, Serialize};

use crate::Result;

/// Row of the rates / phase CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub m: f64,
    pub gamma: f64,
    pub s: f64,
    pub exponent: f64,
    pub regime: Regime,
    pub e_complex: f64,
    pub e_heavy: f64,
}

pub const RATE_COLUMNS: [&str; 7] = ["m", "gamma", "s", "exponent", "regime", "e_complex", "e_heavy"];

impl RateRow {
    pub fn from_result(m: f64, gamma: f64, s: f64, r: &RateResult) -> Self {
        Self { m, gamma, s, exponent: r.exponent, regime: r.regime, e_complex: r.e_complex, e_heavy: r.e_heavy }
    }
}

impl From<&PhaseCell> for RateRow {
    fn from(c: &PhaseCell) -> Self {
        Self {
            m: c.m,
            gamma: c.gamma,
            s: c.s,
            exponent: c.exponent,
            regime: c.regime,
            e_complex: c.e_complex,
            e_heavy: c.e_heavy,
        }
    }
}

pub fn write_rate_rows<W: Write>(out: W, rows: &[RateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(RATE_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rate_rows<R: Read>(input: R) -> Result<Vec<RateRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
