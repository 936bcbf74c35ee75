use std::io::{Read, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;

/// One homodyne outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub trace_id: u64,
    pub pulse_index: u32,
    /// Radians; empty in CSV before phase assignment.
    pub theta_assigned: Option<f64>,
    pub x_value: f64,
    #[serde(serialize_with = "bit_out", deserialize_with = "bit_in")]
    pub is_distilled: bool,
}

fn bit_out<S: Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

fn bit_in<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    match u8::deserialize(d)? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(serde::de::Error::custom(format!("is_distilled must be 0 or 1, got {v}"))),
    }
}

/// Writes records as CSV with a header row.
pub fn write_records<W: Write>(out: W, records: &[QuadratureRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<QuadratureRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
