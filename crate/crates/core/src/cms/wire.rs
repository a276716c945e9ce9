//! Report serialization: CSV `z,a0,a1` and a packed 20-byte little-endian record.

use std::io::{Read, Write};

use crate::cms::Report;
use crate::error::{Error, Result};

pub const REPORT_CSV_HEADER: [&str; 3] = ["z", "a0", "a1"];

/// Bytes per packed report: `u32 z`, `u64 a0`, `u64 a1`.
pub const PACKED_REPORT_BYTES: usize = 20;

impl Report {
    pub fn to_bytes(&self) -> [u8; PACKED_REPORT_BYTES] {
        let mut out = [0u8; PACKED_REPORT_BYTES];
        out[..4].copy_from_slice(&self.z.to_le_bytes());
        out[4..12].copy_from_slice(&self.a0.to_le_bytes());
        out[12..].copy_from_slice(&self.a1.to_le_bytes());
        out
    }

    pub fn from_bytes(b: &[u8; PACKED_REPORT_BYTES]) -> Self {
        Report {
            z: u32::from_le_bytes(b[..4].try_into().unwrap()),
            a0: u64::from_le_bytes(b[4..12].try_into().unwrap()),
            a1: u64::from_le_bytes(b[12..].try_into().unwrap()),
        }
    }
}

pub fn pack_reports(reports: &[Report]) -> Vec<u8> {
    reports.iter().flat_map(|r| r.to_bytes()).collect()
}

pub fn unpack_reports(bytes: &[u8]) -> Result<Vec<Report>> {
    if !bytes.len().is_multiple_of(PACKED_REPORT_BYTES) {
        return Err(Error::Config(format!(
            "packed buffer of {} bytes is not a whole number of {PACKED_REPORT_BYTES}-byte records",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(PACKED_REPORT_BYTES)
        .map(|c| Report::from_bytes(c.try_into().unwrap()))
        .collect())
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, msg: e.to_string() }
}

pub fn write_reports_csv<W: Write>(w: W, reports: &[Report]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_CSV_HEADER).map_err(csv_err)?;
    for r in reports {
        out.write_record([r.z.to_string(), r.a0.to_string(), r.a1.to_string()])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_reports_csv<R: Read>(r: R) -> Result<Vec<Report>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(REPORT_CSV_HEADER) {
        return Err(Error::Parse { line: 1, msg: format!("expected header z,a0,a1, got {header:?}") });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<u64> {
            rec[i].parse().map_err(|e| Error::Parse { line, msg: format!("{}: {e}", REPORT_CSV_HEADER[i]) })
        };
        let z = field(0)?;
        let z = u32::try_from(z).map_err(|_| Error::Parse { line, msg: format!("z = {z} overflows u32") })?;
        out.push(Report { z, a0: field(1)?, a1: field(2)? });
    }
    Ok(out)
}
