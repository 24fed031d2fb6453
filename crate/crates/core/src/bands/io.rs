//! Band-table file: one JSON header line, one CSV column line, then one row
//! per `(z, j)` with columns `z, j, epsilon, re(f_-M), im(f_-M), …, re(f_M), im(f_M)`.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the table bit for bit.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BandTable, BrillouinGrid, GridSpec};
use crate::error::{Error, Result};
use crate::potential::FourierPotential;

pub const FORMAT_NAME: &str = "bloch-band-table";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandFileHeader {
    pub format: String,
    pub tool_version: String,
    /// Dimensionless potential as `[n, re, im]` triples.
    pub potential: Vec<(i64, f64, f64)>,
    pub half_width: usize,
    pub max_band: usize,
    pub grid: GridSpec,
    pub fingerprint: String,
    /// Free-form metadata supplied by the writer (config hash, conventions, …).
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn header_for(table: &BandTable, meta: serde_json::Value) -> BandFileHeader {
    BandFileHeader {
        format: FORMAT_NAME.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        potential: table
            .potential()
            .coefficients()
            .map(|(n, v)| (n, v.re, v.im))
            .collect(),
        half_width: table.half_width(),
        max_band: table.max_band(),
        grid: table.grid().spec(),
        fingerprint: table.fingerprint(),
        meta,
    }
}

pub fn write_band_table<W: Write>(table: &BandTable, meta: serde_json::Value, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::BandFile(e.to_string());
    let header = header_for(table, meta);
    let line = serde_json::to_string(&header).map_err(|e| Error::BandFile(e.to_string()))?;
    writeln!(out, "{line}").map_err(io)?;

    let m = table.half_width() as i64;
    let mut cols = String::from("z,j,epsilon");
    for n in -m..=m {
        cols.push_str(&format!(",re_f{n},im_f{n}"));
    }
    writeln!(out, "{cols}").map_err(io)?;

    let mut row = String::new();
    for (iz, z) in table.grid().values().iter().enumerate() {
        for j in 0..table.band_count() {
            row.clear();
            row.push_str(&format!("{z:e},{j},{:e}", table.energy(j, iz)));
            for c in table.coeffs(j, iz) {
                row.push_str(&format!(",{:e},{:e}", c.re, c.im));
            }
            writeln!(out, "{row}").map_err(io)?;
        }
    }
    Ok(())
}

pub fn read_band_table<R: BufRead>(input: R) -> Result<(BandTable, BandFileHeader)> {
    let bad = |msg: String| Error::BandFile(msg);
    let mut lines = input.lines();
    let mut next_line = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::BandFile(format!("missing {what}")))?
            .map_err(|e| Error::BandFile(e.to_string()))
    };
    let header: BandFileHeader =
        serde_json::from_str(&next_line("header line")?).map_err(|e| bad(format!("header: {e}")))?;
    if header.format != FORMAT_NAME {
        return Err(bad(format!("unexpected format '{}'", header.format)));
    }
    let potential = FourierPotential::new(
        1.0,
        header
            .potential
            .iter()
            .map(|&(n, re, im)| (n, Complex64::new(re, im)))
            .collect(),
    )?;
    if potential.fingerprint() != header.fingerprint {
        return Err(bad("potential fingerprint does not match its coefficients".into()));
    }
    let grid = BrillouinGrid::from_spec(header.grid)?;
    let m = header.half_width;
    let dim = 2 * m + 1;
    let count = header.max_band + 1;
    let expected_cols = 3 + 2 * dim;
    let _columns = next_line("column line")?;

    let mut energies = vec![Vec::with_capacity(grid.len()); count];
    let mut coeffs = vec![Vec::with_capacity(grid.len() * dim); count];
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::BandFile(format!("'{s}': {e}")));
    for iz in 0..grid.len() {
        for j in 0..count {
            let line = next_line("data row")?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected_cols {
                return Err(bad(format!("row has {} fields, expected {expected_cols}", fields.len())));
            }
            let z = parse(fields[0])?;
            if z.to_bits() != grid.z(iz).to_bits() {
                return Err(bad(format!("row z = {z} does not match grid point {}", grid.z(iz))));
            }
            if fields[1].trim() != j.to_string() {
                return Err(bad(format!("row band '{}' where {j} was expected", fields[1])));
            }
            energies[j].push(parse(fields[2])?);
            for pair in fields[3..].chunks(2) {
                coeffs[j].push(Complex64::new(parse(pair[0])?, parse(pair[1])?));
            }
        }
    }
    let table = BandTable::from_parts(potential, grid, m, energies, coeffs)?;
    Ok((table, header))
}
