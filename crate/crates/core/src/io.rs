//! Diagnostics CSV and field dumps (legacy VTK structured points, raw
//! little-endian binary).

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Field, FieldValue, GridSpec};
use crate::stepper::{DiagnosticsRow, EnergyReport};

pub const CSV_HEADER: &str = "step,t,f_bulk,f_elastic,kinetic,diss_visc,diss_rot,energy_residual,div_u_max,trQ_max";

/// Shortest decimal that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn csv_row(row: &DiagnosticsRow) -> String {
    let r = &row.report;
    let vals = [
        row.t,
        r.f_bulk,
        r.f_elastic,
        r.kinetic,
        r.dissipation_viscous,
        r.dissipation_rotational,
        r.energy_law_residual,
        row.div_u_max,
        row.tr_q_max,
    ];
    let mut s = row.step.to_string();
    for v in vals {
        s.push(',');
        s.push_str(&num(v));
    }
    s
}

/// Streams diagnostics rows after writing the header.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(CsvWriter { out })
    }

    pub fn write_row(&mut self, row: &DiagnosticsRow) -> io::Result<()> {
        writeln!(self.out, "{}", csv_row(row))
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Parses diagnostics CSV text produced by [`CsvWriter`].
pub fn parse_csv(text: &str) -> Result<Vec<DiagnosticsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::invalid("parse_csv", "missing or unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::invalid("parse_csv", format!("malformed row {}", i + 1));
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 10 {
                return Err(bad());
            }
            let step = parts[0].parse().map_err(|_| bad())?;
            let v: Vec<f64> = parts[1..].iter().map(|p| p.parse().map_err(|_| bad())).collect::<Result<_>>()?;
            Ok(DiagnosticsRow {
                step,
                t: v[0],
                report: EnergyReport {
                    f_bulk: v[1],
                    f_elastic: v[2],
                    kinetic: v[3],
                    dissipation_viscous: v[4],
                    dissipation_rotational: v[5],
                    energy_law_residual: v[6],
                },
                div_u_max: v[7],
                tr_q_max: v[8],
            })
        })
        .collect()
}

/// Legacy VTK structured-points text: `SCALARS` for one component,
/// `VECTORS` for three, `TENSORS` for nine.
pub fn write_vtk<T: FieldValue>(out: &mut impl Write, name: &str, f: &Field<T>) -> io::Result<()> {
    let g = &f.grid;
    let d = g.dims();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "nematoflow {name}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} {}", d[0], d[1], d[2])?;
    writeln!(out, "ORIGIN {} {} {}", num(g.origin[0]), num(g.origin[1]), num(g.origin[2]))?;
    writeln!(out, "SPACING {} {} {}", num(g.h), num(g.h), num(g.h))?;
    writeln!(out, "POINT_DATA {}", g.len())?;
    match T::DIM {
        1 => writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default")?,
        3 => writeln!(out, "VECTORS {name} double")?,
        9 => writeln!(out, "TENSORS {name} double")?,
        n => return Err(io::Error::new(io::ErrorKind::InvalidInput, format!("no VTK attribute with {n} components"))),
    }
    let mut buf = vec![0.0; T::DIM];
    for v in &f.data {
        v.write_to(&mut buf);
        let row_len = if T::DIM == 9 { 3 } else { T::DIM };
        for chunk in buf.chunks(row_len) {
            let s: Vec<String> = chunk.iter().map(|x| num(*x)).collect();
            writeln!(out, "{}", s.join(" "))?;
        }
    }
    Ok(())
}

pub const RAW_MAGIC: &[u8; 8] = b"NMFRAW01";
pub const RAW_HEADER_LEN: usize = 64;

/// Raw dump: 64-byte header (magic, three node counts as u32, component
/// count as u32, spacing and origin as f64, zero padding) followed by the
/// node values as little-endian f64, x fastest, components interleaved.
pub fn write_raw<T: FieldValue>(out: &mut impl Write, f: &Field<T>) -> io::Result<()> {
    let g = &f.grid;
    let mut header = Vec::with_capacity(RAW_HEADER_LEN);
    header.extend_from_slice(RAW_MAGIC);
    for d in g.dims() {
        header.extend_from_slice(&(d as u32).to_le_bytes());
    }
    header.extend_from_slice(&(T::DIM as u32).to_le_bytes());
    header.extend_from_slice(&g.h.to_le_bytes());
    for o in g.origin {
        header.extend_from_slice(&o.to_le_bytes());
    }
    header.resize(RAW_HEADER_LEN, 0);
    out.write_all(&header)?;
    let mut buf = vec![0.0; T::DIM];
    for v in &f.data {
        v.write_to(&mut buf);
        for x in &buf {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Header of a raw dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawHeader {
    pub dims: [usize; 3],
    pub components: usize,
    pub h: f64,
    pub origin: [f64; 3],
}

/// Reads a raw dump back as its header and flat values.
pub fn read_raw(bytes: &[u8]) -> Result<(RawHeader, Vec<f64>)> {
    let bad = |m: &str| Error::invalid("read_raw", m.to_string());
    if bytes.len() < RAW_HEADER_LEN || &bytes[..8] != RAW_MAGIC {
        return Err(bad("not a raw field dump"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let header = RawHeader {
        dims: [u32_at(8), u32_at(12), u32_at(16)],
        components: u32_at(20),
        h: f64_at(24),
        origin: [f64_at(32), f64_at(40), f64_at(48)],
    };
    let n = header.dims.iter().product::<usize>() * header.components;
    let body = &bytes[RAW_HEADER_LEN..];
    if body.len() != 8 * n {
        return Err(bad("payload length does not match the header"));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

/// Writes one field dump named `{name}_{step:06}.{ext}` into `dir`.
pub fn dump_field<T: FieldValue>(dir: &Path, name: &str, step: usize, f: &Field<T>, vtk: bool) -> Result<PathBuf> {
    let ext = if vtk { "vtk" } else { "raw" };
    let path = dir.join(format!("{name}_{step:06}.{ext}"));
    let mut w = io::BufWriter::new(std::fs::File::create(&path)?);
    if vtk {
        write_vtk(&mut w, name, f)?;
    } else {
        write_raw(&mut w, f)?;
    }
    w.flush()?;
    Ok(path)
}

/// Grid described by a raw header, for reading dumps back into fields.
pub fn raw_grid(h: &RawHeader, periodic: [bool; 3]) -> GridSpec {
    let n = std::array::from_fn(|a| if periodic[a] { h.dims[a] } else { h.dims[a] - 1 });
    GridSpec { n, h: h.h, origin: h.origin, periodic }
}
