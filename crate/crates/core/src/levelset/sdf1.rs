//! The SDF1 grid file format.
//!
//! ASCII header, newline-terminated:
//!
//! ```text
//! SDF1
//! dims nx ny nz
//! origin ox oy oz
//! spacing sx sy sz
//! data le64            (or: data ascii)
//! ```
//!
//! followed by nx·ny·nz values in x-fastest order — raw little-endian IEEE-754
//! f64 for `le64`, whitespace-separated decimals for `ascii`. Values are
//! stored as 64-bit floats regardless of the in-memory scalar type.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use super::grid::{GridError, GridSpec, ScalarGrid};
use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum Sdf1Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("payload ended after {got} of {expected} values")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("invalid grid: {0}")]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataEncoding {
    Le64,
    Ascii,
}

fn header_err(line: usize, message: impl Into<String>) -> Sdf1Error {
    Sdf1Error::Header {
        line,
        message: message.into(),
    }
}

pub fn write_sdf1<S: Scalar>(
    grid: &ScalarGrid<S>,
    encoding: DataEncoding,
    path: impl AsRef<Path>,
) -> Result<(), Sdf1Error> {
    let mut w = BufWriter::new(File::create(path)?);
    let spec = grid.spec();
    let [nx, ny, nz] = spec.dims();
    let o = spec.origin();
    let h = spec.spacing();
    writeln!(w, "SDF1")?;
    writeln!(w, "dims {nx} {ny} {nz}")?;
    writeln!(w, "origin {} {} {}", o.x.as_f64(), o.y.as_f64(), o.z.as_f64())?;
    writeln!(w, "spacing {} {} {}", h.x.as_f64(), h.y.as_f64(), h.z.as_f64())?;
    match encoding {
        DataEncoding::Le64 => {
            writeln!(w, "data le64")?;
            for v in grid.values() {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
        DataEncoding::Ascii => {
            writeln!(w, "data ascii")?;
            // one x-row per line
            for (i, v) in grid.values().iter().enumerate() {
                if i % nx == nx - 1 {
                    writeln!(w, "{}", v.as_f64())?;
                } else {
                    write!(w, "{} ", v.as_f64())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_sdf1<S: Scalar>(path: impl AsRef<Path>) -> Result<ScalarGrid<S>, Sdf1Error> {
    let mut reader = BufReader::new(File::open(path)?);

    let mut read_line = |line_no: usize| -> Result<String, Sdf1Error> {
        let mut buf = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            match reader.read(&mut byte)? {
                0 => break,
                _ => {
                    if byte[0] == b'\n' {
                        break;
                    }
                    buf.push(byte[0]);
                }
            }
        }
        String::from_utf8(buf).map_err(|_| header_err(line_no, "header is not UTF-8"))
    };

    if read_line(1)? != "SDF1" {
        return Err(header_err(1, "expected magic `SDF1`"));
    }

    let dims_line = read_line(2)?;
    let dims = parse_prefixed::<usize>(&dims_line, "dims", 2)?;
    let origin_line = read_line(3)?;
    let origin = parse_prefixed::<f64>(&origin_line, "origin", 3)?;
    let spacing_line = read_line(4)?;
    let spacing = parse_prefixed::<f64>(&spacing_line, "spacing", 4)?;

    let data_line = read_line(5)?;
    let encoding = match data_line.as_str() {
        "data le64" => DataEncoding::Le64,
        "data ascii" => DataEncoding::Ascii,
        other => return Err(header_err(5, format!("unknown data mode `{other}`"))),
    };

    let spec = GridSpec::new(
        [dims[0], dims[1], dims[2]],
        Vector3::new(real(origin[0]), real(origin[1]), real(origin[2])),
        Vector3::new(real(spacing[0]), real(spacing[1]), real(spacing[2])),
    )?;
    let expected = spec.node_count();

    let values: Vec<S> = match encoding {
        DataEncoding::Le64 => {
            let mut payload = vec![0u8; expected * 8];
            let mut filled = 0;
            while filled < payload.len() {
                let n = reader.read(&mut payload[filled..])?;
                if n == 0 {
                    return Err(Sdf1Error::TruncatedPayload {
                        expected,
                        got: filled / 8,
                    });
                }
                filled += n;
            }
            payload
                .chunks_exact(8)
                .map(|c| real(f64::from_le_bytes(c.try_into().unwrap())))
                .collect()
        }
        DataEncoding::Ascii => {
            let mut text = String::new();
            reader.read_to_string(&mut text)?;
            let mut values = Vec::with_capacity(expected);
            for tok in text.split_whitespace() {
                if values.len() == expected {
                    break;
                }
                let v: f64 = tok
                    .parse()
                    .map_err(|_| header_err(6, format!("bad value `{tok}`")))?;
                values.push(real(v));
            }
            if values.len() < expected {
                return Err(Sdf1Error::TruncatedPayload {
                    expected,
                    got: values.len(),
                });
            }
            values
        }
    };

    Ok(ScalarGrid::new(spec, values)?)
}

fn parse_prefixed<T: std::str::FromStr>(
    line: &str,
    prefix: &str,
    line_no: usize,
) -> Result<[T; 3], Sdf1Error> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(prefix) {
        return Err(header_err(line_no, format!("expected `{prefix} ...`")));
    }
    let mut out = Vec::with_capacity(3);
    for tok in tokens {
        out.push(
            tok.parse::<T>()
                .map_err(|_| header_err(line_no, format!("bad token `{tok}`")))?,
        );
    }
    out.try_into()
        .map_err(|_| header_err(line_no, format!("`{prefix}` needs exactly 3 values")))
}
