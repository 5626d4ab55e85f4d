//! File formats.
//!
//! Matrices are read and written either as CSV (one row per line,
//! comma-separated decimals) or in a little-endian binary layout:
//!
//! ```text
//! magic  b"B1CS"
//! u32    m
//! u32    n
//! f64    m·n entries, row-major
//! ```
//!
//! Result tables are CSV with a header row, `.` as decimal separator and LF
//! line endings. Floats use Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::io::{BufRead, Read, Write};

use crate::biht::Trajectory;
use crate::error::{Error, Result};
use crate::measure::MeasurementMatrix;
use crate::montecarlo::Validation;
use crate::raic::RaicReport;

pub const BINARY_MAGIC: &[u8; 4] = b"B1CS";

pub const TRAJECTORY_HEADER: &str = "trial,iter,d_s,mismatch_L,lemma1_rhs";
pub const RAIC_HEADER: &str = "pair_id,d_s,regime,residual,bound,ratio";
pub const VALIDATION_HEADER: &str = "name,estimate,theory,se,z,pass";

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|field| {
            field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("{field:?}: {e}"),
            })
        })
        .collect()
}

/// Reads a dense matrix from CSV. Blank lines are ignored.
pub fn read_matrix_csv<R: BufRead>(reader: R) -> Result<MeasurementMatrix> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(&line, i + 1)?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty matrix".into(),
        });
    }
    MeasurementMatrix::from_rows(&rows)
}

pub fn write_matrix_csv<W: Write>(mut w: W, a: &MeasurementMatrix) -> Result<()> {
    for i in 0..a.rows() {
        write_vector_row(&mut w, a.row(i))?;
    }
    Ok(())
}

fn write_vector_row<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let line = values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",");
    writeln!(w, "{line}")?;
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut reader: R) -> Result<MeasurementMatrix> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: format!("bad magic {magic:?}"),
        });
    }
    let mut word = [0u8; 4];
    reader.read_exact(&mut word)?;
    let m = u32::from_le_bytes(word) as usize;
    reader.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    let mut data = vec![0.0; m * n];
    let mut buf = [0u8; 8];
    for x in data.iter_mut() {
        reader.read_exact(&mut buf)?;
        *x = f64::from_le_bytes(buf);
    }
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: format!("{} trailing bytes after matrix payload", rest.len()),
        });
    }
    MeasurementMatrix::from_vec(m, n, data)
}

pub fn write_matrix_binary<W: Write>(mut w: W, a: &MeasurementMatrix) -> Result<()> {
    let dim = |x: usize| {
        u32::try_from(x).map_err(|_| Error::Invalid(format!("dimension {x} exceeds u32")))
    };
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&dim(a.rows())?.to_le_bytes())?;
    w.write_all(&dim(a.cols())?.to_le_bytes())?;
    for x in a.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a vector stored one value per line.
pub fn read_vector_csv<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.extend(parse_row(&line, i + 1)?);
    }
    Ok(out)
}

pub fn write_vector_csv<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| f64::NAN.to_string(), |v| v.to_string())
}

/// Writes trajectories as `trial,iter,d_s,mismatch_L,lemma1_rhs`. Unknown
/// values (no ground truth, or `lemma1_rhs` at iteration 0) are `NaN`.
pub fn write_trajectory_csv<W: Write>(mut w: W, trajectories: &[Trajectory]) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (trial, tr) in trajectories.iter().enumerate() {
        for r in &tr.records {
            writeln!(
                w,
                "{trial},{},{},{},{}",
                r.iter,
                opt(r.error_ds),
                r.mismatch,
                opt(r.lemma1_rhs)
            )?;
        }
    }
    Ok(())
}

pub fn write_raic_csv<W: Write>(mut w: W, report: &RaicReport) -> Result<()> {
    writeln!(w, "{RAIC_HEADER}")?;
    for r in &report.records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.pair_id,
            r.d_s,
            r.regime.as_str(),
            r.residual,
            r.bound,
            r.ratio
        )?;
    }
    Ok(())
}

pub fn write_validation_csv<W: Write>(mut w: W, rows: &[Validation]) -> Result<()> {
    writeln!(w, "{VALIDATION_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.name, r.estimate, r.theory, r.se, r.z, r.pass
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;

    #[test]
    fn csv_matrix_parsing() {
        let a = read_matrix_csv("1,2,3\n4.5,-6,7e-1\n\n".as_bytes()).unwrap();
        assert_eq!((a.rows(), a.cols()), (2, 3));
        assert_eq!(a.row(1), &[4.5, -6.0, 0.7]);
        assert!(read_matrix_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_matrix_csv("1,x\n".as_bytes()).is_err());
        assert!(read_matrix_csv("".as_bytes()).is_err());
    }

    #[test]
    fn binary_layout() {
        let a = MeasurementMatrix::from_vec(1, 2, vec![1.0, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &a).unwrap();
        let mut want = b"B1CS".to_vec();
        want.extend(1u32.to_le_bytes());
        want.extend(2u32.to_le_bytes());
        want.extend(1.0f64.to_le_bytes());
        want.extend((-2.0f64).to_le_bytes());
        assert_eq!(buf, want);
        assert_eq!(read_matrix_binary(buf.as_slice()).unwrap(), a);

        let mut truncated = buf.clone();
        truncated.pop();
        assert!(read_matrix_binary(truncated.as_slice()).is_err());
        buf[0] = b'X';
        assert!(read_matrix_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn gaussian_matrix_survives_both_formats() {
        let a = MeasurementMatrix::gaussian(6, 4, SeedSpec::new(1, 1)).unwrap();
        let mut csv = Vec::new();
        write_matrix_csv(&mut csv, &a).unwrap();
        let back = read_matrix_csv(csv.as_slice()).unwrap();
        assert_eq!(back.data(), a.data());
        let mut bin = Vec::new();
        write_matrix_binary(&mut bin, &a).unwrap();
        assert_eq!(read_matrix_binary(bin.as_slice()).unwrap().data(), a.data());
    }

    #[test]
    fn vector_csv() {
        let mut buf = Vec::new();
        write_vector_csv(&mut buf, &[0.5, -1.0]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0.5\n-1\n");
        assert_eq!(read_vector_csv(buf.as_slice()).unwrap(), vec![0.5, -1.0]);
    }
}
