//! Matrix Market coordinate I/O for [`CsrMatrix`].
//!
//! Only the `matrix coordinate real general` flavor is supported, which is
//! what the instance files use. Indices are 1-based on disk per the format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{CsrMatrix, LinalgError};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Writes `a` in Matrix Market coordinate format. Output is deterministic:
/// entries in row-major order, values in shortest round-trip scientific form.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (r, c, v) in a.iter_entries() {
        writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

pub fn write_matrix_market_file(a: &CsrMatrix, path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(a, &mut w)?;
    w.flush()
}

/// Reads a Matrix Market coordinate file produced by [`write_matrix_market`]
/// or any conforming writer of the `real general` flavor.
pub fn read_matrix_market<R: BufRead>(r: R) -> Result<CsrMatrix, LinalgError> {
    let mut lines = r.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(parse_err(0, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    let expected = ["%%matrixmarket", "matrix", "coordinate", "real", "general"];
    if tokens.len() != expected.len() || tokens.iter().zip(expected).any(|(t, e)| t != e) {
        return Err(parse_err(1, &format!("unsupported header (want `{HEADER}`)")));
    }

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (line_no, line) in lines {
        let text = line?;
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(line_no + 1, "size line must have 3 fields"));
                }
                let n_rows = parse_usize(fields[0], line_no)?;
                let n_cols = parse_usize(fields[1], line_no)?;
                let nnz = parse_usize(fields[2], line_no)?;
                dims = Some((n_rows, n_cols, nnz));
                triplets.reserve(nnz);
            }
            Some((n_rows, n_cols, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(line_no + 1, "entry line must have 3 fields"));
                }
                let r = parse_usize(fields[0], line_no)?;
                let c = parse_usize(fields[1], line_no)?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(line_no + 1, "bad value"))?;
                if r == 0 || c == 0 || r > n_rows || c > n_cols {
                    return Err(parse_err(line_no + 1, "index out of range (1-based)"));
                }
                triplets.push((r - 1, c - 1, v));
            }
        }
    }
    let (n_rows, n_cols, nnz) = dims.ok_or_else(|| parse_err(0, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(parse_err(
            0,
            &format!("entry count {} does not match header {nnz}", triplets.len()),
        ));
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &triplets)
}

pub fn read_matrix_market_file(path: &Path) -> Result<CsrMatrix, LinalgError> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

fn parse_err(line: usize, message: &str) -> LinalgError {
    LinalgError::Parse {
        line,
        message: message.to_string(),
    }
}

fn parse_usize(s: &str, line_no: usize) -> Result<usize, LinalgError> {
    s.parse()
        .map_err(|_| parse_err(line_no + 1, "bad integer"))
}
