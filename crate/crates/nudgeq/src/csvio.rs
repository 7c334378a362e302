//! Minimal CSV read/write for numeric tables.
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write → read cycle reproduces every value bit-for-bit and repeated runs
//! of a deterministic computation produce byte-identical files.

use std::io::{self, BufRead, Write};

/// Write a header line and numeric rows.
pub fn write_rows<W: Write>(
    mut w: W,
    header: &str,
    rows: impl Iterator<Item = Vec<f64>>,
) -> io::Result<()> {
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            if v.is_nan() {
                line.push_str("nan");
            } else {
                line.push_str(&format!("{v}"));
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Read a header line and numeric rows written by [`write_rows`].
/// `nan` cells parse as NaN; every row must have the header's column count.
pub fn read_rows<R: BufRead>(r: R) -> io::Result<(String, Vec<Vec<f64>>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "empty csv"))??;
    let ncols = header.split(',').count();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                if cell == "nan" {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>().map_err(|e| {
                        io::Error::new(
                            io::ErrorKind::InvalidData,
                            format!("bad csv cell {cell:?}: {e}"),
                        )
                    })
                }
            })
            .collect::<io::Result<_>>()?;
        if row.len() != ncols {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("row has {} cells, header has {ncols}", row.len()),
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
