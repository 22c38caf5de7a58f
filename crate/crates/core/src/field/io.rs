//! CSV serialization: header `x[,y],value`, one node per row, last axis fastest.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use super::{Boundary, GridField};
use crate::error::{Error, Result};

pub fn write_csv(path: impl AsRef<Path>, f: &GridField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(std::io::BufWriter::new(file), f)
}

pub fn write_csv_to<W: Write>(w: W, f: &GridField) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if f.dim() == 1 {
        wtr.write_record(["x", "value"])?;
    } else {
        wtr.write_record(["x", "y", "value"])?;
    }
    for (k, x) in f.coords().enumerate() {
        let v = f.values()[k].to_string();
        if f.dim() == 1 {
            wtr.write_record([x[0].to_string(), v])?;
        } else {
            wtr.write_record([x[0].to_string(), x[1].to_string(), v])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<GridField> {
    read_csv_from(std::fs::File::open(path)?)
}

/// Parse a field; spacing, origin and shape are recovered from the coordinates.
pub fn read_csv_from<R: Read>(r: R) -> Result<GridField> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let dim = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "value"] => 1,
        ["x", "y", "value"] => 2,
        _ => return Err(Error::Parse(format!("unexpected header {header:?}"))),
    };
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut row = [0.0; 3];
        for (k, cell) in rec.iter().enumerate().take(dim + 1) {
            row[k] = cell.parse().map_err(|e| Error::Parse(format!("{cell:?}: {e}")))?;
        }
        if dim == 1 {
            row[2] = row[1];
            row[1] = 0.0;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let axis = |k: usize| -> Vec<f64> {
        let set: BTreeSet<u64> = rows.iter().map(|r| r[k].to_bits()).collect();
        let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let xs = axis(0);
    let ys = if dim == 2 { axis(1) } else { vec![0.0] };
    let nx = xs.len();
    let ny = ys.len();
    if nx * ny != rows.len() {
        return Err(Error::Parse(format!("{} rows do not form a {nx}x{ny} lattice", rows.len())));
    }
    let spacing = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { f64::NAN };
    let h = match (spacing(&xs), spacing(&ys)) {
        (a, b) if a.is_nan() && b.is_nan() => 1.0,
        (a, b) if a.is_nan() => b,
        (a, b) if b.is_nan() || (a - b).abs() <= 1e-9 * a => a,
        (a, b) => return Err(Error::Parse(format!("anisotropic spacing {a} vs {b}"))),
    };
    let origin = [xs[0], ys[0]];
    let mut values = vec![f64::NAN; nx * ny];
    for r in &rows {
        let i = ((r[0] - origin[0]) / h).round() as usize;
        let j = if dim == 2 { ((r[1] - origin[1]) / h).round() as usize } else { 0 };
        if i >= nx || j >= ny || (origin[0] + i as f64 * h - r[0]).abs() > 1e-6 * h {
            return Err(Error::Parse(format!("coordinate ({}, {}) is off the lattice", r[0], r[1])));
        }
        values[i * ny + j] = r[2];
    }
    GridField::new(dim, h, origin, [nx, ny], values, Boundary::ConstantExtension)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_1d_and_2d() {
        let f = GridField::from_fn_1d(-1.0, 1.0, 0.125, |x| x.sin() / 3.0);
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,value\n"));
        assert_eq!(read_csv_from(buf.as_slice()).unwrap(), f);

        let g = GridField::from_fn_2d(0.0, 1.0, 0.25, |x, y| x - 2.0 * y);
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &g).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x,y,value\n"));
        assert_eq!(read_csv_from(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_csv_from("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_csv_from("x,value\n".as_bytes()).is_err());
        assert!(read_csv_from("x,value\n0,abc\n".as_bytes()).is_err());
        assert!(read_csv_from("x,y,value\n0,0,1\n1,0,1\n0,1,1\n".as_bytes()).is_err());
    }
}
