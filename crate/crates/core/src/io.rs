//! CSV and file helpers.
//!
//! Complex matrices are stored without a header, one matrix row per line, with
//! interleaved `re,im` columns. Floats are written with 17 significant digits
//! so a write/read cycle is lossless.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.display().to_string(),
            source,
        },
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Lossless float formatting used by every CSV writer in the crate.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn read_complex_csv(path: &Path) -> Result<CMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() % 2 != 0 {
            return Err(Error::Parse(format!(
                "{} line {}: odd number of columns in interleaved complex row",
                path.display(),
                line + 1
            )));
        }
        let vals: Vec<f64> = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{} line {}: {e}", path.display(), line + 1)))
            })
            .collect::<Result<_>>()?;
        rows.push(vals.chunks(2).map(|p| C64::new(p[0], p[1])).collect());
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{}: ragged rows", path.display())));
    }
    Ok(CMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn complex_csv_string(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols())
            .flat_map(|j| [fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)])
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_complex_csv(path: &Path, m: &CMatrix) -> Result<()> {
    write_atomic(path, complex_csv_string(m).as_bytes())
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_csv_roundtrip_is_lossless() {
        let m = CMatrix::from_fn(3, 2, |i, j| C64::new(0.1 * i as f64 + 1.0 / 3.0, -(j as f64) * 1e-17 + 2.0f64.sqrt()));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        write_complex_csv(&path, &m).unwrap();
        let back = read_complex_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn odd_columns_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "1,2,3\n").unwrap();
        assert!(matches!(read_complex_csv(&path), Err(Error::Parse(_))));
    }
}
