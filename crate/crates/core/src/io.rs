//! Atomic file output: write to a temporary file in the target directory,
//! then rename over the destination.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, GridField};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn csv_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        kind: "field csv",
        line,
        message: message.into(),
    }
}

/// Reads a field from a CSV whose first two columns are the cell centre and
/// the density, after one header line (the snapshot format qualifies).
/// Centres must be uniformly spaced and increasing.
pub fn read_field_csv(text: &str, bc: BoundaryKind) -> Result<GridField> {
    let mut x = Vec::new();
    let mut rho = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let mut next = |what: &str| -> Result<f64> {
            let c = cols.next().ok_or_else(|| csv_error(idx + 1, format!("missing {what} column")))?;
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| csv_error(idx + 1, format!("bad {what} `{c}`")))
        };
        x.push(next("x")?);
        rho.push(next("density")?);
    }
    if x.len() < 2 {
        return Err(csv_error(0, "need at least two data rows"));
    }
    let dx = x[1] - x[0];
    if !(dx > 0.0) {
        return Err(csv_error(3, "cell centres must increase"));
    }
    for (k, w) in x.windows(2).enumerate() {
        if ((w[1] - w[0]) - dx).abs() > 1e-6 * dx {
            return Err(csv_error(k + 3, "cell centres must be uniformly spaced"));
        }
    }
    let left = x[0] - 0.5 * dx;
    GridField::new(rho, left, left + dx * x.len() as f64, bc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_csv_round_trip_and_errors() {
        let f = read_field_csv("x_center,rho,phi\n0.25,1,0\n0.75,2,0\n", BoundaryKind::NoFlux).unwrap();
        assert_eq!(f.values, vec![1.0, 2.0]);
        assert!((f.left - 0.0).abs() < 1e-15 && (f.right - 1.0).abs() < 1e-15);
        let bad = read_field_csv("x,rho\n0.25,1\n0.75,oops\n", BoundaryKind::NoFlux);
        assert!(matches!(bad, Err(Error::Parse { line: 3, .. })));
        let uneven = read_field_csv("x,rho\n0,1\n1,1\n3,1\n", BoundaryKind::NoFlux);
        assert!(matches!(uneven, Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
