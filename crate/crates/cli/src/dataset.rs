//! `xi,zeta` observation files.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use condks::ObservationPair;

/// Reads an `xi,zeta` CSV. Errors name the offending line.
pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<ObservationPair>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header = rdr.headers().context("line 1: unreadable header")?;
    let fields: Vec<&str> = header.iter().collect();
    if fields != ["xi", "zeta"] {
        bail!(
            "line 1: header must be `xi,zeta`, found `{}`",
            fields.join(",")
        );
    }
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                bail!("line {line}: {e}");
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let number = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("").trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => bail!("line {line}: {name} `{raw}` is not a finite number"),
            }
        };
        pairs.push(ObservationPair::new(number(0, "xi")?, number(1, "zeta")?));
    }
    if pairs.is_empty() {
        bail!("no data rows after the header");
    }
    Ok(pairs)
}

pub fn read_pairs_path(path: &Path) -> Result<Vec<ObservationPair>> {
    let file =
        std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_pairs(file).with_context(|| path.display().to_string())
}

pub fn write_pairs<W: Write>(mut out: W, pairs: &[ObservationPair]) -> std::io::Result<()> {
    writeln!(out, "xi,zeta")?;
    for p in pairs {
        writeln!(out, "{},{}", p.xi, p.zeta)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_lf_and_crlf() {
        let pairs = read_pairs("xi,zeta\r\n1.5,2\r\n-3,0.25\n".as_bytes()).unwrap();
        assert_eq!(
            pairs,
            [
                ObservationPair::new(1.5, 2.0),
                ObservationPair::new(-3.0, 0.25)
            ]
        );
    }

    #[test]
    fn errors_name_the_line() {
        let err = read_pairs("xi,zeta\n1,2\n3,oops\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = read_pairs("xi,zeta\n1,2\n3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = read_pairs("xi,zeta\n1,inf\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = read_pairs("zeta,xi\n1,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        assert!(read_pairs("xi,zeta\n".as_bytes()).is_err());
    }

    #[test]
    fn writes_what_it_reads() {
        let pairs = vec![
            ObservationPair::new(0.1, -2.0),
            ObservationPair::new(1e-300, 7.0),
        ];
        let mut buf = Vec::new();
        write_pairs(&mut buf, &pairs).unwrap();
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), pairs);
    }
}
