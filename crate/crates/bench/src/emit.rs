use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::experiment::{ResultRow, Summary};

pub const CSV_HEADER: &str = "method,theta,seed,n,m,p,q,k,residual_rel,dist_sq,lyapunov,elapsed_ns";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Header(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> EmitError + '_ {
    move |source| EmitError::Io { path: path.to_path_buf(), source }
}

/// Rows in the order given; floats use the shortest representation that
/// parses back to the same value. Missing values are empty fields.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), EmitError> {
    let f = File::create(path).map_err(io_err(path))?;
    write_csv(rows, io::BufWriter::new(f)).map_err(|source| EmitError::Csv { path: path.to_path_buf(), source })
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, EmitError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| EmitError::Header(e.to_string()))?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(EmitError::Header(format!("unexpected header '{header}'")));
    }
    r.deserialize().collect::<Result<_, _>>().map_err(|e| EmitError::Header(e.to_string()))
}

pub fn load_csv(path: &Path) -> Result<Vec<ResultRow>, EmitError> {
    let f = File::open(path).map_err(io_err(path))?;
    read_csv(f)
}

pub fn emit_summary_json(summary: &Summary, path: &Path) -> Result<(), EmitError> {
    let text = serde_json::to_string_pretty(summary).expect("summary serialises");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, theta: Option<f64>, k: usize, res: f64) -> ResultRow {
        ResultRow {
            method: method.into(),
            theta,
            seed: 1,
            n: 2,
            m: 2,
            p: 1,
            q: 1,
            k,
            residual_rel: res,
            dist_sq: if theta.is_some() { Some(res * 0.1) } else { None },
            lyapunov: None,
            elapsed_ns: 17,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_round_trip_exactly() {
        let rows = vec![
            row("gapd", Some(0.99), 0, 1.0),
            row("gapd", Some(0.99), 1, 0.1 + 0.2),
            row("gda", None, 2, 1e-300),
            row("gda", None, 3, std::f64::consts::PI),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("gapd,0.99,1,2,2,1,1,1,0.30000000000000004,"), "{text}");
        assert!(text.contains("gda,,1,2,2,1,1,2,1e-300,,,17"), "{text}");
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let e = emit_csv(&[], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
