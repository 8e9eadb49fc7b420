//! Shared output conventions: number formatting, self-describing headers and
//! atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use qsim_core::stats::{CorrelationMatrix, MeasureMatrix, NmiMatrix};
use serde::Serialize;

pub const TOOLKIT: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Shortest decimal that round-trips to the same `f64`; empty for missing.
pub fn fmt_num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

pub fn csv_header(digest: &str) -> String {
    format!("# toolkit={TOOLKIT} config_digest={digest}\n")
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Wraps a payload with the toolkit version and config digest.
#[derive(Serialize)]
pub struct Stamped<'a, T: Serialize> {
    pub toolkit: &'static str,
    pub config_digest: &'a str,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_json<T: Serialize>(digest: &str, body: T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&Stamped {
        toolkit: TOOLKIT,
        config_digest: digest,
        body,
    })
    .expect("report serializes");
    out.push(b'\n');
    out
}

fn csv_line(cells: impl IntoIterator<Item = String>) -> String {
    let mut line = cells.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

/// A square matrix with a header row and column of measure names.
pub fn square_csv(
    digest: &str,
    names: &[String],
    get: impl Fn(usize, usize) -> Option<f64>,
) -> String {
    let mut out = csv_header(digest);
    out += &csv_line(std::iter::once(String::new()).chain(names.iter().cloned()));
    for (i, name) in names.iter().enumerate() {
        out += &csv_line(
            std::iter::once(name.clone()).chain((0..names.len()).map(|j| fmt_num(get(i, j)))),
        );
    }
    out
}

pub fn correlation_csv(digest: &str, c: &CorrelationMatrix<f64>) -> String {
    square_csv(digest, &c.names, |i, j| c.get(i, j))
}

pub fn nmi_csv(digest: &str, m: &NmiMatrix<f64>) -> String {
    square_csv(digest, &m.names, |i, j| m.get(i, j))
}

pub const KEY_COLUMNS: [&str; 3] = ["simulator_id", "session_id", "rank"];

/// The measure matrix: one row per pair, missing cells empty.
pub fn matrix_csv(digest: &str, m: &MeasureMatrix<f64>) -> String {
    let mut out = csv_header(digest);
    out += &csv_line(
        KEY_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(m.column_names().iter().cloned()),
    );
    for (r, key) in m.row_keys().iter().enumerate() {
        out += &csv_line(
            [
                key.simulator_id.clone(),
                key.session_id.clone(),
                key.rank.to_string(),
            ]
            .into_iter()
            .chain(m.row(r).iter().map(|&v| fmt_num(v))),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-9, 1.0, 123456.789] {
            assert_eq!(fmt_num(Some(x)).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(Some(1.0)), "1");
        assert_eq!(fmt_num(None), "");
    }
}
