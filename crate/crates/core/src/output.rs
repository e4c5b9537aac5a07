//! Snapshot, diagnostics and band-table writers. Text files are
//! tab-separated with a `#`-prefixed header block carrying the resolved
//! configuration; the binary format is an 8-byte magic, a version word,
//! a JSON header and little-endian f64 data.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::PolaritonPoint;
use crate::error::{CoreError, Result};
use crate::grid::Grid;
use crate::mb::{DiagSeries, FieldState};

pub const BINARY_MAGIC: &[u8; 8] = b"EITSNP01";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Text,
    Binary,
}

/// A header block: free-form key/value lines plus the resolved scenario.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Header {
    pub title: String,
    pub columns: Vec<String>,
    /// Resolved configuration, normally the scenario TOML.
    pub config: String,
    pub extra: Vec<(String, String)>,
}

impl Header {
    pub fn new(title: &str, columns: &[&str], config: &str) -> Self {
        Header {
            title: title.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            config: config.into(),
            extra: Vec::new(),
        }
    }

    fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# {}", self.title)?;
        writeln!(w, "# units: normalized (omega_p = k_p = c = 1) unless stated")?;
        for (k, v) in &self.extra {
            writeln!(w, "# {k}: {v}")?;
        }
        if !self.config.is_empty() {
            writeln!(w, "# config:")?;
            for line in self.config.lines() {
                writeln!(w, "#   {line}")?;
            }
        }
        writeln!(w, "# columns: {}", self.columns.join("\t"))?;
        Ok(())
    }
}

/// Write a numeric table in the requested format.
pub fn write_table(
    path: &Path,
    header: &Header,
    rows: impl Iterator<Item = Vec<f64>>,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Text => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
            header.write_text(&mut w)?;
            for row in rows {
                let mut first = true;
                for v in row {
                    if !first {
                        write!(w, "\t")?;
                    }
                    write!(w, "{v:.17e}")?;
                    first = false;
                }
                writeln!(w)?;
            }
            Ok(())
        }
        OutputFormat::Binary => {
            let data: Vec<Vec<f64>> = rows.collect();
            let n_rows = data.len() as u64;
            let n_cols = header.columns.len() as u64;
            let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
            w.write_all(BINARY_MAGIC)?;
            w.write_all(&BINARY_VERSION.to_le_bytes())?;
            let header_json = serde_json::to_vec(header)
                .map_err(|e| CoreError::Config(format!("header encode: {e}")))?;
            w.write_all(&(header_json.len() as u32).to_le_bytes())?;
            w.write_all(&header_json)?;
            w.write_all(&n_rows.to_le_bytes())?;
            w.write_all(&n_cols.to_le_bytes())?;
            for row in &data {
                debug_assert_eq!(row.len() as u64, n_cols);
                for v in row {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            Ok(())
        }
    }
}

/// Read back a binary table (header, row-major data).
pub fn read_binary_table(path: &Path) -> Result<(Header, Vec<Vec<f64>>)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(CoreError::Config("bad magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    if u32::from_le_bytes(word) != BINARY_VERSION {
        return Err(CoreError::Config("unsupported version".into()));
    }
    r.read_exact(&mut word)?;
    let hlen = u32::from_le_bytes(word) as usize;
    let mut hbuf = vec![0u8; hlen];
    r.read_exact(&mut hbuf)?;
    let header: Header = serde_json::from_slice(&hbuf)
        .map_err(|e| CoreError::Config(format!("header decode: {e}")))?;
    let mut qword = [0u8; 8];
    r.read_exact(&mut qword)?;
    let n_rows = u64::from_le_bytes(qword) as usize;
    r.read_exact(&mut qword)?;
    let n_cols = u64::from_le_bytes(qword) as usize;
    let mut data = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut row = Vec::with_capacity(n_cols);
        for _ in 0..n_cols {
            r.read_exact(&mut qword)?;
            row.push(f64::from_le_bytes(qword));
        }
        data.push(row);
    }
    Ok((header, data))
}

pub const MB_SNAPSHOT_COLUMNS: [&str; 8] = [
    "x", "re_e", "im_e", "abs2_e", "re_rho_eg", "im_rho_eg", "re_rho_mg", "im_rho_mg",
];

/// Write an MB snapshot in the lab-frame envelope convention (the stored
/// co-rotating fields are multiplied back by `e^{i k_p x}`).
pub fn write_mb_snapshot(
    path: &Path,
    grid: &Grid,
    state: &FieldState,
    config: &str,
    format: OutputFormat,
) -> Result<()> {
    let mut header = Header::new("field snapshot", &MB_SNAPSHOT_COLUMNS, config);
    header
        .extra
        .push(("t".into(), format!("{:.17e}", state.t)));
    header.extra.push((
        "frame".into(),
        "lab envelope (spatial carrier e^{i k_p x} included)".into(),
    ));
    let rows = (0..grid.n_points).map(|i| {
        let x = grid.x(i);
        let carrier = Complex64::from_polar(1.0, x);
        let e = state.e[i] * carrier;
        let p = state.rho_eg[i] * carrier;
        let s = state.rho_mg[i] * carrier;
        vec![x, e.re, e.im, e.norm_sqr(), p.re, p.im, s.re, s.im]
    });
    write_table(path, &header, rows, format)
}

pub const FLOW_SNAPSHOT_COLUMNS: [&str; 4] = ["x", "intensity", "v_gr", "n_p"];

pub fn write_flow_snapshot(
    path: &Path,
    x0: f64,
    dx: f64,
    intensity: &[f64],
    velocity: &[f64],
    t: f64,
    config: &str,
    format: OutputFormat,
) -> Result<()> {
    let mut header = Header::new("intensity snapshot", &FLOW_SNAPSHOT_COLUMNS, config);
    header.extra.push(("t".into(), format!("{t:.17e}")));
    let rows = intensity.iter().zip(velocity).enumerate().map(|(i, (y, v))| {
        let x = x0 + (i as f64 + 0.5) * dx;
        vec![x, *y, *v, y / v]
    });
    write_table(path, &header, rows, format)
}

pub const DIAG_COLUMNS: [&str; 6] = ["t", "n_pol", "x_peak", "e2_peak", "w_em", "w_at"];

pub fn write_diag_series(
    path: &Path,
    series: &DiagSeries,
    config: &str,
    format: OutputFormat,
) -> Result<()> {
    let header = Header::new("diagnostics series", &DIAG_COLUMNS, config);
    let rows = (0..series.t.len()).map(|i| {
        vec![
            series.t[i],
            series.n_pol[i],
            series.x_peak[i],
            series.e2_peak[i],
            series.w_em[i],
            series.w_at[i],
        ]
    });
    write_table(path, &header, rows, format)
}

/// Band-structure table: `k`, three complex branch frequencies, and the
/// nine composition weights.
pub fn write_band_table(
    path: &Path,
    points: &[PolaritonPoint],
    config: &str,
    format: OutputFormat,
) -> Result<()> {
    let columns: Vec<String> = std::iter::once("k".to_string())
        .chain((0..3).map(|b| format!("re_omega_{b}")))
        .chain((0..3).map(|b| format!("im_omega_{b}")))
        .chain((0..3).flat_map(|b| {
            ["w_photon", "w_eg", "w_mg"]
                .iter()
                .map(move |c| format!("{c}_{b}"))
        }))
        .collect();
    let col_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let header = Header::new("polariton band structure", &col_refs, config);
    let rows = points.iter().map(|pt| {
        let mut row = vec![pt.k];
        row.extend(pt.omega.iter().map(|w| w.re));
        row.extend(pt.omega.iter().map(|w| w.im));
        for b in 0..3 {
            row.extend_from_slice(&pt.weights[b]);
        }
        row
    });
    write_table(path, &header, rows, format)
}

/// Machine-readable run summary.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub engine: String,
    pub deterministic: bool,
    pub warnings: Vec<String>,
    pub n_pol_initial: Option<f64>,
    pub n_pol_final: Option<f64>,
    pub x_peak_final: Option<f64>,
    pub e2_peak_final: Option<f64>,
    pub engine_l2: Option<f64>,
    pub files: Vec<String>,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let body = serde_json::to_string_pretty(summary)
        .map_err(|e| CoreError::Config(format!("summary encode: {e}")))?;
    std::fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_table_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        let header = Header::new("test", &["a", "b"], "x = 1");
        write_table(
            &path,
            &header,
            vec![vec![1.0, 2.0], vec![3.0, 4.0]].into_iter(),
            OutputFormat::Text,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# test"));
        assert!(text.contains("# columns: a\tb"));
        assert!(text.contains("# config:"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
    }

    proptest! {
        #[test]
        fn binary_round_trip(rows in proptest::collection::vec(
            proptest::collection::vec(-1e12f64..1e12, 3), 0..40)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.bin");
            let header = Header::new("rt", &["a", "b", "c"], "cfg = true");
            write_table(&path, &header, rows.clone().into_iter(), OutputFormat::Binary).unwrap();
            let (h2, data) = read_binary_table(&path).unwrap();
            prop_assert_eq!(h2.columns.len(), 3);
            prop_assert_eq!(&data, &rows);
        }
    }
}
