//! Output plumbing: CSV with a JSON metadata sidecar (or a `#`-prefixed
//! metadata line on stdout), and JSON reports. Keys are sorted and numbers
//! carry explicit precision, so identical configurations produce identical
//! bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub command: String,
    pub version: &'static str,
    pub q: Option<String>,
    pub family: Option<String>,
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    pub bits: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub columns: Vec<&'static str>,
}

impl Meta {
    pub fn new(command: &str) -> Self {
        Meta {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            q: None,
            family: None,
            params: BTreeMap::new(),
            n: None,
            bits: 0,
            grid_points: None,
            tolerances: BTreeMap::new(),
            columns: Vec::new(),
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// CSV rows to `out` plus `out.meta.json`, or to stdout with the metadata as
/// a leading `# `-comment line.
pub fn write_csv(out: Option<&Path>, meta: &Meta, rows: &[Vec<String>]) -> io::Result<()> {
    let mut body = String::new();
    body.push_str(&meta.columns.join(","));
    body.push('\n');
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    match out {
        Some(path) => {
            fs::write(path, body)?;
            let json = serde_json::to_string_pretty(meta).expect("meta serializes");
            fs::write(sidecar_path(path), json + "\n")
        }
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(
                stdout,
                "# {}",
                serde_json::to_string(meta).expect("meta serializes")
            )?;
            stdout.write_all(body.as_bytes())
        }
    }
}

/// Pretty JSON to `out` or stdout.
pub fn write_json(out: Option<&Path>, value: &serde_json::Value) -> io::Result<()> {
    let body = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    match out {
        Some(path) => fs::write(path, body),
        None => io::stdout().lock().write_all(body.as_bytes()),
    }
}

/// f64 in round-trip scientific form.
pub fn f64_str(v: f64) -> String {
    format!("{v:.17e}")
}

/// High-precision Float in decimal with digits matching its certified bits.
pub fn float_str(v: &rug::Float, bits: u32) -> String {
    let digits = (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
    v.to_string_radix(10, Some(digits))
}
