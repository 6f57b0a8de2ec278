//! Deterministic CSV and JSON emission.
//!
//! Every file starts with a metadata block of `# ` comment lines holding the
//! tool version, the subcommand and the full config, which
//! [`crate::config::config_from_metadata`] parses back. Numbers carry 17
//! significant digits.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::protocols::{RampResult, SweepResult};

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// A numeric table with named columns and optional footer entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub footer: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn footer(&mut self, key: &str, value: impl ToString) {
        self.footer.push((key.to_string(), value.to_string()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// `x` with 17 significant digits.
pub fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn metadata(command: &str, config: Option<&RunConfig>) -> String {
    let mut out = format!("# {TOOL}\n# command: {command}\n");
    if let Some(c) = config {
        out.push_str("# --- config ---\n");
        for line in c.to_toml().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("# --- end config ---\n");
    }
    out
}

pub fn to_csv(table: &Table, command: &str, config: Option<&RunConfig>) -> String {
    let mut out = metadata(command, config);
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&x| number(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    for (k, v) in &table.footer {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    tool: &'a str,
    command: &'a str,
    /// TOML text; JSON has no infinity.
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<String>,
    columns: &'a [String],
    rows: Vec<Vec<String>>,
    footer: serde_json::Map<String, serde_json::Value>,
}

/// JSON mirror of [`to_csv`]; numbers are strings with the same 17 digits.
pub fn to_json(table: &Table, command: &str, config: Option<&RunConfig>) -> String {
    let doc = JsonDoc {
        tool: TOOL,
        command,
        config: config.map(RunConfig::to_toml),
        columns: &table.columns,
        rows: table.rows.iter().map(|r| r.iter().map(|&x| number(x)).collect()).collect(),
        footer: table
            .footer
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

pub fn render(table: &Table, format: Format, command: &str, config: Option<&RunConfig>) -> String {
    match format {
        Format::Csv => to_csv(table, command, config),
        Format::Json => to_json(table, command, config),
    }
}

/// Writes to `path`, or standard output when `None`.
pub fn write(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

/// `<stem>_modes.<ext>` next to `path`.
pub fn modes_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_modes.{ext}"),
        None => format!("{stem}_modes"),
    };
    path.with_file_name(name)
}

pub fn ramp_table(r: &RampResult) -> Table {
    let mut t = Table::new(&["t", "mu", "T", "excitation_density"]);
    for s in &r.samples {
        t.push(vec![s.t, s.mu, s.temperature, s.excitation_density]);
    }
    t
}

/// Long-format occupations of the representative momenta `0..=pi`.
pub fn modes_table(r: &RampResult) -> Table {
    let mut t = Table::new(&["t", "k", "occupation"]);
    for (s, occ) in r.samples.iter().zip(&r.occupations) {
        for (&k, &n) in r.momenta.iter().zip(occ) {
            t.push(vec![s.t, k, n]);
        }
    }
    t
}

pub fn sweep_table(r: &SweepResult) -> Table {
    let mut t = Table::new(&["v", "E_total", "E_coherent", "E_incoherent"]);
    for p in &r.points {
        t.push(vec![p.v, p.total, p.coherent, p.incoherent]);
    }
    t.footer("v_crossover", r.v_crossover.map_or("none".into(), number));
    match r.coherent_exponent() {
        Some((a, pre)) => {
            t.footer("coherent_exponent", number(a));
            t.footer("coherent_prefactor", number(pre));
        }
        None => t.footer("coherent_exponent", "none"),
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{config_from_metadata, parse_config};
    use crate::protocols::{Sample, SweepPoint};

    const CONFIG: &str = r#"
seed = 3
[chain]
L = 8
J = 1.0
Delta = 1.0
mu = -0.5
phi = 1.5
alpha = "inf"
[bath]
T = 0.5
gamma = 0.01
[protocol]
t_final = 2.0
"#;

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(number(0.1), "1.0000000000000001e-1");
        assert_eq!(number(-3.0), "-3.0000000000000000e0");
        assert_eq!(number(f64::INFINITY), "inf");
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02e23] {
            assert_eq!(number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn ramp_csv_layout() {
        let r = RampResult {
            samples: vec![
                Sample { t: 0.0, mu: -1.0, temperature: 0.5, excitation_density: 0.25 },
                Sample { t: 1.0, mu: 0.0, temperature: 0.5, excitation_density: 0.5 },
            ],
            momenta: vec![0.0, std::f64::consts::PI],
            occupations: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            solver_stats: vec![],
        };
        let csv = to_csv(&ramp_table(&r), "ramp", None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[2], "t,mu,T,excitation_density");
        assert_eq!(lines.len(), 5);
        assert_eq!(modes_table(&r).rows.len(), 4);
    }

    #[test]
    fn sweep_footer_reports_crossover() {
        let r = SweepResult {
            points: vec![
                SweepPoint { v: 0.1, total: 1.0, coherent: 0.1, incoherent: 1.0 },
                SweepPoint { v: 1.0, total: 1.0, coherent: 1.0, incoherent: 0.1 },
            ],
            v_crossover: Some(0.31622776601683794),
        };
        let csv = to_csv(&sweep_table(&r), "sweep", None);
        assert!(csv.contains("v,E_total,E_coherent,E_incoherent\n"));
        assert!(csv.contains("# v_crossover = 3.1622776601683794e-1\n"));
        assert!(csv.contains("# coherent_exponent = 1.0000000000000000e0\n"));
    }

    #[test]
    fn metadata_round_trips_config() {
        let config = parse_config(CONFIG).unwrap();
        let mut t = Table::new(&["x"]);
        t.push(vec![1.0]);
        let csv = to_csv(&t, "ramp", Some(&config));
        assert_eq!(config_from_metadata(&csv).unwrap(), config);
        let json: serde_json::Value = serde_json::from_str(&to_json(&t, "ramp", Some(&config))).unwrap();
        assert_eq!(parse_config(json["config"].as_str().unwrap()).unwrap(), config);
        assert_eq!(json["rows"][0][0], "1.0000000000000000e0");
    }

    #[test]
    fn modes_path_adds_suffix() {
        assert_eq!(modes_path(Path::new("out/ramp.csv")), PathBuf::from("out/ramp_modes.csv"));
        assert_eq!(modes_path(Path::new("ramp")), PathBuf::from("ramp_modes"));
    }
}
