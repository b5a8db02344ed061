//! Result tables and their CSV/JSON artifacts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::ser::{Serialize, SerializeMap, Serializer};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // shortest round-trip form, with an exponent for tiny values
            Cell::F(v) => write!(f, "{v:?}"),
            Cell::U(v) => write!(f, "{v}"),
            Cell::B(v) => write!(f, "{v}"),
            Cell::S(v) => f.write_str(v),
            Cell::Empty => Ok(()),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            // non-finite values have no JSON number form
            Cell::F(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::F(v) => s.serialize_str(&v.to_string()),
            Cell::U(v) => s.serialize_u64(*v),
            Cell::B(v) => s.serialize_bool(*v),
            Cell::S(v) => s.serialize_str(v),
            Cell::Empty => s.serialize_none(),
        }
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::F(v) => Some(*v),
            Cell::U(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Cell::B(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::S(v) => Some(v),
            _ => None,
        }
    }
}

/// A named table with a fixed column contract.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell `name` of row `i`; panics on an unknown column.
    pub fn get(&self, i: usize, name: &str) -> &Cell {
        let j = self.column(name).unwrap_or_else(|| panic!("no column {name} in {}", self.name));
        &self.rows[i][j]
    }

    pub fn to_csv(&self, header: &str) -> String {
        let mut s = String::from(header);
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("name", &self.name)?;
        m.serialize_entry("columns", &self.columns)?;
        m.serialize_entry("rows", &self.rows)?;
        m.end()
    }
}

/// Canonical JSON of the resolved config. Field order follows the struct
/// definitions, so equal configs give equal strings.
pub fn canonical_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(canonical_json(cfg).as_bytes()))
}

fn csv_header(cfg: &ExperimentConfig, hash: &str) -> String {
    format!("# config-hash: {hash}\n# seed: {}\n# config: {}\n", cfg.mc.seed, canonical_json(cfg))
}

/// Where the primary table goes.
pub fn primary_path(cfg: &ExperimentConfig, out_dir: &Path) -> PathBuf {
    let ext = match cfg.output.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    match &cfg.output.path {
        Some(p) => out_dir.join(p),
        None => out_dir.join(format!("{}.{ext}", cfg.experiment.kind())),
    }
}

/// `results.csv` + table `checks` → `results.checks.csv`.
fn secondary_path(primary: &Path, name: &str) -> PathBuf {
    let stem = primary.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = primary.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    primary.with_file_name(format!("{stem}.{name}.{ext}"))
}

/// Renders the artifacts as `(path, contents)` pairs without touching disk.
pub fn render(cfg: &ExperimentConfig, tables: &[Table], out_dir: &Path) -> Vec<(PathBuf, String)> {
    let hash = config_hash(cfg);
    let primary = primary_path(cfg, out_dir);
    match cfg.output.format {
        Format::Csv => {
            let header = csv_header(cfg, &hash);
            tables
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let p = if i == 0 { primary.clone() } else { secondary_path(&primary, &t.name) };
                    (p, t.to_csv(&header))
                })
                .collect()
        }
        Format::Json => {
            let doc = serde_json::json!({
                "config_hash": hash,
                "seed": cfg.mc.seed,
                "config": cfg,
                "tables": tables,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("tables serialize");
            s.push('\n');
            vec![(primary, s)]
        }
    }
}

pub fn write(files: &[(PathBuf, String)]) -> Result<(), CliError> {
    for (p, body) in files {
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| {
                CliError::runtime(format!("cannot create {}: {e}", dir.display()), "pick a writable --out directory")
            })?;
        }
        fs::write(p, body).map_err(|e| {
            CliError::runtime(format!("cannot write {}: {e}", p.display()), "pick a writable --out directory")
        })?;
    }
    Ok(())
}
