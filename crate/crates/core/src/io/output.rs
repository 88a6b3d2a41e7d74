//! Bit-stable run outputs: CSV files with a fixed column order and
//! 17-significant-digit floats, plus a JSON manifest with content digests.
//! Reruns with the same `(config, seed)` reproduce every CSV byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fields::ChemGrid;
use crate::model::BoundConstants;
use crate::Result;

/// 17 significant digits round-trip any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// An in-memory CSV table with a fixed header.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// Run manifest: config echo, derived constants, per-criterion outcomes,
/// output inventory with content digests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_echo: String,
    pub constants: ManifestConstants,
    pub checks: BTreeMap<String, bool>,
    pub scalars: BTreeMap<String, f64>,
    pub files: BTreeMap<String, String>,
    pub wall_seconds: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestConstants {
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub l_prime: f64,
    pub m_prime: f64,
    pub k_prime: f64,
    pub c_r: f64,
    pub horizon: f64,
}

impl From<&BoundConstants> for ManifestConstants {
    fn from(c: &BoundConstants) -> Self {
        Self {
            gamma0: c.gamma0,
            gamma1: c.gamma1,
            gamma2: c.gamma2,
            l_prime: c.l_prime,
            m_prime: c.m_prime,
            k_prime: c.k_prime,
            c_r: c.c_r,
            horizon: c.horizon,
        }
    }
}

impl RunManifest {
    pub fn new(config_echo: String, constants: &BoundConstants) -> Self {
        Self {
            schema_version: 1,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_echo,
            constants: constants.into(),
            checks: BTreeMap::new(),
            scalars: BTreeMap::new(),
            files: BTreeMap::new(),
            wall_seconds: 0.0,
            steps: 0,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Writes every table plus the manifest into `dir`; returns the inventory
/// of written paths. Digests cover the CSV bytes, so rerun equality is
/// checkable from the manifest alone.
pub fn write_outputs(
    tables: &[CsvTable],
    manifest: &mut RunManifest,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in tables {
        let bytes = t.to_bytes();
        let name = format!("{}.csv", t.name);
        let path = dir.join(&name);
        std::fs::write(&path, &bytes)?;
        manifest.files.insert(name, sha256_hex(&bytes));
        written.push(path);
    }
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_vec_pretty(manifest)?;
    std::fs::write(&manifest_path, json)?;
    written.push(manifest_path);
    Ok(written)
}

/// Reads back the manifest and verifies every recorded digest.
pub fn verify_digests(dir: impl AsRef<Path>) -> Result<bool> {
    let dir = dir.as_ref();
    let manifest: RunManifest =
        serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
    for (name, digest) in &manifest.files {
        let bytes = std::fs::read(dir.join(name))?;
        if &sha256_hex(&bytes) != digest {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Field snapshot as CSV rows (node coordinates, value).
pub fn grid_to_csv(grid: &ChemGrid, name: &str) -> CsvTable {
    let d = grid.dim();
    let mut header: Vec<&str> = Vec::new();
    let names = ["x", "y", "z"];
    header.extend(&names[..d]);
    header.push("value");
    let mut t = CsvTable::new(name, &header);
    let mut coord = vec![0.0; d];
    for (flat, v) in grid.values().iter().enumerate() {
        grid.node_coord(flat, &mut coord);
        let mut row: Vec<String> = coord.iter().map(|c| fmt_f64(*c)).collect();
        row.push(fmt_f64(*v));
        t.push_row(row);
    }
    t
}

/// Binary row-major field dump plus a JSON sidecar header.
pub fn grid_to_binary(grid: &ChemGrid, time: f64, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut bytes = Vec::with_capacity(grid.values().len() * 8);
    for v in grid.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(dir.join(format!("{stem}.f64")), &bytes)?;
    let header = serde_json::json!({
        "dim": grid.dim(),
        "cells_per_axis": grid.cells_per_axis(),
        "half_width": grid.half_width(),
        "time": time,
        "diffusivity": grid.diffusivity,
        "decay": grid.decay,
        "layout": "row-major, last axis fastest, f64 little-endian",
    });
    std::fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_vec_pretty(&header)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundConstants;

    #[test]
    fn header_only_csv_for_empty_tables() {
        let t = CsvTable::new("empty", &["a", "b"]);
        assert_eq!(t.to_bytes(), b"a,b\n");
    }

    #[test]
    fn f64_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 2.0f64.powi(-52)] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn outputs_are_byte_stable_and_digests_verify() {
        let dir = std::env::temp_dir().join(format!("mfcl-out-{}", std::process::id()));
        let mut t = CsvTable::new("table", &["n", "value"]);
        t.push_row(vec!["4".into(), fmt_f64(0.25)]);
        let consts = BoundConstants::zeros();
        let mut m1 = RunManifest::new("echo".into(), &consts);
        write_outputs(&[t.clone()], &mut m1, &dir).unwrap();
        let first = std::fs::read(dir.join("table.csv")).unwrap();
        let mut m2 = RunManifest::new("echo".into(), &consts);
        write_outputs(&[t], &mut m2, &dir).unwrap();
        let second = std::fs::read(dir.join("table.csv")).unwrap();
        assert_eq!(first, second);
        assert_eq!(m1.files, m2.files);
        assert!(verify_digests(&dir).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }
}
