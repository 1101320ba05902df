//! Output directories, snapshot files, grid dumps and the run manifest.

use crate::error::{CliError, Result};
use fragrd_core::geom::Grid;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";
const DUMP_MAGIC: &str = "fragrd-grid 1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: Value,
    pub verdicts: BTreeMap<String, Value>,
    pub index_reports: BTreeMap<String, Value>,
    pub brackets: BTreeMap<String, Value>,
    pub summary: Value,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, config: Value, config_hash: String) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            config_hash,
            config,
            verdicts: BTreeMap::new(),
            index_reports: BTreeMap::new(),
            brackets: BTreeMap::new(),
            summary: Value::Null,
            wall_clock_seconds: 0.0,
            files: Vec::new(),
        }
    }
}

/// A directory owned by one command invocation. Every file goes through
/// it so the manifest inventory is complete.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputDir { root, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(FileEntry { path: rel.to_owned(), bytes: bytes.len() as u64, sha256: sha(bytes) });
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write_bytes(rel, text.as_bytes())
    }

    /// `t,x[,y],u` rows for every snapshot.
    pub fn write_csv_snapshots(&mut self, rel: &str, grid: &Grid, snapshots: &[(f64, Vec<f64>)]) -> Result<PathBuf> {
        let bytes = snapshots_csv(grid, snapshots)?;
        self.write_bytes(rel, &bytes)
    }

    /// One binary dump per snapshot plus an index `t,file`.
    pub fn write_dump_series(&mut self, stem: &str, grid: &Grid, snapshots: &[(f64, Vec<f64>)]) -> Result<PathBuf> {
        let mut index = csv::Writer::from_writer(Vec::new());
        index.write_record(["t", "file"])?;
        for (k, (t, u)) in snapshots.iter().enumerate() {
            let name = format!("{stem}_{k:04}.grid");
            self.write_bytes(&name, &grid_dump(grid, Some(*t), u))?;
            index.write_record([fmt(*t), name])?;
        }
        let bytes = index.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.write_bytes(&format!("{stem}_index.csv"), &bytes)
    }

    /// Writes the manifest (which does not list itself) and returns it.
    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        let mut files = self.files;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.files = files;
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(self.root.join(MANIFEST), text)?;
        Ok(manifest)
    }
}

/// Seventeen significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn snapshots_csv(grid: &Grid, snapshots: &[(f64, Vec<f64>)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: &[&str] = if grid.dim == 1 { &["t", "x", "u"] } else { &["t", "x", "y", "u"] };
    w.write_record(header)?;
    for (t, u) in snapshots {
        for (idx, v) in u.iter().enumerate() {
            let c = grid.center(grid.unindex(idx));
            let mut row = vec![fmt(*t), fmt(c.0[0])];
            if grid.dim >= 2 {
                row.push(fmt(c.0[1]));
            }
            row.push(fmt(*v));
            w.write_record(&row)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Parsed text header of a grid dump.
#[derive(Clone, Debug, PartialEq)]
pub struct DumpHeader {
    pub dim: usize,
    pub h: f64,
    pub origin: Vec<f64>,
    pub n: Vec<usize>,
    pub t: Option<f64>,
}

/// Text header terminated by `end\n`, then `f64` little-endian values
/// with axis 0 varying fastest.
pub fn grid_dump(grid: &Grid, t: Option<f64>, data: &[f64]) -> Vec<u8> {
    let dim = grid.dim;
    let origin = grid.origin();
    let join = |v: Vec<String>| v.join(" ");
    let mut head = format!("{DUMP_MAGIC}\ndim {dim}\nh {}\n", fmt(grid.h));
    head += &format!("origin {}\n", join((0..dim).map(|k| fmt(origin.0[k])).collect()));
    head += &format!("n {}\n", join((0..dim).map(|k| grid.n[k].to_string()).collect()));
    if let Some(t) = t {
        head += &format!("t {}\n", fmt(t));
    }
    head += "dtype f64le\norder axis0-fastest\nend\n";
    let mut out = head.into_bytes();
    out.reserve(8 * data.len());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_grid_dump(bytes: &[u8]) -> Result<(DumpHeader, Vec<f64>)> {
    let bad = |m: &str| CliError::Io(format!("malformed grid dump: {m}"));
    let marker = b"\nend\n";
    let end = bytes.windows(marker.len()).position(|w| w == marker).ok_or_else(|| bad("no end of header"))? + marker.len();
    let head = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not text"))?;
    let mut lines = head.lines();
    if lines.next() != Some(DUMP_MAGIC) {
        return Err(bad("wrong magic"));
    }
    let mut hdr = DumpHeader { dim: 0, h: 0.0, origin: vec![], n: vec![], t: None };
    for line in lines {
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        let nums = || v.split_whitespace().map(|s| s.parse::<f64>().map_err(|_| bad(k))).collect::<Result<Vec<f64>>>();
        match k {
            "dim" => hdr.dim = v.parse().map_err(|_| bad("dim"))?,
            "h" => hdr.h = v.parse().map_err(|_| bad("h"))?,
            "origin" => hdr.origin = nums()?,
            "n" => hdr.n = v.split_whitespace().map(|s| s.parse().map_err(|_| bad("n"))).collect::<Result<_>>()?,
            "t" => hdr.t = Some(v.parse().map_err(|_| bad("t"))?),
            "dtype" if v != "f64le" => return Err(bad("dtype")),
            _ => {}
        }
    }
    let count: usize = hdr.n.iter().product();
    let body = &bytes[end..];
    if hdr.n.len() != hdr.dim || body.len() != 8 * count {
        return Err(bad("payload size does not match the header"));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((hdr, data))
}

/// Recomputes every inventory entry; returns the paths that differ.
pub fn verify_inventory(root: &Path, manifest: &Manifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .filter(|f| match std::fs::read(root.join(&f.path)) {
            Ok(b) => b.len() as u64 != f.bytes || sha(&b) != f.sha256,
            Err(_) => true,
        })
        .map(|f| f.path.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip() {
        let g = Grid::new(2, 0.5, [-2, 3, 0], [3, 2, 1]).unwrap();
        let data: Vec<f64> = (0..6).map(|i| i as f64 / 7.0).collect();
        let bytes = grid_dump(&g, Some(4.0), &data);
        let (hdr, back) = read_grid_dump(&bytes).unwrap();
        assert_eq!(back, data);
        assert_eq!(hdr.n, vec![3, 2]);
        assert_eq!(hdr.origin, vec![-1.0, 1.5]);
        assert_eq!(hdr.t, Some(4.0));
    }

    #[test]
    fn csv_has_expected_shape() {
        let g = Grid::new(1, 0.25, [0, 0, 0], [4, 1, 1]).unwrap();
        let bytes = snapshots_csv(&g, &[(0.0, vec![0.0, 1.0, 1.0, 0.0]), (1.0, vec![0.1; 4])]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,u");
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[1], "0.0000000000000000e0,1.2500000000000000e-1,0.0000000000000000e0");
    }
}
