use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename, so a
/// reader never observes a partially written file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

/// CSV document built in memory.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).map_err(csv_error)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_error)
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Deterministic run record. Wall time is reported separately (stderr and
/// `timing.txt`) so that identical configurations give identical manifests.
#[derive(Clone, Debug, Serialize)]
pub struct ResultManifest<C: Serialize> {
    pub schema_version: u32,
    pub command: String,
    /// Hash of the command name and the explicit configuration echo.
    pub run_id: String,
    pub version: String,
    pub config: C,
    pub files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Collects output files, then writes them and the manifest.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    /// Writes every file followed by `manifest.json`; returns the written
    /// names in order.
    pub fn commit<C: Serialize>(
        self,
        command: &str,
        config: &C,
        diagnostics: Vec<String>,
    ) -> Result<Vec<String>> {
        let echo = serde_json::to_vec(config)?;
        let mut id = Sha256::new();
        id.update(command.as_bytes());
        id.update([0u8]);
        id.update(&echo);
        let run_id = hex::encode(id.finalize())[..16].to_string();
        let mut names = Vec::new();
        let mut entries = Vec::new();
        for (name, bytes) in &self.files {
            write_atomic(&self.dir, name, bytes)?;
            entries.push(FileEntry {
                name: name.clone(),
                bytes: bytes.len(),
                sha256: sha256_hex(bytes),
            });
            names.push(name.clone());
        }
        let manifest = ResultManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            run_id,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            files: entries,
            diagnostics,
        };
        write_atomic(&self.dir, "manifest.json", &to_json_bytes(&manifest)?)?;
        names.push("manifest.json".to_string());
        Ok(names)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1e-8, 1.0 / 3.0, 4.0, -2.5e300, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"one").unwrap();
        write_atomic(dir.path(), "a.txt", b"two").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("a.txt")]);
        assert_eq!(fs::read(dir.path().join("a.txt")).unwrap(), b"two");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]).unwrap();
        t.row(["1", "x"]).unwrap();
        assert_eq!(t.into_bytes().unwrap(), b"a,b\n1,x\n");
    }

    #[test]
    fn manifest_lists_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new(dir.path());
        out.add("x.csv", b"a\n".to_vec());
        let names = out.commit("sweep", &serde_json::json!({"k": 1}), vec![]).unwrap();
        assert_eq!(names, vec!["x.csv", "manifest.json"]);
        let m: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["schema_version"], 1);
        assert_eq!(m["files"][0]["sha256"], sha256_hex(b"a\n"));
        assert_eq!(m["run_id"].as_str().unwrap().len(), 16);
    }
}
