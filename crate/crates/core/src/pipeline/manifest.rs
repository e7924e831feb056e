//! JSONL provenance manifest and its metadata sidecar.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::MaskKind;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const META_FILE: &str = "manifest.meta.json";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One augmented image. Paths are relative: `output_path` to the output
/// directory, `source_path` to the input directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub output_path: String,
    pub source_path: String,
    pub label: String,
    pub prompt: String,
    pub mask_kind: MaskKind,
    pub fractal_id: String,
    pub lambda: f32,
    pub sub_seed: u64,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub config_digest: String,
    pub tool_version: String,
    pub record_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub records: Vec<AugmentationRecord>,
    pub config_digest: String,
}

impl Manifest {
    pub fn meta(&self) -> ManifestMeta {
        ManifestMeta {
            config_digest: self.config_digest.clone(),
            tool_version: TOOL_VERSION.to_string(),
            record_count: self.records.len(),
        }
    }

    /// Writes `manifest.jsonl` and `manifest.meta.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut out = Vec::new();
        for record in &self.records {
            serde_json::to_writer(&mut out, record).expect("records serialize");
            out.push(b'\n');
        }
        std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?;

        let meta_path = dir.join(META_FILE);
        let mut meta = serde_json::to_vec_pretty(&self.meta()).expect("meta serializes");
        meta.push(b'\n');
        std::fs::File::create(&meta_path)
            .and_then(|mut f| f.write_all(&meta))
            .map_err(|e| Error::io(&meta_path, e))
    }
}

/// Parses a JSONL manifest. Blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<AugmentationRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_meta(path: &Path) -> Result<ManifestMeta> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> AugmentationRecord {
        AugmentationRecord {
            output_path: "cat/a_aug0.png".into(),
            source_path: "cat/a.png".into(),
            label: "cat".into(),
            prompt: "snowy".into(),
            mask_kind: MaskKind::TopOn,
            fractal_id: "fractal_0007".into(),
            lambda: 0.2,
            sub_seed: u64::MAX - 3,
            backend_id: "procedural-v1:strength=1".into(),
        }
    }

    #[test]
    fn field_names_are_exact() {
        let line = serde_json::to_string(&record()).unwrap();
        assert_eq!(
            line,
            r#"{"output_path":"cat/a_aug0.png","source_path":"cat/a.png","label":"cat","prompt":"snowy","mask_kind":"top_on","fractal_id":"fractal_0007","lambda":0.2,"sub_seed":18446744073709551612,"backend_id":"procedural-v1:strength=1"}"#
        );
    }

    #[test]
    fn write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = Manifest {
            records: vec![record(), record()],
            config_digest: "ab".repeat(32),
        };
        manifest.write_to(dir.path()).unwrap();
        assert_eq!(read_records(&dir.path().join(MANIFEST_FILE)).unwrap(), manifest.records);
        let meta = read_meta(&dir.path().join(META_FILE)).unwrap();
        assert_eq!(meta.record_count, 2);
        assert_eq!(meta.tool_version, TOOL_VERSION);
    }

    #[test]
    fn truncated_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let good = serde_json::to_string(&record()).unwrap();
        std::fs::write(&path, format!("{good}\n{}\n", &good[..good.len() / 2])).unwrap();
        match read_records(&path) {
            Err(Error::Manifest { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected manifest error, got {other:?}"),
        }
    }
}
