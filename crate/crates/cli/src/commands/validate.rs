use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use diffusemix_core::pipeline::{read_meta, META_FILE};
use diffusemix_core::{load_image, MaskKind};
use serde::Deserialize;

use crate::args::ValidateArgs;
use crate::{CliError, EXIT_FAILURE, EXIT_SUCCESS};

/// A record with loosely typed fields, so that bad values are reported as
/// validation failures instead of parse errors.
#[derive(Debug, Deserialize)]
struct RawRecord {
    output_path: String,
    source_path: String,
    label: String,
    #[allow(dead_code)]
    prompt: String,
    mask_kind: String,
    #[allow(dead_code)]
    fractal_id: String,
    lambda: f64,
    #[allow(dead_code)]
    sub_seed: u64,
    #[allow(dead_code)]
    backend_id: String,
}

fn first_component(path: &str) -> Option<&str> {
    path.split_once('/').map(|(head, _)| head)
}

fn check(record: &RawRecord, root: &Path) -> Vec<String> {
    let mut problems = Vec::new();
    let output = root.join(&record.output_path);
    if !output.is_file() {
        problems.push(format!("missing output file {}", output.display()));
    } else if let Err(e) = load_image(&output) {
        problems.push(format!("output does not decode: {e}"));
    }
    if first_component(&record.source_path) != Some(record.label.as_str()) {
        problems.push(format!(
            "label {:?} does not match source directory of {}",
            record.label, record.source_path
        ));
    }
    if first_component(&record.output_path) != Some(record.label.as_str()) {
        problems.push(format!("output {} is not filed under label {:?}", record.output_path, record.label));
    }
    if !(0.0..=1.0).contains(&record.lambda) {
        problems.push(format!("lambda {} is outside [0, 1]", record.lambda));
    }
    if record.mask_kind.parse::<MaskKind>().is_err() {
        problems.push(format!("unknown mask_kind {:?}", record.mask_kind));
    }
    problems
}

/// Checks every record; paths resolve against the manifest's directory.
pub fn run(args: &ValidateArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let path = &args.manifest;
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::usage(format!("--manifest: cannot open {}: {e}", path.display())))?;
    let root = path.parent().unwrap_or(Path::new(""));

    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::usage(format!("malformed manifest {} line {}: {e}", path.display(), i + 1)))?;
        records.push((i + 1, record));
    }

    let mut failures = 0usize;
    for (line, record) in &records {
        for problem in check(record, root) {
            failures += 1;
            let _ = writeln!(out, "FAIL line {line} ({}): {problem}", record.output_path);
        }
    }
    let meta_path = root.join(META_FILE);
    if meta_path.is_file() {
        match read_meta(&meta_path) {
            Ok(meta) if meta.record_count != records.len() => {
                failures += 1;
                let _ = writeln!(
                    out,
                    "FAIL {}: record_count {} but manifest has {} records",
                    META_FILE,
                    meta.record_count,
                    records.len()
                );
            }
            Ok(_) => {}
            Err(e) => {
                failures += 1;
                let _ = writeln!(out, "FAIL {META_FILE}: {e}");
            }
        }
    }
    let _ = writeln!(out, "validate: {} records, {failures} problems", records.len());
    Ok(if failures == 0 { EXIT_SUCCESS } else { EXIT_FAILURE })
}
