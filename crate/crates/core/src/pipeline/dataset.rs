//! Class-per-subdirectory dataset discovery.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// One source image, `input_dir/<label>/<file>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceImage {
    pub path: PathBuf,
    pub label: String,
    pub file_name: String,
}

impl SourceImage {
    /// `label/file`, always with `/`.
    pub fn rel_path(&self) -> String {
        format!("{}/{}", self.label, self.file_name)
    }

    pub fn stem(&self) -> &str {
        Path::new(&self.file_name)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(&self.file_name)
    }

    /// `label/stem_aug{index}.png`
    pub fn output_rel_path(&self, aug_index: u32) -> String {
        format!("{}/{}_aug{aug_index}.png", self.label, self.stem())
    }
}

fn is_image(name: &str) -> bool {
    Path::new(name)
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn utf8_name(path: &Path, name: std::ffi::OsString) -> Result<String> {
    name.into_string()
        .map_err(|n| Error::Config(format!("non-UTF-8 name {n:?} under {}", path.display())))
}

/// Lists `input_dir/<class>/<image>` in `(class, file name)` order.
///
/// Files directly under `input_dir`, hidden entries and non-image files are
/// skipped. Nested directories below a class are not traversed.
pub fn scan_dataset(input_dir: impl AsRef<Path>) -> Result<Vec<SourceImage>> {
    let input_dir = input_dir.as_ref();
    let mut classes = Vec::new();
    for entry in std::fs::read_dir(input_dir).map_err(|e| Error::io(input_dir, e))? {
        let entry = entry.map_err(|e| Error::io(input_dir, e))?;
        let name = utf8_name(input_dir, entry.file_name())?;
        if name.starts_with('.') {
            continue;
        }
        if entry.path().is_dir() {
            classes.push(name);
        } else {
            log::debug!("ignoring top-level file {name}");
        }
    }
    classes.sort();

    let mut sources = Vec::new();
    for label in classes {
        let class_dir = input_dir.join(&label);
        let mut files = Vec::new();
        for entry in std::fs::read_dir(&class_dir).map_err(|e| Error::io(&class_dir, e))? {
            let entry = entry.map_err(|e| Error::io(&class_dir, e))?;
            let name = utf8_name(&class_dir, entry.file_name())?;
            if !name.starts_with('.') && is_image(&name) && entry.path().is_file() {
                files.push(name);
            }
        }
        files.sort();
        sources.extend(files.into_iter().map(|file_name| SourceImage {
            path: class_dir.join(&file_name),
            label: label.clone(),
            file_name,
        }));
    }
    Ok(sources)
}
