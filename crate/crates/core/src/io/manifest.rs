use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ImageId;

pub type ClassId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub path: PathBuf,
    pub class_id: ClassId,
    pub image_id: ImageId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub class_id: ClassId,
    pub class_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub classes: Vec<ClassEntry>,
    pub records: Vec<ImageRecord>,
    /// Files ignored during a directory scan.
    pub skipped: usize,
}

const ACCEPTED: [&str; 2] = ["png", "ppm"];

impl DatasetManifest {
    /// Builds a manifest from records, deriving the class table.
    pub fn from_records(records: Vec<ImageRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut names: BTreeMap<ClassId, String> = BTreeMap::new();
        for r in &records {
            if !seen.insert(r.image_id) {
                return Err(Error::Malformed(format!(
                    "duplicate image_id {}",
                    r.image_id
                )));
            }
            let name = r
                .class_name
                .clone()
                .unwrap_or_else(|| r.class_id.to_string());
            if let Some(prev) = names.insert(r.class_id, name.clone()) {
                if prev != name {
                    return Err(Error::Malformed(format!(
                        "class {} named both `{prev}` and `{name}`",
                        r.class_id
                    )));
                }
            }
        }
        let classes = names
            .into_iter()
            .map(|(class_id, class_name)| ClassEntry {
                class_id,
                class_name,
            })
            .collect();
        Ok(DatasetManifest {
            classes,
            records,
            skipped: 0,
        })
    }

    /// Records of one class, in manifest order.
    pub fn class_records(&self, class_id: ClassId) -> Vec<&ImageRecord> {
        self.records
            .iter()
            .filter(|r| r.class_id == class_id)
            .collect()
    }

    pub fn class_name(&self, class_id: ClassId) -> String {
        self.classes
            .iter()
            .find(|c| c.class_id == class_id)
            .map_or_else(|| class_id.to_string(), |c| c.class_name.clone())
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses JSON lines; relative paths resolve against `base`.
    pub fn from_jsonl(text: &str, base: &Path) -> Result<Self> {
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut r: ImageRecord = serde_json::from_str(line)
                .map_err(|e| Error::Malformed(format!("manifest line {}: {e}", n + 1)))?;
            if r.path.is_relative() {
                r.path = base.join(&r.path);
            }
            records.push(r);
        }
        Self::from_records(records)
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_jsonl(&text, base).map_err(|e| e.in_file(path))
    }
}

/// Scans `root/<class_name>/<file>`.
///
/// Classes are numbered in lexicographic directory-name order and images in
/// (class, file name) order, so the result depends only on directory
/// content. Only `.png` and `.ppm` files are taken; everything else is
/// counted in `skipped`.
pub fn scan(root: impl AsRef<Path>) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let mut class_dirs = Vec::new();
    let mut skipped = 0;
    for entry in fs::read_dir(root).map_err(|e| Error::from(e).in_file(root))? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            class_dirs.push(entry.path());
        } else {
            skipped += 1;
        }
    }
    if class_dirs.is_empty() {
        return Err(Error::Malformed(format!(
            "{} contains no class directories",
            root.display()
        )));
    }
    class_dirs.sort();

    let mut records = Vec::new();
    let mut classes = Vec::new();
    let mut next_id: ImageId = 0;
    for (class_id, dir) in class_dirs.iter().enumerate() {
        let class_id = class_id as ClassId;
        let class_name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::from(e).in_file(dir))? {
            let path = entry?.path();
            let accepted = path.is_file()
                && path
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| ACCEPTED.contains(&e.to_ascii_lowercase().as_str()));
            if accepted {
                files.push(path);
            } else {
                skipped += 1;
            }
        }
        files.sort();
        if files.is_empty() {
            log::warn!("class `{class_name}` has no images");
        }
        for path in files {
            records.push(ImageRecord {
                path,
                class_id,
                image_id: next_id,
                class_name: Some(class_name.clone()),
            });
            next_id += 1;
        }
        classes.push(ClassEntry {
            class_id,
            class_name,
        });
    }
    if skipped > 0 {
        log::warn!(
            "skipped {skipped} non-image entries under {}",
            root.display()
        );
    }
    Ok(DatasetManifest {
        classes,
        records,
        skipped,
    })
}
