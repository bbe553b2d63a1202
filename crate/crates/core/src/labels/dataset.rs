use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{parse_label_file, PolygonAnnotation};
use crate::error::{Error, Result};
use crate::imaging::{read_dimensions, ImageFormat};

/// Class list and directory layout of a labelled dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetDescriptor {
    pub class_names: Vec<String>,
    pub images_dir: PathBuf,
    pub labels_dir: PathBuf,
}

impl DatasetDescriptor {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn label_path(&self, stem: &str) -> PathBuf {
        self.labels_dir.join(format!("{stem}.txt"))
    }
}

/// Parses the line-based descriptor format:
///
/// ```text
/// # comment
/// class 0 carpal
/// images_dir images
/// labels_dir labels
/// ```
///
/// Relative directories resolve against `base_dir`.
pub fn parse_descriptor(text: &str, base_dir: &Path, origin: &Path) -> Result<DatasetDescriptor> {
    let err = |line: usize, message: String| Error::Descriptor {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut classes: BTreeMap<usize, String> = BTreeMap::new();
    let mut images_dir = None;
    let mut labels_dir = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (directive, rest) = match line.split_once(char::is_whitespace) {
            Some((d, r)) => (d, r.trim()),
            None => (line, ""),
        };
        match directive {
            "class" => {
                let (idx, name) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err(line_no, "expected `class <index> <name>`".into()))?;
                let idx: usize = idx
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid class index '{idx}'")))?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(err(line_no, "empty class name".into()));
                }
                if classes.insert(idx, name.to_string()).is_some() {
                    return Err(err(line_no, format!("duplicate class index {idx}")));
                }
            }
            "images_dir" | "labels_dir" => {
                if rest.is_empty() {
                    return Err(err(line_no, format!("{directive} needs a path")));
                }
                let slot = if directive == "images_dir" {
                    &mut images_dir
                } else {
                    &mut labels_dir
                };
                if slot.replace(base_dir.join(rest)).is_some() {
                    return Err(err(line_no, format!("{directive} given twice")));
                }
            }
            other => return Err(err(line_no, format!("unknown directive '{other}'"))),
        }
    }

    if classes.is_empty() {
        return Err(err(0, "no classes declared".into()));
    }
    if let Some(pos) = classes.keys().enumerate().position(|(pos, idx)| pos != *idx) {
        return Err(err(0, format!("class indices must be 0..n without gaps (missing {pos})")));
    }
    let class_names: Vec<String> = classes.into_values().collect();
    let mut unique = HashSet::new();
    if let Some(dup) = class_names.iter().find(|n| !unique.insert(n.as_str())) {
        return Err(err(0, format!("duplicate class name '{dup}'")));
    }
    Ok(DatasetDescriptor {
        class_names,
        images_dir: images_dir.ok_or_else(|| err(0, "missing images_dir".into()))?,
        labels_dir: labels_dir.ok_or_else(|| err(0, "missing labels_dir".into()))?,
    })
}

/// Renders a descriptor; directories are written as given.
pub fn write_descriptor(desc: &DatasetDescriptor) -> String {
    let mut out = String::new();
    for (i, name) in desc.class_names.iter().enumerate() {
        out.push_str(&format!("class {i} {name}\n"));
    }
    out.push_str(&format!("images_dir {}\n", desc.images_dir.display()));
    out.push_str(&format!("labels_dir {}\n", desc.labels_dir.display()));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetImage {
    pub stem: String,
    pub image_path: PathBuf,
    pub label_path: PathBuf,
    pub width: usize,
    pub height: usize,
    pub annotations: Vec<PolygonAnnotation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub descriptor: DatasetDescriptor,
    /// Sorted by stem.
    pub images: Vec<DatasetImage>,
}

impl Dataset {
    pub fn instance_count(&self) -> usize {
        self.images.iter().map(|i| i.annotations.len()).sum()
    }

    /// Stems of images without any labelled instance.
    pub fn unlabelled(&self) -> Vec<&str> {
        self.images
            .iter()
            .filter(|i| i.annotations.is_empty())
            .map(|i| i.stem.as_str())
            .collect()
    }

    pub fn find(&self, stem: &str) -> Option<&DatasetImage> {
        self.images
            .binary_search_by(|i| i.stem.as_str().cmp(stem))
            .ok()
            .map(|k| &self.images[k])
    }
}

/// Image files (`.png` / `.pgm`) in `dir`, keyed and sorted by stem.
pub fn list_images(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut by_stem: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut problems = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || ImageFormat::from_path(&path).is_none() {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
            continue;
        };
        if let Some(prev) = by_stem.insert(stem.clone(), path.clone()) {
            problems.push(format!(
                "{} and {} share the stem '{stem}'",
                prev.display(),
                path.display()
            ));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Dataset(problems));
    }
    Ok(by_stem.into_iter().collect())
}

/// Reads and parses a descriptor file; directories resolve against the
/// file's own directory.
pub fn read_descriptor(path: impl AsRef<Path>) -> Result<DatasetDescriptor> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_descriptor(&text, base, path)
}

/// Reads a descriptor, validates every image header and every label file.
///
/// A missing label file means the image has no instances. All problems are
/// collected before failing.
pub fn load_dataset(descriptor_path: impl AsRef<Path>) -> Result<Dataset> {
    let descriptor = read_descriptor(descriptor_path)?;

    let mut missing = Vec::new();
    for dir in [&descriptor.images_dir, &descriptor.labels_dir] {
        if !dir.is_dir() {
            missing.push(format!("missing directory {}", dir.display()));
        }
    }
    if !missing.is_empty() {
        return Err(Error::Dataset(missing));
    }

    let files = list_images(&descriptor.images_dir)?;
    let num_classes = descriptor.num_classes();
    let results: Vec<std::result::Result<DatasetImage, String>> = files
        .par_iter()
        .map(|(stem, image_path)| {
            let (width, height) = read_dimensions(image_path).map_err(|e| format!("{}: {e}", image_path.display()))?;
            let label_path = descriptor.label_path(stem);
            let annotations = match fs::read_to_string(&label_path) {
                Ok(text) => parse_label_file(&text, num_classes)
                    .map_err(|e| format!("{}: {e}", label_path.display()))?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
                Err(e) => return Err(format!("{}: {e}", label_path.display())),
            };
            Ok(DatasetImage {
                stem: stem.clone(),
                image_path: image_path.clone(),
                label_path,
                width,
                height,
                annotations,
            })
        })
        .collect();

    let mut images = Vec::with_capacity(results.len());
    let mut problems = Vec::new();
    for r in results {
        match r {
            Ok(img) => images.push(img),
            Err(p) => problems.push(p),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Dataset(problems));
    }
    let unlabelled = images.iter().filter(|i| i.annotations.is_empty()).count();
    if unlabelled > 0 {
        log::info!("{unlabelled} image(s) have no labelled instances");
    }
    Ok(Dataset { descriptor, images })
}
