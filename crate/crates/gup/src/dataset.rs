//! Directory layouts for evaluation scenes and training images.
//!
//! A scene directory holds `<name>_guide.<ext>` and `<name>_truth.<ext>` per
//! scene, with `<ext>` one of `pfm` or `pgm`. An optional `<name>_lowres.<ext>`
//! replaces the low-resolution observation that is otherwise computed from
//! the truth. A training directory holds color (`ppm`) or gray (`pgm`, `pfm`)
//! images. Entries are processed in file-name order.

use std::fs;
use std::path::{Path, PathBuf};

use gup_core::bench::Scene;
use gup_core::{Image, RgbImage};

use crate::pnm::{load_image, load_rgb, save_image, save_rgb, ImageFormat};
use crate::FormatError;

const SCENE_EXTS: [&str; 2] = ["pfm", "pgm"];
const TRAIN_EXTS: [&str; 3] = ["ppm", "pgm", "pfm"];

#[derive(Debug, Clone, PartialEq)]
pub struct NamedScene {
    pub name: String,
    pub scene: Scene,
    pub lowres: Option<Image>,
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>, FormatError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn find_part(dir: &Path, name: &str, part: &str) -> Option<PathBuf> {
    SCENE_EXTS.iter().map(|ext| dir.join(format!("{name}_{part}.{ext}"))).find(|p| p.is_file())
}

pub fn load_scene_dir(dir: impl AsRef<Path>) -> Result<Vec<NamedScene>, FormatError> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for path in sorted_files(dir)? {
        let Some(file) = path.file_name().and_then(|f| f.to_str()) else { continue };
        let Some(name) = SCENE_EXTS.iter().find_map(|ext| file.strip_suffix(&format!("_truth.{ext}"))) else {
            continue;
        };
        if out.iter().any(|s: &NamedScene| s.name == name) {
            continue;
        }
        let guide_path = find_part(dir, name, "guide")
            .ok_or_else(|| FormatError::Layout(format!("scene {name:?} has no guide image")))?;
        let truth = load_image(&path)?;
        let guide = load_image(guide_path)?;
        if guide.dims() != truth.dims() {
            return Err(FormatError::Layout(format!("scene {name:?}: guide and truth differ in size")));
        }
        let lowres = find_part(dir, name, "lowres").map(load_image).transpose()?;
        out.push(NamedScene { name: name.to_string(), scene: Scene { guide, truth }, lowres });
    }
    if out.is_empty() {
        return Err(FormatError::Layout(format!("no *_truth images in {}", dir.display())));
    }
    Ok(out)
}

pub fn save_scene(dir: impl AsRef<Path>, name: &str, scene: &Scene) -> Result<(), FormatError> {
    let dir = dir.as_ref();
    save_image(&scene.guide, dir.join(format!("{name}_guide.pfm")), ImageFormat::Pfm)?;
    save_image(&scene.truth, dir.join(format!("{name}_truth.pfm")), ImageFormat::Pfm)
}

pub fn load_training_dir(dir: impl AsRef<Path>) -> Result<Vec<RgbImage>, FormatError> {
    let dir = dir.as_ref();
    let images = sorted_files(dir)?
        .into_iter()
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()).is_some_and(|e| TRAIN_EXTS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .map(load_rgb)
        .collect::<Result<Vec<_>, _>>()?;
    if images.is_empty() {
        return Err(FormatError::Layout(format!("no training images in {}", dir.display())));
    }
    Ok(images)
}

pub fn save_training_image(dir: impl AsRef<Path>, name: &str, img: &RgbImage) -> Result<(), FormatError> {
    save_rgb(img, dir.as_ref().join(format!("{name}.ppm")))
}
