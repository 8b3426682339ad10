//! Image manifests: one `path[,label]` per line, no header, paths relative
//! to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use aiin_core::imgproc::{decode_pgm, encode_pgm, Image};

use crate::error::{CliError, CliResult, Context};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Option<u8>,
}

pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).context(format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (file, label) = match line.split_once(',') {
            Some((f, l)) => {
                let l = l.trim();
                let label = match l {
                    "0" => 0,
                    "1" => 1,
                    _ => {
                        return Err(CliError::Data(format!(
                            "{} line {}: label '{l}' is not 0 or 1",
                            path.display(),
                            i + 1
                        )))
                    }
                };
                (f.trim(), Some(label))
            }
            None => (line, None),
        };
        entries.push(ManifestEntry { path: base.join(file), label });
    }
    if entries.is_empty() {
        return Err(CliError::Data(format!("manifest {} lists no images", path.display())));
    }
    Ok(entries)
}

pub fn load_image(path: &Path) -> CliResult<Image> {
    let bytes = fs::read(path).context(format!("reading {}", path.display()))?;
    decode_pgm(&bytes).context(format!("decoding {}", path.display()))
}

pub fn load_images(entries: &[ManifestEntry]) -> CliResult<Vec<Image>> {
    entries.iter().map(|e| load_image(&e.path)).collect()
}

/// Images and labels; every entry must carry a label.
pub fn load_labeled(path: &Path) -> CliResult<(Vec<Image>, Vec<u8>)> {
    let entries = read_manifest(path)?;
    let labels = entries
        .iter()
        .map(|e| e.label.ok_or_else(|| CliError::Data(format!("{}: entry {} has no label", path.display(), e.path.display()))))
        .collect::<CliResult<Vec<u8>>>()?;
    Ok((load_images(&entries)?, labels))
}

pub fn save_image(path: &Path, img: &Image) -> CliResult<()> {
    fs::write(path, encode_pgm(img, true)).context(format!("writing {}", path.display()))
}

/// Writes `img_NNNN.pgm` files plus `manifest.csv` into `dir`.
pub fn write_image_set(dir: &Path, images: &[Image], labels: Option<&[u8]>) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).context(format!("creating {}", dir.display()))?;
    let mut manifest = String::new();
    for (i, img) in images.iter().enumerate() {
        let name = format!("img_{i:04}.pgm");
        save_image(&dir.join(&name), img)?;
        manifest.push_str(&name);
        if let Some(l) = labels {
            manifest.push_str(&format!(",{}", l[i]));
        }
        manifest.push('\n');
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, manifest).context(format!("writing {}", path.display()))?;
    Ok(path)
}
