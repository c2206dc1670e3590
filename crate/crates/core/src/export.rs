//! YOLO-format dataset export with a per-origin train/val split.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{encode_png, BitDepth, GrayImage};
use crate::shape_map::FusedImage;
use crate::synth::GroundTruthBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Simulated,
    Field,
}

impl Origin {
    pub const ALL: [Origin; 2] = [Origin::Simulated, Origin::Field];

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Simulated => "simulated",
            Origin::Field => "field",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulated" => Ok(Origin::Simulated),
            "field" => Ok(Origin::Field),
            other => Err(Error::invalid(format!("unknown origin {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemImage {
    Fused(FusedImage),
    Gray(GrayImage),
    /// Already-encoded PNG bytes, copied verbatim.
    Png(Vec<u8>),
}

impl ItemImage {
    fn encode(&self) -> Result<Vec<u8>> {
        match self {
            ItemImage::Fused(f) => f.to_png_rgb(),
            ItemImage::Gray(g) => encode_png(g, BitDepth::Eight),
            ItemImage::Png(bytes) => Ok(bytes.clone()),
        }
    }

    fn is_empty(&self) -> bool {
        matches!(self, ItemImage::Png(b) if b.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedItem {
    /// File stem used for the image and label files; unique per export.
    pub name: String,
    pub image: ItemImage,
    pub boxes: Vec<GroundTruthBox>,
    pub origin: Origin,
}

/// `class_id cx cy w h` with six decimals.
pub fn yolo_line(b: &GroundTruthBox) -> String {
    format!("{} {:.6} {:.6} {:.6} {:.6}", b.class_id, b.cx, b.cy, b.w, b.h)
}

pub fn yolo_label_text(boxes: &[GroundTruthBox]) -> String {
    boxes.iter().map(|b| yolo_line(b) + "\n").collect()
}

/// Parses YOLO label text back into boxes.
pub fn parse_yolo_labels(text: &str) -> Result<Vec<GroundTruthBox>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || Error::parse("YOLO label", format!("line {}: {line:?}", i + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(bad());
            }
            let class_id = fields[0].parse().map_err(|_| bad())?;
            let mut v = [0.0; 4];
            for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                *slot = f.parse().map_err(|_| bad())?;
            }
            Ok(GroundTruthBox {
                class_id,
                cx: v[0],
                cy: v[1],
                w: v[2],
                h: v[3],
            })
        })
        .collect()
}

/// `(train, val)` sizes for `n` items: `round(n * train_frac)` go to train.
pub fn split_counts(n: usize, train_frac: f64) -> (usize, usize) {
    let train = ((n as f64) * train_frac).round() as usize;
    let train = train.min(n);
    (train, n - train)
}

/// Deterministically shuffles `0..n` and cuts it into train and val index lists.
pub fn split_indices(n: usize, train_frac: f64, seed: u64, stream: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    idx.shuffle(&mut rng);
    let (train, _) = split_counts(n, train_frac);
    let val = idx.split_off(train);
    (idx, val)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub split: Split,
    pub origin: Origin,
    pub image_path: PathBuf,
    pub label_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportManifest {
    pub path: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl ExportManifest {
    pub fn count(&self, split: Split, origin: Origin) -> usize {
        self.entries
            .iter()
            .filter(|e| e.split == split && e.origin == origin)
            .count()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("#");
        for split in [Split::Train, Split::Val] {
            out.push_str(&format!(" {split}"));
            for origin in Origin::ALL {
                out.push_str(&format!(" {origin}={}", self.count(split, origin)));
            }
        }
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.split,
                e.origin,
                e.image_path.display(),
                e.label_path.display()
            ));
        }
        out
    }
}

/// Writes `images/{train,val}/` and `labels/{train,val}/` under `out_dir`,
/// then `manifest.txt` once every item is on disk.
pub fn export_yolo(items: &[AnnotatedItem], out_dir: &Path, train_frac: f64, seed: u64) -> Result<ExportManifest> {
    if items.is_empty() {
        return Err(Error::invalid("nothing to export"));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(format!("train_frac {train_frac} outside (0, 1)")));
    }
    let mut seen = BTreeSet::new();
    for it in items {
        if it.image.is_empty() {
            return Err(Error::invalid(format!("item {:?} has no image data", it.name)));
        }
        if !seen.insert(it.name.as_str()) {
            return Err(Error::invalid(format!("duplicate item name {:?}", it.name)));
        }
        if let Some(b) = it.boxes.iter().find(|b| !b.is_valid()) {
            return Err(Error::invalid(format!("item {:?} has an unnormalized box {b:?}", it.name)));
        }
    }
    for kind in ["images", "labels"] {
        for split in [Split::Train, Split::Val] {
            let dir = out_dir.join(kind).join(split.as_str());
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }

    let mut assignments: Vec<(Split, Origin, &AnnotatedItem)> = Vec::with_capacity(items.len());
    for (stream, origin) in Origin::ALL.into_iter().enumerate() {
        let group: Vec<&AnnotatedItem> = items.iter().filter(|it| it.origin == origin).collect();
        let (train, val) = split_indices(group.len(), train_frac, seed, stream as u64);
        let mut tagged: Vec<(Split, &AnnotatedItem)> = train
            .into_iter()
            .map(|i| (Split::Train, group[i]))
            .chain(val.into_iter().map(|i| (Split::Val, group[i])))
            .collect();
        tagged.sort_by(|a, b| (a.0, &a.1.name).cmp(&(b.0, &b.1.name)));
        assignments.extend(tagged.into_iter().map(|(s, it)| (s, origin, it)));
    }
    assignments.sort_by_key(|(s, o, _)| (*s, *o));

    let entries: Vec<ManifestEntry> = assignments
        .par_iter()
        .map(|(split, origin, it)| {
            let image_path = Path::new("images").join(split.as_str()).join(format!("{}.png", it.name));
            let label_path = Path::new("labels").join(split.as_str()).join(format!("{}.txt", it.name));
            let img_abs = out_dir.join(&image_path);
            fs::write(&img_abs, it.image.encode()?).map_err(|e| Error::io(&img_abs, e))?;
            let lbl_abs = out_dir.join(&label_path);
            fs::write(&lbl_abs, yolo_label_text(&it.boxes)).map_err(|e| Error::io(&lbl_abs, e))?;
            Ok(ManifestEntry {
                split: *split,
                origin: *origin,
                image_path,
                label_path,
            })
        })
        .collect::<Result<_>>()?;

    let manifest = ExportManifest {
        path: out_dir.join("manifest.txt"),
        entries,
    };
    fs::write(&manifest.path, manifest.render()).map_err(|e| Error::io(&manifest.path, e))?;
    Ok(manifest)
}
