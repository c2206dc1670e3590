//! IoU, all-point average precision, and mAP over IoU thresholds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::export::parse_yolo_labels;
use crate::synth::GroundTruthBox;

/// Axis-aligned rectangle in corner form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Rect {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1).max(0.0) * (self.y2 - self.y1).max(0.0)
    }
}

impl From<&GroundTruthBox> for Rect {
    fn from(b: &GroundTruthBox) -> Self {
        Rect::from_center(b.cx, b.cy, b.w, b.h)
    }
}

pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
}

impl Detection {
    pub fn rect(&self) -> Rect {
        Rect::from_center(self.cx, self.cy, self.w, self.h)
    }
}

/// Ground truth keyed by image id.
pub type GroundTruth = BTreeMap<String, Vec<GroundTruthBox>>;

/// All-point interpolated AP with greedy highest-IoU matching.
pub fn average_precision(preds: &[Detection], gts: &GroundTruth, iou_thresh: f64) -> f64 {
    let n_gt: usize = gts.values().map(Vec::len).sum();
    if n_gt == 0 || preds.is_empty() {
        return 0.0;
    }
    let mut ranked: Vec<&Detection> = preds.iter().collect();
    // stable: equal keys keep input order
    ranked.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    let mut used: BTreeMap<&str, Vec<bool>> = gts
        .iter()
        .map(|(k, v)| (k.as_str(), vec![false; v.len()]))
        .collect();
    let mut tp = 0usize;
    let mut curve = Vec::with_capacity(ranked.len());
    for (k, det) in ranked.iter().enumerate() {
        let rect = det.rect();
        let mut best: Option<(usize, f64)> = None;
        if let (Some(boxes), Some(flags)) = (gts.get(&det.image_id), used.get(det.image_id.as_str())) {
            for (g, b) in boxes.iter().enumerate() {
                if flags[g] {
                    continue;
                }
                let v = iou(&rect, &Rect::from(b));
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((g, v));
                }
            }
        }
        if let Some((g, _)) = best.filter(|&(_, v)| v >= iou_thresh) {
            used.get_mut(det.image_id.as_str()).expect("image has ground truth")[g] = true;
            tp += 1;
        }
        let recall = tp as f64 / n_gt as f64;
        let precision = tp as f64 / (k + 1) as f64;
        curve.push((recall, precision));
    }
    area_under_envelope(&curve)
}

/// Sum of recall steps times the running-max precision taken from the right.
fn area_under_envelope(curve: &[(f64, f64)]) -> f64 {
    let mut envelope: Vec<f64> = curve.iter().map(|&(_, p)| p).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (&(r, _), &p) in curve.iter().zip(&envelope) {
        ap += (r - prev_recall) * p;
        prev_recall = r;
    }
    ap
}

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|k| f64::from(50 + 5 * k) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapReport {
    /// `(threshold, AP)` for each IoU threshold.
    pub per_threshold: Vec<(f64, f64)>,
    pub map50: f64,
    pub map50_95: f64,
}

impl MapReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (t, ap) in &self.per_threshold {
            let _ = writeln!(out, "AP@{t:.2},{ap:.6}");
        }
        let _ = writeln!(out, "mAP@0.5,{:.6}", self.map50);
        let _ = writeln!(out, "mAP@0.5:0.95,{:.6}", self.map50_95);
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, ap) in &self.per_threshold {
            let _ = writeln!(out, "AP@{t:.2}        {ap:.6}");
        }
        let _ = writeln!(out, "mAP@0.5        {:.6}", self.map50);
        let _ = writeln!(out, "mAP@0.5:0.95   {:.6}", self.map50_95);
        out
    }
}

pub fn map_range(preds: &[Detection], gts: &GroundTruth) -> MapReport {
    let per_threshold: Vec<(f64, f64)> = coco_thresholds()
        .into_iter()
        .map(|t| (t, average_precision(preds, gts, t)))
        .collect();
    let map50 = per_threshold[0].1;
    let map50_95 = per_threshold.iter().map(|(_, ap)| ap).sum::<f64>() / per_threshold.len() as f64;
    MapReport {
        per_threshold,
        map50,
        map50_95,
    }
}

/// Parses `image_id,class_id,cx,cy,w,h,confidence` lines; a leading header is skipped.
pub fn parse_predictions_csv(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || (lineno == 1 && line.starts_with("image_id")) {
            continue;
        }
        let bad = |why: &str| Error::parse("predictions CSV", format!("line {lineno}: {why}"));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(bad(&format!("expected 7 fields, found {}", fields.len())));
        }
        let num = |k: usize| fields[k].parse::<f64>().map_err(|_| bad(&format!("bad number {:?}", fields[k])));
        let det = Detection {
            image_id: fields[0].to_owned(),
            class_id: fields[1].parse().map_err(|_| bad("bad class_id"))?,
            cx: num(2)?,
            cy: num(3)?,
            w: num(4)?,
            h: num(5)?,
            confidence: num(6)?,
        };
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if ![det.cx, det.cy, det.w, det.h, det.confidence].into_iter().all(unit) {
            return Err(bad("value outside [0, 1]"));
        }
        out.push(det);
    }
    Ok(out)
}

/// Reads every `*.txt` label file under `dir` (recursively), keyed by file stem.
pub fn load_label_tree(dir: &Path) -> Result<GroundTruth> {
    let mut gts = GroundTruth::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|e| e != "txt") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::invalid(format!("non-UTF-8 label name {}", path.display())))?
            .to_owned();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let boxes = parse_yolo_labels(&text)?;
        if gts.insert(stem.clone(), boxes).is_some() {
            return Err(Error::invalid(format!("duplicate label file for image {stem:?}")));
        }
    }
    Ok(gts)
}
