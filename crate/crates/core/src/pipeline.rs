//! File-level orchestration behind the CLI subcommands.
//!
//! Batch steps run each file independently on a bounded rayon pool and
//! collect per-file failures instead of stopping; outputs never depend on
//! the pool width.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::export::{export_yolo, parse_yolo_labels, AnnotatedItem, ExportManifest, ItemImage, Origin};
use crate::gpr::{agc_variants, background_removal, bandpass, to_image, Bscan};
use crate::image::{encode_png, load_image, BitDepth, LoadOptions};
use crate::metrics::{load_label_tree, map_range, parse_predictions_csv, MapReport};
use crate::shape_map::{generators_csv, topo_pipeline};
use crate::synth::{generate_dataset, DatasetManifest};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GPRTOPO_THREADS";

#[derive(Debug)]
pub struct FileFailure {
    pub path: PathBuf,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct BatchReport {
    /// Outputs per successful input, in input order.
    pub outputs: Vec<(PathBuf, Vec<PathBuf>)>,
    pub failures: Vec<FileFailure>,
}

impl BatchReport {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    fn collect(results: Vec<(PathBuf, Result<Vec<PathBuf>>)>) -> Self {
        let mut report = Self::default();
        for (path, res) in results {
            match res {
                Ok(outs) => report.outputs.push((path, outs)),
                Err(error) => report.failures.push(FileFailure { path, error }),
            }
        }
        report
    }
}

/// Resolves the worker count: `requested` (0 = all cores), capped by `GPRTOPO_THREADS`.
pub fn resolve_threads(requested: usize) -> usize {
    let auto = std::thread::available_parallelism().map_or(1, |n| n.get());
    let n = if requested == 0 { auto } else { requested };
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    cap.map_or(n, |c| n.min(c)).max(1)
}

/// Runs `f` on a dedicated pool of `resolve_threads(threads)` workers.
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(threads))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn stem_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::invalid(format!("cannot derive a name from {}", path.display())))
}

pub fn run_synth(cfg: &PipelineConfig, n: usize, out: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    create_dir(out)?;
    generate_dataset(&cfg.dataset_config(), n, cfg.seed, out)
}

/// Background removal, band-pass, then one output per AGC window (or one
/// unscaled output when no windows are configured).
pub fn preprocess_bscan(b: &Bscan, cfg: &PipelineConfig) -> Result<Vec<(String, Bscan)>> {
    let mut cur = b.clone();
    if cfg.background_removal {
        cur = background_removal(&cur);
    }
    if cfg.bandpass {
        cur = bandpass(&cur, cfg.bandpass_params())?;
    }
    if cfg.agc_windows.is_empty() {
        return Ok(vec![(String::new(), cur)]);
    }
    let windows: Vec<f64> = cfg.agc_windows.iter().map(|&w| w as f64 * cur.dt()).collect();
    Ok(agc_variants(&cur, &windows, cfg.agc_target)?
        .into_iter()
        .enumerate()
        .map(|(k, v)| (format!("_agc{k}"), v))
        .collect())
}

fn preprocess_file(cfg: &PipelineConfig, input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let b = Bscan::load(input)?;
    let stem = stem_of(input)?;
    let mut written = Vec::new();
    for (suffix, variant) in preprocess_bscan(&b, cfg)? {
        let gprb = out.join(format!("{stem}{suffix}.gprb"));
        let png = out.join(format!("{stem}{suffix}.png"));
        write(&gprb, variant.to_bytes())?;
        write(&png, encode_png(&to_image(&variant, cfg.clip_pct)?, BitDepth::Eight)?)?;
        written.push(png);
    }
    Ok(written)
}

pub fn run_preprocess(cfg: &PipelineConfig, inputs: &[PathBuf], out: &Path) -> Result<BatchReport> {
    cfg.validate()?;
    create_dir(out)?;
    let results = inputs
        .par_iter()
        .map(|p| (p.clone(), preprocess_file(cfg, p, out)))
        .collect();
    Ok(BatchReport::collect(results))
}

/// Writes `{stem}_fused.png`, `{stem}_diagram.csv`, `{stem}_generators.csv`
/// and `{stem}_cycles.csv` for one image.
pub fn topo_file(cfg: &PipelineConfig, input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let img = load_image(input, LoadOptions { luma: cfg.luma })?;
    let result = topo_pipeline(&img, &cfg.topo_config())?;
    let stem = stem_of(input)?;
    let visible = result.diagram.without_zero_persistence();
    let fused_bytes = if cfg.blend_only {
        result.fused.to_png_blend()?
    } else {
        result.fused.to_png_rgb()?
    };
    let files = [
        (format!("{stem}_fused.png"), fused_bytes),
        (format!("{stem}_diagram.csv"), visible.to_csv().into_bytes()),
        (format!("{stem}_generators.csv"), generators_csv(&result.generators).into_bytes()),
        (format!("{stem}_cycles.csv"), visible.cycles_csv().into_bytes()),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out.join(name);
        write(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}

pub fn run_topo(cfg: &PipelineConfig, inputs: &[PathBuf], out: &Path) -> Result<BatchReport> {
    cfg.validate()?;
    create_dir(out)?;
    let results = inputs
        .par_iter()
        .map(|p| (p.clone(), topo_file(cfg, p, out)))
        .collect();
    Ok(BatchReport::collect(results))
}

/// Reads a two-column `image<TAB>label` manifest; paths are relative to its directory.
pub fn read_item_manifest(dir: &Path, origin: Origin) -> Result<Vec<AnnotatedItem>> {
    let manifest = dir.join("manifest.txt");
    let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, line)| {
            let (img, lbl) = line.split_once('\t').ok_or_else(|| {
                Error::parse("item manifest", format!("{}: line {}: expected two tab-separated paths", manifest.display(), i + 1))
            })?;
            let img_path = dir.join(img);
            let lbl_path = dir.join(lbl);
            let bytes = fs::read(&img_path).map_err(|e| Error::io(&img_path, e))?;
            let labels = fs::read_to_string(&lbl_path).map_err(|e| Error::io(&lbl_path, e))?;
            Ok(AnnotatedItem {
                name: stem_of(&img_path)?,
                image: ItemImage::Png(bytes),
                boxes: parse_yolo_labels(&labels)?,
                origin,
            })
        })
        .collect()
}

pub fn run_export(cfg: &PipelineConfig, simulated: &[PathBuf], field: &[PathBuf], out: &Path) -> Result<ExportManifest> {
    cfg.validate()?;
    let mut items = Vec::new();
    for dir in simulated {
        items.extend(read_item_manifest(dir, Origin::Simulated)?);
    }
    for dir in field {
        items.extend(read_item_manifest(dir, Origin::Field)?);
    }
    create_dir(out)?;
    export_yolo(&items, out, cfg.train_frac, cfg.seed)
}

/// Evaluates a predictions CSV against a YOLO label tree; with `out`, writes
/// `report.txt` and `report.csv` there.
pub fn run_eval(preds: &Path, labels: &Path, out: Option<&Path>) -> Result<MapReport> {
    let text = fs::read_to_string(preds).map_err(|e| Error::io(preds, e))?;
    let detections = parse_predictions_csv(&text)?;
    let gts = load_label_tree(labels)?;
    let report = map_range(&detections, &gts);
    if let Some(dir) = out {
        create_dir(dir)?;
        write(&dir.join("report.txt"), report.to_text())?;
        write(&dir.join("report.csv"), report.to_csv())?;
    }
    Ok(report)
}

#[derive(Debug)]
pub struct PipelineSummary {
    pub synth: DatasetManifest,
    pub preprocess: BatchReport,
    pub topo: BatchReport,
    pub export: Option<ExportManifest>,
    pub eval: Option<MapReport>,
}

impl PipelineSummary {
    pub fn is_success(&self) -> bool {
        self.preprocess.is_success() && self.topo.is_success() && self.export.is_some()
    }
}

/// synth -> preprocess -> topo -> export (-> eval when predictions are given),
/// laid out under `out/{synth,preprocessed,topo,dataset,eval}`.
pub fn run_pipeline(cfg: &PipelineConfig, n: usize, out: &Path, predictions: Option<&Path>) -> Result<PipelineSummary> {
    cfg.validate()?;
    create_dir(out)?;
    write(&out.join("effective_config.txt"), cfg.dump_settings())?;

    let synth_dir = out.join("synth");
    let synth = run_synth(cfg, n, &synth_dir)?;

    let bscans: Vec<PathBuf> = synth.items.iter().map(|it| synth_dir.join(&it.bscan_path)).collect();
    let pre_dir = out.join("preprocessed");
    let preprocess = run_preprocess(cfg, &bscans, &pre_dir)?;

    let images: Vec<PathBuf> = preprocess.outputs.iter().flat_map(|(_, outs)| outs.clone()).collect();
    let topo_dir = out.join("topo");
    let topo = run_topo(cfg, &images, &topo_dir)?;

    // every preprocessed variant inherits the labels of its source scene
    let mut lines = String::new();
    for (src, pre_outs) in &preprocess.outputs {
        let Some(item) = synth.items.iter().find(|it| &synth_dir.join(&it.bscan_path) == src) else {
            continue;
        };
        for png in pre_outs {
            let stem = stem_of(png)?;
            let fused = format!("{stem}_fused.png");
            if topo_dir.join(&fused).exists() {
                lines.push_str(&format!("{fused}\t../synth/{}\n", item.label_path.display()));
            }
        }
    }
    write(&topo_dir.join("manifest.txt"), &lines)?;

    let export = if lines.is_empty() {
        None
    } else {
        Some(run_export(cfg, std::slice::from_ref(&topo_dir), &[], &out.join("dataset"))?)
    };
    let eval = match predictions {
        Some(p) => Some(run_eval(p, &out.join("dataset").join("labels"), Some(&out.join("eval")))?),
        None => None,
    };
    Ok(PipelineSummary {
        synth,
        preprocess,
        topo,
        export,
        eval,
    })
}
