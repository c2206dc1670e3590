use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gprtopo::config::PipelineConfig;
use gprtopo::pipeline::{self, BatchReport};
use gprtopo::Result;

#[derive(Parser)]
#[command(name = "gprtopo", version, about = "Topological feature maps for GPR B-scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// key = value config file; flags given here override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the effective configuration to this file
    #[arg(long, global = true)]
    dump_config: Option<PathBuf>,
    /// Override any config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); GPRTOPO_THREADS caps this
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat bright pixels as early in the filtration
    #[arg(long, global = true)]
    invert: bool,
    #[arg(long, global = true)]
    quantize: Option<u32>,
    #[arg(long, global = true)]
    min_lifetime: Option<f64>,
    /// boundary | filled
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// standard | twist
    #[arg(long, global = true)]
    reduction: Option<String>,
    /// Emit only the blend plane as a grayscale PNG
    #[arg(long, global = true)]
    blend_only: bool,
    /// Convert color input with BT.601 luma weights
    #[arg(long, global = true)]
    luma: bool,
    #[arg(long, global = true)]
    train_frac: Option<f64>,
    /// AGC window lengths in samples, comma separated
    #[arg(long, global = true)]
    agc_windows: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let mut pairs: Vec<(&str, String)> = Vec::new();
        if let Some(v) = self.seed {
            pairs.push(("seed", v.to_string()));
        }
        if let Some(v) = self.threads {
            pairs.push(("threads", v.to_string()));
        }
        if self.invert {
            pairs.push(("invert", "true".into()));
        }
        if let Some(v) = self.quantize {
            pairs.push(("quantize", v.to_string()));
        }
        if let Some(v) = self.min_lifetime {
            pairs.push(("min_lifetime", v.to_string()));
        }
        if let Some(v) = &self.mode {
            pairs.push(("mode", v.clone()));
        }
        if let Some(v) = self.alpha {
            pairs.push(("alpha", v.to_string()));
        }
        if let Some(v) = &self.reduction {
            pairs.push(("reduction", v.clone()));
        }
        if self.blend_only {
            pairs.push(("blend_only", "true".into()));
        }
        if self.luma {
            pairs.push(("luma", "true".into()));
        }
        if let Some(v) = self.train_frac {
            pairs.push(("train_frac", v.to_string()));
        }
        if let Some(v) = &self.agc_windows {
            pairs.push(("agc_windows", v.clone()));
        }
        for (k, v) in pairs {
            cfg.set(k, &v)?;
        }
        for a in &self.set {
            cfg.apply_assignment(a)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic labeled B-scan dataset
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Background removal, band-pass and AGC variants for .gprb files
    Preprocess {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Persistence diagrams and fused shape maps for images
    Topo {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Package image/label manifests into a YOLO dataset
    Export {
        /// Directory holding a manifest.txt of simulated items (repeatable)
        #[arg(long)]
        simulated: Vec<PathBuf>,
        /// Directory holding a manifest.txt of field items (repeatable)
        #[arg(long)]
        field: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score detector predictions against YOLO labels
    Eval {
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// synth -> preprocess -> topo -> export (-> eval)
    Pipeline {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn report_batch(step: &str, report: &BatchReport) -> bool {
    for (input, outs) in &report.outputs {
        println!("{step}: {} -> {} file(s)", input.display(), outs.len());
    }
    for f in &report.failures {
        eprintln!("{step}: {}: {}", f.path.display(), f.error);
    }
    report.is_success()
}

fn prepare(cfg: &ConfigArgs) -> Result<PipelineConfig> {
    let resolved = cfg.resolve()?;
    if let Some(path) = &cfg.dump_config {
        std::fs::write(path, resolved.dump()).map_err(|e| gprtopo::Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(resolved)
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Synth { out, n, cfg } => {
            let cfg = prepare(&cfg)?;
            let manifest = pipeline::with_pool(cfg.threads, || pipeline::run_synth(&cfg, n as usize, &out))??;
            println!("{}", manifest.manifest_path.display());
            Ok(true)
        }
        Command::Preprocess { inputs, out, cfg } => {
            let cfg = prepare(&cfg)?;
            let report = pipeline::with_pool(cfg.threads, || pipeline::run_preprocess(&cfg, &inputs, &out))??;
            Ok(report_batch("preprocess", &report))
        }
        Command::Topo { inputs, out, cfg } => {
            let cfg = prepare(&cfg)?;
            let report = pipeline::with_pool(cfg.threads, || pipeline::run_topo(&cfg, &inputs, &out))??;
            Ok(report_batch("topo", &report))
        }
        Command::Export { simulated, field, out, cfg } => {
            let cfg = prepare(&cfg)?;
            let manifest = pipeline::with_pool(cfg.threads, || pipeline::run_export(&cfg, &simulated, &field, &out))??;
            print!("{}", manifest.render().lines().next().unwrap_or_default());
            println!();
            println!("{}", manifest.path.display());
            Ok(true)
        }
        Command::Eval { preds, labels, out, cfg } => {
            prepare(&cfg)?;
            let report = pipeline::run_eval(&preds, &labels, out.as_deref())?;
            print!("{}", report.to_text());
            Ok(true)
        }
        Command::Pipeline { out, n, predictions, cfg } => {
            let cfg = prepare(&cfg)?;
            let summary = pipeline::with_pool(cfg.threads, || {
                pipeline::run_pipeline(&cfg, n as usize, &out, predictions.as_deref().map(Path::new))
            })??;
            let ok = report_batch("preprocess", &summary.preprocess) & report_batch("topo", &summary.topo);
            if let Some(m) = &summary.export {
                println!("{}", m.path.display());
            }
            if let Some(r) = &summary.eval {
                print!("{}", r.to_text());
            }
            Ok(ok && summary.is_success())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
