//! Config-driven command-line driver. Each subcommand runs one pipeline
//! stage against artifacts on disk, so stages are resumable and `run-all`
//! is exactly the stage chain.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aisel::config::{ExperimentConfig, SelectionMethod};
use aisel::gin::{generate, FeatureVector, GinModel};
use aisel::nn::{load_network, save_network};
use aisel::pipeline::{
    kfold_split, label_design, load_dataset, select_design, train_gin_for_fold,
    train_improved_for_fold, train_native_for_fold, Dataset, ExperimentReport, FoldReport,
};
use aisel::sampler::{Method, SampleDesign};
use aisel::uncertainty::{classify, entropy, eval_metrics, Classifier};
use aisel::{Error, Result};

#[derive(Parser)]
#[command(name = "aisel", version, about = "Active image synthesis experiment driver")]
struct Cli {
    /// Experiment config as JSON; omitted fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted-path config override, e.g. --set gin.epochs=50.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output root; artifacts go to OUT/<run_id>/.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Shorthand for --set seed=N.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Cmd {
    /// Train the generative network per fold and save its checkpoints.
    TrainGin,
    /// Train the native classifier per fold.
    TrainNative,
    /// Select the virtual-feature design per fold (needs checkpoints).
    Sample,
    /// Generate virtual images from designs and oracle-label them.
    Label,
    /// Train the improved classifier on fused actual + virtual data.
    Retrain,
    /// Chain every stage and emit metrics.csv.
    RunAll,
    /// Evaluate native and improved classifiers on the test folds.
    Eval,
    /// Export an entropy grid over a 2D latent cross-section per fold.
    ExportGrid,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let run_dir = cli.out.join(&cfg.run_id);
    match execute(cli.cmd, &cfg, &run_dir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let record = serde_json::json!({
                "error": e.to_string(),
                "run_id": cfg.run_id,
            });
            let _ = fs::create_dir_all(&run_dir);
            let _ = fs::write(
                run_dir.join("error.json"),
                serde_json::to_string_pretty(&record).unwrap(),
            );
            ExitCode::from(1)
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)?,
        None => "{}".to_string(),
    };
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(seed) = cli.seed {
        ExperimentConfig::apply_override(&mut value, &format!("seed={seed}"))?;
    }
    for assignment in &cli.set {
        ExperimentConfig::apply_override(&mut value, assignment)?;
    }
    ExperimentConfig::from_json(&value.to_string())
}

struct Ctx {
    data: Dataset,
    splits: Vec<(Vec<usize>, Vec<usize>)>,
    checkpoints: PathBuf,
    designs: PathBuf,
    grids: PathBuf,
}

impl Ctx {
    fn new(cfg: &ExperimentConfig, run_dir: &Path) -> Result<Ctx> {
        for sub in ["checkpoints", "designs", "grids"] {
            fs::create_dir_all(run_dir.join(sub))?;
        }
        fs::write(run_dir.join("config.resolved.json"), cfg.to_resolved_json()?)?;
        let data = load_dataset(cfg)?;
        let splits = kfold_split(&data.labels, cfg.folds, cfg.seed)?;
        Ok(Ctx {
            data,
            splits,
            checkpoints: run_dir.join("checkpoints"),
            designs: run_dir.join("designs"),
            grids: run_dir.join("grids"),
        })
    }

    fn train(&self, fold: usize) -> Dataset {
        self.data.subset(&self.splits[fold].0)
    }

    fn test(&self, fold: usize) -> Dataset {
        self.data.subset(&self.splits[fold].1)
    }

    fn gin_path(&self, fold: usize, part: &str) -> PathBuf {
        self.checkpoints.join(format!("fold{fold}.gin.{part}.ckpt"))
    }

    fn load_gin(&self, cfg: &ExperimentConfig, fold: usize) -> Result<GinModel> {
        Ok(GinModel {
            generator: load_network(&self.gin_path(fold, "generator"))?,
            discriminator: load_network(&self.gin_path(fold, "discriminator"))?,
            encoder: load_network(&self.gin_path(fold, "encoder"))?,
            r: cfg.r,
            width: cfg.width,
            height: cfg.height,
        })
    }

    fn load_classifier(&self, fold: usize, name: &str) -> Result<Classifier> {
        let net = load_network(&self.checkpoints.join(format!("fold{fold}.{name}.ckpt")))?;
        Ok(Classifier {
            net,
            classes: self.data.classes,
        })
    }
}

fn skip_synthesis(cfg: &ExperimentConfig) -> bool {
    cfg.method == SelectionMethod::None || cfg.m_virtual == 0
}

fn execute(cmd: Cmd, cfg: &ExperimentConfig, run_dir: &Path) -> Result<()> {
    let ctx = Ctx::new(cfg, run_dir)?;
    match cmd {
        Cmd::TrainGin => stage_train_gin(cfg, &ctx),
        Cmd::TrainNative => stage_train_native(cfg, &ctx),
        Cmd::Sample => stage_sample(cfg, &ctx),
        Cmd::Label => stage_label(cfg, &ctx),
        Cmd::Retrain => stage_retrain(cfg, &ctx),
        Cmd::Eval => stage_eval(cfg, &ctx, run_dir),
        Cmd::ExportGrid => stage_export_grid(cfg, &ctx),
        Cmd::RunAll => {
            stage_train_native(cfg, &ctx)?;
            if !skip_synthesis(cfg) {
                stage_train_gin(cfg, &ctx)?;
            }
            stage_sample(cfg, &ctx)?;
            stage_label(cfg, &ctx)?;
            stage_retrain(cfg, &ctx)?;
            stage_eval(cfg, &ctx, run_dir)
        }
    }
}

fn stage_train_native(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<()> {
    for fold in 0..cfg.folds {
        let clf = train_native_for_fold(cfg, &ctx.train(fold), fold)?;
        save_network(&clf.net, &ctx.checkpoints.join(format!("fold{fold}.native.ckpt")))?;
    }
    Ok(())
}

fn stage_train_gin(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<()> {
    for fold in 0..cfg.folds {
        let (gin, traces) = train_gin_for_fold(cfg, &ctx.train(fold), fold)?;
        save_network(&gin.generator, &ctx.gin_path(fold, "generator"))?;
        save_network(&gin.discriminator, &ctx.gin_path(fold, "discriminator"))?;
        save_network(&gin.encoder, &ctx.gin_path(fold, "encoder"))?;
        fs::write(
            ctx.checkpoints.join(format!("fold{fold}.gin_traces.json")),
            serde_json::to_string(&traces).map_err(Error::from)?,
        )?;
    }
    Ok(())
}

fn design_header(r: usize) -> String {
    let mut h = String::new();
    for i in 1..=r {
        h.push_str(&format!("f{i},"));
    }
    h.push_str("kind\n");
    h
}

fn stage_sample(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<()> {
    for fold in 0..cfg.folds {
        let path = ctx.designs.join(format!("fold{fold}.design.csv"));
        if skip_synthesis(cfg) {
            fs::write(path, design_header(cfg.r))?;
            continue;
        }
        let gin = ctx.load_gin(cfg, fold)?;
        let native = ctx.load_classifier(fold, "native")?;
        let design = select_design(cfg, &gin, &native, &ctx.train(fold), fold)?;
        fs::write(path, design.to_csv())?;
    }
    Ok(())
}

/// Parses a `f1,...,fr,kind` design CSV. The shortest-roundtrip decimal
/// form written by `to_csv` reparses to bit-identical f64 values.
fn read_design(path: &Path) -> Result<SampleDesign> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("empty design file {}", path.display())))?;
    let r = header.split(',').count() - 1;
    let mut movable = Vec::new();
    let mut fixed = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != r + 1 {
            return Err(Error::Config(format!("bad design row {line:?}")));
        }
        let coords = cells[..r]
            .iter()
            .map(|c| c.parse::<f64>().map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<f64>>>()?;
        let f = FeatureVector { coords };
        match cells[r] {
            "virtual" => movable.push(f),
            "actual" => fixed.push(f),
            other => return Err(Error::Config(format!("bad design kind {other:?}"))),
        }
    }
    Ok(SampleDesign {
        movable,
        fixed,
        objective_trace: Vec::new(),
        method: Method::Aisel,
    })
}

fn stage_label(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<()> {
    for fold in 0..cfg.folds {
        let labels_path = ctx.designs.join(format!("fold{fold}.labels.csv"));
        if skip_synthesis(cfg) {
            fs::write(labels_path, "")?;
            continue;
        }
        let design = read_design(&ctx.designs.join(format!("fold{fold}.design.csv")))?;
        let gin = ctx.load_gin(cfg, fold)?;
        let virtual_data = label_design(cfg, &gin, &design, ctx.data.classes)?;
        let mut text = String::new();
        for &l in &virtual_data.labels {
            text.push_str(&format!("{l}\n"));
        }
        fs::write(labels_path, text)?;
    }
    Ok(())
}

fn load_virtual(cfg: &ExperimentConfig, ctx: &Ctx, fold: usize) -> Result<Dataset> {
    let design = read_design(&ctx.designs.join(format!("fold{fold}.design.csv")))?;
    let text = fs::read_to_string(ctx.designs.join(format!("fold{fold}.labels.csv")))?;
    let labels = text
        .lines()
        .map(|l| l.trim().parse::<usize>().map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<Vec<usize>>>()?;
    if labels.len() != design.movable.len() {
        return Err(Error::Config(format!(
            "fold {fold}: {} labels for {} design points",
            labels.len(),
            design.movable.len()
        )));
    }
    let gin = ctx.load_gin(cfg, fold)?;
    let images = generate(&gin, &design.movable)?;
    Ok(Dataset {
        provenance: vec![aisel::pipeline::Provenance::Virtual; images.len()],
        images,
        labels,
        classes: ctx.data.classes,
        tau_mass: None,
    })
}

fn stage_retrain(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<()> {
    for fold in 0..cfg.folds {
        let out = ctx.checkpoints.join(format!("fold{fold}.improved.ckpt"));
        if skip_synthesis(cfg) {
            // Degenerate pipeline: the improved model is the native model.
            fs::copy(ctx.checkpoints.join(format!("fold{fold}.native.ckpt")), out)?;
            continue;
        }
        let virtual_data = load_virtual(cfg, ctx, fold)?;
        let clf = train_improved_for_fold(cfg, &ctx.train(fold), &virtual_data, fold)?;
        save_network(&clf.net, &out)?;
    }
    Ok(())
}

fn stage_eval(cfg: &ExperimentConfig, ctx: &Ctx, run_dir: &Path) -> Result<()> {
    let mut folds = Vec::with_capacity(cfg.folds);
    for fold in 0..cfg.folds {
        let native = ctx.load_classifier(fold, "native")?;
        let improved = ctx.load_classifier(fold, "improved")?;
        let test = ctx.test(fold);
        let design_csv = fs::read_to_string(ctx.designs.join(format!("fold{fold}.design.csv")))
            .unwrap_or_else(|_| design_header(cfg.r));
        let labels_text = fs::read_to_string(ctx.designs.join(format!("fold{fold}.labels.csv")))
            .unwrap_or_default();
        let mut virtual_label_counts = vec![0usize; ctx.data.classes];
        let mut virtual_count = 0;
        for line in labels_text.lines() {
            if let Ok(l) = line.trim().parse::<usize>() {
                if l < ctx.data.classes {
                    virtual_label_counts[l] += 1;
                }
                virtual_count += 1;
            }
        }
        folds.push(FoldReport {
            fold,
            seed: cfg.seed.wrapping_add(fold as u64),
            native: eval_metrics(&native, &test.images, &test.labels)?,
            improved: eval_metrics(&improved, &test.images, &test.labels)?,
            virtual_count,
            virtual_label_counts,
            design_csv,
            gin_traces: None,
            ccp_objective_trace: Vec::new(),
        });
    }
    let report = ExperimentReport {
        config: cfg.clone(),
        folds,
    };
    fs::write(run_dir.join("metrics.csv"), report.metrics_csv())?;
    fs::write(
        run_dir.join("report.json"),
        serde_json::to_string_pretty(&report).map_err(Error::from)?,
    )?;
    Ok(())
}

/// Entropy of C(G(f)) over a g×g grid in the (f1, f2) plane, remaining
/// coordinates fixed at 0; row order is f1 slowest.
fn stage_export_grid(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<()> {
    if cfg.r < 2 {
        return Err(Error::InvalidArgument("export-grid needs r >= 2".into()));
    }
    let g = cfg.grid_size;
    let axis: Vec<f64> = (0..g)
        .map(|i| -1.0 + 2.0 * i as f64 / (g - 1) as f64)
        .collect();
    for fold in 0..cfg.folds {
        if !ctx.gin_path(fold, "generator").exists() {
            return Err(Error::Checkpoint(format!(
                "missing GIN checkpoint for fold {fold}; run train-gin first"
            )));
        }
        let gin = ctx.load_gin(cfg, fold)?;
        let native = ctx.load_classifier(fold, "native")?;
        let mut csv = String::from("f1,f2,entropy\n");
        for &x in &axis {
            let row: Vec<FeatureVector> = axis
                .iter()
                .map(|&y| {
                    let mut coords = vec![0.0; cfg.r];
                    coords[0] = x;
                    coords[1] = y;
                    FeatureVector { coords }
                })
                .collect();
            let probs = classify(&native, &generate(&gin, &row)?)?;
            for (j, &y) in axis.iter().enumerate() {
                let h = entropy(probs.row(j))?;
                csv.push_str(&format!("{x},{y},{h}\n"));
            }
        }
        fs::write(ctx.grids.join(format!("fold{fold}.entropy.csv")), csv)?;
        let overlay = fs::read_to_string(ctx.designs.join(format!("fold{fold}.design.csv")))
            .unwrap_or_else(|_| design_header(cfg.r));
        fs::write(ctx.grids.join(format!("fold{fold}.overlay.csv")), overlay)?;
    }
    Ok(())
}
