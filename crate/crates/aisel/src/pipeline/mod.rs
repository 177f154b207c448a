//! End-to-end orchestration: data ingestion and synthesis, augmentation,
//! stratified k-fold evaluation, oracle labeling, dataset fusion, and
//! retraining.

pub mod blobs;
pub mod idx;
pub mod oracle;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use blobs::{bright_mass, mass_label, render_blob_scene, synth_blob_dataset, DEFAULT_TAU_MASS};
pub use idx::{load_idx_images, load_idx_labels};
pub use oracle::{oracle_label, OracleSpec};

use crate::config::{AugmentOp, DataSpec, ExperimentConfig, SelectionMethod};
use crate::gin::{encode, generate, train_gin_r, GinModel, GinTraces, Image};
use crate::sampler::{ccp_optimize, grid_topk_design, random_design, Method, SampleDesign};
use crate::uncertainty::{
    build_grid_pool, build_pool, eval_metrics, train_classifier, Classifier, Metrics,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Actual,
    Virtual,
}

/// Labeled image collection with per-example provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub provenance: Vec<Provenance>,
    /// Bright-mass threshold recorded by the synthetic generator.
    pub tau_mass: Option<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.len() != self.labels.len() || self.images.len() != self.provenance.len() {
            return Err(Error::ShapeMismatch("dataset column lengths".into()));
        }
        for &l in &self.labels {
            if l >= self.classes {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    classes: self.classes,
                });
            }
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
            provenance: indices.iter().map(|&i| self.provenance[i]).collect(),
            tau_mass: self.tau_mass,
        }
    }
}

fn transform_image(img: &Image, op: AugmentOp) -> Result<Image> {
    let (w, h) = (img.width, img.height);
    if matches!(op, AugmentOp::Rot90 | AugmentOp::Rot180 | AugmentOp::Rot270) && w != h {
        return Err(Error::InvalidArgument("rotation requires square images".into()));
    }
    let mut pixels = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = match op {
                // Destination (x, y) pulls from the source pixel that a
                // clockwise rotation by the given angle maps onto it.
                AugmentOp::Rot90 => (y, w - 1 - x),
                AugmentOp::Rot180 => (w - 1 - x, h - 1 - y),
                AugmentOp::Rot270 => (h - 1 - y, x),
                AugmentOp::Hflip => (w - 1 - x, y),
            };
            pixels[y * w + x] = img.pixels[sy * w + sx];
        }
    }
    Ok(Image {
        width: w,
        height: h,
        pixels,
    })
}

/// Originals plus one transformed copy per op, labels and provenance copied.
/// Every transform permutes pixels, so per-image histograms are preserved.
pub fn augment(data: &Dataset, ops: &[AugmentOp]) -> Result<Dataset> {
    let mut out = data.clone();
    for &op in ops {
        for i in 0..data.len() {
            out.images.push(transform_image(&data.images[i], op)?);
            out.labels.push(data.labels[i]);
            out.provenance.push(data.provenance[i]);
        }
    }
    Ok(out)
}

/// The eight dihedral transforms in a fixed cycle order (identity first).
const DIHEDRAL_CYCLE: [Option<AugmentOp>; 4] = [
    None,
    Some(AugmentOp::Rot90),
    Some(AugmentOp::Rot180),
    Some(AugmentOp::Rot270),
];

/// Expands the dataset to exactly `factor` times its size by cycling
/// rotations and the horizontally flipped rotations; copies beyond the
/// eighth transform repeat the cycle. Pixel multisets are preserved.
pub fn augment_to_factor(data: &Dataset, factor: usize) -> Result<Dataset> {
    if factor == 0 {
        return Err(Error::InvalidArgument("augment factor must be >= 1".into()));
    }
    let mut out = data.clone();
    for copy in 1..factor {
        let rot = DIHEDRAL_CYCLE[copy % 4];
        let flip = (copy / 4) % 2 == 1;
        for i in 0..data.len() {
            let mut img = data.images[i].clone();
            if let Some(op) = rot {
                img = transform_image(&img, op)?;
            }
            if flip {
                img = transform_image(&img, AugmentOp::Hflip)?;
            }
            out.images.push(img);
            out.labels.push(data.labels[i]);
            out.provenance.push(data.provenance[i]);
        }
    }
    Ok(out)
}

fn apply_augmentation(cfg: &ExperimentConfig, data: &Dataset) -> Result<Dataset> {
    match cfg.augment_factor {
        Some(f) => augment_to_factor(data, f),
        None => augment(data, &cfg.augment_ops),
    }
}

/// Stratified k-fold partitions: disjoint near-equal test folds, each index
/// in exactly one test fold, per-fold class ratios within one example of
/// the global ratio. Deterministic per seed.
pub fn kfold_split(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if folds < 1 {
        return Err(Error::InvalidArgument("folds must be >= 1".into()));
    }
    if folds > labels.len() {
        return Err(Error::InvalidArgument(format!(
            "folds = {folds} exceeds dataset size {}",
            labels.len()
        )));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut cursor = 0usize;
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        // Continuing the round-robin cursor across classes keeps the fold
        // sizes near-equal even when class counts are not multiples of k.
        for i in members {
            fold_of[i] = cursor % folds;
            cursor += 1;
        }
    }
    let mut out = Vec::with_capacity(folds);
    for f in 0..folds {
        let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
        let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
        out.push((train, test));
    }
    Ok(out)
}

/// Concatenation with provenance preserved; class counts must agree.
pub fn fuse(actual: &Dataset, virtual_data: &Dataset) -> Result<Dataset> {
    if virtual_data.is_empty() {
        return Ok(actual.clone());
    }
    if actual.classes != virtual_data.classes {
        return Err(Error::ShapeMismatch(format!(
            "class count {} vs {}",
            actual.classes, virtual_data.classes
        )));
    }
    if let (Some(a), Some(v)) = (actual.images.first(), virtual_data.images.first()) {
        if a.width != v.width || a.height != v.height {
            return Err(Error::ShapeMismatch("image dims differ between datasets".into()));
        }
    }
    let mut out = actual.clone();
    out.images.extend(virtual_data.images.iter().cloned());
    out.labels.extend(virtual_data.labels.iter().cloned());
    out.provenance.extend(virtual_data.provenance.iter().cloned());
    Ok(out)
}

/// Loads (or synthesizes) the actual dataset named by the config. The
/// synthetic corpus is sized so each fold's training split has `n_train`
/// examples.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSpec::SyntheticBlobs => {
            let count = cfg.n_train * cfg.folds / (cfg.folds - 1).max(1);
            synth_blob_dataset(count, cfg.width, cfg.height, cfg.seed)
        }
        DataSpec::Idx {
            images,
            labels,
            classes,
        } => {
            let images = load_idx_images(images)?;
            let labels = load_idx_labels(labels)?;
            if images.len() != labels.len() {
                return Err(Error::Idx(format!(
                    "{} images vs {} labels",
                    images.len(),
                    labels.len()
                )));
            }
            let mut ds = Dataset {
                provenance: vec![Provenance::Actual; images.len()],
                images,
                labels,
                classes: *classes,
                tau_mass: None,
            };
            let want = cfg.n_train * cfg.folds / (cfg.folds - 1).max(1);
            if ds.len() > want {
                ds = ds.subset(&(0..want).collect::<Vec<_>>());
            }
            ds.validate()?;
            Ok(ds)
        }
    }
}

/// Everything produced by one fold of the experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub seed: u64,
    pub native: Metrics,
    pub improved: Metrics,
    pub virtual_count: usize,
    pub virtual_label_counts: Vec<usize>,
    /// Design export in the `f1,...,fr,kind` CSV layout.
    pub design_csv: String,
    pub gin_traces: Option<GinTraces>,
    pub ccp_objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub folds: Vec<FoldReport>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn mean_native_accuracy(&self) -> f64 {
        self.folds.iter().map(|f| f.native.accuracy).sum::<f64>() / self.folds.len() as f64
    }

    pub fn mean_improved_accuracy(&self) -> f64 {
        self.folds.iter().map(|f| f.improved.accuracy).sum::<f64>() / self.folds.len() as f64
    }

    /// `fold,model,accuracy,sensitivity,specificity` rows, folds 1-based,
    /// followed by an `avg` row per model.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("fold,model,accuracy,sensitivity,specificity\n");
        for f in &self.folds {
            out.push_str(&format!(
                "{},native,{},{},{}\n",
                f.fold + 1,
                f.native.accuracy,
                fmt_opt(f.native.sensitivity),
                fmt_opt(f.native.specificity)
            ));
            out.push_str(&format!(
                "{},improved,{},{},{}\n",
                f.fold + 1,
                f.improved.accuracy,
                fmt_opt(f.improved.sensitivity),
                fmt_opt(f.improved.specificity)
            ));
        }
        out.push_str(&format!("avg,native,{},,\n", self.mean_native_accuracy()));
        out.push_str(&format!("avg,improved,{},,\n", self.mean_improved_accuracy()));
        out
    }
}

/// Artifacts of the synthesis stages of one fold, reusable by the staged CLI.
pub struct FoldModels {
    pub gin: GinModel,
    pub gin_traces: GinTraces,
    pub native: Classifier,
}

pub(crate) fn fold_seed(cfg: &ExperimentConfig, fold: usize) -> u64 {
    cfg.seed.wrapping_add(fold as u64)
}

/// Trains the native classifier for one fold on the augmented train split.
pub fn train_native_for_fold(cfg: &ExperimentConfig, train: &Dataset, fold: usize) -> Result<Classifier> {
    let seed = fold_seed(cfg, fold);
    let aug = apply_augmentation(cfg, train)?;
    let mut ccfg = cfg.native.clone();
    ccfg.seed = seed.wrapping_add(1);
    train_classifier(&aug.images, &aug.labels, cfg.classes_hint(train), &ccfg)
}

impl ExperimentConfig {
    fn classes_hint(&self, data: &Dataset) -> usize {
        data.classes
    }
}

/// Trains the GIN for one fold on the augmented train split.
pub fn train_gin_for_fold(cfg: &ExperimentConfig, train: &Dataset, fold: usize) -> Result<(GinModel, GinTraces)> {
    let seed = fold_seed(cfg, fold);
    let aug = apply_augmentation(cfg, train)?;
    let mut gcfg = cfg.gin.clone();
    gcfg.seed = seed.wrapping_add(2);
    train_gin_r(&aug.images, cfg.r, &gcfg)
}

/// Step 2 of the framework: selects virtual features for one fold.
pub fn select_design(
    cfg: &ExperimentConfig,
    gin: &GinModel,
    native: &Classifier,
    train: &Dataset,
    fold: usize,
) -> Result<SampleDesign> {
    let seed = fold_seed(cfg, fold);
    match cfg.method {
        SelectionMethod::Aisel => {
            let pool = build_pool(gin, native, cfg.pool_size, seed.wrapping_add(3), cfg.balanced_pool)?;
            let anchors = encode(gin, &train.images)?;
            ccp_optimize(&pool, &anchors, cfg.m_virtual, &cfg.ccp, seed.wrapping_add(4))
        }
        SelectionMethod::Random => Ok(random_design(cfg.m_virtual, cfg.r, seed.wrapping_add(4))),
        SelectionMethod::GridTopk => {
            let pool = build_grid_pool(gin, native, cfg.grid_size)?;
            grid_topk_design(&pool, cfg.m_virtual, cfg.grid_size)
        }
        SelectionMethod::None => Ok(SampleDesign {
            movable: Vec::new(),
            fixed: Vec::new(),
            objective_trace: Vec::new(),
            method: Method::Random,
        }),
    }
}

/// Step 3: generates and oracle-labels the virtual dataset for a design.
pub fn label_design(
    cfg: &ExperimentConfig,
    gin: &GinModel,
    design: &SampleDesign,
    classes: usize,
) -> Result<Dataset> {
    if design.movable.is_empty() {
        return Ok(Dataset {
            images: Vec::new(),
            labels: Vec::new(),
            classes,
            provenance: Vec::new(),
            tau_mass: None,
        });
    }
    let images = generate(gin, &design.movable)?;
    let labels = oracle_label(&cfg.oracle, &images)?;
    for &l in &labels {
        if l >= classes {
            return Err(Error::Oracle(format!("oracle label {l} out of range for {classes} classes")));
        }
    }
    Ok(Dataset {
        provenance: vec![Provenance::Virtual; images.len()],
        images,
        labels,
        classes,
        tau_mass: None,
    })
}

/// Retrains the improved classifier on fused actual + virtual data.
pub fn train_improved_for_fold(
    cfg: &ExperimentConfig,
    train: &Dataset,
    virtual_data: &Dataset,
    fold: usize,
) -> Result<Classifier> {
    let seed = fold_seed(cfg, fold);
    let aug = apply_augmentation(cfg, train)?;
    let virtual_part = if cfg.augment_virtual {
        apply_augmentation(cfg, virtual_data)?
    } else {
        virtual_data.clone()
    };
    let fused = fuse(&aug, &virtual_part)?;
    // Virtual labels come only from the oracle; provenance documents it.
    debug_assert!(fused
        .provenance
        .iter()
        .skip(aug.len())
        .all(|&p| p == Provenance::Virtual));
    let mut ccfg = cfg.improved.clone();
    ccfg.seed = seed.wrapping_add(5);
    train_classifier(&fused.images, &fused.labels, fused.classes, &ccfg)
}

/// Full Algorithm-2 run over every fold: native model, GIN, pool, design,
/// oracle labels, improved model, metrics for both on the held-out fold.
pub fn run_aisel(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentReport> {
    cfg.validate()?;
    data.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("experiment dataset".into()));
    }
    let splits = kfold_split(&data.labels, cfg.folds, cfg.seed)?;
    let mut folds = Vec::with_capacity(splits.len());
    for (fold, (train_idx, test_idx)) in splits.iter().enumerate() {
        let train = data.subset(train_idx);
        let test = data.subset(test_idx);

        let native = train_native_for_fold(cfg, &train, fold)?;
        let skip_synthesis = cfg.method == SelectionMethod::None || cfg.m_virtual == 0;
        let (improved, design, virtual_data, gin_traces) = if skip_synthesis {
            (
                native.clone(),
                SampleDesign {
                    movable: Vec::new(),
                    fixed: Vec::new(),
                    objective_trace: Vec::new(),
                    method: Method::Random,
                },
                None,
                None,
            )
        } else {
            let (gin, traces) = train_gin_for_fold(cfg, &train, fold)?;
            let design = select_design(cfg, &gin, &native, &train, fold)?;
            let virtual_data = label_design(cfg, &gin, &design, data.classes)?;
            let improved = train_improved_for_fold(cfg, &train, &virtual_data, fold)?;
            (improved, design, Some(virtual_data), Some(traces))
        };

        let native_metrics = eval_metrics(&native, &test.images, &test.labels)?;
        let improved_metrics = eval_metrics(&improved, &test.images, &test.labels)?;
        let mut virtual_label_counts = vec![0usize; data.classes];
        if let Some(v) = &virtual_data {
            for &l in &v.labels {
                virtual_label_counts[l] += 1;
            }
        }
        folds.push(FoldReport {
            fold,
            seed: fold_seed(cfg, fold),
            native: native_metrics,
            improved: improved_metrics,
            virtual_count: virtual_data.as_ref().map_or(0, |v| v.len()),
            virtual_label_counts,
            design_csv: design.to_csv(),
            gin_traces,
            ccp_objective_trace: design.objective_trace.clone(),
        });
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset(n: usize) -> Dataset {
        synth_blob_dataset(n, 8, 8, 1).unwrap()
    }

    #[test]
    fn rot180_twice_is_identity() {
        let ds = tiny_dataset(4);
        let once = transform_image(&ds.images[0], AugmentOp::Rot180).unwrap();
        let twice = transform_image(&once, AugmentOp::Rot180).unwrap();
        assert_eq!(twice, ds.images[0]);
    }

    #[test]
    fn rot90_four_times_is_identity() {
        let ds = tiny_dataset(4);
        let mut img = ds.images[0].clone();
        for _ in 0..4 {
            img = transform_image(&img, AugmentOp::Rot90).unwrap();
        }
        assert_eq!(img, ds.images[0]);
    }

    #[test]
    fn augment_size_and_histograms() {
        let ds = tiny_dataset(6);
        let ops = [AugmentOp::Rot90, AugmentOp::Hflip];
        let out = augment(&ds, &ops).unwrap();
        assert_eq!(out.len(), ds.len() * (1 + ops.len()));
        // Pixel multiset of each transformed image equals its source's.
        for (i, img) in out.images.iter().enumerate() {
            let src = &ds.images[i % ds.len()];
            let mut a = img.pixels.clone();
            let mut b = src.pixels.clone();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn augment_rejects_rotating_non_square() {
        let img = Image::new(3, 2, vec![0.0; 6]).unwrap();
        let ds = Dataset {
            images: vec![img],
            labels: vec![0],
            classes: 1,
            provenance: vec![Provenance::Actual],
            tau_mass: None,
        };
        assert!(augment(&ds, &[AugmentOp::Rot90]).is_err());
        assert!(augment(&ds, &[AugmentOp::Hflip]).is_ok());
    }

    #[test]
    fn augment_to_factor_exact_size() {
        let ds = tiny_dataset(6);
        for factor in [1usize, 3, 8, 10] {
            let out = augment_to_factor(&ds, factor).unwrap();
            assert_eq!(out.len(), ds.len() * factor);
        }
    }

    #[test]
    fn kfold_appendix_accounting() {
        // 168 examples, 4 folds: every test fold exactly 42.
        let ds = synth_blob_dataset(168, 8, 8, 0).unwrap();
        let splits = kfold_split(&ds.labels, 4, 0).unwrap();
        for (train, test) in &splits {
            assert_eq!(test.len(), 42);
            assert_eq!(train.len(), 126);
        }
    }

    #[test]
    fn kfold_partitions_are_disjoint_and_cover() {
        let ds = tiny_dataset(50);
        let splits = kfold_split(&ds.labels, 4, 3).unwrap();
        let mut seen = vec![0usize; 50];
        for (train, test) in &splits {
            for &i in test {
                seen[i] += 1;
            }
            let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..50).collect::<Vec<_>>());
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn kfold_is_stratified() {
        let ds = tiny_dataset(80);
        let global_ones = ds.labels.iter().filter(|&&l| l == 1).count() as f64 / 80.0;
        let splits = kfold_split(&ds.labels, 4, 9).unwrap();
        for (_, test) in &splits {
            let ones = test.iter().filter(|&&i| ds.labels[i] == 1).count() as f64;
            let expected = global_ones * test.len() as f64;
            assert!((ones - expected).abs() <= 1.0, "{ones} vs {expected}");
        }
    }

    #[test]
    fn fuse_bookkeeping() {
        let a = tiny_dataset(6);
        let empty = Dataset {
            images: vec![],
            labels: vec![],
            classes: 2,
            provenance: vec![],
            tau_mass: None,
        };
        assert_eq!(fuse(&a, &empty).unwrap(), a);
        let mut v = tiny_dataset(4);
        v.provenance = vec![Provenance::Virtual; 4];
        let fused = fuse(&a, &v).unwrap();
        assert_eq!(fused.len(), 10);
        let actual = fused.provenance.iter().filter(|&&p| p == Provenance::Actual).count();
        let virt = fused.provenance.iter().filter(|&&p| p == Provenance::Virtual).count();
        assert_eq!((actual, virt), (6, 4));
    }

    #[test]
    fn fuse_rejects_class_mismatch() {
        let a = tiny_dataset(4);
        let mut b = tiny_dataset(4);
        b.classes = 3;
        assert!(fuse(&a, &b).is_err());
    }

    #[test]
    fn run_aisel_method_none_improved_equals_native() {
        let mut cfg = ExperimentConfig::default();
        cfg.method = SelectionMethod::None;
        cfg.m_virtual = 0;
        cfg.n_train = 30;
        cfg.width = 8;
        cfg.height = 8;
        cfg.native.epochs = 4;
        cfg.improved.epochs = 4;
        cfg.folds = 2;
        let data = load_dataset(&cfg).unwrap();
        let report = run_aisel(&cfg, &data).unwrap();
        for f in &report.folds {
            assert_eq!(f.native, f.improved);
            assert_eq!(f.virtual_count, 0);
        }
        let csv = report.metrics_csv();
        assert!(csv.starts_with("fold,model,accuracy,sensitivity,specificity\n"));
    }

    #[test]
    fn run_aisel_virtual_bookkeeping_random_vs_aisel() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_train = 40;
        cfg.width = 8;
        cfg.height = 8;
        cfg.m_virtual = 7;
        cfg.pool_size = 128;
        cfg.folds = 2;
        cfg.gin.epochs = 3;
        cfg.gin.encoder_epochs = 3;
        cfg.gin.batch_size = 16;
        cfg.native.epochs = 2;
        cfg.improved.epochs = 2;
        cfg.ccp.max_sweeps = 5;
        for method in [SelectionMethod::Random, SelectionMethod::Aisel] {
            cfg.method = method;
            let data = load_dataset(&cfg).unwrap();
            let report = run_aisel(&cfg, &data).unwrap();
            for f in &report.folds {
                assert_eq!(f.virtual_count, 7, "{method:?}");
            }
        }
    }

    #[test]
    fn run_aisel_replay_is_bit_identical() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_train = 40;
        cfg.width = 8;
        cfg.height = 8;
        cfg.m_virtual = 5;
        cfg.pool_size = 128;
        cfg.folds = 2;
        cfg.gin.epochs = 3;
        cfg.gin.encoder_epochs = 3;
        cfg.gin.batch_size = 16;
        cfg.native.epochs = 2;
        cfg.improved.epochs = 2;
        cfg.ccp.max_sweeps = 5;
        let data = load_dataset(&cfg).unwrap();
        let a = run_aisel(&cfg, &data).unwrap();
        let b = run_aisel(&cfg, &data).unwrap();
        assert_eq!(a.metrics_csv(), b.metrics_csv());
        for (fa, fb) in a.folds.iter().zip(&b.folds) {
            assert_eq!(fa.design_csv, fb.design_csv);
        }
    }
}
