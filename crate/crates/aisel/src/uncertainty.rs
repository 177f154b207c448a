//! Classifier training and the entropy-based uncertainty measure over the
//! latent box, discretized as a weighted Monte-Carlo pool. The balanced
//! variant equalizes per-class weight mass.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gin::{generate, images_to_matrix, sample_uniform_features, FeatureVector, GinModel, Image};
use crate::nn::{
    init_network, loss_cross_entropy, step, Activation, LayerSpec, Matrix, Network, OptKind,
    OptimizerState,
};
use crate::{Error, Result};

/// Softmax classifier over flattened images.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub net: Network,
    pub classes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub epochs: usize,
    /// Initial learning rate, halved every `halve_every` epochs.
    pub learning_rate: f64,
    pub halve_every: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub optimizer: OptKind,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            epochs: 80,
            learning_rate: 1e-4,
            halve_every: 20,
            batch_size: 32,
            hidden: vec![64, 32],
            seed: 0,
            optimizer: OptKind::Adam,
        }
    }
}

/// Cross-entropy training with the stepped learning-rate decay.
/// Warns (and proceeds) when a class has no examples; errors on empty data.
pub fn train_classifier(
    images: &[Image],
    labels: &[usize],
    classes: usize,
    cfg: &ClassifierConfig,
) -> Result<Classifier> {
    if images.is_empty() {
        return Err(Error::Empty("classifier training data".into()));
    }
    if images.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} images vs {} labels",
            images.len(),
            labels.len()
        )));
    }
    for &l in labels {
        if l >= classes {
            return Err(Error::LabelOutOfRange { label: l, classes });
        }
    }
    for c in 0..classes {
        if !labels.contains(&c) {
            eprintln!("warning: class {c} absent from classifier training data");
        }
    }
    let npix = images[0].len();
    let mut specs = Vec::new();
    let mut prev = npix;
    for &h in &cfg.hidden {
        specs.push(LayerSpec::new(prev, h, Activation::Relu));
        prev = h;
    }
    specs.push(LayerSpec::new(prev, classes, Activation::Softmax));
    let mut net = init_network(&specs, cfg.seed)?;
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rate, &net);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0xc1a55));
    let all = images_to_matrix(images, npix)?;

    let mut order: Vec<usize> = (0..images.len()).collect();
    for epoch in 0..cfg.epochs {
        opt.learning_rate = cfg.learning_rate * 0.5f64.powi((epoch / cfg.halve_every.max(1)) as i32);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut data = Vec::with_capacity(chunk.len() * npix);
            let mut batch_labels = Vec::with_capacity(chunk.len());
            for &i in chunk {
                data.extend_from_slice(all.row(i));
                batch_labels.push(labels[i]);
            }
            let batch = Matrix::from_vec(chunk.len(), npix, data)?;
            let (probs, cache) = net.forward(&batch)?;
            let (loss, grad) = loss_cross_entropy(&probs, &batch_labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("classifier loss at epoch {epoch}")));
            }
            let (grads, _) = net.backward(&cache, &grad)?;
            step(&mut net, &grads, &mut opt)?;
        }
        if !net.params_finite() {
            return Err(Error::NonFinite(format!("classifier parameters at epoch {epoch}")));
        }
    }
    Ok(Classifier { net, classes })
}

/// Class probabilities for a batch of images.
pub fn classify(clf: &Classifier, images: &[Image]) -> Result<Matrix> {
    let npix = clf.net.in_dim();
    let batch = images_to_matrix(images, npix)?;
    clf.net.forward_only(&batch)
}

/// Argmax predictions, ties broken toward the lower class index.
pub fn predict(clf: &Classifier, images: &[Image]) -> Result<Vec<usize>> {
    let probs = classify(clf, images)?;
    Ok((0..probs.rows()).map(|i| argmax_row(probs.row(i))).collect())
}

pub(crate) fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy of a probability vector, natural log, with 0 ln 0 := 0.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &p in probs {
        if p < 0.0 {
            return Err(Error::NotSimplex(format!("negative entry {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotSimplex(format!("entries sum to {sum}")));
    }
    Ok(probs
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum())
}

/// Monte-Carlo discretization of the uncertainty measure over the latent box.
#[derive(Debug, Clone)]
pub struct UncertaintyPool {
    pub features: Vec<FeatureVector>,
    pub entropies: Vec<f64>,
    /// Self-normalized weights, summing to one.
    pub weights: Vec<f64>,
    pub predicted_class: Vec<usize>,
    pub balanced: bool,
    /// Set when the total entropy was zero and weights fell back to uniform.
    pub uniform_fallback: bool,
}

impl UncertaintyPool {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn r(&self) -> usize {
        self.features.first().map_or(0, |f| f.dim())
    }

    /// Weighted resampling with replacement (for energy-distance
    /// diagnostics against the discretized measure).
    pub fn resample(&self, count: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cdf = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for &w in &self.weights {
            acc += w;
            cdf.push(acc);
        }
        (0..count)
            .map(|_| {
                let u: f64 = rng.gen_range(0.0..1.0);
                let idx = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                self.features[idx].clone()
            })
            .collect()
    }

    /// CSV export: header `f1,...,fr,entropy,weight,pred_class`.
    pub fn to_csv(&self) -> String {
        let r = self.r();
        let mut out = String::new();
        for i in 1..=r {
            out.push_str(&format!("f{i},"));
        }
        out.push_str("entropy,weight,pred_class\n");
        for j in 0..self.len() {
            for c in &self.features[j].coords {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!(
                "{},{},{}\n",
                self.entropies[j], self.weights[j], self.predicted_class[j]
            ));
        }
        out
    }
}

/// Builds the pool from `n` uniform latent draws: h_j = entropy(C(G(f_j))),
/// weights w_j = h_j / sum h (unbalanced) or w_j proportional to h_j / S_c
/// with S_c the per-class entropy mass (balanced). Falls back to uniform
/// weights when total entropy is zero.
pub fn build_pool(
    gin: &GinModel,
    clf: &Classifier,
    n: usize,
    seed: u64,
    balanced: bool,
) -> Result<UncertaintyPool> {
    if n < 100 {
        return Err(Error::InvalidArgument(format!("pool size {n} < 100")));
    }
    let features = sample_uniform_features(n, gin.r, seed);
    let images = generate(gin, &features)?;
    let probs = classify(clf, &images)?;
    let mut entropies = Vec::with_capacity(n);
    let mut predicted_class = Vec::with_capacity(n);
    for i in 0..n {
        let row = probs.row(i);
        entropies.push(entropy(row)?);
        predicted_class.push(argmax_row(row));
    }
    let total: f64 = entropies.iter().sum();
    let mut uniform_fallback = false;
    let weights = if total <= 0.0 {
        uniform_fallback = true;
        vec![1.0 / n as f64; n]
    } else if balanced {
        let mut class_mass = vec![0.0; clf.classes];
        for (h, &c) in entropies.iter().zip(&predicted_class) {
            class_mass[c] += h;
        }
        let mut raw: Vec<f64> = entropies
            .iter()
            .zip(&predicted_class)
            .map(|(h, &c)| if class_mass[c] > 0.0 { h / class_mass[c] } else { 0.0 })
            .collect();
        let raw_sum: f64 = raw.iter().sum();
        for w in &mut raw {
            *w /= raw_sum;
        }
        raw
    } else {
        entropies.iter().map(|h| h / total).collect()
    };
    Ok(UncertaintyPool {
        features,
        entropies,
        weights,
        predicted_class,
        balanced,
        uniform_fallback,
    })
}

/// Builds a pool whose atoms are a lexicographic grid over the latent box
/// (`grid_size` points per axis), for the grid-top-k baseline and entropy
/// heatmap exports. Weights are self-normalized exactly as in `build_pool`.
pub fn build_grid_pool(
    gin: &GinModel,
    clf: &Classifier,
    grid_size: usize,
) -> Result<UncertaintyPool> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid_size must be >= 2".into()));
    }
    let cells = (grid_size as u128).checked_pow(gin.r as u32);
    match cells {
        Some(c) if c <= 4_000_000 => {}
        _ => return Err(Error::SearchSpaceOverflow(cells.unwrap_or(u128::MAX))),
    }
    let features = crate::sampler::grid_features(gin.r, grid_size);
    let mut entropies = Vec::with_capacity(features.len());
    let mut predicted_class = Vec::with_capacity(features.len());
    // Chunked evaluation keeps peak memory flat on large grids.
    for chunk in features.chunks(1024) {
        let images = generate(gin, chunk)?;
        let probs = classify(clf, &images)?;
        for i in 0..probs.rows() {
            let row = probs.row(i);
            entropies.push(entropy(row)?);
            predicted_class.push(argmax_row(row));
        }
    }
    let total: f64 = entropies.iter().sum();
    let n = features.len();
    let uniform_fallback = total <= 0.0;
    let weights = if uniform_fallback {
        vec![1.0 / n as f64; n]
    } else {
        entropies.iter().map(|h| h / total).collect()
    };
    Ok(UncertaintyPool {
        features,
        entropies,
        weights,
        predicted_class,
        balanced: false,
        uniform_fallback,
    })
}

/// Accuracy, and for binary tasks sensitivity/specificity (class 1 positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// confusion[actual][predicted]
    pub confusion: Vec<Vec<usize>>,
}

pub fn eval_metrics(clf: &Classifier, images: &[Image], labels: &[usize]) -> Result<Metrics> {
    if images.is_empty() {
        return Err(Error::Empty("test set".into()));
    }
    if images.len() != labels.len() {
        return Err(Error::ShapeMismatch("test images vs labels".into()));
    }
    let preds = predict(clf, images)?;
    let k = clf.classes;
    let mut confusion = vec![vec![0usize; k]; k];
    for (&y, &p) in labels.iter().zip(&preds) {
        if y >= k {
            return Err(Error::LabelOutOfRange { label: y, classes: k });
        }
        confusion[y][p] += 1;
    }
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let accuracy = correct as f64 / labels.len() as f64;
    let (sensitivity, specificity) = if k == 2 {
        let tp = confusion[1][1] as f64;
        let fn_ = confusion[1][0] as f64;
        let tn = confusion[0][0] as f64;
        let fp = confusion[0][1] as f64;
        let sens = if tp + fn_ > 0.0 { Some(tp / (tp + fn_)) } else { None };
        let spec = if tn + fp > 0.0 { Some(tn / (tn + fp)) } else { None };
        (sens, spec)
    } else {
        (None, None)
    };
    Ok(Metrics {
        accuracy,
        sensitivity,
        specificity,
        confusion,
    })
}
