//! Generative invertible network: generator `F -> X`, critic `X -> R`,
//! encoder `X -> F`. Stage one trains generator and critic adversarially on
//! the Wasserstein dual surrogate with weight clipping; stage two freezes the
//! generator and fits the encoder by MSE on freshly generated pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{
    init_network, loss_mse, step, Activation, LayerSpec, Matrix, Network, OptKind,
    OptimizerState,
};
use crate::{Error, Result};

/// Fixed-size grayscale raster with pixels in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        if !pixels.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("pixel outside [0,1]".into()));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Point in the latent box `[-1,1]^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub coords: Vec<f64>,
}

impl FeatureVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if !coords.iter().all(|c| c.is_finite() && (-1.0..=1.0).contains(c)) {
            return Err(Error::InvalidArgument("feature coordinate outside [-1,1]".into()));
        }
        Ok(FeatureVector { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinModel {
    pub generator: Network,
    pub discriminator: Network,
    pub encoder: Network,
    pub r: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Stage-one learning rate for generator and critic.
    pub learning_rate: f64,
    /// Critic weight-clip bound.
    pub clip_beta: f64,
    /// Critic inner steps per generator update.
    pub n_d: usize,
    pub batch_size: usize,
    /// Stage-one epochs (one generator update + n_d critic updates each).
    pub epochs: usize,
    pub encoder_epochs: usize,
    pub encoder_learning_rate: f64,
    pub seed: u64,
    /// Swap the written update order (critic inner loop before generator).
    pub critic_first: bool,
    pub generator_optimizer: OptKind,
    pub encoder_optimizer: OptKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            clip_beta: 0.01,
            n_d: 5,
            batch_size: 64,
            epochs: 2000,
            encoder_epochs: 1000,
            encoder_learning_rate: 1e-3,
            seed: 0,
            critic_first: false,
            generator_optimizer: OptKind::Adam,
            encoder_optimizer: OptKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || self.encoder_learning_rate <= 0.0 {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if self.clip_beta <= 0.0 {
            return Err(Error::InvalidArgument("clip bound must be positive".into()));
        }
        if self.n_d < 1 {
            return Err(Error::InvalidArgument("n_d must be >= 1".into()));
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::InvalidArgument("epochs and batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch loss traces recorded during training.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GinTraces {
    pub generator_loss: Vec<f64>,
    pub critic_loss: Vec<f64>,
    /// Mean critic score on real minus fake, per epoch.
    pub critic_gap: Vec<f64>,
    pub encoder_loss: Vec<f64>,
}

/// Desk-scale architecture: generator r -> 64 -> 128 -> n1*n2 (tanh),
/// critic n1*n2 -> 128 -> 64 -> 1 (identity), encoder mirror of the critic
/// with a tanh head of width r.
pub fn init_gin(r: usize, width: usize, height: usize, seed: u64) -> Result<GinModel> {
    if r == 0 || width == 0 || height == 0 {
        return Err(Error::InvalidArgument("gin dimensions must be >= 1".into()));
    }
    let npix = width * height;
    let generator = init_network(
        &[
            LayerSpec::new(r, 64, Activation::Relu),
            LayerSpec::new(64, 128, Activation::Relu),
            LayerSpec::new(128, npix, Activation::Tanh),
        ],
        seed,
    )?;
    let discriminator = init_network(
        &[
            LayerSpec::new(npix, 128, Activation::Relu),
            LayerSpec::new(128, 64, Activation::Relu),
            LayerSpec::new(64, 1, Activation::Identity),
        ],
        seed.wrapping_add(1),
    )?;
    let encoder = init_network(
        &[
            LayerSpec::new(npix, 128, Activation::LeakyRelu),
            LayerSpec::new(128, 64, Activation::LeakyRelu),
            LayerSpec::new(64, r, Activation::Tanh),
        ],
        seed.wrapping_add(2),
    )?;
    Ok(GinModel {
        generator,
        discriminator,
        encoder,
        r,
        width,
        height,
    })
}

/// I.i.d. uniform draws on `[-1,1]^r`, deterministic per seed.
pub fn sample_uniform_features(count: usize, r: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| FeatureVector {
            coords: (0..r).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        })
        .collect()
}

pub(crate) fn features_to_matrix(features: &[FeatureVector], r: usize) -> Result<Matrix> {
    if features.is_empty() {
        return Err(Error::Empty("feature batch".into()));
    }
    let mut data = Vec::with_capacity(features.len() * r);
    for f in features {
        if f.dim() != r {
            return Err(Error::ShapeMismatch(format!(
                "feature dim {} vs expected {r}",
                f.dim()
            )));
        }
        data.extend_from_slice(&f.coords);
    }
    Matrix::from_vec(features.len(), r, data)
}

pub(crate) fn images_to_matrix(images: &[Image], npix: usize) -> Result<Matrix> {
    if images.is_empty() {
        return Err(Error::Empty("image batch".into()));
    }
    let mut data = Vec::with_capacity(images.len() * npix);
    for img in images {
        if img.len() != npix {
            return Err(Error::ShapeMismatch(format!(
                "image has {} pixels, expected {npix}",
                img.len()
            )));
        }
        data.extend_from_slice(&img.pixels);
    }
    Matrix::from_vec(images.len(), npix, data)
}

/// Maps a tanh output row matrix into images via (t+1)/2.
fn tanh_rows_to_images(out: &Matrix, width: usize, height: usize) -> Vec<Image> {
    (0..out.rows())
        .map(|i| Image {
            width,
            height,
            pixels: out.row(i).iter().map(|t| (t + 1.0) / 2.0).collect(),
        })
        .collect()
}

/// Generates images from features; pixels land in [0,1] via (tanh+1)/2.
pub fn generate(model: &GinModel, features: &[FeatureVector]) -> Result<Vec<Image>> {
    let batch = features_to_matrix(features, model.r)?;
    let out = model.generator.forward_only(&batch)?;
    Ok(tanh_rows_to_images(&out, model.width, model.height))
}

/// Encodes images into the latent box (tanh head keeps the range).
pub fn encode(model: &GinModel, images: &[Image]) -> Result<Vec<FeatureVector>> {
    let batch = images_to_matrix(images, model.width * model.height)?;
    let out = model.encoder.forward_only(&batch)?;
    Ok((0..out.rows())
        .map(|i| FeatureVector {
            coords: out.row(i).to_vec(),
        })
        .collect())
}

/// Mean over images of the per-pixel squared reconstruction error
/// `||G(E(X)) - X||^2` (summed over pixels, averaged over images).
pub fn reconstruction_mse(model: &GinModel, images: &[Image]) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::Empty("reconstruction_mse".into()));
    }
    let recon = generate(model, &encode(model, images)?)?;
    let mut total = 0.0;
    for (img, rec) in images.iter().zip(&recon) {
        total += img
            .pixels
            .iter()
            .zip(&rec.pixels)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / images.len() as f64)
}

/// Diagnostic surrogate for the Wasserstein gap: mean critic score on the
/// real images minus the mean score on `probe_count` freshly generated ones.
pub fn critic_gap(model: &GinModel, images: &[Image], probe_count: usize, seed: u64) -> Result<f64> {
    if probe_count < 1 {
        return Err(Error::InvalidArgument("probe_count must be >= 1".into()));
    }
    if images.is_empty() {
        return Err(Error::Empty("critic_gap".into()));
    }
    let npix = model.width * model.height;
    let real = images_to_matrix(images, npix)?;
    let real_scores = model.discriminator.forward_only(&real)?;
    let fake_imgs = generate(model, &sample_uniform_features(probe_count, model.r, seed))?;
    let fake = images_to_matrix(&fake_imgs, npix)?;
    let fake_scores = model.discriminator.forward_only(&fake)?;
    let mean = |m: &Matrix| m.data().iter().sum::<f64>() / m.rows() as f64;
    Ok(mean(&real_scores) - mean(&fake_scores))
}

struct EpochContext<'a> {
    real: &'a Matrix,
    cfg: &'a TrainConfig,
}

fn sample_real_batch(real: &Matrix, batch: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut data = Vec::with_capacity(batch * real.cols());
    for _ in 0..batch {
        let i = rng.gen_range(0..real.rows());
        data.extend_from_slice(real.row(i));
    }
    Matrix::from_vec(batch, real.cols(), data).expect("batch shape")
}

fn uniform_feature_batch(batch: usize, r: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..batch * r).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Matrix::from_vec(batch, r, data).expect("batch shape")
}

/// One generator update: L_G = -sum_i D(G(f'_i)) on a fresh feature batch.
fn generator_update(
    model: &mut GinModel,
    opt: &mut OptimizerState,
    ctx: &EpochContext,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let feats = uniform_feature_batch(ctx.cfg.batch_size, model.r, rng);
    let (tanh_out, gen_cache) = model.generator.forward(&feats)?;
    let mut images = tanh_out.clone();
    for v in images.data_mut() {
        *v = (*v + 1.0) / 2.0;
    }
    let (scores, disc_cache) = model.discriminator.forward(&images)?;
    let loss: f64 = -scores.data().iter().sum::<f64>();
    if !loss.is_finite() {
        return Err(Error::NonFinite("generator loss".into()));
    }
    // dL_G/dD_out = -1 per row.
    let mut score_grad = Matrix::zeros(scores.rows(), 1);
    for v in score_grad.data_mut() {
        *v = -1.0;
    }
    let (_, image_grad) = model.discriminator.backward(&disc_cache, &score_grad)?;
    // Chain through the (t+1)/2 output map.
    let mut tanh_grad = image_grad;
    for v in tanh_grad.data_mut() {
        *v *= 0.5;
    }
    let (gen_grads, _) = model.generator.backward(&gen_cache, &tanh_grad)?;
    step(&mut model.generator, &gen_grads, opt)?;
    Ok(loss)
}

/// n_d critic ascent steps on L_D = sum D(X) - sum D(G(f')), clipping after
/// each. Returns (last L_D, last mean-gap).
fn critic_updates(
    model: &mut GinModel,
    opt: &mut OptimizerState,
    ctx: &EpochContext,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let m = ctx.cfg.batch_size;
    let mut last = (0.0, 0.0);
    for _ in 0..ctx.cfg.n_d {
        let real = sample_real_batch(ctx.real, m, rng);
        let feats = uniform_feature_batch(m, model.r, rng);
        let fake_tanh = model.generator.forward_only(&feats)?;
        let mut fake = fake_tanh;
        for v in fake.data_mut() {
            *v = (*v + 1.0) / 2.0;
        }
        // One forward over [real; fake] keeps the reduction order fixed.
        let mut joint = Vec::with_capacity(2 * m * real.cols());
        joint.extend_from_slice(real.data());
        joint.extend_from_slice(fake.data());
        let joint = Matrix::from_vec(2 * m, real.cols(), joint)?;
        let (scores, cache) = model.discriminator.forward(&joint)?;
        let real_sum: f64 = scores.data()[..m].iter().sum();
        let fake_sum: f64 = scores.data()[m..].iter().sum();
        let l_d = real_sum - fake_sum;
        if !l_d.is_finite() {
            return Err(Error::NonFinite("critic loss".into()));
        }
        // Descend -L_D: grad -1 on real rows, +1 on fake rows.
        let mut score_grad = Matrix::zeros(2 * m, 1);
        for i in 0..m {
            score_grad.set(i, 0, -1.0);
            score_grad.set(m + i, 0, 1.0);
        }
        let (grads, _) = model.discriminator.backward(&cache, &score_grad)?;
        step(&mut model.discriminator, &grads, opt)?;
        model.discriminator.clip_params(ctx.cfg.clip_beta)?;
        debug_assert!(model.discriminator.max_abs_param() <= ctx.cfg.clip_beta);
        last = (l_d, (real_sum - fake_sum) / m as f64);
    }
    Ok(last)
}

/// Trains a GIN on the corpus: adversarial stage one in the written order
/// (generator first unless `critic_first`), then the decoupled encoder stage
/// on generated pairs only.
pub fn train_gin(images: &[Image], cfg: &TrainConfig) -> Result<(GinModel, GinTraces)> {
    train_gin_with_dims(images, cfg, None)
}

/// Like `train_gin` but with an explicit latent dimension r (defaults to 2).
pub fn train_gin_r(images: &[Image], r: usize, cfg: &TrainConfig) -> Result<(GinModel, GinTraces)> {
    train_gin_with_dims(images, cfg, Some(r))
}

fn train_gin_with_dims(images: &[Image], cfg: &TrainConfig, r: Option<usize>) -> Result<(GinModel, GinTraces)> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::Empty("training corpus".into()));
    }
    if images.len() < 2 * cfg.batch_size {
        return Err(Error::InvalidArgument(format!(
            "corpus of {} images is smaller than 2 x batch_size = {}",
            images.len(),
            2 * cfg.batch_size
        )));
    }
    let r = r.unwrap_or(2);
    let (width, height) = (images[0].width, images[0].height);
    let npix = width * height;
    let real = images_to_matrix(images, npix)?;

    let mut model = init_gin(r, width, height, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut gen_opt = OptimizerState::new(cfg.generator_optimizer, cfg.learning_rate, &model.generator);
    // Clipping interacts poorly with adaptive moments, so the critic is sgd.
    let mut disc_opt = OptimizerState::new(OptKind::Sgd, cfg.learning_rate, &model.discriminator);
    let mut traces = GinTraces::default();

    let ctx = EpochContext { real: &real, cfg };
    for epoch in 0..cfg.epochs {
        let (lg, (ld, gap)) = if cfg.critic_first {
            let c = critic_updates(&mut model, &mut disc_opt, &ctx, &mut rng)?;
            let g = generator_update(&mut model, &mut gen_opt, &ctx, &mut rng)?;
            (g, c)
        } else {
            let g = generator_update(&mut model, &mut gen_opt, &ctx, &mut rng)?;
            let c = critic_updates(&mut model, &mut disc_opt, &ctx, &mut rng)?;
            (g, c)
        };
        traces.generator_loss.push(lg);
        traces.critic_loss.push(ld);
        traces.critic_gap.push(gap);
        if !model.generator.params_finite() || !model.discriminator.params_finite() {
            return Err(Error::NonFinite(format!("gin parameters at epoch {epoch}")));
        }
    }

    // Stage two: encoder on freshly generated (G(f'), f') pairs, G frozen.
    let mut enc_opt = OptimizerState::new(cfg.encoder_optimizer, cfg.encoder_learning_rate, &model.encoder);
    for epoch in 0..cfg.encoder_epochs {
        let feats = uniform_feature_batch(cfg.batch_size, r, &mut rng);
        let fake_tanh = model.generator.forward_only(&feats)?;
        let mut fake = fake_tanh;
        for v in fake.data_mut() {
            *v = (*v + 1.0) / 2.0;
        }
        let (pred, cache) = model.encoder.forward(&fake)?;
        let (loss, grad) = loss_mse(&pred, &feats)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("encoder loss at epoch {epoch}")));
        }
        let (grads, _) = model.encoder.backward(&cache, &grad)?;
        step(&mut model.encoder, &grads, &mut enc_opt)?;
        traces.encoder_loss.push(loss);
        if !model.encoder.params_finite() {
            return Err(Error::NonFinite(format!("encoder parameters at epoch {epoch}")));
        }
    }

    Ok((model, traces))
}

/// Held-out inversion diagnostic: E||E(G(u)) - u||^2 over `count` fresh
/// uniform features (squared norm summed over coordinates, averaged).
pub fn encoder_inversion_mse(model: &GinModel, count: usize, seed: u64) -> Result<f64> {
    let feats = sample_uniform_features(count, model.r, seed);
    let images = generate(model, &feats)?;
    let encoded = encode(model, &images)?;
    let mut total = 0.0;
    for (f, e) in feats.iter().zip(&encoded) {
        total += f
            .coords
            .iter()
            .zip(&e.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / count as f64)
}
