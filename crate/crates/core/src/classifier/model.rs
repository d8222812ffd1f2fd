use rand::seq::SliceRandom;

use super::features::{FeatureExtractor, FeatureVector, FEATURE_COUNT};
use super::ClassifierError;
use crate::rng::substream;
use crate::tactile::{ShapeClass, TactileImage};

pub const CLASS_COUNT: usize = ShapeClass::COUNT;
/// Bias plus one weight per feature.
pub const PARAMS: usize = FEATURE_COUNT + 1;

pub type Weights = [[f64; PARAMS]; CLASS_COUNT];

/// Per-feature affine normalisation fitted on the training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

impl Standardizer {
    pub fn identity() -> Self {
        Self { mean: [0.0; FEATURE_COUNT], std: [1.0; FEATURE_COUNT] }
    }

    /// Population statistics; a constant feature keeps unit scale.
    pub fn fit(xs: &[FeatureVector]) -> Self {
        let n = xs.len().max(1) as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        let mut std = [0.0; FEATURE_COUNT];
        for x in xs {
            for j in 0..FEATURE_COUNT {
                mean[j] += x.0[j] / n;
            }
        }
        for x in xs {
            for j in 0..FEATURE_COUNT {
                std[j] += (x.0[j] - mean[j]).powi(2) / n;
            }
        }
        for s in &mut std {
            *s = s.sqrt();
            if !(*s > 1e-12) {
                *s = 1.0;
            }
        }
        Self { mean, std }
    }

    /// Design row: leading 1 for the bias, then standardised features.
    pub fn row(&self, x: &FeatureVector) -> [f64; PARAMS] {
        let mut z = [1.0; PARAMS];
        for j in 0..FEATURE_COUNT {
            z[j + 1] = (x.0[j] - self.mean[j]) / self.std[j];
        }
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 5, batch: 64, learning_rate: 1e-3, seed: 0, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.epochs == 0 || self.batch == 0 {
            return Err(ClassifierError::InvalidConfig("epochs and batch must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(ClassifierError::InvalidConfig(format!("learning rate {}", self.learning_rate)));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.epsilon > 0.0) {
            return Err(ClassifierError::InvalidConfig("moment parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainMeta {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Mean cross-entropy over the training set before the first step.
    pub initial_loss: f64,
    /// Same quantity after each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainMeta {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(self.initial_loss)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: ShapeClass,
    pub probabilities: [f64; CLASS_COUNT],
}

/// Multinomial logistic regression over the ten shape classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    pub weights: Weights,
    pub standardizer: Standardizer,
    pub meta: Option<TrainMeta>,
}

pub fn softmax(scores: &[f64; CLASS_COUNT]) -> [f64; CLASS_COUNT] {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = scores.map(|s| (s - m).exp());
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

fn argmax(p: &[f64; CLASS_COUNT]) -> usize {
    let mut best = 0;
    for k in 1..CLASS_COUNT {
        if p[k] > p[best] {
            best = k;
        }
    }
    best
}

impl SoftmaxModel {
    pub fn zeros(standardizer: Standardizer) -> Self {
        Self { weights: [[0.0; PARAMS]; CLASS_COUNT], standardizer, meta: None }
    }

    pub fn class_names() -> [&'static str; CLASS_COUNT] {
        ShapeClass::ALL.map(|c| c.name())
    }

    pub fn scores_row(&self, z: &[f64; PARAMS]) -> [f64; CLASS_COUNT] {
        core::array::from_fn(|k| self.weights[k].iter().zip(z).map(|(w, x)| w * x).sum())
    }

    pub fn probabilities(&self, x: &FeatureVector) -> [f64; CLASS_COUNT] {
        softmax(&self.scores_row(&self.standardizer.row(x)))
    }

    pub fn predict_features(&self, x: &FeatureVector) -> Prediction {
        let probabilities = self.probabilities(x);
        Prediction { label: ShapeClass::ALL[argmax(&probabilities)], probabilities }
    }

    pub fn predict(&self, extractor: &FeatureExtractor, img: &TactileImage) -> Result<Prediction, ClassifierError> {
        Ok(self.predict_features(&extractor.extract(img)?))
    }

    /// Mean cross-entropy.
    pub fn loss(&self, xs: &[FeatureVector], ys: &[ShapeClass]) -> f64 {
        let rows: Vec<_> = xs.iter().map(|x| self.standardizer.row(x)).collect();
        let idx: Vec<usize> = (0..rows.len()).collect();
        loss_rows(&self.weights, &rows, ys, &idx)
    }

    /// Analytic gradient of the mean cross-entropy over the given samples.
    pub fn gradient(&self, xs: &[FeatureVector], ys: &[ShapeClass]) -> Weights {
        let rows: Vec<_> = xs.iter().map(|x| self.standardizer.row(x)).collect();
        let idx: Vec<usize> = (0..rows.len()).collect();
        gradient_rows(&self.weights, &rows, ys, &idx)
    }

    pub fn accuracy(&self, xs: &[FeatureVector], ys: &[ShapeClass]) -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        let hits = xs.iter().zip(ys).filter(|(x, y)| self.predict_features(x).label == **y).count();
        hits as f64 / xs.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().all(|w| w.is_finite())
    }
}

fn scores(w: &Weights, z: &[f64; PARAMS]) -> [f64; CLASS_COUNT] {
    core::array::from_fn(|k| w[k].iter().zip(z).map(|(a, b)| a * b).sum())
}

fn loss_rows(w: &Weights, rows: &[[f64; PARAMS]], ys: &[ShapeClass], idx: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in idx {
        let s = scores(w, &rows[i]);
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - s[ys[i].index()];
    }
    total / idx.len() as f64
}

fn gradient_rows(w: &Weights, rows: &[[f64; PARAMS]], ys: &[ShapeClass], idx: &[usize]) -> Weights {
    let mut g = [[0.0; PARAMS]; CLASS_COUNT];
    let n = idx.len() as f64;
    for &i in idx {
        let mut p = softmax(&scores(w, &rows[i]));
        p[ys[i].index()] -= 1.0;
        for k in 0..CLASS_COUNT {
            for j in 0..PARAMS {
                g[k][j] += p[k] * rows[i][j] / n;
            }
        }
    }
    g
}

fn check_inputs(xs: &[FeatureVector], ys: &[ShapeClass]) -> Result<(), ClassifierError> {
    if xs.len() != ys.len() {
        return Err(ClassifierError::LengthMismatch { features: xs.len(), labels: ys.len() });
    }
    if xs.is_empty() {
        return Err(ClassifierError::EmptyBatch);
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(ClassifierError::NonFiniteFeature(i));
    }
    Ok(())
}

/// Mini-batch Adam on mean cross-entropy from zero weights. Batches are a
/// fresh seeded permutation every epoch; the last batch may be short.
pub fn train(xs: &[FeatureVector], ys: &[ShapeClass], cfg: &TrainConfig) -> Result<SoftmaxModel, ClassifierError> {
    cfg.validate()?;
    check_inputs(xs, ys)?;
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(ClassifierError::SingleClass(ys[0]));
    }
    let standardizer = Standardizer::fit(xs);
    let rows: Vec<[f64; PARAMS]> = xs.iter().map(|x| standardizer.row(x)).collect();
    let all: Vec<usize> = (0..rows.len()).collect();

    let mut w: Weights = [[0.0; PARAMS]; CLASS_COUNT];
    let mut m: Weights = [[0.0; PARAMS]; CLASS_COUNT];
    let mut v: Weights = [[0.0; PARAMS]; CLASS_COUNT];
    let mut t = 0i32;
    let initial_loss = loss_rows(&w, &rows, ys, &all);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut rng = substream(cfg.seed, "classifier-shuffle");
    let mut order = all.clone();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch) {
            let g = gradient_rows(&w, &rows, ys, batch);
            t += 1;
            let c1 = 1.0 - cfg.beta1.powi(t);
            let c2 = 1.0 - cfg.beta2.powi(t);
            for k in 0..CLASS_COUNT {
                for j in 0..PARAMS {
                    m[k][j] = cfg.beta1 * m[k][j] + (1.0 - cfg.beta1) * g[k][j];
                    v[k][j] = cfg.beta2 * v[k][j] + (1.0 - cfg.beta2) * g[k][j] * g[k][j];
                    w[k][j] -= cfg.learning_rate * (m[k][j] / c1) / ((v[k][j] / c2).sqrt() + cfg.epsilon);
                }
            }
        }
        epoch_losses.push(loss_rows(&w, &rows, ys, &all));
    }
    Ok(SoftmaxModel {
        weights: w,
        standardizer,
        meta: Some(TrainMeta {
            epochs: cfg.epochs,
            batch: cfg.batch,
            learning_rate: cfg.learning_rate,
            seed: cfg.seed,
            initial_loss,
            epoch_losses,
        }),
    })
}

/// Largest relative gap between the analytic gradient and central finite
/// differences over every weight. Gradients below 1e-4 in magnitude are
/// compared on an absolute scale.
pub fn gradient_check(
    model: &SoftmaxModel,
    xs: &[FeatureVector],
    ys: &[ShapeClass],
    step: f64,
) -> Result<f64, ClassifierError> {
    check_inputs(xs, ys)?;
    let rows: Vec<_> = xs.iter().map(|x| model.standardizer.row(x)).collect();
    let idx: Vec<usize> = (0..rows.len()).collect();
    let analytic = gradient_rows(&model.weights, &rows, ys, &idx);
    let mut worst = 0.0f64;
    for k in 0..CLASS_COUNT {
        for j in 0..PARAMS {
            let mut w = model.weights;
            w[k][j] += step;
            let up = loss_rows(&w, &rows, ys, &idx);
            w[k][j] -= 2.0 * step;
            let down = loss_rows(&w, &rows, ys, &idx);
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[k][j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Rows are true classes, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[usize; CLASS_COUNT]; CLASS_COUNT],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ShapeClass, ShapeClass)>) -> Self {
        let mut cm = Self::default();
        for (truth, pred) in pairs {
            cm.counts[truth.index()][pred.index()] += 1;
        }
        cm
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let diag: usize = (0..CLASS_COUNT).map(|k| self.counts[k][k]).sum();
        if self.total() == 0 {
            0.0
        } else {
            diag as f64 / self.total() as f64
        }
    }
}
