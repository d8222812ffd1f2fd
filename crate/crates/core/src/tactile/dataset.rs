use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{shade, stamp_heightmap, Grid, LightRig, Pose, ShapeClass, StampOptions, TactileError, TactileImage};
use crate::rng::{indexed_substream, substream};

/// Parameters of the synthetic contact set. Poses are drawn per image from
/// its own substream so any sample can be regenerated from (seed, index).
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub grid: Grid,
    pub per_class: usize,
    pub seed: u64,
    pub stamp: StampOptions,
    pub rig: LightRig,
    pub noise_sigma: f64,
    /// Maximum centre offset in pixels along each axis.
    pub center_jitter: f64,
    /// Bounding radius in pixels before the relative spread is applied.
    pub base_scale: f64,
    pub scale_spread: f64,
    /// Indentation depth range in metres.
    pub depth_range: (f64, f64),
}

impl DatasetConfig {
    pub fn new(per_class: usize, seed: u64, grid: Grid) -> Self {
        Self {
            grid,
            per_class,
            seed,
            stamp: StampOptions::default(),
            rig: LightRig::default(),
            noise_sigma: 0.01,
            center_jitter: grid.width.min(grid.height) as f64 / 15.0,
            base_scale: 0.25 * grid.width.min(grid.height) as f64,
            scale_spread: 0.2,
            depth_range: (2e-4, 4e-4),
        }
    }

    pub fn validate(&self) -> Result<(), TactileError> {
        Grid::new(self.grid.width, self.grid.height)?;
        self.rig.validate()?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(TactileError::InvalidNoise(self.noise_sigma));
        }
        let (lo, hi) = self.depth_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(TactileError::InvalidDepth(lo));
        }
        if !(self.base_scale > 0.0 && (0.0..1.0).contains(&self.scale_spread) && self.center_jitter >= 0.0) {
            return Err(TactileError::InvalidStamp("pose ranges".into()));
        }
        // The largest pose has to fit wherever its centre lands.
        let margin = self.base_scale * (1.0 + self.scale_spread) + 3.0 * self.stamp.smoothing_radius + self.center_jitter;
        if 2.0 * margin > self.grid.width.min(self.grid.height) as f64 {
            return Err(TactileError::InvalidStamp(format!(
                "pose ranges need {:.1} px but the grid is {}x{}",
                2.0 * margin,
                self.grid.width,
                self.grid.height
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.per_class * ShapeClass::COUNT
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Class of the sample at `index`; samples are laid out class-major.
    pub fn label_of(&self, index: usize) -> ShapeClass {
        ShapeClass::ALL[index / self.per_class.max(1)]
    }

    pub fn sample(&self, index: usize) -> Result<Sample, TactileError> {
        if index >= self.len() {
            return Err(TactileError::InvalidStamp(format!("index {index} out of range")));
        }
        let label = self.label_of(index);
        let mut rng = indexed_substream(self.seed, "tactile-sample", index as u64);
        let cx = self.grid.width as f64 / 2.0 + rng.random_range(-1.0..=1.0) * self.center_jitter;
        let cy = self.grid.height as f64 / 2.0 + rng.random_range(-1.0..=1.0) * self.center_jitter;
        let rotation = rng.random_range(0.0..std::f64::consts::TAU);
        let scale = self.base_scale * (1.0 + rng.random_range(-1.0..=1.0) * self.scale_spread);
        let (lo, hi) = self.depth_range;
        let depth = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let pose = Pose::new(cx, cy, rotation, scale);
        let map = stamp_heightmap(label, &pose, depth, self.grid, &self.stamp)?;
        let mut image = shade(&map, &self.rig)?;
        image.add_noise(self.noise_sigma, &mut rng)?;
        Ok(Sample { image, label, index, seed: self.seed, pose, depth })
    }

    pub fn generate(&self) -> Result<Vec<Sample>, TactileError> {
        self.validate()?;
        (0..self.len()).into_par_iter().map(|i| self.sample(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: TactileImage,
    pub label: ShapeClass,
    pub index: usize,
    pub seed: u64,
    pub pose: Pose,
    pub depth: f64,
}

pub fn generate_dataset(per_class: usize, seed: u64, grid: Grid) -> Result<Vec<Sample>, TactileError> {
    DatasetConfig::new(per_class, seed, grid).generate()
}

/// Stratified split into train and validation index sets. Per-class train
/// counts are floor or ceil of `ratio * n_c`, with the extra rows handed out
/// by largest remainder so the total is `floor(ratio * n)`.
pub fn split_indices(labels: &[ShapeClass], ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), TactileError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(TactileError::InvalidRatio(ratio));
    }
    let mut groups: BTreeMap<ShapeClass, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    if let Some((&label, g)) = groups.iter().find(|(_, g)| g.len() < 2) {
        return Err(TactileError::ClassTooSmall { label, count: g.len() });
    }
    let total = (ratio * labels.len() as f64 + 1e-9).floor() as usize;
    let mut quota: Vec<(ShapeClass, usize, f64)> = groups
        .iter()
        .map(|(&l, g)| {
            let exact = ratio * g.len() as f64;
            let base = (exact + 1e-9).floor();
            (l, base as usize, exact - base)
        })
        .collect();
    let assigned: usize = quota.iter().map(|q| q.1).sum();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| quota[b].2.total_cmp(&quota[a].2).then(a.cmp(&b)));
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        quota[k].1 += 1;
    }

    let mut rng = substream(seed, "tactile-split");
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (label, n_train, _) in quota {
        let mut g = groups[&label].clone();
        g.shuffle(&mut rng);
        train.extend_from_slice(&g[..n_train]);
        val.extend_from_slice(&g[n_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

pub fn split_dataset(samples: &[Sample], ratio: f64, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>), TactileError> {
    let labels: Vec<ShapeClass> = samples.iter().map(|s| s.label).collect();
    let (tr, va) = split_indices(&labels, ratio, seed)?;
    Ok((tr.iter().map(|&i| samples[i].clone()).collect(), va.iter().map(|&i| samples[i].clone()).collect()))
}
