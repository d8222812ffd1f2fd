//! Synthetic vision-based tactile images: shape stamps pressed into an
//! elastomer, shaded under a three-colour light rig.

mod dataset;
mod io;
mod render;
mod shape;

pub use dataset::{generate_dataset, split_dataset, split_indices, DatasetConfig, Sample};
pub use io::{
    load_dataset, load_ppm, read_manifest, read_ppm, save_dataset, save_ppm, write_manifest, write_ppm, ManifestRecord,
    MANIFEST_FILE,
};
pub use render::{
    gaussian_blur, photometric_normal, shade, stamp_heightmap, Grid, HeightMap, Light, LightRig, Pose, StampOptions,
    TactileImage,
};
pub use shape::{ShapeClass, UnknownShape};

#[derive(Debug, thiserror::Error)]
pub enum TactileError {
    #[error("grid {width}x{height} is smaller than the 16x16 minimum")]
    InvalidGrid { width: usize, height: usize },
    #[error("indentation depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("invalid stamp parameters: {0}")]
    InvalidStamp(String),
    #[error("shape at ({:.1}, {:.1}) with footprint radius {margin:.1} px leaves the {width}x{height} frame", pose.center_x, pose.center_y)]
    ShapeOutOfFrame { pose: Pose, margin: f64, width: usize, height: usize },
    #[error("invalid light rig: {0}")]
    InvalidRig(String),
    #[error("noise sigma must be non-negative and finite, got {0}")]
    InvalidNoise(f64),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("class {label} has {count} sample(s); a stratified split needs at least 2")]
    ClassTooSmall { label: ShapeClass, count: usize },
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("ppm: {0}")]
    Ppm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
