use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FusedRecord, FusionError, ImageFrame};
use crate::tactile::save_ppm;

pub const FUSED_HEADER: &str = "t_image_ns,t_force_ns,delta_ns,fz,mx,my,label";

fn label_name(l: Option<crate::tactile::ShapeClass>) -> &'static str {
    l.map(|c| c.name()).unwrap_or("none")
}

pub fn write_fused<W: Write>(mut w: W, records: &[FusedRecord]) -> Result<(), FusionError> {
    writeln!(w, "{FUSED_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{:e},{:e},{:e},{}",
            r.t_image_ns,
            r.t_force_ns,
            r.delta_ns,
            r.wrench.fz,
            r.wrench.mx,
            r.wrench.my,
            label_name(r.label)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageLogRecord {
    pub path: String,
    pub t_ns: u64,
    pub index: usize,
    pub label: String,
    pub truth: String,
    pub completed_ns: u64,
}

/// Writes `images/frame_NNNNN.ppm` under `dir` plus `images.csv`.
pub fn write_image_log(dir: &Path, frames: &[ImageFrame]) -> Result<(), FusionError> {
    let img_dir = dir.join("images");
    fs::create_dir_all(&img_dir)?;
    let mut wr = csv::Writer::from_path(dir.join("images.csv"))?;
    for f in frames {
        let rel = format!("images/frame_{:05}.ppm", f.index);
        save_ppm(&dir.join(&rel), &f.image)?;
        wr.serialize(ImageLogRecord {
            path: rel,
            t_ns: f.timestamp_ns,
            index: f.index,
            label: label_name(f.label).into(),
            truth: label_name(f.truth).into(),
            completed_ns: f.completed_ns,
        })?;
    }
    wr.flush()?;
    Ok(())
}
