use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Grid, Sample, ShapeClass, TactileError, TactileImage};

/// Binary PPM (P6), 8 bits per channel.
pub fn write_ppm<W: Write>(mut w: W, img: &TactileImage) -> Result<(), TactileError> {
    write!(w, "P6\n{} {}\n255\n", img.width, img.height)?;
    let mut buf = Vec::with_capacity(img.pixels.len() * 3);
    for px in &img.pixels {
        for &c in px {
            buf.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_ppm<R: Read>(r: R) -> Result<TactileImage, TactileError> {
    let mut r = BufReader::new(r);
    let mut tokens = Vec::new();
    // Header: magic, width, height, maxval, each separated by whitespace, with
    // `#` comments running to end of line. A single whitespace byte ends it.
    let mut cur = Vec::new();
    let mut in_comment = false;
    while tokens.len() < 4 {
        let mut b = [0u8; 1];
        if r.read(&mut b)? == 0 {
            return Err(TactileError::Ppm("truncated header".into()));
        }
        let ch = b[0];
        if in_comment {
            in_comment = ch != b'\n';
            continue;
        }
        if ch == b'#' && cur.is_empty() {
            in_comment = true;
        } else if ch.is_ascii_whitespace() {
            if !cur.is_empty() {
                tokens.push(String::from_utf8_lossy(&cur).into_owned());
                cur.clear();
            }
        } else {
            cur.push(ch);
        }
    }
    if tokens[0] != "P6" {
        return Err(TactileError::Ppm(format!("unsupported magic `{}`", tokens[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| TactileError::Ppm(format!("bad number `{s}`")));
    let (width, height, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(TactileError::Ppm(format!("unsupported maxval {maxval}")));
    }
    let grid = Grid::new(width, height)?;
    let mut data = vec![0u8; grid.len() * 3];
    r.read_exact(&mut data).map_err(|_| TactileError::Ppm("truncated pixel data".into()))?;
    let scale = maxval as f64;
    let pixels = data
        .chunks_exact(3)
        .map(|c| [c[0] as f64 / scale, c[1] as f64 / scale, c[2] as f64 / scale])
        .collect();
    Ok(TactileImage { width, height, pixels })
}

pub fn save_ppm(path: &Path, img: &TactileImage) -> Result<(), TactileError> {
    let f = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_ppm(&mut w, img)?;
    w.flush()?;
    Ok(())
}

pub fn load_ppm(path: &Path) -> Result<TactileImage, TactileError> {
    read_ppm(fs::File::open(path)?)
}

/// One manifest row; `path` is relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub path: String,
    pub label: String,
    pub seed: u64,
    pub index: usize,
    pub cx: f64,
    pub cy: f64,
    pub rotation: f64,
    pub scale: f64,
    pub depth: f64,
}

impl ManifestRecord {
    pub fn shape(&self) -> Result<ShapeClass, TactileError> {
        self.label.parse().map_err(|e: super::UnknownShape| TactileError::UnknownShape(e.0))
    }
}

pub const MANIFEST_FILE: &str = "manifest.csv";

pub fn write_manifest<W: Write>(w: W, rows: &[ManifestRecord]) -> Result<(), TactileError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_manifest<R: Read>(r: R) -> Result<Vec<ManifestRecord>, TactileError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Writes every image as `images/NNNNNN_label.ppm` plus a manifest under `dir`.
pub fn save_dataset(dir: &Path, samples: &[Sample]) -> Result<PathBuf, TactileError> {
    let img_dir = dir.join("images");
    fs::create_dir_all(&img_dir)?;
    let mut rows = Vec::with_capacity(samples.len());
    for s in samples {
        let rel = format!("images/{:06}_{}.ppm", s.index, s.label.name());
        save_ppm(&dir.join(&rel), &s.image)?;
        rows.push(ManifestRecord {
            path: rel,
            label: s.label.name().to_string(),
            seed: s.seed,
            index: s.index,
            cx: s.pose.center_x,
            cy: s.pose.center_y,
            rotation: s.pose.rotation,
            scale: s.pose.scale,
            depth: s.depth,
        });
    }
    let manifest = dir.join(MANIFEST_FILE);
    write_manifest(fs::File::create(&manifest)?, &rows)?;
    Ok(manifest)
}

/// Loads the labelled images listed in a manifest.
pub fn load_dataset(manifest: &Path) -> Result<Vec<(TactileImage, ShapeClass)>, TactileError> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let rows = read_manifest(fs::File::open(manifest)?)?;
    rows.iter().map(|r| Ok((load_ppm(&base.join(&r.path))?, r.shape()?))).collect()
}


#[cfg(test)]
mod tests {
    use super::*;

    fn sample_image() -> TactileImage {
        let grid = Grid::new(17, 16).unwrap();
        let mut img = TactileImage::filled(grid, [0.0; 3]);
        for (i, px) in img.pixels.iter_mut().enumerate() {
            *px = [(i % 256) as f64 / 255.0, ((i * 7) % 256) as f64 / 255.0, 1.0];
        }
        img
    }

    #[test]
    fn ppm_round_trip() {
        let img = sample_image();
        let mut buf = Vec::new();
        write_ppm(&mut buf, &img).unwrap();
        assert!(buf.starts_with(b"P6\n17 16\n255\n"));
        let back = read_ppm(&buf[..]).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn ppm_with_comment_header() {
        let mut buf = b"P6\n# made by hand\n16 16 # size\n255\n".to_vec();
        buf.extend(std::iter::repeat_n(128u8, 16 * 16 * 3));
        let img = read_ppm(&buf[..]).unwrap();
        assert!((img.get(3, 3)[1] - 128.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn ppm_errors() {
        assert!(read_ppm(&b"P3\n16 16\n255\n"[..]).is_err());
        assert!(read_ppm(&b"P6\n16 16\n255\n\x00\x01"[..]).is_err());
        assert!(read_ppm(&b"P6\n16"[..]).is_err());
        assert!(read_ppm(&b"P6\n4 4\n255\n"[..]).is_err());
    }

    #[test]
    fn dataset_round_trip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let samples = super::super::generate_dataset(1, 3, Grid::new(64, 48).unwrap()).unwrap();
        let manifest = save_dataset(dir.path(), &samples).unwrap();
        let text = fs::read_to_string(&manifest).unwrap();
        assert!(text.starts_with("path,label,seed,index,cx,cy,rotation,scale,depth\n"));
        let loaded = load_dataset(&manifest).unwrap();
        assert_eq!(loaded.len(), 10);
        for (s, (img, label)) in samples.iter().zip(&loaded) {
            assert_eq!(*label, s.label);
            for (a, b) in s.image.pixels.iter().zip(&img.pixels) {
                for c in 0..3 {
                    assert!((a[c] - b[c]).abs() <= 0.5 / 255.0 + 1e-12);
                }
            }
        }
    }
}
