use rayon::prelude::*;

use super::mask::{Connectivity, Mask};
use super::ClassifierError;
use crate::tactile::{photometric_normal, LightRig, TactileImage};

pub const FEATURE_COUNT: usize = 10;

/// Lower magnitude floor of the signed-log Hu transform.
pub const HU_FLOOR: f64 = 1e-7;

/// Seven Hu moments, signed-log transformed, then normalised area,
/// eccentricity and the Euler proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn hu(&self) -> &[f64] {
        &self.0[..7]
    }

    pub fn area(&self) -> f64 {
        self.0[7]
    }

    pub fn eccentricity(&self) -> f64 {
        self.0[8]
    }

    pub fn euler(&self) -> f64 {
        self.0[9]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Raw shape descriptors of a binary mask, before the log transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMoments {
    pub hu: [f64; 7],
    pub eccentricity: f64,
    /// Area over the disc that circumscribes the mask about its centroid.
    pub area: f64,
}

impl ShapeMoments {
    /// Pixel centres sit at half-integer coordinates.
    pub fn from_mask(mask: &Mask) -> Option<Self> {
        let pts: Vec<(f64, f64)> = (0..mask.height)
            .flat_map(|y| (0..mask.width).map(move |x| (x, y)))
            .filter(|&(x, y)| mask.get(x, y))
            .map(|(x, y)| (x as f64 + 0.5, y as f64 + 0.5))
            .collect();
        if pts.is_empty() {
            return None;
        }
        let m00 = pts.len() as f64;
        let xc = pts.iter().map(|p| p.0).sum::<f64>() / m00;
        let yc = pts.iter().map(|p| p.1).sum::<f64>() / m00;
        let mut mu = [[0.0f64; 4]; 4];
        let mut rmax = 0.0f64;
        for &(px, py) in &pts {
            let (x, y) = (px - xc, py - yc);
            rmax = rmax.max(x.hypot(y));
            let xs = [1.0, x, x * x, x * x * x];
            let ys = [1.0, y, y * y, y * y * y];
            for p in 0..4 {
                for q in 0..4 - p {
                    mu[p][q] += xs[p] * ys[q];
                }
            }
        }
        let eta = |p: usize, q: usize| mu[p][q] / m00.powf((p + q) as f64 / 2.0 + 1.0);
        let hu = hu_from_eta(
            eta(2, 0),
            eta(0, 2),
            eta(1, 1),
            eta(3, 0),
            eta(0, 3),
            eta(2, 1),
            eta(1, 2),
        );

        let (a, b, c) = (mu[2][0] / m00, mu[0][2] / m00, mu[1][1] / m00);
        let mid = (a + b) / 2.0;
        let rad = (((a - b) / 2.0).powi(2) + c * c).sqrt();
        let (lmax, lmin) = (mid + rad, mid - rad);
        let eccentricity = if lmax > 0.0 { (1.0 - lmin / lmax).max(0.0).sqrt() } else { 0.0 };

        let r = rmax + std::f64::consts::FRAC_1_SQRT_2;
        let area = m00 / (std::f64::consts::PI * r * r);
        Some(Self { hu, eccentricity, area })
    }
}

pub(crate) fn hu_from_eta(n20: f64, n02: f64, n11: f64, n30: f64, n03: f64, n21: f64, n12: f64) -> [f64; 7] {
    let (a, b) = (n30 + n12, n21 + n03);
    let (c, d) = (n30 - 3.0 * n12, 3.0 * n21 - n03);
    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        c * c + d * d,
        a * a + b * b,
        c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b),
    ]
}

/// sign(h) * log10(1 + |h| / HU_FLOOR); continuous through zero.
pub fn signed_log(h: f64) -> f64 {
    if h == 0.0 {
        0.0
    } else {
        h.signum() * (h.abs() / HU_FLOOR).ln_1p() / std::f64::consts::LN_10
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureExtractor {
    pub rig: LightRig,
    /// Per-channel deviation from the flat field that marks contact.
    pub threshold: f64,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self { rig: LightRig::default(), threshold: 0.05 }
    }
}

impl FeatureExtractor {
    pub fn new(rig: LightRig, threshold: f64) -> Self {
        Self { rig, threshold }
    }

    /// Pixels whose largest channel deviation exceeds the threshold.
    pub fn deviation_mask(&self, img: &TactileImage) -> Mask {
        let flat = self.rig.flat_response();
        Mask {
            width: img.width,
            height: img.height,
            data: img
                .pixels
                .iter()
                .map(|px| (0..3).map(|c| (px[c] - flat[c]).abs()).fold(0.0, f64::max) > self.threshold)
                .collect(),
        }
    }

    /// Contact region: the deviation mask only marks sloped pixels, so flat
    /// plateaus inside it show up as holes. A hole is filled when the slope
    /// recovered around its rim climbs into it; a hole the rim descends into
    /// is a real recess and stays open. The largest 8-connected region wins.
    pub fn contact_mask(&self, img: &TactileImage) -> Result<Mask, ClassifierError> {
        let raw = self.deviation_mask(img);
        if raw.is_empty() {
            return Err(ClassifierError::EmptyContact);
        }
        let (labels, holes) = raw.holes();
        let mut score = vec![0.0f64; labels.iter().copied().max().unwrap_or(0) as usize + 1];
        let mut is_hole = vec![false; score.len()];
        for &h in &holes {
            is_hole[h as usize] = true;
        }
        let (w, hgt) = (raw.width as isize, raw.height as isize);
        for y in 0..hgt {
            for x in 0..w {
                let l = labels[(y * w + x) as usize] as usize;
                if !raw.data[(y * w + x) as usize] && is_hole[l] {
                    for (dx, dy) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w || ny >= hgt {
                            continue;
                        }
                        let j = (ny * w + nx) as usize;
                        if !raw.data[j] {
                            continue;
                        }
                        if let Some(n) = photometric_normal(img.pixels[j], &self.rig) {
                            if n[2] > 0.0 {
                                let (gx, gy) = (-n[0] / n[2], -n[1] / n[2]);
                                score[l] += gx * dx as f64 + gy * dy as f64;
                            }
                        }
                    }
                }
            }
        }
        let mut filled = raw.clone();
        for (i, v) in filled.data.iter_mut().enumerate() {
            let l = labels[i] as usize;
            if !*v && is_hole[l] && score[l] < 0.0 {
                *v = true;
            }
        }
        Ok(filled.largest_component(Connectivity::Eight))
    }

    pub fn features_of_mask(mask: &Mask) -> Result<FeatureVector, ClassifierError> {
        let m = ShapeMoments::from_mask(mask).ok_or(ClassifierError::EmptyContact)?;
        let mut f = [0.0; FEATURE_COUNT];
        for (dst, h) in f.iter_mut().zip(m.hu) {
            *dst = signed_log(h);
        }
        f[7] = m.area;
        f[8] = m.eccentricity;
        f[9] = 1.0 - mask.hole_count() as f64;
        Ok(FeatureVector(f))
    }

    pub fn extract(&self, img: &TactileImage) -> Result<FeatureVector, ClassifierError> {
        Self::features_of_mask(&self.contact_mask(img)?)
    }

    pub fn extract_all(&self, imgs: &[&TactileImage]) -> Vec<Result<FeatureVector, ClassifierError>> {
        imgs.par_iter().map(|img| self.extract(img)).collect()
    }
}

pub fn extract_features(img: &TactileImage) -> Result<FeatureVector, ClassifierError> {
    FeatureExtractor::default().extract(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tactile::{shade, stamp_heightmap, Grid, Pose, ShapeClass, StampOptions};

    fn render(shape: ShapeClass, pose: Pose) -> TactileImage {
        let grid = Grid::default();
        let map = stamp_heightmap(shape, &pose, 3e-4, grid, &StampOptions::default()).unwrap();
        shade(&map, &LightRig::default()).unwrap()
    }

    fn rel_close(a: &FeatureVector, b: &FeatureVector, tol: f64) -> bool {
        a.0.iter().zip(&b.0).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
    }

    /// Hu moments from raw (uncentred) moments, a separate route to the same
    /// quantities.
    fn hu_via_raw_moments(mask: &Mask) -> [f64; 7] {
        let mut m = [[0.0f64; 4]; 4];
        for y in 0..mask.height {
            for x in 0..mask.width {
                if mask.get(x, y) {
                    let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
                    for p in 0..4 {
                        for q in 0..4 - p {
                            m[p][q] += fx.powi(p as i32) * fy.powi(q as i32);
                        }
                    }
                }
            }
        }
        let (xb, yb) = (m[1][0] / m[0][0], m[0][1] / m[0][0]);
        let mu20 = m[2][0] - xb * m[1][0];
        let mu02 = m[0][2] - yb * m[0][1];
        let mu11 = m[1][1] - xb * m[0][1];
        let mu30 = m[3][0] - 3.0 * xb * m[2][0] + 2.0 * xb * xb * m[1][0];
        let mu03 = m[0][3] - 3.0 * yb * m[0][2] + 2.0 * yb * yb * m[0][1];
        let mu21 = m[2][1] - 2.0 * xb * m[1][1] - yb * m[2][0] + 2.0 * xb * xb * m[0][1];
        let mu12 = m[1][2] - 2.0 * yb * m[1][1] - xb * m[0][2] + 2.0 * yb * yb * m[1][0];
        let m00 = m[0][0];
        let n2 = m00.powi(2);
        let n3 = m00.powf(2.5);
        hu_from_eta(mu20 / n2, mu02 / n2, mu11 / n2, mu30 / n3, mu03 / n3, mu21 / n3, mu12 / n3)
    }

    #[test]
    fn hu_matches_raw_moment_route() {
        let mask = Mask::from_fn(50, 40, |x, y| {
            let (u, v) = (x as f64 - 20.0, y as f64 - 18.0);
            (u / 14.0).powi(2) + (v / 7.0).powi(2) <= 1.0 || (x > 30 && x < 40 && y < 12)
        });
        let a = ShapeMoments::from_mask(&mask).unwrap().hu;
        let b = hu_via_raw_moments(&mask);
        for i in 0..7 {
            assert!((a[i] - b[i]).abs() <= 1e-9 * a[i].abs().max(1e-12), "h{}: {} vs {}", i + 1, a[i], b[i]);
        }
    }

    #[test]
    fn continuous_shape_values() {
        // A large digital disc approaches h1 = 1/(2 pi); a square gives 1/6.
        let disc = Mask::from_fn(401, 401, |x, y| (x as f64 - 200.0).hypot(y as f64 - 200.0) <= 180.0);
        let m = ShapeMoments::from_mask(&disc).unwrap();
        assert!((m.hu[0] - 1.0 / std::f64::consts::TAU).abs() < 1e-4);
        assert!(m.hu[1].abs() < 1e-8 && m.eccentricity < 0.01);
        let sq = Mask::from_fn(100, 100, |x, y| (10..90).contains(&x) && (10..90).contains(&y));
        let m = ShapeMoments::from_mask(&sq).unwrap();
        assert!((m.hu[0] - 1.0 / 6.0).abs() < 1e-4);
        assert!(m.area > 0.0 && m.area <= 1.0);
    }

    #[test]
    fn mirror_flips_only_h7() {
        let mask = Mask::from_fn(40, 40, |x, y| x + 2 * y < 50 && x > 5 && y > 3 && x * y < 200);
        let flipped = Mask::from_fn(40, 40, |x, y| mask.get(39 - x, y));
        let a = ShapeMoments::from_mask(&mask).unwrap().hu;
        let b = ShapeMoments::from_mask(&flipped).unwrap().hu;
        for i in 0..6 {
            assert!((a[i] - b[i]).abs() <= 1e-12 * a[i].abs().max(1e-30));
        }
        assert!((a[6] + b[6]).abs() <= 1e-12 * a[6].abs());
    }

    #[test]
    fn signed_log_is_odd_and_continuous() {
        assert_eq!(signed_log(0.0), 0.0);
        assert!((signed_log(1e-7) - 2f64.log10()).abs() < 1e-15);
        assert_eq!(signed_log(-3e-4), -signed_log(3e-4));
        assert!(signed_log(1e-20).abs() < 1e-12);
    }

    #[test]
    fn blank_image_has_no_contact() {
        let img = TactileImage::filled(Grid::default(), LightRig::default().flat_response());
        assert!(matches!(extract_features(&img), Err(ClassifierError::EmptyContact)));
    }

    #[test]
    fn translation_invariance() {
        let a = extract_features(&render(ShapeClass::Circle, Pose::new(80.0, 60.0, 0.0, 30.0))).unwrap();
        let b = extract_features(&render(ShapeClass::Circle, Pose::new(90.0, 60.0, 0.0, 30.0))).unwrap();
        assert!(rel_close(&a, &b, 1e-6), "{a:?} vs {b:?}");
    }

    #[test]
    fn rotation_invariance() {
        let a = extract_features(&render(ShapeClass::Square, Pose::new(80.0, 60.0, 0.3, 30.0))).unwrap();
        let b = extract_features(&render(ShapeClass::Square, Pose::new(80.0, 60.0, 0.3 + std::f64::consts::FRAC_PI_2, 30.0)))
            .unwrap();
        assert!(rel_close(&a, &b, 1e-3), "{a:?} vs {b:?}");
    }

    #[test]
    fn ring_keeps_its_hole_plateau_is_filled() {
        let ring = extract_features(&render(ShapeClass::ConcentricCircle, Pose::new(80.0, 60.0, 0.0, 34.0))).unwrap();
        let disc = extract_features(&render(ShapeClass::Circle, Pose::new(80.0, 60.0, 0.0, 34.0))).unwrap();
        assert_eq!(ring.euler(), 0.0);
        assert_eq!(disc.euler(), 1.0);
        assert!(disc.area() > 0.8, "plateau filled: {}", disc.area());
    }

    #[test]
    fn features_are_finite_for_every_class() {
        let pose = Pose::new(80.0, 60.0, 1.0, 30.0);
        for c in ShapeClass::ALL {
            let f = extract_features(&render(c, pose)).unwrap();
            assert!(f.is_finite(), "{c}");
            assert!((0.0..=1.0).contains(&f.area()));
        }
    }
}
