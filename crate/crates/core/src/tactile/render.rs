use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{ShapeClass, TactileError};

/// Placement of a shape on the pixel grid. `scale` is the bounding-circle
/// radius in pixels, `rotation` is in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub center_x: f64,
    pub center_y: f64,
    pub rotation: f64,
    pub scale: f64,
}

impl Pose {
    pub fn new(center_x: f64, center_y: f64, rotation: f64, scale: f64) -> Self {
        Self { center_x, center_y, rotation, scale }
    }

    pub fn centered(grid: Grid, scale: f64) -> Self {
        Self::new(grid.width as f64 / 2.0, grid.height as f64 / 2.0, 0.0, scale)
    }

    /// Maps pixel-plane coordinates into the shape's unit frame.
    pub fn to_unit(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = (x - self.center_x) / self.scale;
        let dy = (y - self.center_y) / self.scale;
        let (s, c) = self.rotation.sin_cos();
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Grid {
    pub const MIN_SIDE: usize = 16;

    pub fn new(width: usize, height: usize) -> Result<Self, TactileError> {
        if width < Self::MIN_SIDE || height < Self::MIN_SIDE {
            return Err(TactileError::InvalidGrid { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self { width: 160, height: 120 }
    }
}

/// Surface height in metres, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    pub width: usize,
    pub height: usize,
    /// Pixel pitch in metres.
    pub cell_size: f64,
    pub values: Vec<f64>,
}

impl HeightMap {
    pub fn zeros(grid: Grid, cell_size: f64) -> Self {
        Self { width: grid.width, height: grid.height, cell_size, values: vec![0.0; grid.len()] }
    }

    pub fn grid(&self) -> Grid {
        Grid { width: self.width, height: self.height }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, h: f64) {
        self.values[y * self.width + x] = h;
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Slope along x and y by central differences, one-sided at the border.
    pub fn gradient(&self, x: usize, y: usize) -> (f64, f64) {
        let (w, h) = (self.width, self.height);
        let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
        let gx = (self.get(x1, y) - self.get(x0, y)) / ((x1 - x0) as f64 * self.cell_size);
        let gy = (self.get(x, y1) - self.get(x, y0)) / ((y1 - y0) as f64 * self.cell_size);
        (gx, gy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampOptions {
    /// Metres per pixel.
    pub cell_size: f64,
    /// Gaussian sigma in pixels; zero disables smoothing.
    pub smoothing_radius: f64,
}

impl Default for StampOptions {
    fn default() -> Self {
        Self { cell_size: 1e-4, smoothing_radius: 2.0 }
    }
}

/// Presses `shape` into the elastomer to `depth` metres. The indicator is
/// sampled at pixel centres and then smoothed with a separable Gaussian.
pub fn stamp_heightmap(
    shape: ShapeClass,
    pose: &Pose,
    depth: f64,
    grid: Grid,
    opts: &StampOptions,
) -> Result<HeightMap, TactileError> {
    let grid = Grid::new(grid.width, grid.height)?;
    if !(depth.is_finite() && depth > 0.0) {
        return Err(TactileError::InvalidDepth(depth));
    }
    if !(opts.cell_size.is_finite() && opts.cell_size > 0.0) {
        return Err(TactileError::InvalidStamp(format!("cell size {}", opts.cell_size)));
    }
    if !(opts.smoothing_radius.is_finite() && opts.smoothing_radius >= 0.0) {
        return Err(TactileError::InvalidStamp(format!("smoothing radius {}", opts.smoothing_radius)));
    }
    if !(pose.scale.is_finite() && pose.scale > 0.0 && pose.rotation.is_finite()) {
        return Err(TactileError::InvalidStamp(format!("pose {pose:?}")));
    }
    let margin = pose.scale + 3.0 * opts.smoothing_radius;
    let (w, h) = (grid.width as f64, grid.height as f64);
    if !(pose.center_x - margin >= 0.0
        && pose.center_x + margin <= w
        && pose.center_y - margin >= 0.0
        && pose.center_y + margin <= h)
    {
        return Err(TactileError::ShapeOutOfFrame { pose: *pose, margin, width: grid.width, height: grid.height });
    }

    let mut map = HeightMap::zeros(grid, opts.cell_size);
    for y in 0..grid.height {
        for x in 0..grid.width {
            let (u, v) = pose.to_unit(x as f64 + 0.5, y as f64 + 0.5);
            if shape.contains(u, v) {
                map.set(x, y, depth);
            }
        }
    }
    if opts.smoothing_radius > 0.0 {
        gaussian_blur(&mut map.values, grid.width, grid.height, opts.smoothing_radius);
    }
    Ok(map)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-half..=half).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable blur with zero padding outside the frame.
pub fn gaussian_blur(values: &mut [f64], width: usize, height: usize, sigma: f64) {
    let k = gaussian_kernel(sigma);
    let half = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let xx = x as isize + j as isize - half;
                if (0..width as isize).contains(&xx) {
                    acc += kv * values[y * width + xx as usize];
                }
            }
            tmp[y * width + x] = acc;
        }
    }
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let yy = y as isize + j as isize - half;
                if (0..height as isize).contains(&yy) {
                    acc += kv * tmp[yy as usize * width + x];
                }
            }
            values[y * width + x] = acc;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Light {
    /// Radians, measured from +x towards +y in the image plane.
    pub azimuth: f64,
    /// Radians above the elastomer plane.
    pub elevation: f64,
    pub intensity: f64,
}

impl Light {
    pub fn direction(&self) -> [f64; 3] {
        let (se, ce) = self.elevation.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [ce * ca, ce * sa, se]
    }
}

/// Three coloured lights, one per RGB channel, plus uniform ambient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightRig {
    pub lights: [Light; 3],
    pub ambient: f64,
}

impl Default for LightRig {
    fn default() -> Self {
        let el = 45f64.to_radians();
        let mk = |deg: f64| Light { azimuth: deg.to_radians(), elevation: el, intensity: 0.8 };
        Self { lights: [mk(0.0), mk(120.0), mk(240.0)], ambient: 0.15 }
    }
}

impl LightRig {
    pub fn validate(&self) -> Result<(), TactileError> {
        if !(0.0..=1.0).contains(&self.ambient) {
            return Err(TactileError::InvalidRig(format!("ambient {}", self.ambient)));
        }
        for l in &self.lights {
            if !(l.elevation > 0.0 && l.elevation <= std::f64::consts::FRAC_PI_2) {
                return Err(TactileError::InvalidRig(format!("elevation {}", l.elevation)));
            }
            if !(0.0..=1.0).contains(&l.intensity) || !l.azimuth.is_finite() {
                return Err(TactileError::InvalidRig(format!("light {l:?}")));
            }
        }
        Ok(())
    }

    /// Same rig turned by `angle` radians about the surface normal.
    pub fn rotated(&self, angle: f64) -> Self {
        let mut out = *self;
        for l in &mut out.lights {
            l.azimuth += angle;
        }
        out
    }

    /// Per-channel response to an undeformed surface normal.
    pub fn flat_response(&self) -> [f64; 3] {
        core::array::from_fn(|c| channel_value(self, c, [0.0, 0.0, 1.0]))
    }

    /// Light directions as matrix rows.
    pub fn direction_matrix(&self) -> [[f64; 3]; 3] {
        core::array::from_fn(|c| self.lights[c].direction())
    }
}

fn channel_value(rig: &LightRig, c: usize, n: [f64; 3]) -> f64 {
    let l = &rig.lights[c];
    let d = l.direction();
    let dot = n[0] * d[0] + n[1] * d[1] + n[2] * d[2];
    (rig.ambient + l.intensity * dot.max(0.0)).clamp(0.0, 1.0)
}

/// RGB image with channel values in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
}

impl TactileImage {
    pub fn filled(grid: Grid, rgb: [f64; 3]) -> Self {
        Self { width: grid.width, height: grid.height, pixels: vec![rgb; grid.len()] }
    }

    pub fn grid(&self) -> Grid {
        Grid { width: self.width, height: self.height }
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    /// Adds iid Gaussian noise to every channel and clamps to [0, 1].
    pub fn add_noise<R: Rng + ?Sized>(&mut self, sigma: f64, rng: &mut R) -> Result<(), TactileError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(TactileError::InvalidNoise(sigma));
        }
        if sigma == 0.0 {
            return Ok(());
        }
        let normal = Normal::new(0.0, sigma).map_err(|_| TactileError::InvalidNoise(sigma))?;
        for px in &mut self.pixels {
            for c in px.iter_mut() {
                *c = (*c + normal.sample(rng)).clamp(0.0, 1.0);
            }
        }
        Ok(())
    }
}

/// Lambertian shading of the height map under the rig.
pub fn shade(map: &HeightMap, rig: &LightRig) -> Result<TactileImage, TactileError> {
    rig.validate()?;
    let mut pixels = Vec::with_capacity(map.values.len());
    for y in 0..map.height {
        for x in 0..map.width {
            let (gx, gy) = map.gradient(x, y);
            let norm = (gx * gx + gy * gy + 1.0).sqrt();
            let n = [-gx / norm, -gy / norm, 1.0 / norm];
            pixels.push(core::array::from_fn(|c| channel_value(rig, c, n)));
        }
    }
    Ok(TactileImage { width: map.width, height: map.height, pixels })
}

/// Recovers the unit surface normal at a pixel from its three channels.
/// Only valid where no channel is clipped or in shadow.
pub fn photometric_normal(rgb: [f64; 3], rig: &LightRig) -> Option<[f64; 3]> {
    let l = rig.direction_matrix();
    let rhs: [f64; 3] = core::array::from_fn(|c| (rgb[c] - rig.ambient) / rig.lights[c].intensity.max(1e-12));
    let n = crate::linalg::solve_vec(&l, &rhs, 1e-12)?;
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(len > 0.0) || !len.is_finite() {
        return None;
    }
    Some([n[0] / len, n[1] / len, n[2] / len])
}
