//! Forward model of the optoelectronic force/torque unit.
//!
//! A rigid ring plate rests on three identical end-loaded cantilevers. Each
//! beam carries a reflector above a photo-reflector; the load on the plate
//! moves the reflectors, the gaps change, and the sensor outputs are read by
//! an ADC. The chain is
//!
//! ```text
//! Wrench -> beam deflections -> gaps -> ideal counts (+ noise) -> ADC counts
//! ```
//!
//! Sign convention: a positive deflection moves the reflector toward the
//! sensor and closes the gap.

use crate::linalg::{self, Mat3, Vec3};
use crate::scalar::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("sensor layout is collinear; heave and tilts cannot be separated")]
    SingularStructure,
    #[error("gap {gap:e} m outside the sensing window [0, {range:e}] m")]
    GapOutOfRange { gap: f64, range: f64 },
}

/// Load on the plate: normal force (N) and the two in-plane moments (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench<T> {
    pub fz: T,
    pub mx: T,
    pub my: T,
}

impl<T: Real> Wrench<T> {
    pub fn new(fz: T, mx: T, my: T) -> Self {
        Self { fz, mx, my }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.fz, self.mx, self.my]
    }

    pub fn is_finite(&self) -> bool {
        self.fz.is_finite() && self.mx.is_finite() && self.my.is_finite()
    }

    /// True when every component lies within `±bounds` (component-wise).
    pub fn within(&self, bounds: &Wrench<T>) -> bool {
        self.fz.abs() <= bounds.fz.abs()
            && self.mx.abs() <= bounds.mx.abs()
            && self.my.abs() <= bounds.my.abs()
    }

    pub fn cast<U: Real>(self) -> Wrench<U> {
        Wrench::new(
            U::lit(self.fz.to_f64_lossy()),
            U::lit(self.mx.to_f64_lossy()),
            U::lit(self.my.to_f64_lossy()),
        )
    }
}

impl<T: Real> Add for Wrench<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.fz + rhs.fz, self.mx + rhs.mx, self.my + rhs.my)
    }
}

impl<T: Real> Sub for Wrench<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.fz - rhs.fz, self.mx - rhs.mx, self.my - rhs.my)
    }
}

impl<T: Real> Mul<T> for Wrench<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.fz * s, self.mx * s, self.my * s)
    }
}

/// Rectangular cantilever, clamped at one end and loaded at the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec<T> {
    /// Young's modulus (Pa).
    pub elastic_modulus: T,
    /// Section width (m).
    pub width: T,
    /// Section thickness in the bending direction (m).
    pub thickness: T,
    /// Free length (m).
    pub length: T,
}

impl<T: Real> Default for BeamSpec<T> {
    /// PLA beam, 5 mm × 2.5 mm section, 8 mm long.
    fn default() -> Self {
        Self {
            elastic_modulus: T::lit(3.5e9),
            width: T::lit(5e-3),
            thickness: T::lit(2.5e-3),
            length: T::lit(8e-3),
        }
    }
}

impl<T: Real> BeamSpec<T> {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let fields = [
            ("elastic_modulus", self.elastic_modulus),
            ("width", self.width),
            ("thickness", self.thickness),
            ("length", self.length),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > T::zero()) {
                return Err(PhysicsError::InvalidSpec(format!(
                    "beam {name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.thickness > self.width {
            return Err(PhysicsError::InvalidSpec(format!(
                "beam thickness {} exceeds width {}",
                self.thickness, self.width
            )));
        }
        Ok(())
    }

    /// Second moment of area of the section, `b·h³/12`.
    pub fn second_moment(&self) -> T {
        self.width * self.thickness.powi(3) / T::lit(12.0)
    }
}

/// Tip stiffness of an end-loaded cantilever, `3·E·I / L³` (N/m).
pub fn beam_stiffness<T: Real>(beam: &BeamSpec<T>) -> Result<T, PhysicsError> {
    beam.validate()?;
    Ok(T::lit(3.0) * beam.elastic_modulus * beam.second_moment() / beam.length.powi(3))
}

/// Geometry of the three-beam ring and its sensing window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureSpec<T> {
    pub beam: BeamSpec<T>,
    /// Radius of the circle the three sensors sit on (m).
    pub sensor_radius: T,
    /// Angular positions of the sensors (rad).
    pub sensor_angles: [T; 3],
    /// Reflector-to-sensor gap at rest (m).
    pub gap_initial: T,
    /// Width of the linear sensing window, starting at zero gap (m).
    pub gap_range: T,
}

impl<T: Real> Default for StructureSpec<T> {
    fn default() -> Self {
        let deg = |d: f64| T::lit(d.to_radians());
        Self {
            beam: BeamSpec::default(),
            sensor_radius: T::lit(25e-3),
            sensor_angles: [deg(90.0), deg(210.0), deg(330.0)],
            gap_initial: T::lit(50e-6),
            gap_range: T::lit(100e-6),
        }
    }
}

impl<T: Real> StructureSpec<T> {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        self.beam.validate()?;
        if !(self.sensor_radius.is_finite() && self.sensor_radius > T::zero()) {
            return Err(PhysicsError::InvalidSpec(format!(
                "sensor_radius must be > 0, got {}",
                self.sensor_radius
            )));
        }
        if self.sensor_angles.iter().any(|a| !a.is_finite()) {
            return Err(PhysicsError::InvalidSpec("sensor angles must be finite".into()));
        }
        if !(self.gap_initial > T::zero() && self.gap_initial < self.gap_range && self.gap_range.is_finite()) {
            return Err(PhysicsError::InvalidSpec(format!(
                "need 0 < gap_initial < gap_range, got {} and {}",
                self.gap_initial, self.gap_range
            )));
        }
        let g = self.geometry();
        let r2 = self.sensor_radius * self.sensor_radius;
        if linalg::det(&g).abs() <= T::epsilon().sqrt() * r2 {
            return Err(PhysicsError::SingularStructure);
        }
        Ok(())
    }

    /// Sensor positions `(r·cosθ, r·sinθ)` in the plate frame.
    pub fn sensor_positions(&self) -> [[T; 2]; 3] {
        self.sensor_angles
            .map(|a| [self.sensor_radius * a.cos(), self.sensor_radius * a.sin()])
    }

    /// Maps plate pose `(heave, tilt_x, tilt_y)` to sensor deflections:
    /// row `i` is `[1, y_i, −x_i]`.
    pub fn geometry(&self) -> Mat3<T> {
        self.sensor_positions().map(|[x, y]| [T::one(), y, -x])
    }

    /// Largest deflection magnitude that keeps every gap inside the window.
    pub fn deflection_limit(&self) -> T {
        self.gap_initial.min(self.gap_range - self.gap_initial)
    }
}

/// Heave and small tilts of the rigid plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatePose<T> {
    /// Translation along z, toward the sensors (m).
    pub heave: T,
    /// Rotation about x (rad).
    pub tilt_x: T,
    /// Rotation about y (rad).
    pub tilt_y: T,
}

/// Solves the plate equilibrium `Fz = k Σδ`, `Mx = k Σδ·y`, `My = −k Σδ·x`
/// with `δ_i = heave + tilt_x·y_i − tilt_y·x_i`.
pub fn plate_pose<T: Real>(w: &Wrench<T>, s: &StructureSpec<T>) -> Result<PlatePose<T>, PhysicsError> {
    s.validate()?;
    let k = beam_stiffness(&s.beam)?;
    let g = s.geometry();
    let normal = linalg::mat_mul(&linalg::transpose(&g), &g);
    let rhs = w.to_array().map(|c| c / k);
    let q = linalg::solve_vec(&normal, &rhs, T::epsilon()).ok_or(PhysicsError::SingularStructure)?;
    Ok(PlatePose {
        heave: q[0],
        tilt_x: q[1],
        tilt_y: q[2],
    })
}

/// Per-sensor beam deflections (m) under a wrench.
pub fn wrench_to_deflections<T: Real>(w: &Wrench<T>, s: &StructureSpec<T>) -> Result<Vec3<T>, PhysicsError> {
    let pose = plate_pose(w, s)?;
    Ok(linalg::mat_vec(&s.geometry(), &[pose.heave, pose.tilt_x, pose.tilt_y]))
}

/// A gap after clamping to the sensing window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample<T> {
    pub gap: T,
    pub saturated: bool,
}

pub fn gap_from_deflection<T: Real>(deflection: T, s: &StructureSpec<T>) -> GapSample<T> {
    let raw = s.gap_initial - deflection;
    let gap = raw.max(T::zero()).min(s.gap_range);
    GapSample {
        gap,
        saturated: gap != raw,
    }
}

/// ADC configuration. Noise is in counts and is added before rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcModel {
    pub bits: u32,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl Default for AdcModel {
    fn default() -> Self {
        Self {
            bits: 10,
            noise_sigma: 1.0,
            rng_seed: 0,
        }
    }
}

impl AdcModel {
    pub fn noiseless(bits: u32) -> Self {
        Self {
            bits,
            noise_sigma: 0.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(1..=16).contains(&self.bits) {
            return Err(PhysicsError::InvalidSpec(format!(
                "adc bits must be in 1..=16, got {}",
                self.bits
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(PhysicsError::InvalidSpec(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Largest code, `2^bits − 1`.
    pub fn full_scale(&self) -> u32 {
        (1u32 << self.bits) - 1
    }
}

/// Quantizes a gap with an explicit noise offset (in counts). Rounds half
/// away from zero and clamps to the code range.
pub fn quantize_gap<T: Real>(gap: T, s: &StructureSpec<T>, bits: u32, noise: f64) -> Result<u16, PhysicsError> {
    if !(gap >= T::zero() && gap <= s.gap_range) {
        return Err(PhysicsError::GapOutOfRange {
            gap: gap.to_f64_lossy(),
            range: s.gap_range.to_f64_lossy(),
        });
    }
    let full = (1u32 << bits) - 1;
    let ideal = (gap / s.gap_range) * T::lit(full as f64) + T::lit(noise);
    let code = ideal.round().max(T::zero()).min(T::lit(full as f64));
    Ok(code.to_u16().unwrap_or(0))
}

/// Gap represented by a code on the noiseless lattice.
pub fn count_to_gap<T: Real>(count: u16, s: &StructureSpec<T>, bits: u32) -> T {
    let full = (1u32 << bits) - 1;
    T::lit(count as f64) * s.gap_range / T::lit(full as f64)
}

/// A noisy ADC channel set. Owns its generator so one instance is one
/// reproducible stream.
#[derive(Debug, Clone)]
pub struct Adc {
    model: AdcModel,
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
}

impl Adc {
    pub fn new(model: AdcModel) -> Result<Self, PhysicsError> {
        model.validate()?;
        let normal = (model.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, model.noise_sigma).expect("validated sigma"));
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
            normal,
        })
    }

    pub fn model(&self) -> &AdcModel {
        &self.model
    }

    pub fn sample<T: Real>(&mut self, gap: T, s: &StructureSpec<T>) -> Result<u16, PhysicsError> {
        let noise = match &self.normal {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        };
        quantize_gap(gap, s, self.model.bits, noise)
    }
}

pub fn adc_from_gap<T: Real>(gap: T, s: &StructureSpec<T>, adc: &mut Adc) -> Result<u16, PhysicsError> {
    adc.sample(gap, s)
}

/// Raw ADC output of the three channels at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SensorReading {
    pub timestamp_ns: u64,
    pub counts: [u16; 3],
}

/// A simulated reading with the intermediate quantities that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedReading<T> {
    pub reading: SensorReading,
    pub deflections: Vec3<T>,
    pub gaps: [GapSample<T>; 3],
}

impl<T> SimulatedReading<T> {
    pub fn saturated(&self) -> bool {
        self.gaps.iter().any(|g| g.saturated)
    }
}

pub fn simulate_reading<T: Real>(
    w: &Wrench<T>,
    s: &StructureSpec<T>,
    adc: &mut Adc,
    timestamp_ns: u64,
) -> Result<SimulatedReading<T>, PhysicsError> {
    let deflections = wrench_to_deflections(w, s)?;
    let gaps = deflections.map(|d| gap_from_deflection(d, s));
    let mut counts = [0u16; 3];
    for (c, g) in counts.iter_mut().zip(&gaps) {
        *c = adc.sample(g.gap, s)?;
    }
    Ok(SimulatedReading {
        reading: SensorReading { timestamp_ns, counts },
        deflections,
        gaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerDeflection<T> {
    pub wrench: Wrench<T>,
    pub deflections: Vec3<T>,
    pub worst: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionReport<T> {
    pub corners: Vec<CornerDeflection<T>>,
    pub worst: T,
    pub limit: T,
    pub pass: bool,
}

/// Checks the eight corner loads of the box `±bounds` against the sensing
/// window. Deflection is linear in the load, so the worst case over the box
/// is attained at a corner.
pub fn check_deflection_range<T: Real>(
    bounds: &Wrench<T>,
    s: &StructureSpec<T>,
) -> Result<DeflectionReport<T>, PhysicsError> {
    let (fz, mx, my) = (bounds.fz.abs(), bounds.mx.abs(), bounds.my.abs());
    let mut corners = Vec::with_capacity(8);
    for signs in 0u8..8 {
        let pick = |bit: u8, v: T| if signs & bit == 0 { v } else { -v };
        let wrench = Wrench::new(pick(1, fz), pick(2, mx), pick(4, my));
        let deflections = wrench_to_deflections(&wrench, s)?;
        let worst = deflections.iter().fold(T::zero(), |m, d| m.max(d.abs()));
        corners.push(CornerDeflection {
            wrench,
            deflections,
            worst,
        });
    }
    let worst = corners.iter().fold(T::zero(), |m, c| m.max(c.worst));
    let limit = s.deflection_limit();
    Ok(DeflectionReport {
        corners,
        worst,
        limit,
        pass: worst <= limit,
    })
}

/// The rated measurement box: ±6 N, ±0.1 N·m, ±0.1 N·m.
pub fn rated_range<T: Real>() -> Wrench<T> {
    Wrench::new(T::lit(6.0), T::lit(0.1), T::lit(0.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn beam(h: f64, l: f64) -> BeamSpec<f64> {
        BeamSpec {
            elastic_modulus: 3.5e9,
            width: 5e-3,
            thickness: h,
            length: l,
        }
    }

    #[test]
    fn stiffness_hand_values() {
        let k = beam_stiffness(&beam(2e-3, 10e-3)).unwrap();
        assert!((k - 35_000.0).abs() < 1e-6, "{k}");
        let k = beam_stiffness(&beam(2.5e-3, 8e-3)).unwrap();
        // 3 · 3.5e9 · (5e-3 · 2.5e-3³ / 12) / 8e-3³
        assert!((k - 133_514.404_296_875).abs() < 1e-6, "{k}");
    }

    #[test]
    fn stiffness_cubic_in_length() {
        let k1 = beam_stiffness(&beam(2e-3, 10e-3)).unwrap();
        let k2 = beam_stiffness(&beam(2e-3, 20e-3)).unwrap();
        assert!((k1 / k2 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn stiffness_generic_over_f32() {
        let b = BeamSpec::<f32> {
            elastic_modulus: 3.5e9,
            width: 5e-3,
            thickness: 2e-3,
            length: 10e-3,
        };
        let k = beam_stiffness(&b).unwrap();
        assert!((k - 35_000.0).abs() / 35_000.0 < 1e-5);
    }

    #[test]
    fn invalid_beam_rejected() {
        let mut b = beam(2e-3, 10e-3);
        b.length = 0.0;
        assert!(matches!(beam_stiffness(&b), Err(PhysicsError::InvalidSpec(_))));
        let mut b = beam(2e-3, 10e-3);
        b.thickness = 6e-3;
        assert!(matches!(beam_stiffness(&b), Err(PhysicsError::InvalidSpec(_))));
    }

    #[test]
    fn zero_load_zero_deflection() {
        let s = StructureSpec::<f64>::default();
        assert_eq!(wrench_to_deflections(&Wrench::zero(), &s).unwrap(), [0.0; 3]);
    }

    #[test]
    fn pure_heave_splits_evenly() {
        let s = StructureSpec::<f64>::default();
        let k = beam_stiffness(&s.beam).unwrap();
        let d = wrench_to_deflections(&Wrench::new(6.0, 0.0, 0.0), &s).unwrap();
        for di in d {
            assert!((di - 6.0 / (3.0 * k)).abs() < 1e-18);
            assert!((di - 1.498e-5).abs() < 1e-8);
        }
    }

    #[test]
    fn pure_moment_tilt_matches_hand_value() {
        let s = StructureSpec::<f64>::default();
        let k = beam_stiffness(&s.beam).unwrap();
        let pose = plate_pose(&Wrench::new(0.0, 0.1, 0.0), &s).unwrap();
        let r = s.sensor_radius;
        let alpha = 0.1 / (k * 1.5 * r * r);
        assert!((pose.tilt_x - alpha).abs() < 1e-15);
        assert!((alpha - 7.99e-4).abs() < 1e-6);
        assert!(pose.heave.abs() < 1e-18 && pose.tilt_y.abs() < 1e-15);
        let d = wrench_to_deflections(&Wrench::new(0.0, 0.1, 0.0), &s).unwrap();
        let worst = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((worst - alpha * r).abs() < 1e-18);
        assert!((worst - 2.0e-5).abs() < 1e-7);
    }

    #[test]
    fn equilibrium_is_satisfied() {
        // Independent check: the deflections reproduce the applied load.
        let s = StructureSpec::<f64>::default();
        let k = beam_stiffness(&s.beam).unwrap();
        let w = Wrench::new(2.5, -0.04, 0.07);
        let d = wrench_to_deflections(&w, &s).unwrap();
        let p = s.sensor_positions();
        let fz: f64 = k * d.iter().sum::<f64>();
        let mx: f64 = k * (0..3).map(|i| d[i] * p[i][1]).sum::<f64>();
        let my: f64 = -k * (0..3).map(|i| d[i] * p[i][0]).sum::<f64>();
        assert!((fz - w.fz).abs() < 1e-12);
        assert!((mx - w.mx).abs() < 1e-14);
        assert!((my - w.my).abs() < 1e-14);
    }

    #[test]
    fn collinear_layout_is_singular() {
        let mut s = StructureSpec::<f64>::default();
        s.sensor_angles = [0.0, std::f64::consts::PI, 0.0];
        assert_eq!(
            wrench_to_deflections(&Wrench::new(1.0, 0.0, 0.0), &s),
            Err(PhysicsError::SingularStructure)
        );
    }

    #[test]
    fn gap_examples() {
        let s = StructureSpec::<f64>::default();
        assert_eq!(gap_from_deflection(0.0, &s), GapSample { gap: 50e-6, saturated: false });
        let g = gap_from_deflection(2e-5, &s);
        assert!((g.gap - 30e-6).abs() < 1e-18 && !g.saturated);
        assert_eq!(gap_from_deflection(7e-5, &s), GapSample { gap: 0.0, saturated: true });
        assert_eq!(gap_from_deflection(-7e-5, &s), GapSample { gap: 100e-6, saturated: true });
    }

    #[test]
    fn adc_examples() {
        let s = StructureSpec::<f64>::default();
        assert_eq!(quantize_gap(0.05e-3, &s, 10, 0.0).unwrap(), 512);
        assert_eq!(quantize_gap(0.0, &s, 10, 0.0).unwrap(), 0);
        assert_eq!(quantize_gap(0.1e-3, &s, 10, 0.0).unwrap(), 1023);
        assert!(matches!(
            quantize_gap(0.2e-3, &s, 10, 0.0),
            Err(PhysicsError::GapOutOfRange { .. })
        ));
        assert!(quantize_gap(-1e-9, &s, 10, 0.0).is_err());
    }

    #[test]
    fn adc_clamps_noise_at_rails() {
        let s = StructureSpec::<f64>::default();
        assert_eq!(quantize_gap(0.1e-3, &s, 10, 5.0).unwrap(), 1023);
        assert_eq!(quantize_gap(0.0, &s, 10, -5.0).unwrap(), 0);
    }

    #[test]
    fn adc_model_validation() {
        assert!(Adc::new(AdcModel { bits: 0, ..Default::default() }).is_err());
        assert!(Adc::new(AdcModel { bits: 17, ..Default::default() }).is_err());
        assert!(Adc::new(AdcModel { noise_sigma: -1.0, ..Default::default() }).is_err());
        assert!(Adc::new(AdcModel { bits: 16, ..Default::default() }).is_ok());
    }

    #[test]
    fn same_seed_same_noisy_counts() {
        let s = StructureSpec::<f64>::default();
        let model = AdcModel { bits: 10, noise_sigma: 2.0, rng_seed: 42 };
        let run = || {
            let mut adc = Adc::new(model).unwrap();
            (0..200).map(|i| adc.sample(i as f64 * 0.5e-6, &s).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
        let mut other = Adc::new(AdcModel { rng_seed: 43, ..model }).unwrap();
        let alt: Vec<_> = (0..200).map(|i| other.sample(i as f64 * 0.5e-6, &s).unwrap()).collect();
        assert_ne!(run(), alt);
    }

    #[test]
    fn rest_reading_is_mid_scale() {
        let s = StructureSpec::<f64>::default();
        let mut adc = Adc::new(AdcModel::noiseless(10)).unwrap();
        let r = simulate_reading(&Wrench::zero(), &s, &mut adc, 0).unwrap();
        assert_eq!(r.reading.counts, [512, 512, 512]);
        assert!(!r.saturated());
    }

    #[test]
    fn heave_gives_equal_counts() {
        let s = StructureSpec::<f64>::default();
        let mut adc = Adc::new(AdcModel::noiseless(10)).unwrap();
        let c = simulate_reading(&Wrench::new(4.0, 0.0, 0.0), &s, &mut adc, 0).unwrap().reading.counts;
        assert!(c[0] == c[1] && c[1] == c[2]);
        assert!(c[0] < 512, "pressing closes the gap");
    }

    #[test]
    fn moment_mirror_symmetry() {
        let s = StructureSpec::<f64>::default();
        let mut adc = Adc::new(AdcModel::noiseless(10)).unwrap();
        let c = simulate_reading(&Wrench::new(0.0, 0.08, 0.0), &s, &mut adc, 0).unwrap().reading.counts;
        assert_eq!(c[1], c[2]);
        assert_ne!(c[0], c[1]);
    }

    #[test]
    fn default_structure_passes_rated_range() {
        let s = StructureSpec::<f64>::default();
        let rep = check_deflection_range(&rated_range(), &s).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.corners.len(), 8);
        // heave 6/(3k) plus the worst tilt r·M·√2·sin(75°)/(k·1.5r²)
        let k = beam_stiffness(&s.beam).unwrap();
        let r = s.sensor_radius;
        let hand = 6.0 / (3.0 * k) + 0.1 * (2f64.sqrt() * 75f64.to_radians().sin()) / (k * 1.5 * r);
        assert!((rep.worst - hand).abs() < 1e-15, "{} vs {}", rep.worst, hand);
        assert!(rep.worst > 4.2e-5 && rep.worst < 4.3e-5);
    }

    #[test]
    fn thin_beam_fails_rated_range() {
        let mut s = StructureSpec::<f64>::default();
        s.beam.thickness = 2e-3;
        assert!((beam_stiffness(&s.beam).unwrap() - 68_359.375).abs() < 1e-6);
        let rep = check_deflection_range(&rated_range(), &s).unwrap();
        assert!(!rep.pass && rep.worst > 5e-5);
    }

    #[test]
    fn zero_bounds_pass_trivially() {
        let s = StructureSpec::<f64>::default();
        let rep = check_deflection_range(&Wrench::zero(), &s).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.worst, 0.0);
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    proptest! {
        #[test]
        fn deflection_is_linear(
            w1 in (-6.0f64..6.0, -0.1f64..0.1, -0.1f64..0.1),
            w2 in (-6.0f64..6.0, -0.1f64..0.1, -0.1f64..0.1),
            a in -3.0f64..3.0, b in -3.0f64..3.0,
        ) {
            let s = StructureSpec::<f64>::default();
            let w1 = Wrench::new(w1.0, w1.1, w1.2);
            let w2 = Wrench::new(w2.0, w2.1, w2.2);
            let lhs = wrench_to_deflections(&(w1 * a + w2 * b), &s).unwrap();
            let d1 = wrench_to_deflections(&w1, &s).unwrap();
            let d2 = wrench_to_deflections(&w2, &s).unwrap();
            let scale = lhs.iter().chain(&d1).chain(&d2).fold(0.0f64, |m, x| m.max(x.abs()));
            for i in 0..3 {
                prop_assert!((lhs[i] - (a * d1[i] + b * d2[i])).abs() <= 1e-12 * scale.max(1e-300) * 4.0);
            }
        }

        #[test]
        fn equiangular_layout_is_rotation_reciprocal(mx in -0.1f64..0.1, my in -0.1f64..0.1) {
            // Rotating the moment vector by +120° about z moves the load
            // pattern onto the next sensor.
            let s = StructureSpec::<f64>::default();
            let (c, sn) = (120f64.to_radians().cos(), 120f64.to_radians().sin());
            let rotated = Wrench::new(0.0, c * mx - sn * my, sn * mx + c * my);
            let d = wrench_to_deflections(&Wrench::new(0.0, mx, my), &s).unwrap();
            let dr = wrench_to_deflections(&rotated, &s).unwrap();
            let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
            for i in 0..3 {
                prop_assert!((dr[(i + 1) % 3] - d[i]).abs() <= 1e-12 * scale, "{:?} {:?}", d, dr);
            }
        }

        #[test]
        fn lattice_gaps_round_trip(count in 0u16..=1023) {
            let s = StructureSpec::<f64>::default();
            let gap = count_to_gap(count, &s, 10);
            let back = quantize_gap(gap, &s, 10, 0.0).unwrap();
            prop_assert_eq!(back, count);
            prop_assert_eq!(count_to_gap(back, &s, 10), gap);
        }

        #[test]
        fn counts_monotone_in_gap(g1 in 0.0f64..100e-6, g2 in 0.0f64..100e-6) {
            let s = StructureSpec::<f64>::default();
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            prop_assert!(quantize_gap(lo, &s, 10, 0.0).unwrap() <= quantize_gap(hi, &s, 10, 0.0).unwrap());
        }

        #[test]
        fn f32_and_f64_deflections_agree(fz in -6.0f64..6.0, mx in -0.1f64..0.1, my in -0.1f64..0.1) {
            let d64 = wrench_to_deflections(&Wrench::new(fz, mx, my), &StructureSpec::<f64>::default()).unwrap();
            let d32 = wrench_to_deflections(&Wrench::new(fz as f32, mx as f32, my as f32), &StructureSpec::<f32>::default()).unwrap();
            for i in 0..3 {
                prop_assert!(close(d64[i], d32[i] as f64, 1e-3) || (d64[i] - d32[i] as f64).abs() < 1e-10);
            }
        }
    }
}
