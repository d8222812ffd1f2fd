use rayon::prelude::*;
use serde::Serialize;

use super::{
    DropOldestQueue, ForceFrame, FusedRecord, FusionConfig, FusionError, ImageFrame, Scenario,
};
use crate::calibration::{estimate_wrench, CalibrationMatrix};
use crate::classifier::{FeatureExtractor, SoftmaxModel};
use crate::physics::{simulate_reading, Adc, AdcModel, StructureSpec};
use crate::rng::{derive_seed, indexed_substream};
use crate::tactile::{shade, stamp_heightmap, Grid, HeightMap, LightRig, ShapeClass, StampOptions, TactileImage};

/// Everything that turns a scripted timeline into sensor output.
#[derive(Debug, Clone)]
pub struct SensorSetup {
    pub structure: StructureSpec<f64>,
    pub adc: AdcModel,
    pub calibration: CalibrationMatrix<f64>,
    pub grid: Grid,
    pub rig: LightRig,
    pub stamp: StampOptions,
    pub image_noise: f64,
    pub classifier: Option<(SoftmaxModel, FeatureExtractor)>,
}

impl SensorSetup {
    /// Uses the structure's ideal calibration matrix.
    pub fn ideal(structure: StructureSpec<f64>, adc: AdcModel, grid: Grid) -> Result<Self, FusionError> {
        let calibration = CalibrationMatrix::from_structure(&structure, adc.bits)?;
        Ok(Self {
            structure,
            adc,
            calibration,
            grid,
            rig: LightRig::default(),
            stamp: StampOptions::default(),
            image_noise: 0.01,
            classifier: None,
        })
    }

    pub fn with_classifier(mut self, model: SoftmaxModel, extractor: FeatureExtractor) -> Self {
        self.classifier = Some((model, extractor));
        self
    }

    /// Renders the gel at `t_ns`; `index` selects the noise substream.
    pub(crate) fn render(
        &self,
        scenario: &Scenario,
        t_ns: u64,
        index: usize,
        seed: u64,
    ) -> Result<(TactileImage, Option<ShapeClass>, Option<ShapeClass>), FusionError> {
        let contact = scenario.contact_at(t_ns);
        let map = match contact {
            Some(c) => stamp_heightmap(c.shape, &c.pose, c.depth, self.grid, &self.stamp)?,
            None => HeightMap::zeros(Grid::new(self.grid.width, self.grid.height)?, self.stamp.cell_size),
        };
        let mut image = shade(&map, &self.rig)?;
        let mut rng = indexed_substream(seed, "fusion-image", index as u64);
        image.add_noise(self.image_noise, &mut rng)?;
        let truth = contact.map(|c| c.shape);
        let label = match &self.classifier {
            Some((model, ex)) => model.predict(ex, &image).ok().map(|p| p.label),
            None => truth,
        };
        Ok((image, label, truth))
    }
}

impl Default for SensorSetup {
    fn default() -> Self {
        Self::ideal(StructureSpec::default(), AdcModel::default(), Grid::default()).expect("default setup is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PipelineStats {
    pub force_expected: usize,
    pub force_frames: usize,
    pub force_drops: usize,
    pub force_saturated: usize,
    pub images_captured: usize,
    pub image_frames: usize,
    pub image_drops: usize,
    pub fused: usize,
    pub unmatched: usize,
    /// Largest deviation of a sample interval from the nominal period.
    pub force_jitter_ns: f64,
    pub image_jitter_ns: f64,
    pub max_abs_delta_ns: u64,
    /// Capture to end of processing.
    pub max_image_latency_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub force: Vec<ForceFrame>,
    pub images: Vec<ImageFrame>,
    pub fused: Vec<FusedRecord>,
    pub stats: PipelineStats,
}

/// For each image, the nearest force sample (ties to the earlier one).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    /// `(image index, force index, t_image - t_force)`.
    pub pairs: Vec<(usize, usize, i64)>,
    /// Images whose nearest force sample is beyond tolerance.
    pub unmatched: Vec<usize>,
}

fn check_strict(ts: &[u64], channel: &'static str) -> Result<(), FusionError> {
    match ts.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(FusionError::Unsorted { channel, index: i + 1 }),
        None => Ok(()),
    }
}

/// Single forward pass over both sorted timestamp lists.
pub fn align_timestamps(force: &[u64], images: &[u64], tolerance_ns: u64) -> Result<Alignment, FusionError> {
    check_strict(force, "force")?;
    check_strict(images, "image")?;
    let mut out = Alignment::default();
    let mut j = 0usize;
    for (i, &t) in images.iter().enumerate() {
        if force.is_empty() {
            out.unmatched.push(i);
            continue;
        }
        while j + 1 < force.len() && force[j + 1].abs_diff(t) < force[j].abs_diff(t) {
            j += 1;
        }
        let gap = force[j].abs_diff(t);
        if gap <= tolerance_ns {
            out.pairs.push((i, j, t as i64 - force[j] as i64));
        } else {
            out.unmatched.push(i);
        }
    }
    Ok(out)
}

pub fn align(
    force: &[ForceFrame],
    images: &[ImageFrame],
    tolerance_ns: u64,
) -> Result<(Vec<FusedRecord>, usize), FusionError> {
    let ft: Vec<u64> = force.iter().map(|f| f.timestamp_ns).collect();
    let it: Vec<u64> = images.iter().map(|f| f.timestamp_ns).collect();
    let a = align_timestamps(&ft, &it, tolerance_ns)?;
    let fused = a
        .pairs
        .iter()
        .map(|&(i, j, d)| FusedRecord {
            t_image_ns: images[i].timestamp_ns,
            t_force_ns: force[j].timestamp_ns,
            delta_ns: d,
            wrench: force[j].wrench,
            label: images[i].label,
        })
        .collect();
    Ok((fused, a.unmatched.len()))
}

pub(crate) fn lattice(rate: f64, duration_s: f64) -> Vec<u64> {
    let n = (rate * duration_s).round() as usize;
    (0..n).map(|i| (i as f64 * 1e9 / rate).round() as u64).collect()
}

pub(crate) fn max_jitter(ts: &[u64], period_ns: f64) -> f64 {
    ts.windows(2).map(|w| ((w[1] - w[0]) as f64 - period_ns).abs()).fold(0.0, f64::max)
}

pub(crate) fn check_duration(duration_s: f64) -> Result<(), FusionError> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(FusionError::InvalidConfig(format!("duration must be positive, got {duration_s}")));
    }
    Ok(())
}

pub(crate) fn force_frame(
    setup: &SensorSetup,
    scenario: &Scenario,
    adc: &mut Adc,
    t: u64,
) -> Result<ForceFrame, FusionError> {
    let truth = scenario.wrench_at(t);
    let sim = simulate_reading(&truth, &setup.structure, adc, t)?;
    Ok(ForceFrame {
        timestamp_ns: t,
        reading: sim.reading,
        wrench: estimate_wrench(&sim.reading, &setup.calibration),
        truth,
        saturated: sim.saturated(),
    })
}

pub(crate) fn fusion_adc(cfg: &FusionConfig, setup: &SensorSetup) -> Result<Adc, FusionError> {
    Ok(Adc::new(AdcModel { rng_seed: derive_seed(cfg.seed, "fusion-adc"), ..setup.adc })?)
}

pub(crate) fn finish(
    cfg: &FusionConfig,
    duration_s: f64,
    force: Vec<ForceFrame>,
    images: Vec<ImageFrame>,
    images_captured: usize,
    image_drops: usize,
) -> Result<PipelineOutput, FusionError> {
    let (fused, unmatched) = if cfg.mode.force_enabled() && cfg.mode.texture_enabled() {
        align(&force, &images, cfg.tolerance_ns())?
    } else {
        (Vec::new(), 0)
    };
    let force_expected = if cfg.mode.force_enabled() { (cfg.force_rate * duration_s).round() as usize } else { 0 };
    let ft: Vec<u64> = force.iter().map(|f| f.timestamp_ns).collect();
    let it: Vec<u64> = images.iter().map(|f| f.timestamp_ns).collect();
    let stats = PipelineStats {
        force_expected,
        force_frames: force.len(),
        force_drops: force_expected.saturating_sub(force.len()),
        force_saturated: force.iter().filter(|f| f.saturated).count(),
        images_captured,
        image_frames: images.len(),
        image_drops,
        fused: fused.len(),
        unmatched,
        force_jitter_ns: max_jitter(&ft, cfg.force_period_ns()),
        // Dropped frames leave gaps, so judge capture cadence on kept frames
        // only when nothing was dropped.
        image_jitter_ns: if image_drops == 0 { max_jitter(&it, cfg.image_period_ns()) } else { f64::NAN },
        max_abs_delta_ns: fused.iter().map(|r| r.delta_ns.unsigned_abs()).max().unwrap_or(0),
        max_image_latency_ns: images.iter().map(|f| f.completed_ns - f.timestamp_ns).max().unwrap_or(0),
    };
    Ok(PipelineOutput { force, images, fused, stats })
}

/// Runs both channels on a simulated clock. The force channel emits on its
/// own lattice; captured images pass through a drop-oldest queue to a single
/// worker that spends `image_cost_s` on each. Frames still queued when the
/// clock stops are drained.
pub fn run_pipeline(
    cfg: &FusionConfig,
    setup: &SensorSetup,
    scenario: &Scenario,
    duration_s: f64,
) -> Result<PipelineOutput, FusionError> {
    cfg.validate()?;
    scenario.validate()?;
    check_duration(duration_s)?;

    let mut force = Vec::new();
    if cfg.mode.force_enabled() {
        let mut adc = fusion_adc(cfg, setup)?;
        for t in lattice(cfg.force_rate, duration_s) {
            force.push(force_frame(setup, scenario, &mut adc, t)?);
        }
    }

    let mut images = Vec::new();
    let (mut captured, mut drops) = (0, 0);
    if cfg.mode.texture_enabled() {
        let captures = lattice(cfg.image_rate, duration_s);
        captured = captures.len();
        let cost = (cfg.image_cost_s * 1e9).round() as u64;
        let mut queue = DropOldestQueue::new(cfg.queue_depth);
        let mut free_at = 0u64;
        let mut done: Vec<(usize, u64, u64)> = Vec::new();
        let mut serve = |queue: &mut DropOldestQueue<(usize, u64)>, until: Option<u64>, free_at: &mut u64| {
            while let Some(&(j, t)) = queue.front() {
                let start = (*free_at).max(t);
                if until.is_some_and(|u| start > u) {
                    break;
                }
                queue.pop();
                *free_at = start + cost;
                done.push((j, t, *free_at));
            }
        };
        for (j, &t) in captures.iter().enumerate() {
            serve(&mut queue, Some(t), &mut free_at);
            queue.push((j, t));
        }
        serve(&mut queue, None, &mut free_at);
        drops = queue.dropped();

        images = done
            .par_iter()
            .map(|&(j, t, fin)| {
                let (image, label, truth) = setup.render(scenario, t, j, cfg.seed)?;
                Ok(ImageFrame { timestamp_ns: t, index: j, image, label, truth, completed_ns: fin })
            })
            .collect::<Result<Vec<_>, FusionError>>()?;
    }
    finish(cfg, duration_s, force, images, captured, drops)
}

/// Runs with a slow image stage and checks that the force channel stayed
/// complete. Costs above ten image periods are outside the contract.
pub fn backpressure_test(
    cfg: &FusionConfig,
    setup: &SensorSetup,
    scenario: &Scenario,
    duration_s: f64,
    slow_image_cost_s: f64,
) -> Result<PipelineStats, FusionError> {
    if !(slow_image_cost_s >= 0.0 && slow_image_cost_s <= 10.0 / cfg.image_rate) {
        return Err(FusionError::InvalidConfig(format!(
            "image cost {slow_image_cost_s} s exceeds ten image periods"
        )));
    }
    let run = FusionConfig { image_cost_s: slow_image_cost_s, ..*cfg };
    let out = run_pipeline(&run, setup, scenario, duration_s)?;
    let s = out.stats;
    if s.force_drops != 0 {
        return Err(FusionError::ForceIncomplete { expected: s.force_expected, got: s.force_frames });
    }
    Ok(s)
}
