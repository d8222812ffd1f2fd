//! Dual-rate sensing: a fast force channel and a slow image channel that
//! run alone or together, with nearest-timestamp pairing.

mod io;
mod oft;
mod pipeline;
mod scenario;
mod wallclock;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use io::{write_fused, write_image_log, ImageLogRecord, FUSED_HEADER};
pub use oft::{read_oft, write_oft, OftError, OftRecord, OftWriter, MAGIC as OFT_MAGIC, RECORD_LEN as OFT_RECORD_LEN};
pub use pipeline::{
    align, align_timestamps, backpressure_test, run_pipeline, Alignment, PipelineOutput, PipelineStats, SensorSetup,
};
pub use scenario::{read_scenario, write_scenario, Contact, Scenario, Segment, SCENARIO_HEADER};
pub use wallclock::run_wall_clock;

use crate::physics::{SensorReading, Wrench};
use crate::tactile::{ShapeClass, TactileImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FusionMode {
    ForceOnly,
    TextureOnly,
    Combined,
}

impl FusionMode {
    pub const ALL: [FusionMode; 3] = [FusionMode::ForceOnly, FusionMode::TextureOnly, FusionMode::Combined];

    pub fn force_enabled(self) -> bool {
        self != FusionMode::TextureOnly
    }

    pub fn texture_enabled(self) -> bool {
        self != FusionMode::ForceOnly
    }

    pub fn name(self) -> &'static str {
        match self {
            FusionMode::ForceOnly => "force-only",
            FusionMode::TextureOnly => "texture-only",
            FusionMode::Combined => "combined",
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mode `{0}` (valid: force-only, texture-only, combined)")]
pub struct UnknownMode(pub String);

impl FromStr for FusionMode {
    type Err = UnknownMode;

    /// Accepts `ForceOnly`, `force-only`, `force_only` and so on.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "forceonly" | "force" => Ok(FusionMode::ForceOnly),
            "textureonly" | "texture" => Ok(FusionMode::TextureOnly),
            "combined" | "both" => Ok(FusionMode::Combined),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub mode: FusionMode,
    /// Hz.
    pub force_rate: f64,
    /// Hz.
    pub image_rate: f64,
    /// `None` means half the force period.
    pub align_tolerance_ns: Option<u64>,
    /// Bounded image queue; the oldest frame goes when it overflows.
    pub queue_depth: usize,
    /// Simulated processing time per image frame, in seconds.
    pub image_cost_s: f64,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            mode: FusionMode::Combined,
            force_rate: 1000.0,
            image_rate: 30.0,
            align_tolerance_ns: None,
            queue_depth: 4,
            image_cost_s: 0.0,
            seed: 0,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        for (name, r) in [("force_rate", self.force_rate), ("image_rate", self.image_rate)] {
            if !(r.is_finite() && r > 0.0) {
                return Err(FusionError::InvalidConfig(format!("{name} must be positive, got {r}")));
            }
        }
        if self.queue_depth == 0 {
            return Err(FusionError::InvalidConfig("queue depth must be at least 1".into()));
        }
        if !(self.image_cost_s.is_finite() && self.image_cost_s >= 0.0) {
            return Err(FusionError::InvalidConfig(format!("image cost {}", self.image_cost_s)));
        }
        Ok(())
    }

    pub fn tolerance_ns(&self) -> u64 {
        self.align_tolerance_ns.unwrap_or_else(|| (0.5e9 / self.force_rate).round() as u64)
    }

    pub fn force_period_ns(&self) -> f64 {
        1e9 / self.force_rate
    }

    pub fn image_period_ns(&self) -> f64 {
        1e9 / self.image_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceFrame {
    pub timestamp_ns: u64,
    pub reading: SensorReading,
    /// Calibrated estimate.
    pub wrench: Wrench<f64>,
    /// Commanded load.
    pub truth: Wrench<f64>,
    pub saturated: bool,
}

impl ForceFrame {
    pub fn oft_record(&self) -> OftRecord {
        OftRecord { timestamp_ns: self.timestamp_ns, counts: self.reading.counts, wrench: self.wrench.to_array() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageFrame {
    /// Capture time.
    pub timestamp_ns: u64,
    /// Capture sequence number, counting dropped frames.
    pub index: usize,
    pub image: TactileImage,
    /// Classifier output when a model is attached, else the scripted shape.
    pub label: Option<ShapeClass>,
    pub truth: Option<ShapeClass>,
    /// When processing finished.
    pub completed_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamFrame {
    Force(ForceFrame),
    Image(ImageFrame),
}

impl StreamFrame {
    pub fn timestamp_ns(&self) -> u64 {
        match self {
            StreamFrame::Force(f) => f.timestamp_ns,
            StreamFrame::Image(i) => i.timestamp_ns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedRecord {
    pub t_image_ns: u64,
    pub t_force_ns: u64,
    /// `t_image - t_force`.
    pub delta_ns: i64,
    pub wrench: Wrench<f64>,
    pub label: Option<ShapeClass>,
}

/// Fixed-capacity FIFO that evicts its oldest entry instead of blocking.
#[derive(Debug, Clone)]
pub struct DropOldestQueue<T> {
    capacity: usize,
    items: VecDeque<T>,
    dropped: usize,
}

impl<T> DropOldestQueue<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self { capacity, items: VecDeque::with_capacity(capacity), dropped: 0 }
    }

    /// Returns the evicted entry, if any.
    pub fn push(&mut self, item: T) -> Option<T> {
        let evicted = if self.items.len() == self.capacity {
            self.dropped += 1;
            self.items.pop_front()
        } else {
            None
        };
        self.items.push_back(item);
        evicted
    }

    pub fn pop(&mut self) -> Option<T> {
        self.items.pop_front()
    }

    pub fn front(&self) -> Option<&T> {
        self.items.front()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("invalid fusion config: {0}")]
    InvalidConfig(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("{channel} timestamps are not strictly increasing at index {index}")]
    Unsorted { channel: &'static str, index: usize },
    #[error("force channel incomplete: {got} of {expected} frames")]
    ForceIncomplete { expected: usize, got: usize },
    #[error(transparent)]
    Physics(#[from] crate::physics::PhysicsError),
    #[error(transparent)]
    Tactile(#[from] crate::tactile::TactileError),
    #[error(transparent)]
    Oft(#[from] OftError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_parsing() {
        for (s, m) in [
            ("ForceOnly", FusionMode::ForceOnly),
            ("force-only", FusionMode::ForceOnly),
            ("TEXTURE_ONLY", FusionMode::TextureOnly),
            ("Combined", FusionMode::Combined),
        ] {
            assert_eq!(s.parse::<FusionMode>().unwrap(), m);
        }
        for m in FusionMode::ALL {
            assert_eq!(m.name().parse::<FusionMode>().unwrap(), m);
        }
        let err = "fast".parse::<FusionMode>().unwrap_err();
        assert!(err.to_string().contains("force-only, texture-only, combined"));
    }

    #[test]
    fn config_defaults() {
        let c = FusionConfig::default();
        assert_eq!(c.tolerance_ns(), 500_000);
        assert!(c.validate().is_ok());
        assert!(FusionConfig { force_rate: 0.0, ..c }.validate().is_err());
        assert!(FusionConfig { queue_depth: 0, ..c }.validate().is_err());
        assert_eq!(FusionConfig { align_tolerance_ns: Some(0), ..c }.tolerance_ns(), 0);
    }

    #[test]
    fn queue_drops_oldest() {
        let mut q = DropOldestQueue::new(2);
        assert_eq!(q.push(1), None);
        assert_eq!(q.push(2), None);
        assert_eq!(q.push(3), Some(1));
        assert_eq!(q.dropped(), 1);
        assert_eq!(q.pop(), Some(2));
        assert_eq!(q.pop(), Some(3));
        assert!(q.is_empty());
    }
}
