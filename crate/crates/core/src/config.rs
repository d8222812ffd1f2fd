//! Flat `key = value` configuration. `#` starts a comment; unknown keys
//! are rejected so typos do not silently fall back to defaults.

use std::path::Path;

use crate::fusion::{FusionConfig, FusionMode};
use crate::physics::{AdcModel, StructureSpec};
use crate::tactile::Grid;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub const KEYS: [&str; 17] = [
    "elastic_modulus",
    "beam_width",
    "beam_thickness",
    "beam_length",
    "sensor_radius",
    "sensor_angles_deg",
    "gap_initial",
    "gap_range",
    "adc_bits",
    "noise_sigma",
    "seed",
    "force_rate",
    "image_rate",
    "align_tolerance_ns",
    "mode",
    "image_width",
    "image_height",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub structure: StructureSpec<f64>,
    pub adc: AdcModel,
    pub seed: u64,
    pub fusion: FusionConfig,
    pub grid: Grid,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            structure: StructureSpec::default(),
            adc: AdcModel::default(),
            seed: 0,
            fusion: FusionConfig::default(),
            grid: Grid::default(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut width = cfg.grid.width;
        let mut height = cfg.grid.height;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{body}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            let key = KEYS
                .iter()
                .copied()
                .find(|&known| known == k)
                .ok_or_else(|| ConfigError::UnknownKey { line, key: k.to_string() })?;
            if seen.contains(&key) {
                return Err(ConfigError::Duplicate { line, key: k.to_string() });
            }
            seen.push(key);
            let bad = |message: String| ConfigError::BadValue { line, key: key.to_string(), message };
            let real = || v.parse::<f64>().map_err(|e| bad(e.to_string()));
            let int = || v.parse::<u64>().map_err(|e| bad(e.to_string()));
            match key {
                "elastic_modulus" => cfg.structure.beam.elastic_modulus = real()?,
                "beam_width" => cfg.structure.beam.width = real()?,
                "beam_thickness" => cfg.structure.beam.thickness = real()?,
                "beam_length" => cfg.structure.beam.length = real()?,
                "sensor_radius" => cfg.structure.sensor_radius = real()?,
                "sensor_angles_deg" => {
                    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(bad(format!("need three comma-separated angles, got {}", parts.len())));
                    }
                    for (dst, p) in cfg.structure.sensor_angles.iter_mut().zip(parts) {
                        *dst = p.parse::<f64>().map_err(|e| bad(e.to_string()))?.to_radians();
                    }
                }
                "gap_initial" => cfg.structure.gap_initial = real()?,
                "gap_range" => cfg.structure.gap_range = real()?,
                "adc_bits" => cfg.adc.bits = u32::try_from(int()?).map_err(|e| bad(e.to_string()))?,
                "noise_sigma" => cfg.adc.noise_sigma = real()?,
                "seed" => cfg.seed = int()?,
                "force_rate" => cfg.fusion.force_rate = real()?,
                "image_rate" => cfg.fusion.image_rate = real()?,
                "align_tolerance_ns" => cfg.fusion.align_tolerance_ns = Some(int()?),
                "mode" => cfg.fusion.mode = v.parse::<FusionMode>().map_err(|e| bad(e.to_string()))?,
                "image_width" => width = int()? as usize,
                "image_height" => height = int()? as usize,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        cfg.grid = Grid::new(width, height).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.adc.rng_seed = cfg.seed;
        cfg.fusion.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.structure.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.adc.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.fusion.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Rewrites the seed everywhere it fans out.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.adc.rng_seed = seed;
        self.fusion.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(Config::parse("# nothing\n\n").unwrap(), Config::default());
    }

    #[test]
    fn every_key_parses() {
        let text = "\
elastic_modulus = 3.0e9
beam_width = 6e-3   # wider
beam_thickness = 2e-3
beam_length = 9e-3
sensor_radius = 0.03
sensor_angles_deg = 0, 120, 240
gap_initial = 40e-6
gap_range = 100e-6
adc_bits = 12
noise_sigma = 0.5
seed = 42
force_rate = 500
image_rate = 25
align_tolerance_ns = 1000
mode = ForceOnly
image_width = 64
image_height = 48
";
        let c = Config::parse(text).unwrap();
        assert_eq!(c.structure.beam.width, 6e-3);
        assert!((c.structure.sensor_angles[1] - 120f64.to_radians()).abs() < 1e-15);
        assert_eq!(c.adc.bits, 12);
        assert_eq!((c.seed, c.adc.rng_seed, c.fusion.seed), (42, 42, 42));
        assert_eq!(c.fusion.mode, FusionMode::ForceOnly);
        assert_eq!(c.fusion.tolerance_ns(), 1000);
        assert_eq!((c.grid.width, c.grid.height), (64, 48));
        assert_eq!(text.lines().count(), KEYS.len());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(Config::parse("seed = 1\nspeed = 3\n"), Err(ConfigError::UnknownKey { line: 2, .. })));
        assert!(matches!(Config::parse("seed\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(Config::parse("seed = x\n"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(Config::parse("seed = 1\nseed = 2\n"), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(matches!(Config::parse("sensor_angles_deg = 0, 90\n"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(Config::parse("mode = fast\n"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(Config::parse("sensor_angles_deg = 0, 0, 0\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::parse("image_width = 8\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::parse("adc_bits = 20\n"), Err(ConfigError::Invalid(_))));
    }
}
