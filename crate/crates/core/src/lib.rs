//! Software model of a combined optoelectronic force/torque unit and
//! GelSight-style tactile camera.
//!
//! * [`physics`]: load → beam deflection → gap → ADC counts.
//! * [`calibration`]: least-squares calibration matrix, RMSE / R² evaluation.
//! * [`tactile`]: shape stamps, photometric shading, labelled image sets.
//! * [`classifier`]: mask features and a softmax contact-shape classifier.
//! * [`fusion`]: force and image channels, alignment, `.oft` logs.
//! * [`config`]: flat `key = value` run configuration.
//!
//! The physics and calibration math is generic over [`Real`] (`f32`/`f64`);
//! the aliases below pin the common instantiations. Imaging, classification
//! and fusion work in `f64`.

pub mod calibration;
pub mod classifier;
pub mod config;
pub mod fusion;
pub mod linalg;
pub mod physics;
pub mod rng;
pub mod scalar;
pub mod tactile;

pub use calibration::{
    estimate_shear, estimate_wrench, fit_calibration, paper_matrix, tare, CalibrationError,
    CalibrationLog, CalibrationMatrix, FitReport, LogRow,
};
pub use physics::{
    beam_stiffness, check_deflection_range, simulate_reading, wrench_to_deflections, Adc, AdcModel, BeamSpec,
    PhysicsError, SensorReading, StructureSpec, Wrench,
};
pub use scalar::Real;
pub use classifier::{extract_features, FeatureVector, SoftmaxModel};
pub use config::Config;
pub use fusion::{run_pipeline, FusionConfig, FusionMode};
pub use tactile::{ShapeClass, TactileError, TactileImage};

pub type WrenchF64 = Wrench<f64>;
pub type WrenchF32 = Wrench<f32>;
pub type BeamSpecF64 = BeamSpec<f64>;
pub type BeamSpecF32 = BeamSpec<f32>;
pub type StructureSpecF64 = StructureSpec<f64>;
pub type StructureSpecF32 = StructureSpec<f32>;
pub type CalibrationMatrixF64 = CalibrationMatrix<f64>;
pub type CalibrationMatrixF32 = CalibrationMatrix<f32>;
pub type CalibrationLogF64 = CalibrationLog<f64>;
pub type FitReportF64 = FitReport<f64>;
