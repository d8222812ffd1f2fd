//! Linear calibration from tared ADC counts to the load triple.
//!
//! `[Fz, Mx, My]ᵀ = k · (counts − baseline)`, with `k` fitted by least
//! squares over a log of paired readings and reference loads. There is no
//! intercept column: the zero-load offset is removed by taring.

pub mod io;
pub mod metrics;

use crate::linalg::{self, Mat3, Vec3};
use crate::physics::{beam_stiffness, PhysicsError, SensorReading, StructureSpec, Wrench};
use crate::scalar::Real;
use rand::seq::SliceRandom;
use std::fmt;
use thiserror::Error;

pub use metrics::{max_abs_error, r_squared, rmse, MetricError};

/// Above this condition number of the Gram matrix `V·Vᵀ` the fit switches
/// from the normal equations to an SVD pseudoinverse of `V`.
pub const NORMAL_EQUATIONS_MAX_CONDITION: f64 = 1e8;

pub const MIN_FIT_ROWS: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("calibration needs at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("log timestamps decrease at row {row}")]
    Unsorted { row: usize },
    #[error(
        "singular fit: tared counts have no spread along direction [{:.4}, {:.4}, {:.4}]",
        direction[0], direction[1], direction[2]
    )]
    SingularFit { direction: [f64; 3] },
    #[error("taring needs at least one zero-load reading")]
    EmptyTare,
    #[error("contact height must be > 0, got {0}")]
    InvalidContactHeight(f64),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// Rows are (Fz, Mx, My); columns are tared counts (v1, v2, v3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationMatrix<T> {
    pub k: Mat3<T>,
    pub baseline: Vec3<T>,
}

impl<T: Real> CalibrationMatrix<T> {
    pub fn new(k: Mat3<T>, baseline: Vec3<T>) -> Self {
        Self { k, baseline }
    }

    pub fn is_finite(&self) -> bool {
        self.k.iter().flatten().chain(&self.baseline).all(|x| x.is_finite())
    }

    /// Applies the matrix to counts that are already tared.
    #[inline]
    pub fn apply_tared(&self, tared: &Vec3<T>) -> Wrench<T> {
        Wrench::from_array(linalg::mat_vec(&self.k, tared))
    }

    #[inline]
    pub fn tared(&self, counts: [u16; 3]) -> Vec3<T> {
        [0, 1, 2].map(|i| T::lit(counts[i] as f64) - self.baseline[i])
    }

    /// Exact inverse of the linearised forward model: the matrix an ideal
    /// fit converges to when quantization and noise vanish.
    pub fn from_structure(s: &StructureSpec<T>, bits: u32) -> Result<Self, PhysicsError> {
        s.validate()?;
        let kb = beam_stiffness(&s.beam)?;
        let full = T::lit(((1u32 << bits) - 1) as f64);
        let per_count = s.gap_range / full;
        let k = linalg::scale(&linalg::transpose(&s.geometry()), -kb * per_count);
        let rest = full * s.gap_initial / s.gap_range;
        Ok(Self::new(k, [rest; 3]))
    }
}

/// The published matrix, applied to tared counts, with zero baseline.
pub fn paper_matrix<T: Real>() -> CalibrationMatrix<T> {
    let k = [
        [-0.0201, -0.0109, -0.0267],
        [3.2639e-4, -1.0602e-4, -1.4194e-4],
        [0.1709e-4, -2.4107e-4, 6.6255e-4],
    ];
    CalibrationMatrix::new(k.map(|row| row.map(T::lit)), [T::zero(); 3])
}

/// `w = k · (counts − baseline)`.
#[inline]
pub fn estimate_wrench<T: Real>(reading: &SensorReading, cal: &CalibrationMatrix<T>) -> Wrench<T> {
    cal.apply_tared(&cal.tared(reading.counts))
}

/// Per-channel mean of zero-load readings.
pub fn tare<T: Real>(readings: &[SensorReading]) -> Result<Vec3<T>, CalibrationError> {
    if readings.is_empty() {
        return Err(CalibrationError::EmptyTare);
    }
    let n = T::lit(readings.len() as f64);
    let mut sum = [T::zero(); 3];
    for r in readings {
        for (s, &c) in sum.iter_mut().zip(&r.counts) {
            *s += T::lit(c as f64);
        }
    }
    Ok(sum.map(|s| s / n))
}

/// In-plane contact force from the two moments, assuming the force acts
/// at `contact_height` above the plate. A +x force at height h gives +My,
/// a +y force gives −Mx.
pub fn estimate_shear<T: Real>(w: &Wrench<T>, contact_height: T) -> Result<(T, T), CalibrationError> {
    if !(contact_height > T::zero() && contact_height.is_finite()) {
        return Err(CalibrationError::InvalidContactHeight(contact_height.to_f64_lossy()));
    }
    Ok((w.my / contact_height, -w.mx / contact_height))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow<T> {
    pub timestamp_ns: u64,
    pub counts: [u16; 3],
    pub wrench: Wrench<T>,
}

impl<T: Copy> LogRow<T> {
    pub fn reading(&self) -> SensorReading {
        SensorReading {
            timestamp_ns: self.timestamp_ns,
            counts: self.counts,
        }
    }
}

/// Paired readings and reference loads, recorded simultaneously.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationLog<T> {
    pub rows: Vec<LogRow<T>>,
}

impl<T: Real> CalibrationLog<T> {
    pub fn new(rows: Vec<LogRow<T>>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn check_order(&self) -> Result<(), CalibrationError> {
        match self
            .rows
            .windows(2)
            .position(|w| w[1].timestamp_ns < w[0].timestamp_ns)
        {
            Some(i) => Err(CalibrationError::Unsorted { row: i + 1 }),
            None => Ok(()),
        }
    }

    pub fn readings(&self) -> Vec<SensorReading> {
        self.rows.iter().map(LogRow::reading).collect()
    }

    /// Rows whose reference load is exactly zero; a natural tare set.
    pub fn zero_load_readings(&self) -> Vec<SensorReading> {
        self.rows
            .iter()
            .filter(|r| r.wrench == Wrench::zero())
            .map(LogRow::reading)
            .collect()
    }

    /// Shuffled split into (train, held-out). The train side gets
    /// `floor(ratio · n)` rows; each side keeps timestamp order.
    pub fn split(&self, ratio: f64, rng: &mut impl rand::Rng) -> (Self, Self) {
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.shuffle(rng);
        let n_train = ((ratio * self.rows.len() as f64) + 1e-9).floor() as usize;
        let (a, b) = idx.split_at(n_train.min(idx.len()));
        let pick = |ids: &[usize]| {
            let mut ids = ids.to_vec();
            ids.sort_unstable();
            Self::new(ids.into_iter().map(|i| self.rows[i]).collect())
        };
        (pick(a), pick(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    NormalEquations,
    Pseudoinverse,
}

/// Per-axis goodness of fit, axes in (Fz, Mx, My) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport<T> {
    pub rmse: [T; 3],
    /// `None` on an axis whose reference load is constant.
    pub r_squared: [Option<T>; 3],
    pub residual_max: [T; 3],
    /// Condition number of the Gram matrix of tared counts.
    pub condition_number: T,
    pub solver: Option<Solver>,
    pub rows: usize,
}

pub const AXES: [(&str, &str); 3] = [("fz", "N"), ("mx", "N·m"), ("my", "N·m")];

impl<T: Real> fmt::Display for FitReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>14} {:>10} {:>14}", "axis", "rmse", "r2", "max|res|")?;
        for (i, (name, unit)) in AXES.iter().enumerate() {
            let r2 = match self.r_squared[i] {
                Some(r) => format!("{:.6}", r.to_f64_lossy()),
                None => "n/a".to_string(),
            };
            writeln!(
                f,
                "{:<10} {:>14.6e} {:>10} {:>14.6e}",
                format!("{name} [{unit}]"),
                self.rmse[i].to_f64_lossy(),
                r2,
                self.residual_max[i].to_f64_lossy()
            )?;
        }
        let solver = match self.solver {
            Some(Solver::NormalEquations) => " (normal equations)",
            Some(Solver::Pseudoinverse) => " (pseudoinverse)",
            None => "",
        };
        write!(
            f,
            "rows {}  condition number {:.3e}{}",
            self.rows,
            self.condition_number.to_f64_lossy(),
            solver
        )
    }
}

fn tared_rows<T: Real>(log: &CalibrationLog<T>, baseline: &Vec3<T>) -> Vec<Vec3<T>> {
    log.rows
        .iter()
        .map(|r| [0, 1, 2].map(|i| T::lit(r.counts[i] as f64) - baseline[i]))
        .collect()
}

fn gram<T: Real>(rows: &[Vec3<T>]) -> Mat3<T> {
    let mut g = linalg::zeros();
    for v in rows {
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += v[i] * v[j];
            }
        }
    }
    g
}

fn gram_condition<T: Real>(g: &Mat3<T>) -> T {
    let (vals, _) = linalg::symmetric_eigen(g);
    if vals[2] <= T::zero() {
        T::infinity()
    } else {
        vals[0] / vals[2]
    }
}

/// Least-squares regression of loads on tared counts without intercept.
/// Returns the matrix, the Gram condition number and the solver used.
pub fn fit_matrix<T: Real>(
    tared: &[Vec3<T>],
    loads: &[Vec3<T>],
) -> Result<(Mat3<T>, T, Solver), CalibrationError> {
    assert_eq!(tared.len(), loads.len());
    let g = gram(tared);
    let cond = gram_condition(&g);
    if cond <= T::lit(NORMAL_EQUATIONS_MAX_CONDITION) {
        let mut cross_t = linalg::zeros::<T>();
        for (v, w) in tared.iter().zip(loads) {
            for i in 0..3 {
                for j in 0..3 {
                    cross_t[i][j] += v[i] * w[j];
                }
            }
        }
        if let Some(k_t) = linalg::solve(&g, &cross_t, T::epsilon()) {
            return Ok((linalg::transpose(&k_t), cond, Solver::NormalEquations));
        }
    }
    let svd = linalg::tall_svd(tared);
    let tol = svd.sigma[0] * T::epsilon() * T::lit(tared.len().max(3) as f64);
    if svd.sigma[0] == T::zero() || svd.sigma[2] <= tol {
        let col = if svd.sigma[0] == T::zero() { 0 } else { 2 };
        let dir = [0, 1, 2].map(|i| svd.v[i][col].to_f64_lossy());
        return Err(CalibrationError::SingularFit { direction: dir });
    }
    // X = V · Σ⁻¹ · Uᵀ · B, with B the N × 3 load rows; k = Xᵀ.
    let mut ut_b = linalg::zeros::<T>();
    for (u, w) in svd.u.iter().zip(loads) {
        for i in 0..3 {
            for j in 0..3 {
                ut_b[i][j] += u[i] * w[j];
            }
        }
    }
    for (i, row) in ut_b.iter_mut().enumerate() {
        for x in row.iter_mut() {
            *x /= svd.sigma[i];
        }
    }
    let x = linalg::mat_mul(&svd.v, &ut_b);
    Ok((linalg::transpose(&x), cond, Solver::Pseudoinverse))
}

/// Fits `k` on every row of the log (after subtracting `baseline`) and
/// reports the fit on those same rows.
pub fn fit_calibration<T: Real>(
    log: &CalibrationLog<T>,
    baseline: Vec3<T>,
) -> Result<(CalibrationMatrix<T>, FitReport<T>), CalibrationError> {
    if log.len() < MIN_FIT_ROWS {
        return Err(CalibrationError::TooFewRows {
            needed: MIN_FIT_ROWS,
            got: log.len(),
        });
    }
    log.check_order()?;
    let tared = tared_rows(log, &baseline);
    let loads: Vec<Vec3<T>> = log.rows.iter().map(|r| r.wrench.to_array()).collect();
    let (k, cond, solver) = fit_matrix(&tared, &loads)?;
    let cal = CalibrationMatrix::new(k, baseline);
    let mut report = evaluate(&cal, log)?;
    report.condition_number = cond;
    report.solver = Some(solver);
    Ok((cal, report))
}

/// Applies `cal` to every row of `log` and compares with the reference loads.
pub fn evaluate<T: Real>(cal: &CalibrationMatrix<T>, log: &CalibrationLog<T>) -> Result<FitReport<T>, CalibrationError> {
    if log.is_empty() {
        return Err(MetricError::TooFew { needed: 1, got: 0 }.into());
    }
    let tared = tared_rows(log, &cal.baseline);
    let mut pred: [Vec<T>; 3] = Default::default();
    let mut truth: [Vec<T>; 3] = Default::default();
    for (v, row) in tared.iter().zip(&log.rows) {
        let p = cal.apply_tared(v).to_array();
        let t = row.wrench.to_array();
        for a in 0..3 {
            pred[a].push(p[a]);
            truth[a].push(t[a]);
        }
    }
    let mut report = FitReport {
        rmse: [T::zero(); 3],
        r_squared: [None; 3],
        residual_max: [T::zero(); 3],
        condition_number: gram_condition(&gram(&tared)),
        solver: None,
        rows: log.len(),
    };
    for a in 0..3 {
        report.rmse[a] = rmse(&pred[a], &truth[a])?;
        report.residual_max[a] = max_abs_error(&pred[a], &truth[a])?;
        report.r_squared[a] = match r_squared(&pred[a], &truth[a]) {
            Ok(r) => Some(r),
            Err(MetricError::ConstantTruth) | Err(MetricError::TooFew { .. }) => None,
            Err(e) => return Err(e.into()),
        };
    }
    Ok(report)
}
