//! Equivalent-runtime estimation.
//!
//! A reference workload's runtime is modeled as a linear function of the
//! machine's single-thread benchmark score. Writing the fitted line as
//! `slope * s + intercept` with pole `alpha = -intercept / slope`, the
//! equivalent runtime of a process that took `t1` on a machine with score
//! `s1` is estimated on a machine with score `s2` as
//!
//! ```text
//! t2_hat = t1 * (alpha - s2) / (alpha - s1) * gamma
//! ```
//!
//! with `gamma` in (0, 1] a conservative shrink factor. The gamma curve maps
//! the user-facing risk `p_gamma` (probability of over-estimating the
//! equivalent runtime) to `gamma`; it is calibrated by leave-out
//! cross-validation over a measured runtime matrix.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("need at least 2 points with 2 distinct scores to fit the regression")]
    SingularFit,
    #[error("runtime must be positive, got {0}")]
    NonPositiveRuntime(f64),
    #[error("score {score} is at or beyond the pole alpha = {alpha}; the model predicts a non-positive runtime there")]
    BeyondPole { score: f64, alpha: f64 },
    #[error("gamma must be in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("gamma grid must be strictly increasing within (0, 1]")]
    InvalidGammaGrid,
    #[error("gamma curve points must have strictly increasing gamma and non-decreasing p_gamma")]
    InvalidCurve,
    #[error("gamma curve is empty")]
    EmptyCurve,
    #[error("p_gamma {p_gamma} is outside the calibrated range [{min}, {max}]; refusing to extrapolate")]
    Extrapolation { p_gamma: f64, min: f64, max: f64 },
    #[error("need at least {need_machines} machines and {need_processes} processes, got {machines} x {processes}")]
    InsufficientData {
        machines: usize,
        processes: usize,
        need_machines: usize,
        need_processes: usize,
    },
    #[error("runtime matrix entry [{machine}][{process}] must be positive, got {value}")]
    NonPositiveMatrixEntry {
        machine: usize,
        process: usize,
        value: f64,
    },
    #[error("runtime matrix row lengths do not match the machine list")]
    RaggedMatrix,
    #[error("machine score must be positive, got {0}")]
    NonPositiveScore(f64),
}

/// A CPU model and its single-thread benchmark score.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineScore {
    pub cpu_model: String,
    pub score: f64,
}

impl MachineScore {
    pub fn new(cpu_model: impl Into<String>, score: f64) -> Result<Self, ModelError> {
        if !(score > 0.0) {
            return Err(ModelError::NonPositiveScore(score));
        }
        Ok(Self {
            cpu_model: cpu_model.into(),
            score,
        })
    }
}

/// Fitted runtime-vs-score line for the reference workload.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationModel {
    pub slope: f64,
    pub intercept: f64,
    /// Pole of the estimator ratio: -intercept / slope.
    pub alpha: f64,
    pub score_min: f64,
    pub score_max: f64,
    pub fit_rmse: f64,
}

impl CalibrationModel {
    pub fn from_parts(
        slope: f64,
        intercept: f64,
        score_min: f64,
        score_max: f64,
        fit_rmse: f64,
    ) -> Result<Self, ModelError> {
        if slope == 0.0 || !slope.is_finite() {
            return Err(ModelError::SingularFit);
        }
        Ok(Self {
            slope,
            intercept,
            alpha: -intercept / slope,
            score_min,
            score_max,
            fit_rmse,
        })
    }

    /// A negative slope means faster machines finish sooner, as they must.
    pub fn is_plausible(&self) -> bool {
        self.slope < 0.0
    }
}

/// Applicability of the model at a given score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applicability {
    Ok,
    /// Outside the fitted score interval but below the pole: usable with a
    /// warning.
    WarnOutOfRange,
    /// At or beyond the pole: the model predicts a non-positive runtime.
    ErrorBeyondPole,
}

/// An estimated runtime plus the applicability classification of both scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub seconds: f64,
    pub s1_status: Applicability,
    pub s2_status: Applicability,
}

impl Estimate {
    pub fn out_of_range(&self) -> bool {
        self.s1_status == Applicability::WarnOutOfRange
            || self.s2_status == Applicability::WarnOutOfRange
    }
}

/// One point of the gamma calibration curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPoint {
    pub gamma: f64,
    pub p_gamma: f64,
}

/// Monotone table linking the correction factor gamma to the probability
/// p_gamma of over-estimating the equivalent runtime.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCurve {
    points: Vec<GammaPoint>,
    pub provenance: Vec<String>,
}

impl GammaCurve {
    pub fn new(points: Vec<GammaPoint>, provenance: Vec<String>) -> Result<Self, ModelError> {
        for pair in points.windows(2) {
            if !(pair[1].gamma > pair[0].gamma) || pair[1].p_gamma < pair[0].p_gamma {
                return Err(ModelError::InvalidCurve);
            }
        }
        for p in &points {
            if !(p.gamma > 0.0 && p.gamma <= 1.0) || !(0.0..=1.0).contains(&p.p_gamma) {
                return Err(ModelError::InvalidCurve);
            }
        }
        Ok(Self { points, provenance })
    }

    pub fn points(&self) -> &[GammaPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Covered p_gamma range, if any points exist.
    pub fn p_gamma_range(&self) -> Option<(f64, f64)> {
        match (self.points.first(), self.points.last()) {
            (Some(first), Some(last)) => Some((first.p_gamma, last.p_gamma)),
            _ => None,
        }
    }
}

/// Ordinary least squares fit of runtime against score. The validity
/// interval is set to the score extremes of the data.
pub fn fit_reference_regression(points: &[(f64, f64)]) -> Result<CalibrationModel, ModelError> {
    if points.len() < 2 {
        return Err(ModelError::SingularFit);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(ModelError::SingularFit);
    }
    let slope = sxy / sxx;
    if slope == 0.0 {
        return Err(ModelError::SingularFit);
    }
    let intercept = mean_y - slope * mean_x;
    let mse = points
        .iter()
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / n;
    let score_min = points.iter().map(|(x, _)| *x).fold(f64::INFINITY, f64::min);
    let score_max = points
        .iter()
        .map(|(x, _)| *x)
        .fold(f64::NEG_INFINITY, f64::max);
    CalibrationModel::from_parts(slope, intercept, score_min, score_max, mse.sqrt())
}

/// Unbiased (gamma = 1) equivalent-runtime estimate,
/// `t1 * (alpha - s2) / (alpha - s1)`.
pub fn centered_estimate(
    t1: f64,
    s1: f64,
    s2: f64,
    model: &CalibrationModel,
) -> Result<Estimate, ModelError> {
    if !(t1 > 0.0) {
        return Err(ModelError::NonPositiveRuntime(t1));
    }
    let s1_status = check_applicability(s1, model);
    let s2_status = check_applicability(s2, model);
    for (s, status) in [(s1, s1_status), (s2, s2_status)] {
        if status == Applicability::ErrorBeyondPole {
            return Err(ModelError::BeyondPole {
                score: s,
                alpha: model.alpha,
            });
        }
    }
    Ok(Estimate {
        seconds: t1 * (model.alpha - s2) / (model.alpha - s1),
        s1_status,
        s2_status,
    })
}

/// Conservatively biased estimate: `centered_estimate * gamma`.
pub fn biased_estimate(
    t1: f64,
    s1: f64,
    s2: f64,
    model: &CalibrationModel,
    gamma: f64,
) -> Result<Estimate, ModelError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(ModelError::InvalidGamma(gamma));
    }
    let mut est = centered_estimate(t1, s1, s2, model)?;
    est.seconds *= gamma;
    Ok(est)
}

/// Inverse lookup on the gamma curve: piecewise-linear interpolation of
/// gamma at the requested risk level. No silent extrapolation.
pub fn gamma_for(p_gamma: f64, curve: &GammaCurve) -> Result<f64, ModelError> {
    let (min, max) = curve.p_gamma_range().ok_or(ModelError::EmptyCurve)?;
    if p_gamma < min || p_gamma > max {
        return Err(ModelError::Extrapolation {
            p_gamma,
            min,
            max,
        });
    }
    let pts = curve.points();
    for pair in pts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if p_gamma >= lo.p_gamma && p_gamma <= hi.p_gamma {
            if hi.p_gamma == lo.p_gamma {
                // Flat segment: every gamma in it carries the same risk;
                // return the largest (least conservative consistent choice).
                return Ok(hi.gamma);
            }
            let t = (p_gamma - lo.p_gamma) / (hi.p_gamma - lo.p_gamma);
            return Ok(lo.gamma + t * (hi.gamma - lo.gamma));
        }
    }
    // Single-point curve, p_gamma == that point.
    Ok(pts[pts.len() - 1].gamma)
}

/// Classifies a score against the model: inside the fitted interval, outside
/// it but below the pole, or at/beyond the pole.
pub fn check_applicability(s: f64, model: &CalibrationModel) -> Applicability {
    if s >= model.alpha {
        Applicability::ErrorBeyondPole
    } else if s >= model.score_min && s <= model.score_max {
        Applicability::Ok
    } else {
        Applicability::WarnOutOfRange
    }
}

/// Measured runtimes of `processes` on `machines`; `runtimes[m][p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeMatrix {
    pub machines: Vec<MachineScore>,
    pub processes: Vec<String>,
    runtimes: Vec<Vec<f64>>,
}

impl RuntimeMatrix {
    pub fn new(
        machines: Vec<MachineScore>,
        processes: Vec<String>,
        runtimes: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        if runtimes.len() != machines.len() {
            return Err(ModelError::RaggedMatrix);
        }
        for (m, row) in runtimes.iter().enumerate() {
            if row.len() != processes.len() {
                return Err(ModelError::RaggedMatrix);
            }
            for (p, &value) in row.iter().enumerate() {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(ModelError::NonPositiveMatrixEntry {
                        machine: m,
                        process: p,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            machines,
            processes,
            runtimes,
        })
    }

    pub fn n_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn n_processes(&self) -> usize {
        self.processes.len()
    }

    pub fn runtime(&self, machine: usize, process: usize) -> f64 {
        self.runtimes[machine][process]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.runtimes
    }
}

// Strict comparison "estimate > truth" with a hair of relative slack, so
// that exactly-proportional data does not flip counts on the last ulp.
const LONGER_REL_SLACK: f64 = 1e-9;

/// Leave-out cross-validation estimate of P[t2_hat > t2] for a given gamma.
///
/// For every test process and every ordered machine pair, the regression is
/// refit on the remaining machines, with the remaining processes' runtimes
/// summed per machine to form one composite reference workload. The left-out
/// runtime on the first machine is then projected onto the second and
/// compared against the truth.
pub fn estimate_p_longer(gamma: f64, matrix: &RuntimeMatrix) -> Result<f64, ModelError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(ModelError::InvalidGamma(gamma));
    }
    let m = matrix.n_machines();
    let p = matrix.n_processes();
    if m < 4 || p < 2 {
        return Err(ModelError::InsufficientData {
            machines: m,
            processes: p,
            need_machines: 4,
            need_processes: 2,
        });
    }

    // Total runtime of all processes per machine; training aggregates are
    // obtained by subtracting the test process.
    let totals: Vec<f64> = (0..m)
        .map(|mi| (0..p).map(|pi| matrix.runtime(mi, pi)).sum())
        .collect();

    let mut total_folds = 0u64;
    let mut longer = 0u64;
    for test_process in 0..p {
        for cpu1 in 0..m {
            for cpu2 in 0..m {
                if cpu2 == cpu1 {
                    continue;
                }
                let train: Vec<(f64, f64)> = (0..m)
                    .filter(|&mi| mi != cpu1 && mi != cpu2)
                    .map(|mi| {
                        (
                            matrix.machines[mi].score,
                            totals[mi] - matrix.runtime(mi, test_process),
                        )
                    })
                    .collect();
                let model = fit_reference_regression(&train)?;
                let s1 = matrix.machines[cpu1].score;
                let s2 = matrix.machines[cpu2].score;
                let t1 = matrix.runtime(cpu1, test_process);
                let t2 = matrix.runtime(cpu2, test_process);
                let t2_hat = t1 * (model.alpha - s2) / (model.alpha - s1) * gamma;
                total_folds += 1;
                if t2_hat > t2 * (1.0 + LONGER_REL_SLACK) {
                    longer += 1;
                }
            }
        }
    }
    Ok(longer as f64 / total_folds as f64)
}

/// Evaluates `estimate_p_longer` over a gamma grid. An empty grid yields an
/// empty curve (the caller decides how to warn about it).
pub fn build_gamma_curve(
    matrix: &RuntimeMatrix,
    gamma_grid: &[f64],
) -> Result<GammaCurve, ModelError> {
    for pair in gamma_grid.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(ModelError::InvalidGammaGrid);
        }
    }
    if let Some(&g) = gamma_grid.first() {
        if !(g > 0.0) {
            return Err(ModelError::InvalidGammaGrid);
        }
    }
    if let Some(&g) = gamma_grid.last() {
        if g > 1.0 {
            return Err(ModelError::InvalidGammaGrid);
        }
    }
    let mut points = Vec::with_capacity(gamma_grid.len());
    for &gamma in gamma_grid {
        points.push(GammaPoint {
            gamma,
            p_gamma: estimate_p_longer(gamma, matrix)?,
        });
    }
    GammaCurve::new(
        points,
        vec![format!(
            "leave-out cross-validation over {} machines x {} processes",
            matrix.n_machines(),
            matrix.n_processes()
        )],
    )
}
