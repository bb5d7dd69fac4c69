//! Validation studies: synthetic machine fleets, prediction-error losses,
//! type-I error simulation, and Monte-Carlo verification that the corrected
//! p-value really is an upper bound on the adversarial rejection rate.
//!
//! All experiments are deterministic given a seed. Repetition `i` draws from
//! a stream derived from `(seed, i)`, so results do not depend on execution
//! order and repetitions could be farmed out concurrently.

use crate::runtime_model::{MachineScore, ModelError, RuntimeMatrix};
use crate::signtest::{
    open_unit, sign_test_p_value, stream_rng, Direction, PairedObservation,
};
use rand::Rng;
use rand_distr::{Binomial, Distribution, LogNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("need at least {need} {what}, got {got}")]
    InsufficientData {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("runtime values must be positive, got {0}")]
    NonPositiveRuntime(f64),
    #[error("input series is empty")]
    EmptySeries,
    #[error("machine '{0}' has zero runtime variance; correlation undefined")]
    ZeroVariance(String),
    #[error("noise parameter must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-cell multiplicative runtime noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// Uniform on [1-w, 1+w].
    MultiplicativeUniform { width: f64 },
    /// exp(N(0, sigma^2)); median 1.
    MultiplicativeLognormal { sigma: f64 },
}

/// Generator for a synthetic fleet whose noise-free runtimes follow
/// `cost_p * (slope*score + intercept)` — the proportional-machines
/// assumption that the calibration procedure relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFleet {
    pub machines: Vec<MachineScore>,
    pub process_costs: Vec<f64>,
    pub line_slope: f64,
    pub line_intercept: f64,
    pub noise: NoiseModel,
    pub seed: u64,
}

const MAX_NOISE_RETRIES: u32 = 64;

pub fn simulate_fleet(spec: &SyntheticFleet) -> Result<RuntimeMatrix, ExperimentError> {
    if spec.machines.len() < 2 {
        return Err(ExperimentError::InsufficientData {
            what: "machines",
            need: 2,
            got: spec.machines.len(),
        });
    }
    if spec.process_costs.is_empty() {
        return Err(ExperimentError::InsufficientData {
            what: "processes",
            need: 1,
            got: 0,
        });
    }
    match spec.noise {
        NoiseModel::MultiplicativeUniform { width } if !(width.is_finite() && width >= 0.0) => {
            return Err(ExperimentError::InvalidNoise(width));
        }
        NoiseModel::MultiplicativeLognormal { sigma } if !(sigma.is_finite() && sigma >= 0.0) => {
            return Err(ExperimentError::InvalidNoise(sigma));
        }
        _ => {}
    }
    let mut rng = stream_rng(spec.seed, 0);
    let mut columns = Vec::with_capacity(spec.machines.len());
    for machine in &spec.machines {
        let base = spec.line_slope * machine.score + spec.line_intercept;
        let mut column = Vec::with_capacity(spec.process_costs.len());
        for &cost in &spec.process_costs {
            let clean = cost * base;
            if !(clean > 0.0) {
                return Err(ExperimentError::NonPositiveRuntime(clean));
            }
            // Redraw rather than truncate non-positive outcomes so the noise
            // stays symmetric around 1 in the cases that matter.
            let mut value = clean * draw_noise(&mut rng, spec.noise);
            let mut retries = 0;
            while !(value > 0.0) && retries < MAX_NOISE_RETRIES {
                value = clean * draw_noise(&mut rng, spec.noise);
                retries += 1;
            }
            if !(value > 0.0) {
                return Err(ExperimentError::NonPositiveRuntime(value));
            }
            column.push(value);
        }
        columns.push(column);
    }
    let processes = (0..spec.process_costs.len())
        .map(|i| format!("proc{i:03}"))
        .collect();
    Ok(RuntimeMatrix::new(spec.machines.clone(), processes, columns)?)
}

fn draw_noise<R: Rng>(rng: &mut R, model: NoiseModel) -> f64 {
    match model {
        NoiseModel::None => 1.0,
        NoiseModel::MultiplicativeUniform { width } => rng.gen_range(1.0 - width..=1.0 + width),
        NoiseModel::MultiplicativeLognormal { sigma } => {
            if sigma == 0.0 {
                1.0
            } else {
                LogNormal::new(0.0, sigma).expect("sigma validated").sample(rng)
            }
        }
    }
}

/// |log2(t_hat / t)|: 0 is a perfect prediction, 1 means off by a factor of
/// two in either direction.
pub fn log_deviation_ratio(t_hat: f64, t: f64) -> Result<f64, ExperimentError> {
    if !(t_hat > 0.0) {
        return Err(ExperimentError::NonPositiveRuntime(t_hat));
    }
    if !(t > 0.0) {
        return Err(ExperimentError::NonPositiveRuntime(t));
    }
    Ok((t_hat / t).log2().abs())
}

/// Right-continuous empirical CDF step points: sorted distinct x with the
/// cumulative fraction reached at each.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::EmptySeries);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match steps.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => steps.push((x, frac)),
        }
    }
    Ok(steps)
}

/// Pearson correlation of the per-machine runtime vectors for every
/// unordered machine pair, plus the mean over pairs.
pub fn pairwise_pearson(
    matrix: &RuntimeMatrix,
) -> Result<(f64, Vec<(usize, usize, f64)>), ExperimentError> {
    if matrix.n_machines() < 2 {
        return Err(ExperimentError::InsufficientData {
            what: "machines",
            need: 2,
            got: matrix.n_machines(),
        });
    }
    if matrix.n_processes() < 2 {
        return Err(ExperimentError::InsufficientData {
            what: "processes",
            need: 2,
            got: matrix.n_processes(),
        });
    }
    let vectors: Vec<Vec<f64>> = (0..matrix.n_machines())
        .map(|mi| (0..matrix.n_processes()).map(|pi| matrix.runtime(mi, pi)).collect())
        .collect();
    let mut per_pair = Vec::new();
    let mut sum = 0.0;
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            let r = pearson(&vectors[i], &vectors[j]).ok_or_else(|| {
                ExperimentError::ZeroVariance(matrix.machines[i].cpu_model.clone())
            })?;
            sum += r;
            per_pair.push((i, j, r));
        }
    }
    Ok((sum / per_pair.len() as f64, per_pair))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

const TYPE1_BASE_EVALS: u64 = 100;

/// Rejection fraction of the *plain* one-sided sign test when B is the same
/// algorithm as A but runs `extra_pct` percent longer. Each run is a
/// best-of-N random search surrogate: the minimum of N i.i.d. uniforms,
/// drawn in closed form as 1 - U^(1/N) so ties have probability zero.
pub fn type1_error_experiment(
    extra_pct: f64,
    n_instances: usize,
    reps: u64,
    alpha: f64,
    seed: u64,
) -> Result<f64, ExperimentError> {
    if !(extra_pct >= 0.0 && extra_pct.is_finite()) {
        return Err(ExperimentError::InvalidNoise(extra_pct));
    }
    if n_instances < 2 {
        return Err(ExperimentError::InsufficientData {
            what: "instances",
            need: 2,
            got: n_instances,
        });
    }
    if reps < 1 {
        return Err(ExperimentError::InsufficientData {
            what: "repetitions",
            need: 1,
            got: 0,
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ExperimentError::InvalidProbability(alpha));
    }
    let evals_a = TYPE1_BASE_EVALS as f64;
    let evals_b = evals_a * (1.0 + extra_pct / 100.0);
    let mut rejections = 0u64;
    for rep in 0..reps {
        let mut rng = stream_rng(seed, rep);
        let mut pairs = Vec::with_capacity(n_instances);
        for i in 0..n_instances {
            let a = best_of_n(&mut rng, evals_a);
            let b = best_of_n(&mut rng, evals_b);
            pairs.push(PairedObservation {
                instance_id: format!("i{i}"),
                a,
                b_hat: b,
            });
        }
        let (n, k) = crate::signtest::sign_statistic(&pairs, Direction::Minimize)
            .expect("continuous draws cannot tie");
        let p = sign_test_p_value(n, k).expect("statistic in range");
        if p <= alpha {
            rejections += 1;
        }
    }
    Ok(rejections as f64 / reps as f64)
}

// Minimum of `evals` i.i.d. Uniform(0,1) draws, sampled via the closed-form
// inverse CDF so fractional budgets are meaningful.
fn best_of_n<R: Rng>(rng: &mut R, evals: f64) -> f64 {
    let u = open_unit(rng);
    1.0 - u.powf(1.0 / evals)
}

/// One row of the bound verification table for a given statistic value k.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckRow {
    pub k: u64,
    pub empirical: f64,
    pub corrected: f64,
    pub std_error: f64,
    pub satisfied: bool,
}

/// Simulates the adversarial model behind the corrected p-value: under H0
/// the true A-win count is v ~ Bin(n, 0.5); each win independently flips to
/// a loss with probability p_gamma (an over-long budget for B can only
/// improve B). For every k the empirical P[statistic <= k] must stay below
/// corrected_p_value + 4 standard errors.
pub fn bound_check_experiment(
    n: u64,
    p_gamma: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<BoundCheckRow>, ExperimentError> {
    if !(0.0..=1.0).contains(&p_gamma) {
        return Err(ExperimentError::InvalidProbability(p_gamma));
    }
    if reps < 10_000 {
        return Err(ExperimentError::InsufficientData {
            what: "repetitions",
            need: 10_000,
            got: reps as usize,
        });
    }
    let null = Binomial::new(n, 0.5).expect("p=0.5 valid");
    let mut counts = vec![0u64; n as usize + 1];
    let mut rng = stream_rng(seed, 1);
    for _ in 0..reps {
        let v = null.sample(&mut rng);
        let flips = if p_gamma == 0.0 || v == 0 {
            0
        } else {
            Binomial::new(v, p_gamma).expect("p validated").sample(&mut rng)
        };
        counts[(v - flips) as usize] += 1;
    }
    let mut rows = Vec::with_capacity(n as usize + 1);
    let mut cumulative = 0u64;
    for k in 0..=n {
        cumulative += counts[k as usize];
        let empirical = cumulative as f64 / reps as f64;
        let corrected = crate::signtest::corrected_p_value(p_gamma, n, k)
            .expect("k <= n by construction");
        // Agresti-Coull shrinkage keeps the standard error positive when the
        // empirical proportion hits 0 or 1, where the plug-in estimate
        // degenerates and the 4-sigma allowance would vanish.
        let shrunk = (cumulative as f64 + 2.0) / (reps as f64 + 4.0);
        let std_error = (shrunk * (1.0 - shrunk) / reps as f64).sqrt();
        rows.push(BoundCheckRow {
            k,
            empirical,
            corrected,
            std_error,
            satisfied: empirical <= corrected + 4.0 * std_error,
        });
    }
    Ok(rows)
}
