//! One-sided sign test and its corrected variant.
//!
//! The plain test counts `k = #{a_i < b_i}` over tie-free pairs and compares
//! against `Bin(n, 0.5)`. When the second algorithm was run under an
//! *estimated* equivalent runtime, each estimate may exceed the true one
//! with probability `p_gamma`, so the plain p-value is replaced with the
//! upper bound
//!
//! ```text
//! pc(k) = sum_{v=0}^{n} (1 - P[Bin(n, p_gamma) < max(0, v - k)]) * P[Bin(n, 0.5) = v]
//! ```
//!
//! Only the one-sided direction is exposed: rejection means "B performs
//! statistically significantly better than A", never the converse, because
//! the estimation bias can only hurt B.

use crate::binom::{BinomError, BinomialSpec};
use crate::data_io::ComparisonTable;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignTestError {
    #[error("sample is empty")]
    EmptySample,
    #[error("all {0} pairs are tied; the sign test is undefined on an empty effective sample")]
    DegenerateSample(usize),
    #[error("statistic k={k} exceeds effective sample size n={n}")]
    StatisticOutOfRange { k: u64, n: u64 },
    #[error("effective sample size must be at least 1")]
    ZeroSampleSize,
    #[error("p_gamma must be in [0, 1), got {0}")]
    InvalidPGamma(f64),
    #[error("reps must be at least 1")]
    NoRepetitions,
    #[error("non-finite objective value in pair {0}")]
    NonFiniteValue(String),
    #[error("no rows with both objective columns populated")]
    MissingObjectives,
    #[error(transparent)]
    Binom(#[from] BinomError),
}

/// Optimization sense of the objective values being compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// One (instance, a_i, b_hat_i) record. `a` is the published objective of
/// algorithm A, `b_hat` the objective of algorithm B under the estimated
/// equivalent runtime.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedObservation {
    pub instance_id: String,
    pub a: f64,
    pub b_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    RejectH0,
    FailToReject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignTestResult {
    pub n_total: u64,
    pub n: u64,
    pub k: u64,
    pub p_value: f64,
    pub corrected_p_value: f64,
    pub p_gamma: f64,
    pub alpha: f64,
    pub decision: Decision,
}

/// Removes exact ties and counts A-wins. Under `Minimize`, `k` counts pairs
/// with `a < b_hat`; maximization is handled by negating both values.
pub fn sign_statistic(
    pairs: &[PairedObservation],
    direction: Direction,
) -> Result<(u64, u64), SignTestError> {
    if pairs.is_empty() {
        return Err(SignTestError::EmptySample);
    }
    let mut n = 0u64;
    let mut k = 0u64;
    for pair in pairs {
        if !pair.a.is_finite() || !pair.b_hat.is_finite() {
            return Err(SignTestError::NonFiniteValue(pair.instance_id.clone()));
        }
        let (a, b) = match direction {
            Direction::Minimize => (pair.a, pair.b_hat),
            Direction::Maximize => (-pair.a, -pair.b_hat),
        };
        if a == b {
            continue; // exact ties are removed
        }
        n += 1;
        if a < b {
            k += 1;
        }
    }
    if n == 0 {
        return Err(SignTestError::DegenerateSample(pairs.len()));
    }
    Ok((n, k))
}

/// Plain one-sided sign-test p-value, P[Bin(n, 0.5) <= k].
pub fn sign_test_p_value(n: u64, k: u64) -> Result<f64, SignTestError> {
    check_n_k(n, k)?;
    Ok(BinomialSpec::new(n, 0.5)?.cdf(k as i64)?)
}

/// Corrected p-value: an upper bound on the sign-test p-value that accounts
/// for each runtime estimate exceeding the true equivalent runtime with
/// probability `p_gamma`. Reduces to the plain p-value when `p_gamma = 0`.
pub fn corrected_p_value(p_gamma: f64, n: u64, k: u64) -> Result<f64, SignTestError> {
    check_p_gamma(p_gamma)?;
    check_n_k(n, k)?;
    if k == n {
        return Ok(1.0);
    }
    let null = BinomialSpec::new(n, 0.5)?;
    let over = BinomialSpec::new(n, p_gamma)?;

    // Prefix CDF of Bin(n, p_gamma); cdf_over[m] = P[Bin <= m].
    let mut cdf_over = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0f64;
    for m in 0..=n {
        acc += over.pmf(m)?;
        cdf_over.push(acc.min(1.0));
    }

    let mut total = 0.0f64;
    for v in 0..=n {
        let weight = null.pmf(v)?;
        // P[Bin(n, p_gamma) < max(0, v - k)]: zero when v <= k.
        let tail = if v <= k {
            1.0
        } else {
            1.0 - cdf_over[(v - k - 1) as usize]
        };
        total += tail * weight;
    }
    Ok(total.min(1.0))
}

/// Monte-Carlo oracle for the corrected p-value. Algebraically the closed
/// form equals P[V - X <= k] for independent V ~ Bin(n, 0.5) and
/// X ~ Bin(n, p_gamma); this estimates that probability by direct sampling
/// through a different code path (`rand_distr`). Returns the estimate and
/// its binomial standard error. Deterministic given (seed, reps).
pub fn corrected_p_value_oracle(
    p_gamma: f64,
    n: u64,
    k: u64,
    reps: u64,
    seed: u64,
) -> Result<(f64, f64), SignTestError> {
    check_p_gamma(p_gamma)?;
    check_n_k(n, k)?;
    if reps == 0 {
        return Err(SignTestError::NoRepetitions);
    }
    let v_dist = Binomial::new(n, 0.5).expect("p = 0.5 is valid");
    let x_dist = Binomial::new(n, p_gamma).expect("p_gamma validated above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..reps {
        let v = v_dist.sample(&mut rng) as i64;
        let x = x_dist.sample(&mut rng) as i64;
        if v - x <= k as i64 {
            hits += 1;
        }
    }
    let est = hits as f64 / reps as f64;
    let se = (est * (1.0 - est) / reps as f64).sqrt();
    Ok((est, se))
}

/// Full comparison workflow: tie removal, statistic, corrected p-value and
/// the decision at level `alpha`. Rejection means "B performs statistically
/// significantly better than A" only, never the converse.
pub fn run_comparison(
    table: &ComparisonTable,
    p_gamma: f64,
    alpha: f64,
    direction: Direction,
) -> Result<SignTestResult, SignTestError> {
    let pairs: Vec<PairedObservation> = table
        .rows
        .iter()
        .filter_map(|row| {
            row.b_hat.map(|b_hat| PairedObservation {
                instance_id: row.instance_id.clone(),
                a: row.a,
                b_hat,
            })
        })
        .collect();
    if pairs.is_empty() {
        return Err(SignTestError::MissingObjectives);
    }
    let n_total = pairs.len() as u64;
    let (n, k) = sign_statistic(&pairs, direction)?;
    let p_value = sign_test_p_value(n, k)?;
    let corrected = corrected_p_value(p_gamma, n, k)?;
    let decision = if corrected <= alpha {
        Decision::RejectH0
    } else {
        Decision::FailToReject
    };
    Ok(SignTestResult {
        n_total,
        n,
        k,
        p_value,
        corrected_p_value: corrected,
        p_gamma,
        alpha,
        decision,
    })
}

/// Deterministic per-run sub-generator. Streams keep repetitions independent
/// of evaluation order, so parallel and sequential schedules agree.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Convenience used by experiments: a uniform draw in (0, 1).
pub(crate) fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

fn check_n_k(n: u64, k: u64) -> Result<(), SignTestError> {
    if n == 0 {
        return Err(SignTestError::ZeroSampleSize);
    }
    if k > n {
        return Err(SignTestError::StatisticOutOfRange { k, n });
    }
    Ok(())
}

fn check_p_gamma(p_gamma: f64) -> Result<(), SignTestError> {
    if !(0.0..1.0).contains(&p_gamma) {
        return Err(SignTestError::InvalidPGamma(p_gamma));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(id: &str, a: f64, b: f64) -> PairedObservation {
        PairedObservation {
            instance_id: id.to_string(),
            a,
            b_hat: b,
        }
    }

    #[test]
    fn statistic_single_pair() {
        let (n, k) = sign_statistic(&[pair("x", 1.0, 2.0)], Direction::Minimize).unwrap();
        assert_eq!((n, k), (1, 1));
    }

    #[test]
    fn statistic_maximize_reverses() {
        let (n, k) = sign_statistic(&[pair("x", 1.0, 2.0)], Direction::Maximize).unwrap();
        assert_eq!((n, k), (1, 0));
    }

    #[test]
    fn statistic_all_ties_is_degenerate() {
        let err = sign_statistic(&[pair("x", 3.0, 3.0)], Direction::Minimize).unwrap_err();
        assert_eq!(err, SignTestError::DegenerateSample(1));
    }

    #[test]
    fn statistic_empty_sample() {
        assert_eq!(
            sign_statistic(&[], Direction::Minimize).unwrap_err(),
            SignTestError::EmptySample
        );
    }

    #[test]
    fn plain_p_value_examples() {
        assert_eq!(sign_test_p_value(15, 15).unwrap(), 1.0);
        assert_eq!(sign_test_p_value(1, 0).unwrap(), 0.5);
        let p = sign_test_p_value(20, 3).unwrap();
        assert!((p - 1351.0 / 1048576.0).abs() < 1e-15);
    }

    #[test]
    fn corrected_p_value_reference_outputs() {
        // Published script outputs, 9 decimal digits.
        let p = corrected_p_value(0.1, 20, 3).unwrap();
        assert!((p - 0.043596000).abs() < 1e-9, "got {p}");
        let p = corrected_p_value(0.01, 17, 4).unwrap();
        assert!((p - 0.033192784).abs() < 1e-9, "got {p}");
        assert_eq!(corrected_p_value(0.1, 15, 15).unwrap(), 1.0);
    }

    #[test]
    fn corrected_reduces_to_plain_at_zero() {
        for (n, k) in [(20u64, 3u64), (17, 4), (5, 0), (30, 30)] {
            assert_eq!(
                corrected_p_value(0.0, n, k).unwrap(),
                sign_test_p_value(n, k).unwrap()
            );
        }
    }

    #[test]
    fn corrected_monotone_in_p_gamma_and_k() {
        let n = 25;
        let k = 6;
        let mut prev = 0.0;
        for pg in [0.0, 0.01, 0.05, 0.1, 0.3, 0.6] {
            let p = corrected_p_value(pg, n, k).unwrap();
            assert!(p >= prev, "p_gamma={pg}");
            prev = p;
        }
        let mut prev = 0.0;
        for kk in 0..=n {
            let p = corrected_p_value(0.1, n, kk).unwrap();
            assert!(p >= prev, "k={kk}");
            prev = p;
        }
    }

    #[test]
    fn corrected_strictly_exceeds_plain() {
        let plain = sign_test_p_value(20, 3).unwrap();
        let corrected = corrected_p_value(0.1, 20, 3).unwrap();
        assert!(corrected > plain);
    }

    #[test]
    fn corrected_domain_errors() {
        assert!(matches!(
            corrected_p_value(1.0, 10, 3),
            Err(SignTestError::InvalidPGamma(_))
        ));
        assert!(matches!(
            corrected_p_value(0.1, 10, 11),
            Err(SignTestError::StatisticOutOfRange { .. })
        ));
        assert!(matches!(
            corrected_p_value(0.1, 0, 0),
            Err(SignTestError::ZeroSampleSize)
        ));
    }

    #[test]
    fn oracle_degenerate_cases() {
        // p_gamma = 0: X is identically zero, estimate is empirical P[V <= k].
        let (est, _) = corrected_p_value_oracle(0.0, 12, 6, 20_000, 3).unwrap();
        let exact = sign_test_p_value(12, 6).unwrap();
        assert!((est - exact).abs() < 0.02);
        // k = n: V - X <= n always.
        let (est, se) = corrected_p_value_oracle(0.2, 9, 9, 1_000, 3).unwrap();
        assert_eq!(est, 1.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn oracle_is_deterministic() {
        let a = corrected_p_value_oracle(0.1, 20, 3, 50_000, 17).unwrap();
        let b = corrected_p_value_oracle(0.1, 20, 3, 50_000, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_matches_closed_form() {
        let (est, se) = corrected_p_value_oracle(0.1, 20, 3, 1_000_000, 1).unwrap();
        let exact = corrected_p_value(0.1, 20, 3).unwrap();
        assert!(
            (est - exact).abs() <= 3.0 * se.max(1e-6),
            "est {est} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn invariance_under_increasing_transforms() {
        // Per-pair strictly increasing maps leave (n, k) unchanged.
        let base = vec![
            pair("a", 10.0, 12.0),
            pair("b", 5.0, 5.0),
            pair("c", -3.0, -7.0),
            pair("d", 0.25, 0.5),
        ];
        let (n0, k0) = sign_statistic(&base, Direction::Minimize).unwrap();
        let transformed: Vec<PairedObservation> = base
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let scale = 1.5 + i as f64;
                let shift = -4.0 * i as f64;
                PairedObservation {
                    instance_id: p.instance_id.clone(),
                    a: scale * p.a + shift,
                    b_hat: scale * p.b_hat + shift,
                }
            })
            .collect();
        let (n1, k1) = sign_statistic(&transformed, Direction::Minimize).unwrap();
        assert_eq!((n0, k0), (n1, k1));
    }
}
