//! ECDF of the log deviation ratio on a noisy synthetic fleet, comparing the
//! score-based equivalent-runtime predictor against the naive "same number
//! of seconds" predictor.

use fairbench::experiments::{
    ecdf, log_deviation_ratio, simulate_fleet, NoiseModel, SyntheticFleet,
};
use fairbench::runtime_model::{centered_estimate, fit_reference_regression, MachineScore};

fn main() {
    let spec = SyntheticFleet {
        machines: (0..8)
            .map(|i| MachineScore::new(format!("m{i}"), 500.0 + 200.0 * i as f64).unwrap())
            .collect(),
        process_costs: (0..32).map(|p| 0.5 + 0.2 * p as f64).collect(),
        line_slope: -0.05,
        line_intercept: 180.0,
        noise: NoiseModel::MultiplicativeLognormal { sigma: 0.1 },
        seed: 7,
    };
    let matrix = simulate_fleet(&spec).unwrap();
    let totals: Vec<(f64, f64)> = (0..matrix.n_machines())
        .map(|mi| {
            let total = (0..matrix.n_processes()).map(|pi| matrix.runtime(mi, pi)).sum();
            (matrix.machines[mi].score, total)
        })
        .collect();
    let model = fit_reference_regression(&totals).unwrap();

    let mut predicted = Vec::new();
    let mut same_seconds = Vec::new();
    for m1 in 0..matrix.n_machines() {
        for m2 in 0..matrix.n_machines() {
            if m1 == m2 {
                continue;
            }
            let (s1, s2) = (matrix.machines[m1].score, matrix.machines[m2].score);
            for pi in 0..matrix.n_processes() {
                let (t1, t2) = (matrix.runtime(m1, pi), matrix.runtime(m2, pi));
                let est = centered_estimate(t1, s1, s2, &model).unwrap();
                predicted.push(log_deviation_ratio(est.seconds, t2).unwrap());
                same_seconds.push(log_deviation_ratio(t1, t2).unwrap());
            }
        }
    }
    println!("predictor,log_deviation_ratio,cumulative_fraction");
    for (label, ratios) in [("equivalent_runtime", predicted), ("same_seconds", same_seconds)] {
        for (x, frac) in ecdf(&ratios).unwrap() {
            println!("{label},{x:.6},{frac:.6}");
        }
    }
}
