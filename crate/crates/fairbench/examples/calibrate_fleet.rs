//! Full calibration pipeline on a synthetic fleet: simulate runtimes, fit
//! the reference regression, build the gamma curve by cross-validation and
//! print the resulting calibration file.

use fairbench::data_io::write_calibration;
use fairbench::experiments::{simulate_fleet, NoiseModel, SyntheticFleet};
use fairbench::runtime_model::{build_gamma_curve, fit_reference_regression, MachineScore};

fn main() {
    let spec = SyntheticFleet {
        machines: (0..8)
            .map(|i| MachineScore::new(format!("m{i}"), 500.0 + 200.0 * i as f64).unwrap())
            .collect(),
        process_costs: (0..16).map(|p| 0.5 + 0.25 * p as f64).collect(),
        line_slope: -0.05,
        line_intercept: 180.0,
        noise: NoiseModel::MultiplicativeLognormal { sigma: 0.05 },
        seed: 42,
    };
    let matrix = simulate_fleet(&spec).unwrap();

    let totals: Vec<(f64, f64)> = (0..matrix.n_machines())
        .map(|mi| {
            let total = (0..matrix.n_processes()).map(|pi| matrix.runtime(mi, pi)).sum();
            (matrix.machines[mi].score, total)
        })
        .collect();
    let model = fit_reference_regression(&totals).unwrap();

    let grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let curve = build_gamma_curve(&matrix, &grid).unwrap();

    print!("{}", write_calibration(&model, &curve));
}
