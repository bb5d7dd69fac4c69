//! Predict how long a process that took 15 s on a machine scoring 1540
//! should run on a machine scoring 1643, at several risk levels.

use fairbench::runtime_model::{biased_estimate, gamma_for};

fn main() {
    let (model, curve) = fairbench::default_calibration();
    let (t1, s1, s2) = (15.0, 1540.0, 1643.0);
    println!("p_gamma,gamma,t_hat2_seconds");
    for &p_gamma in &[0.01, 0.05, 0.1, 0.25, 0.5] {
        let gamma = gamma_for(p_gamma, &curve).unwrap();
        let est = biased_estimate(t1, s1, s2, &model, gamma).unwrap();
        println!("{p_gamma},{gamma:.5},{:.6}", est.seconds);
    }
}
