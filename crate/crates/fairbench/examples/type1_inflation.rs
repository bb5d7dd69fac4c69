//! How fast the plain sign test's type-I error inflates when one side
//! silently gets extra runtime.

use fairbench::experiments::type1_error_experiment;

fn main() {
    println!("extra_pct,rejection_rate");
    for &extra in &[0.0, 8.0, 16.0, 32.0, 64.0] {
        let rate = type1_error_experiment(extra, 16, 1000, 0.05, 7).unwrap();
        println!("{extra},{rate:.4}");
    }
}
