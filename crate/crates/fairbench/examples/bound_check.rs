//! Monte-Carlo check that the corrected p-value upper-bounds the rejection
//! probability of the adversarial win-flipping model, for every statistic
//! value k.

use fairbench::experiments::bound_check_experiment;

fn main() {
    let (n, p_gamma, reps, seed) = (20, 0.1, 200_000, 7);
    println!("k,empirical,corrected,satisfied");
    for row in bound_check_experiment(n, p_gamma, reps, seed).unwrap() {
        println!(
            "{},{:.6},{:.6},{}",
            row.k, row.empirical, row.corrected, row.satisfied
        );
    }
}
