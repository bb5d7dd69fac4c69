//! Corrected sign-test p-values at a few (n, k) points, next to the plain
//! ones, to show the price of runtime-estimation uncertainty.

use fairbench::signtest::{corrected_p_value, sign_test_p_value};

fn main() {
    println!("p_gamma,n,k,plain,corrected");
    for &(p_gamma, n, k) in &[(0.1, 20, 3), (0.01, 17, 4), (0.1, 15, 15), (0.05, 30, 9)] {
        let plain = sign_test_p_value(n, k).unwrap();
        let corrected = corrected_p_value(p_gamma, n, k).unwrap();
        println!("{p_gamma},{n},{k},{plain:.9},{corrected:.9}");
    }
}
