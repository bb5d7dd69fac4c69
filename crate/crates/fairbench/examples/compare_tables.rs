//! Run the corrected sign test on the two bundled comparison tables and
//! print both reports.

use fairbench::data_io::{parse_comparison, write_report};
use fairbench::signtest::run_comparison;

fn main() {
    for (name, text) in [
        ("EDA vs local search", include_str!("../data/qap_eda_vs_ls.csv")),
        ("memetic vs local search", include_str!("../data/qap_memetic_vs_ls.csv")),
    ] {
        let table = parse_comparison(text).unwrap();
        let result = run_comparison(&table, 0.01, 0.05, table.direction).unwrap();
        println!("== {name} ==");
        print!("{}", write_report(&result, &table, &[]));
        println!();
    }
}
