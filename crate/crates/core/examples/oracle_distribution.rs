//! The exact distribution of the measured register for a given period,
//! printed as CSV.
//!
//!     cargo run --release --example oracle_distribution -- 5 6 > dist.csv

use shor_mps::oracle::exact_distribution;

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (l, r) = match args[..] {
        [l, r] => (l as u32, r),
        _ => (5, 6),
    };
    let table = exact_distribution(l, r).expect("valid (l, r)");
    eprintln!("l = {l}, r = {r}: {} outcomes, total {:.15}", table.len(), table.total());
    println!("s,probability");
    for (s, p) in table.probabilities.iter().enumerate() {
        println!("{s},{p:.16e}");
    }
}
