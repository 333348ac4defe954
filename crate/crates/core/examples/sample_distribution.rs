//! Sample the full circuit many times and compare the histogram of `s` with
//! the exact output distribution.
//!
//!     cargo run --release --example sample_distribution -- 21 2 4000

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use shor_mps::numtheory::{multiplicative_order, SemiprimeInstance};
use shor_mps::oracle::{exact_distribution, tvd};
use shor_mps::shor::{sample_run, PipelineConfig};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (n, a, samples) = match args[..] {
        [n, a, k] => (n, a, k),
        _ => (21, 2, 4000),
    };
    let instance = SemiprimeInstance::new(n, a).expect("valid instance");
    let config = PipelineConfig::default();

    let outcomes: Vec<u64> = (0..samples)
        .into_par_iter()
        .map(|seed| sample_run(&instance, &config, &mut ChaCha8Rng::seed_from_u64(seed)).expect("run").s)
        .collect();
    let mut counts = vec![0u64; instance.upper_dim() as usize];
    for s in outcomes {
        counts[s as usize] += 1;
    }

    let r = multiplicative_order(a, n).unwrap();
    let exact = exact_distribution(instance.l, r).unwrap();
    println!("N = {n}, a = {a}, r = {r}, {samples} samples, TVD = {:.4}", tvd(&exact, &counts).unwrap());
    let mut top: Vec<(usize, u64)> = counts.iter().copied().enumerate().filter(|&(_, c)| c > 0).collect();
    top.sort_by(|x, y| y.1.cmp(&x.1));
    for (s, c) in top.into_iter().take(12) {
        println!("  s = {s:>6}  observed {:.4}  exact {:.4}", c as f64 / samples as f64, exact.probabilities[s]);
    }
}
