//! Factor 21 end to end: simulate, measure, expand `s / 2^(2l)` as a continued
//! fraction and try the candidate period, repeating until a split is found.
//!
//!     cargo run --release --example factor_21

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shor_mps::numtheory::{random_coprime, SemiprimeInstance};
use shor_mps::shor::{sample_run, PipelineConfig};

fn main() {
    let n = 21;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for attempt in 1..=20 {
        let draw = random_coprime(n, &mut rng);
        if let Some(&f) = draw.lucky_factors.first() {
            println!("attempt {attempt}: a candidate shared the factor {f} with N");
        }
        let instance = SemiprimeInstance::new(n, draw.a).unwrap();
        let rec = sample_run(&instance, &PipelineConfig::default(), &mut rng).expect("run");
        println!(
            "attempt {attempt}: a = {:>2}, s = {:>4}, period candidate {:?}, R measured {}",
            rec.a, rec.s, rec.r_candidate, rec.lower_residue
        );
        if let Some((p, q)) = rec.factors {
            println!("{n} = {p} * {q}");
            return;
        }
    }
    println!("no split found");
}
