//! Bond ranks after modular exponentiation under the static and dynamic
//! layouts, next to the ranks predicted by counting residues.
//!
//!     cargo run --release --example layout_profile -- 1943 2

use shor_mps::numtheory::SemiprimeInstance;
use shor_mps::oracle::residue_rank_oracle;
use shor_mps::mps::SiteLabel;
use shor_mps::shor::{build_initial, run_modexp, Layout, PlateauPolicy};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (n, a) = match args[..] {
        [n, a] => (n, a),
        _ => (21, 2),
    };
    let instance = SemiprimeInstance::new(n, a).expect("valid instance");

    for layout in [Layout::Static, Layout::Dynamic] {
        let mut state = build_initial(&instance);
        run_modexp(&mut state, layout, PlateauPolicy::default()).expect("modexp");
        let profile = state.profile("modexp");
        let predicted: Vec<usize> = (0..profile.ranks.len())
            .map(|b| {
                let left = &profile.layout[..=b];
                let qubits: Vec<usize> = left.iter().filter_map(|l| if let SiteLabel::Upper(i) = l { Some(*i) } else { None }).collect();
                residue_rank_oracle(&instance, &qubits, left.contains(&SiteLabel::Lower))
            })
            .collect();
        println!("{layout}: alpha_hat = {:?}, R dim = {}", state.alpha_hat, state.lower_dim());
        println!("  ranks     {:?}", profile.ranks);
        println!("  predicted {:?}", predicted);
        println!("  elements  {} (peak {})", state.mps.accountant().live(), state.mps.accountant().peak());
    }
}
