use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    apply_lnn_qft, assemble_s, build_initial, measure_lower_register, run_modexp, Layout, PlateauPolicy, ShorError,
    ShorResult, ShorState, DEFAULT_MAX_ELEMENTS,
};
use crate::mps::{RankProfile, DEFAULT_STATE_VECTOR_CAP};
use crate::numtheory::{continued_fraction_convergents, mod_pow, random_coprime, recover_factors, Convergent, SemiprimeInstance};

/// Settings for [`sample_run`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub layout: Layout,
    /// Element guard in 64-bit units.
    pub max_elements: u64,
    /// How many times a fresh base may be drawn after a memory-limit failure.
    pub retries: u32,
    pub seed: u64,
    pub plateau: PlateauPolicy,
    pub state_vector_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            layout: Layout::Dynamic,
            max_elements: DEFAULT_MAX_ELEMENTS,
            retries: 0,
            seed: 0,
            plateau: PlateauPolicy::default(),
            state_vector_cap: DEFAULT_STATE_VECTOR_CAP,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> ShorResult<()> {
        if self.max_elements == 0 {
            return Err(ShorError::InvalidArgument("max elements must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one end-to-end run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub n: u64,
    /// Base actually used (differs from the requested one after a retry).
    pub a: u64,
    pub l: u32,
    pub layout: Layout,
    /// Bases abandoned after a memory-limit failure.
    pub abandoned_bases: Vec<u64>,
    pub alpha_hat: Option<u32>,
    pub lower_dim: usize,
    /// The observed residue `a^j mod N`.
    pub lower_residue: u64,
    pub s: u64,
    pub convergents: Vec<Convergent>,
    /// Smallest convergent denominator `k` with `a^k ≡ 1 (mod N)`.
    pub r_candidate: Option<u64>,
    pub factors: Option<(u64, u64)>,
    pub profiles: Vec<RankProfile>,
    pub peak_elements: BTreeMap<String, u64>,
    pub durations_s: BTreeMap<String, f64>,
}

/// Smallest convergent denominator of `s / 2^(2l)` that is a period of `a`.
pub fn verified_period(instance: &SemiprimeInstance, convergents: &[Convergent]) -> Option<u64> {
    convergents
        .iter()
        .map(|c| c.denominator)
        .filter(|&k| k >= 1)
        .find(|&k| mod_pow(instance.a, k, instance.n).ok() == Some(1))
}

/// One full sampling run. On a memory-limit failure a fresh base is drawn,
/// up to `config.retries` times.
pub fn sample_run<R: Rng + ?Sized>(instance: &SemiprimeInstance, config: &PipelineConfig, rng: &mut R) -> ShorResult<SampleRecord> {
    config.validate()?;
    let mut current = *instance;
    let mut abandoned = Vec::new();
    loop {
        match single_run(&current, config, rng) {
            Ok(mut rec) => {
                rec.abandoned_bases = abandoned;
                return Ok(rec);
            }
            Err(ShorError::MemoryLimit { stage, requested, limit }) => {
                if abandoned.len() as u32 >= config.retries {
                    return Err(ShorError::MemoryLimit { stage, requested, limit });
                }
                log::info!("a = {} exceeded the element limit during {stage}; drawing a new base", current.a);
                abandoned.push(current.a);
                let draw = random_coprime(current.n, rng);
                current = SemiprimeInstance { a: draw.a, ..current };
            }
            Err(e) => return Err(e),
        }
    }
}

struct Stages {
    peaks: BTreeMap<String, u64>,
    durations: BTreeMap<String, f64>,
    clock: Instant,
}

impl Stages {
    fn start(&mut self, state: &mut ShorState) {
        state.mps.reset_peak();
        self.clock = Instant::now();
    }

    fn finish(&mut self, name: &str, state: &ShorState) {
        self.peaks.insert(name.to_string(), state.mps.accountant().peak());
        self.durations.insert(name.to_string(), self.clock.elapsed().as_secs_f64());
    }
}

fn single_run<R: Rng + ?Sized>(instance: &SemiprimeInstance, config: &PipelineConfig, rng: &mut R) -> ShorResult<SampleRecord> {
    let mut stages = Stages { peaks: BTreeMap::new(), durations: BTreeMap::new(), clock: Instant::now() };
    let mut profiles = Vec::new();

    let mut state = build_initial(instance);
    state.mps.set_element_limit(Some(config.max_elements));
    state.mps.set_state_vector_cap(config.state_vector_cap);

    stages.start(&mut state);
    run_modexp(&mut state, config.layout, config.plateau)?;
    stages.finish("modexp", &state);
    profiles.push(state.profile("modexp"));
    let lower_dim = state.lower_dim();

    stages.start(&mut state);
    let lower_residue = measure_lower_register(&mut state, rng, None)?;
    stages.finish("measure_lower", &state);
    profiles.push(state.profile("measure_lower"));

    stages.start(&mut state);
    state.mps.promote_to_complex().map_err(ShorError::at("promote"))?;
    stages.finish("promote", &state);

    stages.start(&mut state);
    let bits = apply_lnn_qft(&mut state, rng)?;
    stages.finish("qft", &state);
    profiles.push(state.profile("qft"));

    let q = instance.upper_dim();
    let s = assemble_s(&bits, instance.upper_qubits())?;
    let convergents = continued_fraction_convergents(s, q);
    let r_candidate = verified_period(instance, &convergents);
    let factors = r_candidate.and_then(|r| recover_factors(instance.n, instance.a, r));

    Ok(SampleRecord {
        n: instance.n,
        a: instance.a,
        l: instance.l,
        layout: config.layout,
        abandoned_bases: Vec::new(),
        alpha_hat: state.alpha_hat,
        lower_dim,
        lower_residue,
        s,
        convergents,
        r_candidate,
        factors,
        profiles,
        peak_elements: stages.peaks,
        durations_s: stages.durations,
    })
}
