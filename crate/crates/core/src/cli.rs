//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 resource limit, 4 verification
//! failure. Reports are JSON with `schema: 1`; floats are written with 17
//! significant digits.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mps::{RankProfile, DEFAULT_STATE_VECTOR_CAP};
use crate::numtheory::{
    alpha_statistics, bit_length, multiplicative_order, random_coprime, validate_shor_modulus, AlphaStatistics,
    NumError, OrderProfile, SemiprimeInstance,
};
use crate::oracle::{exact_distribution, tvd, DistributionTable, OracleError};
use crate::shor::{
    build_initial, measure_lower_register, run_modexp, sample_run, Layout, PipelineConfig, PlateauPolicy, SampleRecord,
    ShorError, DEFAULT_MAX_ELEMENTS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_RESOURCE_LIMIT: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

pub const REPORT_SCHEMA: u32 = 1;

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "SHOR_MPS_THREADS";

/// Largest register for which a sampling report includes the TVD against
/// the exact distribution.
const TVD_MAX_QUBITS: usize = 24;

#[derive(Parser, Debug)]
#[command(name = "shor-mps", version, about = "MPS simulation of Shor's order-finding circuit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run independent end-to-end samples and aggregate them.
    Sample(SampleArgs),
    /// Recompute (r, α, β) for the published parameter set.
    VerifyPaper(VerifyArgs),
    /// Bond-rank profiles after modular exponentiation.
    Profile(ProfileArgs),
    /// Exact distribution of the measured upper register.
    Oracle(OracleArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Static,
    Dynamic,
    Both,
}

impl LayoutArg {
    fn layouts(self) -> Vec<Layout> {
        match self {
            LayoutArg::Static => vec![Layout::Static],
            LayoutArg::Dynamic => vec![Layout::Dynamic],
            LayoutArg::Both => vec![Layout::Static, Layout::Dynamic],
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(clap::Args, Debug, Clone)]
pub struct CommonArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(clap::Args, Debug, Clone)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: u64,
    /// Base; drawn at random when omitted.
    #[arg(long)]
    pub a: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub samples: u64,
    #[arg(long, value_enum, default_value = "dynamic")]
    pub layout: LayoutArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ELEMENTS)]
    pub max_elements: u64,
    #[arg(long, default_value_t = 0)]
    pub retries: u32,
    /// Cap on dense amplitude counts for full contractions.
    #[arg(long, default_value_t = DEFAULT_STATE_VECTOR_CAP)]
    pub dense_cap: usize,
    /// Known factor, for verification fields only.
    #[arg(long, requires = "q")]
    pub p: Option<u64>,
    #[arg(long, requires = "p")]
    pub q: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(clap::Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(clap::Args, Debug, Clone)]
pub struct ProfileArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub a: u64,
    #[arg(long, value_enum, default_value = "both")]
    pub layout: LayoutArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ELEMENTS)]
    pub max_elements: u64,
    /// Also write the rank table as CSV to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(clap::Args, Debug, Clone)]
pub struct OracleArgs {
    /// Half the upper-register size; defaults to the bit length of `--n`.
    #[arg(long)]
    pub l: Option<u32>,
    /// Period; computed from `--n` and `--a` when omitted.
    #[arg(long, conflicts_with_all = ["n", "a"])]
    pub r: Option<u64>,
    #[arg(long, requires = "a")]
    pub n: Option<u64>,
    #[arg(long, requires = "n")]
    pub a: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidInput(String),

    #[error("{0}")]
    ResourceLimit(String),

    #[error("{0}")]
    Verification(String),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidInput(_) | CliError::Io { .. } => EXIT_INVALID_INPUT,
            CliError::ResourceLimit(_) => EXIT_RESOURCE_LIMIT,
            CliError::Verification(_) => EXIT_VERIFICATION,
        }
    }
}

impl From<ShorError> for CliError {
    fn from(e: ShorError) -> Self {
        match e {
            ShorError::MemoryLimit { .. } => CliError::ResourceLimit(e.to_string()),
            ShorError::InvalidArgument(_) | ShorError::Number(_) => CliError::InvalidInput(e.to_string()),
            ShorError::Oracle(OracleError::TooLarge { .. }) => CliError::ResourceLimit(e.to_string()),
            ShorError::Mps(crate::mps::MpsError::TooLarge { .. }) => CliError::ResourceLimit(e.to_string()),
            other => CliError::Verification(other.to_string()),
        }
    }
}

impl From<NumError> for CliError {
    fn from(e: NumError) -> Self {
        CliError::InvalidInput(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => CliError::ResourceLimit(e.to_string()),
            other => CliError::InvalidInput(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Echo of the problem parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceEcho {
    pub n: u64,
    pub a: u64,
    pub l: u32,
    /// True when `a` was drawn rather than given.
    pub a_drawn: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub lucky_factors: Vec<u64>,
}

/// Summary over all records of a sampling run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub samples: u64,
    pub s_histogram: BTreeMap<u64, u64>,
    pub factor_successes: u64,
    pub factor_success_rate: f64,
    /// Against the exact distribution, for registers of at most 24 qubits.
    pub tvd: Option<f64>,
}

/// Rank profiles of one layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutProfile {
    pub layout: Layout,
    pub alpha_hat: Option<u32>,
    pub lower_dim: usize,
    pub profiles: Vec<RankProfile>,
}

/// One row of the published parameter check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedCheck {
    pub l: u32,
    pub n: u64,
    pub a: u64,
    pub expected: (u64, u32, u64),
    pub computed: (u64, u32, u64),
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionDump {
    pub l: u32,
    pub r: u64,
    pub probabilities: Vec<f64>,
}

/// Machine-readable output of every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub instance: Option<InstanceEcho>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<PipelineConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub order_profile: Option<OrderProfile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_statistics: Option<AlphaStatistics>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub records: Vec<SampleRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aggregate: Option<Aggregate>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub profiles: Vec<LayoutProfile>,
    /// Largest per-stage peak over all records, by layout then stage.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub peak_elements: BTreeMap<String, BTreeMap<String, u64>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub verification: Vec<PublishedCheck>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub distribution: Option<DistributionDump>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            instance: None,
            config: None,
            order_profile: None,
            alpha_statistics: None,
            records: Vec::new(),
            aggregate: None,
            profiles: Vec::new(),
            peak_elements: BTreeMap::new(),
            verification: Vec::new(),
            distribution: None,
        }
    }

    /// Pretty JSON with every float written as `{:.16e}`.
    pub fn to_json(&self) -> String {
        to_json_17(self)
    }
}

/// Serializes `value` as pretty JSON with 17 significant digits per float.
pub fn to_json_17<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter::default());
    value.serialize(&mut ser).expect("report types serialize");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Pretty formatter that writes floats in scientific notation with 17
/// significant digits.
#[derive(Default)]
struct SigFormatter<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Sample(a) => {
            let report = cmd_sample(a)?;
            match a.common.format {
                Format::Json => emit(&a.common.out, &report.to_json()),
                Format::Csv => emit(&a.common.out, &records_csv(&report.records)),
            }
        }
        Command::VerifyPaper(a) => {
            let report = cmd_verify_paper();
            let text = match a.common.format {
                Format::Json => report.to_json(),
                Format::Csv => verification_csv(&report.verification),
            };
            if a.common.out.is_some() {
                emit(&a.common.out, &text)?;
            }
            print!("{}", verification_table(&report.verification));
            let failed = report.verification.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(CliError::Verification(format!("{failed} parameter rows disagree")));
            }
            Ok(())
        }
        Command::Profile(a) => {
            let report = cmd_profile(a)?;
            if let Some(path) = &a.csv {
                write_file(path, &profile_csv(&report.profiles))?;
            }
            let text = match a.common.format {
                Format::Json => report.to_json(),
                Format::Csv => profile_csv(&report.profiles),
            };
            emit(&a.common.out, &text)?;
            eprint!("{}", element_comparison(&report));
            Ok(())
        }
        Command::Oracle(a) => {
            let report = cmd_oracle(a)?;
            let dist = report.distribution.as_ref().expect("oracle fills the distribution");
            let text = match a.common.format {
                Format::Json => report.to_json(),
                Format::Csv => distribution_csv(&dist.probabilities),
            };
            emit(&a.common.out, &text)
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| if text.ends_with('\n') { Ok(()) } else { stdout.write_all(b"\n") })
                .map_err(|source| CliError::Io { path: "stdout".into(), source })
        }
    }
}

/// Runs `args.samples` independent pipelines; sample `i` uses the RNG stream
/// seeded with `seed + i`.
pub fn cmd_sample(args: &SampleArgs) -> CliResult<RunReport> {
    validate_shor_modulus(args.n)?;
    if args.samples == 0 {
        return Err(CliError::InvalidInput("--samples must be positive".into()));
    }
    let (a, a_drawn, lucky) = match args.a {
        Some(a) => (a, false, Vec::new()),
        None => {
            // the base draw gets its own stream so the per-sample streams stay seed + i
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5eed_ba5e);
            let draw = random_coprime(args.n, &mut rng);
            (draw.a, true, draw.lucky_factors)
        }
    };
    let instance = SemiprimeInstance::new(args.n, a)?;
    let mut report = RunReport::new("sample");
    report.instance = Some(InstanceEcho { n: args.n, a, l: instance.l, a_drawn, lucky_factors: lucky });
    if let (Some(p), Some(q)) = (args.p, args.q) {
        let checked = SemiprimeInstance::with_factors(args.n, a, p, q)?;
        let (p, q) = checked.factors.expect("set by with_factors");
        report.order_profile = Some(OrderProfile::from_factors(a, p, q)?);
        report.alpha_statistics = Some(alpha_statistics(p, q)?);
    }

    let layouts = args.layout.layouts();
    let mut config = PipelineConfig {
        layout: layouts[0],
        max_elements: args.max_elements,
        retries: args.retries,
        seed: args.seed,
        plateau: PlateauPolicy::default(),
        state_vector_cap: args.dense_cap,
    };
    config.validate()?;
    for &layout in &layouts {
        config.layout = layout;
        let records: Vec<SampleRecord> = (0..args.samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(i));
                sample_run(&instance, &config, &mut rng)
            })
            .collect::<Result<_, _>>()?;
        let peaks = report.peak_elements.entry(layout.to_string()).or_default();
        for rec in &records {
            for (stage, &p) in &rec.peak_elements {
                let e = peaks.entry(stage.clone()).or_insert(0);
                *e = (*e).max(p);
            }
        }
        report.records.extend(records);
    }
    report.config = Some(PipelineConfig { layout: layouts[layouts.len() - 1], ..config });
    report.aggregate = Some(aggregate(&instance, &report.records)?);
    Ok(report)
}

fn aggregate(instance: &SemiprimeInstance, records: &[SampleRecord]) -> CliResult<Aggregate> {
    let mut hist = BTreeMap::new();
    for r in records {
        *hist.entry(r.s).or_insert(0u64) += 1;
    }
    let successes = records.iter().filter(|r| r.factors.is_some()).count() as u64;
    let samples = records.len() as u64;
    // records drawn with a different base after a retry follow another distribution
    let same_base = records.iter().all(|r| r.a == instance.a);
    let tvd = if instance.upper_qubits() <= TVD_MAX_QUBITS && same_base {
        let r = multiplicative_order(instance.a, instance.n)?;
        let exact = exact_distribution(instance.l, r)?;
        let mut counts = vec![0u64; exact.len()];
        for (&s, &c) in &hist {
            counts[s as usize] = c;
        }
        Some(tvd(&exact, &counts)?)
    } else {
        None
    };
    Ok(Aggregate {
        samples,
        s_histogram: hist,
        factor_successes: successes,
        factor_success_rate: successes as f64 / samples as f64,
        tvd,
    })
}

/// `((l, N, a), (r, α, β))`.
pub type PublishedRow = ((u32, u64, u64), (u64, u32, u64));

/// Published parameter rows.
pub const PUBLISHED_PARAMETERS: [PublishedRow; 7] = [
    ((13, 8189, 10), (3870, 1, 1935)),
    ((14, 16351, 2), (8036, 2, 2009)),
    ((15, 32663, 6), (16104, 3, 2013)),
    ((16, 56759, 2), (28140, 2, 7035)),
    ((17, 124631, 2), (57516, 2, 14379)),
    ((20, 961307, 5), (479568, 4, 29973)),
    ((11, 1943, 2), (924, 2, 231)),
];

pub fn cmd_verify_paper() -> RunReport {
    let mut report = RunReport::new("verify-paper");
    for ((l, n, a), expected) in PUBLISHED_PARAMETERS {
        let computed = match OrderProfile::from_base(a, n) {
            Ok(p) => (p.r, p.alpha, p.beta),
            Err(_) => (0, 0, 0),
        };
        let pass = computed == expected && bit_length(n) == l;
        report.verification.push(PublishedCheck { l, n, a, expected, computed, pass });
    }
    report
}

fn verification_table(rows: &[PublishedCheck]) -> String {
    let mut s = format!("{:>3} {:>8} {:>3} {:>8} {:>2} {:>6}  result\n", "l", "N", "a", "r", "α", "β");
    for c in rows {
        let (r, alpha, beta) = c.computed;
        s.push_str(&format!(
            "{:>3} {:>8} {:>3} {:>8} {:>2} {:>6}  {}\n",
            c.l,
            c.n,
            c.a,
            r,
            alpha,
            beta,
            if c.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}

fn verification_csv(rows: &[PublishedCheck]) -> String {
    let mut s = String::from("l,n,a,r,alpha,beta,pass\n");
    for c in rows {
        let (r, alpha, beta) = c.computed;
        s.push_str(&format!("{},{},{},{},{},{},{}\n", c.l, c.n, c.a, r, alpha, beta, c.pass));
    }
    s
}

/// Modexp (and lower-register measurement) under each requested layout,
/// with bond profiles and per-stage peaks.
pub fn cmd_profile(args: &ProfileArgs) -> CliResult<RunReport> {
    let instance = SemiprimeInstance::new(args.n, args.a)?;
    let mut report = RunReport::new("profile");
    report.instance = Some(InstanceEcho { n: args.n, a: args.a, l: instance.l, a_drawn: false, lucky_factors: Vec::new() });
    for layout in args.layout.layouts() {
        let mut state = build_initial(&instance);
        state.mps.set_element_limit(Some(args.max_elements));
        run_modexp(&mut state, layout, PlateauPolicy::default())?;
        let mut peaks = BTreeMap::new();
        peaks.insert("modexp".to_string(), state.mps.accountant().peak());
        let mut profiles = vec![state.profile("modexp")];
        let lower_dim = state.lower_dim();
        state.mps.reset_peak();
        measure_lower_register(&mut state, &mut ChaCha8Rng::seed_from_u64(args.seed), None)?;
        peaks.insert("measure_lower".to_string(), state.mps.accountant().peak());
        profiles.push(state.profile("measure_lower"));
        report.peak_elements.insert(layout.to_string(), peaks);
        report.profiles.push(LayoutProfile { layout, alpha_hat: state.alpha_hat, lower_dim, profiles });
    }
    Ok(report)
}

/// `stage,bond,rank,layout` rows.
pub fn profile_csv(profiles: &[LayoutProfile]) -> String {
    let mut s = String::from("stage,bond,rank,layout\n");
    for lp in profiles {
        for p in &lp.profiles {
            for (b, r) in p.ranks.iter().enumerate() {
                s.push_str(&format!("{},{},{},{}\n", p.stage, b, r, lp.layout));
            }
        }
    }
    s
}

fn element_comparison(report: &RunReport) -> String {
    let mut s = String::new();
    for (layout, peaks) in &report.peak_elements {
        s.push_str(&format!("peak elements ({layout}):"));
        for (stage, p) in peaks {
            s.push_str(&format!(" {stage}={p}"));
        }
        s.push('\n');
    }
    if let (Some(st), Some(dy)) = (report.peak_elements.get("static"), report.peak_elements.get("dynamic")) {
        let (a, b) = (st["modexp"], dy["modexp"]);
        s.push_str(&format!(
            "modexp peak: dynamic {b} vs static {a} ({}; ratio {:.3})\n",
            if b < a { "dynamic < static" } else { "dynamic >= static" },
            a as f64 / b as f64
        ));
    }
    s
}

fn records_csv(records: &[SampleRecord]) -> String {
    let mut s = String::from("index,layout,a,lower_residue,s,r_candidate,factor_p,factor_q\n");
    for (i, r) in records.iter().enumerate() {
        let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            i,
            r.layout,
            r.a,
            r.lower_residue,
            r.s,
            opt(r.r_candidate),
            opt(r.factors.map(|f| f.0)),
            opt(r.factors.map(|f| f.1))
        ));
    }
    s
}

/// The exact distribution for `(l, r)` or `(N, a)`.
pub fn cmd_oracle(args: &OracleArgs) -> CliResult<RunReport> {
    let (l, r, instance) = match (args.r, args.n, args.a) {
        (Some(r), _, _) => {
            let l = args.l.ok_or_else(|| CliError::InvalidInput("--r needs --l".into()))?;
            (l, r, None)
        }
        (None, Some(n), Some(a)) => {
            let inst = SemiprimeInstance::new(n, a)?;
            let r = multiplicative_order(a, n)?;
            (args.l.unwrap_or(inst.l), r, Some(inst))
        }
        _ => return Err(CliError::InvalidInput("give --r with --l, or --n and --a".into())),
    };
    if !(1..=13).contains(&l) {
        return Err(CliError::InvalidInput(format!("l = {l} is outside 1..=13")));
    }
    let table: DistributionTable = exact_distribution(l, r)?;
    let mut report = RunReport::new("oracle");
    report.instance = instance.map(|i| InstanceEcho { n: i.n, a: i.a, l: i.l, a_drawn: false, lucky_factors: Vec::new() });
    report.distribution = Some(DistributionDump { l, r, probabilities: table.probabilities });
    Ok(report)
}

fn distribution_csv(p: &[f64]) -> String {
    let mut s = String::from("s,probability\n");
    for (i, x) in p.iter().enumerate() {
        s.push_str(&format!("{i},{x:.16e}\n"));
    }
    s
}
