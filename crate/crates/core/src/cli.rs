//! Command surface for the `ipstar` binary.
//!
//! Every command renders both a JSON document and a plain table; `--format`
//! picks one (JSON by default when `--output` is given, table otherwise).
//! Integers in JSON are decimal strings. Randomized commands draw from
//! `ChaCha8Rng::seed_from_u64(--seed)` and name that generator in their
//! output, so equal arguments give byte-identical output.
//!
//! Exit codes: 0 success, 2 verification failure, 3 cap or budget
//! exceeded, 4 malformed input.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cert::{decimal_strings, parse_decimals, CertificateRecord};
use crate::dynamics::{multi_return_set, pigeonhole_r, DynamicsError, FiniteMps, MeasurableSet};
use crate::families::{
    self, check_zfsp_properties_seeded, FamilyError, FamilyOracle, ZigzagCertificate, ZigzagRecord,
};
use crate::sets::{fs_enumerate, Block, BlockChain, Caps, FinSeq, MultiSeq, SetsError};
use crate::witness::{
    self, decompose, RefutationCertificate, RefutationReason, WitnessError, WitnessFormula,
    ZigzagHitCertificate, ENUMERATE_CAP, WITNESS_CAP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;

/// Name of the generator behind every randomized corpus.
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64";

pub const COUNTEREXAMPLE_DEPTH_CAP: usize = 64;
pub const TRIALS_CAP: usize = 10_000;
pub const BOUND_CAP: u64 = 1_000_000;
pub const SAMPLES_CAP: usize = 1_000;
pub const BUDGET_CAP: u64 = 1_000_000_000;
const CHAIN_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "ipstar",
    version,
    about = "Finite sums, IP sets and zigzag subsystems"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Depth for counterexample chains, or r for witness.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Pointwise bound for family checks.
    #[arg(long, global = true)]
    pub bound: Option<u64>,
    /// Upper limit for enumerate.
    #[arg(long, global = true)]
    pub limit: Option<u64>,
    /// Seed for randomized corpora.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Candidate blocks per zigzag step.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Decide membership in A and show the even/odd decomposition.
    Member { n: String },
    /// List A ∩ [1, limit].
    Enumerate {
        #[arg(id = "limit_arg", value_name = "LIMIT")]
        limit: Option<u64>,
    },
    /// Emit a verified r-term sequence whose finite sums lie in A.
    Witness {
        r: Option<usize>,
        #[arg(long, value_enum, default_value_t = FormulaArg::Repaired)]
        formula: FormulaArg,
    },
    /// Find a finite sum outside A for a sequence of elements of A.
    Refute { seq_file: PathBuf },
    /// Return set of a finite system: { n : μ(⋂ T^{-in} A_i) > 0 }.
    Recurrence {
        system_file: PathBuf,
        /// Point lists such as `0,2`; one set repeated k+1 times, or k+1 sets.
        #[arg(required = true)]
        sets: Vec<String>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Build and verify zigzag sum subsystems inside a family member.
    Zigzag {
        family: String,
        /// Sequences separated by blank lines.
        sequences_file: PathBuf,
        steps: Option<usize>,
        #[arg(id = "budget_arg", value_name = "BUDGET")]
        budget: Option<u64>,
    },
    /// Certify that sum subsystems of 4^t and 2·4^t always zigzag into A.
    Counterexample { trials: Option<usize> },
    /// Re-check a certificate file produced by any command.
    Verify { cert_file: PathBuf },
    /// Bounded check of the four family properties.
    CheckFamily {
        family: String,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulaArg {
    Repaired,
    AsPrinted,
}

impl From<FormulaArg> for WitnessFormula {
    fn from(f: FormulaArg) -> Self {
        match f {
            FormulaArg::Repaired => WitnessFormula::Repaired,
            FormulaArg::AsPrinted => WitnessFormula::AsPrinted,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn malformed(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_MALFORMED,
            message: message.into(),
        }
    }

    fn cap(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CAP,
            message: message.into(),
        }
    }

    fn verify(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VERIFY,
            message: message.into(),
        }
    }
}

impl From<SetsError> for CliError {
    fn from(e: SetsError) -> Self {
        match e {
            SetsError::CapExceeded { .. } => CliError::cap(e.to_string()),
            _ => CliError::malformed(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::SizeCap { .. } | DynamicsError::PeriodCap { .. } => {
                CliError::cap(e.to_string())
            }
            DynamicsError::PigeonholeViolation { .. } => CliError::verify(e.to_string()),
            _ => CliError::malformed(e.to_string()),
        }
    }
}

impl From<WitnessError> for CliError {
    fn from(e: WitnessError) -> Self {
        match e {
            WitnessError::CapExceeded { .. } => CliError::cap(e.to_string()),
            WitnessError::VerificationFailed { .. } | WitnessError::Rejected(_) => {
                CliError::verify(e.to_string())
            }
            WitnessError::Sets(inner) => inner.into(),
            _ => CliError::malformed(e.to_string()),
        }
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::BudgetExhausted { .. } => CliError::cap(e.to_string()),
            FamilyError::PropertyFailure(_) => CliError::verify(e.to_string()),
            FamilyError::Sets(inner) => inner.into(),
            FamilyError::Dynamics(inner) => inner.into(),
            _ => CliError::malformed(e.to_string()),
        }
    }
}

/// A command's result in both renderings.
struct Rendered {
    json: Value,
    table: String,
    code: i32,
    note: Option<String>,
}

impl Rendered {
    fn ok(json: Value, table: String) -> Self {
        Rendered {
            json,
            table,
            code: EXIT_OK,
            note: None,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(config) => run(&config),
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_MALFORMED,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            }
        }
    }
}

pub fn run(config: &RunConfig) -> Outcome {
    let result = validate(config).and_then(|()| dispatch(config));
    let rendered = match result {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                code: e.code,
                stdout: String::new(),
                stderr: format!("error: {}\n", e.message),
            }
        }
    };
    let format = config.format.unwrap_or(if config.output.is_some() {
        Format::Json
    } else {
        Format::Table
    });
    let mut body = match format {
        Format::Json => {
            serde_json::to_string_pretty(&rendered.json).expect("JSON values serialize")
        }
        Format::Table => rendered.table,
    };
    if !body.ends_with('\n') {
        body.push('\n');
    }
    // the table already carries the note when it goes to the terminal
    let echo_note = format == Format::Json || config.output.is_some();
    let mut stderr = match rendered.note {
        Some(n) if echo_note => format!("{n}\n"),
        _ => String::new(),
    };
    let stdout = match &config.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &body) {
                return Outcome {
                    code: EXIT_MALFORMED,
                    stdout: String::new(),
                    stderr: format!("error: cannot write {}: {e}\n", path.display()),
                };
            }
            let _ = writeln!(stderr, "wrote {}", path.display());
            String::new()
        }
        None => body,
    };
    Outcome {
        code: rendered.code,
        stdout,
        stderr,
    }
}

fn positive<T: PartialEq + Default>(value: Option<T>, what: &str) -> Result<(), CliError> {
    match value {
        Some(v) if v == T::default() => {
            Err(CliError::malformed(format!("{what} must be positive")))
        }
        _ => Ok(()),
    }
}

fn capped<T: PartialOrd + std::fmt::Display + Copy>(
    value: Option<T>,
    cap: T,
    what: &str,
) -> Result<(), CliError> {
    match value {
        Some(v) if v > cap => Err(CliError::cap(format!(
            "{what} {v} exceeds the cap of {cap}"
        ))),
        _ => Ok(()),
    }
}

/// Caps and positivity, checked before any work is done.
fn validate(config: &RunConfig) -> Result<(), CliError> {
    positive(config.depth, "--depth")?;
    positive(config.bound, "--bound")?;
    positive(config.limit, "--limit")?;
    capped(config.bound, BOUND_CAP, "--bound")?;
    capped(config.budget, BUDGET_CAP, "--budget")?;
    capped(config.limit, ENUMERATE_CAP, "--limit")?;
    match &config.command {
        Command::Enumerate { limit } => {
            positive(*limit, "limit")?;
            capped(*limit, ENUMERATE_CAP, "limit")?;
        }
        Command::Witness { r, .. } => {
            let r = r.or(config.depth);
            positive(r, "r")?;
            capped(r, WITNESS_CAP, "r")?;
        }
        Command::Recurrence { k, .. } => positive(*k, "k")?,
        Command::Zigzag { steps, budget, .. } => {
            let steps = steps.or(config.depth);
            positive(steps, "steps")?;
            capped(steps, Caps::default().zigzag_depth, "steps")?;
            capped(*budget, BUDGET_CAP, "budget")?;
        }
        Command::Counterexample { trials } => {
            capped(*trials, TRIALS_CAP, "trials")?;
            capped(config.depth, COUNTEREXAMPLE_DEPTH_CAP, "--depth")?;
            if config.depth.is_some_and(|d| d < 2) {
                return Err(CliError::malformed("--depth must be at least 2"));
            }
        }
        Command::CheckFamily { samples, .. } => {
            positive(Some(*samples), "--samples")?;
            capped(Some(*samples), SAMPLES_CAP, "--samples")?;
        }
        Command::Member { .. } | Command::Refute { .. } | Command::Verify { .. } => {}
    }
    Ok(())
}

fn dispatch(config: &RunConfig) -> Result<Rendered, CliError> {
    match &config.command {
        Command::Member { n } => cmd_member(n),
        Command::Enumerate { limit } => {
            let limit = limit
                .or(config.limit)
                .ok_or_else(|| CliError::malformed("enumerate needs a limit"))?;
            cmd_enumerate(limit)
        }
        Command::Witness { r, formula } => {
            let r = r
                .or(config.depth)
                .ok_or_else(|| CliError::malformed("witness needs r"))?;
            cmd_witness(r, (*formula).into())
        }
        Command::Refute { seq_file } => cmd_refute(seq_file),
        Command::Recurrence {
            system_file,
            sets,
            k,
        } => cmd_recurrence(system_file, sets, *k),
        Command::Zigzag {
            family,
            sequences_file,
            steps,
            budget,
        } => {
            let steps = steps
                .or(config.depth)
                .ok_or_else(|| CliError::malformed("zigzag needs a step count"))?;
            let budget = budget.or(config.budget).unwrap_or(10_000);
            let bound = config.bound.unwrap_or(200);
            cmd_zigzag(family, sequences_file, steps, budget, bound, config.seed)
        }
        Command::Counterexample { trials } => cmd_counterexample(
            config.depth.unwrap_or(20),
            trials.unwrap_or(50),
            config.seed,
        ),
        Command::Verify { cert_file } => cmd_verify(cert_file),
        Command::CheckFamily { family, samples } => {
            cmd_check_family(family, config.bound.unwrap_or(1000), *samples, config.seed)
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::malformed(format!("cannot read {}: {e}", path.display())))
}

fn parse_positive(text: &str) -> Result<BigUint, CliError> {
    let n: BigUint = text
        .trim()
        .parse()
        .map_err(|_| CliError::malformed(format!("{text:?} is not a decimal integer")))?;
    if n == BigUint::default() {
        return Err(CliError::malformed("integers must be positive"));
    }
    Ok(n)
}

/// One positive decimal integer per line; blank lines separate sequences
/// and `#` starts a comment line.
pub fn parse_sequence_groups(text: &str) -> Result<Vec<FinSeq>, CliError> {
    let mut groups = Vec::new();
    let mut current = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !current.is_empty() {
                groups.push(FinSeq::new(std::mem::take(&mut current))?);
            }
            continue;
        }
        current.push(parse_positive(line)?);
    }
    if !current.is_empty() {
        groups.push(FinSeq::new(current)?);
    }
    if groups.is_empty() {
        return Err(CliError::malformed("no integers found"));
    }
    Ok(groups)
}

fn cmd_member(n: &str) -> Result<Rendered, CliError> {
    let n = parse_positive(n)?;
    Ok(match decompose(&n) {
        Some(d) => Rendered::ok(
            json!({
                "kind": "member",
                "n": n.to_string(),
                "member": true,
                "h1": d.h1.to_vec(),
                "h2": d.h2.to_vec(),
            }),
            format!("{n} ∈ A, {d}"),
        ),
        None => Rendered::ok(
            json!({ "kind": "member", "n": n.to_string(), "member": false }),
            format!("{n} ∉ A"),
        ),
    })
}

fn cmd_enumerate(limit: u64) -> Result<Rendered, CliError> {
    let values = witness::enumerate_a(limit)?;
    let strings = decimal_strings(&values);
    Ok(Rendered::ok(
        json!({
            "kind": "enumerate",
            "limit": limit,
            "count": values.len(),
            "values": strings,
        }),
        format!("[{}]", strings.join(", ")),
    ))
}

/// JSON form of an `IP_r` witness.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct WitnessRecord {
    pub kind: String,
    pub inputs: WitnessInputs,
    pub sequence: Vec<String>,
    pub sums: Vec<String>,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct WitnessInputs {
    pub r: usize,
    pub formula: WitnessFormula,
}

fn cmd_witness(r: usize, formula: WitnessFormula) -> Result<Rendered, CliError> {
    let seq = witness::ipr_witness_with(r, formula)?;
    let sums: Vec<BigUint> = fs_enumerate(&seq)?.into_iter().collect();
    let record = WitnessRecord {
        kind: "ip-witness".into(),
        inputs: WitnessInputs { r, formula },
        sequence: decimal_strings(seq.entries()),
        sums: decimal_strings(&sums),
        verified: true,
    };
    let table = format!(
        "r={r} formula: x_i = {formula}\nsequence {seq}\n{} finite sums verified in A",
        sums.len()
    );
    Ok(Rendered::ok(to_json(&record), table))
}

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("records serialize")
}

fn cmd_refute(path: &Path) -> Result<Rendered, CliError> {
    let text = read_file(path)?;
    let groups = parse_sequence_groups(&text)?;
    let entries: Vec<BigUint> = groups.iter().flat_map(|g| g.entries().to_vec()).collect();
    let seq = FinSeq::new(entries)?;
    match witness::refute_ip(&seq)? {
        Some(cert) => {
            let table = format!(
                "FS{seq} escapes A: subset {} sums to {} ({})",
                cert.subset, cert.value, cert.reason
            );
            Ok(Rendered::ok(to_json(&cert.record(&seq)), table))
        }
        None => {
            let trivially = seq.len() == 1;
            let message = if trivially {
                "no refutation (trivially)".to_string()
            } else {
                format!("no refutation: every finite sum of {seq} lies in A")
            };
            Ok(Rendered {
                json: json!({
                    "kind": "no-refutation",
                    "inputs": { "sequence": decimal_strings(seq.entries()) },
                    "trivial": trivially,
                }),
                table: message.clone(),
                code: EXIT_VERIFY,
                note: Some(message),
            })
        }
    }
}

fn load_system(path: &Path) -> Result<FiniteMps, CliError> {
    Ok(FiniteMps::from_text(&read_file(path)?)?)
}

fn cmd_recurrence(path: &Path, sets: &[String], k: Option<usize>) -> Result<Rendered, CliError> {
    let system = load_system(path)?;
    let parsed = sets
        .iter()
        .map(|s| MeasurableSet::parse(system.size(), s))
        .collect::<Result<Vec<_>, _>>()?;
    let single = parsed.len() == 1;
    let sets: Vec<MeasurableSet> = match (parsed.len(), k) {
        (1, k) => vec![parsed[0].clone(); k.unwrap_or(1) + 1],
        (1.., None) => parsed,
        (n, Some(k)) if n == k + 1 => parsed,
        (n, Some(k)) => {
            return Err(CliError::malformed(format!(
                "k={k} needs one set or {} sets, got {n}",
                k + 1
            )))
        }
        (0, None) => return Err(CliError::malformed("at least one set is required")),
    };
    let k = sets.len() - 1;
    let rs = multi_return_set(&system, &sets)?;
    let measures: Vec<String> = sets.iter().map(|a| system.measure(a).to_string()).collect();
    let r = if single && k == 1 {
        pigeonhole_r(&system.measure(&sets[0])).ok()
    } else {
        None
    };

    let mut table = if rs.is_empty() {
        "empty".to_string()
    } else {
        rs.to_string()
    };
    if single {
        let _ = write!(table, "; μ(A)={}", measures[0]);
        if let Some(r) = r {
            let _ = write!(table, "; r={r}");
        }
    } else {
        for (i, m) in measures.iter().enumerate() {
            let _ = write!(table, "; μ(A_{i})={m}");
        }
    }
    let json = json!({
        "kind": "recurrence",
        "system_size": system.size(),
        "system_period": system.period(),
        "k": k,
        "sets": sets.iter().map(|a| a.points().collect::<Vec<_>>()).collect::<Vec<_>>(),
        "measures": measures,
        "empty": rs.is_empty(),
        "period": rs.period(),
        "residues": rs.residues(),
        "pigeonhole_r": r,
    });
    Ok(Rendered::ok(json, table))
}

/// Parses `mod:d`, `dyn:<system-file>:<points>`, `all`, `witness:A` or
/// `witness:B`.
pub fn parse_family(spec: &str) -> Result<FamilyOracle, CliError> {
    let spec = spec.trim();
    if let Some(d) = spec.strip_prefix("mod:") {
        let d: u64 = d
            .parse()
            .map_err(|_| CliError::malformed(format!("bad modulus in {spec:?}")))?;
        return Ok(families::modular_family(d)?);
    }
    if let Some(rest) = spec.strip_prefix("dyn:") {
        let (file, set) = rest
            .rsplit_once(':')
            .ok_or_else(|| CliError::malformed(format!("{spec:?} needs dyn:<file>:<set>")))?;
        let system = load_system(Path::new(file))?;
        let a = MeasurableSet::parse(system.size(), set)?;
        return Ok(families::dynamical_family(&system, &a)?);
    }
    match spec {
        "all" => Ok(FamilyOracle::all()),
        "witness:A" => Ok(families::witness_a_family()),
        "witness:B" => Ok(families::witness_b_family()),
        _ => Err(CliError::malformed(format!("unknown family {spec:?}"))),
    }
}

fn zigzag_table(cert: &ZigzagCertificate) -> String {
    let mut out = format!("family {}\n", cert.family);
    for (i, (chain, ys)) in cert.chains.iter().zip(&cert.subsystems).enumerate() {
        let _ = writeln!(
            out,
            "sequence {}: blocks {:?} -> ({})",
            i + 1,
            chain.blocks().iter().map(Block::to_vec).collect::<Vec<_>>(),
            decimal_strings(ys).join(",")
        );
    }
    let _ = write!(
        out,
        "{} zigzag sums and products verified at depth {}",
        cert.elements.len(),
        cert.depth()
    );
    out
}

fn cmd_zigzag(
    spec: &str,
    path: &Path,
    steps: usize,
    budget: u64,
    bound: u64,
    seed: u64,
) -> Result<Rendered, CliError> {
    let oracle = parse_family(spec)?;
    let groups = parse_sequence_groups(&read_file(path)?)?;
    let mseq = MultiSeq::new(groups)?;
    let report = check_zfsp_properties_seeded(&oracle, bound, 4, seed);
    if let Some(bad) = report.properties.iter().find(|p| !p.passed) {
        return Err(CliError::verify(format!(
            "{} fails {}: {}",
            oracle,
            bad.label,
            bad.counterexample.as_deref().unwrap_or("no detail")
        )));
    }
    match families::zigzag_construct(&oracle, &mseq, steps, budget) {
        Ok(cert) => {
            let record = cert.to_record(Some(spec), steps, budget);
            Ok(Rendered::ok(to_json(&record), zigzag_table(&cert)))
        }
        Err(FamilyError::BudgetExhausted {
            step,
            sequence,
            partial,
        }) => {
            let message = format!(
                "budget of {budget} candidates exhausted at step {step} (sequence {sequence}); partial certificate has depth {}",
                partial.depth()
            );
            let mut record = to_json(&partial.to_record(Some(spec), steps, budget));
            record["kind"] = json!("zigzag-partial");
            record["failed_step"] = json!(step);
            record["failed_sequence"] = json!(sequence);
            Ok(Rendered {
                json: record,
                table: format!("{}\n{message}", zigzag_table(&partial)),
                code: EXIT_CAP,
                note: Some(message),
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Random block chain over `1..=depth`: each index is skipped, appended to
/// the current block, or opens a new block with equal probability.
fn random_chain(rng: &mut ChaCha8Rng, depth: usize) -> BlockChain {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for t in 1..=depth {
        match rng.gen_range(0..3) {
            0 => {}
            1 if !blocks.is_empty() => blocks.last_mut().expect("nonempty").push(t),
            _ => blocks.push(vec![t]),
        }
    }
    BlockChain::from_indices(blocks).expect("indices are increasing")
}

/// Samples chain pairs and certifies, for each, a zigzag sum of the two
/// sum subsystems of `⟨4^t⟩` and `⟨2·4^t⟩` that lies in `A`.
pub fn counterexample_report(
    depth: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<(BlockChain, BlockChain, ZigzagHitCertificate)>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for trial in 1..=trials {
        let mut found = None;
        for _ in 0..CHAIN_ATTEMPTS {
            let c1 = random_chain(&mut rng, depth);
            let c2 = random_chain(&mut rng, depth);
            if c1.is_empty() || c2.is_empty() {
                continue;
            }
            match witness::zigzag_hit_certificate(&c1, &c2) {
                Ok(cert) => {
                    found = Some((c1, c2, cert));
                    break;
                }
                Err(WitnessError::NoSuitableBlock { .. }) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        let found = found.ok_or_else(|| {
            CliError::cap(format!(
                "trial {trial}: no chain pair with a usable block in {CHAIN_ATTEMPTS} draws"
            ))
        })?;
        out.push(found);
    }
    Ok(out)
}

fn cmd_counterexample(depth: usize, trials: usize, seed: u64) -> Result<Rendered, CliError> {
    let certs = counterexample_report(depth, trials, seed)?;
    let certified = certs.iter().filter(|(_, _, c)| c.verify().is_ok()).count();
    let summary = format!("no sum subsystems within depth avoid A: {certified}/{trials} certified");
    let mut table = format!("# generator: {GENERATOR}({seed}), depth {depth}\n");
    for (i, (_, _, cert)) in certs.iter().enumerate() {
        let _ = writeln!(
            table,
            "trial {}: H={{1,{}}} blocks {} + {} -> {} ({})",
            i + 1,
            cert.index_pair.1,
            cert.block_a,
            cert.block_b,
            cert.value,
            cert.decomp
        );
    }
    table.push_str(&summary);
    let records: Vec<CertificateRecord> =
        certs.iter().map(|(c1, c2, c)| c.record(c1, c2)).collect();
    let json = json!({
        "kind": "counterexample",
        "generator": GENERATOR,
        "seed": seed,
        "depth": depth,
        "trials": trials,
        "certified": certified,
        "certificates": records,
        "summary": summary,
    });
    let code = if certified == trials {
        EXIT_OK
    } else {
        EXIT_VERIFY
    };
    Ok(Rendered {
        json,
        table,
        code,
        note: None,
    })
}

fn check_family_table(report: &families::ZfspReport) -> String {
    let mut out = format!(
        "# generator: {GENERATOR}({}), bound {}, samples {}\nfamily {}\n",
        report.seed, report.bound, report.samples, report.oracle
    );
    for p in &report.properties {
        match &p.counterexample {
            None => {
                let _ = writeln!(out, "{}: pass ({} checks)", p.label, p.checks);
            }
            Some(cx) => {
                let _ = writeln!(out, "{}: FAIL ({cx})", p.label);
            }
        }
    }
    out
}

fn cmd_check_family(
    spec: &str,
    bound: u64,
    samples: usize,
    seed: u64,
) -> Result<Rendered, CliError> {
    let oracle = parse_family(spec)?;
    let report = check_zfsp_properties_seeded(&oracle, bound, samples, seed);
    let mut json = to_json(&report);
    json["kind"] = json!("check-family");
    json["generator"] = json!(GENERATOR);
    Ok(Rendered {
        table: check_family_table(&report),
        json,
        code: if report.all_passed() {
            EXIT_OK
        } else {
            EXIT_VERIFY
        },
        note: None,
    })
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, CliError> {
    v.get(key)
        .ok_or_else(|| CliError::malformed(format!("certificate lacks {key:?}")))
}

fn decode<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::malformed(e.to_string()))
}

fn parse_big(s: &str) -> Result<BigUint, CliError> {
    s.parse()
        .map_err(|_| CliError::malformed(format!("bad decimal {s:?}")))
}

fn verify_witness(record: &WitnessRecord) -> Result<String, CliError> {
    let seq = FinSeq::new(parse_decimals(&record.sequence).map_err(CliError::malformed)?)?;
    let listed: Vec<BigUint> = parse_decimals(&record.sums).map_err(CliError::malformed)?;
    let sums: Vec<BigUint> = fs_enumerate(&seq)?.into_iter().collect();
    if listed != sums {
        return Err(CliError::verify(
            "listed sums differ from the recomputed finite sums",
        ));
    }
    if let Some(bad) = sums.iter().find(|v| !witness::member_a(v)) {
        return Err(CliError::verify(format!("finite sum {bad} is not in A")));
    }
    Ok(format!(
        "ip-witness: {} finite sums of {seq} lie in A",
        sums.len()
    ))
}

fn verify_refutation(record: &CertificateRecord) -> Result<String, CliError> {
    let seq_strings: Vec<String> = decode(field(&record.inputs, "sequence")?)?;
    let seq = FinSeq::new(parse_decimals(&seq_strings).map_err(CliError::malformed)?)?;
    let [subset] = record.blocks.as_slice() else {
        return Err(CliError::malformed("refutation needs exactly one block"));
    };
    let reason: RefutationReason = match record.reason.as_deref() {
        Some("case-I") => RefutationReason::CaseI,
        Some("case-II") => RefutationReason::CaseII,
        Some("general") => RefutationReason::General,
        other => return Err(CliError::malformed(format!("unknown reason {other:?}"))),
    };
    let cert = RefutationCertificate {
        subset: Block::new(subset.iter().copied())?,
        value: parse_big(&record.value)?,
        reason,
    };
    cert.verify(&seq)?;
    Ok(format!(
        "ip-refutation: subset {} of {seq} sums to {} outside A",
        cert.subset, cert.value
    ))
}

fn verify_hit(record: &CertificateRecord) -> Result<ZigzagHitCertificate, CliError> {
    let chain1: BlockChain = decode(field(&record.inputs, "chain1")?)?;
    let chain2: BlockChain = decode(field(&record.inputs, "chain2")?)?;
    let (one, k): (usize, usize) = decode(field(&record.inputs, "index_pair")?)?;
    let [a, b] = record.blocks.as_slice() else {
        return Err(CliError::malformed("zigzag hit needs exactly two blocks"));
    };
    let block_a = Block::new(a.iter().copied())?;
    let block_b = Block::new(b.iter().copied())?;
    if chain1.block(one) != Some(&block_a) || chain2.block(k) != Some(&block_b) {
        return Err(CliError::verify("blocks do not match the recorded chains"));
    }
    let value = parse_big(&record.value)?;
    let decomp =
        decompose(&value).ok_or_else(|| CliError::verify(format!("{value} is not in A")))?;
    let cert = ZigzagHitCertificate {
        index_pair: (one, k),
        block_a,
        block_b,
        value,
        decomp,
    };
    cert.verify()?;
    Ok(cert)
}

fn verify_zigzag(record: &ZigzagRecord) -> Result<String, CliError> {
    let spec = record
        .family
        .as_deref()
        .ok_or_else(|| CliError::malformed("zigzag certificate names no family"))?;
    let oracle = parse_family(spec)?;
    let cert = ZigzagCertificate::from_record(record)?;
    let outcome = families::verify_certificate(&cert, &oracle)?;
    if !outcome.passed {
        return Err(CliError::verify(
            outcome
                .failure
                .unwrap_or_else(|| "verification failed".into()),
        ));
    }
    Ok(format!(
        "zigzag: {} elements in {} at depth {}",
        outcome.checked,
        oracle,
        cert.depth()
    ))
}

fn cmd_verify(path: &Path) -> Result<Rendered, CliError> {
    let text = read_file(path)?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?;
    let kind = field(&doc, "kind")?
        .as_str()
        .ok_or_else(|| CliError::malformed("kind must be a string"))?
        .to_string();
    let detail = match kind.as_str() {
        "ip-witness" => verify_witness(&decode(&doc)?)?,
        "ip-refutation" => verify_refutation(&decode(&doc)?)?,
        "zigzag-hit" => {
            let cert = verify_hit(&decode(&doc)?)?;
            format!("zigzag-hit: {} ∈ A, {}", cert.value, cert.decomp)
        }
        "zigzag" => verify_zigzag(&decode(&doc)?)?,
        "counterexample" => {
            let records: Vec<CertificateRecord> = decode(field(&doc, "certificates")?)?;
            for (i, r) in records.iter().enumerate() {
                verify_hit(r).map_err(|e| CliError {
                    code: e.code,
                    message: format!("certificate {}: {}", i + 1, e.message),
                })?;
            }
            format!(
                "counterexample: {n}/{n} zigzag hits re-verified",
                n = records.len()
            )
        }
        other => {
            return Err(CliError::malformed(format!(
                "unknown certificate kind {other:?}"
            )))
        }
    };
    Ok(Rendered::ok(
        json!({ "kind": "verification", "certificate": kind, "verified": true, "detail": detail }),
        format!("verified {detail}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_line(line: &str) -> Outcome {
        run_args(std::iter::once("ipstar").chain(line.split_whitespace()))
    }

    #[test]
    fn member_and_enumerate() {
        assert_eq!(run_line("member 36").stdout, "36 ∈ A, H1={1}, H2={2}\n");
        assert_eq!(run_line("member 4").stdout, "4 ∉ A\n");
        assert_eq!(run_line("enumerate 40").stdout, "[36]\n");
        assert_eq!(run_line("enumerate --limit 40").stdout, "[36]\n");
        assert_eq!(run_line("member 0").code, EXIT_MALFORMED);
        assert_eq!(run_line("member x").code, EXIT_MALFORMED);
    }

    #[test]
    fn caps_are_checked_before_dispatch() {
        assert_eq!(run_line("enumerate 2000000000").code, EXIT_CAP);
        assert_eq!(run_line("witness 21").code, EXIT_CAP);
        assert_eq!(run_line("counterexample --depth 65").code, EXIT_CAP);
        assert_eq!(run_line("witness 0").code, EXIT_MALFORMED);
        assert_eq!(run_line("bogus").code, EXIT_MALFORMED);
    }

    #[test]
    fn witness_output() {
        let out = run_line("witness 2 --format json");
        assert_eq!(out.code, 0);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["sequence"], json!(["132", "528"]));
        assert_eq!(v["sums"].as_array().unwrap().len(), 3);
        let w1: Value = serde_json::from_str(&run_line("witness 1 --format json").stdout).unwrap();
        assert_eq!(w1["sequence"], json!(["36"]));
        let printed = run_line("witness 2 --formula as-printed");
        assert_eq!(printed.code, EXIT_VERIFY);
        assert!(printed.stderr.contains("not in A") || printed.stderr.contains("verification"));
    }

    #[test]
    fn counterexample_small() {
        let out = run_line("counterexample 0");
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("0/0 certified"));
        let out = run_line("counterexample 5 --depth 2");
        assert!(out.stdout.contains("5/5 certified"));
        assert!(out.stdout.contains("-> 36 "));
    }

    #[test]
    fn family_parsing() {
        assert!(parse_family("mod:4").is_ok());
        assert_eq!(parse_family("mod:0").unwrap_err().code, EXIT_MALFORMED);
        assert_eq!(parse_family("dyn:nope").unwrap_err().code, EXIT_MALFORMED);
        assert_eq!(parse_family("weird").unwrap_err().code, EXIT_MALFORMED);
    }

    #[test]
    fn sequence_groups() {
        let groups = parse_sequence_groups("1\n2\n\n\n# c\n3\n4\n").unwrap();
        assert_eq!(
            groups,
            vec![
                FinSeq::from_u64s(&[1, 2]).unwrap(),
                FinSeq::from_u64s(&[3, 4]).unwrap()
            ]
        );
        assert!(parse_sequence_groups("1\n0\n").is_err());
        assert!(parse_sequence_groups("\n").is_err());
    }
}
