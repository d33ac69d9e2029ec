//! Command-line front end: configuration merging, subcommands, output files
//! and exit codes.
//!
//! Precedence, highest first: command-line flags, the TOML config file,
//! per-subcommand defaults. The output directory alone may also come from
//! the `QELECTION_OUT_DIR` environment variable, which sits between flags
//! and the file.
//!
//! Each run writes `transcript.jsonl` and `stats.csv` into the output
//! directory. Exit codes: 0 success, 2 validation error, 3 protocol abort,
//! 4 a statistics row or invariant outside its tolerance.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::adversary::{run_attack, AttackConfig, AttackKind, AuditView};
use crate::aqkd_basic::{run_session, BasicConfig, BasicCounter, NoTap};
use crate::aqkd_string::{
    bob_prepare, charlie_decode, charlie_decode_ecc, charlie_disclose_covering, setup_keys, voter_check,
    voter_randomize, voter_randomize_ecc, voter_unmask, StringParams,
};
use crate::election::baseline::{administrators_link, classical_baseline_run, BaselineConfig};
use crate::election::{fairness_holds, run_election, ElectionConfig, FaultPlan};
use crate::error::{Error, Result};
use crate::primitives::EccCode;
use crate::qubit::channel_transmit;
use crate::rng::seeded;
use crate::stats::{to_csv, AttackOutcome};
use crate::transcript::Transcript;

pub const OUT_DIR_ENV: &str = "QELECTION_OUT_DIR";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const STATS_FILE: &str = "stats.csv";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Tolerance for statistics rows, in binomial standard errors of the
/// closed form.
pub const SIGMA_TOLERANCE: f64 = 4.0;
/// Tolerance for exact rows.
pub const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "qelection", version, about = "Distributed quantum election simulator")]
struct Cli {
    /// TOML file with default parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Qubit-based key distribution sessions.
    AqkdBasic(Flags),
    /// Qubit-string key distribution sessions.
    AqkdString(Flags),
    /// One full election.
    Election(Flags),
    /// The classical two-administrator election and its collusion link.
    Baseline(Flags),
    /// A statistical attack or audit.
    Attack {
        /// Falls back to `kind` in the config file.
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Exact density-matrix audits.
    DensityAudit(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    voters: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<String>>,
    #[arg(long)]
    loss_p: Option<f64>,
    #[arg(long)]
    flip_p: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    /// `none`, `repetition` or `repetition:<r>`.
    #[arg(long)]
    ecc: Option<String>,
    #[arg(long)]
    check_bits: Option<usize>,
    #[arg(long)]
    max_retries: Option<usize>,
    #[arg(long)]
    flip_mask: bool,
    #[arg(long)]
    view: Option<String>,
}

/// Keys accepted in the config file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    l: Option<usize>,
    m: Option<usize>,
    s: Option<usize>,
    voters: Option<usize>,
    candidates: Option<Vec<String>>,
    loss_p: Option<f64>,
    flip_p: Option<f64>,
    trials: Option<u64>,
    ecc: Option<EccCode>,
    check_bits: Option<usize>,
    max_retries: Option<usize>,
    flip_mask: Option<bool>,
    view: Option<String>,
    kind: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    AqkdBasic,
    AqkdString,
    Election,
    Baseline,
    Attack(AttackKind),
    DensityAudit,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::AqkdBasic => "aqkd-basic".into(),
            Command::AqkdString => "aqkd-string".into(),
            Command::Election => "election".into(),
            Command::Baseline => "baseline".into(),
            Command::Attack(k) => format!("attack-{k}"),
            Command::DensityAudit => "density-audit".into(),
        }
    }
}

/// Fully resolved parameters for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub l: usize,
    pub m: usize,
    pub s: usize,
    pub voters: usize,
    pub candidates: Vec<String>,
    pub loss_p: f64,
    pub flip_p: f64,
    pub trials: u64,
    pub ecc: EccCode,
    pub check_bits: usize,
    pub max_retries: usize,
    pub flip_mask: bool,
    pub view: Option<AuditView>,
    pub out_dir: PathBuf,
}

struct Defaults {
    l: usize,
    m: usize,
    trials: u64,
    voters: usize,
    ecc: EccCode,
}

fn defaults(command: Command, lossy: bool) -> Defaults {
    let ecc = if lossy { EccCode::Repetition { r: 3 } } else { EccCode::None };
    let (l, m, trials, voters) = match command {
        Command::AqkdBasic => (0, 40, 1000, 0),
        Command::AqkdString if lossy => (24, 2, 1000, 0),
        Command::AqkdString => (32, 8, 1000, 0),
        Command::Election if lossy => (24, 2, 1, 5),
        Command::Election => (32, 8, 1, 5),
        Command::Baseline => (0, 0, 1, 5),
        Command::Attack(AttackKind::InterceptResend) => (0, 40, 10_000, 0),
        Command::Attack(AttackKind::ForgeBallot) => (6, 4, 100_000, 0),
        Command::Attack(AttackKind::BasisCollusion) => (0, 4, 100_000, 0),
        Command::Attack(AttackKind::TraceCollusion) => (0, 0, 10_000, 2),
        Command::Attack(AttackKind::DensityAudit) | Command::DensityAudit => (2, 2, 1, 0),
    };
    Defaults { l, m, trials, voters, ecc }
}

pub fn parse_ecc(s: &str) -> Result<EccCode> {
    let code = match s.split_once(':') {
        None if s == "none" => EccCode::None,
        None if s == "repetition" => EccCode::Repetition { r: 3 },
        Some(("repetition", r)) => {
            EccCode::Repetition { r: r.parse().map_err(|_| Error::Config(format!("bad repetition factor {r:?}")))? }
        }
        _ => return Err(Error::Config(format!("unknown ecc scheme {s:?}; use none, repetition or repetition:<r>"))),
    };
    code.validate()?;
    Ok(code)
}

fn parse_cli<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// Parses `argv` (program name first), merging `file` or the `--config`
/// file, and validates every downstream constraint.
pub fn parse_config<I, T>(argv: I, file: Option<&Path>) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = parse_cli(argv).map_err(|e| Error::Config(e.to_string()))?;
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    resolve(cli, file, env_out)
}

/// As [`parse_config`], with the environment override passed explicitly.
pub fn parse_config_with_env<I, T>(argv: I, file: Option<&Path>, env_out: Option<PathBuf>) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = parse_cli(argv).map_err(|e| Error::Config(e.to_string()))?;
    resolve(cli, file, env_out)
}

pub fn parse_config_text(text: &str) -> Result<()> {
    toml::from_str::<FileConfig>(text).map(|_| ()).map_err(|e| Error::Config(e.to_string()))
}

fn resolve(cli: Cli, file: Option<&Path>, env_out: Option<PathBuf>) -> Result<RunConfig> {
    let path = file.map(Path::to_path_buf).or(cli.config.clone());
    let fc: FileConfig = match &path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let (command, flags) = match cli.command {
        Sub::AqkdBasic(f) => (Command::AqkdBasic, f),
        Sub::AqkdString(f) => (Command::AqkdString, f),
        Sub::Election(f) => (Command::Election, f),
        Sub::Baseline(f) => (Command::Baseline, f),
        Sub::DensityAudit(f) => (Command::DensityAudit, f),
        Sub::Attack { kind, flags } => {
            let kind = kind.or(fc.kind.clone()).ok_or_else(|| Error::Config("attack needs --kind".into()))?;
            (Command::Attack(kind.parse()?), flags)
        }
    };
    let loss_p = flags.loss_p.or(fc.loss_p).unwrap_or(0.0);
    let flip_p = flags.flip_p.or(fc.flip_p).unwrap_or(0.0);
    let d = defaults(command, loss_p > 0.0 || flip_p > 0.0);
    let ecc = match flags.ecc.as_deref() {
        Some(s) => parse_ecc(s)?,
        None => fc.ecc.unwrap_or(d.ecc),
    };
    let view = flags.view.or(fc.view).map(|v| v.parse::<AuditView>()).transpose()?;
    let cfg = RunConfig {
        command,
        seed: cli.seed.or(fc.seed).unwrap_or(1),
        l: flags.l.or(fc.l).unwrap_or(d.l),
        m: flags.m.or(fc.m).unwrap_or(d.m),
        s: flags.s.or(fc.s).unwrap_or(4),
        voters: flags.voters.or(fc.voters).unwrap_or(d.voters),
        candidates: flags.candidates.or(fc.candidates).unwrap_or_else(|| vec!["A".into(), "B".into()]),
        loss_p,
        flip_p,
        trials: flags.trials.or(fc.trials).unwrap_or(d.trials),
        ecc,
        check_bits: flags.check_bits.or(fc.check_bits).unwrap_or(if ecc == EccCode::None { 4 } else { 8 }),
        max_retries: flags.max_retries.or(fc.max_retries).unwrap_or(if ecc == EccCode::None { 5 } else { 30 }),
        flip_mask: flags.flip_mask || fc.flip_mask.unwrap_or(false),
        view,
        out_dir: cli.out_dir.or(env_out).or(fc.out_dir).unwrap_or_else(|| PathBuf::from("out")),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn string_params(&self) -> StringParams {
        StringParams {
            l: self.l,
            m: self.m,
            ecc: self.ecc,
            flip_mask: self.flip_mask,
            check_bits: self.check_bits,
            ..Default::default()
        }
    }

    pub fn election_config(&self) -> ElectionConfig {
        ElectionConfig {
            voters: self.voters,
            candidates: self.candidates.clone(),
            s: self.s,
            string: self.string_params(),
            loss_p: self.loss_p,
            flip_p: self.flip_p,
            max_retries: self.max_retries,
            ..Default::default()
        }
    }

    pub fn basic_config(&self) -> BasicConfig {
        BasicConfig { m: self.m, loss_p: self.loss_p, flip_p: self.flip_p, ..Default::default() }
    }

    pub fn attack_config(&self) -> Option<AttackConfig> {
        match self.command {
            Command::Attack(kind) => Some(AttackConfig {
                kind,
                trials: self.trials,
                m: self.m,
                l: self.l,
                voters: self.voters,
                view: self.view,
            }),
            Command::DensityAudit => Some(AttackConfig {
                kind: AttackKind::DensityAudit,
                trials: 1,
                m: self.m,
                l: self.l,
                voters: 0,
                view: self.view,
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        match self.command {
            Command::AqkdBasic => self.basic_config().validate(),
            Command::AqkdString => {
                self.string_params().validate()?;
                if (self.loss_p > 0.0 || self.flip_p > 0.0) && self.ecc == EccCode::None {
                    return Err(Error::InvalidParameter("a lossy or noisy channel needs --ecc".into()));
                }
                Ok(())
            }
            Command::Election => self.election_config().validate(),
            Command::Baseline => self.baseline_config().validate(),
            Command::Attack(_) | Command::DensityAudit => {
                self.attack_config().expect("attack commands have an attack config").validate()
            }
        }
    }

    fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig { voters: self.voters, candidates: self.candidates.clone(), s: self.s, ..Default::default() }
    }
}

/// Rows, transcript and the overall verdict of one run.
#[derive(Debug)]
pub struct RunReport {
    pub rows: Vec<AttackOutcome>,
    pub transcript: Transcript,
    /// Invariant violations; empty on success.
    pub failures: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Whether a row agrees with its closed form: within [`SIGMA_TOLERANCE`]
/// standard errors for Monte Carlo rows, within [`EXACT_TOLERANCE`] for
/// exact ones. Rows without a closed form always pass.
pub fn row_passes(row: &AttackOutcome) -> bool {
    match row.closed_form {
        None => true,
        Some(c) if row.trials <= 1 => (row.estimate - c).abs() < EXACT_TOLERANCE,
        Some(_) => row.within_sigmas(SIGMA_TOLERANCE).unwrap_or(true),
    }
}

fn check_rows(rows: &[AttackOutcome]) -> Vec<String> {
    rows.iter()
        .filter(|r| !row_passes(r))
        .map(|r| format!("{} = {} outside tolerance of {:?}", r.metric, r.estimate, r.closed_form))
        .collect()
}

fn run_basic(cfg: &RunConfig) -> Result<RunReport> {
    let mut rng = seeded(cfg.seed);
    let mut transcript = Transcript::new(format!("{}-{:016x}", cfg.command.name(), cfg.seed));
    let bc = cfg.basic_config();
    let mut counter = BasicCounter::new();
    let (mut agreed, mut attempts, mut completed) = (0u64, 0u64, 0u64);
    for _ in 0..cfg.trials {
        let rep = run_session(&bc, &mut counter, &mut NoTap, &mut transcript, &mut rng)?;
        attempts += rep.attempts as u64;
        if let (Some(v), Some(c)) = (rep.verification.key(), &rep.charlie_key) {
            completed += 1;
            agreed += u64::from(v == c);
        }
    }
    let noiseless = cfg.loss_p == 0.0 && cfg.flip_p == 0.0;
    let rows = vec![
        AttackOutcome::from_counts("basic_completed", completed, cfg.trials, noiseless.then_some(1.0)),
        AttackOutcome::from_counts("basic_key_agreement", agreed, completed.max(1), noiseless.then_some(1.0)),
        AttackOutcome::exact("basic_mean_attempts", attempts as f64 / cfg.trials as f64, None),
    ];
    Ok(RunReport { failures: check_rows(&rows), rows, transcript })
}

fn run_string(cfg: &RunConfig) -> Result<RunReport> {
    let mut rng = seeded(cfg.seed);
    let mut t = Transcript::new(format!("{}-{:016x}", cfg.command.name(), cfg.seed));
    let params = cfg.string_params();
    let keys = setup_keys(&params, &mut rng)?;
    let vk = keys.voter_keys();
    let (mut recovered, mut undetected) = (0u64, 0u64);
    for i in 0..cfg.trials {
        let (bob, reg) = bob_prepare(&keys, &mut rng)?;
        t.record("aqkd", "bobs", "prepare-register", &i.to_be_bytes());
        let ok = if params.coded() {
            let mut reg = channel_transmit(reg, cfg.loss_p, cfg.flip_p, &mut rng)?;
            voter_unmask(&mut reg, &bob)?;
            match voter_randomize_ecc(reg, &vk, &params, &mut rng) {
                Ok((view, reg, serials)) => {
                    let mut reg = channel_transmit(reg, cfg.loss_p, cfg.flip_p, &mut rng)?;
                    t.record("aqkd", "anon", "deliver-register", &i.to_be_bytes());
                    let dec = charlie_decode_ecc(&mut reg, &serials, &keys, &mut rng)?;
                    let disclosed = dec
                        .key
                        .as_ref()
                        .and_then(|k| charlie_disclose_covering(k, &dec.weak, params.check_bits, &mut rng));
                    match (dec.key.as_ref(), disclosed) {
                        (Some(k), Some(d)) if voter_check(&view.key, &d) => {
                            if *k != view.key {
                                undetected += 1;
                            }
                            true
                        }
                        _ => false,
                    }
                }
                Err(Error::Undecodable(_)) => false,
                Err(e) => return Err(e),
            }
        } else {
            let mut reg = reg;
            voter_unmask(&mut reg, &bob)?;
            let (view, mut reg) = voter_randomize(reg, &vk, params.l, params.m, &mut rng)?;
            t.record("aqkd", "anon", "deliver-register", &i.to_be_bytes());
            let dec = charlie_decode(&mut reg, &keys, &mut rng)?;
            dec.accepted && dec.key == view.key
        };
        t.record("aqkd", "charlie", if ok { "decode-ok" } else { "decode-fail" }, &i.to_be_bytes());
        recovered += u64::from(ok);
    }
    let closed = (!params.coded()).then_some(1.0);
    let mut rows = vec![AttackOutcome::from_counts("string_key_recovered", recovered, cfg.trials, closed)];
    if params.coded() {
        rows.push(AttackOutcome::from_counts("string_undetected_mismatch", undetected, recovered.max(1), None));
    }
    Ok(RunReport { failures: check_rows(&rows), rows, transcript: t })
}

fn run_election_cmd(cfg: &RunConfig) -> Result<RunReport> {
    let mut rng = seeded(cfg.seed);
    let st = run_election(cfg.election_config(), FaultPlan::default(), &mut rng)?;
    let tally = st.tally.clone().expect("finished election has a tally");
    let mut rows: Vec<AttackOutcome> =
        tally.counts.iter().map(|(name, c)| AttackOutcome::exact(format!("tally_{name}"), *c as f64, None)).collect();
    let verified = st.voters.iter().filter(|v| v.verified == Some(true)).count() as u64;
    rows.push(AttackOutcome::from_counts("voters_verified", verified, st.voters.len().max(1) as u64, Some(1.0)));
    let mut failures = check_rows(&rows);
    let mut cast = vec![0usize; st.candidates.len()];
    for v in st.cast_votes().into_iter().flatten() {
        cast[v] += 1;
    }
    if tally.counts.iter().map(|(_, c)| *c).ne(cast.iter().copied()) {
        failures.push("tally differs from the cast votes".into());
    }
    if !fairness_holds(&st.transcript) {
        failures.push("tally information appeared before counting".into());
    }
    Ok(RunReport { rows, transcript: st.transcript, failures })
}

fn run_baseline(cfg: &RunConfig) -> Result<RunReport> {
    let mut rng = seeded(cfg.seed);
    let out = classical_baseline_run(&cfg.baseline_config(), &mut rng)?;
    let links = administrators_link(&out.bob1, &out.bob2, &out.board)?;
    let linked =
        links.iter().zip(&out.votes).filter(|(l, v)| l.as_ref() == Some(out.candidates.code(**v))).count() as u64;
    let mut rows: Vec<AttackOutcome> = out
        .tally
        .counts
        .iter()
        .map(|(name, c)| AttackOutcome::exact(format!("tally_{name}"), *c as f64, None))
        .collect();
    rows.push(AttackOutcome::from_counts(
        "administrators_link_accuracy",
        linked,
        out.votes.len().max(1) as u64,
        Some(1.0),
    ));
    Ok(RunReport { failures: check_rows(&rows), rows, transcript: out.transcript })
}

fn run_attack_cmd(cfg: &RunConfig) -> Result<RunReport> {
    let mut rng = seeded(cfg.seed);
    let ac = cfg.attack_config().expect("attack command");
    let mut t = Transcript::new(format!("{}-{:016x}", cfg.command.name(), cfg.seed));
    t.record("attack", "harness", "start", format!("{ac:?}").as_bytes());
    let rows = run_attack(&ac, &mut rng)?;
    for r in &rows {
        t.record("attack", "harness", "result", r.csv_row().as_bytes());
    }
    Ok(RunReport { failures: check_rows(&rows), rows, transcript: t })
}

/// Runs the configured subcommand without touching the filesystem.
pub fn run_subcommand(cfg: &RunConfig) -> Result<RunReport> {
    match cfg.command {
        Command::AqkdBasic => run_basic(cfg),
        Command::AqkdString => run_string(cfg),
        Command::Election => run_election_cmd(cfg),
        Command::Baseline => run_baseline(cfg),
        Command::Attack(_) | Command::DensityAudit => run_attack_cmd(cfg),
    }
}

/// Writes the transcript and statistics files; returns their paths.
pub fn write_artifacts(dir: &Path, report: &RunReport) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let tp = dir.join(TRANSCRIPT_FILE);
    let sp = dir.join(STATS_FILE);
    fs::write(&tp, report.transcript.to_jsonl())?;
    fs::write(&sp, to_csv(&report.rows))?;
    Ok((tp, sp))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Aborted(_) | Error::Undecodable(_) | Error::DuplicateTag | Error::KeyReuse => EXIT_ABORT,
        _ => EXIT_VALIDATION,
    }
}

/// Entry point for the binary: parse, run, write, map to an exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_cli(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let cfg = match resolve(cli, None, env_out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let report = match run_subcommand(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = write_artifacts(&cfg.out_dir, &report) {
        eprintln!("error: {e}");
        return EXIT_VALIDATION;
    }
    print!("{}", to_csv(&report.rows));
    if report.passed() {
        EXIT_OK
    } else {
        for f in &report.failures {
            eprintln!("check failed: {f}");
        }
        EXIT_CHECK_FAILED
    }
}
