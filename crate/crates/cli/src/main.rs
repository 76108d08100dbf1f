//! `amcc`: classify empirical models, build parity and constraint models, run
//! the enumeration experiments and the secret-sharing simulator.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error (witness on
//! stderr), 3 internal-consistency failure.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amcc::analysis::{classify, contextual_fraction};
use amcc::applications::{min_entropy, secret_share_simulate, Source};
use amcc::catalog::{by_name, CATALOG_NAMES};
use amcc::construct::{
    anchored_base, csp_enumerate_extension, enumerate_parity, parity_consistent, parity_system, parity_to_possibilistic,
    parse_bits, scan_eight_param, scan_eight_param_pairs, ParityVerdict, ANCHORED_EXTENDABLE,
};
use amcc::empirical::{lift_uniform, EmpiricalModel};
use amcc::scenario::{parse_bell_name, setting_tuple, MeasurementScenario};
use amcc::{Error, Rational};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "amcc", version, about = "Contextuality analysis of empirical models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full classification report of a model file (`-` for stdin).
    Classify {
        #[arg(default_value = "-")]
        model: String,
    },
    /// Contextual fraction of a model file as an exact rational.
    Cf {
        #[arg(default_value = "-")]
        model: String,
    },
    /// Write a catalog model (stdout unless --emit is given).
    Catalog(CatalogArgs),
    /// GF(2) consistency of a parity system, or its uniform-lift model.
    Parity(ParityArgs),
    #[command(subcommand)]
    Enumerate(EnumerateCommand),
    #[command(subcommand)]
    Scan(ScanCommand),
    /// Guessing probability and min-entropy of a within-context marginal.
    Entropy(EntropyArgs),
    /// Simulate the parity-test secret-sharing protocol.
    SecretShare(ShareArgs),
}

#[derive(Args)]
struct CatalogArgs {
    /// One of: pr-box, ghz, three-way-box, asymmetric-scc.
    name: String,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    alpha: u8,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    beta: u8,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    gamma: u8,
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct ParityArgs {
    /// Scenario name, e.g. bell-3-2-2.
    #[arg(long)]
    scenario: String,
    /// One bit per context, e.g. 01111111.
    #[arg(long)]
    parities: String,
    /// Write the uniform-lift model to this path (`-` for stdout).
    #[arg(long, conflicts_with = "classify")]
    emit: Option<PathBuf>,
    /// Print the classification report of the uniform lift.
    #[arg(long)]
    classify: bool,
}

#[derive(Subcommand)]
enum EnumerateCommand {
    /// Every parity vector of a scenario.
    Parity {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also print one JSON line per parity vector.
        #[arg(long)]
        verdicts: bool,
    },
    /// Extensions of a Boolean constraint preset.
    Csp {
        #[arg(long, value_enum, default_value_t = CspPreset::Anchored)]
        preset: CspPreset,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also print the passing candidate indices, one per line.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CspPreset {
    /// Fixed statements in every context, absent sections added to four.
    Anchored,
}

#[derive(Subcommand)]
enum ScanCommand {
    /// Contextual fraction over the eight-parameter family.
    EightParam {
        /// Comma-separated values used for every parameter, e.g. 0,1/16,1/8.
        #[arg(long, conflicts_with = "pairs")]
        grid: Option<String>,
        /// Pin parameter i (1-based) to v, e.g. --fix 1=1/4.
        #[arg(long = "fix", value_name = "I=V")]
        fixed: Vec<String>,
        /// Every pair of parameters over these values, the rest 0.
        #[arg(long)]
        pairs: Option<String>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also print one JSON line per grid point.
        #[arg(long)]
        points: bool,
    },
}

#[derive(Args)]
struct EntropyArgs {
    model: String,
    /// Setting bits (e.g. 011) or a context key (e.g. X1|X2p|X3p).
    #[arg(long)]
    context: String,
    /// Comma-separated observable labels.
    #[arg(long)]
    subset: String,
}

#[derive(Args)]
struct ShareArgs {
    #[arg(long, default_value = "bell-3-2-2")]
    scenario: String,
    #[arg(long)]
    parities: String,
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Secret as hex digits, four bits each, most significant first.
    #[arg(long)]
    secret: String,
    /// Flip one outcome bit every round.
    #[arg(long)]
    adversarial: bool,
}

enum Failure {
    Usage(String),
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult = Result<(), Failure>;

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::Io(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{path}: {e}")))
    }
}

fn load_model(path: &str) -> Result<EmpiricalModel, Failure> {
    Ok(EmpiricalModel::from_json(&read_input(path)?, true)?)
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        _ => {
            io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(format!("stdout: {e}")))?;
            Ok(())
        }
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{v}");
}

fn parse_rational(text: &str) -> Result<Rational, Failure> {
    text.trim().parse().map_err(|_| Failure::Usage(format!("`{text}` is not a rational")))
}

fn parse_rational_list(text: &str) -> Result<Vec<Rational>, Failure> {
    text.split(',').map(parse_rational).collect()
}

fn parse_hex_bits(text: &str) -> Result<Vec<u8>, Failure> {
    let digits = text.trim().trim_start_matches("0x");
    if digits.is_empty() {
        return Err(Failure::Usage("empty secret".into()));
    }
    let mut bits = Vec::with_capacity(digits.len() * 4);
    for ch in digits.chars() {
        let d = ch.to_digit(16).ok_or_else(|| Failure::Usage(format!("`{ch}` is not a hex digit")))?;
        bits.extend((0..4).rev().map(|k| ((d >> k) & 1) as u8));
    }
    Ok(bits)
}

/// A context given as setting bits of a Bell scenario or as a `|` key.
fn resolve_context(s: &MeasurementScenario, text: &str) -> Result<usize, Failure> {
    if let (Some((n, m)), true) = (s.bell_shape(), text.chars().all(|c| c.is_ascii_digit())) {
        let settings: Vec<usize> = text.chars().map(|c| c as usize - '0' as usize).collect();
        if settings.len() != n || settings.iter().any(|&v| v >= m) {
            return Err(Failure::Usage(format!("`{text}` is not a setting tuple of {n} parties")));
        }
        let index = settings.iter().fold(0, |acc, &v| acc * m + v);
        debug_assert_eq!(setting_tuple(index, n, m), settings);
        return Ok(index);
    }
    Ok(s.context_by_key(text)?)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Classify { model } => {
            let m = load_model(&model)?;
            print_json(&classify(&m)?.to_json_value(m.scenario()));
        }
        Command::Cf { model } => {
            println!("{}", contextual_fraction(&load_model(&model)?)?);
        }
        Command::Catalog(a) => {
            let m = by_name(&a.name, (a.alpha == 1, a.beta == 1, a.gamma == 1)).ok_or_else(|| {
                Failure::Usage(format!("unknown catalog model `{}` (known: {})", a.name, CATALOG_NAMES.join(", ")))
            })?;
            write_output(a.emit.as_deref(), &(m.to_json_pretty() + "\n"))?;
        }
        Command::Parity(a) => {
            let s = parse_bell_name(&a.scenario)?;
            let ps = parity_system(&s, &parse_bits(&a.parities)?)?;
            if let Some(path) = a.emit {
                let m = lift_uniform(&parity_to_possibilistic(&ps))?;
                write_output(Some(&path), &(m.to_json_pretty() + "\n"))?;
            } else if a.classify {
                let m = lift_uniform(&parity_to_possibilistic(&ps))?;
                print_json(&classify(&m)?.to_json_value(m.scenario()));
            } else {
                let v = match parity_consistent(&ps)? {
                    ParityVerdict::Consistent(g) => json!({"consistent": true, "solution": g.bit_string()}),
                    ParityVerdict::Inconsistent(cert) => json!({"consistent": false, "certificate": cert}),
                };
                print_json(&v);
            }
        }
        Command::Enumerate(EnumerateCommand::Parity { scenario, jobs, verdicts }) => {
            let r = enumerate_parity(&parse_bell_name(&scenario)?, jobs)?;
            print_json(&json!({"total": r.total, "amcc": r.amcc, "consistent": r.consistent, "rank": r.rank}));
            if verdicts {
                for rec in &r.records {
                    print_json(&serde_json::to_value(rec).expect("record serializes"));
                }
            }
        }
        Command::Enumerate(EnumerateCommand::Csp { preset: CspPreset::Anchored, jobs, list }) => {
            let r = csp_enumerate_extension(&anchored_base(), &ANCHORED_EXTENDABLE, jobs)?;
            print_json(&json!({"candidates": r.candidates, "passing": r.passing}));
            if list {
                for i in &r.list {
                    println!("{i}");
                }
            }
        }
        Command::Scan(ScanCommand::EightParam { grid, fixed, pairs, jobs, points }) => {
            let report = if let Some(values) = pairs {
                if !fixed.is_empty() {
                    return Err(Failure::Usage("--fix applies to --grid scans only".into()));
                }
                scan_eight_param_pairs(&parse_rational_list(&values)?, jobs)?
            } else {
                let values = parse_rational_list(grid.as_deref().unwrap_or("0,1/16,1/8"))?;
                let fixed = fixed
                    .iter()
                    .map(|f| {
                        let (i, v) = f.split_once('=').ok_or_else(|| Failure::Usage(format!("`{f}` is not I=V")))?;
                        let i: usize = i.trim().parse().map_err(|_| Failure::Usage(format!("bad index in `{f}`")))?;
                        if !(1..=8).contains(&i) {
                            return Err(Failure::Usage(format!("parameter index {i} not in 1..=8")));
                        }
                        Ok((i - 1, parse_rational(v)?))
                    })
                    .collect::<Result<Vec<_>, Failure>>()?;
                scan_eight_param(&vec![values; 8], &fixed, jobs)?
            };
            print_json(&report.summary_json());
            if points {
                for p in &report.points {
                    print_json(&serde_json::to_value(p).expect("point serializes"));
                }
            }
        }
        Command::Entropy(a) => {
            let m = load_model(&a.model)?;
            let c = resolve_context(m.scenario(), &a.context)?;
            let labels: Vec<&str> = a.subset.split(',').map(str::trim).filter(|l| !l.is_empty()).collect();
            let u = m.scenario().resolve(&labels)?;
            print_json(&serde_json::to_value(min_entropy(&m, c, &u)?).expect("report serializes"));
        }
        Command::SecretShare(a) => {
            let s = parse_bell_name(&a.scenario)?;
            let ps = parity_system(&s, &parse_bits(&a.parities)?)?;
            let secret = parse_hex_bits(&a.secret)?;
            let source = if a.adversarial { Source::BitFlip } else { Source::Honest };
            match secret_share_simulate(&ps, &secret, a.rounds, a.test_fraction, a.seed, source) {
                Ok(out) => {
                    write_output(None, &out.transcript.to_jsonl())?;
                    let ok = out.recovered.iter().zip(&out.sent).filter(|(a, b)| a == b).count();
                    eprintln!(
                        "{} test rounds passed; {ok}/{} secret bits reconstructed",
                        out.test_rounds,
                        out.sent.len()
                    );
                }
                Err(Error::Aborted { round, transcript }) => {
                    write_output(None, &transcript)?;
                    return Err(Failure::Core(Error::Aborted { round, transcript: String::new() }));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn witness_json(e: &Error) -> Option<String> {
    match e {
        Error::SignalingDetected(w) | Error::SignalingInput(w) => serde_json::to_string(w).ok(),
        _ => None,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            if let Some(w) = witness_json(&e) {
                eprintln!("witness: {w}");
            }
            if matches!(e, Error::InternalConsistency(_)) {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
