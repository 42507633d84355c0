//! Command-line front end for `nlab-core`: typed JSON files, instrument
//! application, scenario reports and seeded relation sweeps.
//!
//! Exit codes: 0 success, 1 parse or I/O error, 2 validation error,
//! 3 relation failure.

pub mod commands;
pub mod error;
pub mod sweep;
pub mod wire;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlab_core::relations::RelationFamily;

use crate::commands::{DilateMode, GenerateKind, Output, Rule};
use crate::error::CliError;
use crate::sweep::{Injection, SweepConfig};

#[derive(Debug, Parser)]
#[command(name = "nlab", version, about = "Naimark dilations, intrinsic state updates and relation sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a typed JSON object against its invariants.
    Validate { path: PathBuf },
    /// Build a Naimark dilation of a POVM.
    Dilate {
        povm: PathBuf,
        #[arg(long, value_enum, default_value = "canonical-luders")]
        mode: ModeArg,
        /// Correction family for `--mode from-kraus`.
        #[arg(long)]
        kraus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read the correction family off a dilation or coupling.
    Extract {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a state-update rule and print the branches.
    Apply {
        state: PathBuf,
        /// pvm, povm, kraus, dilation or coupling file, depending on the rule.
        measurement: PathBuf,
        #[arg(long, value_enum)]
        rule: RuleArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded relation sweep.
    Verify(VerifyArgs),
    /// Run a worked example and print its report.
    Scenario {
        #[command(subcommand)]
        which: ScenarioCommand,
    },
    /// Write a seeded random object.
    Generate {
        #[arg(value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Outcomes (povm), rank (density) or ancilla dimension (coupling).
        #[arg(long, default_value_t = 2)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// SweepConfig JSON; flags override its fields.
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Comma-separated relation ids.
    #[arg(long, value_delimiter = ',')]
    pub relations: Option<Vec<String>>,
    /// Negative control to mix in (`broken-kraus`).
    #[arg(long)]
    pub inject: Vec<String>,
    /// Append the saturation cases.
    #[arg(long)]
    pub witnesses: bool,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Report file; `.json` selects JSON unless `--format` says otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    /// Three-outcome unambiguous discrimination measurement.
    Idp {
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        /// First seed of the random input states.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seven-outcome qutrit measurement and its repetition.
    SevenOutcome {
        /// Index of the first-round outcome to condition on.
        #[arg(long, default_value_t = 0)]
        first: usize,
        /// Input state (defaults to the maximally mixed qutrit).
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    CanonicalLuders,
    GramRoot,
    FromKraus,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RuleArg {
    Projective,
    Luders,
    Intrinsic,
    Textbook,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Density,
    Povm,
    Pvm,
    Coupling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl VerifyArgs {
    pub fn config(&self) -> Result<SweepConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?
            }
            None => SweepConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(d) = &self.dims {
            cfg.dims = d.clone();
        }
        if let Some(a) = &self.alphas {
            cfg.alphas = a.clone();
        }
        if let Some(t) = self.tol {
            cfg.tolerance = t;
        }
        if let Some(r) = &self.relations {
            cfg.relations = r
                .iter()
                .map(|s| RelationFamily::parse(s).ok_or_else(|| CliError::Parse(format!("unknown relation {s:?}"))))
                .collect::<Result<_, _>>()?;
        }
        for s in &self.inject {
            let inj = Injection::parse(s).ok_or_else(|| CliError::Parse(format!("unknown injection {s:?}")))?;
            if !cfg.inject.contains(&inj) {
                cfg.inject.push(inj);
            }
        }
        cfg.witnesses |= self.witnesses;
        Ok(cfg)
    }

    fn json(&self) -> bool {
        match self.format {
            Some(f) => f == FormatArg::Json,
            None => self
                .out
                .as_deref()
                .and_then(Path::extension)
                .is_some_and(|e| e == "json"),
        }
    }
}

fn emit(out: &Output, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, &out.stdout)?,
        None => std::io::stdout().write_all(out.stdout.as_bytes())?,
    }
    if !out.stderr.is_empty() {
        eprint!("{}", out.stderr);
    }
    Ok(())
}

/// Runs one parsed command, writing its output.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { path } => emit(&commands::validate(&path)?, None),
        Command::Dilate { povm, mode, kraus, out } => {
            let mode = match mode {
                ModeArg::CanonicalLuders => DilateMode::CanonicalLuders,
                ModeArg::GramRoot => DilateMode::GramRoot,
                ModeArg::FromKraus => DilateMode::FromKraus,
            };
            emit(&commands::dilate(&povm, mode, kraus.as_deref())?, out.as_deref())
        }
        Command::Extract { path, out } => emit(&commands::extract(&path)?, out.as_deref()),
        Command::Apply {
            state,
            measurement,
            rule,
            out,
        } => {
            let rule = match rule {
                RuleArg::Projective => Rule::Projective,
                RuleArg::Luders => Rule::Luders,
                RuleArg::Intrinsic => Rule::Intrinsic,
                RuleArg::Textbook => Rule::Textbook,
            };
            emit(&commands::apply(&state, &measurement, rule)?, out.as_deref())
        }
        Command::Verify(args) => {
            let cfg = args.config()?;
            let (output, ok) = commands::verify(&cfg, args.json())?;
            emit(&output, args.out.as_deref())?;
            if ok {
                Ok(())
            } else {
                Err(CliError::RelationFailure(commands::failure_message(&output.stderr)))
            }
        }
        Command::Scenario { which } => match which {
            ScenarioCommand::Idp { beta, seed, out } => emit(&commands::scenario_idp(beta, seed)?, out.as_deref()),
            ScenarioCommand::SevenOutcome { first, state, out } => {
                emit(&commands::scenario_seven(first, state.as_deref())?, out.as_deref())
            }
        },
        Command::Generate {
            kind,
            dim,
            count,
            seed,
            out,
        } => {
            let kind = match kind {
                KindArg::Density => GenerateKind::Density,
                KindArg::Povm => GenerateKind::Povm,
                KindArg::Pvm => GenerateKind::Pvm,
                KindArg::Coupling => GenerateKind::Coupling,
            };
            emit(&commands::generate(kind, dim, count, seed)?, out.as_deref())
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
