//! Command-line front end. `run` does all the work so it can be tested
//! without spawning a process; the binary only forwards the exit code.
//!
//! Exit codes for `analyze`: 0 marginally stable, 1 asymptotically stable,
//! 2 unstable. `steady-state` exits 2 when it refuses to emit a basis. Any
//! input or validation error exits 64.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{self, CompartmentalSpec, DenseOptions, GeneratorSpec};
use crate::report::{to_dot, Report, Tolerances};
use crate::spectral::{Criticality, SpectralOptions};
use crate::stability::{SteadyStateOptions, Verdict};
use crate::system::{load_edge_list_json, load_matrix_market, CooperativeSystem, StateVector};
use crate::{analyze, AnalysisOptions};

pub const EXIT_MARGINAL: i32 = 0;
pub const EXIT_ASYMPTOTIC: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_DISAGREE: i32 = 3;
pub const EXIT_INPUT_ERROR: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "coopstab", version, about = "Stability and steady states of linear cooperative systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every block and print the stability report.
    Analyze(AnalyzeArgs),
    /// Emit the non-negative steady-state basis.
    SteadyState(SteadyStateArgs),
    /// Emit the condensation as a Graphviz digraph.
    Condense(CondenseArgs),
    /// Tabulate e^(At) m0 at the requested times.
    Simulate(SimulateArgs),
    /// Brute-force cross-checks and system generation.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Matrix Market coordinate
    Mm,
    /// Edge-list JSON
    Json,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input file, or `-` for stdin.
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    #[arg(long, default_value_t = SpectralOptions::default().crit_tol_rel)]
    pub crit_tol_rel: f64,
    #[arg(long, default_value_t = SpectralOptions::default().eig_tol)]
    pub eig_tol: f64,
    #[arg(long, default_value_t = SpectralOptions::default().max_iter)]
    pub max_iter: usize,
    #[arg(long, default_value_t = SpectralOptions::default().dense_cutoff)]
    pub dense_cutoff: usize,
    #[arg(long, default_value_t = SteadyStateOptions::default().residual_tol)]
    pub residual_tol: f64,
}

impl ToleranceArgs {
    fn spectral(&self) -> Result<SpectralOptions> {
        for (name, v) in [
            ("--crit-tol-rel", self.crit_tol_rel),
            ("--eig-tol", self.eig_tol),
            ("--residual-tol", self.residual_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(SpectralOptions {
            crit_tol_rel: self.crit_tol_rel,
            eig_tol: self.eig_tol,
            max_iter: self.max_iter,
            dense_cutoff: self.dense_cutoff,
            ..Default::default()
        })
    }

    fn steady(&self, force: bool) -> SteadyStateOptions {
        SteadyStateOptions {
            residual_tol: self.residual_tol,
            force,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Also write the condensation DOT graph to this file.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Human-readable table instead of JSON.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct SteadyStateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Compute 0-eigenvectors even when the system is not marginally stable.
    #[arg(long)]
    pub force_nullspace: bool,
    /// Write the basis here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct CondenseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Write the DOT graph here instead of stdout.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated, strictly increasing sample times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<f64>,
    /// File with the initial state (whitespace or comma separated).
    /// Defaults to one unit of mass on every node.
    #[arg(long)]
    pub initial: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Compare the block-wise verdict with a full dense eigen-analysis.
    Dense {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
    },
    /// Check that lim e^(tB) fixes the left Perron vector of each critical block.
    Limit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
    },
    /// Generate a random system as edge-list JSON.
    Generate {
        /// JSON generator spec; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Generate a compartmental system with a single trap instead.
        #[arg(long)]
        compartmental: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_INPUT_ERROR,
            };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::SteadyState(a) => cmd_steady_state(&a, out, err),
        Command::Condense(a) => cmd_condense(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Oracle(o) => cmd_oracle(o, out),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| io_err(path, e))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| io_err(path, e))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Loads a system, picking the format from the flag or the file extension.
pub fn load_system(input: &InputArgs) -> Result<CooperativeSystem> {
    let format = match input.format {
        Some(f) => f,
        None => match input.input.extension().and_then(|e| e.to_str()) {
            Some("mtx") | Some("mm") => InputFormat::Mm,
            Some("json") => InputFormat::Json,
            _ => {
                return Err(Error::InvalidArgument(
                    "cannot infer input format; pass --format mm or --format json".into(),
                ))
            }
        },
    };
    let text = read_text(&input.input)?;
    match format {
        InputFormat::Mm => load_matrix_market(&text),
        InputFormat::Json => load_edge_list_json(&text),
    }
}

fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::MarginallyStable => EXIT_MARGINAL,
        Verdict::AsymptoticallyStable => EXIT_ASYMPTOTIC,
        Verdict::Unstable => EXIT_UNSTABLE,
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let system = load_system(&args.input)?;
    let spectral = args.tol.spectral()?;
    let steady = args.tol.steady(false);
    let analysis = analyze(&system, &AnalysisOptions { spectral })?;
    let basis = match analysis.report.verdict {
        Verdict::MarginallyStable => Some(analysis.steady_state(&steady)?),
        _ => None,
    };
    if let Some(path) = &args.dot {
        write_text(
            path,
            &to_dot(&analysis.condensation, Some(&analysis.spectra), Some(&analysis.report)),
        )?;
    }
    let report = Report::build(&system, &analysis, Tolerances::new(&spectral, &steady), basis);
    let text = if args.pretty {
        report.to_pretty()
    } else {
        report.to_json() + "\n"
    };
    out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))?;
    Ok(exit_code(report.verdict))
}

#[derive(Debug, Serialize)]
struct BasisFile<'a> {
    verdict: Verdict,
    forced: bool,
    labels: &'a [String],
    basis: &'a [crate::stability::BasisVector],
}

pub fn cmd_steady_state(args: &SteadyStateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let system = load_system(&args.input)?;
    let spectral = args.tol.spectral()?;
    let analysis = analyze(&system, &AnalysisOptions { spectral })?;
    let verdict = analysis.report.verdict;
    if verdict != Verdict::MarginallyStable && !args.force_nullspace {
        let _ = writeln!(
            err,
            "refusing: system is {} and has no marginally stable steady state (use --force-nullspace to compute 0-eigenvectors anyway)",
            verdict.as_str()
        );
        return Ok(EXIT_UNSTABLE);
    }
    let forced = verdict != Verdict::MarginallyStable;
    let basis = analysis.steady_state(&args.tol.steady(args.force_nullspace))?;

    let mut text = String::new();
    if forced {
        let warning = format!(
            "WARNING: system is {}; these 0-eigenvectors are not stable equilibria",
            verdict.as_str()
        );
        let _ = writeln!(err, "{warning}");
        if args.pretty {
            text.push_str(&format!("# {warning}\n"));
        }
    }
    if args.pretty {
        text.push_str("alpha,block,residual");
        for l in system.labels() {
            text.push(',');
            text.push_str(l);
        }
        text.push('\n');
        for v in &basis.basis {
            text.push_str(&format!("{},{},{:e}", v.alpha, v.block, v.residual));
            for x in &v.values.0 {
                text.push_str(&format!(",{x}"));
            }
            text.push('\n');
        }
    } else {
        let file = BasisFile {
            verdict,
            forced,
            labels: system.labels(),
            basis: &basis.basis,
        };
        text = serde_json::to_string_pretty(&file).expect("basis serializes") + "\n";
    }
    match &args.out {
        Some(path) => write_text(path, &text)?,
        None => out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))?,
    }
    Ok(0)
}

pub fn cmd_condense(args: &CondenseArgs, out: &mut dyn Write) -> Result<i32> {
    let system = load_system(&args.input)?;
    let spectral = args.tol.spectral()?;
    let analysis = analyze(&system, &AnalysisOptions { spectral })?;
    let dot = to_dot(&analysis.condensation, Some(&analysis.spectra), Some(&analysis.report));
    match &args.dot {
        Some(path) => write_text(path, &dot)?,
        None => out.write_all(dot.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))?,
    }
    Ok(0)
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let system = load_system(&args.input)?;
    let m0 = match &args.initial {
        Some(path) => StateVector::parse(&read_text(path)?)?,
        None => StateVector::uniform(system.n(), 1.0),
    };
    let traj = oracle::simulate(&system, &m0, &args.times)?;
    let mut text = String::from("t");
    for l in system.labels() {
        text.push(',');
        text.push_str(l);
    }
    text.push('\n');
    for (t, m) in args.times.iter().zip(&traj) {
        text.push_str(&t.to_string());
        for x in &m.0 {
            text.push_str(&format!(",{x:e}"));
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct DenseComparison {
    diakoptic: Verdict,
    dense: oracle::DenseVerdict,
    agree: bool,
}

#[derive(Debug, Serialize)]
struct LimitRow {
    block: usize,
    #[serde(flatten)]
    check: oracle::LimitCheck,
    note: String,
}

fn cmd_oracle(cmd: OracleCommand, out: &mut dyn Write) -> Result<i32> {
    let stdout = |out: &mut dyn Write, text: String| {
        out.write_all(text.as_bytes())
            .map_err(|e| io_err(Path::new("<stdout>"), e))
    };
    match cmd {
        OracleCommand::Dense { input, tol } => {
            let system = load_system(&input)?;
            let analysis = analyze(&system, &AnalysisOptions { spectral: tol.spectral()? })?;
            let dense = oracle::dense_verdict(&system, &DenseOptions::default())?;
            let cmp = DenseComparison {
                diakoptic: analysis.report.verdict,
                agree: dense.verdict == analysis.report.verdict,
                dense,
            };
            stdout(out, serde_json::to_string_pretty(&cmp).expect("serializes") + "\n")?;
            Ok(if cmp.agree { 0 } else { EXIT_DISAGREE })
        }
        OracleCommand::Limit { input, tol } => {
            let system = load_system(&input)?;
            let spectral = tol.spectral()?;
            let analysis = analyze(&system, &AnalysisOptions { spectral })?;
            let mut rows = Vec::new();
            for (k, s) in analysis.spectra.iter().enumerate() {
                if s.classification != Criticality::Critical {
                    continue;
                }
                let check = oracle::expm_limit_check(&analysis.condensation.block(k).matrix, &spectral)?;
                let note = format!("certified to t = {}", check.t_big);
                rows.push(LimitRow { block: k, check, note });
            }
            stdout(out, serde_json::to_string_pretty(&rows).expect("serializes") + "\n")?;
            Ok(0)
        }
        OracleCommand::Generate {
            config,
            seed,
            compartmental,
        } => {
            let text = match &config {
                Some(path) => Some(read_text(path)?),
                None => None,
            };
            let parse_err = |e: serde_json::Error| Error::Parse {
                line: e.line(),
                reason: e.to_string(),
            };
            let system = if compartmental {
                let mut spec: CompartmentalSpec = match text {
                    Some(t) => serde_json::from_str(&t).map_err(parse_err)?,
                    None => CompartmentalSpec::default(),
                };
                if let Some(s) = seed {
                    spec.seed = s;
                }
                oracle::generate_compartmental(&spec)?.system
            } else {
                let mut spec: GeneratorSpec = match text {
                    Some(t) => serde_json::from_str(&t).map_err(parse_err)?,
                    None => GeneratorSpec::default(),
                };
                if let Some(s) = seed {
                    spec.seed = s;
                }
                oracle::generate(&spec)?.system
            };
            stdout(out, system.to_edge_list_json() + "\n")?;
            Ok(0)
        }
    }
}
