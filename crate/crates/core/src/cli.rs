//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, I/O, parse or validation error,
//! 2 verification failure, 3 resource limit exceeded.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::circuit::Circuit;
use crate::ensemble::{self, EnsembleError, ShotSeed};
use crate::qcp::{QcpConfig, QcpError};
use crate::rewrite::{self, MeasurementRecord, OptimizeOptions, RewriteError};
use crate::text::{instruction_to_string, parse, serialize};
use crate::verify::{self, VerifyError};

#[derive(Debug, Parser)]
#[command(name = "mcmopt", version, about = "Remove mid-circuit measurements from quantum circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a circuit and print the result.
    Optimize(OptimizeArgs),
    /// Check that two circuits produce the same output ensemble from |0…0⟩.
    Verify(VerifyArgs),
    /// Compile probabilistic gates for a range of seeds.
    Shots(ShotsArgs),
    /// Print every compiled and measured circuit with its probability.
    Ensemble(EnsembleArgs),
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Cap on basis states tracked per entanglement group.
    #[arg(long, default_value_t = 64)]
    pub n_max: usize,
    /// Cap on controls per gate.
    #[arg(long, default_value_t = 3)]
    pub max_controls: usize,
}

impl AnalysisArgs {
    fn config(&self) -> QcpConfig {
        QcpConfig { n_max: self.n_max, max_controls: self.max_controls, ..QcpConfig::default() }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Circuit file, or `-` for stdin.
    pub input: PathBuf,
    /// Write the optimized circuit here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write statistics as JSON to a file, or `-` for stdout.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Check the result by exact simulation (circuits up to 12 qubits).
    #[arg(long)]
    pub verify: bool,
    /// Keep measurements whose result is never used
    #[arg(long)]
    pub no_theorem2: bool,
    /// Keep measurements of qubits that are only known to be classical
    #[arg(long)]
    pub no_basis_diagonal: bool,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub original: PathBuf,
    pub optimized: PathBuf,
    #[arg(long, default_value_t = verify::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ShotsArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub shots: u64,
    /// First seed; shot `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write one `shot_<seed>.qc` file per shot instead of printing.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    pub input: PathBuf,
    /// Maximum number of entries.
    #[arg(long, default_value_t = ensemble::DEFAULT_CAP)]
    pub cap: usize,
}

/// Statistics written by `optimize --stats`.
#[derive(Clone, Debug, Serialize)]
pub struct StatsRecord {
    pub qubits: usize,
    pub clbits: usize,
    pub gates_before: usize,
    pub gates_after: usize,
    pub measurements_before: usize,
    pub measurements_after: usize,
    pub prob_gates_added: usize,
    pub ifgates_converted: usize,
    pub depth_before: usize,
    pub depth_after: usize,
    pub decisions: Vec<MeasurementRecord>,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationRecord {
    pub passed: bool,
    pub distance: f64,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure { code: 1, message: message.to_string() }
    }

    fn limit(message: impl ToString) -> Self {
        Failure { code: 3, message: message.to_string() }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::TooManyQubits { .. } | VerifyError::TooManyProb(_) | VerifyError::BranchCap(_) => {
                Failure::limit(e)
            }
            _ => Failure::input(e),
        }
    }
}

impl From<EnsembleError> for Failure {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::Simulation(v) => v.into(),
            EnsembleError::CapExceeded(_) | EnsembleError::TooManyProb(_) => Failure::limit(e),
            EnsembleError::Shape(..) => Failure::input(e),
        }
    }
}

impl From<RewriteError> for Failure {
    fn from(e: RewriteError) -> Self {
        Failure::input(e)
    }
}

impl From<QcpError> for Failure {
    fn from(e: QcpError) -> Self {
        Failure::input(e)
    }
}

fn read_circuit(path: &Path) -> Result<Circuit, Failure> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::input(format!("stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
    };
    parse(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(|e| Failure::input(format!("stdout: {e}")))
}

fn optimize(args: &OptimizeArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let circuit = read_circuit(&args.input)?;
    let opts = OptimizeOptions {
        qcp: args.analysis.config(),
        enable_theorem2: !args.no_theorem2,
        enable_basis_diagonal: !args.no_basis_diagonal,
    };
    let start = Instant::now();
    let (optimized, report) = rewrite::optimize(&circuit, &opts)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;

    let verification = if args.verify && circuit.n_qubits <= verify::MAX_DYNAMIC_QUBITS {
        let r = verify::check_optimization(&circuit, &optimized, verify::DEFAULT_TOL)?;
        Some(VerificationRecord { passed: r.passed, distance: r.distance })
    } else {
        None
    };

    let text = serialize(&optimized);
    match &args.output {
        Some(path) => write_file(path, &format!("{text}\n"))?,
        None => emit(out, &text)?,
    }
    if let Some(path) = &args.stats {
        let stats = StatsRecord {
            qubits: circuit.n_qubits,
            clbits: circuit.n_clbits,
            gates_before: circuit.count_gates(),
            gates_after: optimized.count_gates(),
            measurements_before: report.measurements_before,
            measurements_after: report.measurements_after,
            prob_gates_added: report.prob_gates_added,
            ifgates_converted: report.ifgates_converted,
            depth_before: circuit.depth(),
            depth_after: optimized.depth(),
            decisions: report.records,
            wall_time_ms,
            verification: verification.clone(),
        };
        let json = serde_json::to_string_pretty(&stats).expect("stats serialize");
        if path == Path::new("-") {
            emit(out, &json)?;
        } else {
            write_file(path, &format!("{json}\n"))?;
        }
    }
    match verification {
        Some(v) if !v.passed => Err(Failure { code: 2, message: format!("verification failed: distance {:e}", v.distance) }),
        _ => Ok(()),
    }
}

fn verify_pair(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let a = read_circuit(&args.original)?;
    let b = read_circuit(&args.optimized)?;
    let r = verify::check_optimization(&a, &b, args.tol)?;
    emit(
        out,
        &format!(
            "{} distance={:e} measurements {} -> {}",
            if r.passed { "pass" } else { "fail" },
            r.distance,
            r.measurements_before,
            r.measurements_after
        ),
    )?;
    if r.passed {
        Ok(())
    } else {
        Err(Failure { code: 2, message: "circuits are not equivalent".into() })
    }
}

fn shots(args: &ShotsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let circuit = read_circuit(&args.input)?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    }
    for i in 0..args.shots {
        let seed = args.seed.wrapping_add(i);
        let text = serialize(&ensemble::compile_shot(&circuit, ShotSeed(seed)));
        match &args.out_dir {
            Some(dir) => write_file(&dir.join(format!("shot_{seed}.qc")), &format!("{text}\n"))?,
            None => emit(out, &format!("# seed {seed}\n{text}"))?,
        }
    }
    Ok(())
}

fn print_ensemble(args: &EnsembleArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let circuit = read_circuit(&args.input)?;
    let e = ensemble::enumerate(&circuit, args.cap)?.normalized();
    for entry in &e.entries {
        let body: Vec<String> = entry.circuit.instructions.iter().map(instruction_to_string).collect();
        let mut line = format!("{}\t{}", ensemble::format_probability(entry.probability), body.join("; "));
        if !entry.outcomes.is_empty() {
            let outcomes: Vec<String> = entry.outcomes.iter().map(|(c, v)| format!("{c}={}", u8::from(*v))).collect();
            line.push('\t');
            line.push_str(&outcomes.join(" "));
        }
        emit(out, &line)?;
    }
    Ok(())
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Optimize(a) => optimize(a, out),
        Command::Verify(a) => verify_pair(a, out),
        Command::Shots(a) => shots(a, out),
        Command::Ensemble(a) => print_ensemble(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
