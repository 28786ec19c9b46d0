//! Command-line front end: generate state fixtures, run moment campaigns,
//! reconstruct spectra, issue Peres verdicts, export circuits, and
//! cross-check every circuit value against the linear-algebra oracle.
//!
//! Exit codes: 0 success, 2 usage error, 3 domain/invariant error, 4 I/O
//! error. All randomness is seed-driven and every command is deterministic
//! given its full flag set; JSON output is byte-identical across runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ptspect::{
    build_moment_circuit, jsonfmt, load_state, measure_campaign, partial_transpose, power_trace,
    product_state, random_density, reconstruct_with, run_exact_with, save_state, total_copies,
    werner_state, Backend, CampaignResult, Error, MeasuredPart, Mode, MomentTarget,
    ReconstructOptions, SubsystemShape,
};

/// Largest joint dimension the verify command will simulate densely.
const VERIFY_DENSE_CAP: usize = 4096;
/// Agreement tolerance for the verify command.
const VERIFY_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "ptspect",
    version,
    about = "Partial-transpose moment circuits, spectrum reconstruction, and the Peres test"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a state fixture and write it as JSON
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run a moment campaign on a state file
    Moments(MomentsArgs),
    /// Reconstruct the spectrum behind a moments file
    Spectrum(SpectrumArgs),
    /// End-to-end Peres test: measure, reconstruct, report to stdout
    Peres(PeresArgs),
    /// Export a moment circuit as JSON
    ExportCircuit(ExportCircuitArgs),
    /// Cross-check circuit moments against the dense linear-algebra oracle
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum GenKind {
    /// The two-qubit Bell state |Phi+><Phi+|
    Bell {
        #[arg(long)]
        out: PathBuf,
    },
    /// Werner state p |Phi+><Phi+| + (1-p) I/4
    Werner {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Product of two full-rank random states (factor seeds: seed, seed + 1)
    Product {
        /// Local dimensions of the two factors, e.g. 2,3
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random mixed state of a given rank (Ginibre construction)
    Random {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Shots,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PartArg {
    Real,
    Imaginary,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    state: PathBuf,
    /// Measure moments of the partial transpose
    #[arg(long, conflicts_with = "plain")]
    pt: bool,
    /// Measure plain moments Tr(rho^k)
    #[arg(long)]
    plain: bool,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Moments file produced by the moments command
    #[arg(long)]
    moments: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the verdict threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Bootstrap seed for shots-mode moment files (default 0)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct PeresArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the verdict threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Also write the report to a file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportCircuitArgs {
    /// Number of state copies k (the moment order); k >= 2
    #[arg(long, short = 'k')]
    copies: usize,
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, conflicts_with = "plain")]
    pt: bool,
    #[arg(long)]
    plain: bool,
    #[arg(long, value_enum, default_value = "real")]
    part: PartArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    state: PathBuf,
}

enum CliError {
    Usage(String),
    Domain(Error),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(Error::Io(_)) | CliError::Domain(Error::Json(_)) => 4,
            CliError::Domain(_) | CliError::Failed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Failed(msg) => f.write_str(msg),
            CliError::Domain(err) => write!(f, "{err}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Domain(err)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen { kind } => run_gen(kind),
        Command::Moments(args) => run_moments(args),
        Command::Spectrum(args) => run_spectrum(args),
        Command::Peres(args) => run_peres(args),
        Command::ExportCircuit(args) => run_export_circuit(args),
        Command::Verify(args) => run_verify(args),
    }
}

fn parse_mode(mode: ModeArg, shots: Option<u64>, seed: Option<u64>) -> Result<Mode, CliError> {
    match mode {
        ModeArg::Exact => Ok(Mode::Exact),
        ModeArg::Shots => {
            let shots = shots.ok_or_else(|| {
                CliError::Usage("--mode shots requires --shots".into())
            })?;
            let seed = seed.ok_or_else(|| {
                CliError::Usage("--mode shots requires --seed (reproducibility is mandatory)".into())
            })?;
            Ok(Mode::Shots { shots, seed })
        }
    }
}

fn parse_target(pt: bool, plain: bool) -> Result<MomentTarget, CliError> {
    match (pt, plain) {
        (true, false) => Ok(MomentTarget::PartialTranspose),
        (false, true) => Ok(MomentTarget::Plain),
        _ => Err(CliError::Usage(
            "pass exactly one of --pt or --plain".into(),
        )),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Domain(Error::Io(e)))?;
    Ok(())
}

fn run_gen(kind: GenKind) -> Result<(), CliError> {
    let (rho, out) = match kind {
        GenKind::Bell { out } => (ptspect::bell_state(), out),
        GenKind::Werner { p, out } => (werner_state(p)?, out),
        GenKind::Product { dims, seed, out } => {
            if dims.len() != 2 {
                return Err(CliError::Usage(
                    "--dims must name exactly two local dimensions, e.g. --dims 2,3".into(),
                ));
            }
            let a = random_density(&SubsystemShape::new(vec![dims[0]])?, dims[0], seed)?;
            let b = random_density(
                &SubsystemShape::new(vec![dims[1]])?,
                dims[1],
                seed.wrapping_add(1),
            )?;
            (product_state(&a, &b)?, out)
        }
        GenKind::Random {
            dims,
            rank,
            seed,
            out,
        } => {
            let shape = SubsystemShape::new(dims)?;
            (random_density(&shape, rank, seed)?, out)
        }
    };
    save_state(&out, &rho)?;
    Ok(())
}

fn moments_csv(campaign: &CampaignResult) -> String {
    let mut text = String::from("k,p,sigma\n");
    for (i, (p, sigma)) in campaign.p.iter().zip(&campaign.sigma).enumerate() {
        text.push_str(&format!("{},{p:.16e},{sigma:.16e}\n", i + 1));
    }
    text
}

fn run_moments(args: MomentsArgs) -> Result<(), CliError> {
    let target = parse_target(args.pt, args.plain)?;
    let mode = parse_mode(args.mode, args.shots, args.seed)?;
    let rho = load_state(&args.state)?;
    let campaign = measure_campaign(&rho, target, mode)?;
    let text = match args.format {
        FormatArg::Json => campaign.to_json() + "\n",
        FormatArg::Csv => moments_csv(&campaign),
    };
    write_text(&args.out, &text)
}

fn run_spectrum(args: SpectrumArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.moments).map_err(Error::Io)?;
    let campaign = CampaignResult::from_json(&text)?;
    let moments = campaign.moment_vector()?;
    let shape = campaign.subsystem_shape()?;
    let options = ReconstructOptions {
        verdict_threshold: args.threshold,
        bootstrap_seed: args.seed.unwrap_or(0),
        ..ReconstructOptions::default()
    };
    let report = reconstruct_with(&moments, &shape, &options)?;
    let out = match args.format {
        FormatArg::Json => report.to_json() + "\n",
        FormatArg::Csv => {
            let mut text = String::from("eigenvalue\n");
            for e in &report.eigenvalues {
                text.push_str(&format!("{e:.16e}\n"));
            }
            text
        }
    };
    write_text(&args.out, &out)
}

fn run_peres(args: PeresArgs) -> Result<(), CliError> {
    let mode = parse_mode(args.mode, args.shots, args.seed)?;
    let rho = load_state(&args.state)?;
    let campaign = measure_campaign(&rho, MomentTarget::PartialTranspose, mode)?;
    let moments = campaign.moment_vector()?;
    let options = ReconstructOptions {
        verdict_threshold: args.threshold,
        bootstrap_seed: args.seed.unwrap_or(0),
        ..ReconstructOptions::default()
    };
    let report = reconstruct_with(&moments, rho.shape(), &options)?;

    let mut combined = serde_json::to_value(&campaign).map_err(Error::Json)?;
    let report_value = serde_json::to_value(&report).map_err(Error::Json)?;
    let obj = combined.as_object_mut().expect("campaign is an object");
    for (key, value) in report_value.as_object().expect("report is an object") {
        obj.insert(key.clone(), value.clone());
    }
    let text = jsonfmt::to_string(&combined) + "\n";
    println!("{}", text.trim_end());
    if let Some(out) = &args.out {
        write_text(out, &text)?;
    }
    Ok(())
}

fn run_export_circuit(args: ExportCircuitArgs) -> Result<(), CliError> {
    if args.copies < 2 {
        return Err(CliError::Usage(
            "k = 1 needs no circuit: the partial transpose preserves the trace, \
             so the first moment is already 1"
                .into(),
        ));
    }
    let target = parse_target(args.pt, args.plain)?;
    let part = match args.part {
        PartArg::Real => MeasuredPart::Real,
        PartArg::Imaginary => MeasuredPart::Imaginary,
    };
    let shape = SubsystemShape::new(args.dims)?;
    let circuit = build_moment_circuit(args.copies, &shape, target, part)?;
    write_text(&args.out, &(circuit.to_json() + "\n"))
}

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    let rho = load_state(&args.state)?;
    let shape = rho.shape().clone();
    if shape.subsystem_count() != 2 {
        return Err(CliError::Domain(Error::NotBipartite(
            shape.subsystem_count(),
        )));
    }
    let n = shape.total_dim();
    let pt = partial_transpose(rho.matrix(), &shape, 2)?;

    let mut checks = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for k in 2..=n {
        for (target, name, oracle) in [
            (
                MomentTarget::PartialTranspose,
                "pt",
                power_trace(&pt, k).re,
            ),
            (MomentTarget::Plain, "plain", power_trace(rho.matrix(), k).re),
        ] {
            let circuit = build_moment_circuit(k, &shape, target, MeasuredPart::Real)?;
            let mut backends = vec![(Backend::Contraction, "contraction")];
            if circuit.joint_dim() <= VERIFY_DENSE_CAP {
                backends.push((Backend::Dense, "dense"));
            }
            for (backend, backend_name) in backends {
                let value = run_exact_with(&circuit, &rho, backend)?;
                let deviation = (value.re - oracle).abs().max(value.im.abs());
                max_deviation = max_deviation.max(deviation);
                checks.push(json!({
                    "target": name,
                    "k": k,
                    "backend": backend_name,
                    "circuit": value.re,
                    "oracle": oracle,
                    "deviation": deviation,
                }));
            }
        }
    }
    let ok = max_deviation <= VERIFY_TOL;
    let report = json!({
        "shape": shape.dims(),
        "total_copies": total_copies(&shape)?,
        "tolerance": VERIFY_TOL,
        "max_deviation": max_deviation,
        "ok": ok,
        "checks": checks,
    });
    println!("{}", jsonfmt::to_string(&report));
    if ok {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "circuit/oracle deviation {max_deviation:.3e} exceeds {VERIFY_TOL:.1e}"
        )))
    }
}
