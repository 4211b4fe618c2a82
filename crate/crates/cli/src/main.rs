//! `dmd`: exact diagonalization, descriptor fits and cost estimates from JSON scenarios.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod failure;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use failure::Failure;
use output::Provenance;
use scenario::Scenario;

#[derive(Parser)]
#[command(name = "dmd", version, about)]
struct Cli {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; rayon's default when absent.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Spectrum of the model in each requested sector.
    #[command(name = "model-ed")]
    ModelEd,
    /// Least-squares fit of the energies onto descriptor columns.
    #[command(name = "dmd-fit")]
    DmdFit,
    /// Iterative ansatz search with compressibility verdicts.
    #[command(name = "dmd-discover")]
    DmdDiscover,
    /// Coupling error under b-bit truncation of sampled energies.
    #[command(name = "error-sweep")]
    ErrorSweep,
    /// Randomized checks of the polynomial projector and amplification.
    #[command(name = "project-sim")]
    ProjectSim,
    /// Logical qubits and T count for the Hubbard preset.
    #[command(name = "cost-logical")]
    CostLogical,
    /// Surface-code footprint and runtime per layout.
    #[command(name = "cost-physical")]
    CostPhysical,
    /// Fits on small ladders extrapolated to large sizes.
    #[command(name = "bounds-extrapolate")]
    BoundsExtrapolate,
    /// Recomputes every row of the published resource table.
    #[command(name = "reproduce-table2")]
    ReproduceTable2,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ModelEd => "model-ed",
            Command::DmdFit => "dmd-fit",
            Command::DmdDiscover => "dmd-discover",
            Command::ErrorSweep => "error-sweep",
            Command::ProjectSim => "project-sim",
            Command::CostLogical => "cost-logical",
            Command::CostPhysical => "cost-physical",
            Command::BoundsExtrapolate => "bounds-extrapolate",
            Command::ReproduceTable2 => "reproduce-table2",
        }
    }
}

fn load(path: Option<&PathBuf>, command: Command) -> Result<Scenario, Failure> {
    let Some(path) = path else {
        return match command {
            Command::ReproduceTable2 => Ok(Scenario::default()),
            _ => Err(Failure::Schema(format!("{} needs --scenario", command.name()))),
        };
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Schema(format!("--jobs: {e}")))?;
    }
    let sc = load(cli.scenario.as_ref(), cli.command)?;
    let report = match cli.command {
        Command::ModelEd => commands::model_ed(&sc),
        Command::DmdFit => commands::dmd_fit(&sc, cli.seed),
        Command::DmdDiscover => commands::dmd_discover(&sc),
        Command::ErrorSweep => commands::error_sweep(&sc),
        Command::ProjectSim => commands::project_sim(&sc, cli.seed),
        Command::CostLogical => commands::cost_logical(&sc),
        Command::CostPhysical => commands::cost_physical(&sc),
        Command::BoundsExtrapolate => commands::bounds_extrapolate(&sc),
        Command::ReproduceTable2 => commands::reproduce_table2(&sc),
    }?;
    let canonical = serde_json::to_string(&sc).map_err(|e| Failure::Io(e.to_string()))?;
    let prov = Provenance::new(cli.command.name(), cli.seed, &canonical);
    let out = sc.output.clone().unwrap_or_default();
    let dir = cli
        .out
        .clone()
        .or_else(|| out.dir.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = out.stem.unwrap_or_else(|| cli.command.name().to_string());
    let files = match &report.raw_csv {
        Some(body) => output::write_raw(&dir, &stem, &prov, body, report.summary)?,
        None => output::write(&dir, &stem, &prov, &report.table, report.summary)?,
    };
    println!("{}", files.csv.display());
    println!("{}", files.json.display());
    match report.violation {
        Some(v) => Err(Failure::Invariant(v)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dmd {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
