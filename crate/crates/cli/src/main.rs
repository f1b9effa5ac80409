use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod analyze;
mod diff;
mod infer;
mod out;
mod simulate;

#[derive(Parser)]
#[command(name = "bgpm", version, about = "BGP-Multipath laboratory")]
struct Cli {
    /// Output directory.
    #[arg(long, short, global = true, env = "BGPM_OUT_DIR", default_value = "bgpm-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulator: LG fixtures, traceroutes and ground truth.
    Simulate(SimulateArgs),
    /// Query an LG fixture corpus and catalog BGP-M cases.
    Infer(InferArgs),
    /// Validate traceroutes, build routing maps, classify and measure delays.
    TraceAnalyze(AnalyzeArgs),
    /// Revisit a catalog against a later LG corpus.
    Diff(DiffArgs),
    /// Deployment statistics for an existing catalog.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Topology TOML; without it a scenario is generated.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    /// Overrides the seed of the topology or scenario.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub routers: usize,
    #[arg(long, default_value_t = 25)]
    pub cases: usize,
    #[arg(long, default_value_t = 5)]
    pub prefixes_per_neighbor: usize,
    /// TOML file of `[[mutation]]` edits applied before simulating.
    #[arg(long)]
    pub mutations: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub days: u64,
    /// Tick spacing such as `15m`, `1h` or plain seconds.
    #[arg(long, default_value = "15m")]
    pub interval: String,
    #[arg(long, value_delimiter = ',', default_value = "icmp,udp")]
    pub protocols: Vec<String>,
    /// Skip the traceroute stream.
    #[arg(long)]
    pub no_traces: bool,
}

#[derive(Args)]
pub struct InferArgs {
    /// Directory of `*.lg` fixtures.
    #[arg(long)]
    pub lg: PathBuf,
    /// `asn,prefix` CSV of neighbor prefixes.
    #[arg(long)]
    pub prefixes: PathBuf,
    /// `name,prefix` CSV of IXP peering LANs.
    #[arg(long)]
    pub ixp: Option<PathBuf>,
    /// `near_as,family,neighbors_total,routers_total` CSV.
    #[arg(long)]
    pub census: Option<PathBuf>,
    /// Near AS; read from the router summaries when omitted.
    #[arg(long)]
    pub near_as: Option<u32>,
    #[arg(long)]
    pub exhaustive: bool,
    /// Maximum number of `routes` queries.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Minimum spacing between queries in milliseconds.
    #[arg(long)]
    pub rate_limit_ms: Option<u64>,
    /// Resume from the cursor and catalog of an earlier run in the output directory.
    #[arg(long)]
    pub resume: bool,
    /// Timestamp recorded on cataloged cases.
    #[arg(long, default_value_t = bgpm_core::sim::DEFAULT_START)]
    pub timestamp: u64,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub catalog: PathBuf,
    /// `ip,name` CSV.
    #[arg(long)]
    pub dns: PathBuf,
    /// Worker threads for per-case analysis.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub no_plots: bool,
    /// Histogram bin width in milliseconds.
    #[arg(long, default_value_t = 20.0)]
    pub bin_ms: f64,
    /// Histogram range in milliseconds.
    #[arg(long, default_value_t = 400.0)]
    pub max_ms: f64,
}

#[derive(Args)]
pub struct DiffArgs {
    /// Catalog of the earlier epoch.
    #[arg(long)]
    pub catalog: PathBuf,
    /// LG fixtures of the later epoch.
    #[arg(long)]
    pub lg: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub census: Option<PathBuf>,
    /// LG fixtures whose routers form the router population.
    #[arg(long)]
    pub lg: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate::run(a, &cli.out),
        Command::Infer(a) => infer::run(a, &cli.out),
        Command::TraceAnalyze(a) => analyze::run(a, &cli.out),
        Command::Diff(a) => diff::run(a, &cli.out),
        Command::Report(a) => infer::report(a, &cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
