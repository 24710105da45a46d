use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gncoset::perf::TechNode;
use gncoset::QuantSpec;

mod bits;
mod codec;
mod construct;
mod kpi;
mod simulate;

/// Encoder, decoder, simulator and KPI model for G_N-coset product codes.
#[derive(Debug, Parser)]
#[command(name = "gncoset", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a product-code spec with Gaussian-approximation sub-codes.
    Construct(ConstructArgs),
    /// Run a seeded BLER/BER sweep and write a run directory.
    Simulate(SimulateArgs),
    /// Evaluate area efficiency and latency for a KPI scenario.
    Kpi(KpiArgs),
    /// Encode or decode a single frame.
    #[command(subcommand)]
    Codec(CodecCommand),
}

#[derive(Debug, Args)]
struct ConstructArgs {
    /// Sub-code length (power of two, 2..=1024).
    #[arg(long)]
    nsub: usize,
    /// Information bits per sub-code.
    #[arg(long)]
    ksub: usize,
    /// Design Es/N0 for the reliability order, dB.
    #[arg(long, default_value_t = 6.3, allow_negative_numbers = true)]
    design_esn0: f64,
    #[arg(long)]
    label: Option<String>,
    /// Output file; stdout if omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScChoice {
    /// All shortcuts (Rate-0/1, REP, SPC, ML).
    Fast,
    /// Only the shortcuts that reproduce SC decisions exactly.
    Exact,
    /// Textbook SC.
    Pure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EtChoice {
    BothGraphs,
    CurrentGraph,
    Off,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Code spec JSON.
    #[arg(long, required_unless_present = "manifest")]
    spec: Option<PathBuf>,
    /// Es/N0 points in dB: start:step:stop or a single value.
    #[arg(long, required_unless_present = "manifest", allow_hyphen_values = true)]
    esn0: Option<String>,
    #[arg(long, default_value_t = 5)]
    tmax: usize,
    /// Word format: float, float-exact, Q<bits> or Q<bits>F<frac>.
    #[arg(long, default_value = "Q6", value_parser = parse_quant)]
    quant: QuantSpec,
    /// Damping schedule JSON; the bundled default otherwise.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "GNCOSET_THREADS", default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 100_000)]
    max_frames: u64,
    #[arg(long, default_value_t = 100)]
    target_errors: u64,
    /// Parent directory of the run directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ScChoice::Fast)]
    sc: ScChoice,
    #[arg(long, value_enum, default_value_t = EtChoice::BothGraphs)]
    et: EtChoice,
    /// Fill the `seconds` column (makes the CSV run-dependent).
    #[arg(long)]
    timing: bool,
    /// Re-run the configuration recorded in a manifest.
    #[arg(
        long,
        conflicts_with_all = ["spec", "esn0", "tmax", "quant", "schedule", "seed", "max_frames", "target_errors", "sc", "et", "timing"]
    )]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Markdown,
    Csv,
}

#[derive(Debug, Args)]
struct KpiArgs {
    /// Scenario JSON; the published 16nm table if omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Also report values converted to this node (10nm, 7nm).
    #[arg(long, value_parser = parse_node)]
    scale: Option<TechNode>,
    /// Override the scenario's calibration constant.
    #[arg(long)]
    calibration: Option<f64>,
    #[arg(long, value_enum, default_value_t = TableFormat::Markdown)]
    format: TableFormat,
    /// Print the sub-decoder cycle model for the published length-128 codes.
    #[arg(long)]
    cycles: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BitFormat {
    Hex,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FrameFormat {
    Hex,
    Bin,
    /// Whitespace-separated received samples.
    Soft,
}

#[derive(Debug, Subcommand)]
enum CodecCommand {
    /// Encode K message bits into an N-bit codeword.
    Encode {
        #[arg(long)]
        spec: PathBuf,
        /// File holding the message bits.
        #[arg(long)]
        msg: PathBuf,
        #[arg(long, value_enum, default_value_t = BitFormat::Hex)]
        format: BitFormat,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Decode one frame and print the message bits.
    Decode {
        #[arg(long)]
        spec: PathBuf,
        /// File holding a hard codeword (hex/bin) or received samples (soft).
        #[arg(long)]
        frame: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameFormat::Hex)]
        format: FrameFormat,
        /// Output format of the message.
        #[arg(long, value_enum, default_value_t = BitFormat::Hex)]
        msg_format: BitFormat,
        #[arg(long, default_value_t = 5)]
        tmax: usize,
        #[arg(long, default_value = "Q6", value_parser = parse_quant)]
        quant: QuantSpec,
        /// Es/N0 assumed for the float decoder's LLR scaling, dB.
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        esn0: f64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn parse_quant(s: &str) -> Result<QuantSpec, String> {
    s.parse().map_err(|e: gncoset::Error| e.to_string())
}

fn parse_node(s: &str) -> Result<TechNode, String> {
    s.parse().map_err(|e: gncoset::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(a) => construct::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Kpi(a) => kpi::run(a),
        Command::Codec(c) => codec::run(c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
