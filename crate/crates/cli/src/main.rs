//! `perimix` command-line front end.
//!
//! Every command prints a JSON run report on stdout (or to `--report`).
//! Exit codes: 0 success, 1 usage or parse error, 2 infeasible / not
//! lossless, 3 numerical failure.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::RunReport;

#[derive(Parser, Debug)]
#[command(
    name = "perimix",
    version,
    about = "Lossless compression of periodic signals by periodic mixing"
)]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mix a periodic signal into a scalar stream `y(t) = <c(t), x(t)>`.
    Compress(CompressArgs),
    /// Decide losslessness for a mixer, permutation, rotation, group or network.
    Analyze(AnalyzeArgs),
    /// Recover a signal or initial state from a stream.
    Reconstruct(ReconstructArgs),
    /// Design a commuting compressor for a skew-symmetric system matrix.
    Design(DesignArgs),
    /// Rolling-shutter readout of a periodic image sequence.
    SimulateShutter(ShutterArgs),
    /// Reassemble the frames of a periodic scene from its readout.
    Deblur(DeblurArgs),
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    /// Signal CSV `t,x1,...,xn`, one period long.
    #[arg(long)]
    pub signal: PathBuf,
    /// Mixer CSV `t,c1,...,cn`, one period long.
    #[arg(long, conflicts_with = "switch")]
    pub mixer: Option<PathBuf>,
    /// Use the n-channel periodic switch as mixer.
    #[arg(long)]
    pub switch: Option<usize>,
    #[arg(long)]
    pub horizon: usize,
    /// Stream CSV `t,y` to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Number of channels.
    #[arg(long)]
    pub n: Option<u64>,
    /// Signal period.
    #[arg(long)]
    pub p: Option<u64>,
    /// Mixer period, for a sufficiently rich mixer.
    #[arg(long, conflicts_with = "mixer")]
    pub m: Option<u64>,
    /// Mixer CSV; checks richness and plans per-phase ranks.
    #[arg(long)]
    pub mixer: Option<PathBuf>,
    /// Permutation in cycle notation, e.g. "(4 2 3 1)(5)".
    #[arg(long)]
    pub perm: Option<String>,
    /// Rotation angle, e.g. "2pi/3" or radians.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Group JSON: a matrix, or {"G": ..., "tag": ..., "search_horizon": ...}.
    #[arg(long)]
    pub group: Option<PathBuf>,
    /// Sensor network JSON: {"angles": [...]} or {"blocks": [{"A", "C"}]}.
    #[arg(long)]
    pub sensors: Option<PathBuf>,
    /// Any exosystem spec JSON with a "kind" field.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Search bound for rotation resonances.
    #[arg(long, default_value_t = 100)]
    pub bound: usize,
    /// Exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Stream CSV `t,y` (or `t,y` samples at real times with --design).
    #[arg(long)]
    pub stream: PathBuf,
    /// Mixer CSV for periodic reconstruction.
    #[arg(long, conflicts_with_all = ["switch", "spec", "design"])]
    pub mixer: Option<PathBuf>,
    /// n-channel switch mixer for periodic reconstruction.
    #[arg(long, conflicts_with_all = ["spec", "design"])]
    pub switch: Option<usize>,
    /// Signal period for periodic reconstruction.
    #[arg(long)]
    pub p: Option<usize>,
    /// Exosystem spec JSON.
    #[arg(long, conflicts_with = "design")]
    pub spec: Option<PathBuf>,
    /// Compressor design JSON; requires --matrix.
    #[arg(long, requires = "matrix")]
    pub design: Option<PathBuf>,
    /// System matrix JSON for --design.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Signal CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// Skew-symmetric matrix JSON: rows, or {"A": rows}.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, conflicts_with = "thetas")]
    pub delta_base: Option<f64>,
    /// Comma-separated compressor frequencies, one per block.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thetas: Option<Vec<f64>>,
    /// Samples for the spanning certificate (default 4n).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Certificate spacing (default from the design).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Design JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ShutterArgs {
    /// Use the built-in 5x5 rotor.
    #[arg(long, conflicts_with = "frames")]
    pub rotor: bool,
    /// Frames as plain PGM files, in order.
    #[arg(long, num_args = 1..)]
    pub frames: Vec<PathBuf>,
    /// Readout length (default lcm(rows, frames)).
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Readout CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the ground-truth frames here.
    #[arg(long)]
    pub frames_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DeblurArgs {
    /// Readout CSV `t,row_index,p1,...,pw`.
    #[arg(long)]
    pub stream: PathBuf,
    /// Scene period.
    #[arg(long)]
    pub p: usize,
    /// Image height (default: largest row index in the stream).
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub max_val: Option<u16>,
    /// Directory for frame_<k>.pgm.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (name, outcome) = match &cli.command {
        Command::Compress(a) => ("compress", commands::compress(a)),
        Command::Analyze(a) => ("analyze", commands::analyze(a)),
        Command::Reconstruct(a) => ("reconstruct", commands::reconstruct(a)),
        Command::Design(a) => ("design", commands::design(a)),
        Command::SimulateShutter(a) => ("simulate-shutter", commands::simulate_shutter(a)),
        Command::Deblur(a) => ("deblur", commands::deblur(a)),
    };
    let (report, code) = match outcome {
        Ok(report) => {
            let code = report.exit_code();
            (report, code)
        }
        Err(failure) => {
            eprintln!("perimix {name}: {failure}");
            let code = failure.exit_code();
            (RunReport::failed(name, &failure), code)
        }
    };
    let text = report.to_json();
    match &cli.report {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("perimix: cannot write report {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => {
            // A closed pipe downstream is not our failure.
            let _ = writeln!(std::io::stdout(), "{text}");
        }
    }
    ExitCode::from(code)
}
