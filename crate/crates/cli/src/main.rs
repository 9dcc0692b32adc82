use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use qgraph_core::oracle::MIN_POINTS_PER_UNIT_LENGTH;
use qgraph_core::spectral::{DEFAULT_NULLSPACE_THRESHOLD, DEFAULT_TOL, DEFAULT_VERTEX_FLOOR};

mod commands;
mod input;
mod output;

use input::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "qgraph",
    version,
    about = "Spectra, eigenfunctions and nodal statistics of metric graphs"
)]
#[command(after_help = "Graph files hold one record per line:\n  \
    vertex <id> standard|dirichlet|delta=<alpha>\n  \
    edge <id> <from> <to> len=<length> [q=<potential>]\n\
    Text after `#` is ignored. Logs go to stderr (RUST_LOG or -v).")]
struct Cli {
    /// Root-finding tolerance.
    #[arg(long, global = true, env = "QGRAPH_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for randomized corpora.
    #[arg(long, global = true, env = "QGRAPH_SEED", default_value_t = 0)]
    seed: u64,
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GraphArg {
    /// Graph description file.
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args, Debug)]
struct FormatArgs {
    /// CSV output (default).
    #[arg(long, conflicts_with = "json")]
    csv: bool,
    /// JSON output: {"rows": [...], "warnings": [...]}.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Upper end of the frequency window.
    #[arg(long)]
    omega_max: f64,
    /// Lower end of the scan [default: π/(8L), L the total length].
    #[arg(long)]
    omega_min: Option<f64>,
    /// Scan grid step [default: π/(4L)].
    #[arg(long)]
    grid_step: Option<f64>,
    /// Relative singular value threshold for kernel extraction.
    #[arg(long, default_value_t = DEFAULT_NULLSPACE_THRESHOLD)]
    nullspace_threshold: f64,
    /// Relative floor below which a vertex value or edge amplitude is zero.
    #[arg(long, default_value_t = DEFAULT_VERTEX_FLOOR)]
    vertex_floor: f64,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues from the roots of the secular determinant.
    #[command(after_help = "CSV columns: n,omega,lambda,multiplicity,generic,fully_supported\n  \
        n is the 1-based position among the positive roots; lambda = omega^2.\n  \
        generic: simple root with no vanishing vertex value.\n  \
        fully_supported: no edge on which the eigenfunction vanishes.")]
    Spectrum(SpectrumArgs),

    /// Secular determinant on a uniform frequency grid.
    #[command(after_help = "CSV columns: omega,det\n  \
        omega runs over omega_min + k (omega_max - omega_min) / steps, k = 1..steps.")]
    SecularScan {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        omega_max: f64,
        #[arg(long, default_value_t = 0.0)]
        omega_min: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[command(flatten)]
        format: FormatArgs,
    },

    /// First eigenfunctions that are generic (trees) or fully supported (graphs with Dirichlet vertices).
    #[command(after_help = "CSV columns: n,omega,lambda,multiplicity,generic,fully_supported,\
        min_vertex_ratio,min_edge_ratio,limit_distance\n  \
        min_vertex_ratio: smallest |psi(v)| / max|psi| over non-Dirichlet vertices.\n  \
        min_edge_ratio: smallest edge amplitude over the largest.\n  \
        limit_distance: trees only, distance of the unit kernel vector to the A_0 kernel direction.")]
    SearchGeneric {
        #[command(flatten)]
        graph: GraphArg,
        /// Number of eigenfunctions wanted.
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_VERTEX_FLOOR)]
        vertex_floor: f64,
        /// Give up above this frequency.
        #[arg(long, default_value_t = 200.0)]
        omega_cap: f64,
        #[arg(long, default_value_t = DEFAULT_NULLSPACE_THRESHOLD)]
        nullspace_threshold: f64,
        /// Print every scanned root, not only the hits.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        format: FormatArgs,
    },

    /// Nodal domain counts for every eigenvalue in the window.
    #[command(after_help = "CSV columns: n,omega,nu,ratio,flags\n  \
        n is the position in the spectrum with multiplicity (empty when unknown); ratio = nu/n.\n  \
        flags, `|`-separated: ok, zero-mode or ambiguous (degenerate eigenvalue, nu empty);\n  \
        vertex-zero when a non-Dirichlet vertex value vanishes; courant when nu > n.")]
    NodalStats {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        omega_max: f64,
        #[arg(long, default_value_t = DEFAULT_NULLSPACE_THRESHOLD)]
        nullspace_threshold: f64,
        #[command(flatten)]
        format: FormatArgs,
    },

    /// Verifies the surgery and kernel identities; exit code 1 on any failure.
    #[command(after_help = "Checks: pendant-standard, pendant-dirichlet, dirichlet-split,\n  \
        kernel-dimension, harmonic-kernel, zero-derivative (each when its hypotheses hold).\n  \
        A residual passes when it is at most 1e-9 max(1, max|det|) over the grid.")]
    CheckIdentities {
        #[arg(long, conflicts_with = "random_corpus", required_unless_present = "random_corpus")]
        graph: Option<PathBuf>,
        /// Check N seeded random graphs instead of a file.
        #[arg(long, value_name = "N")]
        random_corpus: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        grid_min: f64,
        #[arg(long, default_value_t = 20.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 200)]
        grid_points: usize,
        /// JSON report instead of text.
        #[arg(long)]
        json: bool,
    },

    /// Lowest eigenvalues of a finite-element discretization, in the `spectrum` columns.
    #[command(after_help = "CSV columns: n,omega,lambda,multiplicity,generic,fully_supported\n  \
        generic and fully_supported are always empty. Eigenvalues at or below\n  \
        max(0, max q) are dropped unless --all, so rows line up with `spectrum`.")]
    OracleSpectrum {
        #[command(flatten)]
        graph: GraphArg,
        /// Number of eigenvalues to compute, with multiplicity.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 4 * MIN_POINTS_PER_UNIT_LENGTH)]
        points_per_unit: usize,
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        format: FormatArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("qgraph: {message}");
            ExitCode::from(code)
        }
    }
}
