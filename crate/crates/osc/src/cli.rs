use clap::{Args, Parser, Subcommand};

/// Oscillator groups: geodesics, lattices, closed geodesics and isometries.
#[derive(Debug, Parser)]
#[command(name = "osc", version, about)]
pub struct Cli {
    /// Force exact arithmetic in Q + Q pi.
    #[arg(long, global = true, conflicts_with = "float")]
    pub exact: bool,
    /// Force floating-point arithmetic.
    #[arg(long, global = true)]
    pub float: bool,
    /// Seed for randomized grids.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report or CSV to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    #[command(subcommand)]
    Geodesic(GeodesicCmd),
    #[command(subcommand)]
    Lattice(LatticeCmd),
    #[command(subcommand)]
    Quotient(QuotientCmd),
    #[command(subcommand)]
    Isometry(IsometryCmd),
}

#[derive(Debug, Args)]
pub struct VectorArgs {
    /// Initial vector, e.g. "Z - T", "2X1 + Y1" or "[1, 0, 0, -1]".
    #[arg(long = "X", value_name = "EXPR")]
    pub x: String,
    /// Frequencies, e.g. "[1]" or "1,2".
    #[arg(long, default_value = "[1]")]
    pub freqs: String,
}

#[derive(Debug, Args)]
pub struct LatticeArg {
    /// Compact form such as dim4:k=1:angle=2pi, a JSON object, or @file.
    #[arg(long)]
    pub lattice: String,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// Matrix as a JSON array of rows, or @file.
    #[arg(long)]
    pub matrix: String,
    #[arg(long, default_value = "[1]")]
    pub freqs: String,
}

#[derive(Debug, Subcommand)]
pub enum GeodesicCmd {
    /// CSV samples (s, z, x1, y1, ..., t) of the geodesic through the base point.
    Eval {
        #[command(flatten)]
        vector: VectorArgs,
        /// Inclusive range a..b, optionally a..b:step (default step 1).
        #[arg(long)]
        s: String,
        /// Base point as a JSON element; the identity when absent.
        #[arg(long)]
        base: Option<String>,
    },
    /// Closed form against fourth-order Runge-Kutta integration.
    Integrate {
        #[command(flatten)]
        vector: VectorArgs,
        #[arg(long, default_value_t = 5.0)]
        s_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Causal character of the geodesic.
    Character {
        #[command(flatten)]
        vector: VectorArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum LatticeCmd {
    Info {
        #[command(flatten)]
        lattice: LatticeArg,
    },
    Contains {
        #[command(flatten)]
        lattice: LatticeArg,
        /// Group element as JSON {"z": .., "v": [..], "t": ..}.
        #[arg(long)]
        element: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum QuotientCmd {
    /// Whether every lightlike geodesic closes.
    Classify {
        #[command(flatten)]
        lattice: LatticeArg,
    },
    /// Search for a time at which the geodesic of X meets the lattice.
    ClosedSearch {
        #[command(flatten)]
        lattice: LatticeArg,
        #[arg(long = "X", value_name = "EXPR")]
        x: String,
        #[arg(long, default_value_t = osc_core::quotient::DEFAULT_R_MAX)]
        r_max: u32,
    },
    /// Construct and re-verify a closed timelike and a closed spacelike geodesic.
    CertifyCausal {
        #[command(flatten)]
        lattice: LatticeArg,
    },
    /// Lightlike geodesics on a product with a line lattice.
    ProductLine {
        #[command(flatten)]
        lattice: LatticeArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum IsometryCmd {
    /// Test a matrix against the conditions for the differential of an isometry fixing e.
    CheckMatrix {
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Factor an isotropy matrix as (epsilon, blocks, c).
    Decompose {
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Normalizer membership and the table/oracle agreement on a grid.
    Normalizer {
        #[command(flatten)]
        lattice: LatticeArg,
        /// Only "default" is available.
        #[arg(long)]
        grid: Option<String>,
        /// Which evaluator to compare: printed, derived or conditions.
        #[arg(long, default_value = "printed")]
        table: String,
        /// A single element to test instead of (or besides) the grid.
        #[arg(long)]
        element: Option<String>,
    },
    /// Whether an isometry descends to the quotient.
    Fiber {
        #[command(flatten)]
        lattice: LatticeArg,
        /// "inversion", or JSON such as {"kind": "theta", "B": [[1,0],[0,-1]]}.
        #[arg(long)]
        isometry: String,
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
    /// Commutation relations between Theta(B), the inversion and inner automorphisms.
    Relations {
        /// Block-diagonal orthogonal matrix B as JSON rows.
        #[arg(long = "B", value_name = "MATRIX")]
        b: String,
        /// JSON array v of length 2n.
        #[arg(long)]
        v: String,
        #[arg(long)]
        t: String,
        #[arg(long, default_value = "[1]")]
        freqs: String,
        /// printed or normalized.
        #[arg(long, default_value = "printed")]
        variant: String,
    },
}
