use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "resgeom", version, about = "Resolvent geometry of matrix pencils and operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Relative smallest singular value below which a point counts as singular.
    #[arg(long = "tol-sing", default_value_t = 1e-8)]
    pub tol_sing: f64,
    /// Relative quadrature tolerance.
    #[arg(long = "tol-quad", default_value_t = 1e-8)]
    pub tol_quad: f64,
}

/// A tuple file and the state defining its metric.
#[derive(Debug, Clone, Args)]
pub struct TupleArgs {
    #[arg(long)]
    pub tuple: PathBuf,
    /// `trace`, `e<i>`, or a state JSON file.
    #[arg(long, default_value = "trace")]
    pub state: String,
}

/// Which two real coordinates a grid moves and where the others sit.
#[derive(Debug, Clone, Args)]
pub struct SliceArgs {
    /// `x0:x1:nx,y0:y1:ny`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// `complex:J` moves Re and Im of coordinate J; `real:J,K` moves Re z_J and Re z_K.
    #[arg(long)]
    pub slice: Option<String>,
    /// Fixed coordinates as comma-separated `a+bi` values.
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// `r0:q:count`.
    #[arg(long, default_value = "0.1:0.31622776601683794:12")]
    pub radii: String,
    #[arg(long, default_value_t = 16)]
    pub angles: usize,
    /// Eigenvalues within this distance of 0 are treated as the spectral point at 0.
    #[arg(long = "cluster-radius")]
    pub cluster_radius: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the joint spectrum on a real 2-D slice.
    Spectrum {
        #[arg(long)]
        tuple: PathBuf,
        #[command(flatten)]
        slice: SliceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the metric matrix over a grid.
    MetricGrid {
        #[command(flatten)]
        tuple: TupleArgs,
        #[command(flatten)]
        slice: SliceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Ricci curvature over a grid: finite differences for a tuple, closed
    /// form for an operator with a vector state.
    RicciGrid {
        #[arg(long)]
        tuple: Option<PathBuf>,
        #[arg(long, default_value = "trace")]
        state: String,
        #[arg(long)]
        op: Option<String>,
        /// Vector for the operator metric; the operator's distinguished vector by default.
        #[arg(long)]
        vector: Option<String>,
        #[command(flatten)]
        slice: SliceArgs,
        /// Finite-difference step; scaled to the point by default.
        #[arg(long = "fd-step")]
        fd_step: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Length of a polyline or circle path.
    PathLength {
        #[arg(long)]
        tuple: Option<PathBuf>,
        #[arg(long, default_value = "trace")]
        state: String,
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        vector: Option<String>,
        /// Path JSON file.
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Length of the circle |z - center| = radius under an operator vector metric.
    CircleLength {
        #[arg(long)]
        op: String,
        #[arg(long)]
        vector: Option<String>,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        center: String,
        #[command(flatten)]
        common: Common,
    },
    /// Fuglede-Kadison determinant of a pencil value or of the dihedral pencil.
    FkDet {
        #[arg(long, conflicts_with = "dihedral")]
        tuple: Option<PathBuf>,
        /// Pencil point for `--tuple`.
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long)]
        dihedral: bool,
        #[arg(long, allow_hyphen_values = true)]
        z1: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z2: Option<String>,
        /// Also evaluate the dihedral truncation of this size.
        #[arg(long)]
        truncation: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Logarithmic potential of a measure at one or more points.
    LogPotential {
        /// Measure JSON file.
        #[arg(long, conflicts_with = "op")]
        measure: Option<PathBuf>,
        /// A normal matrix operator; its spectral measure at `--vector` is used.
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        vector: Option<String>,
        /// Evaluation point; repeat for several.
        #[arg(long = "z", required = true, allow_hyphen_values = true)]
        points: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Riesz projection for the spectrum inside a circle.
    Riesz {
        #[arg(long)]
        op: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        center: String,
        #[arg(long)]
        radius: f64,
        /// Also list the principal-part sequence of this vector.
        #[arg(long)]
        vector: Option<String>,
        #[arg(long = "max-terms", default_value_t = 64)]
        max_terms: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the power exponent of one vector.
    PowerExponent {
        #[arg(long)]
        op: String,
        /// `e<i>`, `f<alpha>` (Volterra indicator) or a vector JSON file.
        #[arg(long)]
        vector: String,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Sample the power set over several vectors.
    PowerSet {
        #[arg(long)]
        op: String,
        /// Comma-separated vectors; the standard basis (or four Volterra indicators) by default.
        #[arg(long)]
        vectors: Option<String>,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Members of the filtration at level tau and their commutant defect.
    Filtration {
        #[arg(long)]
        op: String,
        #[arg(long)]
        tau: f64,
        /// Random unit vectors added to the standard basis.
        #[arg(long, default_value_t = 20)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Compare exponents of V and a similar matrix.
    SimilarityCheck {
        #[arg(long)]
        op: String,
        /// Similarity matrix file; a seeded random well-conditioned matrix by default.
        #[arg(long)]
        similarity: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Spectrum { .. } => "spectrum",
            Self::MetricGrid { .. } => "metric-grid",
            Self::RicciGrid { .. } => "ricci-grid",
            Self::PathLength { .. } => "path-length",
            Self::CircleLength { .. } => "circle-length",
            Self::FkDet { .. } => "fk-det",
            Self::LogPotential { .. } => "log-potential",
            Self::Riesz { .. } => "riesz",
            Self::PowerExponent { .. } => "power-exponent",
            Self::PowerSet { .. } => "power-set",
            Self::Filtration { .. } => "filtration",
            Self::SimilarityCheck { .. } => "similarity-check",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Self::Spectrum { common, .. }
            | Self::MetricGrid { common, .. }
            | Self::RicciGrid { common, .. }
            | Self::PathLength { common, .. }
            | Self::CircleLength { common, .. }
            | Self::FkDet { common, .. }
            | Self::LogPotential { common, .. }
            | Self::Riesz { common, .. }
            | Self::PowerExponent { common, .. }
            | Self::PowerSet { common, .. }
            | Self::Filtration { common, .. }
            | Self::SimilarityCheck { common, .. } => common,
        }
    }
}
