use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(
    name = "ndw",
    version,
    about = "Noisy Dirac walk: exact distributions, moments, Monte Carlo and spectral checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Site-resolved alpha, beta and P for each requested step count
    Evolve(CommonArgs),
    /// Probability of the ballistic peak x = ct for N = 0..max(steps)
    Peak(CommonArgs),
    /// Exact and empirical moments for N = 0..max(steps), with the crossover
    Moments(CommonArgs),
    /// Half-P density against the asymptotic normal density
    Gaussian(CommonArgs),
    /// Monte Carlo ensemble against the exact recurrence
    Mc(CommonArgs),
    /// Exact versus factored spinor evolution over a sweep of coin angles
    Dirac {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        dirac: DiracArgs,
    },
    /// Validity diagnostics from physical parameters
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Momentum expectation in kg m/s; defaults to the RMS momentum of the
        /// default wavepacket
        #[arg(long, allow_negative_numbers = true)]
        momentum: Option<f64>,
    },
    /// Cross-check recurrence, closed form, enumeration and Monte Carlo
    Compare(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evolve(_) => "evolve",
            Command::Peak(_) => "peak",
            Command::Moments(_) => "moments",
            Command::Gaussian(_) => "gaussian",
            Command::Mc(_) => "mc",
            Command::Dirac { .. } => "dirac",
            Command::Validate { .. } => "validate",
            Command::Compare(_) => "compare",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Evolve(c)
            | Command::Peak(c)
            | Command::Moments(c)
            | Command::Gaussian(c)
            | Command::Mc(c)
            | Command::Compare(c) => c,
            Command::Dirac { common, .. } | Command::Validate { common, .. } => common,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Preset {
    pub fn command(self) -> &'static str {
        match self {
            Preset::Fig1 => "evolve",
            Preset::Fig2 => "peak",
            Preset::Fig3 => "moments",
            Preset::Fig4 => "gaussian",
        }
    }

    pub fn epsilon(self) -> f64 {
        0.2
    }

    pub fn steps(self) -> Vec<usize> {
        match self {
            Preset::Fig1 => vec![20, 50, 100, 200],
            Preset::Fig2 => vec![200],
            Preset::Fig3 => vec![300],
            Preset::Fig4 => vec![100, 300],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Noise strength eps = tan(mu B0 Delta / 2)
    #[arg(
        long,
        allow_negative_numbers = true,
        conflicts_with_all = ["c", "hbar", "mu", "b0", "delta", "mass", "coin_angle"]
    )]
    pub epsilon: Option<f64>,

    /// Step counts, comma separated
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,

    /// Number of sampled sign sequences
    #[arg(long)]
    pub realizations: Option<u64>,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Output file; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    #[command(flatten)]
    pub physical: PhysicalArgs,
}

/// Physical parameters, SI units. Unset values default to the dimensionless
/// system `c = hbar = Delta = B0 = 1`, `m = 0`.
#[derive(Debug, Clone, Args)]
pub struct PhysicalArgs {
    /// Speed of light, m/s
    #[arg(long)]
    pub c: Option<f64>,
    /// Reduced Planck constant, J s
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Magnetic moment, rad/(s T)
    #[arg(long, allow_negative_numbers = true, conflicts_with = "coin_angle")]
    pub mu: Option<f64>,
    /// Field magnitude, T
    #[arg(long, allow_negative_numbers = true)]
    pub b0: Option<f64>,
    /// Field-flip interval, s
    #[arg(long)]
    pub delta: Option<f64>,
    /// Rest mass, kg
    #[arg(long)]
    pub mass: Option<f64>,
    /// Half rotation angle mu B0 Delta / 2, in place of --mu
    #[arg(long, allow_negative_numbers = true)]
    pub coin_angle: Option<f64>,
}

impl PhysicalArgs {
    pub fn any(&self) -> bool {
        [self.c, self.hbar, self.mu, self.b0, self.delta, self.mass, self.coin_angle]
            .iter()
            .any(Option::is_some)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DiracArgs {
    /// Coin angles phi = mu B0 Delta / 2 to sweep, comma separated
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with_all = ["epsilon", "mu", "coin_angle"]
    )]
    pub phi: Option<Vec<f64>>,

    /// Wavepacket support width in cells
    #[arg(long, default_value_t = ndw_core::dirac::DEFAULT_WIDTH)]
    pub width: f64,

    /// Factor between discrete wavenumber and theta_p
    #[arg(long, default_value_t = 1.0)]
    pub theta_scale: f64,
}
