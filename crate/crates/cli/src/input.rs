//! State pairs and distributions from files, inline JSON or presets.

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stein_core::classical::Distribution;
use stein_core::io::{parse_matrix, parse_probabilities};
use stein_core::operator::from_eigen;
use stein_core::{random, CMatrix, Config, DensityOperator, Error, StatePair, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// diag(1, 0) against I/2.
    PureVsMixed,
    /// diag(0.75, 0.25) against I/2.
    BiasedCoin,
    /// diag(0.75, 0.25) rotated about the Bloch y axis by `--angle`, against diag(0.6, 0.4).
    TiltedQubit,
    /// Two Hilbert-Schmidt random states of dimension `--dim`, drawn from `--seed`.
    Random,
}

#[derive(Args, Clone, Debug)]
pub struct StateArgs {
    /// Null hypothesis state (matrix JSON file).
    #[arg(long, requires = "sigma", conflicts_with = "preset")]
    pub rho: Option<PathBuf>,
    /// Alternative hypothesis state (matrix JSON file).
    #[arg(long, requires = "rho")]
    pub sigma: Option<PathBuf>,
    /// Named pair instead of files.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Rotation angle in radians for the tilted-qubit preset.
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub angle: f64,
    /// Dimension for the random preset.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn rotation_y(theta: f64) -> CMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)])
}

pub fn preset_pair(preset: Preset, angle: f64, dim: usize, seed: u64, cfg: &Config) -> Result<StatePair, Error> {
    let diag = |p: &[f64]| DensityOperator::diagonal(p, cfg);
    match preset {
        Preset::PureVsMixed => StatePair::new(diag(&[1.0, 0.0])?, diag(&[0.5, 0.5])?, cfg),
        Preset::BiasedCoin => StatePair::new(diag(&[0.75, 0.25])?, diag(&[0.5, 0.5])?, cfg),
        Preset::TiltedQubit => {
            let rho = DensityOperator::new(from_eigen(&[0.75, 0.25], &rotation_y(angle)), cfg)?;
            StatePair::new(rho, diag(&[0.6, 0.4])?, cfg)
        }
        Preset::Random => {
            if !(2..=64).contains(&dim) {
                return Err(Error::InvalidConfig(format!("random preset dimension {dim} outside 2..=64")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(random::random_pair(&mut rng, dim, cfg))
        }
    }
}

impl StateArgs {
    pub fn load(&self, seed: u64, cfg: &Config) -> Result<StatePair, Error> {
        match (&self.rho, &self.sigma, self.preset) {
            (Some(r), Some(s), None) => {
                let rho = DensityOperator::new(parse_matrix(&read(r)?)?, cfg)?;
                let sigma = DensityOperator::new(parse_matrix(&read(s)?)?, cfg)?;
                StatePair::new(rho, sigma, cfg)
            }
            (None, None, Some(p)) => preset_pair(p, self.angle, self.dim, seed, cfg),
            _ => Err(Error::InvalidConfig("give either --rho and --sigma, or --preset".into())),
        }
    }
}

/// A distribution given inline (`[0.75, 0.25]`) or as a path to a JSON file.
pub fn distribution(arg: &str) -> Result<Distribution, Error> {
    let text = if arg.trim_start().starts_with('[') { arg.to_string() } else { read(Path::new(arg))? };
    Distribution::new(parse_probabilities(&text)?)
}
