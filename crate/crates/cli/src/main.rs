//! `wefpe` command-line interface.
//!
//! Results go to standard output as JSON; diagnostics go to standard error.
//! Exit codes: 0 ok, 1 check failed, 2 usage or configuration error, 3 I/O
//! error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wefpe::config::{Periods, RunConfig};
use wefpe::encoding::EncodingMode;
use wefpe::Error;

#[derive(Parser, Debug)]
#[command(
    name = "wefpe",
    version,
    about = "Weierstrass elliptic function positional encodings"
)]
pub struct Cli {
    /// JSON run configuration; missing keys take built-in defaults.
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an encoding grid and write it as a grid file.
    Gen {
        #[command(flatten)]
        enc: EncodingArgs,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Check the ℘ identities; exits 1 if any residual exceeds its threshold.
    Verify {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long)]
        samples: Option<usize>,
        /// Sampling seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Distance-decay statistics of a generated grid.
    Decay {
        #[command(flatten)]
        enc: EncodingArgs,
        #[arg(long)]
        bins: Option<usize>,
        /// Fuse seeded standard-normal content noise into the grid first.
        #[arg(long)]
        noise_seed: Option<u64>,
        /// Per-bin CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Partial-sum convergence of both summation orders.
    Bench {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Comma-separated term counts.
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<usize>>,
        #[arg(long)]
        points: Option<usize>,
        /// Sample-point seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        oracle_truncation: Option<usize>,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Cosine-similarity matrix of the patch rows as an N × N CSV.
    Similarity {
        #[command(flatten)]
        enc: EncodingArgs,
        /// Include the class row as row and column 0.
        #[arg(long)]
        include_cls: bool,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Two-component PCA of the patch rows as (i, j, pc1, pc2) CSV.
    Pca {
        #[command(flatten)]
        enc: EncodingArgs,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Blend a generated grid with learned embeddings of the same shape.
    Hybrid {
        #[arg(long)]
        wef: PathBuf,
        #[arg(long)]
        learned: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda_raw: Option<f64>,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Args, Debug, Default)]
pub struct LatticeArgs {
    /// Half-period choice.
    #[arg(long, value_enum)]
    pub periods: Option<PeriodsArg>,
    /// Sets max_m = max_n.
    #[arg(long)]
    pub truncation: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct EncodingArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Model dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Projection seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub beta_pos: Option<f64>,
    #[arg(long)]
    pub alpha_u: Option<f64>,
    #[arg(long)]
    pub alpha_v: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PeriodsArg {
    Reference,
    Exact,
    Custom,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Direct,
    Fast,
}

impl LatticeArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = self.periods {
            cfg.periods = Some(match p {
                PeriodsArg::Reference => Periods::Reference,
                PeriodsArg::Exact => Periods::Exact,
                PeriodsArg::Custom => Periods::Custom,
            });
        }
        if let Some(t) = self.truncation {
            cfg.encoding.lattice.max_m = t;
            cfg.encoding.lattice.max_n = t;
        }
    }
}

impl EncodingArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        self.lattice.apply(cfg);
        let e = &mut cfg.encoding;
        if let Some(v) = self.height {
            e.height = v;
        }
        if let Some(v) = self.width {
            e.width = v;
        }
        if let Some(v) = self.dim {
            e.model_dim = v;
        }
        if let Some(v) = self.seed {
            e.projection_seed = v;
        }
        if let Some(m) = self.mode {
            e.mode = match m {
                ModeArg::Direct => EncodingMode::DirectLattice,
                ModeArg::Fast => EncodingMode::FastApprox,
            };
        }
        if let Some(v) = self.beta_pos {
            e.beta_pos = v;
        }
        if let Some(v) = self.alpha_u {
            e.alpha_u = v;
        }
        if let Some(v) = self.alpha_v {
            e.alpha_v = v;
        }
    }
}

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Ok,
    CheckFailed,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Format(_) => 3,
        Error::DegenerateRow(_) | Error::UndefinedCorrelation | Error::InsufficientData(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
