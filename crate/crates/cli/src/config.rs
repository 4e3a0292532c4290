use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "twisted",
    version,
    about = "Verification campaigns for twisted transpositions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Campaign seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of random instances (command-specific default).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Residual threshold (command-specific default).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Matrix size.
    #[arg(long, global = true, default_value_t = 2)]
    pub m: usize,
    /// Theta degree (default 1), or R-matrix dimension for verify-rmatrix (default 2).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Polynomial degree.
    #[arg(long, global = true, default_value_t = 2)]
    pub d: usize,
    /// Number of factors in a chain.
    #[arg(long = "N", global = true, default_value_t = 3)]
    pub big_n: usize,
    #[arg(long, global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tau_re: f64,
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    pub tau_im: f64,
    /// Input JSON file.
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Lift the desk-scale size limits.
    #[arg(long, global = true)]
    pub allow_large: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Qtwist,
    Scalar,
    Algebra,
    MatrixSwap,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RKind {
    Keep,
    Flip,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the involution, braid and functional relations of a shipped map.
    VerifyMap {
        #[arg(long, value_enum)]
        map: MapKind,
    },
    /// Refactor a monic matrix polynomial along a partition of its roots.
    FactorPoly {
        /// Partition JSON (inline or a file path): {"blocks": [[[re, im], ...], ...]}.
        #[arg(long)]
        partition: Option<String>,
    },
    /// Apply a braid word to an ordered factorization or a theta chain.
    BraidOrbit {
        /// Comma-separated adjacent transpositions, 1-based.
        #[arg(long, default_value = "")]
        word: String,
        /// Compare the words [i, i+1, i] and [i+1, i, i+1] instead.
        #[arg(long)]
        braid_check: Option<usize>,
        /// Treat the input as a chain of degree-one theta sections.
        #[arg(long)]
        theta: bool,
    },
    /// Dimension, zero and factorization diagnostics for a theta space.
    ThetaDiag {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        c_re: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        c_im: f64,
    },
    /// Check the inverse and twisted Yang-Baxter relations of a trivial R-matrix.
    VerifyRmatrix {
        #[arg(long, value_enum)]
        map: MapKind,
        #[arg(long, value_enum, default_value = "flip")]
        rmatrix: RKind,
        /// Add a dense perturbation of this size to R.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
    },
}

/// Everything a run depends on, defaults filled in; embedded in each report.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub command: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub tau: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<MapKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub allow_large: bool,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

const LIMITS: [(&str, usize); 4] = [("m", 4), ("d", 4), ("N", 4), ("n", 2)];

impl Config {
    pub fn resolve(cli: &Cli) -> Result<Self, Failure> {
        let c = &cli.common;
        let (command, trials, tol, n, map) = match &cli.command {
            Command::VerifyMap { map } => {
                let tol = if *map == MapKind::Theta { 1e-5 } else { 1e-8 };
                ("verify-map", 20, tol, 1, Some(*map))
            }
            Command::FactorPoly { .. } => ("factor-poly", 1, 1e-7, 1, None),
            Command::BraidOrbit { .. } => ("braid-orbit", 1, 1e-6, 1, None),
            Command::ThetaDiag { .. } => ("theta-diag", 3, 1e-6, 1, None),
            Command::VerifyRmatrix { map, .. } => ("verify-rmatrix", 25, 1e-12, 2, Some(*map)),
        };
        let config = Config {
            command,
            seed: c.seed,
            trials: c.trials.unwrap_or(trials),
            tol: c.tol.unwrap_or(tol),
            m: c.m,
            n: c.n.unwrap_or(n),
            d: c.d,
            big_n: c.big_n,
            tau: [c.tau_re, c.tau_im],
            map,
            input: c.input.clone(),
            out: c.out.clone(),
            allow_large: c.allow_large,
            extra: serde_json::Map::new(),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), Failure> {
        if self.trials == 0 {
            return Err(Failure::Config("--trials must be positive".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Failure::Config("--tol must be a positive number".into()));
        }
        if !(self.tau[0].is_finite() && self.tau[1].is_finite()) {
            return Err(Failure::Config("tau must be finite".into()));
        }
        let sizes = [self.m, self.d, self.big_n, self.n];
        for ((name, limit), value) in LIMITS.iter().zip(sizes) {
            if value == 0 {
                return Err(Failure::Config(format!("--{name} must be positive")));
            }
            if value > *limit && !self.allow_large {
                return Err(Failure::Config(format!(
                    "--{name} {value} exceeds the desk-scale limit {limit}; pass --allow-large to override"
                )));
            }
        }
        Ok(())
    }
}
