mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::ConfigInvalid;

#[derive(Parser, Debug)]
#[command(name = "polybill", version, about = "Polygonal billiard experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Global {
    /// TOML config file; command-line flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Polygon JSON file.
    #[arg(long, global = true)]
    pub polygon: Option<PathBuf>,
    /// Snap the angles of a vertex-only polygon to `pi p / q` with `q <= DEN`.
    #[arg(long, global = true, value_name = "DEN")]
    pub snap_angles: Option<i64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub eps_corner: Option<f64>,
    #[arg(long, global = true)]
    pub eps_iet: Option<f64>,
    #[arg(long, global = true)]
    pub membership_tol: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write the command's CSV table here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Write CSV plot data here.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Billiard map orbit from a phase point.
    Orbit {
        /// 1-based side label.
        #[arg(long)]
        side: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        backward: bool,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Side-label code of an orbit.
    Code {
        /// `SIDE,S,THETA` with a 1-based side label.
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        /// Backward symbols as well.
        #[arg(long)]
        back: Option<usize>,
    },
    /// Phase points whose periodic code is the given word.
    Locus {
        /// Comma separated 1-based side labels.
        #[arg(long)]
        word: Option<String>,
    },
    /// Saddle connections up to a length bound.
    Saddles {
        #[arg(long)]
        lmax: Option<f64>,
    },
    /// Directional interval exchange, or analysis of an IET JSON file.
    Iet {
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<f64>,
        /// IET JSON file to analyse instead of building one from the polygon.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Saddle connection horizon (0 skips the check).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Periodic orbit inside a cover cell.
    Periodic {
        /// `SIDE,I,J,M` with a 1-based side label.
        #[arg(long)]
        cell: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Strip density test over random directions.
    Density {
        #[arg(long = "M", visible_alias = "level")]
        level: Option<u32>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Weak-mixing witness search over quadruples of cover cells.
    Certify {
        #[arg(long = "M", visible_alias = "level")]
        level: Option<u32>,
        /// `all` or a sample size.
        #[arg(long)]
        quads: Option<String>,
        #[arg(long)]
        budget_l: Option<usize>,
        #[arg(long)]
        budget_m: Option<usize>,
        #[arg(long)]
        budget_j: Option<usize>,
    },
    /// Certification followed by re-verification on perturbed tables.
    Robust {
        #[arg(long = "M", visible_alias = "level")]
        level: Option<u32>,
        /// Comma separated perturbation sizes.
        #[arg(long)]
        delta: Option<String>,
        /// `all` or a sample size.
        #[arg(long)]
        quads: Option<String>,
    },
    /// N_P of a rational polygon.
    Np,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigInvalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
