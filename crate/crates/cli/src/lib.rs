//! Command-line experiment runner: argument parsing, configuration and file
//! output around the `pdlq` simulator.

pub mod commands;
pub mod config;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::Report;
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "pdlq", version, about = "Entangled photon pairs through PDL and PMD channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// key=value configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output CSV; companion files are written next to it
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Master seed, overrides run.seed
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Estimate states by simulated tomography instead of exactly
    #[arg(long, global = true)]
    pub noisy: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrated back-to-back source state and its metrics
    B2b,
    /// Emulator PDL magnitudes over a lattice of orientations
    SweepPdl {
        /// Emulator magnitudes in dB
        #[arg(long, default_value = "1.25,2.55,3.7,5.1,6.3")]
        pdl_db: String,
        #[arg(long, default_value_t = 50)]
        orientations: usize,
    },
    /// Best channel-B compensator against the emulator angle
    Compensate {
        #[arg(long, default_value_t = 5.1)]
        pdl_db: f64,
        /// Number of emulator angles over [0, π]
        #[arg(long, default_value_t = 19)]
        theta_steps: usize,
        /// Explicit emulator angles in radians, overrides --theta-steps
        #[arg(long)]
        theta: Option<String>,
        /// PMD dephasing weight in channel A
        #[arg(long, default_value_t = 0.0)]
        pmd_q: f64,
    },
    /// Normalized concurrence and rate with equal PDL in both channels
    Tradeoff {
        #[arg(long, default_value_t = 5.1)]
        pdl_db: f64,
        #[arg(long, default_value_t = 64)]
        orientations: usize,
        #[arg(long, default_value_t = 0.0)]
        pmd_q: f64,
    },
    /// Linear entropy of photon A against concurrence
    EntropyFeedback {
        #[arg(long, default_value_t = 5.27)]
        pdl_db: f64,
        #[arg(long, default_value_t = 256)]
        orientations: usize,
        #[arg(long, default_value_t = 0.155)]
        pmd_q: f64,
    },
    /// Run the invariant suites
    Verify {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::B2b => "b2b",
            Command::SweepPdl { .. } => "sweep-pdl",
            Command::Compensate { .. } => "compensate",
            Command::Tradeoff { .. } => "tradeoff",
            Command::EntropyFeedback { .. } => "entropy-feedback",
            Command::Verify { .. } => "verify",
        }
    }
}

pub fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.noisy |= common.noisy;
    Ok(cfg)
}

/// `dir/name.csv` + `metrics.txt` → `dir/name_metrics.txt`
pub fn companion_path(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    primary.with_file_name(format!("{stem}_{suffix}"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_report(out: &Path, report: &Report) -> Result<Vec<PathBuf>> {
    write_file(out, &report.primary)?;
    let mut written = vec![out.to_path_buf()];
    for (suffix, text) in &report.companions {
        let p = companion_path(out, suffix);
        write_file(&p, text)?;
        written.push(p);
    }
    Ok(written)
}

/// Runs a parsed command line. Returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut impl Write) -> Result<i32> {
    let cfg = load_config(&cli.common)?;
    let default_out = PathBuf::from(format!("{}.csv", cli.command.name()));
    let out = cli.common.out.clone().unwrap_or(default_out);
    let report = match &cli.command {
        Command::B2b => commands::b2b(&cfg)?,
        Command::SweepPdl { pdl_db, orientations } => {
            commands::sweep_pdl(&cfg, &commands::parse_list(pdl_db)?, *orientations)?
        }
        Command::Compensate {
            pdl_db,
            theta_steps,
            theta,
            pmd_q,
        } => {
            let thetas = match theta {
                Some(list) => commands::parse_list(list)?,
                None => commands::theta_grid(*theta_steps),
            };
            commands::compensate(&cfg, *pdl_db, &thetas, *pmd_q)?
        }
        Command::Tradeoff {
            pdl_db,
            orientations,
            pmd_q,
        } => commands::tradeoff(&cfg, *pdl_db, *orientations, *pmd_q)?,
        Command::EntropyFeedback {
            pdl_db,
            orientations,
            pmd_q,
        } => commands::entropy_feedback(&cfg, *pdl_db, *orientations, *pmd_q)?,
        Command::Verify { cases } => {
            let (text, ok) = commands::verify(&cfg, *cases)?;
            stdout.write_all(text.as_bytes())?;
            if let Some(p) = &cli.common.out {
                write_file(p, &text)?;
            }
            return Ok(if ok { 0 } else { 1 });
        }
    };
    for p in write_report(&out, &report)? {
        writeln!(stdout, "wrote {}", p.display())?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_names() {
        assert_eq!(
            companion_path(Path::new("runs/b2b.csv"), "metrics.txt"),
            PathBuf::from("runs/b2b_metrics.txt")
        );
        assert_eq!(companion_path(Path::new("x"), "reduced.csv"), PathBuf::from("x_reduced.csv"));
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["pdlq", "b2b", "--seed", "9", "--noisy"]).unwrap();
        let cfg = load_config(&cli.common).unwrap();
        assert_eq!(cfg.seed, 9);
        assert!(cfg.noisy);
    }
}
