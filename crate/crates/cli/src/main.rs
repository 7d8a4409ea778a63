//! `rmplate`: convergence studies and structural checks for the clamped
//! plate discretizations.

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rmplate::study::{run_convergence_study, run_verifications, write_csv, StudyConfig};

#[derive(Parser)]
#[command(name = "rmplate", version, about = "Clamped Reissner-Mindlin plate convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the convergence study and write the CSV table.
    Study(Options),
    /// Run the structural checks on the configured meshes.
    Verify(Options),
}

/// Every config key has a flag of the same name that overrides the file.
#[derive(Args)]
struct Options {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// crisscross | diagonal | file
    #[arg(long)]
    mesh: Option<String>,
    /// Base mesh for `mesh = file`, relative to the working directory.
    #[arg(long = "mesh-file")]
    mesh_file: Option<PathBuf>,
    /// x0,y0,x1,y1
    #[arg(long)]
    domain: Option<String>,
    /// Comma-separated cell counts (refinement counts for file meshes).
    #[arg(long = "mesh-n")]
    mesh_n: Option<String>,
    /// Comma-separated thicknesses in (0, 1).
    #[arg(long)]
    t: Option<String>,
    /// std | dual | both
    #[arg(long)]
    kind: Option<String>,
    /// full | condensed | both
    #[arg(long)]
    path: Option<String>,
    /// default | none
    #[arg(long)]
    mms: Option<String>,
    #[arg(long)]
    young: Option<String>,
    #[arg(long)]
    poisson: Option<String>,
    #[arg(long = "shear-correction")]
    shear_correction: Option<String>,
    /// CSV destination; the table goes to stdout when unset.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<String>,
    /// Largest level at which the inf-sup constant is computed.
    #[arg(long = "beta-max-n")]
    beta_max_n: Option<String>,
}

impl Options {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let path = |p: &Path| -> Result<String> {
            Ok(std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))?.display().to_string())
        };
        let mut out = Vec::new();
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                out.push((key.to_string(), v));
            }
        };
        push("mesh", self.mesh.clone());
        push("mesh-file", self.mesh_file.as_deref().map(path).transpose()?);
        push("domain", self.domain.clone());
        push("mesh-n", self.mesh_n.clone());
        push("t", self.t.clone());
        push("kind", self.kind.clone());
        push("path", self.path.clone());
        push("mms", self.mms.clone());
        push("young", self.young.clone());
        push("poisson", self.poisson.clone());
        push("shear-correction", self.shear_correction.clone());
        push("out", self.out.as_deref().map(|p| p.display().to_string()));
        push("workers", self.workers.clone());
        push("beta-max-n", self.beta_max_n.clone());
        Ok(out)
    }

    fn load(&self) -> Result<StudyConfig> {
        StudyConfig::load(&self.config, &self.overrides()?).with_context(|| format!("loading {}", self.config.display()))
    }
}

fn study(opts: &Options) -> Result<bool> {
    let config = opts.load()?;
    let outcome = run_convergence_study(&config)?;
    match &config.out {
        Some(path) => eprintln!("wrote {} rows to {}", outcome.records.len(), path.display()),
        None => write_csv(&outcome.records, io::stdout().lock())?,
    }
    for failure in &outcome.failures {
        eprintln!("failed: {failure}");
    }
    Ok(outcome.is_success())
}

fn verify(opts: &Options) -> Result<bool> {
    let report = run_verifications(&opts.load()?);
    print!("{report}");
    Ok(report.is_success())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Study(opts) => study(opts),
        Command::Verify(opts) => verify(opts),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
