//! Command-line interface.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::compare::compare;
use crate::config::{ExperimentConfig, OUTPUT_ROOT_ENV};
use crate::error::{HarnessError, Result};
use crate::plotdata::export_plotdata;

#[derive(Debug, Parser)]
#[command(name = "kivi", version, about = "Kernel implicit variational inference experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Fit the posterior-over-prior ratio instead of prior-over-posterior.
        #[arg(long)]
        no_reverse_trick: bool,
        /// Replace the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Root for relative output directories.
        #[arg(long, env = OUTPUT_ROOT_ENV)]
        output_root: Option<PathBuf>,
    },
    /// Print the metrics of two or more runs side by side.
    Compare {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write histogram, scatter and grid CSVs for a run.
    ExportPlotdata { report: PathBuf },
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            no_reverse_trick,
            seed,
            output_dir,
            output_root,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config).map_err(|e| match e {
                HarnessError::Io { path, source } => HarnessError::config(format!("cannot read {}: {source}", path.display())),
                e => e,
            })?;
            if no_reverse_trick {
                cfg.kivi.reverse_trick = false;
            }
            if let Some(s) = seed {
                cfg.seed = s;
                cfg.kivi.seed = s;
            }
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if let Some(root) = output_root.filter(|_| cfg.output_dir.is_relative()) {
                cfg.output_dir = root.join(&cfg.output_dir);
            }
            let report = crate::run(&cfg)?;
            let dir = cfg.output_dir.display();
            println!("{} run written to {dir}", report.kind);
            for (k, v) in &report.metrics {
                println!("  {k} = {v:.6}");
            }
        }
        Command::Compare { runs, csv } => {
            let table = compare(&runs)?;
            print!("{}", table.render());
            if let Some(path) = csv {
                table.write_csv(&path)?;
            }
        }
        Command::ExportPlotdata { report } => {
            for p in export_plotdata(&report)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}
