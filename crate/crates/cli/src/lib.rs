//! Command-line front end: simulation, equilibrium reports and figure data.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use flocstat::output::to_json_string;

pub mod commands;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "flocstat",
    version,
    about = "Chemostat models with planktonic and attached biomass"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Full,
    Xp,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig4,
    Fig6,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one model variant and write its trajectory as CSV.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        model: ModelKind,
        #[arg(long, default_value_t = 60.0)]
        t_end: f64,
        /// Comma-separated initial state in the coordinates of the model.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        points: usize,
    },
    /// Locate and classify all steady states.
    Equilibria {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the data behind a figure.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// Invalid command-line input that is not part of the model configuration.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<flocstat::Error>() {
            return if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG };
        }
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_CONFIG;
        }
    }
    1
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub config: serde_json::Value,
    /// Choices made on behalf of the user (defaults, conventions).
    pub settings: serde_json::Value,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

/// Collects written files for the manifest.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.write(name, &to_json_string(value)?)
    }

    pub fn finish(
        self,
        manifest_name: &str,
        command: &str,
        config: serde_json::Value,
        settings: serde_json::Value,
        started: Instant,
    ) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            settings,
            outputs: self.files,
            duration_seconds: started.elapsed().as_secs_f64(),
        };
        let path = self.dir.join(manifest_name);
        fs::write(&path, to_json_string(&manifest)?).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            model,
            t_end,
            y0,
            out,
            points,
        } => commands::simulate(&config, model, t_end, y0.as_deref(), &out, points),
        Command::Equilibria { config, out } => commands::equilibria(&config, &out),
        Command::Reproduce {
            figure,
            out_dir,
            points,
            jobs,
        } => match figure {
            Figure::Fig4 => commands::reproduce_fig4(&out_dir, points, jobs),
            Figure::Fig6 => commands::reproduce_fig6(&out_dir, points, jobs),
        },
    }
}
