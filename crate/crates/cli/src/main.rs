//! `optotact`: every pipeline stage as a subcommand, handing off through files.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "optotact", version, about = "Simulate, calibrate and fuse a force/tactile fingertip")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Drive the sensor model with a wrench schedule.
    Simulate(commands::SimulateArgs),
    /// Fit a calibration matrix to a log.
    Calibrate(commands::CalibrateArgs),
    /// Per-axis RMSE and R² of a matrix on a log.
    Evaluate(commands::EvaluateArgs),
    /// Write the published calibration matrix.
    PaperMatrix(commands::PaperMatrixArgs),
    /// Check plate deflection at the rated load corners.
    CheckRange,
    /// Render a labeled tactile dataset.
    Render(commands::RenderArgs),
    /// Train the shape classifier on a rendered dataset.
    Train(commands::TrainArgs),
    /// Classify one tactile image.
    Classify(commands::ClassifyArgs),
    /// Run the two-channel pipeline on a contact scenario.
    Fuse(commands::FuseArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let res = match &cli.command {
        Command::Simulate(a) => commands::simulate(c, a),
        Command::Calibrate(a) => commands::calibrate(c, a),
        Command::Evaluate(a) => commands::evaluate(c, a),
        Command::PaperMatrix(a) => commands::paper_matrix(c, a),
        Command::CheckRange => commands::check_range(c),
        Command::Render(a) => commands::render(c, a),
        Command::Train(a) => commands::train(c, a),
        Command::Classify(a) => commands::classify(c, a),
        Command::Fuse(a) => commands::fuse(c, a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
