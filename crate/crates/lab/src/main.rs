use std::path::PathBuf;
use std::process::ExitCode;

use carleman_lab::{run, Command};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carleman-lab", version, about = "Carleman inequality and stability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Elliptic weighted-energy sweep over (gamma, s).
    VerifyCarleman(Common),
    /// Space-time weighted-energy sweep over (gamma, s).
    VerifyParabolic(Common),
    /// One boundary value problem with Cauchy data export.
    Solve(Common),
    /// Elliptic stability study over admissible samples.
    Stability(Common),
    /// Parabolic stability study over separable samples.
    ParabolicStability(Common),
    /// Runs every reference oracle.
    OracleCheck(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Sub::VerifyCarleman(a) => (Command::VerifyCarleman, a),
        Sub::VerifyParabolic(a) => (Command::VerifyParabolic, a),
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Stability(a) => (Command::Stability, a),
        Sub::ParabolicStability(a) => (Command::ParabolicStability, a),
        Sub::OracleCheck(a) => (Command::OracleCheck, a),
    };
    match run(cmd, &args.config, args.output_dir.as_deref()) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if let Some(e) = &summary.failure {
                eprintln!("{}", e.to_json());
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
