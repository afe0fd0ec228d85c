use std::process::ExitCode;

use clap::Parser;
use qswitch_cli::{presets, run, Cli, Command, Kind};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Presets => {
            for (name, _) in presets::PRESETS {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Fringe(a) => (Kind::Fringe, a),
        Command::Estimate(a) => (Kind::Estimate, a),
        Command::Scaling(a) => (Kind::Scaling, a),
        Command::Trace(a) => (Kind::Trace, a),
        Command::Qfi(a) => (Kind::Qfi, a),
    };
    match run(kind, &args) {
        Ok((artifacts, written)) => {
            print!("{}", artifacts.summary);
            for v in &artifacts.violations {
                eprintln!("warning: {v}");
            }
            for p in written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
