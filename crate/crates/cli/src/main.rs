use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use turbo_hybrid_cli::{parse_spec, run_sweep, CliError, RawSpec};

/// Simulate frame error rates of LTE turbo-CRC decoders over BPSK/AWGN.
#[derive(Parser)]
#[command(name = "turbo-hybrid", version)]
struct Cli {
    /// TOML file with the same keys as the flags; its values win conflicts
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suppress per-point progress on stderr
    #[arg(long, short)]
    quiet: bool,
    #[command(flatten)]
    spec: RawSpec,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(RawSpec::from_file).transpose()?;
    let (spec, warnings) = parse_spec(cli.spec, file)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let quiet = cli.quiet;
    run_sweep(&spec, |p| {
        if !quiet {
            eprintln!(
                "{} dB: {} errors / {} frames, fer {:.3e}, uer {:.3e}",
                p.ebn0_db, p.frame_errors, p.frames_run, p.fer, p.uer
            );
        }
    })?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
