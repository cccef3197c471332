use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use padicdiff_cli::{exit_code, run, CliError, Command, Format, RunConfig};

/// Exact p-adic verification runner.
#[derive(Parser)]
#[command(name = "padicdiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with any of the flag names as keys; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// write the report here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// record wall-clock times in the report
    #[arg(long, global = true)]
    timing: bool,
    #[command(flatten)]
    flags: RunConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let file = match &cli.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let mut cfg = file.overridden_by(&cli.flags);
        if cli.timing {
            cfg.timing = Some(true);
        }
        let rep = run(cli.command, &cfg);
        if let Ok(r) = &rep {
            let bytes = r.emit(cfg.format())?;
            match &cli.out {
                Some(path) => {
                    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
                }
                None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(e.to_string()))?,
            }
            if cfg.format() == Format::Csv || cli.out.is_some() {
                eprintln!("verdict: {}", r.verdict());
            }
        }
        rep
    })();
    if let Err(e) = &result {
        eprintln!("padicdiff {}: {e}", cli.command.name());
    }
    ExitCode::from(exit_code(&result) as u8)
}
