use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use orthombo::cli::{cmd_check, cmd_run, cmd_tables, EXIT_ERROR};
use orthombo::config::RunConfig;

#[derive(Parser)]
#[command(name = "orthombo", version, about = "Diffusion-generated motion of orthogonal matrix fields")]
struct Args {
    /// Worker threads (falls back to MBO_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a config file
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.dir)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Snapshot interval in iterations (overrides output.snapshot_every)
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Print the band-width and Fourier-mode tables
    Tables,
    /// Validate a snapshot and print its diagnostics
    Check { snapshot: PathBuf },
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("MBO_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("MBO_THREADS must be a positive integer, got `{v}`")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match threads(args.threads) {
        Ok(Some(0)) => Err("thread count must be positive".to_string()),
        Ok(Some(n)) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string()),
        Ok(None) => Ok(()),
        Err(e) => Err(e),
    }
    .and_then(|()| {
        let mut out = std::io::stdout().lock();
        match args.command {
            Command::Run {
                config,
                out: dir,
                snapshot_every,
            } => RunConfig::load(&config).and_then(|mut cfg| {
                if let Some(d) = dir {
                    cfg.out_dir = d;
                }
                if let Some(k) = snapshot_every {
                    cfg.snapshot_every = k;
                }
                cmd_run(&cfg, &mut out)
            }),
            Command::Tables => cmd_tables(&mut out),
            Command::Check { snapshot } => cmd_check(&snapshot, &mut out),
        }
        .map_err(|e| e.to_string())
    });
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
