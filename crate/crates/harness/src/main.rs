use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use anonroom_harness::{
    run_broadcast_check, run_capacity_check, run_durability_check, run_privacy_check, HarnessError, Options, Report,
};

#[derive(Parser)]
#[command(name = "anonroom-bench", about = "Load and correctness checks for an anonroom server")]
struct Cli {
    #[command(subcommand)]
    scenario: Scenario,
    /// Base URL of a running server (not used by durability, which spawns its own).
    #[arg(long, global = true, default_value = "http://127.0.0.1:8080")]
    url: String,
    #[arg(long, global = true)]
    clients: Option<usize>,
    #[arg(long, global = true)]
    messages: Option<usize>,
    #[arg(long, global = true, default_value_t = 60)]
    duration_s: u64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Also write the report JSON to this file.
    #[arg(long, global = true)]
    report_out: Option<PathBuf>,
    /// Server binary for durability; defaults to `anonroom` next to this one.
    #[arg(long, global = true)]
    server_bin: Option<PathBuf>,
    /// Data directory for durability; must be empty or absent.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Scenario {
    /// N clients each broadcast M public messages.
    Broadcast,
    /// M private messages between random pairs of N clients.
    Privacy,
    /// N sessions long-polling concurrently for the duration.
    Capacity,
    /// Crash and restart a spawned server, then compare histories.
    Durability,
}

async fn run(cli: &Cli) -> Result<Report, HarnessError> {
    let (clients, messages) = match cli.scenario {
        Scenario::Broadcast => (50, 20),
        Scenario::Privacy => (10, 1000),
        Scenario::Capacity => (500, 0),
        Scenario::Durability => (3, 0),
    };
    let opts = Options {
        clients: cli.clients.unwrap_or(clients),
        messages: cli.messages.unwrap_or(messages),
        duration: Duration::from_secs(cli.duration_s),
        seed: cli.seed,
        ..Options::default()
    };
    match cli.scenario {
        Scenario::Broadcast => run_broadcast_check(&cli.url, &opts).await,
        Scenario::Privacy => run_privacy_check(&cli.url, &opts).await,
        Scenario::Capacity => run_capacity_check(&cli.url, &opts).await,
        Scenario::Durability => {
            let bin = match &cli.server_bin {
                Some(b) => b.clone(),
                None => std::env::current_exe()
                    .map_err(|e| HarnessError::Usage(e.to_string()))?
                    .with_file_name(format!("anonroom{}", std::env::consts::EXE_SUFFIX)),
            };
            let dir = cli.data_dir.clone().unwrap_or_else(|| anonroom_harness::durability_scratch_dir(cli.seed));
            if std::fs::read_dir(&dir).map(|mut d| d.next().is_some()).unwrap_or(false) {
                return Err(HarnessError::Usage(format!("{} is not empty", dir.display())));
            }
            run_durability_check(&bin, &dir, &opts).await
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli).await {
        Ok(r) => r,
        Err(e) => {
            eprintln!("anonroom-bench: {e}");
            return ExitCode::from(2);
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{json}");
    if let Some(path) = &cli.report_out {
        if let Err(e) = std::fs::write(path, format!("{json}\n")) {
            eprintln!("anonroom-bench: writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
