use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use tokio::net::TcpListener;
use tracing_subscriber::EnvFilter;

use anonroom_server::clock::SystemClock;
use anonroom_server::{serve, AppState, Config};
use anonroom_store::Store;

#[derive(Parser)]
#[command(name = "anonroom", version, about = "Anonymous long-poll chat server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chat server.
    Serve(ServeArgs),
}

#[derive(Parser)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Overridden by ANONROOM_DATA_DIR when set.
    #[arg(long, default_value = "./data")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 120)]
    session_timeout_s: u64,
    #[arg(long, default_value_t = 30)]
    presence_timeout_s: u64,
    #[arg(long, default_value_t = 30_000)]
    max_wait_ms: u64,
    /// Directory with the browser client bundle, served at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    let Command::Serve(args) = Cli::parse().command;
    let data_dir = std::env::var_os("ANONROOM_DATA_DIR").map(PathBuf::from).unwrap_or(args.data_dir);
    let store = Store::open(&data_dir)?;
    tracing::info!(dir = %data_dir.display(), messages = store.max_seq(), "store recovered");

    let config = Config {
        session_timeout_ms: args.session_timeout_s * 1_000,
        presence_timeout_ms: args.presence_timeout_s * 1_000,
        max_wait_ms: args.max_wait_ms,
        ..Config::default()
    };
    let app = AppState::new(store, config, Arc::new(SystemClock));
    let listener = TcpListener::bind((args.host.as_str(), args.port)).await?;
    println!("anonroom listening on http://{}", listener.local_addr()?);

    let shutdown_app = app.clone();
    tokio::select! {
        r = serve(listener, app, args.static_dir) => r?,
        _ = tokio::signal::ctrl_c() => {
            tracing::info!("shutting down");
        }
    }
    shutdown_app.store().sync_all()?;
    Ok(())
}
