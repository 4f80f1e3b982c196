use std::net::{IpAddr, SocketAddr};

use anyhow::{Context, Result};
use clap::Parser;
use semcom_cli::{init_logging, TransmitterArgs};
use semcom_core::orchestrator::{serve, ServerOptions, DEFAULT_MAX_REQUEST_BYTES};
use semcom_core::protocol::DEFAULT_PORT;
use tokio::net::TcpListener;

/// Answers receiver requests about annotated surveillance clips.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, default_value_t = DEFAULT_MAX_REQUEST_BYTES)]
    max_request_bytes: usize,
    #[command(flatten)]
    transmitter: TransmitterArgs,
}

#[tokio::main]
async fn main() -> Result<()> {
    init_logging();
    let cli = Cli::parse();
    let transmitter = cli.transmitter.build()?;
    let addr = SocketAddr::new(cli.bind, cli.port);
    let listener = TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(
        %addr,
        clips = transmitter.clips().len(),
        nbar = transmitter.config().nbar,
        backend = cli.transmitter.backend.backend.as_str(),
        "transmitter listening"
    );
    let options = ServerOptions {
        max_request_bytes: cli.max_request_bytes,
    };
    serve(listener, transmitter, options, async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutdown requested");
    })
    .await?;
    Ok(())
}
