use std::net::SocketAddr;

use clap::Parser;
use tracing_subscriber::EnvFilter;

/// Serves tearing sessions over HTTP/JSON and WebSocket.
#[derive(Parser)]
#[command(name = "tearsim-server", version)]
struct Args {
    /// Listen address.
    #[arg(long, env = "TEARSIM_ADDR", default_value = "127.0.0.1:7878")]
    addr: SocketAddr,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    tearsim_service::serve(listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
