use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use xraysegkit_service::{serve, AppState};

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Dataset descriptor
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory holding a built annotator bundle to serve at /
    #[arg(long)]
    ui_dir: Option<PathBuf>,
}

async fn interrupted() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
    log::info!("shutting down");
}

pub fn run(args: ServeArgs) -> anyhow::Result<()> {
    let mut state = AppState::open(&args.dataset)?;
    if let Some(dir) = &args.ui_dir {
        if !dir.is_dir() {
            return Err(crate::usage(format!("--ui-dir {} is not a directory", dir.display())));
        }
        state = state.with_ui_dir(dir);
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("cannot listen on {addr}"))?;
        let local = listener.local_addr()?;
        println!("serving {} images on http://{local}", state.image_count());
        serve(listener, state, interrupted()).await?;
        Ok(())
    })
}
