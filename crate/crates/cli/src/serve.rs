use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use worldsmith_core::generator::BaselineGenerator;
use worldsmith_core::Corpus;
use worldsmith_service::{Engine, ScorerBundle, ServiceConfig};

use crate::scorers;
use crate::ServeArgs;

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

pub fn run(corpus: Corpus, _seed: u64, out: &Path, args: &ServeArgs) -> anyhow::Result<()> {
    let loaded = scorers::load(&args.scorer, &corpus, args.feature)?;
    let corpus = Arc::new(corpus);
    let generator = Arc::new(BaselineGenerator::new(&corpus));
    let config = ServiceConfig {
        data_dir: Some(args.data_dir.clone().unwrap_or_else(|| out.join("sessions"))),
        suggestions_enabled: !args.no_suggestions,
        feature_mode: args.feature,
        suggest_k: args.suggest_k,
        ..ServiceConfig::default()
    };
    let engine = Arc::new(Engine::new(
        corpus,
        ScorerBundle::uniform(loaded.scorer),
        generator,
        config,
    )?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        worldsmith_service::serve(engine, listener, shutdown_signal()).await?;
        println!("shut down; session logs flushed");
        Ok(())
    })
}
