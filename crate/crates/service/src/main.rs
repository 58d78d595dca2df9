use lkit_service::{app, AppState};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    if let Some(n) = std::env::var("LKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let port: u16 = std::env::var("LKIT_PORT").ok().and_then(|p| p.parse().ok()).unwrap_or(8080);
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(AppState::from_env())).await
}
