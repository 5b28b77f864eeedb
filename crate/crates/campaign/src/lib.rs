//! Multi-round campaign service. Officials ask for a recommendation, invite
//! the recommended people, report who came and which friendships were
//! confirmed, and advance to the next round. Every step is an event in an
//! append-only log, and the campaign state is a replay of that log.

pub mod api;
pub mod error;
pub mod model;
pub mod service;
pub mod store;

pub use api::router;
pub use error::{ApiError, ApiResult};
pub use model::{CampaignSettings, CampaignState, ContingencyMode, CreateRequest, Event, Record, Report};
pub use service::{Service, ServiceConfig};

use std::net::SocketAddr;
use std::sync::Arc;

/// Serves the API until interrupted.
pub async fn serve(addr: SocketAddr, cfg: ServiceConfig) -> std::io::Result<()> {
    let service = Service::open(cfg).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
