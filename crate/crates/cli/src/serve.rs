//! `POST /ask` over HTTP.
//!
//! Request: `{"question": "..."}`. Response: `{"promql", "valid",
//! "trace_id"}`. Malformed bodies and empty questions get 400 with
//! `{"error": "..."}`; pipeline failures get 502 (model errors) or 500.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use promkg::pipeline::{AblationFlags, Engine, PipelineError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AskRequest {
    question: String,
}

#[derive(Debug, Serialize)]
struct AskResponse {
    promql: String,
    valid: bool,
    trace_id: String,
}

struct AppState {
    engine: Engine,
    flags: AblationFlags,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

async fn ask(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: AskRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")),
    };
    if req.question.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "question is empty");
    }
    let trace_id = uuid::Uuid::new_v4().to_string();
    let span = tracing::info_span!("ask", %trace_id);
    let worker = state.clone();
    // The pipeline blocks on model calls; keep it off the async workers.
    let result = tokio::task::spawn_blocking(move || {
        let _g = span.enter();
        worker.engine.answer(&req.question, worker.flags)
    })
    .await;
    match result {
        Ok(Ok(a)) => {
            tracing::info!(%trace_id, valid = a.ast_valid, "answered");
            Json(AskResponse {
                promql: a.promql,
                valid: a.ast_valid,
                trace_id,
            })
            .into_response()
        }
        Ok(Err(e @ PipelineError::Llm { .. })) => error(StatusCode::BAD_GATEWAY, e.to_string()),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")),
    }
}

pub fn router(engine: Engine, flags: AblationFlags) -> Router {
    Router::new()
        .route("/ask", post(ask))
        .with_state(Arc::new(AppState { engine, flags }))
}

/// Serves until interrupted. The engine is built by the caller, before the
/// runtime exists, because the blocking HTTP client must not be created
/// inside one.
pub fn run(engine: Engine, flags: AblationFlags, bind: &str) -> anyhow::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind).await?;
        println!("listening on {}", listener.local_addr()?);
        use std::io::Write;
        std::io::stdout().flush()?;
        axum::serve(listener, router(engine, flags))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
