//! HTTP routes. Bodies are parsed here so malformed JSON gets the same
//! error envelope as every other failure.

use crate::error::{ApiError, ApiResult};
use crate::model::{CampaignState, Report};
use crate::service::Service;
use axum::body::Bytes;
use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use std::sync::Arc;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/campaigns", post(create).get(list))
        .route("/campaigns/{id}", get(campaign))
        .route("/campaigns/{id}/recommendation", post(recommendation))
        .route("/campaigns/{id}/observations", post(observations))
        .route("/campaigns/{id}/advance", post(advance))
        .route("/campaigns/{id}/history", get(history))
        .route("/campaigns/{id}/network", get(network))
        .fallback(|| async { ApiError::NotFound("no such route".into()) })
        .layer(middleware::from_fn_with_state(service.clone(), auth))
        .with_state(service)
}

async fn auth(State(service): State<Arc<Service>>, req: Request, next: Next) -> Response {
    if let Some(token) = &service.config().token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::Unauthorized.into_response();
        }
    }
    next.run(req).await
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::Validation(format!("at `{path}`: {}", e.inner()))
    })
}

fn view(state: &CampaignState) -> Json<Value> {
    Json(serde_json::to_value(state.view()).expect("view serializes"))
}

async fn create(State(s): State<Arc<Service>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let state = s.create(parse(&body)?)?;
    Ok((StatusCode::CREATED, view(&state)))
}

async fn list(State(s): State<Arc<Service>>) -> Json<Value> {
    Json(json!({ "campaigns": s.ids() }))
}

async fn campaign(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    Ok(view(&s.get(&id)?.state))
}

async fn recommendation(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let state = s.recommend(&id).await?;
    let plan = state.plan.as_ref().expect("recommend leaves a plan");
    Ok(Json(json!({
        "id": state.id,
        "round": plan.round,
        "nodes": plan.nodes(),
        "slots": plan.slots,
        "version": state.version,
    })))
}

async fn observations(State(s): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let report: Report = parse(&body)?;
    Ok(view(&*s.observe(&id, report).await?))
}

async fn advance(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    Ok(view(&*s.advance(&id).await?))
}

async fn history(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let c = s.get(&id)?;
    Ok(Json(json!({ "id": id, "events": *c.history })))
}

async fn network(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Response> {
    let c = s.get(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], c.state.network.to_json_string()).into_response())
}
