#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use infplan_campaign::{router, Service, ServiceConfig};
use infplan_core::netcore::{generate, GeneratorSpec};
use serde_json::Value;
use std::path::Path;
use std::sync::Arc;
use tower::ServiceExt;

pub fn app(dir: &Path) -> (Arc<Service>, Router) {
    app_with(ServiceConfig::new(dir))
}

pub fn app_with(cfg: ServiceConfig) -> (Arc<Service>, Router) {
    let service = Arc::new(Service::open(cfg).expect("service opens"));
    (service.clone(), router(service))
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }

    pub fn code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap_or_default().to_string()
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Reply {
    call_raw(app, method, uri, body.map(|b| b.to_string()), None).await
}

pub async fn call_raw(app: &Router, method: &str, uri: &str, body: Option<String>, token: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b)),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply { status, headers, text: String::from_utf8(bytes.to_vec()).unwrap() }
}

/// 30-node two-community network with uncertain edges, as a JSON document.
pub fn sbm_document(seed: u64) -> Value {
    let spec: GeneratorSpec = serde_json::from_value(serde_json::json!({
        "kind": "sbm", "blocks": 2, "p_in": 0.3, "p_out": 0.05,
        "n": 30, "uncertain_fraction": 0.5, "u": 0.5, "p": 0.5
    }))
    .unwrap();
    let g = generate(&spec, seed).unwrap();
    serde_json::from_str(&g.network.to_json_string()).unwrap()
}
