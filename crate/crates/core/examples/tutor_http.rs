//! The tutor over HTTP+JSON: create a session, fetch a trial, submit a
//! choice, terminate, and download the log. Requests go straight to the
//! router in-process; run `mgps serve` for a real listener.
//!
//! `cargo run --example tutor_http`

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use http_body_util::BodyExt;
use mgps::env::ProblemConfig;
use mgps::tutor::{router, TutorConfig, TutorService};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: Method, uri: &str, body: Option<Value>) -> (u16, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

#[tokio::main]
async fn main() {
    let service = TutorService::new(ProblemConfig::financial_default(), TutorConfig::default()).unwrap();
    let app = router(Arc::new(service));

    let (status, body) = call(&app, Method::POST, "/sessions", Some(json!({"condition": "mgps_tutor", "seed": 7}))).await;
    println!("POST /sessions -> {status} {body}");
    let id = serde_json::from_str::<Value>(&body).unwrap()["session_id"].as_str().unwrap().to_string();

    let (status, body) = call(&app, Method::GET, &format!("/sessions/{id}/trial"), None).await;
    let view: Value = serde_json::from_str(&body).unwrap();
    println!("GET trial -> {status}, trial {}, offered {}", view["trial"], view["offered"]);

    let action = view["offered"][0].clone();
    let (status, body) = call(&app, Method::POST, &format!("/sessions/{id}/choice"), Some(json!({ "action": action }))).await;
    println!("POST choice -> {status} {body}");

    let (status, body) = call(&app, Method::POST, &format!("/sessions/{id}/terminate"), None).await;
    println!("POST terminate -> {status} {body}");

    let (status, body) = call(&app, Method::GET, "/sessions/nope/trial", None).await;
    println!("GET unknown session -> {status} {body}");

    let (status, body) = call(&app, Method::GET, &format!("/sessions/{id}/log"), None).await;
    println!("GET log -> {status}, {} events:", body.lines().count());
    for line in body.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        println!("  #{} {}", v["seq"], v["kind"]);
    }
}
