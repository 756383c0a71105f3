use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use recipeforge::config::RunConfig;
use recipeforge::service::{router, AppState};
use recipeforge::synthetic::{generate, SyntheticCorpusSpec};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    let records = generate(&SyntheticCorpusSpec {
        per_genre: 8,
        mixing: 1.0,
        ..Default::default()
    })
    .unwrap();
    let mut corpora = BTreeMap::new();
    corpora.insert("synthetic".to_owned(), records);
    let mut defaults = RunConfig::default().session_config();
    defaults.batch = 5;
    router(Arc::new(AppState::new(corpora, defaults)), None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn session(app: &Router) -> String {
    let (status, body) = call(
        app,
        "POST",
        "/v1/sessions",
        Some(json!({"corpus": "synthetic", "seed_per_genre": 2})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["session_id"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn query_label_round_cycle() {
    let app = app();
    let id = session(&app).await;
    assert_eq!(id, "s1");

    let (status, next) = call(&app, "GET", &format!("/v1/sessions/{id}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(next["remaining_in_batch"], 5);
    assert_eq!(next["pool_remaining"], 72 - 18);
    let q = &next["query"];
    assert_eq!(q["committee_votes"].as_array().unwrap().len(), 3);
    let first_entropy = q["vote_entropy"].as_f64().unwrap();
    let record_id = q["record_id"].as_u64().unwrap();

    let label = json!({"record_id": record_id, "label": 4});
    let (status, out) = call(&app, "POST", &format!("/v1/sessions/{id}/label"), Some(label.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(out, json!({"accepted": true, "remaining_in_batch": 4}));

    let (status, again) = call(&app, "POST", &format!("/v1/sessions/{id}/label"), Some(label)).await;
    assert_eq!((status, again), (StatusCode::OK, out));

    let (status, err) = call(
        &app,
        "POST",
        &format!("/v1/sessions/{id}/label"),
        Some(json!({"record_id": record_id, "label": 5})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(err["error"].as_str().unwrap().contains("first label stands"));

    let (_, next) = call(&app, "GET", &format!("/v1/sessions/{id}/next"), None).await;
    assert_ne!(next["query"]["record_id"].as_u64().unwrap(), record_id);
    assert!(next["query"]["vote_entropy"].as_f64().unwrap() <= first_entropy);

    let (status, round) = call(&app, "POST", &format!("/v1/sessions/{id}/round"), None).await;
    assert_eq!(status, StatusCode::OK, "{round}");
    assert_eq!(round["round"], 1);
    assert_eq!(round["human_labeled"], 1);

    let (status, m) = call(&app, "GET", &format!("/v1/sessions/{id}/metrics"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(m["human"], 19);
    assert_eq!(m["round"], 1);
    assert_eq!(
        m["human"].as_u64().unwrap() + m["machine"].as_u64().unwrap() + m["pool_remaining"].as_u64().unwrap(),
        72
    );
}

#[tokio::test]
async fn invalid_input_is_422() {
    let app = app();
    let id = session(&app).await;
    let (_, next) = call(&app, "GET", &format!("/v1/sessions/{id}/next"), None).await;
    let record_id = next["query"]["record_id"].as_u64().unwrap();
    for label in [0, 10] {
        let (status, err) = call(
            &app,
            "POST",
            &format!("/v1/sessions/{id}/label"),
            Some(json!({"record_id": record_id, "label": label})),
        )
        .await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{label}");
        assert!(err["error"].is_string());
    }
    let (status, _) = call(
        &app,
        "POST",
        &format!("/v1/sessions/{id}/label"),
        Some(json!({"record_id": "x"})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(
        &app,
        "POST",
        &format!("/v1/sessions/{id}/label"),
        Some(json!({"record_id": 1, "label": 1})),
    )
    .await;
    assert_eq!(
        status,
        StatusCode::UNPROCESSABLE_ENTITY,
        "record 1 is seed data, not queued"
    );
    for tau in [0.0, 1.5] {
        let (status, _) = call(
            &app,
            "POST",
            "/v1/sessions",
            Some(json!({"corpus": "synthetic", "tau": tau})),
        )
        .await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{tau}");
    }
}

#[tokio::test]
async fn unknown_things_are_404() {
    let app = app();
    for (method, uri) in [
        ("GET", "/v1/sessions/s9/next"),
        ("GET", "/v1/sessions/s9/metrics"),
        ("POST", "/v1/sessions/s9/round"),
        ("GET", "/v1/corpus/nope/stats"),
        ("GET", "/v1/nothing"),
    ] {
        let (status, body) = call(&app, method, uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert!(body["error"].is_string());
    }
    let (status, _) = call(&app, "POST", "/v1/sessions", Some(json!({"corpus": "nope"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn corpus_stats() {
    let (status, s) = call(&app(), "GET", "/v1/corpus/synthetic/stats", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s["human_total"], 72);
    assert_eq!(s["unlabeled"], 0);
    assert!(s["per_genre"].as_array().unwrap().iter().all(|g| g["total"] == 8));
}

#[tokio::test]
async fn sessions_are_independent() {
    let app = app();
    let a = session(&app).await;
    let b = session(&app).await;
    assert_ne!(a, b);
    let (_, next) = call(&app, "GET", &format!("/v1/sessions/{a}/next"), None).await;
    let rid = next["query"]["record_id"].clone();
    call(
        &app,
        "POST",
        &format!("/v1/sessions/{a}/label"),
        Some(json!({"record_id": rid, "label": 1})),
    )
    .await;
    let (_, mb) = call(&app, "GET", &format!("/v1/sessions/{b}/metrics"), None).await;
    assert_eq!(mb["answered"], 0);
    let (_, ma) = call(&app, "GET", &format!("/v1/sessions/{a}/metrics"), None).await;
    assert_eq!(ma["answered"], 1);
}
