//! In-process HTTP tests against the service router.

use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use tower::util::ServiceExt;

use bestanswer::dataset::{assemble, FeatureCase};
use bestanswer::discretise::learn_directions;
use bestanswer::features::Feature;
use bestanswer::model::{train, ClassifierConfig};
use bestanswer::synth::{synth_corpus, SynthConfig};
use bestanswer::textfeat::BackgroundModel;
use bestanswer_cli::server::{router, LoadedModel, ServiceState};

fn trained_state(case: FeatureCase) -> Arc<ServiceState> {
    let corpus = synth_corpus(&SynthConfig {
        n_threads: 60,
        seed: 31,
        ..SynthConfig::default()
    });
    let tc = bestanswer::dataset::TokenizedCorpus::new(&corpus);
    let bg: BackgroundModel<f64> = BackgroundModel::build(tc.tokens.iter().flatten(), 1.0);
    let table = bestanswer::dataset::raw_features(&tc, &bg, None);
    let rankable: Vec<Feature> = Feature::ALL
        .into_iter()
        .filter(|f| f.is_rankable())
        .collect();
    let profile = learn_directions(&rankable, &table.labeled_rows(&rankable)).unwrap();
    let ds = assemble(&corpus, case, &bg, Some(&profile)).unwrap();
    let model = train(&ds, &ClassifierConfig::default(), &profile, &bg.digest(), false).unwrap();
    let digest = model.digest();
    Arc::new(ServiceState {
        loaded: Some(LoadedModel {
            model,
            background: bg,
            digest,
        }),
        started: Instant::now(),
        body_limit: 64 * 1024,
    })
}

fn degraded_state() -> Arc<ServiceState> {
    Arc::new(ServiceState {
        loaded: None,
        started: Instant::now(),
        body_limit: 64 * 1024,
    })
}

async fn send_json(
    state: Arc<ServiceState>,
    method: &str,
    uri: &str,
    body: Option<serde_json::Value>,
) -> (StatusCode, serde_json::Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(match body {
            Some(value) => Body::from(value.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    let response = router(state).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null);
    (status, value)
}

fn two_answer_request() -> serde_json::Value {
    serde_json::json!({
        "answers": [
            { "body": "<p>short</p>", "creation_date": "2014-01-01T00:00:00Z" },
            {
                "body": format!("<p>{}</p>", "a long and thorough explanation. ".repeat(25)),
                "creation_date": "2014-01-01T00:05:00Z"
            }
        ]
    })
}

#[tokio::test]
async fn health_reports_ok_with_model() {
    let state = trained_state(FeatureCase::Case2);
    let digest = state.loaded.as_ref().unwrap().digest.clone();
    let (status, body) = send_json(state.clone(), "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["case"], 2);
    assert_eq!(body["model_digest"], digest.as_str());

    // digest is stable across calls
    let (_, again) = send_json(state, "GET", "/health", None).await;
    assert_eq!(again["model_digest"], digest.as_str());
}

#[tokio::test]
async fn health_degraded_without_model() {
    let (status, body) = send_json(degraded_state(), "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "degraded");
    assert!(body.get("model_digest").is_none());
}

#[tokio::test]
async fn predict_ranks_longer_answer_first() {
    let state = trained_state(FeatureCase::Case2);
    let (status, body) =
        send_json(state, "POST", "/predict", Some(two_answer_request())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["answers"][1]["rank"], 1);
    assert_eq!(body["answers"][0]["rank"], 2);
    let p0 = body["answers"][0]["probability"].as_f64().unwrap();
    let p1 = body["answers"][1]["probability"].as_f64().unwrap();
    assert!(p1 > p0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn hundred_concurrent_requests_identical_bodies() {
    let state = trained_state(FeatureCase::Case2);
    let mut tasks = tokio::task::JoinSet::new();
    for _ in 0..100 {
        let state = state.clone();
        tasks.spawn(async move {
            send_json(state, "POST", "/predict", Some(two_answer_request())).await
        });
    }
    let mut bodies = Vec::new();
    while let Some(result) = tasks.join_next().await {
        let (status, body) = result.unwrap();
        assert_eq!(status, StatusCode::OK);
        bodies.push(body);
    }
    assert_eq!(bodies.len(), 100);
    assert!(bodies.iter().all(|b| b == &bodies[0]));
}

#[tokio::test]
async fn predict_rejections_are_422() {
    let state = trained_state(FeatureCase::Case2);
    let (status, body) = send_json(
        state.clone(),
        "POST",
        "/predict",
        Some(serde_json::json!({ "answers": [] })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("no answers"));

    // oversized body
    let huge = serde_json::json!({
        "answers": [
            { "body": "x".repeat(70 * 1024), "creation_date": "2014-01-01T00:00:00Z" }
        ]
    });
    let (status, body) = send_json(state, "POST", "/predict", Some(huge)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("limit"));
}

#[tokio::test]
async fn predict_missing_score_is_422_for_score_case() {
    let state = trained_state(FeatureCase::Case6);
    // one answer lacks score entirely
    let request = serde_json::json!({
        "answers": [
            {
                "body": "<p>first</p>",
                "creation_date": "2014-01-01T00:00:00Z",
                "score": 3,
                "owner_reputation": 10
            },
            {
                "body": "<p>second</p>",
                "creation_date": "2014-01-01T00:01:00Z",
                "owner_reputation": 10
            }
        ]
    });
    let (status, body) = send_json(state, "POST", "/predict", Some(request)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("score"));
}

#[tokio::test]
async fn predict_degraded_is_503() {
    let (status, body) = send_json(
        degraded_state(),
        "POST",
        "/predict",
        Some(two_answer_request()),
    )
    .await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert!(body["error"].as_str().unwrap().contains("no model"));
}
