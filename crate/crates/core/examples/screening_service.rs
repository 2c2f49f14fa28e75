//! Drive the screening service in-process: health, catalog and one
//! screening request built from a cohort row.

use std::sync::Arc;

use ami_screen::artifact::{ModelArtifact, TrainingMetadata};
use ami_screen::catalog::QuestionCatalog;
use ami_screen::classifiers::{ClassifierSpec, Family};
use ami_screen::data::synthetic_ami;
use ami_screen::pipeline::{FittedPipeline, ScalingConfig};
use ami_screen::selection::DEFAULT_FEATURE_MASK;
use ami_screen::service::{router, ServiceState};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Map, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.expect("infallible router");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    (status, serde_json::from_slice(&bytes).expect("JSON body"))
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synthetic_ami(225, 1.5, 7);
    let mask: Vec<String> = DEFAULT_FEATURE_MASK.iter().map(|s| s.to_string()).collect();
    let pipeline = FittedPipeline::fit(&ClassifierSpec::production_default(Family::Svm, 7), &data, &mask, &ScalingConfig::default())?;
    let metadata = TrainingMetadata {
        seed: 7,
        test_fraction: 0.0,
        n_train_rows: data.n_rows(),
        scaling: ScalingConfig::default(),
        grid_preset: None,
        cv_metric: None,
        cv_score: None,
    };
    let artifact = ModelArtifact::new(pipeline, data.schema(), metadata);
    let app = router(Arc::new(ServiceState::new(Some(artifact), QuestionCatalog::shipped(), false)?));

    let (status, health) = call(&app, Request::get("/health").body(Body::empty())?).await;
    println!("GET /health -> {status} {}", health["status"]);

    let (status, catalog) = call(&app, Request::get("/catalog?locale=hi").body(Body::empty())?).await;
    println!("GET /catalog?locale=hi -> {status}, {} items", catalog["items"].as_array().map_or(0, Vec::len));
    println!("  first item: {}", catalog["items"][0]["text"]);

    // Answer with the first cohort row, as words.
    let row = data.x().row(0).to_owned();
    let mut answers = Map::new();
    for code in &mask {
        let j = data.schema().index_of(code).expect("mask code in schema");
        answers.insert(code.clone(), json!(data.schema().features[j].decode(row[j])));
    }
    let body = json!({ "answers": answers, "locale": "en" }).to_string();
    let req = Request::post("/screen").header("content-type", "application/json").body(Body::from(body))?;
    let (status, resp) = call(&app, req).await;
    println!("POST /screen -> {status} label={} p_asd={} (true label {})", resp["label"], resp["probability_asd"], data.y()[0]);

    answers.remove("New2b");
    let req = Request::post("/screen").header("content-type", "application/json").body(Body::from(json!({ "answers": answers }).to_string()))?;
    let (status, resp) = call(&app, req).await;
    println!("POST /screen without New2b -> {status} {}", resp["fields"]);
    Ok(())
}
