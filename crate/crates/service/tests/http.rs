use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use seamesh::api::router;
use seamesh::store::Store;
use seamesh_core::engine::{build_redsea_scenario, redsea_r1_only};
use seamesh_core::model::Scenario;

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

fn app() -> Router {
    router(Arc::new(Store::in_memory()))
}

async fn post_scenario(app: &Router, s: &Scenario) -> String {
    let (st, v) = call(app, Method::POST, "/v1/scenarios", Some(s.to_json_pretty())).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    assert_eq!(v["schema_version"], 1);
    v["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn post_then_get_round_trips() {
    let app = app();
    let s = build_redsea_scenario();
    let id = post_scenario(&app, &s).await;
    let (st, v) = call(&app, Method::GET, &format!("/v1/scenarios/{id}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["revision"], 1);
    let back: Scenario = serde_json::from_value(v["scenario"].clone()).unwrap();
    assert_eq!(back, s);
}

#[tokio::test]
async fn geodetic_positions_are_projected() {
    let app = app();
    let doc = json!({
        "name": "geo",
        "origin": { "lat": 22.3, "lon": 39.1 },
        "nodes": [{
            "id": "R1", "kind": "base_station", "gateway": true,
            "position": { "lat": 22.3, "lon": 39.1 },
            "antenna_height_m": 18.0,
            "radio": serde_json::to_value(seamesh_core::radio::RadioConfig::mesh_router()).unwrap()
        }]
    });
    let (st, v) = call(&app, Method::POST, "/v1/scenarios", Some(doc.to_string())).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    let id = v["id"].as_str().unwrap();
    let (_, v) = call(&app, Method::GET, &format!("/v1/scenarios/{id}"), None).await;
    assert_eq!(v["scenario"]["nodes"][0]["position"], json!({ "x": 0.0, "y": 0.0 }));
}

#[tokio::test]
async fn malformed_and_invalid_bodies() {
    let app = app();
    let (st, v) = call(&app, Method::POST, "/v1/scenarios", Some("{ nope".into())).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "MALFORMED_DOCUMENT");
    assert_eq!(v["schema_version"], 1);

    let (st, _) = call(&app, Method::POST, "/v1/scenarios", Some(r#"{"name": 3}"#.into())).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let mut bad = build_redsea_scenario();
    bad.nodes[0].gateway = false;
    let (st, v) = call(&app, Method::POST, "/v1/scenarios", Some(bad.to_json_pretty())).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "REJECTED_SCENARIO");
    assert!(v["findings"].as_array().unwrap().iter().any(|f| f["code"] == "NO_GATEWAY"));
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let app = app();
    for uri in ["/v1/runs/nope", "/v1/runs/nope/metrics", "/v1/scenarios/nope", "/v1/scenarios/nope/cost", "/v1/elsewhere"] {
        let (st, v) = call(&app, Method::GET, uri, None).await;
        assert_eq!(st, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(v["schema_version"], 1);
    }
    let (st, _) = call(&app, Method::PUT, "/v1/scenarios/nope", Some(build_redsea_scenario().to_json_pretty())).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn put_revalidates_and_checks_revision() {
    let app = app();
    let id = post_scenario(&app, &build_redsea_scenario()).await;
    let uri = format!("/v1/scenarios/{id}");

    let mut bad = build_redsea_scenario();
    bad.nodes[1].antenna_height_m = -1.0;
    let (st, _) = call(&app, Method::PUT, &uri, Some(bad.to_json_pretty())).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let mut moved = build_redsea_scenario();
    moved.nodes[1].position.y -= 10.0;
    let (st, v) = call(&app, Method::PUT, &format!("{uri}?revision=1"), Some(moved.to_json_pretty())).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["revision"], 2);

    let (st, v) = call(&app, Method::PUT, &format!("{uri}?revision=1"), Some(moved.to_json_pretty())).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "REVISION_MISMATCH");

    let (_, v) = call(&app, Method::GET, &uri, None).await;
    assert_eq!(serde_json::from_value::<Scenario>(v["scenario"].clone()).unwrap(), moved);
}

#[tokio::test]
async fn coverage_full_versus_r1_only() {
    let app = app();
    let full = post_scenario(&app, &build_redsea_scenario()).await;
    let r1 = post_scenario(&app, &redsea_r1_only()).await;
    let (st, a) = call(&app, Method::GET, &format!("/v1/scenarios/{full}/coverage?resolution=25"), None).await;
    assert_eq!(st, StatusCode::OK);
    let (_, b) = call(&app, Method::GET, &format!("/v1/scenarios/{r1}/coverage?resolution=25"), None).await;
    assert_eq!(a["schema_version"], 1);
    assert_eq!(a["uncovered_cells"], 0);
    assert!(b["uncovered_cells"].as_u64().unwrap() > 0);
    assert_eq!(a["cells"].as_array().unwrap().len(), 1600);

    let (st, _) = call(&app, Method::GET, &format!("/v1/scenarios/{full}/coverage?resolution=-3"), None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = call(&app, Method::GET, &format!("/v1/scenarios/{full}/coverage?resolution=x"), None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_coverage_matches_serial() {
    let app = app();
    let a = post_scenario(&app, &build_redsea_scenario()).await;
    let b = post_scenario(&app, &redsea_r1_only()).await;
    let uri = |id: &str| format!("/v1/scenarios/{id}/coverage?resolution=50");
    let serial_a = call(&app, Method::GET, &uri(&a), None).await.1;
    let serial_b = call(&app, Method::GET, &uri(&b), None).await.1;
    let (ua, ub) = (uri(&a), uri(&b));
    let (pa, pb) = tokio::join!(call(&app, Method::GET, &ua, None), call(&app, Method::GET, &ub, None));
    assert_eq!(pa.1, serial_a);
    assert_eq!(pb.1, serial_b);
}

#[tokio::test]
async fn cost_report() {
    let app = app();
    let id = post_scenario(&app, &build_redsea_scenario()).await;
    let (st, v) = call(&app, Method::GET, &format!("/v1/scenarios/{id}/cost"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["total_usd"], "1488.76");
    assert_eq!(v["items"].as_array().unwrap().len(), 4);
}

async fn wait_done(app: &Router, run: &str) -> Value {
    for _ in 0..600 {
        let (st, v) = call(app, Method::GET, &format!("/v1/runs/{run}"), None).await;
        assert_eq!(st, StatusCode::OK);
        match v["status"].as_str().unwrap() {
            "done" | "failed" => return v,
            _ => tokio::time::sleep(Duration::from_millis(20)).await,
        }
    }
    panic!("run {run} did not finish");
}

#[tokio::test]
async fn simulation_run_and_gap_free_paging() {
    let app = app();
    let id = post_scenario(&app, &build_redsea_scenario()).await;
    let body = json!({
        "duration_s": 4000, "seed": 5,
        "terminals": [{ "id": "boat", "waypoints": [
            { "position": { "x": 0, "y": 50 }, "speed_m_s": 4 },
            { "position": { "x": 2000, "y": 0 } }
        ] }]
    });
    let (st, h) = call(&app, Method::POST, &format!("/v1/scenarios/{id}/simulate"), Some(body.to_string())).await;
    assert_eq!(st, StatusCode::ACCEPTED, "{h}");
    assert_eq!(h["schema_version"], 1);
    let run = h["id"].as_str().unwrap().to_string();

    // page while the run may still be in progress
    let mut ts = Vec::new();
    let mut from = 0.0;
    loop {
        let (st, page) =
            call(&app, Method::GET, &format!("/v1/runs/{run}/metrics?from_t={from}&limit=333"), None).await;
        assert_eq!(st, StatusCode::OK);
        assert_eq!(page["schema_version"], 1);
        ts.extend(page["records"].as_array().unwrap().iter().map(|r| r["t"].as_f64().unwrap()));
        match page["next_from_t"].as_f64() {
            Some(next) => from = next,
            None => break,
        }
    }
    let finished = wait_done(&app, &run).await;
    assert_eq!(finished["status"], "done");
    assert_eq!(finished["progress"], 1.0);
    assert_eq!(finished["records"], 4001);
    let expected: Vec<f64> = (0..=4000).map(f64::from).collect();
    assert_eq!(ts, expected);
}

#[tokio::test]
async fn simulate_rejects_bad_requests() {
    let app = app();
    let id = post_scenario(&app, &build_redsea_scenario()).await;
    let uri = format!("/v1/scenarios/{id}/simulate");
    let (st, _) = call(&app, Method::POST, &uri, Some(r#"{"terminals": [{"id": "t", "waypoints": []}]}"#.into())).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    let (st, _) = call(&app, Method::POST, &uri, Some(r#"{"duration_s": "long"}"#.into())).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = call(&app, Method::POST, &uri, Some(r#"{"dt_s": 0}"#.into())).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let (st, h) = call(&app, Method::POST, &uri, Some(r#"{"duration_s": 3600}"#.into())).await;
    assert_eq!(st, StatusCode::ACCEPTED);
    let done = wait_done(&app, h["id"].as_str().unwrap()).await;
    assert_eq!(done["status"], "done");
    let (st, _) =
        call(&app, Method::PUT, &format!("/v1/scenarios/{id}"), Some(build_redsea_scenario().to_json_pretty())).await;
    assert_eq!(st, StatusCode::OK);
}

#[tokio::test]
async fn directory_store_persists_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let app = router(Arc::new(Store::with_dir(dir.path()).unwrap()));
        post_scenario(&app, &build_redsea_scenario()).await
    };
    assert!(dir.path().join(format!("{id}.json")).exists());
    let app = router(Arc::new(Store::with_dir(dir.path()).unwrap()));
    let (st, v) = call(&app, Method::GET, &format!("/v1/scenarios/{id}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(serde_json::from_value::<Scenario>(v["scenario"].clone()).unwrap(), build_redsea_scenario());
}
