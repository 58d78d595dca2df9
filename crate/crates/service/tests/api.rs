use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use lkit_service::{app, AppState};

fn router() -> Router {
    app(AppState::new(None))
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>, Option<String>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let ctype = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string());
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body, ctype)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b, _) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (s, b, _) = send(app, req).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn create(app: &Router, body: Value) -> String {
    let (s, v) = post(app, "/api/feature-object", body).await;
    assert_eq!(s, StatusCode::CREATED, "{}", v);
    v["id"].as_str().unwrap().to_string()
}

fn gallagher_2d() -> Value {
    json!({ "problem": "gallagher101", "dim": 2, "n": 800, "seed": 1, "blocks": [8, 5] })
}

#[tokio::test]
async fn create_object_summary() {
    let app = router();
    let (s, v) = post(&app, "/api/feature-object", gallagher_2d()).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["summary"]["cells"]["total"], 40);
    assert_eq!(v["summary"]["cells"]["cell_widths"], json!([1.25, 2.0]));
    assert_eq!(v["summary"]["n_obs"], 800);
    let sets = v["sets"].as_array().unwrap();
    assert_eq!(sets.len(), 17);
    assert!(sets.iter().all(|s| s["available"] == true));
    let id = v["id"].as_str().unwrap();
    let (s, again) = get(&app, &format!("/api/feature-object/{}", id)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(again["summary"], v["summary"]);
}

#[tokio::test]
async fn design_object_flags_function_sets() {
    let app = router();
    let mut csv = String::from("x1,x2,y\n");
    for i in 0..40 {
        let (a, b) = ((i % 8) as f64 / 7.0, (i / 8) as f64 / 4.0);
        csv.push_str(&format!("{},{},{}\n", a, b, a + b * b));
    }
    let (s, v) = post(&app, "/api/feature-object", json!({ "design": csv, "blocks": [2] })).await;
    assert_eq!(s, StatusCode::CREATED);
    let unavailable: Vec<&str> = v["sets"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["available"] == false)
        .map(|s| s["id"].as_str().unwrap())
        .collect();
    assert_eq!(unavailable, vec!["ela_conv", "ela_curv", "ela_local"]);
    let id = v["id"].as_str().unwrap();
    let (s, _) = get(&app, &format!("/api/feature-object/{}/features?sets=ela_conv", id)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, v) = get(&app, &format!("/api/feature-object/{}/features?sets=disp", id)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["features"].as_object().unwrap().len(), 18);
}

#[tokio::test]
async fn expression_errors_carry_position() {
    let app = router();
    let (s, v) = post(&app, "/api/feature-object", json!({ "expression": "x1 +", "dim": 2 })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["position"], 5);
    let id = create(&app, json!({ "expression": "x1^2 + sin(x2)", "dim": 2, "n": 100 })).await;
    let (s, _) = get(&app, &format!("/api/feature-object/{}/features?sets=ela_meta", id)).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn schema_violations_are_422() {
    let app = router();
    for body in [
        json!({ "problem": "sphere", "dim": "two" }),
        json!({ "problem": "sphere", "dim": 2, "colour": 1 }),
        json!({ "dim": 2 }),
        json!({ "problem": "nope", "dim": 2 }),
    ] {
        let (s, _) = post(&app, "/api/feature-object", body.clone()).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{}", body);
    }
}

#[tokio::test]
async fn feature_sets_and_caching() {
    let app = router();
    let id = create(&app, gallagher_2d()).await;
    let (s, v) = get(&app, &format!("/api/feature-object/{}/features?sets=cm_angle", id)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["features"].as_object().unwrap().len(), 10);
    let (s, all) = get(&app, &format!("/api/feature-object/{}/features?sets=all", id)).await;
    assert_eq!(s, StatusCode::OK);
    let names: Vec<&String> = all["features"].as_object().unwrap().keys().collect();
    assert_eq!(names.len(), 343);
    assert_eq!(names[0], "ela_conv.conv_prob");
    let (_, again) = get(&app, &format!("/api/feature-object/{}/features?sets=all", id)).await;
    assert_eq!(all, again);

    let (s, a) = get(&app, &format!("/api/feature-object/{}/features?sets=disp", id)).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = get(
        &app,
        &format!("/api/feature-object/{}/features?sets=disp&control=disp.dist_method=manhattan", id),
    )
    .await;
    assert_ne!(a["features"]["disp.ratio_mean_02"], b["features"]["disp.ratio_mean_02"]);

    let (s, _) = get(&app, "/api/feature-object/nope/features?sets=nbc").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = get(&app, &format!("/api/feature-object/{}/features?sets=nope", id)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = get(&app, &format!("/api/feature-object/{}/features?sets=nbc&control=nbc.bogus=1", id)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn feature_csv_download() {
    let app = router();
    let id = create(&app, gallagher_2d()).await;
    let uri = format!("/api/feature-object/{}/features.csv?sets=nbc", id);
    let (s, body, ctype) = send(&app, Request::get(&uri).body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert!(ctype.unwrap().starts_with("text/csv"));
    let text = String::from_utf8(body).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 7);
    let (_, json) = get(&app, &format!("/api/feature-object/{}/features?sets=nbc", id)).await;
    let first: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert_eq!(json["features"]["nbc.nn_nb.sd_ratio"].as_f64().unwrap(), first);
}

#[tokio::test]
async fn plots_by_dimension() {
    let app = router();
    let id2 = create(&app, gallagher_2d()).await;
    for kind in ["cellmapping", "barriertree2d", "barriertree3d", "infocontent", "function"] {
        let (s, v) = get(&app, &format!("/api/feature-object/{}/plot/{}?resolution=20", id2, kind)).await;
        assert_eq!(s, StatusCode::OK, "{}: {}", kind, v);
        assert_eq!(v["schema_version"], 1);
    }
    let (_, cm) = get(&app, &format!("/api/feature-object/{}/plot/cellmapping", id2)).await;
    assert!(!cm["cells"].as_array().unwrap().is_empty());
    let id3 = create(&app, json!({ "problem": "sphere", "dim": 3, "n": 200, "blocks": [3] })).await;
    let (s, _) = get(&app, &format!("/api/feature-object/{}/plot/cellmapping", id3)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = get(&app, &format!("/api/feature-object/{}/plot/function", id3)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let id5 = create(&app, json!({ "problem": "rastrigin", "dim": 5, "n": 250 })).await;
    let (s, v) = get(&app, &format!("/api/feature-object/{}/plot/infocontent", id5)).await;
    assert_eq!(s, StatusCode::OK);
    assert!(!v["h"].as_array().unwrap().is_empty());
    let (s, _) = get(&app, &format!("/api/feature-object/{}/plot/heatmap", id2)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

async fn wait_for_job(app: &Router, id: &str) -> Value {
    let deadline = Instant::now() + Duration::from_secs(60);
    loop {
        let (s, v) = get(app, &format!("/api/batch/{}", id)).await;
        assert_eq!(s, StatusCode::OK);
        if v["status"] != "running" {
            return v;
        }
        assert!(Instant::now() < deadline, "job did not finish");
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn batch_jobs() {
    let app = router();
    let instances: Vec<Value> = (1..=4).map(|s| json!({ "problem": "gallagher101", "seed": s, "dim": 2 })).collect();
    let body = json!({ "instances": instances, "reps": 3, "sets": "cm_angle", "n": 200, "blocks": [3] });
    let (s, v) = post(&app, "/api/batch", body).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let id = v["job_id"].as_str().unwrap().to_string();
    let done = wait_for_job(&app, &id).await;
    assert_eq!(done["status"], "done");
    assert_eq!(done["progress"], 1.0);
    let csv = done["result_csv"].as_str().unwrap();
    assert_eq!(csv.lines().count(), 13);
    let again = wait_for_job(&app, &id).await;
    assert_eq!(again["result_csv"], done["result_csv"]);
    let (s, body, ctype) = send(&app, Request::get(format!("/api/batch/{}/result.csv", id)).body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert!(ctype.unwrap().starts_with("text/csv"));
    assert_eq!(String::from_utf8(body).unwrap(), csv);

    let (s, _) = post(&app, "/api/batch", json!({ "instances": [] })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let bad = json!({ "instances": [
        { "problem": "sphere", "dim": 2 },
        { "problem": "nope", "dim": 2 },
        { "problem": "rosenbrock", "dim": 1 }
    ] });
    let (s, v) = post(&app, "/api/batch", bad).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let idx: Vec<u64> = v["instances"].as_array().unwrap().iter().map(|e| e["index"].as_u64().unwrap()).collect();
    assert_eq!(idx, vec![1, 2]);
    let (s, _) = get(&app, "/api/batch/unknown").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn catalog_and_spec() {
    let app = router();
    let (s, v) = get(&app, "/api/problems").await;
    assert_eq!(s, StatusCode::OK);
    assert!(v.as_array().unwrap().iter().any(|p| p["name"] == "gallagher101"));
    let (s, v) = get(&app, "/api/sets").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v.as_array().unwrap().len(), 17);
    let (s, v) = get(&app, "/api/spec").await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["paths"]["/api/feature-object/{id}/plot/{kind}"].is_object());
}

#[tokio::test]
async fn eviction_and_spill() {
    let app = router();
    let first = create(&app, json!({ "problem": "sphere", "dim": 2, "n": 20 })).await;
    for _ in 0..lkit_service::OBJECT_CAPACITY {
        create(&app, json!({ "problem": "sphere", "dim": 2, "n": 20 })).await;
    }
    let (s, _) = get(&app, &format!("/api/feature-object/{}", first)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let dir = tempfile::tempdir().unwrap();
    let app = app_with_spill(dir.path());
    let first = create(&app, json!({ "problem": "sphere", "dim": 2, "n": 20, "seed": 4 })).await;
    let (_, before) = get(&app, &format!("/api/feature-object/{}/features?sets=disp", first)).await;
    for _ in 0..lkit_service::OBJECT_CAPACITY {
        create(&app, json!({ "problem": "sphere", "dim": 2, "n": 20 })).await;
    }
    assert!(dir.path().join("objects").join(format!("{}.json", first)).exists());
    let (s, after) = get(&app, &format!("/api/feature-object/{}/features?sets=disp", first)).await;
    assert_eq!(s, StatusCode::OK);
    for (k, v) in before["features"].as_object().unwrap() {
        if !k.ends_with("costs_runtime") {
            assert_eq!(&after["features"][k], v, "{}", k);
        }
    }
}

fn app_with_spill(dir: &std::path::Path) -> Router {
    app(AppState::new(Some(dir.to_path_buf())))
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn identical_requests_share_one_computation() {
    let app = router();
    let id = create(&app, gallagher_2d()).await;
    let uri = format!("/api/feature-object/{}/features?sets=bt,gcm", id);
    let (a, b) = tokio::join!(get(&app, &uri), get(&app, &uri));
    assert_eq!(a.0, StatusCode::OK);
    assert_eq!(a.1, b.1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn stays_responsive_during_long_jobs() {
    let app = router();
    let big = json!({ "problem": "gallagher101", "dim": 2, "n": 3000, "blocks": [40, 40] });
    let id = create(&app, big).await;
    let slow = {
        let app = app.clone();
        let uri = format!("/api/feature-object/{}/features?sets=all", id);
        tokio::spawn(async move { get(&app, &uri).await })
    };
    tokio::time::sleep(Duration::from_millis(20)).await;
    let t = Instant::now();
    let (s, _) = get(&app, "/api/problems").await;
    assert_eq!(s, StatusCode::OK);
    assert!(t.elapsed() < Duration::from_millis(500));
    let (s, _) = slow.await.unwrap();
    assert_eq!(s, StatusCode::OK);
}
