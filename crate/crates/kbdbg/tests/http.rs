use std::fs;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use kbdbg::api::router;
use kbdbg::store::SessionStore;
use kbdbg_core::logic::parse_kb;
use kbdbg_core::session::{start_session, SessionConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

const KB_C: &str = "[ontology]\na1: A -> B\na2: A -> ~B\n[background]\nb1: A\n";
const KB_A: &str = "[ontology]\na1: A -> B\na2: B -> C\na3: A\na4: ~C\n";

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
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn raw_post(app: &Router, uri: &str, body: &'static str) -> StatusCode {
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    app.clone().oneshot(req).await.unwrap().status()
}

fn app_in(dir: &std::path::Path) -> Router {
    router(Arc::new(SessionStore::open(dir).unwrap()), None)
}

fn probabilities_sum_to_one(view: &Value) {
    let ps: Vec<f64> = view["diagnoses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["probability"].as_f64().unwrap())
        .collect();
    assert!(!ps.is_empty());
    assert!((ps.iter().sum::<f64>() - 1.0).abs() <= 1e-6, "{ps:?}");
    assert!(ps.windows(2).all(|w| w[0] >= w[1]), "not sorted: {ps:?}");
}

async fn create(app: &Router, kb: &str) -> Value {
    let (status, view) = call(
        app,
        "POST",
        "/api/sessions",
        Some(json!({"kb_text": kb, "strategy": "entropy"})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{view}");
    view
}

#[tokio::test]
async fn kb_c_session_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_in(dir.path());

    let view = create(&app, KB_C).await;
    assert_eq!(view["status"], "AWAITING_ANSWER");
    assert_eq!(view["history"], json!([]));
    assert_eq!(view["query"]["sentences"], json!(["~B"]));
    probabilities_sum_to_one(&view);

    let expected = start_session(parse_kb(KB_C).unwrap(), SessionConfig::default()).unwrap();
    let listed: Vec<(Vec<String>, f64)> = view["diagnoses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| {
            (
                serde_json::from_value(d["axiom_ids"].clone()).unwrap(),
                d["probability"].as_f64().unwrap(),
            )
        })
        .collect();
    let core: Vec<(Vec<String>, f64)> = expected
        .ranked()
        .into_iter()
        .map(|(d, p)| (d.ids().iter().cloned().collect(), p))
        .collect();
    assert_eq!(listed, core);
    assert_eq!(listed.len(), 2);

    let id = view["id"].as_str().unwrap().to_string();
    let (status, got) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(got, view);

    let (status, done) = call(
        &app,
        "POST",
        &format!("/api/sessions/{id}/answer"),
        Some(json!({"answer": "yes"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{done}");
    assert_eq!(done["status"], "FINISHED");
    assert_eq!(done["final_diagnosis"], json!(["a1"]));
    assert_eq!(done["query"], Value::Null);
    assert_eq!(done["history"][0]["sentences"], json!(["~B"]));
    assert_eq!(done["history"][0]["answer"], "yes");
    probabilities_sum_to_one(&done);

    let (status, _) = call(
        &app,
        "POST",
        &format!("/api/sessions/{id}/answer"),
        Some(json!({"answer": "no"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, list) = call(&app, "GET", "/api/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list.as_array().unwrap().len(), 1);

    let (status, _) = call(&app, "DELETE", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(!dir.path().join(format!("{id}.json")).exists());
}

#[tokio::test]
async fn error_statuses() {
    let app = router(Arc::new(SessionStore::in_memory()), None);

    let (status, body) = call(
        &app,
        "POST",
        "/api/sessions",
        Some(json!({"kb_text": "[ontology]\na1: A -> -> B\n", "strategy": "entropy"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["line"], 2);
    assert!(body["column"].as_u64().unwrap() >= 1);

    let (status, _) = call(
        &app,
        "POST",
        "/api/sessions",
        Some(json!({"kb_text": KB_C, "sigma": 1.5})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let infeasible = "[ontology]\na1: A\n[background]\nb1: B\n[negative]\nn1: B\n";
    let (status, _) = call(
        &app,
        "POST",
        "/api/sessions",
        Some(json!({"kb_text": infeasible})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    assert_eq!(
        raw_post(&app, "/api/sessions", "{").await,
        StatusCode::BAD_REQUEST
    );

    let (status, _) = call(&app, "GET", "/api/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(
        &app,
        "POST",
        "/api/sessions/nope/answer",
        Some(json!({"answer": "yes"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "DELETE", "/api/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = create(&app, KB_C).await["id"].as_str().unwrap().to_string();
    let uri = format!("/api/sessions/{id}/answer");
    let (status, _) = call(&app, "POST", &uri, Some(json!({"answer": "maybe"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "POST", &uri, Some(json!({}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(raw_post(&app, &uri, "yes").await, StatusCode::BAD_REQUEST);
    let (status, view) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["status"], "AWAITING_ANSWER");
}

#[tokio::test]
async fn fault_free_sessions_finish_immediately() {
    let app = router(Arc::new(SessionStore::in_memory()), None);
    let view = create(&app, "[ontology]\na1: A\na2: A -> B\n").await;
    assert_eq!(view["status"], "FINISHED");
    assert_eq!(view["final_diagnosis"], json!([]));
    assert_eq!(view["query"], Value::Null);
    probabilities_sum_to_one(&view);
}

#[tokio::test]
async fn restart_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let (id, before) = {
        let app = app_in(dir.path());
        let view = create(&app, KB_A).await;
        let id = view["id"].as_str().unwrap().to_string();
        let (status, view) = call(
            &app,
            "POST",
            &format!("/api/sessions/{id}/answer"),
            Some(json!({"answer": "no"})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        (id, view)
    };
    let app = app_in(dir.path());
    let (status, after) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after, before);
}

#[tokio::test]
async fn corrupt_files_do_not_affect_other_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let app = app_in(dir.path());
        create(&app, KB_C).await["id"].as_str().unwrap().to_string()
    };
    fs::write(
        dir.path().join("damaged.json"),
        "{\"id\": \"damaged\", \"session\": 7}",
    )
    .unwrap();

    let app = app_in(dir.path());
    let (status, _) = call(&app, "GET", "/api/sessions/damaged", None).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, _) = call(
        &app,
        "POST",
        "/api/sessions/damaged/answer",
        Some(json!({"answer": "yes"})),
    )
    .await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, list) = call(&app, "GET", "/api/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
    let statuses: Vec<&str> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["status"].as_str().unwrap())
        .collect();
    assert_eq!(statuses.len(), 2);
    assert!(statuses.contains(&"UNAVAILABLE"));
    let (status, view) = call(
        &app,
        "POST",
        &format!("/api/sessions/{id}/answer"),
        Some(json!({"answer": "yes"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["final_diagnosis"], json!(["a1"]));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_answers_are_serialized() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_in(dir.path());
    for _ in 0..10 {
        let id = create(&app, KB_C).await["id"].as_str().unwrap().to_string();
        let uri = format!("/api/sessions/{id}/answer");
        let (a, b) = tokio::join!(
            tokio::spawn({
                let (app, uri) = (app.clone(), uri.clone());
                async move {
                    call(&app, "POST", &uri, Some(json!({"answer": "yes"})))
                        .await
                        .0
                }
            }),
            tokio::spawn({
                let (app, uri) = (app.clone(), uri.clone());
                async move {
                    call(&app, "POST", &uri, Some(json!({"answer": "no"})))
                        .await
                        .0
                }
            }),
        );
        let mut got = [a.unwrap(), b.unwrap()];
        got.sort();
        assert_eq!(got, [StatusCode::OK, StatusCode::CONFLICT]);
        let (_, view) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
        assert_eq!(view["history"].as_array().unwrap().len(), 1);
    }
    let files = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, 10);
}

#[tokio::test]
async fn stored_beliefs_match_a_replay_of_history() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_in(dir.path());
    let kb_b = "[ontology]\na1: A\na2: A -> B\na3: ~B\na4: C\na5: C -> D\na6: ~D\n";
    let id = create(&app, kb_b).await["id"].as_str().unwrap().to_string();
    for answer in ["no", "yes"] {
        let (status, view) = call(
            &app,
            "POST",
            &format!("/api/sessions/{id}/answer"),
            Some(json!({"answer": answer})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{view}");
        probabilities_sum_to_one(&view);
        if view["status"] != "AWAITING_ANSWER" {
            break;
        }
    }
    let text = fs::read_to_string(dir.path().join(format!("{id}.json"))).unwrap();
    let record: kbdbg::store::SessionRecord = serde_json::from_str(&text).unwrap();
    let replayed = record.session.replay().unwrap();
    let stored = record.session.beliefs();
    assert_eq!(replayed.beliefs().len(), stored.len());
    for (d, p) in stored.iter() {
        assert!((replayed.beliefs().probability(d).unwrap() - p).abs() <= 1e-9);
    }
    assert_eq!(replayed.history(), record.session.history());
}

#[tokio::test]
async fn root_serves_placeholder_or_static_files() {
    let app = router(Arc::new(SessionStore::in_memory()), None);
    let (status, body) = call(&app, "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.as_str().unwrap().contains("/api/sessions"));

    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("index.html"), "<p>bundle</p>").unwrap();
    let app = router(
        Arc::new(SessionStore::in_memory()),
        Some(dir.path().to_path_buf()),
    );
    let (status, body) = call(&app, "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, Value::String("<p>bundle</p>".into()));
    let (status, _) = call(&app, "GET", "/api/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
}
