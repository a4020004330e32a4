use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use qlens_core::QuestionManifest;
use qlens_service::{router, Service, Store};
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

const LOG: &str = include_str!("fixtures/demo_log.jsonl");
const PRODUCT: &str = include_str!("fixtures/product_question.json");
const SORTING: &str = include_str!("fixtures/sorting_question.json");

struct Fixture {
    _dir: TempDir,
    service: Arc<Service>,
}

impl Fixture {
    fn new(manifests: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let service = Arc::new(Service::new(Store::open(dir.path()).unwrap()));
        for m in manifests {
            service.add_manifest(&QuestionManifest::from_json(m).unwrap()).unwrap();
        }
        Self { _dir: dir, service }
    }

    fn app(&self) -> Router {
        router(self.service.clone(), None)
    }

    async fn call(&self, method: &str, uri: &str, body: &str) -> (StatusCode, String) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .body(Body::from(body.to_string()))
            .unwrap();
        let resp = self.app().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn get(&self, uri: &str) -> (StatusCode, String) {
        self.call("GET", uri, "").await
    }

    async fn get_json(&self, uri: &str) -> (StatusCode, Value) {
        let (status, body) = self.get(uri).await;
        (status, serde_json::from_str(&body).unwrap())
    }

    async fn ingest(&self, qid: &str, body: &str) -> (StatusCode, Value) {
        let (status, body) = self.call("POST", &format!("/api/questions/{qid}/ingest"), body).await;
        (status, serde_json::from_str(&body).unwrap())
    }
}

#[tokio::test]
async fn health_and_empty_store() {
    let f = Fixture::new(&[]);
    let (status, body) = f.get_json("/api/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert!(body["schema"].is_string());
    let (_, body) = f.get_json("/api/questions").await;
    assert_eq!(body["questions"], Value::Array(vec![]));
    assert_eq!(body["schema"], "qlens-questions/1");
}

#[tokio::test]
async fn two_manifests_two_entries_with_student_counts() {
    let f = Fixture::new(&[PRODUCT, SORTING]);
    let (_, report) = f.ingest("q-product", LOG).await;
    assert_eq!(report["sessions_added"], 3);
    let (_, body) = f.get_json("/api/questions").await;
    let qs = body["questions"].as_array().unwrap();
    assert_eq!(qs.len(), 2);
    assert_eq!(qs[0]["question_id"], "q-product");
    assert_eq!(qs[0]["student_count"], 3);
    assert_eq!(qs[1]["question_id"], "q-sort");
    assert_eq!(qs[1]["student_count"], 0);
}

#[tokio::test]
async fn ingest_report_and_overwrite() {
    let f = Fixture::new(&[PRODUCT]);
    let (status, report) = f.ingest("q-product", LOG).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["schema"], "qlens-ingest/1");
    assert_eq!(
        (&report["sessions_added"], &report["lines_skipped"], &report["drags_dropped"]),
        (&Value::from(3), &Value::from(0), &Value::from(0))
    );
    assert_eq!(report["overwritten"], Value::Array(vec![]));

    let (_, again) = f.ingest("q-product", LOG).await;
    assert_eq!(again["sessions_added"], 3);
    let mut ids: Vec<&str> = again["overwritten"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    ids.sort();
    assert_eq!(ids, vec!["s-direct", "s-fix", "s-golden"]);
    assert_eq!(f.service.store().sessions("q-product").unwrap().len(), 3);
}

#[tokio::test]
async fn ingest_errors() {
    let f = Fixture::new(&[PRODUCT]);
    let (status, body) = f.ingest("q-missing", LOG).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown_question");

    let foreign = LOG.replace("q-product", "q-other");
    let (status, _) = f.ingest("q-product", &foreign).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(f.service.store().sessions("q-product").unwrap().is_empty());

    let (status, body) = f.ingest("q-product", "not json\n{}\n").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "malformed_payload");

    // a bad line among good ones is skipped and counted
    let noisy = format!("garbage\n{LOG}");
    let (status, report) = f.ingest("q-product", &noisy).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["lines_skipped"], 1);
    assert_eq!(report["skipped"][0]["line"], 1);
}

#[tokio::test]
async fn views_are_deterministic_and_filterable() {
    let f = Fixture::new(&[PRODUCT]);
    f.ingest("q-product", LOG).await;
    let (status, first) = f.get("/api/questions/q-product/views").await;
    assert_eq!(status, StatusCode::OK);
    let (_, second) = f.get("/api/questions/q-product/views").await;
    assert_eq!(first, second);
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["schema"], "qlens-views/1");
    assert_eq!(v["overview"]["student_count"], 3);
    assert_eq!(v["overview"]["score_histogram"], serde_json::json!({"2": 1, "6": 2}));

    let (_, g2) = f.get_json("/api/questions/q-product/views?grades=2").await;
    let (_, g7) = f.get_json("/api/questions/q-product/views?grades=7").await;
    assert_eq!(g2["overview"]["student_count"], 2);
    assert_eq!(g7["overview"]["student_count"], 1);
    assert_ne!(g2, g7);

    // equivalent filters share one cached model
    let (_, a) = f.get("/api/questions/q-product/views?grades=7,2").await;
    let (_, b) = f.get("/api/questions/q-product/views?grades=2,7,2").await;
    assert_eq!(a, b);

    let (_, thin) = f.get_json("/api/questions/q-product/views?min_count=2").await;
    assert!(thin["transition"]["transitions"]
        .as_array()
        .unwrap()
        .iter()
        .all(|t| t["count"].as_u64().unwrap() >= 2));

    let (_, four) = f.get_json("/api/questions/q-product/views?top_errors=4").await;
    assert!(four["errors"].as_array().unwrap().len() <= 4);
}

#[tokio::test]
async fn view_errors() {
    let f = Fixture::new(&[PRODUCT]);
    let (status, body) = f.get_json("/api/questions/nope/views").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["schema"], "qlens-error/1");
    for q in ["min_count=-1", "grades=x", "bogus=1"] {
        let (status, body) = f.get_json(&format!("/api/questions/q-product/views?{q}")).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{q}");
        assert_eq!(body["error"], "invalid_query");
    }
}

#[tokio::test]
async fn cache_is_invalidated_by_ingest() {
    let f = Fixture::new(&[PRODUCT]);
    let golden_only: String = LOG.lines().filter(|l| l.contains("s-golden")).map(|l| format!("{l}\n")).collect();
    f.ingest("q-product", &golden_only).await;
    let (_, before) = f.get_json("/api/questions/q-product/views").await;
    assert_eq!(before["overview"]["session_count"], 1);
    f.ingest("q-product", LOG).await;
    let (_, after) = f.get_json("/api/questions/q-product/views").await;
    assert_eq!(after["overview"]["session_count"], 3);
}

#[tokio::test]
async fn recommendations() {
    let f = Fixture::new(&[PRODUCT]);
    f.ingest("q-product", LOG).await;
    let (status, body) = f.get_json("/api/questions/q-product/errors/1/recommendation").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["schema"], "qlens-recommendation/1");
    assert_eq!(body["status"], "ok");
    assert_eq!(body["error"]["answer"], serde_json::json!([6, 4, 3, 5, 2, 1]));
    assert_eq!(body["error_path_session"], "s-golden");
    let nodes = body["recommended"]["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 4);
    assert_eq!(nodes[3]["answer"], serde_json::json!([6, 3, 1, 5, 4, 2]));

    let (status, body) = f.get_json("/api/questions/q-product/errors/2/recommendation").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown_error");

    // grade 2 has the failing session but not the repairing one
    let (status, body) = f.get_json("/api/questions/q-product/errors/1/recommendation?grades=2").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "no_coverage");
    assert!(body["recommended"].is_null());

    let (status, _) = f.get_json("/api/questions/q-product/errors/x/recommendation").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn model_files_match_in_memory_builds() {
    let f = Fixture::new(&[PRODUCT]);
    f.ingest("q-product", LOG).await;
    f.get("/api/questions/q-product/views").await;
    let store = f.service.store();
    let manifest = store.manifest("q-product").unwrap().unwrap();
    let sessions = store.sessions("q-product").unwrap();
    let fresh = qlens_core::views::group_model(&sessions, &manifest, &Default::default());
    let path = store.model_path("q-product", &Default::default()).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap(), fresh.to_json());
}

#[tokio::test]
async fn static_files_at_root() {
    let f = Fixture::new(&[]);
    let web = tempfile::tempdir().unwrap();
    std::fs::write(web.path().join("index.html"), "<h1>qlens</h1>").unwrap();
    let app = router(f.service.clone(), Some(web.path().to_path_buf()));
    let resp = app
        .oneshot(Request::builder().uri("/").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], b"<h1>qlens</h1>");
}

#[test]
fn concurrent_readers_see_identical_views() {
    let f = Fixture::new(&[PRODUCT]);
    f.service.post_ingest("q-product", LOG.as_bytes()).unwrap();
    let query = Default::default();
    let expected = f.service.get_views("q-product", &query).unwrap();
    f.service.store().clear_models("q-product").unwrap();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..8)
            .map(|_| s.spawn(|| f.service.get_views("q-product", &query).unwrap()))
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), expected);
        }
    });
}
