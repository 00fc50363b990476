use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use review_insight_service::http::{router, HttpAudit, HttpAuditLine};
use review_insight_service::{App, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

const FIXTURE_URL: &str = "https://www.booking.com/hotel/gr/aegean-breeze-suites.html";
const FIXTURE_ID: &str = "238eae49005694f0";

#[derive(Clone, Default)]
struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl SharedBuf {
    fn lines(&self) -> Vec<HttpAuditLine> {
        let text = String::from_utf8(self.0.lock().unwrap().clone()).unwrap();
        text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
    }
}

struct Harness {
    app: Arc<App>,
    router: Router,
    audit: SharedBuf,
    _cache: tempfile::TempDir,
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn harness_with(edit: impl FnOnce(&mut ServiceConfig)) -> Harness {
    let cache = tempfile::tempdir().unwrap();
    let mut config = ServiceConfig {
        cache_dir: cache.path().to_owned(),
        fixtures_dir: fixtures_dir(),
        default_model: "mock".into(),
        ..Default::default()
    };
    edit(&mut config);
    let app = Arc::new(App::new(config).unwrap());
    let audit = SharedBuf::default();
    let router = router(Arc::clone(&app), HttpAudit::new(audit.clone()));
    Harness {
        app,
        router,
        audit,
        _cache: cache,
    }
}

fn harness() -> Harness {
    harness_with(|_| {})
}

struct Reply {
    status: StatusCode,
    request_id: Option<String>,
    body: Value,
}

impl Harness {
    async fn send(&self, method: Method, uri: &str, body: Option<Value>) -> Reply {
        let mut request = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                request = request.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let response = self.router.clone().oneshot(request.body(body).unwrap()).await.unwrap();
        let status = response.status();
        let request_id = response
            .headers()
            .get("x-request-id")
            .map(|v| v.to_str().unwrap().to_owned());
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        let body = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        Reply {
            status,
            request_id,
            body,
        }
    }

    async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None).await
    }

    async fn post(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::POST, uri, Some(body)).await
    }

    async fn wait_for_job(&self, job_id: &str) -> Value {
        for _ in 0..200 {
            let reply = self.get(&format!("/api/jobs/{job_id}")).await;
            assert_eq!(reply.status, StatusCode::OK);
            let state = reply.body["state"].as_str().unwrap().to_owned();
            if state == "ready" || state == "failed" {
                return reply.body;
            }
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
        panic!("job {job_id} did not finish");
    }

    async fn ready_fixture(&self) {
        let reply = self.post("/api/listings", json!({ "url": FIXTURE_URL })).await;
        assert_eq!(reply.status, StatusCode::ACCEPTED);
        let job = self.wait_for_job(reply.body["job_id"].as_str().unwrap()).await;
        assert_eq!(job["state"], "ready");
    }
}

#[tokio::test]
async fn submission_is_idempotent_and_fetches_the_fixture() {
    let h = harness();
    let first = h.post("/api/listings", json!({ "url": FIXTURE_URL })).await;
    assert_eq!(first.status, StatusCode::ACCEPTED);
    assert_eq!(first.body["listing_id"], FIXTURE_ID);
    let job_id = first.body["job_id"].as_str().unwrap().to_owned();
    let job = h.wait_for_job(&job_id).await;
    assert_eq!(job["state"], "ready");
    assert_eq!(job["review_count"], 200);

    let tracking = format!("{FIXTURE_URL}?aid=123#reviews");
    let second = h.post("/api/listings", json!({ "url": tracking })).await;
    assert_eq!(second.status, StatusCode::ACCEPTED);
    assert_eq!(second.body["job_id"], job_id.as_str());
    assert_eq!(second.body["state"], "ready");
    // the job record is on disk
    assert!(h._cache.path().join("jobs").join(format!("{job_id}.json")).exists());
}

#[tokio::test]
async fn submission_errors() {
    let h = harness_with(|c| {
        c.providers.insert("arel".into(), false);
    });
    let reply = h.post("/api/listings", json!({ "url": "not a url" })).await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.body["error"], "MalformedUrl");
    let reply = h.post("/api/listings", json!({ "url": "https://example.com/hotel/x.html" })).await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.body["error"], "UnsupportedHost");
    let reply = h.post("/api/listings", json!({ "url": FIXTURE_URL, "provider": "arel" })).await;
    assert_eq!(reply.status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(reply.body["error"], "ProviderDisabled");
    let reply = h.post("/api/listings", json!({ "url": FIXTURE_URL, "provider": "nope" })).await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.body["error"], "UnknownProvider");
    let reply = h.post("/api/listings", json!({ "link": FIXTURE_URL })).await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.body["error"], "BadRequest");
    let reply = h.get("/api/jobs/does-not-exist").await;
    assert_eq!(reply.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn providers_other_than_the_default_work_too() {
    for provider in ["scraper", "caprolok"] {
        let h = harness();
        let reply = h
            .post("/api/listings", json!({ "url": FIXTURE_URL, "provider": provider }))
            .await;
        let job = h.wait_for_job(reply.body["job_id"].as_str().unwrap()).await;
        assert_eq!(job["provider"], provider);
        assert_eq!(job["review_count"], 200, "{provider}: {job}");
    }
}

#[tokio::test]
async fn failed_fetch_makes_the_listing_not_ready() {
    let h = harness();
    let reply = h
        .post("/api/listings", json!({ "url": "https://www.booking.com/hotel/gr/nowhere.html" }))
        .await;
    let job = h.wait_for_job(reply.body["job_id"].as_str().unwrap()).await;
    assert_eq!(job["state"], "failed");
    assert_eq!(job["failure"]["error"], "NoReviewsFound");
    let listing = reply.body["listing_id"].as_str().unwrap();
    let summary = h.get(&format!("/api/listings/{listing}/summary")).await;
    assert_eq!(summary.status, StatusCode::CONFLICT);
    assert_eq!(summary.body["error"], "NotReady");
}

#[tokio::test]
async fn summaries_are_deterministic_and_cached() {
    let h = harness();
    assert_eq!(h.get("/api/listings/0123456789abcdef/summary").await.status, StatusCode::NOT_FOUND);
    assert_eq!(h.get("/api/listings/not-an-id/summary").await.status, StatusCode::NOT_FOUND);
    h.ready_fixture().await;

    let calls = || h.app.engine().gateway().call_count();
    let uri = format!("/api/listings/{FIXTURE_ID}/summary?model=mock");
    let first = h.get(&uri).await;
    assert_eq!(first.status, StatusCode::OK);
    assert!(first.body["text"].as_str().unwrap().starts_with("mock kind=summary"));
    for field in ["cost", "latency_s", "usage", "reviews_used", "plan_digest"] {
        assert!(first.body.get(field).is_some(), "{field}");
    }
    let before = calls();
    let again = h.get(&uri).await;
    assert_eq!(calls(), before);
    assert_eq!(again.body, first.body);

    let greek = h.get(&format!("/api/listings/{FIXTURE_ID}/summary?model=mock&lang=el")).await;
    assert_eq!(greek.body["language"], "el");
    assert_eq!(calls(), before + 1);

    let bad = h.get(&format!("/api/listings/{FIXTURE_ID}/summary?lang=english")).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    assert_eq!(bad.body["error"], "InvalidLanguage");
    let unknown = h.get(&format!("/api/listings/{FIXTURE_ID}/summary?model=gpt-5")).await;
    assert_eq!(unknown.status, StatusCode::BAD_REQUEST);
    assert_eq!(unknown.body["error"], "UnknownModel");
    let offline = h.get(&format!("/api/listings/{FIXTURE_ID}/summary?model=llama-3.2-3b")).await;
    assert_eq!(offline.body["error"], "ModelUnavailable");
}

#[tokio::test]
async fn queries_report_insufficient_evidence() {
    let h = harness();
    h.ready_fixture().await;
    let uri = format!("/api/listings/{FIXTURE_ID}/query");
    let parking = h.post(&uri, json!({ "question": "is parking free" })).await;
    assert_eq!(parking.status, StatusCode::OK);
    assert_eq!(parking.body["insufficient_evidence"], false);
    let nonsense = h.post(&uri, json!({ "question": "quokka zeppelin xylophone", "lang": "de" })).await;
    assert_eq!(nonsense.body["insufficient_evidence"], true);
    assert_eq!(nonsense.body["language"], "de");
    let empty = h.post(&uri, json!({ "question": "   " })).await;
    assert_eq!(empty.status, StatusCode::BAD_REQUEST);
    assert_eq!(empty.body["error"], "EmptyQuestion");
    let missing = h.post(&uri, json!({})).await;
    assert_eq!(missing.status, StatusCode::BAD_REQUEST);
    let unknown = h.post("/api/listings/0123456789abcdef/query", json!({ "question": "wifi?" })).await;
    assert_eq!(unknown.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn model_listing() {
    let h = harness_with(|c| {
        c.register_mock_model = false;
        c.default_model = "gpt-4o-mini".into();
    });
    let reply = h.get("/api/models").await;
    let rows = reply.body.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let gpt4 = rows.iter().find(|r| r["model_id"] == "gpt-4").unwrap();
    assert_eq!(gpt4["prompt_window"], 8192);
    assert_eq!(gpt4["input_cost_per_1m"], "30");

    let with_mock = harness();
    assert_eq!(with_mock.get("/api/models").await.body.as_array().unwrap().len(), 9);
}

#[tokio::test]
async fn every_response_has_a_request_id_and_an_audit_line() {
    let h = harness();
    let mut ids = Vec::new();
    ids.push(h.get("/api/models").await.request_id);
    ids.push(h.get("/api/jobs/nope").await.request_id);
    ids.push(h.post("/api/listings", json!({ "url": "x" })).await.request_id);
    ids.push(h.get("/no/such/route").await.request_id);
    assert!(ids.iter().all(Option::is_some));
    let lines = h.audit.lines();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[1].status, 404);
    assert_eq!(lines[2].method, "POST");
    let logged: Vec<_> = lines.iter().map(|l| Some(l.request_id.clone())).collect();
    assert_eq!(logged, ids);

    let request = Request::get("/api/models")
        .header("x-request-id", "abc-123")
        .body(Body::empty())
        .unwrap();
    let response = h.router.clone().oneshot(request).await.unwrap();
    assert_eq!(response.headers()["x-request-id"], "abc-123");
    assert_eq!(h.audit.lines().len(), 5);
}

#[tokio::test]
async fn serves_the_static_front_end() {
    let site = tempfile::tempdir().unwrap();
    std::fs::write(site.path().join("index.html"), "<h1>hello</h1>").unwrap();
    let dir = site.path().to_owned();
    let h = harness_with(move |c| c.static_dir = Some(dir));
    let reply = h.get("/").await;
    assert_eq!(reply.status, StatusCode::OK);
    assert_eq!(reply.body, Value::String("<h1>hello</h1>".into()));
    assert!(reply.request_id.is_some());
}

#[tokio::test]
async fn fresh_cache_survives_a_restart() {
    let cache = tempfile::tempdir().unwrap();
    let dir = cache.path().to_owned();
    let job_id = {
        let d = dir.clone();
        let h = harness_with(move |c| c.cache_dir = d);
        let reply = h.post("/api/listings", json!({ "url": FIXTURE_URL })).await;
        let job_id = reply.body["job_id"].as_str().unwrap().to_owned();
        h.wait_for_job(&job_id).await;
        job_id
    };
    let h = harness_with(move |c| c.cache_dir = dir);
    let reply = h.post("/api/listings", json!({ "url": FIXTURE_URL })).await;
    assert_eq!(reply.body["job_id"], job_id.as_str());
    assert_eq!(reply.body["state"], "ready");
    assert_eq!(h.get(&format!("/api/listings/{FIXTURE_ID}/summary")).await.status, StatusCode::OK);
}
