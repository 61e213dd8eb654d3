use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use crosstrace_cli::{router, AppState, Registry};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const FIB: &str = "function fib(n) {\n  let f = [0, 1];\n  for (let i = 2; i <= n; i++) {\n    f[i] = f[i - 1] + f[i - 2];\n  }\n  return f[n];\n}\nlet result = fib(10);\n";
const NESTED: &str = "function h(x) { return x + 1; }\nfunction g(x) { return h(x) * 2; }\nfunction f(x) { return g(x) - 3; }\nlet x = 1;\nlet r = f(g(h(x)));\n";

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn app_in(dir: &std::path::Path) -> Router {
    router(AppState::new(Registry::new(Some(dir.to_path_buf()))), None)
}

async fn session(app: &Router, src: &str) -> (String, Value) {
    let (s, p) = call(app, "POST", "/programs", Some(json!({ "source": src }))).await;
    assert_eq!(s, StatusCode::OK, "{p}");
    let (s, v) = call(app, "POST", "/sessions", Some(json!({ "programId": p["programId"] }))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    (v["sessionId"].as_str().unwrap().to_string(), v["view"].clone())
}

fn find(v: &Value, step: u64) -> Option<&Value> {
    if v["stepId"] == json!(step) {
        return Some(v);
    }
    v["children"].as_array()?.iter().find_map(|c| find(c, step))
}

#[tokio::test]
async fn programs_are_content_addressed() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_in(dir.path());
    let (s, a) = call(&app, "POST", "/programs", Some(json!({ "source": FIB, "seed": 1 }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(a["finalGlobals"]["result"], json!(55));
    let (_, b) = call(&app, "POST", "/programs", Some(json!({ "source": FIB, "seed": 1 }))).await;
    assert_eq!(a["programId"], b["programId"]);
    let (_, c) = call(&app, "POST", "/programs", Some(json!({ "source": FIB, "seed": 2 }))).await;
    assert_ne!(a["programId"], c["programId"]);
    let id = a["programId"].as_str().unwrap();
    assert!(dir.path().join(format!("{id}.trace.json")).exists());

    // A fresh service finds the program through the cache directory.
    let cold = app_in(dir.path());
    let (s, g) = call(&cold, "GET", &format!("/programs/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(g["source"], json!(FIB));
    let (s, t) = call(&cold, "GET", &format!("/programs/{id}/trace"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(t["totalOps"], a["totalOps"]);
}

#[tokio::test]
async fn program_errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_in(dir.path());
    let (s, e) = call(&app, "POST", "/programs", Some(json!({ "source": "let x = ;" }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["error"]["kind"], json!("ParseError"));
    assert_eq!(e["error"]["span"]["startOffset"], json!(8));
    let (s, e) = call(&app, "POST", "/programs", Some(json!({ "source": "let x = y;" }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["error"]["kind"], json!("RuntimeError"));
    assert_eq!(e["error"]["tick"], json!(0));
    let (s, e) = call(&app, "POST", "/programs", Some(json!({ "source": "" }))).await;
    assert_eq!((s, &e["error"]["kind"]), (StatusCode::BAD_REQUEST, &json!("InvalidSource")));
    let big = "let x = 1;\n".repeat(7000);
    let (s, _) = call(&app, "POST", "/programs", Some(json!({ "source": big }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, e) = call(&app, "GET", "/programs/abc", None).await;
    assert_eq!((s, &e["error"]["kind"]), (StatusCode::NOT_FOUND, &json!("UnknownProgram")));
}

#[tokio::test]
async fn actions_update_the_view() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_in(dir.path());
    let (id, initial) = session(&app, FIB).await;
    let url = format!("/sessions/{id}/actions");

    let (_, fwd) = call(&app, "POST", &url, Some(json!({ "type": "moveCursor", "delta": 1 }))).await;
    assert_ne!(fwd["cursor"], initial["cursor"]);
    let (_, back) = call(&app, "POST", &url, Some(json!({ "type": "moveCursor", "delta": -1 }))).await;
    let (_, now) = call(&app, "GET", &format!("/sessions/{id}/view"), None).await;
    assert_eq!(back, now);
    assert_eq!(now["cursor"], initial["cursor"]);
    assert_eq!(now["visibleSteps"], initial["visibleSteps"]);

    // The first statement is a function declaration, a single operation.
    let (s, e) = call(&app, "POST", &url, Some(json!({ "type": "expand", "stepId": 1 }))).await;
    assert_eq!((s, &e["error"]["kind"]), (StatusCode::CONFLICT, &json!("NotDecomposable")));
    let (_, after) = call(&app, "GET", &format!("/sessions/{id}/view"), None).await;
    assert_eq!(after, now);

    let (s, e) = call(&app, "POST", &url, Some(json!({ "type": "teleport" }))).await;
    assert_eq!((s, &e["error"]["kind"]), (StatusCode::BAD_REQUEST, &json!("InvalidAction")));
    let (s, e) = call(&app, "POST", &url, Some(json!({ "type": "moveCursor", "tick": 100000 }))).await;
    assert_eq!((s, &e["error"]["kind"]), (StatusCode::BAD_REQUEST, &json!("OutOfRange")));
    let (s, e) = call(&app, "GET", "/sessions/nope/view", None).await;
    assert_eq!((s, &e["error"]["kind"]), (StatusCode::NOT_FOUND, &json!("UnknownSession")));

    let (_, log) = call(&app, "GET", &format!("/sessions/{id}/log"), None).await;
    assert_eq!(log["actions"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn nested_call_closure_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_in(dir.path());
    let (id, view) = session(&app, NESTED).await;
    let url = format!("/sessions/{id}/actions");
    let stmt = view["visibleSteps"][0]["children"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["landmark"].as_str().unwrap().starts_with("let r"))
        .unwrap()["stepId"]
        .as_u64()
        .unwrap();
    let (_, v) = call(&app, "POST", &url, Some(json!({ "type": "expand", "stepId": stmt }))).await;
    let f_call = find(&v["visibleSteps"][0], stmt).unwrap()["children"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["kind"] == json!("CallExpression"))
        .unwrap()["stepId"]
        .as_u64()
        .unwrap();
    let (_, v) = call(&app, "POST", &url, Some(json!({ "type": "expand", "stepId": f_call }))).await;
    let g_call = find(&v["visibleSteps"][0], f_call).unwrap()["children"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["kind"] == json!("CallExpression"))
        .unwrap()["stepId"]
        .as_u64()
        .unwrap();
    let (_, v) = call(&app, "POST", &url, Some(json!({ "type": "expand", "stepId": g_call }))).await;
    let h_call = find(&v["visibleSteps"][0], g_call).unwrap()["children"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["kind"] == json!("CallExpression"))
        .unwrap()["stepId"]
        .as_u64()
        .unwrap();
    let (_, v) = call(&app, "POST", &url, Some(json!({ "type": "expand", "stepId": h_call }))).await;
    let root = &v["visibleSteps"][0];
    assert_eq!(find(root, f_call).unwrap()["presentation"], json!("Abbreviated"));
    assert_eq!(find(root, g_call).unwrap()["presentation"], json!("Compact"));
    assert_eq!(find(root, h_call).unwrap()["presentation"], json!("Expanded"));
}

#[tokio::test]
async fn keyframes_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_in(dir.path());
    let (id, view) = session(&app, "let x = 1;\nlet y = 2;\nx = y;\n").await;
    let total = view["totalOps"].as_u64().unwrap();
    let (s, k) = call(&app, "GET", &format!("/sessions/{id}/keyframes?fromTick=0&toTick={total}"), None).await;
    assert_eq!(s, StatusCode::OK);
    let frames = k["keyframes"].as_array().unwrap();
    assert_eq!(frames.len(), 3);
    let last = &frames[2]["events"][0];
    assert_eq!(last["kind"], json!("Move"));
    assert!(last["target"]["loc"].is_u64() && last["sources"].is_array());
    let (_, back) = call(&app, "GET", &format!("/sessions/{id}/keyframes?fromTick={total}&toTick=0"), None).await;
    assert_eq!(back["keyframes"][0]["stepId"], frames[2]["stepId"]);
    let (s, _) = call(&app, "GET", &format!("/sessions/{id}/keyframes?fromTick=0&toTick=999"), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    call(&app, "POST", &format!("/sessions/{id}/actions"), Some(json!({ "type": "moveCursor", "tick": total }))).await;
    let (_, d) = call(&app, "GET", &format!("/sessions/{id}/data"), None).await;
    assert_eq!(d["events"][0]["kind"], json!("Move"));
    assert_eq!(d["residuals"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn serves_static_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>hi</html>").unwrap();
    let app = router(AppState::new(Registry::new(None)), Some(dir.path().to_path_buf()));
    let req = Request::builder().uri("/index.html").body(Body::empty()).unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], b"<html>hi</html>");
}
