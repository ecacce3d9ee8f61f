use std::sync::atomic::Ordering;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use serde_json::{json, Value as Json};
use tokio::io::AsyncWriteExt;
use tower::ServiceExt;

use sketchviz::server::{router, ServiceState};
use sketchviz::task::TaskFile;

fn running_task() -> Json {
    json!({
        "tables": [
            {"name": "T1", "csv": "ID,Cond,A,Aneg\n1,1,3,4\n2,2,2,4\n3,1,1,1\n4,2,5,2\n"},
            {"name": "T2", "columns": ["ID", "Gender"], "rows": [[1, "M"], [2, "M"], [3, "F"], [4, "F"]]}
        ],
        "sketch": [
            {"kind": "point", "x": 1, "y": 7, "color": "M"},
            {"kind": "point", "x": 2, "y": 6, "color": "M"}
        ],
        "options": {"budget": 30, "top_k": 5}
    })
}

/// A sketch no program reaches, so the search runs until its budget.
fn endless_task() -> Json {
    let rows: Vec<Json> = (0..40).map(|i| json!([i, i * 3 % 7, i % 5, format!("g{}", i % 3)])).collect();
    json!({
        "tables": [{"name": "T", "columns": ["a", "b", "c", "d"], "rows": rows}],
        "sketch": [{"kind": "point", "x": 123457, "y": -98765, "color": "nowhere"}],
        "options": {"budget": 120, "max_statements": 4}
    })
}

fn post(body: &Json) -> Request<Body> {
    Request::post("/synthesize")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

async fn read(resp: axum::response::Response) -> (StatusCode, Vec<u8>) {
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, bytes.to_vec())
}

async fn wait_idle(state: &ServiceState, limit: Duration) -> bool {
    let start = Instant::now();
    while start.elapsed() < limit {
        if state.in_flight.load(Ordering::SeqCst) == 0 {
            return true;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    false
}

#[tokio::test]
async fn health_and_version() {
    let app = router(ServiceState::new(4));
    let (s, body) = read(app.clone().oneshot(Request::get("/health").body(Body::empty()).unwrap()).await.unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body, b"ok");
    let (s, body) = read(app.oneshot(Request::get("/version").body(Body::empty()).unwrap()).await.unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    let v: Json = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["engine"], "sketchviz");
}

#[tokio::test]
async fn synthesize_matches_the_cli_path() {
    let app = router(ServiceState::new(4));
    let task = running_task();
    let resp = app.oneshot(post(&task)).await.unwrap();
    assert_eq!(resp.headers()["content-type"], "application/json");
    let (s, body) = read(resp).await;
    assert_eq!(s, StatusCode::OK);
    let got: Json = serde_json::from_slice(&body).unwrap();
    assert!(!got["solutions"].as_array().unwrap().is_empty());

    let file: TaskFile = serde_json::from_value(task).unwrap();
    let (_, want) = file.resolve(std::path::Path::new(".")).unwrap().run(None);
    assert_eq!(got, want);
}

#[tokio::test]
async fn bad_requests() {
    let app = router(ServiceState::new(4));
    let (s, _) = read(app.clone().oneshot(post(&json!({"tables": []}))).await.unwrap()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let mut t = running_task();
    t["sketch"] = json!([]);
    let (s, body) = read(app.clone().oneshot(post(&t)).await.unwrap()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(String::from_utf8_lossy(&body).contains("no elements"));

    let mut t = running_task();
    t["tables"][0] = json!({"name": "T1", "path": "/etc/passwd"});
    let (s, _) = read(app.oneshot(post(&t)).await.unwrap()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn oversized_table_is_rejected() {
    // 250,001 rows by 4 columns
    let mut csv = String::from("a,b,c,d\n");
    for i in 0..250_001 {
        csv.push_str(&format!("{i},1,2,3\n"));
    }
    let t = json!({
        "tables": [{"name": "T", "csv": csv}],
        "sketch": [{"kind": "point", "x": 1, "y": 1}]
    });
    let (s, _) = read(router(ServiceState::new(4)).oneshot(post(&t)).await.unwrap()).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn cap_then_cancel_on_drop() {
    let state = ServiceState::new(1);
    let app = router(state.clone());
    let slow = tokio::spawn(app.clone().oneshot(post(&endless_task())));
    let start = Instant::now();
    while state.in_flight.load(Ordering::SeqCst) == 0 {
        assert!(start.elapsed() < Duration::from_secs(10), "search never started");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    let (s, _) = read(app.clone().oneshot(post(&running_task())).await.unwrap()).await;
    assert_eq!(s, StatusCode::TOO_MANY_REQUESTS);

    // dropping the handler future is what a vanished client looks like
    slow.abort();
    assert!(wait_idle(&state, Duration::from_secs(1)).await, "search still running 1s after cancellation");
    let (s, _) = read(app.oneshot(Request::get("/health").body(Body::empty()).unwrap()).await.unwrap()).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn client_disconnect_over_tcp_stops_the_search() {
    let state = ServiceState::new(4);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(state.clone());
    tokio::spawn(async move { axum::serve(listener, app).await });

    let body = endless_task().to_string();
    let mut conn = tokio::net::TcpStream::connect(addr).await.unwrap();
    let head = format!(
        "POST /synthesize HTTP/1.1\r\nhost: {addr}\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n",
        body.len()
    );
    conn.write_all(head.as_bytes()).await.unwrap();
    conn.write_all(body.as_bytes()).await.unwrap();
    let start = Instant::now();
    while state.in_flight.load(Ordering::SeqCst) == 0 {
        assert!(start.elapsed() < Duration::from_secs(10), "search never started");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    tokio::time::sleep(Duration::from_millis(200)).await;
    drop(conn);
    assert!(wait_idle(&state, Duration::from_secs(1)).await, "search still running 1s after disconnect");
}
