//! Starts the HTTP service in-process and posts the two-point task to it.
//!
//!     cargo run --release --example serve_client

use serde_json::json;
use tokio::io::{AsyncReadExt, AsyncWriteExt};

use sketchviz::server::{router, ServiceState};

#[tokio::main]
async fn main() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(ServiceState::new(2))).await });

    let body = json!({
        "tables": [
            {"name": "T1", "csv": "ID,Cond,A,Aneg\n1,1,3,4\n2,2,2,4\n3,1,1,1\n4,2,5,2\n"},
            {"name": "T2", "columns": ["ID", "Gender"], "rows": [[1, "M"], [2, "M"], [3, "F"], [4, "F"]]}
        ],
        "sketch": [
            {"kind": "point", "x": 1, "y": 7, "color": "M"},
            {"kind": "point", "x": 2, "y": 6, "color": "M"}
        ],
        "options": {"budget": 20, "top_k": 3}
    })
    .to_string();
    let mut conn = tokio::net::TcpStream::connect(addr).await.unwrap();
    let head = format!(
        "POST /synthesize HTTP/1.1\r\nhost: {addr}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
        body.len()
    );
    conn.write_all(head.as_bytes()).await.unwrap();
    conn.write_all(body.as_bytes()).await.unwrap();
    let mut resp = String::new();
    conn.read_to_string(&mut resp).await.unwrap();

    let (status, payload) = resp.split_once("\r\n\r\n").unwrap();
    println!("{}", status.lines().next().unwrap());
    let doc: serde_json::Value = serde_json::from_str(payload).unwrap();
    for s in doc["solutions"].as_array().unwrap() {
        println!("size {}  {}", s["size"], s["visual_program"].as_str().unwrap_or_default());
    }
}
