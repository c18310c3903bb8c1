use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use lost3dsg::core::{EmbedError, SentenceEmbedder};
use lost3dsg::remote::RemoteEmbedder;

#[derive(Clone, Debug)]
struct Seen {
    authorization: Option<String>,
    texts: Vec<String>,
}

type Reply = fn(&[String]) -> (u16, String);

/// Serves HTTP/1.1 requests on a local port until the test ends.
fn serve(reply: Reply) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/embed", listener.local_addr().unwrap());
    let log = Arc::new(Mutex::new(Vec::new()));
    let log2 = Arc::clone(&log);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    authorization = Some(line["authorization:".len()..].trim().to_string());
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let doc: serde_json::Value = serde_json::from_slice(&body).unwrap();
            let texts: Vec<String> = doc["texts"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| t.as_str().unwrap().to_string())
                .collect();
            let (status, payload) = reply(&texts);
            log2.lock().unwrap().push(Seen { authorization, texts });
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    (url, log)
}

fn by_length(texts: &[String]) -> (u16, String) {
    let vectors: Vec<[f64; 2]> = texts.iter().map(|t| [t.len() as f64, 1.0]).collect();
    (200, serde_json::json!({ "embeddings": vectors }).to_string())
}

#[test]
fn embeds_and_normalizes() {
    let (url, log) = serve(by_length);
    let e = RemoteEmbedder::new(url).with_token("secret");
    let v = e.embed("abc").unwrap();
    let n = 10f64.sqrt();
    assert!((v[0] - 3.0 / n).abs() < 1e-12 && (v[1] - 1.0 / n).abs() < 1e-12);
    assert_eq!(e.dimension(), 2);
    let seen = log.lock().unwrap().clone();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer secret"));
    assert_eq!(seen[0].texts, vec!["abc"]);
}

#[test]
fn repeated_texts_are_not_requested_again() {
    let (url, log) = serve(by_length);
    let e = RemoteEmbedder::new(url);
    let batch = e.embed_batch(&["b", "a", "b"]).unwrap();
    assert_eq!(batch.len(), 3);
    assert_eq!(batch[0], batch[2]);
    e.embed("a").unwrap();
    e.embed("b").unwrap();
    let seen = log.lock().unwrap().clone();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].texts, vec!["a", "b"]);
    assert_eq!(seen[0].authorization, None);
}

#[test]
fn status_errors_carry_the_body() {
    let (url, _) = serve(|_| (503, "overloaded".into()));
    match RemoteEmbedder::new(url).embed("x") {
        Err(EmbedError::Status { status, body }) => {
            assert_eq!(status, 503);
            assert_eq!(body, "overloaded");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_responses() {
    let (url, _) = serve(|_| (200, "{\"embeddings\": []}".into()));
    assert!(matches!(RemoteEmbedder::new(url).embed("x"), Err(EmbedError::Malformed(_))));
    let (url, _) = serve(|_| (200, "not json".into()));
    assert!(matches!(RemoteEmbedder::new(url).embed("x"), Err(EmbedError::Malformed(_))));
}

#[test]
fn dimension_mismatch() {
    let (url, _) = serve(by_length);
    let e = RemoteEmbedder::new(url).with_dimension(3);
    assert!(matches!(e.embed("x"), Err(EmbedError::Dimension { expected: 3, found: 2 })));
}

#[test]
fn zero_vectors_are_rejected() {
    let (url, _) = serve(|t| (200, serde_json::json!({ "embeddings": vec![[0.0, 0.0]; t.len()] }).to_string()));
    assert!(RemoteEmbedder::new(url).embed("x").is_err());
}

#[test]
fn unreachable_endpoint() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/embed", listener.local_addr().unwrap());
    drop(listener);
    let e = RemoteEmbedder::new(url).with_timeout(Duration::from_secs(2));
    assert!(matches!(e.embed("x"), Err(EmbedError::Transport(_))));
}
