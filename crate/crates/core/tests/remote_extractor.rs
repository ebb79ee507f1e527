//! The HTTP extractor against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use swati::corpus::{DocKind, Document};
use swati::extraction::{ExtractionError, Extractor, RemoteExtractor, RemoteExtractorConfig};

struct Seen {
    bodies: Vec<Value>,
    auth: Vec<Option<String>>,
}

/// Serve one scripted reply per connection, in order, then stop. A reply of
/// `None` stalls past any sensible timeout.
fn serve(replies: Vec<Option<String>>) -> (String, Arc<Mutex<Seen>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/extract", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Seen {
        bodies: Vec::new(),
        auth: Vec::new(),
    }));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for reply in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let (mut len, mut auth) = (0usize, None);
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap_or((line, ""));
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => len = value.trim().parse().unwrap(),
                    "authorization" => auth = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            {
                let mut s = log.lock().unwrap();
                s.bodies.push(serde_json::from_slice(&body).unwrap());
                s.auth.push(auth);
            }
            let mut stream = stream;
            match reply {
                Some(text) => {
                    let head = format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                        text.len()
                    );
                    let _ = stream.write_all(head.as_bytes());
                    let _ = stream.write_all(text.as_bytes());
                }
                None => thread::sleep(Duration::from_millis(1500)),
            }
        }
    });
    (url, seen)
}

fn doc() -> Document {
    Document::new("v1", DocKind::Volunteer, "Fluent in Python and SQL.")
}

fn good_reply() -> String {
    json!({
        "doc_id": "v1",
        "skills": [
            {"raw": "Python", "evidence": [10, 16], "proficiency": 0.8},
            {"raw": "SQL", "evidence": [21, 24], "proficiency": 0.5}
        ],
        "cues": {
            "domain_affinity": 0.2, "prior_exposure": 0.4, "stated_interest": 0.6,
            "volunteering_history": 0.0, "availability": 1.0
        }
    })
    .to_string()
}

fn extractor(url: String, retries: u32, api_key: Option<&str>) -> RemoteExtractor {
    RemoteExtractor::new(RemoteExtractorConfig {
        endpoint: url,
        timeout_ms: 500,
        retries,
        api_key: api_key.map(String::from),
        ..RemoteExtractorConfig::default()
    })
}

#[test]
fn valid_reply_is_converted() {
    let (url, seen) = serve(vec![Some(good_reply())]);
    let r = extractor(url, 0, Some("k123")).extract(&doc()).unwrap();
    assert_eq!(r.raws(), ["Python", "SQL"]);
    assert_eq!(r.mentions[0].evidence, (10, 16));
    assert_eq!(r.cues.availability, 1.0);

    let s = seen.lock().unwrap();
    assert_eq!(s.auth[0].as_deref(), Some("Bearer k123"));
    let body = &s.bodies[0];
    assert_eq!(body["doc_id"], "v1");
    assert_eq!(body["text"], "Fluent in Python and SQL.");
    assert_eq!(body["schema_version"], "1");
    assert!(body["prompt"].as_str().unwrap().contains("Fluent in Python and SQL."));
}

#[test]
fn rejected_reply_is_retried() {
    let (url, seen) = serve(vec![Some("not json".into()), Some(good_reply())]);
    let r = extractor(url, 1, None).extract(&doc()).unwrap();
    assert_eq!(r.mentions.len(), 2);
    assert_eq!(seen.lock().unwrap().auth, [None, None]);
}

#[test]
fn bad_span_exhausts_retries() {
    let bad = good_reply().replace("[21,24]", "[0,3]");
    let (url, seen) = serve(vec![Some(bad.clone()), Some(bad)]);
    let err = extractor(url, 1, None).extract(&doc()).unwrap_err();
    match err {
        ExtractionError::SchemaViolation { path, .. } => assert_eq!(path, "mentions[1].evidence"),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(seen.lock().unwrap().bodies.len(), 2);
}

#[test]
fn stalled_server_times_out() {
    let (url, _) = serve(vec![None]);
    let err = extractor(url, 0, None).extract(&doc()).unwrap_err();
    assert!(matches!(err, ExtractionError::Timeout), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = extractor(format!("http://127.0.0.1:{port}/extract"), 0, None)
        .extract(&doc())
        .unwrap_err();
    assert!(matches!(err, ExtractionError::Transport(_)), "{err:?}");
}
