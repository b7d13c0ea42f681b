use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use lightkg_core::client::{ChatMessage, ClientConfig, ClientError, CompletionClient, CompletionParams, HttpClient};

struct Captured {
    head: String,
    body: String,
}

/// Serves one scripted `(status, body)` response per connection, in order,
/// and hands back every request it saw.
fn scripted_server(script: Vec<(u16, String)>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            let _ = tx.send(Captured {
                head,
                body: String::from_utf8(buf).unwrap(),
            });
            let mut stream = reader.into_inner();
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (base, rx)
}

fn ok_body(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn fast_client(base: &str) -> HttpClient {
    let mut config = ClientConfig::new(base);
    config.initial_backoff = Duration::from_millis(10);
    HttpClient::new(config).unwrap()
}

fn messages() -> Vec<ChatMessage> {
    vec![ChatMessage::system("extract"), ChatMessage::user("Marie Curie discovered radium in 1898")]
}

#[test]
fn retries_through_rate_limits() {
    let (base, rx) = scripted_server(vec![
        (429, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("(marie curie | discovered | radium) {year=1898}")),
    ]);
    let out = fast_client(&base).complete(&messages(), &CompletionParams::default()).unwrap();
    assert_eq!(out, "(marie curie | discovered | radium) {year=1898}");
    assert_eq!(rx.try_iter().count(), 3);
}

#[test]
fn gives_up_after_retry_budget() {
    let (base, rx) = scripted_server(vec![(503, "busy".into()), (503, "busy".into()), (503, "busy".into())]);
    let err = fast_client(&base).complete(&messages(), &CompletionParams::default()).unwrap_err();
    assert!(matches!(err, ClientError::HttpStatus { code: 503, .. }), "{err}");
    assert_eq!(rx.try_iter().count(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (base, rx) = scripted_server(vec![(400, "bad request".into()), (200, ok_body("never"))]);
    let err = fast_client(&base).complete(&messages(), &CompletionParams::default()).unwrap_err();
    assert!(matches!(err, ClientError::HttpStatus { code: 400, .. }));
    assert_eq!(rx.recv_timeout(Duration::from_secs(1)).map(|_| ()).ok(), Some(()));
    assert!(rx.recv_timeout(Duration::from_millis(200)).is_err());
}

#[test]
fn sends_openai_shaped_request_with_key() {
    let (base, rx) = scripted_server(vec![(200, ok_body("ok"))]);
    let mut config = ClientConfig::new(&base);
    config.api_key = Some("test-key".into());
    let client = HttpClient::new(config).unwrap();
    let params = CompletionParams {
        model_name: "tiny".into(),
        ..CompletionParams::default()
    };
    client.complete(&messages(), &params).unwrap();
    let req = rx.recv().unwrap();
    assert!(req.head.starts_with("POST /v1/chat/completions"));
    assert!(req.head.to_ascii_lowercase().contains("authorization: bearer test-key"));
    let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
    assert_eq!(body["model"], "tiny");
    assert_eq!(body["messages"][1]["role"], "user");
    assert_eq!(body["temperature"], 0.0);
}

#[test]
fn malformed_body_is_reported() {
    let (base, _rx) = scripted_server(vec![(200, "{\"choices\":[]}".into())]);
    let err = fast_client(&base).complete(&messages(), &CompletionParams::default()).unwrap_err();
    assert!(matches!(err, ClientError::MalformedResponse(_)));
}

#[test]
fn unreachable_endpoint_counts_attempts() {
    // Bind then drop to get a port nobody listens on.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let client = fast_client(&format!("http://127.0.0.1:{port}/v1"));
    let start = Instant::now();
    let err = client.complete(&messages(), &CompletionParams::default()).unwrap_err();
    match err {
        ClientError::EndpointUnreachable { attempts, url, .. } => {
            assert_eq!(attempts, 3);
            assert!(url.ends_with("/chat/completions"));
        }
        other => panic!("unexpected {other}"),
    }
    // 10 ms + 20 ms of backoff, nowhere near a real timeout.
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn rejects_requests_not_ending_in_user_turn() {
    let client = fast_client("http://127.0.0.1:9/v1");
    let err = client
        .complete(&[ChatMessage::system("only system")], &CompletionParams::default())
        .unwrap_err();
    assert!(matches!(err, ClientError::InvalidRequest(_)));
}
