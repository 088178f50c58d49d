#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

/// Minimal HTTP/1.1 stub: answers every request with the next canned
/// `(status, body)` pair, repeating the last one when the list runs out.
pub struct MockServer {
    pub base: String,
    hits: Arc<AtomicUsize>,
}

impl MockServer {
    pub fn start(responses: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&hits);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let n = counter.fetch_add(1, Ordering::SeqCst);
                let (status, body) = responses[n.min(responses.len() - 1)].clone();
                serve(stream, status, &body);
            }
        });
        Self { base, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, status: u16, body: &str) {
    let mut reader = BufReader::new(stream);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut payload = vec![0; length];
    let _ = reader.read_exact(&mut payload);
    let mut stream = reader.into_inner();
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

/// A chat-completions reply whose message content is `content`.
pub fn chat_reply(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

/// A JSON array with one cubic candidate per site list.
pub fn candidate_array(cells: &[&[&str]]) -> String {
    let items: Vec<serde_json::Value> = cells
        .iter()
        .map(|els| {
            let n = els.len() as f64;
            let sites: Vec<serde_json::Value> = els
                .iter()
                .enumerate()
                .map(|(i, el)| {
                    let f = i as f64 / n;
                    serde_json::json!({"element": el, "frac": [f, f, f]})
                })
                .collect();
            serde_json::json!({
                "lattice": {"a": 4.5, "b": 4.5, "c": 4.5, "alpha": 90.0, "beta": 90.0, "gamma": 90.0},
                "sites": sites,
            })
        })
        .collect();
    serde_json::Value::Array(items).to_string()
}
