use std::time::Duration;

use log::warn;
use serde::Deserialize;
use serde_json::json;

use super::{BackendConfig, BackendKind, Budget, ChatRequest, LlmBackend, LlmError};

/// Client for an OpenAI-style `/chat/completions` endpoint.
pub struct LiveBackend {
    config: BackendConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    budget: Budget,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

enum Attempt {
    Retry(LlmError),
    Fail(LlmError),
}

impl LiveBackend {
    /// Fails with `Auth` when the key variable is unset, before any network use.
    pub fn new(config: BackendConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| {
                LlmError::Auth(format!("environment variable {} is not set", config.api_key_env))
            })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.request_timeout))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let budget = Budget::new(config.request_budget);
        Ok(LiveBackend {
            config,
            api_key,
            client,
            budget,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, Attempt> {
        let response = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| Attempt::Retry(LlmError::Transport(e.to_string())))?;
        let status = response.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(Attempt::Fail(LlmError::Auth(format!("endpoint answered {status}"))));
        }
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(Attempt::Retry(LlmError::Transport(format!("endpoint answered {status}"))));
        }
        if !status.is_success() {
            return Err(Attempt::Fail(LlmError::Transport(format!("endpoint answered {status}"))));
        }
        let text = response
            .text()
            .map_err(|e| Attempt::Retry(LlmError::Transport(e.to_string())))?;
        let completion: Completion = serde_json::from_str(&text)
            .map_err(|e| Attempt::Fail(LlmError::MalformedResponse(e.to_string())))?;
        completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Attempt::Fail(LlmError::MalformedResponse("no choices[0].message.content".into())))
    }
}

impl LlmBackend for LiveBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.budget.acquire()?;
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(content) => return Ok(content),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt >= self.config.max_retries => return Err(e),
                Err(Attempt::Retry(e)) => {
                    warn!("chat completion attempt {} failed: {e}; retrying in {delay:?}", attempt + 1);
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn calls(&self) -> u64 {
        self.budget.used()
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }
}

#[cfg(test)]
mod tests {
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    use super::*;
    use crate::llm::{ChatMessage, Role};

    /// Serves canned HTTP responses in order, one per connection.
    fn serve(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    let text = String::from_utf8_lossy(&buf).to_string();
                    if let Some(head_end) = text.find("\r\n\r\n") {
                        let len = text[..head_end]
                            .lines()
                            .find_map(|l| {
                                let lower = l.to_ascii_lowercase();
                                lower.strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap())
                            })
                            .unwrap_or(0);
                        if buf.len() >= head_end + 4 + len {
                            bodies.push(text[head_end + 4..].to_string());
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
            bodies
        });
        (format!("http://{addr}/v1/chat/completions"), hits, handle)
    }

    fn config(endpoint: String, env: &str) -> BackendConfig {
        BackendConfig {
            kind: BackendKind::Live,
            endpoint,
            api_key_env: env.into(),
            backoff_ms: 1,
            max_retries: 2,
            request_timeout: 5.0,
            ..BackendConfig::default()
        }
    }

    fn request() -> ChatRequest {
        ChatRequest::new("gpt-3.5-turbo", vec![ChatMessage::new(Role::User, "[[task:translate]]\nhi")])
    }

    #[test]
    fn missing_key_fails_before_network() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}/", listener.local_addr().unwrap());
        let err = LiveBackend::new(config(endpoint, "CHATLOGIC_TEST_KEY_THAT_IS_NOT_SET")).err();
        assert!(matches!(err, Some(LlmError::Auth(_))));
        listener.set_nonblocking(true).unwrap();
        assert!(listener.accept().is_err(), "no connection was attempted");
    }

    #[test]
    fn retries_transient_errors_then_succeeds() {
        std::env::set_var("CHATLOGIC_TEST_KEY_RETRY", "secret");
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"poor(bob)."}}]}"#.to_string();
        let (endpoint, hits, handle) = serve(vec![(503, "{}".into()), (500, "{}".into()), (200, ok)]);
        let backend = LiveBackend::new(config(endpoint, "CHATLOGIC_TEST_KEY_RETRY")).unwrap();
        assert_eq!(backend.complete(&request()).unwrap(), "poor(bob).");
        assert_eq!(hits.load(Ordering::SeqCst), 3);
        assert_eq!(backend.calls(), 1);
        let bodies = handle.join().unwrap();
        let sent: serde_json::Value = serde_json::from_str(&bodies[2]).unwrap();
        assert_eq!(sent["temperature"], 0.0);
        assert_eq!(sent["messages"][0]["role"], "user");
        assert_eq!(sent["model"], "gpt-3.5-turbo");
    }

    #[test]
    fn gives_up_after_max_retries() {
        std::env::set_var("CHATLOGIC_TEST_KEY_GIVEUP", "secret");
        let (endpoint, hits, handle) = serve(vec![(503, "{}".into()); 3]);
        let backend = LiveBackend::new(config(endpoint, "CHATLOGIC_TEST_KEY_GIVEUP")).unwrap();
        assert!(matches!(backend.complete(&request()), Err(LlmError::Transport(_))));
        assert_eq!(hits.load(Ordering::SeqCst), 3);
        handle.join().unwrap();
    }

    #[test]
    fn auth_and_malformed_responses_are_not_retried() {
        std::env::set_var("CHATLOGIC_TEST_KEY_AUTH", "secret");
        let (endpoint, hits, handle) = serve(vec![(401, "{}".into()), (200, r#"{"choices":[]}"#.into())]);
        let backend = LiveBackend::new(config(endpoint, "CHATLOGIC_TEST_KEY_AUTH")).unwrap();
        assert!(matches!(backend.complete(&request()), Err(LlmError::Auth(_))));
        assert!(matches!(backend.complete(&request()), Err(LlmError::MalformedResponse(_))));
        assert_eq!(hits.load(Ordering::SeqCst), 2);
        handle.join().unwrap();
    }
}
