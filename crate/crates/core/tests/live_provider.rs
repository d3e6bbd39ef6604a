//! The OpenAI-compatible client against a local stand-in server.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use neurowise_core::agents::{
    AgentRole, ChatMessage, ChatProvider, FinishReason, OpenAiCompatibleProvider, ProviderError, ProviderRequest,
    RequestTags, RetryPolicy,
};
use serde_json::{json, Value};

#[derive(Clone)]
struct Script {
    hits: Arc<AtomicU32>,
    /// Status codes returned for the first calls; later calls succeed.
    failures: Vec<u16>,
}

async fn completions(State(s): State<Script>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = s.hits.fetch_add(1, Ordering::SeqCst) as usize;
    assert_eq!(headers["authorization"], "Bearer test-key");
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["role"], "system");
    if let Some(code) = s.failures.get(n) {
        return (StatusCode::from_u16(*code).unwrap(), Json(json!({"error": "nope"})));
    }
    (
        StatusCode::OK,
        Json(json!({"choices": [{"message": {"role": "assistant", "content": "hello there"}, "finish_reason": "stop"}]})),
    )
}

async fn serve(failures: Vec<u16>) -> (String, Arc<AtomicU32>) {
    let hits = Arc::new(AtomicU32::new(0));
    let app = Router::new()
        .route("/v1/chat/completions", post(completions))
        .with_state(Script {
            hits: hits.clone(),
            failures,
        });
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), hits)
}

fn provider(endpoint: &str) -> OpenAiCompatibleProvider {
    OpenAiCompatibleProvider::new(
        endpoint,
        "test-model",
        "test-key",
        Duration::from_millis(500),
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(5),
        },
    )
    .unwrap()
}

fn request() -> ProviderRequest {
    ProviderRequest::new(
        vec![ChatMessage::system("be Alex"), ChatMessage::user("hi")],
        0.7,
        50,
        RequestTags::new(AgentRole::Partner),
    )
    .unwrap()
}

#[tokio::test]
async fn success_parses_wire_format() {
    let (url, hits) = serve(vec![]).await;
    let r = provider(&url).complete(&request()).await.unwrap();
    assert_eq!(r.content, "hello there");
    assert_eq!(r.finish_reason, FinishReason::Stop);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn transient_errors_are_retried() {
    let (url, hits) = serve(vec![503, 429]).await;
    let r = provider(&url).complete(&request()).await.unwrap();
    assert_eq!(r.content, "hello there");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn retries_are_bounded() {
    let (url, hits) = serve(vec![500, 500, 500, 500]).await;
    let err = provider(&url).complete(&request()).await.unwrap_err();
    assert!(matches!(err, ProviderError::Transient { status: 500, attempts: 3 }), "{err:?}");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn auth_failure_is_not_retried() {
    let (url, hits) = serve(vec![401]).await;
    let err = provider(&url).complete(&request()).await.unwrap_err();
    assert!(matches!(err, ProviderError::Auth(_)));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn client_error_is_not_retried() {
    let (url, hits) = serve(vec![400]).await;
    let err = provider(&url).complete(&request()).await.unwrap_err();
    assert!(matches!(err, ProviderError::Http { status: 400, .. }));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn unreachable_endpoint_times_out_after_three_attempts() {
    // Bind then drop a listener to get a port nothing listens on.
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let err = provider(&format!("http://127.0.0.1:{port}/v1"))
        .complete(&request())
        .await
        .unwrap_err();
    assert!(matches!(err, ProviderError::Timeout { attempts: 3, .. }), "{err:?}");
}

#[test]
fn missing_key_is_a_config_error() {
    assert!(matches!(
        OpenAiCompatibleProvider::new("http://x", "m", " ", Duration::from_secs(1), RetryPolicy::default()),
        Err(ProviderError::Config(_))
    ));
}
