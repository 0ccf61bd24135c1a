//! Thin HTTP clients for a completions-style text generator and a
//! web-search API. Neither is exercised by the test suite.

use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use rowcomp_core::clients::{
    ClientError, Generation, GenerationRequest, SearchEngine, SearchSnippet, SnippetSource, SourceFilter,
    TextGenerator, MAX_SNIPPETS,
};
use serde_json::{json, Value};

pub const LM_ENDPOINT: &str = "ROWCOMP_LM_ENDPOINT";
pub const LM_API_KEY: &str = "ROWCOMP_LM_API_KEY";
pub const SEARCH_ENDPOINT: &str = "ROWCOMP_SEARCH_ENDPOINT";
pub const SEARCH_API_KEY: &str = "ROWCOMP_SEARCH_API_KEY";

const ATTEMPTS: u32 = 3;

fn env(name: &str) -> Result<String, ClientError> {
    std::env::var(name).map_err(|_| ClientError::Fatal(format!("{name} is not set")))
}

fn client() -> Result<Client, ClientError> {
    Client::builder()
        .timeout(Duration::from_secs(60))
        .build()
        .map_err(|e| ClientError::Fatal(e.to_string()))
}

fn classify(status: StatusCode, body: &str) -> ClientError {
    let msg = format!("HTTP {status}: {}", body.chars().take(200).collect::<String>());
    if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
        ClientError::Retryable(msg)
    } else {
        ClientError::Fatal(msg)
    }
}

/// Sends a request up to three times, backing off 0.5 s then 1 s after
/// retryable failures.
fn send_json(build: impl Fn() -> RequestBuilder) -> Result<Value, ClientError> {
    let mut last = ClientError::Retryable("no attempt made".into());
    for attempt in 0..ATTEMPTS {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(500 << (attempt - 1)));
        }
        let outcome = build().send().map_err(|e| {
            if e.is_timeout() || e.is_connect() {
                ClientError::Retryable(e.to_string())
            } else {
                ClientError::Fatal(e.to_string())
            }
        });
        let result = outcome.and_then(|resp| {
            let status = resp.status();
            let body = resp.text().map_err(|e| ClientError::Retryable(e.to_string()))?;
            if !status.is_success() {
                return Err(classify(status, &body));
            }
            serde_json::from_str(&body).map_err(|e| ClientError::Fatal(format!("malformed response: {e}")))
        });
        match result {
            Ok(v) => return Ok(v),
            Err(e) if e.is_retryable() => {
                log::warn!("attempt {} failed: {e}", attempt + 1);
                last = e;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// OpenAI-style `/completions` endpoint.
pub struct HttpGenerator {
    client: Client,
    endpoint: String,
    key: String,
}

impl HttpGenerator {
    pub fn from_env() -> Result<Self, ClientError> {
        Ok(Self {
            client: client()?,
            endpoint: env(LM_ENDPOINT)?,
            key: env(LM_API_KEY)?,
        })
    }
}

/// Generations from a completions response; the score is the mean token
/// log-probability when present.
pub fn parse_completions(body: &Value) -> Vec<Generation> {
    let Some(choices) = body.get("choices").and_then(Value::as_array) else {
        return Vec::new();
    };
    choices
        .iter()
        .filter_map(|c| {
            let text = c.get("text")?.as_str()?.to_string();
            if text.trim().is_empty() {
                return None;
            }
            let score = c
                .pointer("/logprobs/token_logprobs")
                .and_then(Value::as_array)
                .map(|lp| lp.iter().filter_map(Value::as_f64).collect::<Vec<_>>())
                .filter(|lp| !lp.is_empty())
                .map(|lp| lp.iter().sum::<f64>() / lp.len() as f64);
            Some(Generation { text, score })
        })
        .collect()
}

impl TextGenerator for HttpGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, ClientError> {
        let body = json!({
            "prompt": format!("{}\n", request.prompt),
            "n": request.samples,
            "temperature": request.temperature,
            "max_tokens": 32 * request.max_sentences.max(1),
            "logprobs": 1,
        });
        let v = send_json(|| self.client.post(&self.endpoint).bearer_auth(&self.key).json(&body))?;
        let mut out = parse_completions(&v);
        out.truncate(request.samples);
        Ok(out)
    }
}

/// Bing-style web search endpoint.
pub struct HttpSearch {
    client: Client,
    endpoint: String,
    key: String,
}

impl HttpSearch {
    pub fn from_env() -> Result<Self, ClientError> {
        Ok(Self {
            client: client()?,
            endpoint: env(SEARCH_ENDPOINT)?,
            key: env(SEARCH_API_KEY)?,
        })
    }
}

fn source_of(url: &str) -> SnippetSource {
    if url.contains("wikipedia.org") {
        SnippetSource::Wikipedia
    } else {
        SnippetSource::Other
    }
}

/// Snippets from web and news results; descriptions are the result name
/// and snippet joined by a space.
pub fn parse_search(body: &Value) -> Vec<SearchSnippet> {
    let web = body.pointer("/webPages/value").and_then(Value::as_array).into_iter().flatten();
    let news = body.pointer("/news/value").and_then(Value::as_array).into_iter().flatten();
    let pick = |r: &Value, source: Option<SnippetSource>| {
        let url = r.get("url")?.as_str()?.to_string();
        let name = r.get("name").and_then(Value::as_str).unwrap_or("");
        let text = r
            .get("snippet")
            .or_else(|| r.get("description"))
            .and_then(Value::as_str)
            .unwrap_or("");
        let description = format!("{name} {text}").trim().to_string();
        if description.is_empty() {
            return None;
        }
        let source = source.unwrap_or_else(|| source_of(&url));
        Some(SearchSnippet { url, description, source })
    };
    web.filter_map(|r| pick(r, None))
        .chain(news.filter_map(|r| pick(r, Some(SnippetSource::News))))
        .collect()
}

impl SearchEngine for HttpSearch {
    fn search(&self, keywords: &[String], filter: SourceFilter) -> Result<Vec<SearchSnippet>, ClientError> {
        let query = keywords.iter().map(|k| format!("\"{k}\"")).collect::<Vec<_>>().join(" ");
        let v = send_json(|| {
            self.client
                .get(&self.endpoint)
                .header("Ocp-Apim-Subscription-Key", &self.key)
                .query(&[("q", query.as_str()), ("count", "50"), ("responseFilter", "Webpages,News")])
        })?;
        Ok(parse_search(&v)
            .into_iter()
            .filter(|s| filter.accepts(s.source))
            .take(MAX_SNIPPETS)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completions_response() {
        let v = json!({"choices": [
            {"text": " Kendrick Lamar has pseudonym K-Dot", "logprobs": {"token_logprobs": [-0.5, -1.5]}},
            {"text": "  "},
            {"text": "Nas"}
        ]});
        let g = parse_completions(&v);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].score, Some(-1.0));
        assert_eq!(g[1].score, None);
        assert!(parse_completions(&json!({})).is_empty());
    }

    #[test]
    fn search_response() {
        let v = json!({
            "webPages": {"value": [
                {"name": "Compton", "url": "https://en.wikipedia.org/wiki/Compton", "snippet": "a city"},
                {"name": "Blog", "url": "https://blog.example", "snippet": "post"}
            ]},
            "news": {"value": [{"name": "Story", "url": "https://news.example/1", "description": "today"}]}
        });
        let s = parse_search(&v);
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].description, "Compton a city");
        assert_eq!(s[0].source, SnippetSource::Wikipedia);
        assert_eq!(s[1].source, SnippetSource::Other);
        assert_eq!(s[2].source, SnippetSource::News);
    }

    #[test]
    fn status_classification() {
        assert!(classify(StatusCode::TOO_MANY_REQUESTS, "").is_retryable());
        assert!(classify(StatusCode::BAD_GATEWAY, "").is_retryable());
        assert!(!classify(StatusCode::UNAUTHORIZED, "").is_retryable());
    }
}
