//! HTTP chat-completion adapter. Transport failures never abort a
//! verification batch; they surface as failure-marked responses scored
//! incorrect.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{Text2SqlBackend, Text2SqlRequest, Text2SqlResponse};

#[derive(Clone, Debug)]
pub struct LlmEndpoint {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token; unset means no auth
    /// header (local deployments).
    pub api_key_env: String,
    pub timeout: Duration,
    pub retries: u32,
}

impl Default for LlmEndpoint {
    fn default() -> Self {
        LlmEndpoint {
            base_url: "http://localhost:8000/v1".into(),
            model: String::new(),
            api_key_env: "LLM_API_KEY".into(),
            timeout: Duration::from_secs(120),
            retries: 1,
        }
    }
}

/// Prompt template identifier, versioned so serialized score logs stay
/// interpretable when wording changes.
pub const PROMPT_TEMPLATE_TEXT2SQL_V1: &str = "text2sql-v1";

pub struct HttpLlmBackend {
    id: String,
    endpoint: LlmEndpoint,
    agent: ureq::Agent,
}

impl HttpLlmBackend {
    pub fn new(id: impl Into<String>, endpoint: LlmEndpoint) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(endpoint.timeout)
            .build();
        HttpLlmBackend {
            id: id.into(),
            endpoint,
            agent,
        }
    }

    fn prompt(&self, req: &Text2SqlRequest) -> String {
        let mut p = String::new();
        p.push_str("You translate natural-language questions into SQLite SQL.\n");
        p.push_str("Database schema:\n");
        p.push_str(&req.schema_text);
        if !req.samples.is_empty() {
            p.push_str("\nSample rows:\n");
            for t in &req.samples {
                p.push_str(&format!("{} ({}):\n", t.table, t.columns.join(", ")));
                for row in &t.rows {
                    let vals: Vec<String> = row.iter().map(|v| v.render()).collect();
                    p.push_str(&format!("  ({})\n", vals.join(", ")));
                }
            }
        }
        p.push_str("\nQuestion: ");
        p.push_str(&req.question);
        p.push_str("\nAnswer with a single SQL query and nothing else.\n");
        p
    }

    fn call_once(&self, prompt: &str) -> Result<String, String> {
        let url = format!(
            "{}/chat/completions",
            self.endpoint.base_url.trim_end_matches('/')
        );
        let body = json!({
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        let mut request = self.agent.post(&url).set("Content-Type", "application/json");
        if let Ok(key) = std::env::var(&self.endpoint.api_key_env) {
            if !key.is_empty() {
                request = request.set("Authorization", &format!("Bearer {key}"));
            }
        }
        let resp = request
            .send_json(body)
            .map_err(|e| format!("transport: {e}"))?;
        let value: Value = resp
            .into_json()
            .map_err(|e| format!("invalid response json: {e}"))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| "response missing choices[0].message.content".to_string())
    }
}

impl Text2SqlBackend for HttpLlmBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn infer(&self, req: &Text2SqlRequest) -> Text2SqlResponse {
        let started = Instant::now();
        let prompt = self.prompt(req);
        let mut last_err = String::new();
        for _attempt in 0..=self.endpoint.retries {
            match self.call_once(&prompt) {
                Ok(content) => {
                    let latency_ms = started.elapsed().as_millis() as u64;
                    return match extract_sql_from_text(&content) {
                        Some(sql) => Text2SqlResponse {
                            backend_id: self.id.clone(),
                            predicted_sql: Some(sql),
                            error: None,
                            latency_ms,
                        },
                        None => Text2SqlResponse {
                            backend_id: self.id.clone(),
                            predicted_sql: None,
                            error: Some("no SQL found in response".into()),
                            latency_ms,
                        },
                    };
                }
                Err(e) => last_err = e,
            }
        }
        Text2SqlResponse::failure(&self.id, last_err)
    }
}

/// Pull the predicted SQL out of a model response: first fenced code block,
/// else the first line starting with SELECT or WITH.
pub fn extract_sql_from_text(text: &str) -> Option<String> {
    if let Some(open) = text.find("```") {
        let after = &text[open + 3..];
        // skip an optional language tag on the fence line
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
        let body = &after[body_start..];
        let end = body.find("```").unwrap_or(body.len());
        let sql = body[..end].trim();
        if !sql.is_empty() {
            return Some(sql.to_string());
        }
    }
    for (idx, line) in text.lines().enumerate() {
        let lt = line.trim_start();
        if lt.len() >= 6 && lt[..6].eq_ignore_ascii_case("select")
            || lt.len() >= 4 && lt[..4].eq_ignore_ascii_case("with")
        {
            let rest: Vec<&str> = text.lines().skip(idx).collect();
            let mut sql = rest.join("\n").trim().to_string();
            if let Some(cut) = sql.find("```") {
                sql.truncate(cut);
            }
            return Some(sql.trim().to_string());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_fenced_block() {
        let text = "Sure, here is the query:\n```sql\nSELECT a FROM t\n```\nHope that helps.";
        assert_eq!(extract_sql_from_text(text).as_deref(), Some("SELECT a FROM t"));
    }

    #[test]
    fn extracts_bare_fence_without_language() {
        let text = "```\nSELECT 1\n```";
        assert_eq!(extract_sql_from_text(text).as_deref(), Some("SELECT 1"));
    }

    #[test]
    fn extracts_first_select_line() {
        let text = "The answer is below.\nSELECT x FROM y WHERE z = 1\n";
        assert_eq!(
            extract_sql_from_text(text).as_deref(),
            Some("SELECT x FROM y WHERE z = 1")
        );
    }

    #[test]
    fn no_sql_yields_none() {
        assert_eq!(extract_sql_from_text("I cannot answer that."), None);
    }

    #[test]
    fn unreachable_endpoint_yields_failure_marker() {
        let backend = HttpLlmBackend::new(
            "dead",
            LlmEndpoint {
                base_url: "http://127.0.0.1:1".into(),
                model: "none".into(),
                timeout: Duration::from_millis(200),
                retries: 0,
                ..Default::default()
            },
        );
        let req = Text2SqlRequest {
            question: "q".into(),
            schema: super::super::SchemaSummary {
                tables: vec![],
                foreign_keys: vec![],
                domain_description: String::new(),
            },
            schema_text: String::new(),
            schema_fingerprint: String::new(),
            samples: vec![],
        };
        let resp = backend.infer(&req);
        assert!(resp.predicted_sql.is_none());
        assert!(resp.error.is_some());
    }
}
