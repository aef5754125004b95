//! Pluggable Text-to-SQL backends: the request/response contract, a
//! deterministic offline mock, an HTTP chat-completion adapter, and a
//! replayable response cache.

mod cache;
mod http;
mod mock;

pub use cache::{CachedBackend, ResponseCache};
pub use http::{extract_sql_from_text, HttpLlmBackend, LlmEndpoint};
pub use mock::MockBackend;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::ident;
use crate::schema::SchemaModel;
use crate::sqlexec::{ExecutableSchema, SqlValue};

/// Structured schema view handed to backends. Carries only the surface
/// names of the schema being evaluated: refined names visible, original
/// names invisible.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemaSummary {
    pub tables: Vec<TableSummary>,
    /// (child "table.column", parent "table.column") pairs
    pub foreign_keys: Vec<(String, String)>,
    pub domain_description: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableSummary {
    pub name: String,
    pub columns: Vec<ColumnSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub data_type: String,
    pub is_pk: bool,
}

/// Up to `n` sample rows of one table, aligned with its column list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableSamples {
    pub table: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<SqlValue>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Text2SqlRequest {
    pub question: String,
    pub schema: SchemaSummary,
    /// Compact CREATE TABLE-style serialization of `schema`; also the
    /// cache-key fingerprint source.
    pub schema_text: String,
    pub schema_fingerprint: String,
    pub samples: Vec<TableSamples>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Text2SqlResponse {
    pub backend_id: String,
    /// `None` marks inference failure; scored as incorrect, never aborts a
    /// batch.
    pub predicted_sql: Option<String>,
    pub error: Option<String>,
    pub latency_ms: u64,
}

impl Text2SqlResponse {
    pub fn failure(backend_id: &str, error: impl Into<String>) -> Self {
        Text2SqlResponse {
            backend_id: backend_id.to_string(),
            predicted_sql: None,
            error: Some(error.into()),
            latency_ms: 0,
        }
    }
}

pub trait Text2SqlBackend: Send + Sync {
    fn id(&self) -> &str;
    fn infer(&self, req: &Text2SqlRequest) -> Text2SqlResponse;
    /// Pure backends recompute for free and may be invoked during
    /// cached-replay runs; transport-backed ones may not.
    fn is_pure(&self) -> bool {
        false
    }
}

impl<T: Text2SqlBackend + ?Sized> Text2SqlBackend for Arc<T> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn infer(&self, req: &Text2SqlRequest) -> Text2SqlResponse {
        (**self).infer(req)
    }
    fn is_pure(&self) -> bool {
        (**self).is_pure()
    }
}

pub fn summarize_schema(schema: &SchemaModel) -> SchemaSummary {
    SchemaSummary {
        tables: schema
            .tables
            .iter()
            .map(|t| TableSummary {
                name: t.name.clone(),
                columns: t
                    .columns
                    .iter()
                    .map(|c| ColumnSummary {
                        name: c.name.clone(),
                        data_type: c.data_type.clone(),
                        is_pk: c.is_pk,
                    })
                    .collect(),
            })
            .collect(),
        foreign_keys: schema
            .foreign_keys
            .iter()
            .map(|(c, p)| {
                (
                    format!("{}.{}", c.table, c.column),
                    format!("{}.{}", p.table, p.column),
                )
            })
            .collect(),
        domain_description: schema.domain_description.clone(),
    }
}

/// Deterministic CREATE TABLE-style text serialization; one canonical lane
/// for prompts and fingerprints so identical schemas always hash equal.
pub fn serialize_schema_text(schema: &SchemaModel) -> String {
    let mut out = String::new();
    if !schema.domain_description.is_empty() {
        out.push_str(&format!("-- {}\n", schema.domain_description));
    }
    for table in &schema.tables {
        out.push_str(&format!("CREATE TABLE {} (\n", ident::quote_ident(&table.name)));
        let mut lines: Vec<String> = table
            .columns
            .iter()
            .map(|c| {
                let mut line = format!("  {}", ident::quote_ident(&c.name));
                if !c.data_type.is_empty() {
                    line.push_str(&format!(" {}", c.data_type));
                }
                if c.is_pk {
                    line.push_str(" PRIMARY KEY");
                }
                line
            })
            .collect();
        for (child, parent) in &schema.foreign_keys {
            if child.table == ident::ident_key(&table.name) {
                let child_col = schema
                    .column(child)
                    .map(|c| c.name)
                    .unwrap_or_else(|| child.column.clone());
                let parent_col = schema
                    .column(parent)
                    .map(|c| c.name)
                    .unwrap_or_else(|| parent.column.clone());
                lines.push(format!(
                    "  FOREIGN KEY ({}) REFERENCES {}({})",
                    ident::quote_ident(&child_col),
                    ident::quote_ident(&parent.table),
                    ident::quote_ident(&parent_col)
                ));
            }
        }
        out.push_str(&lines.join(",\n"));
        out.push_str("\n);\n");
    }
    out
}

pub fn fingerprint(schema_text: &str) -> String {
    hex::encode(Sha256::digest(schema_text.as_bytes()))
}

/// Number of sample rows included per table in backend requests.
pub const REQUEST_SAMPLE_ROWS: usize = 5;

/// Assemble a request: schema serialization plus per-table sample rows
/// drawn from the evaluated execution context (so a view layer's refined
/// names are what the backend sees).
pub fn build_request_context(
    schema: &SchemaModel,
    exec: &ExecutableSchema,
) -> Result<RequestContext> {
    let schema_text = serialize_schema_text(schema);
    let schema_fingerprint = fingerprint(&schema_text);
    let summary = summarize_schema(schema);
    let mut conn = exec.connect()?;
    let mut samples = Vec::new();
    for table in &schema.tables {
        let rows = conn.sample_rows(&table.name, REQUEST_SAMPLE_ROWS)?;
        samples.push(TableSamples {
            table: table.name.clone(),
            columns: table.columns.iter().map(|c| c.name.clone()).collect(),
            rows,
        });
    }
    Ok(RequestContext {
        schema: summary,
        schema_text,
        schema_fingerprint,
        samples,
    })
}

/// Question-independent part of a request, built once per evaluated schema
/// and shared across a workload.
#[derive(Clone, Debug)]
pub struct RequestContext {
    pub schema: SchemaSummary,
    pub schema_text: String,
    pub schema_fingerprint: String,
    pub samples: Vec<TableSamples>,
}

impl RequestContext {
    pub fn request(&self, question: &str) -> Text2SqlRequest {
        Text2SqlRequest {
            question: question.to_string(),
            schema: self.schema.clone(),
            schema_text: self.schema_text.clone(),
            schema_fingerprint: self.schema_fingerprint.clone(),
            samples: self.samples.clone(),
        }
    }
}

pub fn cache_key(backend_id: &str, req: &Text2SqlRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(backend_id.as_bytes());
    hasher.update([0]);
    hasher.update(req.schema_fingerprint.as_bytes());
    hasher.update([0]);
    hasher.update(req.question.as_bytes());
    hex::encode(hasher.finalize())
}
