//! Deterministic offline Text-to-SQL stand-in. Predicts by lexical matching
//! between question tokens and schema names, which makes its accuracy
//! directly sensitive to how informative the column names are — opaque
//! names break the match, refined names restore it.

use std::time::Instant;

use crate::ident;

use super::{TableSamples, Text2SqlBackend, Text2SqlRequest, Text2SqlResponse};

pub struct MockBackend {
    id: String,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend { id: "mock".into() }
    }
}

impl MockBackend {
    pub fn new(id: impl Into<String>) -> Self {
        MockBackend { id: id.into() }
    }
}

fn question_tokens(question: &str) -> Vec<String> {
    question
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_ascii_lowercase())
        .collect()
}

/// Token match with a naive plural rule: `employees` matches `employee`.
fn word_match(a: &str, b: &str) -> bool {
    a == b || format!("{a}s") == b || format!("{b}s") == a
}

fn name_words(name: &str) -> Vec<String> {
    name.split('_')
        .filter(|s| !s.is_empty())
        .map(|s| s.to_ascii_lowercase())
        .collect()
}

/// Fraction of the column's underscore-separated words present in the
/// question.
fn column_score(col_name: &str, qtokens: &[String]) -> f64 {
    let words = name_words(col_name);
    if words.is_empty() {
        return 0.0;
    }
    let hit = words
        .iter()
        .filter(|w| qtokens.iter().any(|t| word_match(t, w)))
        .count();
    hit as f64 / words.len() as f64
}

fn sql_quote_literal(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// First (question token, text sample value) equality within the chosen
/// table, scanning tokens then columns then rows in order.
fn find_value_filter<'a>(
    samples: Option<&'a TableSamples>,
    qtokens: &[String],
) -> Option<(&'a str, String)> {
    let samples = samples?;
    for token in qtokens {
        for (ci, col) in samples.columns.iter().enumerate() {
            for row in &samples.rows {
                if let Some(text) = row.get(ci).and_then(|v| v.as_text()) {
                    if text.to_ascii_lowercase() == *token {
                        return Some((col.as_str(), text.to_string()));
                    }
                }
            }
        }
    }
    None
}

impl Text2SqlBackend for MockBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn is_pure(&self) -> bool {
        true
    }

    fn infer(&self, req: &Text2SqlRequest) -> Text2SqlResponse {
        let started = Instant::now();
        let qtokens = question_tokens(&req.question);
        let tables = &req.schema.tables;
        if tables.is_empty() {
            return Text2SqlResponse::failure(&self.id, "empty schema");
        }

        let sql = if qtokens.is_empty() {
            format!("SELECT * FROM {}", ident::quote_ident(&tables[0].name))
        } else {
            // score tables: summed column scores plus one point when the
            // table name itself appears in the question
            let mut best_idx = 0usize;
            let mut best_score = f64::MIN;
            let mut col_scores: Vec<Vec<f64>> = Vec::with_capacity(tables.len());
            for (ti, table) in tables.iter().enumerate() {
                let scores: Vec<f64> = table
                    .columns
                    .iter()
                    .map(|c| column_score(&c.name, &qtokens))
                    .collect();
                let tname = table.name.to_ascii_lowercase();
                let name_hit = qtokens.iter().any(|t| word_match(t, &tname));
                let total: f64 =
                    scores.iter().sum::<f64>() + if name_hit { 1.0 } else { 0.0 };
                if total > best_score {
                    best_score = total;
                    best_idx = ti;
                }
                col_scores.push(scores);
            }

            let table = &tables[best_idx];
            let quoted_table = ident::quote_ident(&table.name);
            let samples = req.samples.iter().find(|s| {
                ident::ident_eq(&s.table, &table.name)
            });
            let filter = find_value_filter(samples, &qtokens)
                .map(|(col, val)| {
                    format!(" WHERE {} = {}", ident::quote_ident(col), sql_quote_literal(&val))
                })
                .unwrap_or_default();

            let is_count = req.question.trim().to_ascii_lowercase().starts_with("how many");
            if is_count {
                format!("SELECT COUNT(*) FROM {quoted_table}{filter}")
            } else {
                let scores = &col_scores[best_idx];
                let max = scores.iter().cloned().fold(0.0f64, f64::max);
                if max > 0.0 {
                    let cols: Vec<String> = table
                        .columns
                        .iter()
                        .zip(scores)
                        .filter(|(_, s)| **s == max)
                        .map(|(c, _)| ident::quote_ident(&c.name))
                        .collect();
                    format!("SELECT {} FROM {quoted_table}{filter}", cols.join(", "))
                } else {
                    format!("SELECT * FROM {quoted_table}{filter}")
                }
            }
        };

        Text2SqlResponse {
            backend_id: self.id.clone(),
            predicted_sql: Some(sql),
            error: None,
            latency_ms: started.elapsed().as_millis() as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::build_request_context;
    use crate::fixtures;
    use crate::schema::load_schema;
    use crate::sqlexec::ExecutableSchema;

    fn degraded_ctx() -> (tempfile::TempDir, crate::backends::RequestContext) {
        let dir = tempfile::tempdir().unwrap();
        let (db, _) = fixtures::tiny_company_degraded(dir.path()).unwrap();
        let schema = load_schema(&db, fixtures::TINY_COMPANY_DOMAIN).unwrap();
        let ctx = build_request_context(&schema, &ExecutableSchema::base(&db)).unwrap();
        (dir, ctx)
    }

    fn clean_ctx() -> (tempfile::TempDir, crate::backends::RequestContext) {
        let dir = tempfile::tempdir().unwrap();
        let (db, _) = fixtures::tiny_company_clean(dir.path()).unwrap();
        let schema = load_schema(&db, fixtures::TINY_COMPANY_DOMAIN).unwrap();
        let ctx = build_request_context(&schema, &ExecutableSchema::base(&db)).unwrap();
        (dir, ctx)
    }

    fn predict(ctx: &crate::backends::RequestContext, q: &str) -> String {
        MockBackend::default()
            .infer(&ctx.request(q))
            .predicted_sql
            .unwrap()
    }

    #[test]
    fn clean_names_match_question_words() {
        let (_d, ctx) = clean_ctx();
        assert_eq!(
            predict(&ctx, "what is the name of each employee"),
            "SELECT employee_name FROM employee"
        );
    }

    #[test]
    fn degraded_names_break_the_match() {
        let (_d, ctx) = degraded_ctx();
        // `nm` shares no word with the question; the matcher falls back to
        // a star select over the name-matched table.
        assert_eq!(
            predict(&ctx, "what is the name of each employee"),
            "SELECT * FROM employee"
        );
    }

    #[test]
    fn how_many_prefix_emits_count() {
        let (_d, ctx) = degraded_ctx();
        assert_eq!(
            predict(&ctx, "how many employees are there"),
            "SELECT COUNT(*) FROM employee"
        );
    }

    #[test]
    fn sampled_value_becomes_equality_filter() {
        let (_d, ctx) = degraded_ctx();
        assert_eq!(
            predict(&ctx, "how many departments are named Sales"),
            "SELECT COUNT(*) FROM department WHERE dept_nm = 'Sales'"
        );
    }

    #[test]
    fn empty_question_falls_back_to_first_table() {
        let (_d, ctx) = degraded_ctx();
        assert_eq!(predict(&ctx, ""), "SELECT * FROM department");
    }

    #[test]
    fn deterministic_output() {
        let (_d, ctx) = degraded_ctx();
        let a = predict(&ctx, "what is the salary of Alice");
        let b = predict(&ctx, "what is the salary of Alice");
        assert_eq!(a, b);
    }
}
