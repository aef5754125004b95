//! SQL execution against the base schema or a view layer, result-set
//! comparison, and identifier rewriting under a rename mapping.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rusqlite::types::ValueRef;
use rusqlite::Connection;
use serde::{Deserialize, Serialize};

use crate::error::{RefineError, Result};
use crate::ident;
use crate::schema::{self, ColumnKey, RefinementMapping, SchemaModel};
use crate::token::{self, TableTarget, Token, TokenKind};

/// Result sets larger than this are marked truncated and never compare
/// equal; guards pathological predictions.
pub const ROW_CAP: usize = 100_000;

/// Default per-statement timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Absolute tolerance for numeric cell comparison, applied by bucketing so
/// that equality stays transitive.
pub const NUMERIC_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SqlValue {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl SqlValue {
    fn from_ref(v: ValueRef<'_>) -> SqlValue {
        match v {
            ValueRef::Null => SqlValue::Null,
            ValueRef::Integer(i) => SqlValue::Integer(i),
            ValueRef::Real(f) => SqlValue::Real(f),
            ValueRef::Text(t) => SqlValue::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => SqlValue::Blob(b.to_vec()),
        }
    }

    /// Display rendering used in prompts and sample contexts.
    pub fn render(&self) -> String {
        match self {
            SqlValue::Null => "NULL".to_string(),
            SqlValue::Integer(i) => i.to_string(),
            SqlValue::Real(f) => format!("{f}"),
            SqlValue::Text(t) => t.clone(),
            SqlValue::Blob(b) => format!("x'{}'", hex::encode(b)),
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            SqlValue::Text(t) => Some(t),
            _ => None,
        }
    }
}

/// Comparison key: numerics collapse into 1e-6-wide buckets (integers and
/// reals unified), NULL equals only NULL. Bucketing keeps equality an
/// equivalence relation, unlike raw epsilon comparison.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum CanonCell {
    Null,
    Num(i128),
    NaN,
    PosInf,
    NegInf,
    Text(String),
    Blob(Vec<u8>),
}

fn canon_cell(v: &SqlValue) -> CanonCell {
    match v {
        SqlValue::Null => CanonCell::Null,
        SqlValue::Integer(i) => CanonCell::Num(*i as i128 * 1_000_000),
        SqlValue::Real(f) => {
            if f.is_nan() {
                CanonCell::NaN
            } else if *f == f64::INFINITY {
                CanonCell::PosInf
            } else if *f == f64::NEG_INFINITY {
                CanonCell::NegInf
            } else {
                let scaled = (*f / NUMERIC_TOLERANCE).round();
                if scaled >= i128::MAX as f64 {
                    CanonCell::PosInf
                } else if scaled <= i128::MIN as f64 {
                    CanonCell::NegInf
                } else {
                    CanonCell::Num(scaled as i128)
                }
            }
        }
        SqlValue::Text(t) => CanonCell::Text(t.clone()),
        SqlValue::Blob(b) => CanonCell::Blob(b.clone()),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultSet {
    pub column_count: usize,
    pub rows: Vec<Vec<SqlValue>>,
    /// True iff the producing query had a top-level ORDER BY.
    pub ordered: bool,
    /// True when the row cap was hit; truncated sets never compare equal.
    pub truncated: bool,
}

impl ResultSet {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }
}

/// Row comparison: sequence equality when either side is ordered, multiset
/// equality otherwise; cells compared through tolerance buckets.
pub fn results_equal(a: &ResultSet, b: &ResultSet) -> bool {
    if a.truncated || b.truncated {
        return false;
    }
    if a.column_count != b.column_count || a.rows.len() != b.rows.len() {
        return false;
    }
    let canon =
        |rs: &ResultSet| -> Vec<Vec<CanonCell>> { rs.rows.iter().map(|r| r.iter().map(canon_cell).collect()).collect() };
    let mut ca = canon(a);
    let mut cb = canon(b);
    if !(a.ordered || b.ordered) {
        ca.sort();
        cb.sort();
    }
    ca == cb
}

/// Where SQL statements execute: the base database file, optionally viewed
/// through a rename layer. The layer is a list of CREATE VIEW statements
/// instantiated as TEMP views on every connection, shadowing the base
/// tables under their original names while exposing refined column names.
/// The base file is always opened read-only.
#[derive(Clone, Debug)]
pub struct ExecutableSchema {
    pub db_path: PathBuf,
    view_ddl: Option<Arc<Vec<String>>>,
}

impl ExecutableSchema {
    pub fn base(db_path: impl Into<PathBuf>) -> Self {
        ExecutableSchema {
            db_path: db_path.into(),
            view_ddl: None,
        }
    }

    pub fn with_view_ddl(db_path: impl Into<PathBuf>, ddl: Vec<String>) -> Self {
        ExecutableSchema {
            db_path: db_path.into(),
            view_ddl: Some(Arc::new(ddl)),
        }
    }

    pub fn has_view_layer(&self) -> bool {
        self.view_ddl.is_some()
    }

    pub fn view_ddl(&self) -> Option<&[String]> {
        self.view_ddl.as_ref().map(|d| d.as_slice())
    }

    /// Open a dedicated connection; each concurrent worker owns its own.
    pub fn connect(&self) -> Result<ExecConn> {
        let conn = schema::open_read_only(&self.db_path)?;
        if let Some(ddl) = &self.view_ddl {
            for stmt in ddl.iter() {
                let temp_stmt = as_temp_view(stmt);
                conn.execute_batch(&temp_stmt)
                    .map_err(|source| RefineError::ViewDdl {
                        statement: stmt.clone(),
                        source,
                    })?;
            }
        }
        Ok(ExecConn { conn })
    }
}

/// Instantiate persistent-form view DDL as a TEMP view. SQLite only allows
/// cross-schema references from TEMP views, so the portable `CREATE VIEW`
/// artifact is rewritten on instantiation.
fn as_temp_view(stmt: &str) -> String {
    let trimmed = stmt.trim_start();
    if trimmed.len() >= 11 && trimmed[..11].eq_ignore_ascii_case("create view") {
        format!("CREATE TEMP VIEW{}", &trimmed[11..])
    } else {
        stmt.to_string()
    }
}

pub struct ExecConn {
    conn: Connection,
}

impl ExecConn {
    /// Execute a read-only statement and collect its result set.
    pub fn run(&mut self, sql: &str, timeout: Duration) -> Result<ResultSet> {
        let tokens = token::tokenize(sql)?;
        let first = token::first_significant(sql, &tokens).unwrap_or("");
        if !(first.eq_ignore_ascii_case("select") || first.eq_ignore_ascii_case("with")) {
            return Err(RefineError::NotReadOnly(first.to_string()));
        }
        let ordered = token::has_toplevel_order_by(sql, &tokens);

        let deadline = Instant::now() + timeout;
        self.conn.progress_handler(
            5_000,
            Some(move || Instant::now() > deadline),
        );
        let result = self.collect_rows(sql, ordered);
        self.conn.progress_handler(5_000, None::<fn() -> bool>);
        match result {
            Err(RefineError::Sql(rusqlite::Error::SqliteFailure(e, _)))
                if e.code == rusqlite::ErrorCode::OperationInterrupted =>
            {
                Err(RefineError::Timeout(timeout))
            }
            other => other,
        }
    }

    fn collect_rows(&self, sql: &str, ordered: bool) -> Result<ResultSet> {
        let mut stmt = self.conn.prepare(sql)?;
        let column_count = stmt.column_count();
        let mut rows = stmt.query([])?;
        let mut out: Vec<Vec<SqlValue>> = Vec::new();
        let mut truncated = false;
        while let Some(row) = rows.next()? {
            if out.len() >= ROW_CAP {
                truncated = true;
                break;
            }
            let mut vals = Vec::with_capacity(column_count);
            for i in 0..column_count {
                vals.push(SqlValue::from_ref(row.get_ref(i)?));
            }
            out.push(vals);
        }
        Ok(ResultSet {
            column_count,
            rows: out,
            ordered,
            truncated,
        })
    }

    /// First `limit` rows of a table (or view) in base scan order.
    pub fn sample_rows(&mut self, table: &str, limit: usize) -> Result<Vec<Vec<SqlValue>>> {
        let sql = format!("SELECT * FROM {} LIMIT {limit}", ident::quote_ident(table));
        Ok(self.run(&sql, DEFAULT_TIMEOUT)?.rows)
    }

    /// First-seen distinct non-NULL values of a column, capped at `limit`;
    /// falls back to fewer values when the column has fewer distinct ones.
    pub fn distinct_values(&mut self, table: &str, column: &str, limit: usize) -> Result<Vec<SqlValue>> {
        let sql = format!(
            "SELECT {col} FROM {tab}",
            col = ident::quote_ident(column),
            tab = ident::quote_ident(table)
        );
        let rows = self.run(&sql, DEFAULT_TIMEOUT)?.rows;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for row in rows {
            let v = &row[0];
            if matches!(v, SqlValue::Null) {
                continue;
            }
            if seen.insert(canon_cell(v)) {
                out.push(v.clone());
                if out.len() >= limit {
                    break;
                }
            }
        }
        Ok(out)
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }
}

/// Convenience single-shot execution.
pub fn execute(exec: &ExecutableSchema, sql: &str, timeout: Duration) -> Result<ResultSet> {
    exec.connect()?.run(sql, timeout)
}

/// One identifier occurrence resolved against the schema.
#[derive(Clone, Debug)]
pub struct ColumnResolution {
    pub token_idx: usize,
    pub offset: usize,
    /// Name as written (unquoted form).
    pub name: String,
    /// Schema columns the occurrence may refer to. More than one entry
    /// means an over-approximated unqualified reference.
    pub candidates: Vec<ColumnKey>,
    pub qualified: bool,
}

/// Column keys contributed by `*` / `t.*` select items.
#[derive(Clone, Debug, Default)]
pub struct StarExpansion {
    pub columns: Vec<ColumnKey>,
}

/// Resolve every column-like identifier in `sql` against the schema, using
/// the statement's FROM/JOIN tables for alias and unqualified-name
/// resolution. String literals and comments never participate.
pub fn resolve_columns(
    sql: &str,
    tokens: &[Token],
    scan: &token::FromScan,
    schema: &SchemaModel,
) -> Vec<ColumnResolution> {
    let sig = token::significant_indices(tokens);
    let mut out = Vec::new();

    let in_scope_tables: Vec<String> = scan
        .tables
        .iter()
        .filter(|t| schema.table(t).is_some())
        .cloned()
        .collect();

    for (pos, &ti) in sig.iter().enumerate() {
        let tok = &tokens[ti];
        if tok.kind != TokenKind::Ident && tok.kind != TokenKind::QuotedIdent {
            continue;
        }
        if scan.ref_tokens.contains(&ti) {
            continue; // table name or alias, not a column
        }
        let Some(name) = tok.ident_text(sql) else {
            continue;
        };
        if tok.kind == TokenKind::Ident && ident::is_keyword(&name) {
            continue;
        }
        let next = sig.get(pos + 1).map(|&i| &tokens[i]);
        if next.is_some_and(|n| n.is_punct(sql, "(")) {
            continue; // function call
        }
        if next.is_some_and(|n| n.is_punct(sql, ".")) {
            continue; // qualifier; the member token carries the reference
        }
        let prev = if pos > 0 { Some(&tokens[sig[pos - 1]]) } else { None };
        if prev.is_some_and(|p| p.is_kw(sql, "as")) {
            continue; // output alias or CAST target
        }

        if prev.is_some_and(|p| p.is_punct(sql, ".")) {
            // qualified reference: qualifier . member
            if pos < 2 {
                continue;
            }
            let qual_tok = &tokens[sig[pos - 2]];
            let Some(qualifier) = qual_tok.ident_text(sql) else {
                continue;
            };
            let target = scan.resolve(&qualifier);
            let table = match target {
                Some(TableTarget::Base(t)) => t.clone(),
                Some(TableTarget::Derived) => continue,
                // Unknown qualifier: fall back to a direct table-name match
                // so `db.table.col` and unlisted qualifiers still resolve.
                None => ident::ident_key(&qualifier),
            };
            let key = ColumnKey::new(&table, &name);
            if schema.contains(&key) {
                out.push(ColumnResolution {
                    token_idx: ti,
                    offset: tok.start,
                    name: name.into_owned(),
                    candidates: vec![key],
                    qualified: true,
                });
            }
            continue;
        }

        // Unqualified: match against every in-scope table.
        let mut candidates = Vec::new();
        for table in &in_scope_tables {
            let key = ColumnKey::new(table, &name);
            if schema.contains(&key) {
                candidates.push(key);
            }
        }
        if !candidates.is_empty() {
            out.push(ColumnResolution {
                token_idx: ti,
                offset: tok.start,
                name: name.into_owned(),
                candidates,
                qualified: false,
            });
        }
    }
    out
}

/// Expand `*` and `t.*` select items into schema columns.
pub fn star_expansions(
    sql: &str,
    tokens: &[Token],
    scan: &token::FromScan,
    schema: &SchemaModel,
) -> StarExpansion {
    let sig = token::significant_indices(tokens);
    let mut out = StarExpansion::default();
    let mut expand_table = |table: &str| {
        if let Some(t) = schema.table(table) {
            for col in &t.columns {
                out.columns.push(ColumnKey::new(&t.name, &col.name));
            }
        }
    };
    for (pos, &ti) in sig.iter().enumerate() {
        if !tokens[ti].is_punct(sql, "*") {
            continue;
        }
        let prev = if pos > 0 { Some(&tokens[sig[pos - 1]]) } else { None };
        if prev.is_some_and(|p| p.is_punct(sql, ".")) {
            // t.* — expand that table only
            if pos >= 2 {
                if let Some(q) = tokens[sig[pos - 2]].ident_text(sql) {
                    match scan.resolve(&q) {
                        Some(TableTarget::Base(t)) => expand_table(&t.clone()),
                        _ => {}
                    }
                }
            }
            continue;
        }
        // bare * directly after SELECT or a comma is a star select item;
        // `count(*)` has '(' before it and is skipped.
        let is_select_star = prev
            .map(|p| p.is_kw(sql, "select") || p.is_punct(sql, ","))
            .unwrap_or(false);
        if is_select_star {
            for table in scan.tables.clone() {
                expand_table(&table);
            }
        }
    }
    out
}

/// Rewrite every identifier that resolves to a renamed column. Aliases are
/// resolved through the FROM/JOIN clauses; literals and comments pass
/// through untouched. The identity mapping yields byte-identical output.
pub fn rewrite_identifiers(
    sql: &str,
    mapping: &RefinementMapping,
    schema: &SchemaModel,
) -> Result<String> {
    let tokens = token::tokenize(sql)?;
    let scan = token::scan_from(sql, &tokens);
    let resolutions = resolve_columns(sql, &tokens, &scan, schema);

    let mut replacements: Vec<(usize, String)> = Vec::new(); // token idx -> new text
    for res in &resolutions {
        let finals: Vec<String> = res
            .candidates
            .iter()
            .map(|key| {
                mapping
                    .final_name(schema, key)
                    .expect("resolved column exists")
            })
            .collect();
        let changed: Vec<&String> = finals
            .iter()
            .filter(|f| !ident::ident_eq(f, &res.name))
            .collect();
        if changed.is_empty() {
            continue;
        }
        let all_same = finals
            .windows(2)
            .all(|w| ident::ident_eq(&w[0], &w[1]));
        if !all_same {
            return Err(RefineError::AmbiguousRewrite {
                name: res.name.clone(),
                offset: res.offset,
                detail: format!(
                    "candidates map to conflicting names: {}",
                    finals.join(", ")
                ),
            });
        }
        let new_name = finals[0].clone();
        let was_quoted = tokens[res.token_idx].kind == TokenKind::QuotedIdent;
        let rendered = if was_quoted {
            format!("\"{}\"", new_name.replace('"', "\"\""))
        } else {
            ident::quote_ident(&new_name)
        };
        replacements.push((res.token_idx, rendered));
    }

    if replacements.is_empty() {
        return Ok(sql.to_string());
    }
    replacements.sort_by_key(|(idx, _)| *idx);
    let mut out = String::with_capacity(sql.len() + 32);
    let mut cursor = 0;
    for (idx, text) in replacements {
        let tok = &tokens[idx];
        out.push_str(&sql[cursor..tok.start]);
        out.push_str(&text);
        cursor = tok.end;
    }
    out.push_str(&sql[cursor..]);
    Ok(out)
}

/// Hash a file's bytes; used for the non-destructiveness guarantee.
pub fn file_sha256(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|e| RefineError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::schema::load_schema;

    fn tiny() -> (tempfile::TempDir, ExecutableSchema, SchemaModel) {
        let dir = tempfile::tempdir().unwrap();
        let (db, _) = fixtures::tiny_company_degraded(dir.path()).unwrap();
        let schema = load_schema(&db, fixtures::TINY_COMPANY_DOMAIN).unwrap();
        (dir, ExecutableSchema::base(db), schema)
    }

    #[test]
    fn count_employees() {
        let (_d, exec, _) = tiny();
        let rs = execute(&exec, "SELECT COUNT(*) FROM employee", DEFAULT_TIMEOUT).unwrap();
        assert_eq!(rs.rows, vec![vec![SqlValue::Integer(4)]]);
        assert!(!rs.ordered);
    }

    #[test]
    fn empty_result() {
        let (_d, exec, _) = tiny();
        let rs = execute(&exec, "SELECT 1 WHERE 0", DEFAULT_TIMEOUT).unwrap();
        assert!(rs.rows.is_empty());
        assert_eq!(rs.column_count, 1);
    }

    #[test]
    fn mutating_statement_rejected() {
        let (_d, exec, _) = tiny();
        let err = execute(&exec, "DROP TABLE employee", DEFAULT_TIMEOUT).unwrap_err();
        assert!(matches!(err, RefineError::NotReadOnly(_)));
        // still there
        let rs = execute(&exec, "SELECT COUNT(*) FROM employee", DEFAULT_TIMEOUT).unwrap();
        assert_eq!(rs.rows[0][0], SqlValue::Integer(4));
    }

    #[test]
    fn missing_column_is_sql_error() {
        let (_d, exec, _) = tiny();
        assert!(matches!(
            execute(&exec, "SELECT ghost FROM employee", DEFAULT_TIMEOUT),
            Err(RefineError::Sql(_))
        ));
    }

    #[test]
    fn runaway_query_times_out() {
        let (_d, exec, _) = tiny();
        let err = execute(
            &exec,
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c) \
             SELECT count(*) FROM c",
            Duration::from_millis(100),
        )
        .unwrap_err();
        assert!(matches!(err, RefineError::Timeout(_)));
    }

    #[test]
    fn row_cap_marks_truncated() {
        let (_d, exec, _) = tiny();
        let sql = format!(
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c LIMIT {}) \
             SELECT x FROM c",
            ROW_CAP + 10
        );
        let rs = execute(&exec, &sql, DEFAULT_TIMEOUT).unwrap();
        assert!(rs.truncated);
        assert_eq!(rs.rows.len(), ROW_CAP);
        assert!(!results_equal(&rs, &rs));
    }

    fn rs(rows: Vec<Vec<SqlValue>>, ordered: bool) -> ResultSet {
        ResultSet {
            column_count: rows.first().map(|r| r.len()).unwrap_or(0),
            rows,
            ordered,
            truncated: false,
        }
    }

    #[test]
    fn unordered_comparison_is_multiset() {
        use SqlValue::*;
        let a = rs(
            vec![
                vec![Integer(1), Text("a".into())],
                vec![Integer(2), Text("b".into())],
            ],
            false,
        );
        let b = rs(
            vec![
                vec![Integer(2), Text("b".into())],
                vec![Integer(1), Text("a".into())],
            ],
            false,
        );
        assert!(results_equal(&a, &b));
    }

    #[test]
    fn ordered_side_forces_sequence_comparison() {
        use SqlValue::*;
        let a = rs(vec![vec![Integer(1)], vec![Integer(2)]], true);
        let b = rs(vec![vec![Integer(2)], vec![Integer(1)]], false);
        assert!(!results_equal(&a, &b));
    }

    #[test]
    fn numeric_tolerance_and_type_coercion() {
        use SqlValue::*;
        let a = rs(vec![vec![Real(0.30000000001)]], false);
        let b = rs(vec![vec![Real(0.3)]], false);
        assert!(results_equal(&a, &b));
        // integer 4 equals real 4.0
        let c = rs(vec![vec![Integer(4)]], false);
        let d = rs(vec![vec![Real(4.0)]], false);
        assert!(results_equal(&c, &d));
        // NULL equals only NULL
        let e = rs(vec![vec![Null]], false);
        let f = rs(vec![vec![Integer(0)]], false);
        assert!(!results_equal(&e, &f));
        assert!(results_equal(&e, &e));
    }

    fn nm_mapping() -> RefinementMapping {
        RefinementMapping::from_entries([(
            ColumnKey::new("employee", "nm"),
            "employee_name".to_string(),
        )])
    }

    #[test]
    fn rewrite_unqualified_column() {
        let (_d, _exec, schema) = tiny();
        let out = rewrite_identifiers("SELECT nm FROM employee", &nm_mapping(), &schema).unwrap();
        assert_eq!(out, "SELECT employee_name FROM employee");
    }

    #[test]
    fn rewrite_leaves_string_literals() {
        let (_d, _exec, schema) = tiny();
        let out =
            rewrite_identifiers("SELECT 'nm' FROM employee", &nm_mapping(), &schema).unwrap();
        assert_eq!(out, "SELECT 'nm' FROM employee");
    }

    #[test]
    fn rewrite_identity_is_byte_identical() {
        let (_d, _exec, schema) = tiny();
        let sql = "SELECT  e.nm , d.dept_nm FROM employee e JOIN department d ON e.dept_id=d.dept_id -- note";
        let out = rewrite_identifiers(sql, &RefinementMapping::identity(), &schema).unwrap();
        assert_eq!(out, sql);
    }

    #[test]
    fn rewrite_alias_qualified_references() {
        let (_d, _exec, schema) = tiny();
        let mapping = RefinementMapping::from_entries([
            (ColumnKey::new("employee", "nm"), "employee_name".to_string()),
            (
                ColumnKey::new("department", "dept_nm"),
                "department_name".to_string(),
            ),
        ]);
        let sql = "SELECT e.nm, d.dept_nm FROM employee e JOIN department AS d ON e.dept_id = d.dept_id WHERE e.nm = 'nm'";
        let out = rewrite_identifiers(sql, &mapping, &schema).unwrap();
        assert_eq!(
            out,
            "SELECT e.employee_name, d.department_name FROM employee e JOIN department AS d ON e.dept_id = d.dept_id WHERE e.employee_name = 'nm'"
        );
    }

    #[test]
    fn rewrite_round_trip_restores_input() {
        let (_d, _exec, schema) = tiny();
        let mapping = RefinementMapping::from_entries([
            (ColumnKey::new("employee", "nm"), "employee_name".to_string()),
            (ColumnKey::new("employee", "sal"), "salary".to_string()),
            (
                ColumnKey::new("department", "dept_nm"),
                "department_name".to_string(),
            ),
        ]);
        let corpus = [
            "SELECT nm FROM employee",
            "SELECT sal FROM employee WHERE nm = 'Alice'",
            "SELECT COUNT(*) FROM employee",
            "SELECT dept_nm FROM department",
            "SELECT nm, sal FROM employee",
            "SELECT COUNT(*) FROM department WHERE dept_nm = 'Sales'",
            "SELECT e.nm FROM employee e ORDER BY e.sal DESC LIMIT 2",
        ];
        let renamed_schema = schema.apply_mapping(&mapping).unwrap();
        let inverse = mapping.inverse(&schema).unwrap();
        for sql in corpus {
            let fwd = rewrite_identifiers(sql, &mapping, &schema).unwrap();
            let back = rewrite_identifiers(&fwd, &inverse, &renamed_schema).unwrap();
            assert_eq!(back, sql, "round trip failed for {sql}");
        }
    }

    #[test]
    fn rewrite_conflicting_resolution_errors() {
        // Unqualified token matches a renamed column in one table and an
        // identically named, unrenamed column in another in-scope table.
        let dir = tempfile::tempdir().unwrap();
        let db = dir.path().join("amb.sqlite");
        fixtures::build_db(
            &db,
            "CREATE TABLE a (code TEXT, x INTEGER);
             CREATE TABLE b (code TEXT, y INTEGER);",
        )
        .unwrap();
        let schema = load_schema(&db, "").unwrap();
        let mapping = RefinementMapping::from_entries([(
            ColumnKey::new("a", "code"),
            "region_code".to_string(),
        )]);
        let err = rewrite_identifiers("SELECT code FROM a, b", &mapping, &schema).unwrap_err();
        assert!(matches!(err, RefineError::AmbiguousRewrite { .. }));
    }

    #[test]
    fn view_layer_executes_renamed_names() {
        let (_d, exec, _schema) = tiny();
        let ddl = vec![
            "CREATE VIEW department AS SELECT dept_id AS dept_id, dept_nm AS department_name FROM main.department;".to_string(),
            "CREATE VIEW employee AS SELECT emp_id AS emp_id, nm AS employee_name, sal AS salary, dept_id AS dept_id FROM main.employee;".to_string(),
        ];
        let viewed = ExecutableSchema::with_view_ddl(exec.db_path.clone(), ddl);
        let rs = execute(
            &viewed,
            "SELECT employee_name FROM employee WHERE salary > 70000",
            DEFAULT_TIMEOUT,
        )
        .unwrap();
        assert_eq!(rs.rows.len(), 2);
        // base names are shadowed away
        assert!(execute(&viewed, "SELECT nm FROM employee", DEFAULT_TIMEOUT).is_err());
    }
}
