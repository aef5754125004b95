//! SQL identifier rules: validity, case-insensitive comparison, quoting.
//!
//! Identifier comparison is case-insensitive (matching SQLite semantics for
//! ASCII names); original casing is preserved everywhere it is displayed.

/// Reserved words that force quoting when used as an emitted identifier.
/// Subset of the SQLite keyword list covering everything a tokenizer must
/// not mistake for a column reference.
pub const SQL_KEYWORDS: &[&str] = &[
    "abort", "action", "add", "after", "all", "alter", "analyze", "and", "as", "asc", "attach",
    "autoincrement", "before", "begin", "between", "by", "cascade", "case", "cast", "check",
    "collate", "column", "commit", "conflict", "constraint", "create", "cross", "current",
    "current_date", "current_time", "current_timestamp", "database", "default", "deferrable",
    "deferred", "delete", "desc", "detach", "distinct", "do", "drop", "each", "else", "end",
    "escape", "except", "exclude", "exclusive", "exists", "explain", "fail", "filter", "first",
    "following", "for", "foreign", "from", "full", "glob", "group", "groups", "having", "if",
    "ignore", "immediate", "in", "index", "indexed", "initially", "inner", "insert", "instead",
    "intersect", "into", "is", "isnull", "join", "key", "last", "left", "like", "limit", "match",
    "natural", "no", "not", "nothing", "notnull", "null", "nulls", "of", "offset", "on", "or",
    "order", "others", "outer", "over", "partition", "plan", "pragma", "preceding", "primary",
    "query", "raise", "range", "recursive", "references", "regexp", "reindex", "release",
    "rename", "replace", "restrict", "right", "rollback", "row", "rows", "savepoint", "select",
    "set", "table", "temp", "temporary", "then", "ties", "to", "transaction", "trigger",
    "unbounded", "union", "unique", "update", "using", "vacuum", "values", "view", "virtual",
    "when", "where", "window", "with", "without",
];

/// True for `[A-Za-z_][A-Za-z0-9_]*`. Anything else must be double-quoted
/// when emitted in DDL.
pub fn is_plain_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn is_keyword(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    SQL_KEYWORDS.binary_search(&lower.as_str()).is_ok()
}

/// A name is usable as a refinement target when it is a plain identifier;
/// keywords are allowed but will be emitted quoted.
pub fn is_valid_new_name(name: &str) -> bool {
    is_plain_identifier(name)
}

/// Case-insensitive identifier equality (ASCII folding).
pub fn ident_eq(a: &str, b: &str) -> bool {
    a.eq_ignore_ascii_case(b)
}

pub fn ident_key(name: &str) -> String {
    name.to_ascii_lowercase()
}

/// Quote an identifier for emission: plain non-keyword names pass through,
/// everything else is double-quoted with internal quotes doubled.
pub fn quote_ident(name: &str) -> String {
    if is_plain_identifier(name) && !is_keyword(name) {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_table_is_sorted() {
        let mut sorted = SQL_KEYWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, SQL_KEYWORDS, "binary_search requires sorted list");
    }

    #[test]
    fn plain_identifiers() {
        assert!(is_plain_identifier("employee_name"));
        assert!(is_plain_identifier("_x9"));
        assert!(!is_plain_identifier(""));
        assert!(!is_plain_identifier("9lives"));
        assert!(!is_plain_identifier("has space"));
        assert!(!is_plain_identifier("dash-ed"));
    }

    #[test]
    fn quoting() {
        assert_eq!(quote_ident("salary"), "salary");
        assert_eq!(quote_ident("order"), "\"order\"");
        assert_eq!(quote_ident("odd name"), "\"odd name\"");
        assert_eq!(quote_ident("has\"quote"), "\"has\"\"quote\"");
    }

    #[test]
    fn case_insensitive_eq() {
        assert!(ident_eq("Dept_ID", "dept_id"));
        assert!(!ident_eq("dept_id", "dept_no"));
    }
}
