//! Minimal SQL tokenizer: a quote/comment state machine producing byte-span
//! tokens. Built for identifier extraction and rewriting against a known
//! schema vocabulary, not for full SQL parsing.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};

use crate::error::{RefineError, Result};
use crate::ident;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    /// Bare identifier or keyword.
    Ident,
    /// `"..."`, `` `...` `` or `[...]` quoted identifier.
    QuotedIdent,
    /// `'...'` string literal.
    StringLit,
    /// Numeric literal.
    Number,
    /// Operator or punctuation character(s).
    Punct,
    Comment,
    Whitespace,
}

#[derive(Clone, Copy, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, sql: &'a str) -> &'a str {
        &sql[self.start..self.end]
    }

    /// Identifier content with quoting stripped; `None` for non-identifiers.
    pub fn ident_text<'a>(&self, sql: &'a str) -> Option<Cow<'a, str>> {
        let raw = self.text(sql);
        match self.kind {
            TokenKind::Ident => Some(Cow::Borrowed(raw)),
            TokenKind::QuotedIdent => {
                let inner = &raw[1..raw.len() - 1];
                match raw.as_bytes()[0] {
                    b'"' => Some(Cow::Owned(inner.replace("\"\"", "\""))),
                    b'`' => Some(Cow::Owned(inner.replace("``", "`"))),
                    _ => Some(Cow::Borrowed(inner)), // [brackets]
                }
            }
            _ => None,
        }
    }

    pub fn is_kw(&self, sql: &str, kw: &str) -> bool {
        self.kind == TokenKind::Ident && self.text(sql).eq_ignore_ascii_case(kw)
    }

    pub fn is_punct(&self, sql: &str, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text(sql) == p
    }
}

pub fn tokenize(sql: &str) -> Result<Vec<Token>> {
    let bytes = sql.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let b = bytes[i];
        let kind = match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                TokenKind::Whitespace
            }
            b'\'' => {
                i = scan_quoted(bytes, i, b'\'', "string literal")?;
                TokenKind::StringLit
            }
            b'"' => {
                i = scan_quoted(bytes, i, b'"', "quoted identifier")?;
                TokenKind::QuotedIdent
            }
            b'`' => {
                i = scan_quoted(bytes, i, b'`', "quoted identifier")?;
                TokenKind::QuotedIdent
            }
            b'[' => {
                i += 1;
                while i < bytes.len() && bytes[i] != b']' {
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(unterminated("bracketed identifier", start));
                }
                i += 1;
                TokenKind::QuotedIdent
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                TokenKind::Comment
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                i += 2;
                loop {
                    if i + 1 >= bytes.len() {
                        return Err(unterminated("block comment", start));
                    }
                    if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                        i += 2;
                        break;
                    }
                    i += 1;
                }
                TokenKind::Comment
            }
            b'0'..=b'9' => {
                i = scan_number(bytes, i);
                TokenKind::Number
            }
            b'.' if bytes.get(i + 1).is_some_and(|c| c.is_ascii_digit()) => {
                i = scan_number(bytes, i);
                TokenKind::Number
            }
            _ if b.is_ascii_alphabetic() || b == b'_' || b >= 0x80 => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric()
                        || bytes[i] == b'_'
                        || bytes[i] == b'$'
                        || bytes[i] >= 0x80)
                {
                    i += 1;
                }
                TokenKind::Ident
            }
            _ => {
                // Multi-char operators kept whole so '.' stays separable.
                let two = bytes.get(i + 1).map(|&n| (b, n));
                i += match two {
                    Some((b'<', b'=')) | Some((b'>', b'=')) | Some((b'<', b'>'))
                    | Some((b'!', b'=')) | Some((b'|', b'|')) | Some((b'<', b'<'))
                    | Some((b'>', b'>')) => 2,
                    _ => 1,
                };
                TokenKind::Punct
            }
        };
        tokens.push(Token {
            kind,
            start,
            end: i,
        });
    }
    Ok(tokens)
}

fn scan_quoted(bytes: &[u8], start: usize, quote: u8, what: &str) -> Result<usize> {
    let mut i = start + 1;
    loop {
        if i >= bytes.len() {
            return Err(unterminated(what, start));
        }
        if bytes[i] == quote {
            if bytes.get(i + 1) == Some(&quote) {
                i += 2; // doubled quote escape
                continue;
            }
            return Ok(i + 1);
        }
        i += 1;
    }
}

fn scan_number(bytes: &[u8], start: usize) -> usize {
    let mut i = start;
    while i < bytes.len()
        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.' || bytes[i] == b'_')
    {
        // consume exponent sign: 1e+5
        if (bytes[i] == b'e' || bytes[i] == b'E')
            && bytes
                .get(i + 1)
                .is_some_and(|&c| c == b'+' || c == b'-')
        {
            i += 2;
            continue;
        }
        i += 1;
    }
    i
}

fn unterminated(what: &str, offset: usize) -> RefineError {
    RefineError::Config(format!("unterminated {what} starting at byte {offset}"))
}

/// Indices of non-whitespace, non-comment tokens.
pub fn significant_indices(tokens: &[Token]) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !matches!(t.kind, TokenKind::Whitespace | TokenKind::Comment))
        .map(|(i, _)| i)
        .collect()
}

/// First meaningful token text, for the read-only statement guard.
pub fn first_significant<'a>(sql: &'a str, tokens: &[Token]) -> Option<&'a str> {
    tokens
        .iter()
        .find(|t| !matches!(t.kind, TokenKind::Whitespace | TokenKind::Comment))
        .map(|t| t.text(sql))
}

/// True when the statement carries a top-level ORDER BY (outside any
/// parentheses), which switches result comparison to sequence semantics.
pub fn has_toplevel_order_by(sql: &str, tokens: &[Token]) -> bool {
    let sig = significant_indices(tokens);
    let mut depth = 0i32;
    for (pos, &ti) in sig.iter().enumerate() {
        let t = &tokens[ti];
        if t.is_punct(sql, "(") {
            depth += 1;
        } else if t.is_punct(sql, ")") {
            depth -= 1;
        } else if depth == 0 && t.is_kw(sql, "order") {
            if let Some(&next) = sig.get(pos + 1) {
                if tokens[next].is_kw(sql, "by") {
                    return true;
                }
            }
        }
    }
    false
}

/// Where a table reference may resolve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableTarget {
    /// Base table name (lowercased).
    Base(String),
    /// Subquery or CTE; columns are not schema columns.
    Derived,
}

/// Result of scanning every FROM/JOIN clause in a statement. Alias
/// resolution is flattened across subquery levels: an unqualified name may
/// match any table appearing in any FROM clause of the statement.
#[derive(Clone, Debug, Default)]
pub struct FromScan {
    /// lowercased alias or table name -> target
    pub aliases: HashMap<String, TableTarget>,
    /// lowercased base table names referenced anywhere
    pub tables: Vec<String>,
    /// lowercased CTE names
    pub ctes: HashSet<String>,
    /// token indices consumed as table names or aliases (never column refs)
    pub ref_tokens: HashSet<usize>,
}

impl FromScan {
    pub fn resolve(&self, qualifier: &str) -> Option<&TableTarget> {
        self.aliases.get(&ident::ident_key(qualifier))
    }
}

/// Keywords that terminate a table-reference list.
fn is_clause_keyword(text: &str) -> bool {
    matches!(
        text.to_ascii_lowercase().as_str(),
        "on" | "using"
            | "where"
            | "group"
            | "having"
            | "order"
            | "limit"
            | "offset"
            | "union"
            | "intersect"
            | "except"
            | "join"
            | "inner"
            | "left"
            | "right"
            | "full"
            | "outer"
            | "cross"
            | "natural"
            | "straight_join"
            | "when"
            | "then"
            | "else"
            | "end"
            | "as"
            | "select"
            | "from"
            | "window"
            | "set"
    )
}

/// Scan FROM and JOIN clauses, collecting base tables, aliases, and CTE
/// names (`ident AS (` pattern).
pub fn scan_from(sql: &str, tokens: &[Token]) -> FromScan {
    let sig = significant_indices(tokens);
    let mut scan = FromScan::default();

    // CTE names: identifier directly followed by [column list] AS (
    for (pos, &ti) in sig.iter().enumerate() {
        if tokens[ti].kind != TokenKind::Ident && tokens[ti].kind != TokenKind::QuotedIdent {
            continue;
        }
        let Some(name) = tokens[ti].ident_text(sql) else {
            continue;
        };
        if ident::is_keyword(&name) {
            continue;
        }
        let mut p = pos + 1;
        // optional (col, col) list before AS
        if sig.get(p).is_some_and(|&i| tokens[i].is_punct(sql, "(")) {
            let mut depth = 0i32;
            while let Some(&i) = sig.get(p) {
                if tokens[i].is_punct(sql, "(") {
                    depth += 1;
                } else if tokens[i].is_punct(sql, ")") {
                    depth -= 1;
                    if depth == 0 {
                        p += 1;
                        break;
                    }
                }
                p += 1;
            }
        }
        let as_then_paren = sig.get(p).is_some_and(|&i| tokens[i].is_kw(sql, "as"))
            && sig.get(p + 1).is_some_and(|&i| tokens[i].is_punct(sql, "("));
        if as_then_paren {
            scan.ctes.insert(ident::ident_key(&name));
        }
    }

    let mut pos = 0;
    while pos < sig.len() {
        let ti = sig[pos];
        let is_from = tokens[ti].is_kw(sql, "from");
        let is_join = tokens[ti].is_kw(sql, "join");
        if is_from || is_join {
            // Parse refs with a local cursor; the main cursor still walks
            // token-by-token so FROM clauses inside subqueries are visited.
            let mut cur = pos + 1;
            loop {
                cur = parse_table_ref(sql, tokens, &sig, cur, &mut scan);
                if is_from && sig.get(cur).is_some_and(|&i| tokens[i].is_punct(sql, ",")) {
                    cur += 1; // comma-separated FROM list
                    continue;
                }
                break;
            }
        }
        pos += 1;
    }
    scan
}

/// Parse one table reference at `pos` (significant-index space); returns the
/// next position.
fn parse_table_ref(
    sql: &str,
    tokens: &[Token],
    sig: &[usize],
    mut pos: usize,
    scan: &mut FromScan,
) -> usize {
    let Some(&ti) = sig.get(pos) else { return pos };

    // Derived table: skip the parenthesized body, then bind its alias.
    if tokens[ti].is_punct(sql, "(") {
        let mut depth = 0i32;
        while let Some(&i) = sig.get(pos) {
            if tokens[i].is_punct(sql, "(") {
                depth += 1;
            } else if tokens[i].is_punct(sql, ")") {
                depth -= 1;
                if depth == 0 {
                    pos += 1;
                    break;
                }
            }
            pos += 1;
        }
        return bind_alias(sql, tokens, sig, pos, scan, TableTarget::Derived);
    }

    let Some(name) = tokens[ti].ident_text(sql) else {
        return pos;
    };
    if ident::is_keyword(&name) {
        return pos;
    }
    scan.ref_tokens.insert(ti);
    pos += 1;
    let mut table = ident::ident_key(&name);
    // db-qualified reference: keep the last path element
    while sig.get(pos).is_some_and(|&i| tokens[i].is_punct(sql, "."))
        && sig
            .get(pos + 1)
            .and_then(|&i| tokens[i].ident_text(sql))
            .is_some()
    {
        table = ident::ident_key(&tokens[sig[pos + 1]].ident_text(sql).unwrap());
        scan.ref_tokens.insert(sig[pos + 1]);
        pos += 2;
    }

    let target = if scan.ctes.contains(&table) {
        TableTarget::Derived
    } else {
        if !scan.tables.contains(&table) {
            scan.tables.push(table.clone());
        }
        TableTarget::Base(table.clone())
    };
    scan.aliases
        .entry(table.clone())
        .or_insert_with(|| target.clone());
    bind_alias(sql, tokens, sig, pos, scan, target)
}

fn bind_alias(
    sql: &str,
    tokens: &[Token],
    sig: &[usize],
    mut pos: usize,
    scan: &mut FromScan,
    target: TableTarget,
) -> usize {
    if sig.get(pos).is_some_and(|&i| tokens[i].is_kw(sql, "as")) {
        pos += 1;
    }
    if let Some(&i) = sig.get(pos) {
        if let Some(alias) = tokens[i].ident_text(sql) {
            if !is_clause_keyword(&alias) && !ident::is_keyword(&alias) {
                scan.aliases.insert(ident::ident_key(&alias), target);
                scan.ref_tokens.insert(i);
                pos += 1;
            }
        }
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(sql: &str) -> Vec<TokenKind> {
        tokenize(sql)
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .filter(|k| *k != TokenKind::Whitespace)
            .collect()
    }

    #[test]
    fn literals_and_identifiers() {
        use TokenKind::*;
        assert_eq!(
            kinds("SELECT 'nm' AS x, \"col name\", 1.5e-3 FROM t -- c"),
            vec![
                Ident, StringLit, Ident, Ident, Punct, QuotedIdent, Punct, Number, Ident, Ident,
                Comment
            ]
        );
    }

    #[test]
    fn doubled_quote_escapes() {
        let sql = "SELECT 'it''s' FROM t";
        let toks = tokenize(sql).unwrap();
        let lit = toks.iter().find(|t| t.kind == TokenKind::StringLit).unwrap();
        assert_eq!(lit.text(sql), "'it''s'");
    }

    #[test]
    fn unterminated_string_is_error() {
        assert!(tokenize("SELECT 'oops FROM t").is_err());
    }

    #[test]
    fn toplevel_order_by_detection() {
        let sql = "SELECT a FROM t ORDER BY a";
        let toks = tokenize(sql).unwrap();
        assert!(has_toplevel_order_by(sql, &toks));

        let nested = "SELECT * FROM (SELECT a FROM t ORDER BY a) q";
        let toks = tokenize(nested).unwrap();
        assert!(!has_toplevel_order_by(nested, &toks));

        let in_string = "SELECT 'ORDER BY x' FROM t";
        let toks = tokenize(in_string).unwrap();
        assert!(!has_toplevel_order_by(in_string, &toks));
    }

    #[test]
    fn from_scan_aliases() {
        let sql = "SELECT e.nm, d.dept_nm FROM employee e JOIN department AS d ON e.dept_id = d.dept_id";
        let toks = tokenize(sql).unwrap();
        let scan = scan_from(sql, &toks);
        assert_eq!(scan.tables, vec!["employee", "department"]);
        assert_eq!(
            scan.resolve("e"),
            Some(&TableTarget::Base("employee".into()))
        );
        assert_eq!(
            scan.resolve("d"),
            Some(&TableTarget::Base("department".into()))
        );
        assert_eq!(
            scan.resolve("employee"),
            Some(&TableTarget::Base("employee".into()))
        );
    }

    #[test]
    fn from_scan_comma_list_and_subquery() {
        let sql = "SELECT * FROM a, b WHERE a.x = (SELECT max(y) FROM c)";
        let toks = tokenize(sql).unwrap();
        let scan = scan_from(sql, &toks);
        assert_eq!(scan.tables, vec!["a", "b", "c"]);
    }

    #[test]
    fn from_scan_cte_not_base_table() {
        let sql = "WITH recent AS (SELECT * FROM orders) SELECT * FROM recent r";
        let toks = tokenize(sql).unwrap();
        let scan = scan_from(sql, &toks);
        assert!(scan.ctes.contains("recent"));
        assert_eq!(scan.tables, vec!["orders"]);
        assert_eq!(scan.resolve("r"), Some(&TableTarget::Derived));
    }

    #[test]
    fn derived_table_alias() {
        let sql = "SELECT q.n FROM (SELECT count(*) n FROM t) q";
        let toks = tokenize(sql).unwrap();
        let scan = scan_from(sql, &toks);
        assert_eq!(scan.tables, vec!["t"]);
        assert_eq!(scan.resolve("q"), Some(&TableTarget::Derived));
    }
}
