//! Bundled desk-scale fixtures used by the test suites and the README
//! walkthrough. `tiny_company` ships in two variants: abbreviation-degraded
//! column names and their clean counterparts.

use std::path::{Path, PathBuf};

use rusqlite::Connection;

use crate::error::{RefineError, Result};

pub const TINY_COMPANY_DEGRADED_SQL: &str =
    include_str!("../../../fixtures/tiny_company/schema_degraded.sql");
pub const TINY_COMPANY_CLEAN_SQL: &str =
    include_str!("../../../fixtures/tiny_company/schema_clean.sql");
pub const TINY_COMPANY_WORKLOAD_DEGRADED: &str =
    include_str!("../../../fixtures/tiny_company/workload_degraded.jsonl");
pub const TINY_COMPANY_WORKLOAD_CLEAN: &str =
    include_str!("../../../fixtures/tiny_company/workload_clean.jsonl");
pub const TINY_COMPANY_DOMAIN: &str = "A small company directory tracking employees, \
their salaries, and the departments they belong to.";

pub const TINY_ORG_SQL: &str = include_str!("../../../fixtures/tiny_org/schema.sql");
pub const TINY_ORG_WORKLOAD: &str = include_str!("../../../fixtures/tiny_org/workload.jsonl");
pub const TINY_ORG_DOMAIN: &str = "An organization chart linking staff members and \
projects to the departments that own them.";

/// Build a SQLite database at `path` from a fixture script.
pub fn build_db(path: &Path, script: &str) -> Result<()> {
    if path.exists() {
        std::fs::remove_file(path).map_err(|e| RefineError::io(path, e))?;
    }
    let conn = Connection::open(path).map_err(|source| RefineError::DatabaseOpen {
        path: path.to_path_buf(),
        source,
    })?;
    conn.execute_batch(script)?;
    Ok(())
}

/// Write a workload JSONL file next to the database.
pub fn write_workload(path: &Path, jsonl: &str) -> Result<()> {
    std::fs::write(path, jsonl).map_err(|e| RefineError::io(path, e))
}

/// Materialize the degraded tiny_company fixture into a directory and
/// return (db path, workload path).
pub fn tiny_company_degraded(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let db = dir.join("tiny_company.sqlite");
    let wl = dir.join("workload.jsonl");
    build_db(&db, TINY_COMPANY_DEGRADED_SQL)?;
    write_workload(&wl, TINY_COMPANY_WORKLOAD_DEGRADED)?;
    Ok((db, wl))
}

pub fn tiny_company_clean(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let db = dir.join("tiny_company_clean.sqlite");
    let wl = dir.join("workload_clean.jsonl");
    build_db(&db, TINY_COMPANY_CLEAN_SQL)?;
    write_workload(&wl, TINY_COMPANY_WORKLOAD_CLEAN)?;
    Ok((db, wl))
}

pub fn tiny_org(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let db = dir.join("tiny_org.sqlite");
    let wl = dir.join("workload.jsonl");
    build_db(&db, TINY_ORG_SQL)?;
    write_workload(&wl, TINY_ORG_WORKLOAD)?;
    Ok((db, wl))
}
