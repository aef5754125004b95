//! Schema catalog: tables, columns, foreign keys, naming scopes, and the
//! admissibility rules for renaming mappings.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};

use crate::error::{RefineError, Result};
use crate::ident;

/// Stable identity of a column within one schema instance: lowercased
/// `(table, column)` pair. Display casing lives on the catalog entries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnKey {
    pub table: String,
    pub column: String,
}

impl ColumnKey {
    pub fn new(table: &str, column: &str) -> Self {
        ColumnKey {
            table: ident::ident_key(table),
            column: ident::ident_key(column),
        }
    }
}

impl std::fmt::Display for ColumnKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

/// Column descriptor as read from the catalog.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: String,
    pub name: String,
    pub data_type: String,
    pub is_pk: bool,
    pub is_fk: bool,
}

impl ColumnRef {
    pub fn key(&self) -> ColumnKey {
        ColumnKey::new(&self.table, &self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub data_type: String,
    pub is_pk: bool,
    pub is_fk: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
}

/// The database schema plus derived lookup structures. Immutable after
/// construction; renames produce fresh values.
#[derive(Clone, Debug)]
pub struct SchemaModel {
    pub tables: Vec<TableDef>,
    /// (child, parent) column pairs; composite FKs contribute one pair per
    /// column.
    pub foreign_keys: Vec<(ColumnKey, ColumnKey)>,
    pub domain_description: String,
    index: SchemaIndex,
}

#[derive(Clone, Debug, Default)]
struct SchemaIndex {
    /// key -> (table idx, column idx)
    columns: HashMap<ColumnKey, (usize, usize)>,
    /// lowercased table name -> table idx
    tables: HashMap<String, usize>,
    /// key -> FK partner keys (both directions)
    fk_partners: HashMap<ColumnKey, Vec<ColumnKey>>,
    /// lowercased table name -> FK-adjacent table names
    adjacent_tables: HashMap<String, BTreeSet<String>>,
    /// key -> scope set, computed once at load
    scopes: HashMap<ColumnKey, BTreeSet<ColumnKey>>,
}

impl PartialEq for SchemaModel {
    fn eq(&self, other: &Self) -> bool {
        self.tables == other.tables
            && self.foreign_keys == other.foreign_keys
            && self.domain_description == other.domain_description
    }
}
impl Eq for SchemaModel {}

impl SchemaModel {
    /// Assemble a schema from parts, validating the catalog invariants:
    /// unique table names, unique column names per table, FK endpoints
    /// present.
    pub fn new(
        tables: Vec<TableDef>,
        foreign_keys: Vec<(ColumnKey, ColumnKey)>,
        domain_description: impl Into<String>,
    ) -> Result<Self> {
        let mut model = SchemaModel {
            tables,
            foreign_keys,
            domain_description: domain_description.into(),
            index: SchemaIndex::default(),
        };
        model.rebuild_index()?;
        Ok(model)
    }

    fn rebuild_index(&mut self) -> Result<()> {
        let mut index = SchemaIndex::default();
        for (ti, table) in self.tables.iter().enumerate() {
            let tkey = ident::ident_key(&table.name);
            if index.tables.insert(tkey.clone(), ti).is_some() {
                return Err(RefineError::Config(format!(
                    "duplicate table name {}",
                    table.name
                )));
            }
            let mut seen = HashSet::new();
            for (ci, col) in table.columns.iter().enumerate() {
                let key = ColumnKey::new(&table.name, &col.name);
                if !seen.insert(key.column.clone()) {
                    return Err(RefineError::Config(format!(
                        "table {} has duplicate column name {}",
                        table.name, col.name
                    )));
                }
                index.columns.insert(key, (ti, ci));
            }
        }
        for (child, parent) in &self.foreign_keys {
            for endpoint in [child, parent] {
                if !index.columns.contains_key(endpoint) {
                    return Err(RefineError::UnknownColumn {
                        table: endpoint.table.clone(),
                        column: endpoint.column.clone(),
                    });
                }
            }
            index
                .fk_partners
                .entry(child.clone())
                .or_default()
                .push(parent.clone());
            index
                .fk_partners
                .entry(parent.clone())
                .or_default()
                .push(child.clone());
            index
                .adjacent_tables
                .entry(child.table.clone())
                .or_default()
                .insert(parent.table.clone());
            index
                .adjacent_tables
                .entry(parent.table.clone())
                .or_default()
                .insert(child.table.clone());
        }
        // Scope per column: same-table siblings plus FK partners, self
        // included through its own table.
        for table in &self.tables {
            for col in &table.columns {
                let key = ColumnKey::new(&table.name, &col.name);
                let mut scope: BTreeSet<ColumnKey> = table
                    .columns
                    .iter()
                    .map(|c| ColumnKey::new(&table.name, &c.name))
                    .collect();
                if let Some(partners) = index.fk_partners.get(&key) {
                    scope.extend(partners.iter().cloned());
                }
                index.scopes.insert(key, scope);
            }
        }
        self.index = index;
        Ok(())
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.index
            .tables
            .get(&ident::ident_key(name))
            .map(|&ti| &self.tables[ti])
    }

    pub fn column(&self, key: &ColumnKey) -> Option<ColumnRef> {
        let &(ti, ci) = self.index.columns.get(key)?;
        let table = &self.tables[ti];
        let col = &table.columns[ci];
        Some(ColumnRef {
            table: table.name.clone(),
            name: col.name.clone(),
            data_type: col.data_type.clone(),
            is_pk: col.is_pk,
            is_fk: col.is_fk,
        })
    }

    pub fn contains(&self, key: &ColumnKey) -> bool {
        self.index.columns.contains_key(key)
    }

    /// All columns in deterministic catalog order.
    pub fn columns(&self) -> Vec<ColumnRef> {
        self.tables
            .iter()
            .flat_map(|t| {
                t.columns.iter().map(move |c| ColumnRef {
                    table: t.name.clone(),
                    name: c.name.clone(),
                    data_type: c.data_type.clone(),
                    is_pk: c.is_pk,
                    is_fk: c.is_fk,
                })
            })
            .collect()
    }

    /// Naming scope of a column: its same-table siblings (itself included)
    /// plus columns linked to it by a foreign key in either direction.
    pub fn scope_of(&self, key: &ColumnKey) -> Result<&BTreeSet<ColumnKey>> {
        self.index
            .scopes
            .get(key)
            .ok_or_else(|| RefineError::UnknownColumn {
                table: key.table.clone(),
                column: key.column.clone(),
            })
    }

    pub fn fk_partners(&self, key: &ColumnKey) -> &[ColumnKey] {
        self.index
            .fk_partners
            .get(key)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn is_fk_pair(&self, a: &ColumnKey, b: &ColumnKey) -> bool {
        self.fk_partners(a).contains(b)
    }

    /// Tables whose namespaces interact with `table`: itself plus every
    /// table reachable over one foreign-key edge.
    pub fn adjacent_tables(&self, table: &str) -> BTreeSet<String> {
        let tkey = ident::ident_key(table);
        let mut out = BTreeSet::new();
        out.insert(tkey.clone());
        if let Some(adj) = self.index.adjacent_tables.get(&tkey) {
            out.extend(adj.iter().cloned());
        }
        out
    }

    /// Existing surface names competing with `key` for a new name: every
    /// column of the same table or an FK-adjacent table, minus the column
    /// itself and its FK partners (which legitimately share its name).
    pub fn competing_names(&self, key: &ColumnKey) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for tname in self.adjacent_tables(&key.table) {
            let Some(&ti) = self.index.tables.get(&tname) else {
                continue;
            };
            let table = &self.tables[ti];
            for col in &table.columns {
                let ckey = ColumnKey::new(&table.name, &col.name);
                if ckey == *key || self.is_fk_pair(key, &ckey) {
                    continue;
                }
                out.insert(ident::ident_key(&col.name));
            }
        }
        out
    }

    /// Copy with exactly one surface name changed. Errors when the result
    /// would be inadmissible or the new name is not a valid identifier.
    pub fn apply_rename(&self, key: &ColumnKey, new_name: &str) -> Result<SchemaModel> {
        if !ident::is_valid_new_name(new_name) {
            return Err(RefineError::InvalidIdentifier(new_name.to_string()));
        }
        let col = self.column(key).ok_or_else(|| RefineError::UnknownColumn {
            table: key.table.clone(),
            column: key.column.clone(),
        })?;
        let mut mapping = RefinementMapping::identity();
        mapping.set(key.clone(), new_name.to_string());
        let verdict = check_admissible(self, &mapping);
        if let Some(v) = verdict.violations.first() {
            return Err(RefineError::InadmissibleRename {
                table: col.table,
                column: col.name,
                new_name: new_name.to_string(),
                reason: format!("collides with {} on name {:?}", v.other_of(key), v.name),
            });
        }
        self.apply_mapping(&mapping)
    }

    /// Copy with every mapped column renamed. The mapping is applied as a
    /// whole; admissibility is the caller's responsibility (`apply_rename`
    /// wraps this with the single-column check).
    pub fn apply_mapping(&self, mapping: &RefinementMapping) -> Result<SchemaModel> {
        let mut tables = self.tables.clone();
        for (ti, table) in self.tables.iter().enumerate() {
            for (ci, col) in table.columns.iter().enumerate() {
                let key = ColumnKey::new(&table.name, &col.name);
                if let Some(new_name) = mapping.get(&key) {
                    tables[ti].columns[ci].name = new_name.to_string();
                }
            }
        }
        SchemaModel::new(
            tables,
            self.rekeyed_foreign_keys(mapping),
            self.domain_description.clone(),
        )
    }

    fn rekeyed_foreign_keys(&self, mapping: &RefinementMapping) -> Vec<(ColumnKey, ColumnKey)> {
        let rekey = |k: &ColumnKey| match mapping.get(k) {
            Some(new_name) => ColumnKey::new(&k.table, new_name),
            None => k.clone(),
        };
        self.foreign_keys
            .iter()
            .map(|(c, p)| (rekey(c), rekey(p)))
            .collect()
    }
}

/// Mapping from column identity to its (possibly new) surface name.
/// Absent columns keep their original names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementMapping {
    entries: BTreeMap<ColumnKey, String>,
}

impl RefinementMapping {
    pub fn identity() -> Self {
        RefinementMapping::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (ColumnKey, String)>) -> Self {
        RefinementMapping {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn set(&mut self, key: ColumnKey, new_name: String) {
        self.entries.insert(key, new_name);
    }

    pub fn get(&self, key: &ColumnKey) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    /// Final surface name of a column under this mapping.
    pub fn final_name<'a>(&'a self, schema: &'a SchemaModel, key: &ColumnKey) -> Option<String> {
        match self.entries.get(key) {
            Some(name) => Some(name.clone()),
            None => schema.column(key).map(|c| c.name),
        }
    }

    pub fn is_identity_for(&self, schema: &SchemaModel) -> bool {
        self.entries.iter().all(|(k, new_name)| {
            schema
                .column(k)
                .map(|c| ident::ident_eq(&c.name, new_name))
                .unwrap_or(false)
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ColumnKey, &str)> {
        self.entries.iter().map(|(k, v)| (k, v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inverse mapping (final name -> original name), defined whenever the
    /// mapping is admissible. Used for round-trip rewriting.
    pub fn inverse(&self, schema: &SchemaModel) -> Result<RefinementMapping> {
        let mut inv = RefinementMapping::identity();
        for (key, new_name) in &self.entries {
            let col = schema.column(key).ok_or_else(|| RefineError::UnknownColumn {
                table: key.table.clone(),
                column: key.column.clone(),
            })?;
            inv.set(ColumnKey::new(&key.table, new_name), col.name);
        }
        Ok(inv)
    }
}

/// One admissibility violation: two distinct columns in interacting
/// namespaces mapped to the same final name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub first: ColumnKey,
    pub second: ColumnKey,
    pub name: String,
}

impl Violation {
    fn other_of(&self, key: &ColumnKey) -> ColumnKey {
        if &self.first == key {
            self.second.clone()
        } else {
            self.first.clone()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub violations: Vec<Violation>,
}

impl AdmissibilityVerdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a mapping for naming collisions a refinement would introduce.
///
/// Two columns compete for a name when they live in the same table or in
/// tables joined by a foreign key. Exempt from the duplicate rule:
/// FK partner pairs (a foreign key sharing its referenced key's name is
/// join-consistent, and PK renames deliberately propagate to FKs), and
/// pre-existing homonyms left untouched by the mapping (the original
/// schema stays admissible regardless of its legacy naming).
pub fn check_admissible(schema: &SchemaModel, mapping: &RefinementMapping) -> AdmissibilityVerdict {
    let mut violations = Vec::new();
    let table_idx: HashMap<String, usize> = schema
        .tables
        .iter()
        .enumerate()
        .map(|(i, t)| (ident::ident_key(&t.name), i))
        .collect();

    let mut seen_pairs: BTreeSet<(ColumnKey, ColumnKey)> = BTreeSet::new();
    for table in &schema.tables {
        let neighborhood = schema.adjacent_tables(&table.name);
        for col in &table.columns {
            let key = ColumnKey::new(&table.name, &col.name);
            let final_a = mapping
                .final_name(schema, &key)
                .expect("column present in schema");
            for other_table in &neighborhood {
                let Some(&oti) = table_idx.get(other_table) else {
                    continue;
                };
                let other = &schema.tables[oti];
                for ocol in &other.columns {
                    let okey = ColumnKey::new(&other.name, &ocol.name);
                    if okey <= key {
                        continue; // each unordered pair once
                    }
                    let final_b = mapping
                        .final_name(schema, &okey)
                        .expect("column present in schema");
                    if !ident::ident_eq(&final_a, &final_b) {
                        continue;
                    }
                    if schema.is_fk_pair(&key, &okey) {
                        continue;
                    }
                    let untouched_homonym = ident::ident_eq(&col.name, &ocol.name)
                        && ident::ident_eq(&final_a, &col.name);
                    if untouched_homonym {
                        continue;
                    }
                    let pair = (key.clone(), okey.clone());
                    if seen_pairs.insert(pair) {
                        violations.push(Violation {
                            first: key.clone(),
                            second: okey,
                            name: ident::ident_key(&final_a),
                        });
                    }
                }
            }
        }
    }
    violations.sort();
    AdmissibilityVerdict { violations }
}

/// Introspect a SQLite file into a `SchemaModel`. PK/FK flags come from
/// the catalog pragmas; table order follows creation order.
pub fn load_schema(db_path: &Path, domain_description: &str) -> Result<SchemaModel> {
    let conn = open_read_only(db_path)?;
    let mut table_names: Vec<String> = Vec::new();
    {
        let mut stmt = conn.prepare(
            "SELECT name FROM sqlite_master \
             WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid",
        )?;
        let rows = stmt.query_map([], |row| row.get::<_, String>(0))?;
        for name in rows {
            table_names.push(name?);
        }
    }
    if table_names.is_empty() {
        return Err(RefineError::EmptySchema {
            path: db_path.to_path_buf(),
        });
    }

    let mut tables = Vec::new();
    let mut foreign_keys = Vec::new();
    let mut fk_children: HashSet<ColumnKey> = HashSet::new();

    for tname in &table_names {
        let quoted = ident::quote_ident(tname);
        let mut fk_stmt = conn.prepare(&format!("PRAGMA foreign_key_list({quoted})"))?;
        let fk_rows = fk_stmt.query_map([], |row| {
            Ok((
                row.get::<_, String>("table")?,
                row.get::<_, String>("from")?,
                row.get::<_, Option<String>>("to")?,
            ))
        })?;
        for fk in fk_rows {
            let (parent_table, from_col, to_col) = fk?;
            let child = ColumnKey::new(tname, &from_col);
            let parent_col = match to_col {
                Some(c) => c,
                // Implicit reference: the parent's (single-column) PK.
                None => primary_key_column(&conn, &parent_table)?,
            };
            let parent = ColumnKey::new(&parent_table, &parent_col);
            fk_children.insert(child.clone());
            foreign_keys.push((child, parent));
        }
    }

    for tname in &table_names {
        let quoted = ident::quote_ident(tname);
        let mut stmt = conn.prepare(&format!("PRAGMA table_info({quoted})"))?;
        let rows = stmt.query_map([], |row| {
            Ok((
                row.get::<_, String>("name")?,
                row.get::<_, String>("type")?,
                row.get::<_, i64>("pk")?,
            ))
        })?;
        let mut columns = Vec::new();
        for row in rows {
            let (name, data_type, pk) = row?;
            let key = ColumnKey::new(tname, &name);
            columns.push(ColumnDef {
                is_fk: fk_children.contains(&key),
                name,
                data_type,
                is_pk: pk > 0,
            });
        }
        tables.push(TableDef {
            name: tname.clone(),
            columns,
        });
    }

    SchemaModel::new(tables, foreign_keys, domain_description)
}

fn primary_key_column(conn: &Connection, table: &str) -> Result<String> {
    let quoted = ident::quote_ident(table);
    let mut stmt = conn.prepare(&format!("PRAGMA table_info({quoted})"))?;
    let rows = stmt.query_map([], |row| {
        Ok((row.get::<_, String>("name")?, row.get::<_, i64>("pk")?))
    })?;
    let mut pk_cols: Vec<(i64, String)> = Vec::new();
    for row in rows {
        let (name, pk) = row?;
        if pk > 0 {
            pk_cols.push((pk, name));
        }
    }
    pk_cols.sort();
    pk_cols
        .into_iter()
        .map(|(_, n)| n)
        .next()
        .ok_or_else(|| RefineError::UnknownTable(format!("{table} has no primary key")))
}

pub fn open_read_only(path: &Path) -> Result<Connection> {
    Connection::open_with_flags(
        path,
        OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_URI | OpenFlags::SQLITE_OPEN_NO_MUTEX,
    )
    .map_err(|source| RefineError::DatabaseOpen {
        path: path.to_path_buf(),
        source,
    })
}

/// Sidecar lookup for the domain description: `<db>.domain.txt` next to the
/// database file, else empty.
pub fn domain_description_sidecar(db_path: &Path) -> Option<String> {
    let mut sidecar = PathBuf::from(db_path);
    let stem = sidecar.file_stem()?.to_string_lossy().to_string();
    sidecar.set_file_name(format!("{stem}.domain.txt"));
    std::fs::read_to_string(&sidecar)
        .ok()
        .map(|s| s.trim().to_string())
}
