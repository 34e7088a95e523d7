//! The database engine.
//!
//! A database is a directory: one image per table (schema in the LSB
//! channel, record block in the trailer), one image per foreign key, and an
//! advisory lock file. Opening the directory scans and decodes every image,
//! so the catalog is rebuilt from the files themselves rather than from a
//! manifest.
//!
//! Mutations rewrite the affected table's record block in full and persist
//! it with a temp-file-and-rename, so a crash at any point leaves the prior
//! state intact, an error leaves every file untouched, and no operation ever
//! writes below `image_end` of an existing table image.
//!
//! Within a process the borrow checker enforces the concurrency model:
//! reads (`select`, `verify`) borrow the database shared, mutations borrow
//! it exclusively. Across processes the lock file keeps engines out of each
//! other's directories.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Channel, Error, Result};
use crate::image::ImageContainer;
use crate::record::{self, render_key, Row, Value};
use crate::schema::{self, ForeignKey, PayloadKind, TableSchema};

/// Name of the advisory lock file inside a database directory.
pub const LOCK_FILE: &str = ".hydb.lock";

/// Comparison operators available to predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    /// Parses the operator's symbol.
    pub fn from_symbol(s: &str) -> Option<Comparator> {
        Some(match s {
            "=" => Comparator::Eq,
            "!=" => Comparator::Ne,
            "<" => Comparator::Lt,
            "<=" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" => Comparator::Ge,
            _ => return None,
        })
    }

    fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Comparator::Eq => ord == Equal,
            Comparator::Ne => ord != Equal,
            Comparator::Lt => ord == Less,
            Comparator::Le => ord != Greater,
            Comparator::Gt => ord == Greater,
            Comparator::Ge => ord != Less,
        }
    }
}

/// One `column OP literal` test.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjunct {
    pub column: String,
    pub op: Comparator,
    pub literal: Value,
}

/// A conjunction of column/literal comparisons; the empty predicate matches
/// every row. Any comparison that involves NULL (stored or literal) is
/// false.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predicate {
    conjuncts: Vec<Conjunct>,
}

impl Predicate {
    /// The match-all predicate.
    pub fn all() -> Predicate {
        Predicate::default()
    }

    pub fn new(conjuncts: Vec<Conjunct>) -> Predicate {
        Predicate { conjuncts }
    }

    pub fn conjuncts(&self) -> &[Conjunct] {
        &self.conjuncts
    }

    /// Resolves column names against a schema and checks literal
    /// compatibility. NULL literals are legal and simply never match.
    fn resolve(&self, table: &str, schema: &TableSchema) -> Result<ResolvedPredicate> {
        let mut tests = Vec::with_capacity(self.conjuncts.len());
        for conjunct in &self.conjuncts {
            let index = schema.column_index(&conjunct.column).ok_or_else(|| {
                Error::UnknownColumn {
                    table: table.to_string(),
                    column: conjunct.column.clone(),
                }
            })?;
            let mismatch = |reason: String| Error::PredicateTypeMismatch {
                column: conjunct.column.clone(),
                reason,
            };
            let dtype = schema.columns[index].dtype;
            match &conjunct.literal {
                Value::Null => {}
                Value::Float(f) if !f.is_finite() => {
                    return Err(mismatch("literal is not a finite number".into()))
                }
                Value::Char(s) => {
                    if let crate::schema::DataType::Char(max) = dtype {
                        let length = s.chars().count();
                        if length > max.get() as usize {
                            return Err(mismatch(format!(
                                "literal is {length} code points but the column is CHAR({max})"
                            )));
                        }
                    } else {
                        return Err(mismatch(format!("CHAR literal against {dtype} column")));
                    }
                }
                other => {
                    if !other.matches_type(dtype) {
                        return Err(mismatch(format!("literal does not fit {dtype} column")));
                    }
                }
            }
            tests.push((index, conjunct.op, conjunct.literal.clone()));
        }
        Ok(ResolvedPredicate { tests })
    }
}

struct ResolvedPredicate {
    tests: Vec<(usize, Comparator, Value)>,
}

impl ResolvedPredicate {
    fn matches(&self, row: &Row) -> bool {
        self.tests.iter().all(|(index, op, literal)| {
            let stored = &row[*index];
            if stored.is_null() || literal.is_null() {
                return false;
            }
            op.holds(stored.compare_same_kind(literal))
        })
    }
}

/// A table registered in the catalog: where its image lives and the schema
/// decoded from it at open time.
#[derive(Debug, Clone)]
pub struct TableEntry {
    pub path: PathBuf,
    pub schema: TableSchema,
}

/// A foreign key registered in the catalog and the relationship image that
/// carries it.
#[derive(Debug, Clone)]
pub struct LinkEntry {
    pub path: PathBuf,
    pub fk: ForeignKey,
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Ok,
    Failed(String),
}

impl CheckStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, CheckStatus::Ok)
    }

    fn fail(reason: impl Into<String>) -> CheckStatus {
        CheckStatus::Failed(reason.into())
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckStatus::Ok => f.write_str("ok"),
            CheckStatus::Failed(reason) => write!(f, "FAIL ({reason})"),
        }
    }
}

/// Verification results for one table image.
#[derive(Debug, Clone)]
pub struct TableReport {
    pub table: String,
    /// Both storage frames decode with valid CRCs.
    pub frames: CheckStatus,
    /// The embedded schema decodes and matches the catalog.
    pub schema: CheckStatus,
    /// The record block decodes and every row typechecks.
    pub records: CheckStatus,
    /// No two rows share a primary key.
    pub pk_unique: CheckStatus,
}

/// Verification results for one relationship image.
#[derive(Debug, Clone)]
pub struct LinkReport {
    pub label: String,
    pub status: CheckStatus,
}

/// Everything `verify` found, organized per file. `ok()` is the conjunction
/// of every status.
#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub tables: Vec<TableReport>,
    pub links: Vec<LinkReport>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.tables.iter().all(|t| {
            t.frames.is_ok() && t.schema.is_ok() && t.records.is_ok() && t.pk_unique.is_ok()
        }) && self.links.iter().all(|l| l.status.is_ok())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tables {
            writeln!(
                f,
                "table {}: frames={} schema={} records={} pk={}",
                t.table, t.frames, t.schema, t.records, t.pk_unique
            )?;
        }
        for l in &self.links {
            writeln!(f, "link {}: {}", l.label, l.status)?;
        }
        write!(f, "overall: {}", if self.ok() { "ok" } else { "FAILED" })
    }
}

/// Exclusive advisory lock on a database directory. Dropping it releases
/// the lock.
#[derive(Debug)]
struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(dir: &Path) -> Result<LockGuard> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut file) => {
                let _ = write!(file, "{}", std::process::id());
                Ok(LockGuard { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                let holder = fs::read_to_string(&path)
                    .ok()
                    .filter(|s| !s.is_empty())
                    .map(|pid| format!("process {pid}"))
                    .unwrap_or_else(|| "an unknown process".to_string());
                Err(Error::LockHeld { holder })
            }
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// An open database: the catalog over a directory of images plus the
/// advisory lock that keeps other processes out.
#[derive(Debug)]
pub struct Database {
    root: PathBuf,
    tables: BTreeMap<String, TableEntry>,
    links: Vec<LinkEntry>,
    _lock: LockGuard,
}

impl Database {
    /// Opens a database directory: takes the lock, scans every image, and
    /// registers each decoded schema or foreign-key payload.
    ///
    /// Files that are not supported images, images with an empty LSB
    /// channel, and `*.tmp` leftovers from interrupted saves are ignored.
    /// An image whose hidden payload is corrupt fails the open loudly
    /// rather than silently dropping a table.
    pub fn open(dir: &Path) -> Result<Database> {
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            ));
        }
        let lock = LockGuard::acquire(dir)?;
        let mut names: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .collect();
        names.sort();

        let mut tables = BTreeMap::new();
        let mut links = Vec::new();
        for path in names {
            if !path.is_file() {
                continue;
            }
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name == LOCK_FILE || name.ends_with(".tmp") {
                continue;
            }
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let container = match ImageContainer::parse(bytes) {
                Ok(c) => c,
                // Not one of ours; databases may share a directory with
                // stray files.
                Err(Error::UnsupportedFormat(_)) => continue,
                Err(e) => return Err(Error::corrupt_db_file(&path, e)),
            };
            let payload = match container.lsb_extract() {
                Ok(None) => continue, // pristine image, nothing registered
                Ok(Some(p)) => p,
                Err(e) => return Err(Error::corrupt_db_file(&path, e)),
            };
            match schema::payload_kind(&payload) {
                PayloadKind::Schema => {
                    let table_schema = TableSchema::decode(&payload)
                        .map_err(|e| Error::corrupt_db_file(&path, e))?;
                    let name = table_schema.table_name.clone();
                    if tables.contains_key(&name) {
                        return Err(Error::DuplicateTable(name));
                    }
                    tables.insert(
                        name,
                        TableEntry {
                            path,
                            schema: table_schema,
                        },
                    );
                }
                PayloadKind::ForeignKey => {
                    let fk = ForeignKey::decode(&payload)
                        .map_err(|e| Error::corrupt_db_file(&path, e))?;
                    links.push(LinkEntry { path, fk });
                }
                PayloadKind::Unknown => {
                    return Err(Error::corrupt_db_file(
                        &path,
                        Error::MalformedSchemaText {
                            line: 1,
                            reason: "payload carries neither a table nor a foreign-key tag"
                                .to_string(),
                        },
                    ));
                }
            }
        }
        let db = Database {
            root: dir.to_path_buf(),
            tables,
            links,
            _lock: lock,
        };
        for link in &db.links {
            db.check_link_shape(&link.fk)?;
        }
        Ok(db)
    }

    /// The database directory.
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registered tables in name order.
    pub fn tables(&self) -> impl Iterator<Item = (&str, &TableEntry)> {
        self.tables.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Registered foreign keys.
    pub fn links(&self) -> &[LinkEntry] {
        &self.links
    }

    /// Schema of a table.
    pub fn schema(&self, table: &str) -> Result<&TableSchema> {
        Ok(&self.table_entry(table)?.schema)
    }

    fn table_entry(&self, table: &str) -> Result<&TableEntry> {
        self.tables
            .get(table)
            .ok_or_else(|| Error::UnknownTable(table.to_string()))
    }

    /// Checks a foreign key against the catalog: both tables exist, every
    /// named column exists, types line up, and the parent side is exactly
    /// the parent's primary key.
    fn check_link_shape(&self, fk: &ForeignKey) -> Result<()> {
        fk.validate()?;
        let child = self
            .tables
            .get(&fk.child_table)
            .ok_or_else(|| Error::DanglingLink(format!("unknown child table {:?}", fk.child_table)))?;
        let parent = self.tables.get(&fk.parent_table).ok_or_else(|| {
            Error::DanglingLink(format!("unknown parent table {:?}", fk.parent_table))
        })?;
        for (child_col, parent_col) in fk.child_columns.iter().zip(&fk.parent_columns) {
            let c = child.schema.column(child_col).ok_or_else(|| {
                Error::DanglingLink(format!(
                    "child table {:?} has no column {child_col:?}",
                    fk.child_table
                ))
            })?;
            let p = parent.schema.column(parent_col).ok_or_else(|| {
                Error::DanglingLink(format!(
                    "parent table {:?} has no column {parent_col:?}",
                    fk.parent_table
                ))
            })?;
            if c.dtype != p.dtype {
                return Err(Error::TypeMismatchLink(format!(
                    "{}.{} is {} but {}.{} is {}",
                    fk.child_table, child_col, c.dtype, fk.parent_table, parent_col, p.dtype
                )));
            }
        }
        if fk.parent_columns != parent.schema.primary_key {
            return Err(Error::DanglingLink(format!(
                "parent columns ({}) must be exactly the primary key of {:?} ({})",
                fk.parent_columns.join(","),
                fk.parent_table,
                parent.schema.primary_key.join(",")
            )));
        }
        Ok(())
    }

    /// Creates a table: copies the cover into the database directory as
    /// `<name>.<ext>`, embeds the schema, writes an empty record block, and
    /// registers the table.
    pub fn create_table(&mut self, table_schema: &TableSchema, cover: &Path) -> Result<()> {
        table_schema.validate()?;
        let name = table_schema.table_name.clone();
        if self.tables.contains_key(&name) {
            return Err(Error::TableExists(name));
        }
        let container = ImageContainer::open(cover)?;
        let dest = self
            .root
            .join(format!("{name}.{}", container.format().extension()));
        if dest.exists() {
            // Never clobber a file we did not create, even an unregistered one.
            return Err(Error::TableExists(name));
        }
        let stego = schema::embed_schema(&container, table_schema)?.write_trailer(b"");
        stego.save_atomic(&dest)?;
        self.tables.insert(
            name,
            TableEntry {
                path: dest,
                schema: table_schema.clone(),
            },
        );
        Ok(())
    }

    /// Drops a table, removing its image. Refused while any foreign key
    /// references the table from either side.
    pub fn drop_table(&mut self, table: &str) -> Result<()> {
        let entry = self.table_entry(table)?;
        if let Some(link) = self
            .links
            .iter()
            .find(|l| l.fk.child_table == table || l.fk.parent_table == table)
        {
            return Err(Error::LinkExists(link.fk.label()));
        }
        let path = entry.path.clone();
        fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        self.tables.remove(table);
        Ok(())
    }

    /// Reads a table's image and decodes its current rows.
    fn load_table(&self, entry: &TableEntry) -> Result<(ImageContainer, Vec<Row>)> {
        let bytes = fs::read(&entry.path).map_err(|e| Error::io(&entry.path, e))?;
        let container =
            ImageContainer::parse(bytes).map_err(|e| Error::corrupt_db_file(&entry.path, e))?;
        let payload = container
            .read_trailer()
            .map_err(|e| Error::corrupt_db_file(&entry.path, e))?
            .ok_or_else(|| {
                Error::corrupt_db_file(
                    &entry.path,
                    Error::CorruptFrame {
                        channel: Channel::Trailer,
                        reason: "record block frame missing".to_string(),
                    },
                )
            })?;
        let rows = record::decode_records(&entry.schema, &payload)
            .map_err(|e| Error::corrupt_db_file(&entry.path, e))?;
        Ok((container, rows))
    }

    fn load_rows(&self, table: &str) -> Result<Vec<Row>> {
        let entry = self.table_entry(table)?;
        Ok(self.load_table(entry)?.1)
    }

    /// Re-encodes the record block and atomically rewrites the table image.
    /// Bytes below `image_end` are carried over verbatim.
    fn store_rows(&self, entry: &TableEntry, container: &ImageContainer, rows: &[Row]) -> Result<()> {
        let block = record::encode_records(&entry.schema, rows)?;
        container.write_trailer(&block).save_atomic(&entry.path)
    }

    /// Inserts a row after primary-key and foreign-key checks pass.
    pub fn insert(&mut self, table: &str, row: Row) -> Result<()> {
        let entry = self.table_entry(table)?;
        record::typecheck_row(&entry.schema, &row)?;
        let (container, mut rows) = self.load_table(entry)?;
        let pk = entry.schema.pk_indices();
        let key = row.project(&pk);
        if rows.iter().any(|r| r.project(&pk) == key) {
            return Err(Error::PkViolation {
                key: render_key(&entry.schema, &pk, &row),
            });
        }
        rows.push(row);
        self.check_child_rows(
            table,
            &entry.schema,
            std::slice::from_ref(rows.last().expect("just pushed")),
            &rows,
        )?;
        self.store_rows(entry, &container, &rows)
    }

    /// Checks the child side of every relevant foreign key for the given
    /// rows. `post_rows` supplies this table's post-operation rows so a
    /// self-referencing key is checked against the state being written, not
    /// the one being replaced.
    fn check_child_rows(
        &self,
        table: &str,
        table_schema: &TableSchema,
        rows: &[Row],
        post_rows: &[Row],
    ) -> Result<()> {
        for link in &self.links {
            if link.fk.child_table != table {
                continue;
            }
            let child_indices: Vec<usize> = link
                .fk
                .child_columns
                .iter()
                .map(|c| table_schema.column_index(c).expect("validated link"))
                .collect();
            let parent_entry = self.table_entry(&link.fk.parent_table)?;
            let parent_key: Vec<usize> = link
                .fk
                .parent_columns
                .iter()
                .map(|c| parent_entry.schema.column_index(c).expect("validated link"))
                .collect();
            let parent_rows: Vec<Row> = if link.fk.parent_table == table {
                post_rows.to_vec()
            } else {
                self.load_rows(&link.fk.parent_table)?
            };
            for row in rows {
                let key = row.project(&child_indices);
                // A key that is entirely NULL opts out of the check; a
                // partially NULL key can never match a parent and fails.
                if key.iter().all(Value::is_null) {
                    continue;
                }
                if !parent_rows.iter().any(|p| p.project(&parent_key) == key) {
                    return Err(Error::FkViolation {
                        link: link.fk.label(),
                        key: render_key(table_schema, &child_indices, row),
                    });
                }
            }
        }
        Ok(())
    }

    /// Rows of `table` that satisfy the predicate, in insertion order,
    /// optionally projected onto the named columns.
    pub fn select(
        &self,
        table: &str,
        predicate: &Predicate,
        projection: Option<&[String]>,
    ) -> Result<Vec<Row>> {
        let entry = self.table_entry(table)?;
        let resolved = predicate.resolve(table, &entry.schema)?;
        let projected: Option<Vec<usize>> = match projection {
            None => None,
            Some(names) => Some(
                names
                    .iter()
                    .map(|n| {
                        entry.schema.column_index(n).ok_or_else(|| Error::UnknownColumn {
                            table: table.to_string(),
                            column: n.clone(),
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        let rows = self.load_rows(table)?;
        Ok(rows
            .into_iter()
            .filter(|r| resolved.matches(r))
            .map(|r| match &projected {
                None => r,
                Some(indices) => Row::new(r.project(indices)),
            })
            .collect())
    }

    /// Applies assignments to every matching row. All-or-nothing: any
    /// constraint violation leaves the table untouched. Returns the number
    /// of rows the predicate matched.
    pub fn update(
        &mut self,
        table: &str,
        assignments: &[(String, Value)],
        predicate: &Predicate,
    ) -> Result<usize> {
        let entry = self.table_entry(table)?;
        let table_schema = &entry.schema;

        let mut resolved_assignments = Vec::with_capacity(assignments.len());
        let mut assigned = HashSet::new();
        for (column, value) in assignments {
            let index = table_schema
                .column_index(column)
                .ok_or_else(|| Error::UnknownColumn {
                    table: table.to_string(),
                    column: column.clone(),
                })?;
            if !assigned.insert(index) {
                return Err(Error::DuplicateColumn(column.clone()));
            }
            check_assignment(&table_schema.columns[index], value)?;
            resolved_assignments.push((index, value.clone()));
        }
        let resolved = predicate.resolve(table, table_schema)?;

        let (container, rows) = self.load_table(entry)?;
        let matched: Vec<usize> = (0..rows.len()).filter(|&i| resolved.matches(&rows[i])).collect();
        if matched.is_empty() {
            return Ok(0);
        }
        let mut new_rows = rows.clone();
        for &i in &matched {
            for (index, value) in &resolved_assignments {
                new_rows[i].set(*index, value.clone());
            }
        }

        check_pk_unique(table_schema, &new_rows)?;

        // Child side: any matched row whose foreign-key projection changed
        // must still point at a parent row in the post-operation state.
        let changed: Vec<&Row> = matched
            .iter()
            .filter(|&&i| new_rows[i] != rows[i])
            .map(|&i| &new_rows[i])
            .collect();
        let changed_rows: Vec<Row> = changed.into_iter().cloned().collect();
        self.check_child_rows(table, table_schema, &changed_rows, &new_rows)?;

        // Parent side: RESTRICT forbids changing a key that child rows
        // still reference after the operation.
        let mut blocked_children = 0usize;
        for link in &self.links {
            if link.fk.parent_table != table {
                continue;
            }
            let pk = table_schema.pk_indices();
            let changed_keys: Vec<Vec<Value>> = matched
                .iter()
                .filter(|&&i| rows[i].project(&pk) != new_rows[i].project(&pk))
                .map(|&i| rows[i].project(&pk))
                .collect();
            if changed_keys.is_empty() {
                continue;
            }
            blocked_children +=
                self.count_referencing_children(&link.fk, &changed_keys, table, &new_rows)?;
        }
        if blocked_children > 0 {
            return Err(Error::RestrictViolation {
                children: blocked_children,
            });
        }

        self.store_rows(entry, &container, &new_rows)?;
        Ok(matched.len())
    }

    /// Deletes every matching row unless a surviving child row still
    /// references one of the removed keys. Returns the number of rows
    /// removed; the record block is physically rewritten.
    pub fn delete(&mut self, table: &str, predicate: &Predicate) -> Result<usize> {
        let entry = self.table_entry(table)?;
        let resolved = predicate.resolve(table, &entry.schema)?;
        let (container, rows) = self.load_table(entry)?;

        let mut survivors = Vec::with_capacity(rows.len());
        let mut deleted = Vec::new();
        for row in rows {
            if resolved.matches(&row) {
                deleted.push(row);
            } else {
                survivors.push(row);
            }
        }
        if deleted.is_empty() {
            return Ok(0);
        }

        let pk = entry.schema.pk_indices();
        let deleted_keys: Vec<Vec<Value>> = deleted.iter().map(|r| r.project(&pk)).collect();
        let mut blocked_children = 0usize;
        for link in &self.links {
            if link.fk.parent_table != table {
                continue;
            }
            blocked_children +=
                self.count_referencing_children(&link.fk, &deleted_keys, table, &survivors)?;
        }
        if blocked_children > 0 {
            return Err(Error::RestrictViolation {
                children: blocked_children,
            });
        }

        self.store_rows(entry, &container, &survivors)?;
        Ok(deleted.len())
    }

    /// Counts child rows of `fk` whose key projection equals one of `keys`.
    /// For a self-referencing key the children are the post-operation rows
    /// of the table itself.
    fn count_referencing_children(
        &self,
        fk: &ForeignKey,
        keys: &[Vec<Value>],
        table: &str,
        post_rows: &[Row],
    ) -> Result<usize> {
        let child_entry = self.table_entry(&fk.child_table)?;
        let child_indices: Vec<usize> = fk
            .child_columns
            .iter()
            .map(|c| child_entry.schema.column_index(c).expect("validated link"))
            .collect();
        let child_rows: Vec<Row> = if fk.child_table == table {
            post_rows.to_vec()
        } else {
            self.load_rows(&fk.child_table)?
        };
        Ok(child_rows
            .iter()
            .filter(|r| {
                let projection = r.project(&child_indices);
                !projection.iter().any(Value::is_null) && keys.contains(&projection)
            })
            .count())
    }

    /// Creates a foreign key: validates it against the catalog and the
    /// existing child rows, embeds the descriptor into the cover, and saves
    /// it as `<child>__<parent>.fk.<ext>`.
    pub fn create_foreign_key(&mut self, fk: &ForeignKey, cover: &Path) -> Result<()> {
        self.check_link_shape(fk)?;
        if let Some(existing) = self
            .links
            .iter()
            .find(|l| l.fk.child_table == fk.child_table && l.fk.parent_table == fk.parent_table)
        {
            return Err(Error::LinkExists(existing.fk.label()));
        }

        // Every existing child row must already satisfy the key.
        let child_entry = self.table_entry(&fk.child_table)?;
        let child_indices: Vec<usize> = fk
            .child_columns
            .iter()
            .map(|c| child_entry.schema.column_index(c).expect("checked above"))
            .collect();
        let parent_entry = self.table_entry(&fk.parent_table)?;
        let parent_key: Vec<usize> = fk
            .parent_columns
            .iter()
            .map(|c| parent_entry.schema.column_index(c).expect("checked above"))
            .collect();
        let child_rows = self.load_rows(&fk.child_table)?;
        let parent_rows = if fk.parent_table == fk.child_table {
            child_rows.clone()
        } else {
            self.load_rows(&fk.parent_table)?
        };
        let violations = child_rows
            .iter()
            .filter(|r| {
                let key = r.project(&child_indices);
                !key.iter().all(Value::is_null)
                    && !parent_rows.iter().any(|p| p.project(&parent_key) == key)
            })
            .count();
        if violations > 0 {
            return Err(Error::ExistingRowsViolate(violations));
        }

        let container = ImageContainer::open(cover)?;
        let dest = self.root.join(format!(
            "{}__{}.fk.{}",
            fk.child_table,
            fk.parent_table,
            container.format().extension()
        ));
        if dest.exists() {
            return Err(Error::LinkExists(fk.label()));
        }
        let stego = schema::embed_fk(&container, fk)?;
        stego.save_atomic(&dest)?;
        self.links.push(LinkEntry {
            path: dest,
            fk: fk.clone(),
        });
        Ok(())
    }

    /// Re-reads and re-checks every file: frame CRCs, schema and record
    /// decoding, primary-key uniqueness, and every foreign key. Never
    /// mutates anything; findings land in the report.
    pub fn verify(&self) -> VerifyReport {
        let mut report = VerifyReport::default();
        let mut table_rows: BTreeMap<&str, Vec<Row>> = BTreeMap::new();

        for (name, entry) in &self.tables {
            let mut t = TableReport {
                table: name.clone(),
                frames: CheckStatus::Ok,
                schema: CheckStatus::Ok,
                records: CheckStatus::Ok,
                pk_unique: CheckStatus::Ok,
            };
            if let Some(rows) = self.verify_table(entry, &mut t) {
                table_rows.insert(name, rows);
            }
            report.tables.push(t);
        }

        for link in &self.links {
            let status = self.verify_link(link, &table_rows);
            report.links.push(LinkReport {
                label: link.fk.label(),
                status,
            });
        }
        report
    }

    /// Fills in the per-table statuses; returns the decoded rows when the
    /// record block was readable so link checks can reuse them.
    fn verify_table(&self, entry: &TableEntry, t: &mut TableReport) -> Option<Vec<Row>> {
        let bytes = match fs::read(&entry.path) {
            Ok(b) => b,
            Err(e) => {
                let reason = format!("cannot read {}: {e}", entry.path.display());
                t.frames = CheckStatus::fail(&reason);
                t.schema = CheckStatus::fail(&reason);
                t.records = CheckStatus::fail(&reason);
                t.pk_unique = CheckStatus::fail(&reason);
                return None;
            }
        };
        let container = match ImageContainer::parse(bytes) {
            Ok(c) => c,
            Err(e) => {
                let reason = format!("image no longer parses: {e}");
                t.frames = CheckStatus::fail(&reason);
                t.schema = CheckStatus::fail(&reason);
                t.records = CheckStatus::fail(&reason);
                t.pk_unique = CheckStatus::fail(&reason);
                return None;
            }
        };

        let mut frame_problems = Vec::new();
        let schema_payload = match container.lsb_extract() {
            Ok(Some(p)) => Some(p),
            Ok(None) => {
                frame_problems.push("LSB frame missing".to_string());
                None
            }
            Err(e) => {
                frame_problems.push(e.to_string());
                None
            }
        };
        let record_payload = match container.read_trailer() {
            Ok(Some(p)) => Some(p),
            Ok(None) => {
                frame_problems.push("trailer frame missing".to_string());
                None
            }
            Err(e) => {
                frame_problems.push(e.to_string());
                None
            }
        };
        if !frame_problems.is_empty() {
            t.frames = CheckStatus::fail(frame_problems.join("; "));
        }

        match schema_payload {
            None => t.schema = CheckStatus::fail("not checked: LSB frame unreadable"),
            Some(payload) => match TableSchema::decode(&payload) {
                Err(e) => t.schema = CheckStatus::fail(e.to_string()),
                Ok(s) if s != entry.schema => {
                    t.schema = CheckStatus::fail("embedded schema differs from the catalog")
                }
                Ok(_) => {}
            },
        }

        let rows = match record_payload {
            None => {
                t.records = CheckStatus::fail("not checked: trailer frame unreadable");
                None
            }
            Some(payload) => match record::decode_records(&entry.schema, &payload) {
                Err(e) => {
                    t.records = CheckStatus::fail(e.to_string());
                    None
                }
                Ok(rows) => Some(rows),
            },
        };

        match &rows {
            None => t.pk_unique = CheckStatus::fail("not checked: record block unreadable"),
            Some(rows) => {
                if let Err(e) = check_pk_unique(&entry.schema, rows) {
                    t.pk_unique = CheckStatus::fail(e.to_string());
                }
            }
        }
        rows
    }

    fn verify_link(&self, link: &LinkEntry, table_rows: &BTreeMap<&str, Vec<Row>>) -> CheckStatus {
        let bytes = match fs::read(&link.path) {
            Ok(b) => b,
            Err(e) => return CheckStatus::fail(format!("cannot read {}: {e}", link.path.display())),
        };
        let container = match ImageContainer::parse(bytes) {
            Ok(c) => c,
            Err(e) => return CheckStatus::fail(format!("image no longer parses: {e}")),
        };
        let fk = match container.lsb_extract() {
            Err(e) => return CheckStatus::fail(e.to_string()),
            Ok(None) => return CheckStatus::fail("LSB frame missing"),
            Ok(Some(payload)) => match ForeignKey::decode(&payload) {
                Err(e) => return CheckStatus::fail(e.to_string()),
                Ok(fk) => fk,
            },
        };
        if fk != link.fk {
            return CheckStatus::fail("embedded descriptor differs from the catalog");
        }
        let (child_rows, parent_rows) = match (
            table_rows.get(fk.child_table.as_str()),
            table_rows.get(fk.parent_table.as_str()),
        ) {
            (Some(c), Some(p)) => (c, p),
            _ => return CheckStatus::fail("not checked: table record blocks unreadable"),
        };
        let child_schema = &self.tables[&fk.child_table].schema;
        let parent_schema = &self.tables[&fk.parent_table].schema;
        let child_indices: Vec<usize> = fk
            .child_columns
            .iter()
            .map(|c| child_schema.column_index(c).expect("validated link"))
            .collect();
        let parent_key: Vec<usize> = fk
            .parent_columns
            .iter()
            .map(|c| parent_schema.column_index(c).expect("validated link"))
            .collect();
        let orphans = child_rows
            .iter()
            .filter(|r| {
                let key = r.project(&child_indices);
                !key.iter().all(Value::is_null)
                    && !parent_rows.iter().any(|p| p.project(&parent_key) == key)
            })
            .count();
        if orphans > 0 {
            return CheckStatus::fail(format!("{orphans} child row(s) have no parent"));
        }
        CheckStatus::Ok
    }
}

/// Validates one `column = value` assignment the way a full-row typecheck
/// would.
fn check_assignment(column: &crate::schema::Column, value: &Value) -> Result<()> {
    match value {
        Value::Null => {
            if !column.nullable {
                return Err(Error::NullNotAllowed {
                    column: column.name.clone(),
                });
            }
        }
        Value::Char(s) => match column.dtype {
            crate::schema::DataType::Char(max) => {
                let length = s.chars().count();
                if length > max.get() as usize {
                    return Err(Error::CharTooLong {
                        length,
                        max: max.get(),
                    });
                }
            }
            _ => {
                return Err(Error::TypeMismatch {
                    column: column.name.clone(),
                })
            }
        },
        Value::Float(f) if !f.is_finite() => {
            return Err(Error::TypeMismatch {
                column: column.name.clone(),
            })
        }
        other => {
            if !other.matches_type(column.dtype) {
                return Err(Error::TypeMismatch {
                    column: column.name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// First duplicated primary key in row order, if any.
fn check_pk_unique(table_schema: &TableSchema, rows: &[Row]) -> Result<()> {
    let pk = table_schema.pk_indices();
    let keys: Vec<Vec<Value>> = rows.iter().map(|r| r.project(&pk)).collect();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if keys[i] == keys[j] {
                return Err(Error::PkViolation {
                    key: render_key(table_schema, &pk, &rows[j]),
                });
            }
        }
    }
    Ok(())
}
