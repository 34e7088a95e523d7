//! A plain in-memory reference engine.
//!
//! Implements the same data rules as the image-backed engine — typed rows,
//! primary keys, RESTRICT foreign keys, NULL-is-never-equal predicates —
//! over nothing but vectors, in the same check order, so that outputs
//! (rows, counts, and error kinds) can be compared one to one.

use std::collections::BTreeMap;

use hydb::error::{Error, Result};
use hydb::record::{typecheck_row, Row, Value};
use hydb::schema::{DataType, ForeignKey, TableSchema};
use hydb::{Comparator, Predicate};

/// The reference store: tables and links, no files.
#[derive(Debug, Default, Clone)]
pub struct MemDb {
    tables: BTreeMap<String, MemTable>,
    links: Vec<ForeignKey>,
}

#[derive(Debug, Clone)]
pub struct MemTable {
    pub schema: TableSchema,
    pub rows: Vec<Row>,
}

impl MemDb {
    pub fn new() -> MemDb {
        MemDb::default()
    }

    pub fn rows(&self, table: &str) -> Option<&[Row]> {
        self.tables.get(table).map(|t| t.rows.as_slice())
    }

    pub fn table_names(&self) -> Vec<&str> {
        self.tables.keys().map(|s| s.as_str()).collect()
    }

    fn table(&self, name: &str) -> Result<&MemTable> {
        self.tables
            .get(name)
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn create_table(&mut self, schema: &TableSchema) -> Result<()> {
        schema.validate()?;
        if self.tables.contains_key(&schema.table_name) {
            return Err(Error::TableExists(schema.table_name.clone()));
        }
        self.tables.insert(
            schema.table_name.clone(),
            MemTable {
                schema: schema.clone(),
                rows: Vec::new(),
            },
        );
        Ok(())
    }

    pub fn drop_table(&mut self, table: &str) -> Result<()> {
        self.table(table)?;
        if let Some(fk) = self
            .links
            .iter()
            .find(|fk| fk.child_table == table || fk.parent_table == table)
        {
            return Err(Error::LinkExists(fk.label()));
        }
        self.tables.remove(table);
        Ok(())
    }

    pub fn insert(&mut self, table: &str, row: Row) -> Result<()> {
        let t = self.table(table)?;
        typecheck_row(&t.schema, &row)?;
        let pk = t.schema.pk_indices();
        let key = row.project(&pk);
        if t.rows.iter().any(|r| r.project(&pk) == key) {
            return Err(Error::PkViolation {
                key: hydb::record::render_key(&t.schema, &pk, &row),
            });
        }
        let mut post = t.rows.clone();
        post.push(row);
        self.check_child_rows(table, std::slice::from_ref(post.last().unwrap()), &post)?;
        self.tables.get_mut(table).unwrap().rows = post;
        Ok(())
    }

    pub fn select(
        &self,
        table: &str,
        predicate: &Predicate,
        projection: Option<&[String]>,
    ) -> Result<Vec<Row>> {
        let t = self.table(table)?;
        let resolved = resolve_predicate(table, &t.schema, predicate)?;
        let indices: Option<Vec<usize>> = match projection {
            None => None,
            Some(names) => Some(
                names
                    .iter()
                    .map(|n| {
                        t.schema.column_index(n).ok_or_else(|| Error::UnknownColumn {
                            table: table.to_string(),
                            column: n.clone(),
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(t.rows
            .iter()
            .filter(|r| resolved.matches(r))
            .map(|r| match &indices {
                None => r.clone(),
                Some(idx) => Row::new(r.project(idx)),
            })
            .collect())
    }

    pub fn update(
        &mut self,
        table: &str,
        assignments: &[(String, Value)],
        predicate: &Predicate,
    ) -> Result<usize> {
        let t = self.table(table)?;
        let schema = t.schema.clone();

        let mut resolved_assignments = Vec::new();
        let mut assigned = std::collections::HashSet::new();
        for (column, value) in assignments {
            let index = schema
                .column_index(column)
                .ok_or_else(|| Error::UnknownColumn {
                    table: table.to_string(),
                    column: column.clone(),
                })?;
            if !assigned.insert(index) {
                return Err(Error::DuplicateColumn(column.clone()));
            }
            check_assignment(&schema.columns[index], value)?;
            resolved_assignments.push((index, value.clone()));
        }
        let resolved = resolve_predicate(table, &schema, predicate)?;

        let rows = t.rows.clone();
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

        check_pk_unique(&schema, &new_rows)?;

        let changed_rows: Vec<Row> = matched
            .iter()
            .filter(|&&i| new_rows[i] != rows[i])
            .map(|&i| new_rows[i].clone())
            .collect();
        self.check_child_rows(table, &changed_rows, &new_rows)?;

        let mut blocked_children = 0usize;
        for fk in &self.links {
            if fk.parent_table != table {
                continue;
            }
            let pk = schema.pk_indices();
            let changed_keys: Vec<Vec<Value>> = matched
                .iter()
                .filter(|&&i| rows[i].project(&pk) != new_rows[i].project(&pk))
                .map(|&i| rows[i].project(&pk))
                .collect();
            if changed_keys.is_empty() {
                continue;
            }
            blocked_children += self.count_referencing_children(fk, &changed_keys, table, &new_rows);
        }
        if blocked_children > 0 {
            return Err(Error::RestrictViolation {
                children: blocked_children,
            });
        }

        self.tables.get_mut(table).unwrap().rows = new_rows;
        Ok(matched.len())
    }

    pub fn delete(&mut self, table: &str, predicate: &Predicate) -> Result<usize> {
        let t = self.table(table)?;
        let schema = t.schema.clone();
        let resolved = resolve_predicate(table, &schema, predicate)?;

        let mut survivors = Vec::new();
        let mut deleted = Vec::new();
        for row in t.rows.clone() {
            if resolved.matches(&row) {
                deleted.push(row);
            } else {
                survivors.push(row);
            }
        }
        if deleted.is_empty() {
            return Ok(0);
        }

        let pk = schema.pk_indices();
        let deleted_keys: Vec<Vec<Value>> = deleted.iter().map(|r| r.project(&pk)).collect();
        let mut blocked_children = 0usize;
        for fk in &self.links {
            if fk.parent_table != table {
                continue;
            }
            blocked_children += self.count_referencing_children(fk, &deleted_keys, table, &survivors);
        }
        if blocked_children > 0 {
            return Err(Error::RestrictViolation {
                children: blocked_children,
            });
        }

        let count = deleted.len();
        self.tables.get_mut(table).unwrap().rows = survivors;
        Ok(count)
    }

    pub fn create_foreign_key(&mut self, fk: &ForeignKey) -> Result<()> {
        self.check_link_shape(fk)?;
        if let Some(existing) = self
            .links
            .iter()
            .find(|l| l.child_table == fk.child_table && l.parent_table == fk.parent_table)
        {
            return Err(Error::LinkExists(existing.label()));
        }
        let child = &self.tables[&fk.child_table];
        let parent = &self.tables[&fk.parent_table];
        let child_indices: Vec<usize> = fk
            .child_columns
            .iter()
            .map(|c| child.schema.column_index(c).unwrap())
            .collect();
        let parent_key: Vec<usize> = fk
            .parent_columns
            .iter()
            .map(|c| parent.schema.column_index(c).unwrap())
            .collect();
        let violations = child
            .rows
            .iter()
            .filter(|r| {
                let key = r.project(&child_indices);
                !key.iter().all(Value::is_null)
                    && !parent.rows.iter().any(|p| p.project(&parent_key) == key)
            })
            .count();
        if violations > 0 {
            return Err(Error::ExistingRowsViolate(violations));
        }
        self.links.push(fk.clone());
        Ok(())
    }

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
                    "{}.{} vs {}.{}",
                    fk.child_table, child_col, fk.parent_table, parent_col
                )));
            }
        }
        if fk.parent_columns != parent.schema.primary_key {
            return Err(Error::DanglingLink(
                "parent columns must be exactly the parent's primary key".to_string(),
            ));
        }
        Ok(())
    }

    fn check_child_rows(&self, table: &str, rows: &[Row], post_rows: &[Row]) -> Result<()> {
        let schema = &self.tables[table].schema;
        for fk in &self.links {
            if fk.child_table != table {
                continue;
            }
            let child_indices: Vec<usize> = fk
                .child_columns
                .iter()
                .map(|c| schema.column_index(c).unwrap())
                .collect();
            let parent_schema = &self.tables[&fk.parent_table].schema;
            let parent_key: Vec<usize> = fk
                .parent_columns
                .iter()
                .map(|c| parent_schema.column_index(c).unwrap())
                .collect();
            let parent_rows: &[Row] = if fk.parent_table == table {
                post_rows
            } else {
                &self.tables[&fk.parent_table].rows
            };
            for row in rows {
                let key = row.project(&child_indices);
                if key.iter().all(Value::is_null) {
                    continue;
                }
                if !parent_rows.iter().any(|p| p.project(&parent_key) == key) {
                    return Err(Error::FkViolation {
                        link: fk.label(),
                        key: hydb::record::render_key(schema, &child_indices, row),
                    });
                }
            }
        }
        Ok(())
    }

    fn count_referencing_children(
        &self,
        fk: &ForeignKey,
        keys: &[Vec<Value>],
        table: &str,
        post_rows: &[Row],
    ) -> usize {
        let child_schema = &self.tables[&fk.child_table].schema;
        let child_indices: Vec<usize> = fk
            .child_columns
            .iter()
            .map(|c| child_schema.column_index(c).unwrap())
            .collect();
        let child_rows: &[Row] = if fk.child_table == table {
            post_rows
        } else {
            &self.tables[&fk.child_table].rows
        };
        child_rows
            .iter()
            .filter(|r| {
                let projection = r.project(&child_indices);
                !projection.iter().any(Value::is_null) && keys.contains(&projection)
            })
            .count()
    }
}

struct ResolvedPredicate {
    tests: Vec<(usize, Comparator, Value)>,
}

impl ResolvedPredicate {
    fn matches(&self, row: &Row) -> bool {
        self.tests.iter().all(|(index, op, literal)| {
            let stored = &row.values()[*index];
            if stored.is_null() || literal.is_null() {
                return false;
            }
            holds(*op, stored.compare_same_kind(literal))
        })
    }
}

fn holds(op: Comparator, ord: std::cmp::Ordering) -> bool {
    use std::cmp::Ordering::*;
    match op {
        Comparator::Eq => ord == Equal,
        Comparator::Ne => ord != Equal,
        Comparator::Lt => ord == Less,
        Comparator::Le => ord != Greater,
        Comparator::Gt => ord == Greater,
        Comparator::Ge => ord != Less,
    }
}

fn resolve_predicate(
    table: &str,
    schema: &TableSchema,
    predicate: &Predicate,
) -> Result<ResolvedPredicate> {
    let mut tests = Vec::new();
    for conjunct in predicate.conjuncts() {
        let index = schema
            .column_index(&conjunct.column)
            .ok_or_else(|| Error::UnknownColumn {
                table: table.to_string(),
                column: conjunct.column.clone(),
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
                if let DataType::Char(max) = dtype {
                    if s.chars().count() > max.get() as usize {
                        return Err(mismatch("literal too long".into()));
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

fn check_assignment(column: &hydb::schema::Column, value: &Value) -> Result<()> {
    match value {
        Value::Null => {
            if !column.nullable {
                return Err(Error::NullNotAllowed {
                    column: column.name.clone(),
                });
            }
        }
        Value::Char(s) => match column.dtype {
            DataType::Char(max) => {
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

fn check_pk_unique(schema: &TableSchema, rows: &[Row]) -> Result<()> {
    let pk = schema.pk_indices();
    let keys: Vec<Vec<Value>> = rows.iter().map(|r| r.project(&pk)).collect();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if keys[i] == keys[j] {
                return Err(Error::PkViolation {
                    key: hydb::record::render_key(schema, &pk, &rows[j]),
                });
            }
        }
    }
    Ok(())
}
