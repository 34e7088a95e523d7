//! Random CRUD workloads driven against both engines at once.
//!
//! Operations are generated against a fixed set of schemas (the employee
//! fixture plus an optional scratch table) with values biased toward
//! collisions, so primary-key and foreign-key violations actually fire.
//! Outcomes collapse to [`Outcome`] for comparison: row sets, counts, and
//! error kinds (plus the child counts carried by RESTRICT-family errors).

use std::path::PathBuf;

use hydb::error::Error;
use hydb::record::{Row, Value};
use hydb::schema::{DataType, TableSchema};
use hydb::{Comparator, Conjunct, Database, Predicate};
use rand::prelude::*;

use crate::fixture;
use crate::gen::{self, TestRng};
use crate::oracle::MemDb;

#[derive(Debug, Clone)]
pub enum Op {
    Insert {
        table: String,
        row: Row,
    },
    Select {
        table: String,
        predicate: Predicate,
        projection: Option<Vec<String>>,
    },
    Update {
        table: String,
        assignments: Vec<(String, Value)>,
        predicate: Predicate,
    },
    Delete {
        table: String,
        predicate: Predicate,
    },
    CreateTable {
        schema: TableSchema,
        cover: PathBuf,
    },
    DropTable {
        table: String,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Insert { .. } => "insert",
            Op::Select { .. } => "select",
            Op::Update { .. } => "update",
            Op::Delete { .. } => "delete",
            Op::CreateTable { .. } => "create-table",
            Op::DropTable { .. } => "drop-table",
        }
    }
}

/// A comparable operation result.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Unit,
    Count(usize),
    Rows(Vec<Row>),
    Err {
        kind: &'static str,
        count: Option<usize>,
    },
}

impl Outcome {
    fn from_err(e: &Error) -> Outcome {
        Outcome::Err {
            kind: e.kind(),
            count: e.violation_count(),
        }
    }
}

pub struct WorkloadCfg {
    /// Number of operations to generate.
    pub ops: usize,
    /// Include create/drop of the scratch table.
    pub ddl: bool,
    /// Cover image for created tables (required when `ddl` is on).
    pub scratch_cover: Option<PathBuf>,
}

/// The schemas ops are generated against. Dropped tables keep generating
/// ops (they exercise the UnknownTable path on both sides).
fn target_schemas(ddl: bool) -> Vec<TableSchema> {
    let mut schemas = vec![fixture::master_schema(), fixture::salary_schema()];
    if ddl {
        schemas.push(fixture::scratch_schema());
    }
    schemas
}

pub fn random_ops(rng: &mut TestRng, cfg: &WorkloadCfg) -> Vec<Op> {
    let schemas = target_schemas(cfg.ddl);
    (0..cfg.ops).map(|_| random_op(rng, &schemas, cfg)).collect()
}

fn pick<'a, T>(rng: &mut TestRng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn random_op(rng: &mut TestRng, schemas: &[TableSchema], cfg: &WorkloadCfg) -> Op {
    let schema = pick(rng, schemas);
    let table = schema.table_name.clone();
    match rng.random_range(0..100) {
        0..=34 => Op::Insert {
            table,
            row: random_insert_row(rng, schema),
        },
        35..=54 => Op::Select {
            table,
            predicate: random_predicate(rng, schema),
            projection: random_projection(rng, schema),
        },
        55..=74 => Op::Update {
            table,
            assignments: random_assignments(rng, schema),
            predicate: random_predicate(rng, schema),
        },
        75..=89 => Op::Delete {
            table,
            predicate: random_predicate(rng, schema),
        },
        _ if cfg.ddl => {
            if rng.random_bool(0.5) {
                Op::CreateTable {
                    schema: fixture::scratch_schema(),
                    cover: cfg.scratch_cover.clone().expect("ddl workloads need a cover"),
                }
            } else {
                Op::DropTable {
                    table: "scratch".into(),
                }
            }
        }
        _ => Op::Insert {
            table,
            row: random_insert_row(rng, schema),
        },
    }
}

/// Mostly conforming rows; occasionally wrong arity, NULL in a NOT NULL
/// column, or a value of the wrong kind.
fn random_insert_row(rng: &mut TestRng, schema: &TableSchema) -> Row {
    let mut row = gen::row_for(rng, schema);
    match rng.random_range(0..20) {
        0 => {
            let mut values = row.values().to_vec();
            values.pop();
            row = Row::new(values);
        }
        1 => {
            let i = rng.random_range(0..schema.columns.len());
            row.set(i, Value::Null);
        }
        2 => {
            let i = rng.random_range(0..schema.columns.len());
            row.set(i, Value::Bool(true));
        }
        _ => {}
    }
    row
}

fn random_predicate(rng: &mut TestRng, schema: &TableSchema) -> Predicate {
    let n = rng.random_range(0..=2usize);
    let mut conjuncts = Vec::new();
    for _ in 0..n {
        let column = if rng.random_bool(0.05) {
            "ghost".to_string()
        } else {
            pick(rng, &schema.columns).name.clone()
        };
        let dtype = schema
            .column(&column)
            .map(|c| c.dtype)
            .unwrap_or(DataType::Int);
        let literal = match rng.random_range(0..10) {
            0 => Value::Null,
            1 => Value::Bool(true), // frequent kind mismatch
            _ => gen::value_for(rng, dtype),
        };
        let op = *pick(
            rng,
            &[
                Comparator::Eq,
                Comparator::Ne,
                Comparator::Lt,
                Comparator::Le,
                Comparator::Gt,
                Comparator::Ge,
            ],
        );
        conjuncts.push(Conjunct {
            column,
            op,
            literal,
        });
    }
    Predicate::new(conjuncts)
}

fn random_projection(rng: &mut TestRng, schema: &TableSchema) -> Option<Vec<String>> {
    if rng.random_bool(0.7) {
        return None;
    }
    let n = rng.random_range(1..=schema.columns.len());
    Some(
        (0..n)
            .map(|_| pick(rng, &schema.columns).name.clone())
            .collect(),
    )
}

fn random_assignments(rng: &mut TestRng, schema: &TableSchema) -> Vec<(String, Value)> {
    let n = rng.random_range(1..=2usize);
    (0..n)
        .map(|_| {
            let column = if rng.random_bool(0.04) {
                "ghost".to_string()
            } else {
                pick(rng, &schema.columns).name.clone()
            };
            let dtype = schema
                .column(&column)
                .map(|c| c.dtype)
                .unwrap_or(DataType::Int);
            let value = match rng.random_range(0..12) {
                0 => Value::Null,
                1 => Value::Bool(false),
                _ => gen::value_for(rng, dtype),
            };
            (column, value)
        })
        .collect()
}

pub fn apply_engine(db: &mut Database, op: &Op) -> Outcome {
    match op {
        Op::Insert { table, row } => match db.insert(table, row.clone()) {
            Ok(()) => Outcome::Unit,
            Err(e) => Outcome::from_err(&e),
        },
        Op::Select {
            table,
            predicate,
            projection,
        } => match db.select(table, predicate, projection.as_deref()) {
            Ok(rows) => Outcome::Rows(rows),
            Err(e) => Outcome::from_err(&e),
        },
        Op::Update {
            table,
            assignments,
            predicate,
        } => match db.update(table, assignments, predicate) {
            Ok(n) => Outcome::Count(n),
            Err(e) => Outcome::from_err(&e),
        },
        Op::Delete { table, predicate } => match db.delete(table, predicate) {
            Ok(n) => Outcome::Count(n),
            Err(e) => Outcome::from_err(&e),
        },
        Op::CreateTable { schema, cover } => match db.create_table(schema, cover) {
            Ok(()) => Outcome::Unit,
            Err(e) => Outcome::from_err(&e),
        },
        Op::DropTable { table } => match db.drop_table(table) {
            Ok(()) => Outcome::Unit,
            Err(e) => Outcome::from_err(&e),
        },
    }
}

pub fn apply_oracle(mem: &mut MemDb, op: &Op) -> Outcome {
    match op {
        Op::Insert { table, row } => match mem.insert(table, row.clone()) {
            Ok(()) => Outcome::Unit,
            Err(e) => Outcome::from_err(&e),
        },
        Op::Select {
            table,
            predicate,
            projection,
        } => match mem.select(table, predicate, projection.as_deref()) {
            Ok(rows) => Outcome::Rows(rows),
            Err(e) => Outcome::from_err(&e),
        },
        Op::Update {
            table,
            assignments,
            predicate,
        } => match mem.update(table, assignments, predicate) {
            Ok(n) => Outcome::Count(n),
            Err(e) => Outcome::from_err(&e),
        },
        Op::Delete { table, predicate } => match mem.delete(table, predicate) {
            Ok(n) => Outcome::Count(n),
            Err(e) => Outcome::from_err(&e),
        },
        Op::CreateTable { schema, .. } => match mem.create_table(schema) {
            Ok(()) => Outcome::Unit,
            Err(e) => Outcome::from_err(&e),
        },
        Op::DropTable { table } => match mem.drop_table(table) {
            Ok(()) => Outcome::Unit,
            Err(e) => Outcome::from_err(&e),
        },
    }
}

/// Runs one op against both stores and asserts identical outcomes; returns
/// the shared outcome.
pub fn apply_both(db: &mut Database, mem: &mut MemDb, op: &Op, context: &str) -> Outcome {
    let engine_outcome = apply_engine(db, op);
    let oracle_outcome = apply_oracle(mem, op);
    assert_eq!(
        engine_outcome, oracle_outcome,
        "{context}: {} diverged on {op:?}",
        op.name()
    );
    engine_outcome
}

/// Asserts both stores hold identical data, table by table.
pub fn assert_same_state(db: &Database, mem: &MemDb, context: &str) {
    let engine_tables: Vec<&str> = db.tables().map(|(n, _)| n).collect();
    assert_eq!(engine_tables, mem.table_names(), "{context}: table sets differ");
    for (name, _) in db.tables() {
        let engine_rows = db
            .select(name, &Predicate::all(), None)
            .unwrap_or_else(|e| panic!("{context}: select-all {name} failed: {e}"));
        let oracle_rows = mem.rows(name).unwrap();
        assert_eq!(
            engine_rows, oracle_rows,
            "{context}: table {name} contents differ"
        );
    }
}
