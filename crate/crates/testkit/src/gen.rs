//! Seeded random generators for schemas, values, rows, and covers.

use hydb::cover;
use hydb::record::{Row, Value};
use hydb::schema::{Column, DataType, TableSchema};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn identifier(rng: &mut TestRng) -> String {
    const FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyz_";
    const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
    let len = rng.random_range(1..=12usize);
    let mut out = String::new();
    out.push(FIRST[rng.random_range(0..FIRST.len())] as char);
    for _ in 1..len {
        out.push(REST[rng.random_range(0..REST.len())] as char);
    }
    out
}

pub fn datatype(rng: &mut TestRng) -> DataType {
    match rng.random_range(0..6) {
        0 => DataType::char(rng.random_range(1..=40)),
        1 => DataType::Text,
        2 => DataType::Int,
        3 => DataType::Float,
        4 => DataType::Money,
        _ => DataType::Boolean,
    }
}

/// A random valid schema: up to 16 uniquely named columns covering every
/// type kind, primary key over a non-empty prefix of the non-nullable ones.
pub fn schema(rng: &mut TestRng) -> TableSchema {
    let table_name = identifier(rng);
    let column_count = rng.random_range(1..=16usize);
    let mut names = std::collections::HashSet::new();
    let mut columns = Vec::new();
    while columns.len() < column_count {
        let name = identifier(rng);
        if !names.insert(name.clone()) {
            continue;
        }
        columns.push(Column::new(name, datatype(rng), rng.random_bool(0.4)));
    }
    // Ensure at least one non-nullable column to carry the key.
    if columns.iter().all(|c| c.nullable) {
        columns[0].nullable = false;
    }
    let candidates: Vec<String> = columns
        .iter()
        .filter(|c| !c.nullable)
        .map(|c| c.name.clone())
        .collect();
    let pk_len = rng.random_range(1..=candidates.len().min(3));
    let primary_key = candidates[..pk_len].to_vec();
    let schema = TableSchema::new(table_name, columns, primary_key);
    schema.validate().expect("generated schema is valid");
    schema
}

/// Text with the characters that stress the record escaping: separators,
/// newlines, backslashes, quotes, and some unicode.
pub fn text(rng: &mut TestRng, max_chars: usize) -> String {
    const POOL: &[&str] = &[
        "", "a", "bob", "\\N", "x\u{1f}y", "line\nfeed", "back\\slash", "he said \"hi\"",
        "it's", "héllo", "平和", "🙂ok", "trailing ", " leading", "a,b", "_",
    ];
    let mut s = POOL[rng.random_range(0..POOL.len())].to_string();
    while s.chars().count() > max_chars {
        s.pop();
    }
    s
}

/// A random value of the given type; NULL handling stays with the caller.
pub fn value_for(rng: &mut TestRng, dtype: DataType) -> Value {
    match dtype {
        DataType::Int => Value::Int(if rng.random_bool(0.85) {
            rng.random_range(0..8)
        } else {
            rng.random_range(-1_000_000..1_000_000)
        }),
        DataType::Float => {
            const POOL: &[f64] = &[0.0, 0.1, 1.5, -2.25, 3.0, 1e9, -1e-9, 42.0];
            Value::Float(POOL[rng.random_range(0..POOL.len())])
        }
        DataType::Money => Value::Money(if rng.random_bool(0.85) {
            rng.random_range(0..50_000)
        } else {
            rng.random_range(-1_000_000_000..1_000_000_000)
        }),
        DataType::Boolean => Value::Bool(rng.random_bool(0.5)),
        DataType::Char(max) => Value::Char(text(rng, max.get() as usize)),
        DataType::Text => Value::Text(text(rng, 64)),
    }
}

/// A conforming row for the schema, with NULLs sprinkled into nullable
/// columns.
pub fn row_for(rng: &mut TestRng, schema: &TableSchema) -> Row {
    Row::new(
        schema
            .columns
            .iter()
            .map(|c| {
                if c.nullable && rng.random_bool(0.25) {
                    Value::Null
                } else {
                    value_for(rng, c.dtype)
                }
            })
            .collect(),
    )
}

/// A random structurally valid foreign-key descriptor.
pub fn foreign_key(rng: &mut TestRng) -> hydb::schema::ForeignKey {
    let child = identifier(rng);
    let mut parent = identifier(rng);
    while parent == child {
        parent = identifier(rng);
    }
    let arity = rng.random_range(1..=3usize);
    let unique_columns = |rng: &mut TestRng| -> Vec<String> {
        let mut set = std::collections::BTreeSet::new();
        while set.len() < arity {
            set.insert(identifier(rng));
        }
        set.into_iter().collect()
    };
    let fk = hydb::schema::ForeignKey::new(
        child,
        unique_columns(rng),
        parent,
        unique_columns(rng),
    );
    fk.validate().expect("generated foreign key is valid");
    fk
}

/// Which cover format to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverKind {
    Bmp24,
    Bmp8,
    Ppm,
    Pgm,
}

/// A noise-filled cover image of a random supported format, at least
/// `width x height` pixels.
pub fn cover_bytes(rng: &mut TestRng, width: u32, height: u32) -> Vec<u8> {
    let kind = match rng.random_range(0..4) {
        0 => CoverKind::Bmp24,
        1 => CoverKind::Bmp8,
        2 => CoverKind::Ppm,
        _ => CoverKind::Pgm,
    };
    cover_bytes_of(rng, kind, width, height)
}

pub fn cover_bytes_of(rng: &mut TestRng, kind: CoverKind, width: u32, height: u32) -> Vec<u8> {
    match kind {
        CoverKind::Bmp24 => cover::bmp24(width, height, |_, _| rng.random()),
        CoverKind::Bmp8 => cover::bmp8_gray(width, height, |_, _| rng.random()),
        CoverKind::Ppm => cover::ppm(width, height, |_, _| rng.random()),
        CoverKind::Pgm => cover::pgm(width, height, |_, _| rng.random()),
    }
}
