//! Typed values, rows, and the flat-file record block.
//!
//! Rows serialize one record per LF-terminated line with fields joined by
//! the 0x1F unit separator, the delimited-text lineage of flat files but
//! with a separator that cannot occur in rendered values unescaped. Three
//! escapes keep the format total: `\\` for a backslash, `\n` for a line
//! feed, `\f` for the separator. A field that is exactly `\N` is NULL.
//!
//! The encoded block is the payload of the table image's trailer frame.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::schema::{DataType, TableSchema, UNIT_SEP};

/// A typed cell value.
///
/// `Money` counts ten-thousandths exactly (scale-4 fixed point), so currency
/// arithmetic never rounds. `Float` is a finite `f64`: NaN and the
/// infinities are rejected at the boundaries so comparisons stay total.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Char(String),
    Text(String),
    Int(i64),
    Float(f64),
    Money(i64),
    Bool(bool),
    Null,
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Whether this value can live in a column of type `dtype` (NULL is
    /// handled separately by nullability).
    pub fn matches_type(&self, dtype: DataType) -> bool {
        matches!(
            (self, dtype),
            (Value::Char(_), DataType::Char(_))
                | (Value::Text(_), DataType::Text)
                | (Value::Int(_), DataType::Int)
                | (Value::Float(_), DataType::Float)
                | (Value::Money(_), DataType::Money)
                | (Value::Bool(_), DataType::Boolean)
        )
    }

    /// Total order between two values of the same kind. NULLs and kind
    /// mismatches are the caller's problem; the engine screens both out
    /// before comparing.
    pub fn compare_same_kind(&self, other: &Value) -> std::cmp::Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Money(a), Value::Money(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a
                .partial_cmp(b)
                .expect("NaN is rejected before values are stored"),
            (Value::Char(a), Value::Char(b)) | (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (a, b) => panic!("comparing values of different kinds: {a:?} vs {b:?}"),
        }
    }
}

/// Parses a text literal as a value of the given type.
pub fn parse_value(text: &str, dtype: DataType) -> Result<Value> {
    let type_error = || Error::TypeParse {
        text: text.to_string(),
        expected: dtype,
        line: None,
    };
    match dtype {
        DataType::Int => match text.parse::<i64>() {
            Ok(n) => Ok(Value::Int(n)),
            Err(e) => match e.kind() {
                std::num::IntErrorKind::PosOverflow | std::num::IntErrorKind::NegOverflow => {
                    Err(Error::IntOutOfRange(text.to_string()))
                }
                _ => Err(type_error()),
            },
        },
        DataType::Float => {
            let f: f64 = text.parse().map_err(|_| type_error())?;
            if !f.is_finite() {
                return Err(type_error());
            }
            // Collapse -0.0 so a float compares, hashes as a key, and
            // renders the same way however it was written.
            Ok(Value::Float(if f == 0.0 { 0.0 } else { f }))
        }
        DataType::Money => parse_money(text).ok_or_else(|| match money_fraction_len(text) {
            Some(n) if n > 4 => Error::MoneyPrecisionExceeded(text.to_string()),
            _ if money_shape_ok(text) => Error::IntOutOfRange(text.to_string()),
            _ => type_error(),
        }),
        DataType::Boolean => {
            if text.eq_ignore_ascii_case("true") {
                Ok(Value::Bool(true))
            } else if text.eq_ignore_ascii_case("false") {
                Ok(Value::Bool(false))
            } else {
                Err(type_error())
            }
        }
        DataType::Char(max) => {
            let length = text.chars().count();
            if length > max.get() as usize {
                return Err(Error::CharTooLong {
                    length,
                    max: max.get(),
                });
            }
            Ok(Value::Char(text.to_string()))
        }
        DataType::Text => Ok(Value::Text(text.to_string())),
    }
}

/// Splits a candidate money literal into (negative, integer digits,
/// fraction digits). Returns `None` when the shape is wrong.
fn money_parts(text: &str) -> Option<(bool, &str, &str)> {
    let (negative, rest) = match text.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match rest.split_once('.') {
        Some((i, f)) => (i, f),
        None => (rest, ""),
    };
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || (rest.contains('.') && !all_digits(frac_part)) {
        return None;
    }
    Some((negative, int_part, frac_part))
}

fn money_shape_ok(text: &str) -> bool {
    money_parts(text).is_some()
}

fn money_fraction_len(text: &str) -> Option<usize> {
    money_parts(text).map(|(_, _, f)| f.len())
}

/// Exact decimal-to-scaled-integer conversion; no float intermediate.
fn parse_money(text: &str) -> Option<Value> {
    let (negative, int_part, frac_part) = money_parts(text)?;
    if frac_part.len() > 4 {
        return None;
    }
    let mut scaled: i128 = 0;
    for b in int_part.bytes() {
        scaled = scaled.checked_mul(10)?.checked_add((b - b'0') as i128)?;
    }
    scaled = scaled.checked_mul(10_000)?;
    let mut frac: i128 = 0;
    for b in frac_part.bytes() {
        frac = frac * 10 + (b - b'0') as i128;
    }
    frac *= 10i128.pow(4 - frac_part.len() as u32);
    scaled = scaled.checked_add(frac)?;
    if negative {
        scaled = -scaled;
    }
    i64::try_from(scaled).ok().map(Value::Money)
}

/// Renders a value to its canonical text: `parse_value(render_value(v), t)`
/// gives `v` back for the matching `t`.
pub fn render_value(value: &Value) -> String {
    match value {
        Value::Char(s) | Value::Text(s) => s.clone(),
        Value::Int(n) => n.to_string(),
        Value::Float(f) => {
            // Rust's float Display already picks the shortest digits that
            // round-trip; only -0.0 needs flattening.
            let f = if *f == 0.0 { 0.0 } else { *f };
            format!("{f}")
        }
        Value::Money(scaled) => {
            let magnitude = (*scaled as i128).unsigned_abs();
            format!(
                "{}{}.{:04}",
                if *scaled < 0 { "-" } else { "" },
                magnitude / 10_000,
                magnitude % 10_000
            )
        }
        Value::Bool(b) => b.to_string(),
        Value::Null => "\\N".to_string(),
    }
}

/// An ordered tuple, positionally aligned with a schema's columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    values: Vec<Value>,
}

impl Row {
    pub fn new(values: Vec<Value>) -> Row {
        Row { values }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The values at the given column positions, in that order.
    pub fn project(&self, indices: &[usize]) -> Vec<Value> {
        indices.iter().map(|&i| self.values[i].clone()).collect()
    }

    pub fn set(&mut self, index: usize, value: Value) {
        self.values[index] = value;
    }
}

impl From<Vec<Value>> for Row {
    fn from(values: Vec<Value>) -> Row {
        Row::new(values)
    }
}

impl std::ops::Index<usize> for Row {
    type Output = Value;
    fn index(&self, index: usize) -> &Value {
        &self.values[index]
    }
}

/// Checks a row against a schema: arity, per-column type compatibility, and
/// nullability.
pub fn typecheck_row(schema: &TableSchema, row: &Row) -> Result<()> {
    if row.len() != schema.columns.len() {
        return Err(Error::ArityMismatch {
            expected: schema.columns.len(),
            got: row.len(),
        });
    }
    for (column, value) in schema.columns.iter().zip(row.values()) {
        match value {
            Value::Null => {
                if !column.nullable {
                    return Err(Error::NullNotAllowed {
                        column: column.name.clone(),
                    });
                }
            }
            Value::Char(s) => {
                let max = match column.dtype {
                    DataType::Char(n) => n.get(),
                    _ => {
                        return Err(Error::TypeMismatch {
                            column: column.name.clone(),
                        })
                    }
                };
                let length = s.chars().count();
                if length > max as usize {
                    return Err(Error::CharTooLong { length, max });
                }
            }
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
    }
    Ok(())
}

fn escape_into(out: &mut String, field: &str) {
    for ch in field.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            UNIT_SEP => out.push_str("\\f"),
            c => out.push(c),
        }
    }
}

fn unescape(field: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('f') => out.push(UNIT_SEP),
            Some(c) => return Err(format!("bad escape \\{c}")),
            None => return Err("dangling backslash".to_string()),
        }
    }
    Ok(out)
}

/// Encodes rows into the record block: one line per row, fields in column
/// order. Every row must already typecheck.
pub fn encode_records(schema: &TableSchema, rows: &[Row]) -> Result<Vec<u8>> {
    let mut out = String::new();
    for row in rows {
        typecheck_row(schema, row)?;
        for (i, value) in row.values().iter().enumerate() {
            if i > 0 {
                out.push(UNIT_SEP);
            }
            if value.is_null() {
                out.push_str("\\N");
            } else {
                escape_into(&mut out, &render_value(value));
            }
        }
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Decodes a record block against its schema. Every returned row
/// typechecks; the empty block is the empty table.
pub fn decode_records(schema: &TableSchema, bytes: &[u8]) -> Result<Vec<Row>> {
    let malformed = |line: usize, reason: String| Error::MalformedRecordBlock { line, reason };
    let text = std::str::from_utf8(bytes)
        .map_err(|e| malformed(0, format!("record block is not UTF-8: {e}")))?;
    let mut rows = Vec::new();
    for (i, line) in crate::schema::lf_lines(text).enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|reason| malformed(line_no, reason.to_string()))?;
        let fields: Vec<&str> = line.split(UNIT_SEP).collect();
        if fields.len() != schema.columns.len() {
            return Err(malformed(
                line_no,
                format!(
                    "row has {} fields but the schema has {} columns",
                    fields.len(),
                    schema.columns.len()
                ),
            ));
        }
        let mut values = Vec::with_capacity(fields.len());
        for (field, column) in fields.iter().zip(&schema.columns) {
            if *field == "\\N" {
                values.push(Value::Null);
                continue;
            }
            let raw = unescape(field).map_err(|reason| malformed(line_no, reason))?;
            let value = parse_value(&raw, column.dtype).map_err(|e| match e {
                Error::TypeParse { text, expected, .. } => Error::TypeParse {
                    text,
                    expected,
                    line: Some(line_no),
                },
                other => other,
            })?;
            values.push(value);
        }
        let row = Row::new(values);
        typecheck_row(schema, &row)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Renders a row for human output (diagnostics, key names in errors).
pub fn render_key(schema: &TableSchema, indices: &[usize], row: &Row) -> String {
    let mut out = String::new();
    for (n, &i) in indices.iter().enumerate() {
        if n > 0 {
            out.push_str(", ");
        }
        let _ = write!(
            out,
            "{}={}",
            schema.columns[i].name,
            render_value(&row[i])
        );
    }
    out
}
