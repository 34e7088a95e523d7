//! Relation schemas, foreign-key descriptors, and their text codecs.
//!
//! A table is a relation `R(P, A1 … An)`: a name, ordered typed columns, and
//! a primary key over one or more of them. Schemas serialize to a small
//! line-oriented text grammar (fields separated by the unit separator 0x1F,
//! lines LF-terminated) that rides in the LSB channel of the table's image:
//!
//! ```text
//! T␟<table_name>
//! C␟<column>␟<TYPE>␟<NULL|NOTNULL>      (one line per column, in order)
//! P␟<col>␟<col>…
//! ```
//!
//! Foreign keys get their own single-line grammar (tag `F`) and live in a
//! separate relationship image, so a directory of images is self-describing:
//! the first byte of a decoded payload says whether an image is a table or a
//! link.

use std::collections::HashSet;
use std::num::NonZeroU32;

use crate::error::{Error, Result};
use crate::image::ImageContainer;

/// Field separator inside schema, foreign-key, and record lines.
pub const UNIT_SEP: char = '\u{1F}';

/// Column data types. `CHAR(n)` bounds length in code points; `MONEY` is a
/// scale-4 fixed-point count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataType {
    Char(NonZeroU32),
    Text,
    Int,
    Float,
    Money,
    Boolean,
}

impl DataType {
    /// `CHAR(n)`, panicking on `n = 0`; use the enum directly to handle
    /// untrusted lengths.
    pub fn char(n: u32) -> DataType {
        DataType::Char(NonZeroU32::new(n).expect("CHAR length must be at least 1"))
    }

    fn parse_token(token: &str) -> Option<DataType> {
        match token {
            "TEXT" => Some(DataType::Text),
            "INT" => Some(DataType::Int),
            "FLOAT" => Some(DataType::Float),
            "MONEY" => Some(DataType::Money),
            "BOOLEAN" => Some(DataType::Boolean),
            _ => {
                let n = token.strip_prefix("CHAR(")?.strip_suffix(')')?;
                if !n.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                Some(DataType::Char(NonZeroU32::new(n.parse().ok()?)?))
            }
        }
    }
}

impl std::fmt::Display for DataType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataType::Char(n) => write!(f, "CHAR({n})"),
            DataType::Text => f.write_str("TEXT"),
            DataType::Int => f.write_str("INT"),
            DataType::Float => f.write_str("FLOAT"),
            DataType::Money => f.write_str("MONEY"),
            DataType::Boolean => f.write_str("BOOLEAN"),
        }
    }
}

/// A named, typed column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub dtype: DataType,
    pub nullable: bool,
}

impl Column {
    pub fn new(name: impl Into<String>, dtype: DataType, nullable: bool) -> Column {
        Column {
            name: name.into(),
            dtype,
            nullable,
        }
    }
}

/// A relation: name, ordered columns, primary key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub table_name: String,
    pub columns: Vec<Column>,
    pub primary_key: Vec<String>,
}

/// Identifiers are ASCII word characters, at most 64, not starting with a
/// digit. The separator and escape characters of the text grammars can
/// therefore never appear in one.
pub fn is_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    s.len() <= 64 && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn check_identifier(s: &str) -> Result<()> {
    if is_identifier(s) {
        Ok(())
    } else {
        Err(Error::BadIdentifier(s.to_string()))
    }
}

impl TableSchema {
    pub fn new(
        table_name: impl Into<String>,
        columns: Vec<Column>,
        primary_key: Vec<String>,
    ) -> TableSchema {
        TableSchema {
            table_name: table_name.into(),
            columns,
            primary_key,
        }
    }

    /// Checks every schema invariant: identifier rules, column-name
    /// uniqueness, and a non-empty primary key over non-nullable columns.
    pub fn validate(&self) -> Result<()> {
        check_identifier(&self.table_name)?;
        let mut seen = HashSet::new();
        for column in &self.columns {
            check_identifier(&column.name)?;
            if !seen.insert(column.name.as_str()) {
                return Err(Error::DuplicateColumn(column.name.clone()));
            }
        }
        if self.primary_key.is_empty() {
            return Err(Error::EmptyPrimaryKey);
        }
        let mut pk_seen = HashSet::new();
        for name in &self.primary_key {
            if !pk_seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
            match self.column(name) {
                None => return Err(Error::UnknownPkColumn(name.clone())),
                Some(c) if c.nullable => return Err(Error::NullablePkColumn(name.clone())),
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Looks up a column by name.
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Position of a column by name.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Column positions of the primary key, in key order.
    pub fn pk_indices(&self) -> Vec<usize> {
        self.primary_key
            .iter()
            .map(|n| self.column_index(n).expect("validated schema"))
            .collect()
    }

    /// Serializes the schema to its canonical text form. Equal schemas
    /// encode to equal bytes.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push('T');
        out.push(UNIT_SEP);
        out.push_str(&self.table_name);
        out.push('\n');
        for column in &self.columns {
            out.push('C');
            out.push(UNIT_SEP);
            out.push_str(&column.name);
            out.push(UNIT_SEP);
            out.push_str(&column.dtype.to_string());
            out.push(UNIT_SEP);
            out.push_str(if column.nullable { "NULL" } else { "NOTNULL" });
            out.push('\n');
        }
        out.push('P');
        for name in &self.primary_key {
            out.push(UNIT_SEP);
            out.push_str(name);
        }
        out.push('\n');
        out.into_bytes()
    }

    /// Parses the canonical text form back into a validated schema.
    pub fn decode(bytes: &[u8]) -> Result<TableSchema> {
        let malformed = |line: usize, reason: &str| Error::MalformedSchemaText {
            line,
            reason: reason.to_string(),
        };
        let text = std::str::from_utf8(bytes).map_err(|_| malformed(0, "payload is not UTF-8"))?;
        let mut table_name: Option<String> = None;
        let mut columns = Vec::new();
        let mut primary_key: Option<Vec<String>> = None;
        for (i, line) in lf_lines(text).enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|reason| malformed(line_no, reason))?;
            let fields: Vec<&str> = line.split(UNIT_SEP).collect();
            match fields[0] {
                "T" => {
                    if table_name.is_some() {
                        return Err(malformed(line_no, "second T line"));
                    }
                    if fields.len() != 2 {
                        return Err(malformed(line_no, "T line takes exactly one field"));
                    }
                    if primary_key.is_some() || !columns.is_empty() {
                        return Err(malformed(line_no, "T line must come first"));
                    }
                    table_name = Some(fields[1].to_string());
                }
                "C" => {
                    if table_name.is_none() {
                        return Err(malformed(line_no, "C line before T line"));
                    }
                    if primary_key.is_some() {
                        return Err(malformed(line_no, "C line after P line"));
                    }
                    if fields.len() != 4 {
                        return Err(malformed(line_no, "C line takes exactly three fields"));
                    }
                    let dtype = DataType::parse_token(fields[2])
                        .ok_or_else(|| malformed(line_no, "bad TYPE token"))?;
                    let nullable = match fields[3] {
                        "NULL" => true,
                        "NOTNULL" => false,
                        _ => return Err(malformed(line_no, "nullability must be NULL or NOTNULL")),
                    };
                    columns.push(Column::new(fields[1], dtype, nullable));
                }
                "P" => {
                    if primary_key.is_some() {
                        return Err(malformed(line_no, "second P line"));
                    }
                    if fields.len() < 2 {
                        return Err(malformed(line_no, "P line names no columns"));
                    }
                    primary_key = Some(fields[1..].iter().map(|s| s.to_string()).collect());
                }
                tag => return Err(malformed(line_no, &format!("unknown line tag {tag:?}"))),
            }
        }
        let schema = TableSchema::new(
            table_name.ok_or_else(|| malformed(0, "missing T line"))?,
            columns,
            primary_key.ok_or_else(|| malformed(0, "missing P line"))?,
        );
        schema.validate()?;
        Ok(schema)
    }
}

/// Referential-integrity policies. Only RESTRICT exists: operations that
/// would orphan a child row are rejected outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FkPolicy {
    Restrict,
}

/// A foreign-key descriptor: child columns reference the parent's primary
/// key. Persisted in its own relationship image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForeignKey {
    pub child_table: String,
    pub child_columns: Vec<String>,
    pub parent_table: String,
    pub parent_columns: Vec<String>,
    pub policy: FkPolicy,
}

impl ForeignKey {
    pub fn new(
        child_table: impl Into<String>,
        child_columns: Vec<String>,
        parent_table: impl Into<String>,
        parent_columns: Vec<String>,
    ) -> ForeignKey {
        ForeignKey {
            child_table: child_table.into(),
            child_columns,
            parent_table: parent_table.into(),
            parent_columns,
            policy: FkPolicy::Restrict,
        }
    }

    /// A short display name, `child(cols) -> parent(cols)`.
    pub fn label(&self) -> String {
        format!(
            "{}({}) -> {}({})",
            self.child_table,
            self.child_columns.join(","),
            self.parent_table,
            self.parent_columns.join(",")
        )
    }

    /// Checks the structural invariants of the descriptor itself (the
    /// engine separately checks it against live schemas).
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidForeignKey(reason);
        for name in [&self.child_table, &self.parent_table]
            .into_iter()
            .chain(&self.child_columns)
            .chain(&self.parent_columns)
        {
            if !is_identifier(name) {
                return Err(invalid(format!("bad identifier {name:?}")));
            }
        }
        if self.child_columns.is_empty() {
            return Err(invalid("column lists must not be empty".into()));
        }
        if self.child_columns.len() != self.parent_columns.len() {
            return Err(invalid(format!(
                "child names {} column(s) but parent names {}",
                self.child_columns.len(),
                self.parent_columns.len()
            )));
        }
        for cols in [&self.child_columns, &self.parent_columns] {
            let mut seen = HashSet::new();
            for c in cols {
                if !seen.insert(c.as_str()) {
                    return Err(invalid(format!("column {c:?} listed twice")));
                }
            }
        }
        if self.child_table == self.parent_table
            && self
                .child_columns
                .iter()
                .any(|c| self.parent_columns.contains(c))
        {
            return Err(invalid(
                "a self-referencing key must use disjoint column lists".into(),
            ));
        }
        Ok(())
    }

    /// Serializes the descriptor to its single-line text form.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push('F');
        for part in [
            self.child_table.as_str(),
            &self.child_columns.join(","),
            self.parent_table.as_str(),
            &self.parent_columns.join(","),
            "RESTRICT",
        ] {
            out.push(UNIT_SEP);
            out.push_str(part);
        }
        out.push('\n');
        out.into_bytes()
    }

    /// Parses the single-line text form back into a validated descriptor.
    pub fn decode(bytes: &[u8]) -> Result<ForeignKey> {
        let malformed = |reason: &str| Error::MalformedFkText(reason.to_string());
        let text =
            std::str::from_utf8(bytes).map_err(|_| malformed("payload is not UTF-8"))?;
        let line = text
            .strip_suffix('\n')
            .ok_or_else(|| malformed("missing final newline"))?;
        if line.contains('\n') {
            return Err(malformed("more than one line"));
        }
        let fields: Vec<&str> = line.split(UNIT_SEP).collect();
        if fields.len() != 6 || fields[0] != "F" {
            return Err(malformed("expected F line with five fields"));
        }
        if fields[5] != "RESTRICT" {
            return Err(malformed(&format!("unknown policy {:?}", fields[5])));
        }
        let split = |s: &str| -> Vec<String> { s.split(',').map(|c| c.to_string()).collect() };
        let fk = ForeignKey::new(fields[1], split(fields[2]), fields[3], split(fields[4]));
        fk.validate()
            .map_err(|e| malformed(&format!("invalid descriptor: {e}")))?;
        Ok(fk)
    }
}

/// What kind of payload an image's LSB channel holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Schema,
    ForeignKey,
    Unknown,
}

/// Classifies a decoded LSB payload by its leading tag without fully
/// parsing it. Table images start `T␟`, relationship images `F␟`.
pub fn payload_kind(payload: &[u8]) -> PayloadKind {
    match payload {
        [b'T', 0x1F, ..] => PayloadKind::Schema,
        [b'F', 0x1F, ..] => PayloadKind::ForeignKey,
        _ => PayloadKind::Unknown,
    }
}

/// Embeds a validated schema into the cover's LSB channel. The trailer is
/// untouched.
pub fn embed_schema(cover: &ImageContainer, schema: &TableSchema) -> Result<ImageContainer> {
    schema.validate()?;
    cover.lsb_embed(&schema.encode())
}

/// Extracts the schema a table image carries, if any.
pub fn extract_schema(container: &ImageContainer) -> Result<Option<TableSchema>> {
    match container.lsb_extract()? {
        None => Ok(None),
        Some(payload) => TableSchema::decode(&payload).map(Some),
    }
}

/// Embeds a validated foreign-key descriptor into the cover's LSB channel.
pub fn embed_fk(cover: &ImageContainer, fk: &ForeignKey) -> Result<ImageContainer> {
    fk.validate()?;
    cover.lsb_embed(&fk.encode())
}

/// Extracts the foreign-key descriptor a relationship image carries, if any.
pub fn extract_fk(container: &ImageContainer) -> Result<Option<ForeignKey>> {
    match container.lsb_extract()? {
        None => Ok(None),
        Some(payload) => ForeignKey::decode(&payload).map(Some),
    }
}

/// Iterates over LF-terminated lines, rejecting an unterminated tail.
pub(crate) fn lf_lines(text: &str) -> impl Iterator<Item = std::result::Result<&str, &'static str>> {
    let mut rest = text;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        Some(match rest.find('\n') {
            Some(at) => {
                let line = &rest[..at];
                rest = &rest[at + 1..];
                Ok(line)
            }
            None => {
                rest = "";
                Err("last line not LF-terminated")
            }
        })
    })
}
