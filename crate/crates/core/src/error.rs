//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. Variants map
//! one-to-one onto the failure modes of the layer that raises them: image
//! parsing and the two storage channels, schema and record codecs, and the
//! database engine itself.

use std::path::PathBuf;

use crate::schema::DataType;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Which of the two hidden-storage channels an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// The ±1 LSB stream inside the pixel array.
    Lsb,
    /// The framed payload appended after the image's declared end.
    Trailer,
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Channel::Lsb => f.write_str("LSB"),
            Channel::Trailer => f.write_str("trailer"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // --- image container -------------------------------------------------
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed image header: {0}")]
    MalformedHeader(String),
    #[error("BMP compression type {0} is not supported; only uncompressed images carry a stable LSB channel")]
    CompressedImage(u32),
    #[error("framed payload needs {needed} carrier bytes but the pixel array provides {available}")]
    InsufficientCapacity { needed: usize, available: usize },
    #[error("the LSB channel already holds a frame; refusing to overwrite")]
    ChannelOccupied,
    #[error("corrupt {channel} frame: {reason}")]
    CorruptFrame { channel: Channel, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // --- schema codec -----------------------------------------------------
    #[error("duplicate column {0:?}")]
    DuplicateColumn(String),
    #[error("primary key must name at least one column")]
    EmptyPrimaryKey,
    #[error("primary key names unknown column {0:?}")]
    UnknownPkColumn(String),
    #[error("primary key column {0:?} must be NOT NULL")]
    NullablePkColumn(String),
    #[error("invalid identifier {0:?}")]
    BadIdentifier(String),
    #[error("malformed schema text (line {line}): {reason}")]
    MalformedSchemaText { line: usize, reason: String },
    #[error("malformed foreign-key text: {0}")]
    MalformedFkText(String),
    #[error("invalid foreign key: {0}")]
    InvalidForeignKey(String),

    // --- values and records -----------------------------------------------
    #[error("cannot parse {text:?} as {expected}{}", fmt_line(.line))]
    TypeParse {
        text: String,
        expected: DataType,
        line: Option<usize>,
    },
    #[error("value is {length} code points but the column is CHAR({max})")]
    CharTooLong { length: usize, max: u32 },
    #[error("money value {0:?} has more than 4 fraction digits")]
    MoneyPrecisionExceeded(String),
    #[error("integer value {0:?} is out of range")]
    IntOutOfRange(String),
    #[error("row has {got} values but the schema has {expected} columns")]
    ArityMismatch { expected: usize, got: usize },
    #[error("value for column {column:?} does not match its declared type")]
    TypeMismatch { column: String },
    #[error("column {column:?} is NOT NULL")]
    NullNotAllowed { column: String },
    #[error("malformed record block (line {line}): {reason}")]
    MalformedRecordBlock { line: usize, reason: String },

    // --- engine -----------------------------------------------------------
    #[error("database is locked by {holder}")]
    LockHeld { holder: String },
    #[error("two images both claim table {0:?}")]
    DuplicateTable(String),
    #[error("dangling foreign key: {0}")]
    DanglingLink(String),
    #[error("foreign-key column types differ: {0}")]
    TypeMismatchLink(String),
    #[error("table {0:?} already exists")]
    TableExists(String),
    #[error("no table named {0:?}")]
    UnknownTable(String),
    #[error("no column named {column:?} in table {table:?}")]
    UnknownColumn { table: String, column: String },
    #[error("predicate on column {column:?} is not comparable: {reason}")]
    PredicateTypeMismatch { column: String, reason: String },
    #[error("duplicate primary key ({key})")]
    PkViolation { key: String },
    #[error("foreign key {link}: no parent row with key ({key})")]
    FkViolation { link: String, key: String },
    #[error("{children} child row(s) still reference the key")]
    RestrictViolation { children: usize },
    #[error("{0} existing child row(s) violate the foreign key")]
    ExistingRowsViolate(usize),
    #[error("a foreign key still references table: {0}")]
    LinkExists(String),
    #[error("corrupt database file {path}: {source}")]
    CorruptDbFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" (line {n})"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a path to an I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps a decode error raised while reading a file the database owns.
    pub fn corrupt_db_file(path: impl Into<PathBuf>, source: Error) -> Self {
        Error::CorruptDbFile {
            path: path.into(),
            source: Box::new(source),
        }
    }

    /// A short stable name for the error kind, independent of its payload.
    ///
    /// Used by tests that compare engine behavior against a reference
    /// implementation, and by the CLI to pick an exit code.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::CompressedImage(_) => "CompressedImage",
            Error::InsufficientCapacity { .. } => "InsufficientCapacity",
            Error::ChannelOccupied => "ChannelOccupied",
            Error::CorruptFrame { .. } => "CorruptFrame",
            Error::Io { .. } => "Io",
            Error::DuplicateColumn(_) => "DuplicateColumn",
            Error::EmptyPrimaryKey => "EmptyPrimaryKey",
            Error::UnknownPkColumn(_) => "UnknownPkColumn",
            Error::NullablePkColumn(_) => "NullablePkColumn",
            Error::BadIdentifier(_) => "BadIdentifier",
            Error::MalformedSchemaText { .. } => "MalformedSchemaText",
            Error::MalformedFkText(_) => "MalformedFkText",
            Error::InvalidForeignKey(_) => "InvalidForeignKey",
            Error::TypeParse { .. } => "TypeParse",
            Error::CharTooLong { .. } => "CharTooLong",
            Error::MoneyPrecisionExceeded(_) => "MoneyPrecisionExceeded",
            Error::IntOutOfRange(_) => "IntOutOfRange",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::TypeMismatch { .. } => "TypeMismatch",
            Error::NullNotAllowed { .. } => "NullNotAllowed",
            Error::MalformedRecordBlock { .. } => "MalformedRecordBlock",
            Error::LockHeld { .. } => "LockHeld",
            Error::DuplicateTable(_) => "DuplicateTable",
            Error::DanglingLink(_) => "DanglingLink",
            Error::TypeMismatchLink(_) => "TypeMismatchLink",
            Error::TableExists(_) => "TableExists",
            Error::UnknownTable(_) => "UnknownTable",
            Error::UnknownColumn { .. } => "UnknownColumn",
            Error::PredicateTypeMismatch { .. } => "PredicateTypeMismatch",
            Error::PkViolation { .. } => "PkViolation",
            Error::FkViolation { .. } => "FkViolation",
            Error::RestrictViolation { .. } => "RestrictViolation",
            Error::ExistingRowsViolate(_) => "ExistingRowsViolate",
            Error::LinkExists(_) => "LinkExists",
            Error::CorruptDbFile { .. } => "CorruptDbFile",
        }
    }

    /// The count carried by count-bearing violations, if any.
    pub fn violation_count(&self) -> Option<usize> {
        match self {
            Error::RestrictViolation { children } => Some(*children),
            Error::ExistingRowsViolate(n) => Some(*n),
            _ => None,
        }
    }
}
