//! hydb: relational tables that live inside ordinary image files.
//!
//! Each table is one image. The table's schema rides in the pixel array's
//! least significant bits (a ±1 parity nudge per byte, visually invisible),
//! and its records ride in a CRC-framed block appended after the image's
//! declared end, so the file still opens in any viewer. Foreign keys get a
//! third image of their own, and a database is nothing more than a directory
//! of such images plus an advisory lock file.
//!
//! ```no_run
//! use hydb::{Column, Database, DataType, Predicate, Row, TableSchema, Value};
//!
//! let mut db = Database::open(std::path::Path::new("./payroll"))?;
//! let schema = TableSchema::new(
//!     "emp_master",
//!     vec![
//!         Column::new("emp_id", DataType::Int, false),
//!         Column::new("name", DataType::char(40), true),
//!     ],
//!     vec!["emp_id".into()],
//! );
//! db.create_table(&schema, std::path::Path::new("cover.bmp"))?;
//! db.insert("emp_master", Row::new(vec![Value::Int(1), Value::Char("alice".into())]))?;
//! let rows = db.select("emp_master", &Predicate::all(), None)?;
//! # Ok::<(), hydb::Error>(())
//! ```

pub mod cover;
pub mod engine;
pub mod error;
pub mod image;
pub mod record;
pub mod schema;

pub use engine::{
    CheckStatus, Comparator, Conjunct, Database, LinkEntry, Predicate, TableEntry, VerifyReport,
};
pub use error::{Channel, Error, Result};
pub use image::{ImageContainer, ImageFormat};
pub use record::{parse_value, render_value, Row, Value};
pub use schema::{Column, DataType, ForeignKey, TableSchema};
