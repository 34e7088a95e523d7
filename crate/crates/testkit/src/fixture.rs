//! The employee master/salary fixture used across the test suites: a parent
//! table, a child table, and the relationship image linking them.

use std::fs;
use std::path::{Path, PathBuf};

use hydb::schema::{Column, DataType, ForeignKey, TableSchema};
use hydb::{cover, Database};

pub fn master_schema() -> TableSchema {
    TableSchema::new(
        "emp_master",
        vec![
            Column::new("emp_id", DataType::Int, false),
            Column::new("name", DataType::char(40), true),
        ],
        vec!["emp_id".into()],
    )
}

pub fn salary_schema() -> TableSchema {
    TableSchema::new(
        "emp_salary",
        vec![
            Column::new("pay_id", DataType::Int, false),
            Column::new("emp_id", DataType::Int, true),
            Column::new("amount", DataType::Money, false),
        ],
        vec!["pay_id".into()],
    )
}

/// An extra table the DDL-heavy workloads create and drop at will.
pub fn scratch_schema() -> TableSchema {
    TableSchema::new(
        "scratch",
        vec![
            Column::new("k", DataType::Int, false),
            Column::new("v", DataType::Text, true),
            Column::new("f", DataType::Float, true),
            Column::new("b", DataType::Boolean, true),
        ],
        vec!["k".into()],
    )
}

pub fn employee_fk() -> ForeignKey {
    ForeignKey::new(
        "emp_salary",
        vec!["emp_id".into()],
        "emp_master",
        vec!["emp_id".into()],
    )
}

/// Writes a deterministic cover image under `dir` and returns its path.
pub fn write_cover(dir: &Path, name: &str, width: u32, height: u32) -> PathBuf {
    let path = dir.join(name);
    fs::write(
        &path,
        cover::bmp24(width, height, |x, y| {
            [(x * 7 + y) as u8, (y * 13) as u8, (x ^ y) as u8]
        }),
    )
    .unwrap();
    path
}

/// Builds the two-table fixture in `root/db` (covers live in `root/covers`)
/// and returns the open database plus the database directory.
pub fn build(root: &Path, cover_width: u32, cover_height: u32) -> (Database, PathBuf) {
    let covers = root.join("covers");
    fs::create_dir_all(&covers).unwrap();
    let db_dir = root.join("db");
    fs::create_dir_all(&db_dir).unwrap();
    let mut db = Database::open(&db_dir).unwrap();
    db.create_table(
        &master_schema(),
        &write_cover(&covers, "master_cover.bmp", cover_width, cover_height),
    )
    .unwrap();
    db.create_table(
        &salary_schema(),
        &write_cover(&covers, "salary_cover.bmp", cover_width, cover_height),
    )
    .unwrap();
    db.create_foreign_key(
        &employee_fk(),
        &write_cover(&covers, "link_cover.bmp", cover_width, cover_height),
    )
    .unwrap();
    (db, db_dir)
}

/// The in-memory twin of [`build`].
pub fn build_oracle() -> crate::oracle::MemDb {
    let mut mem = crate::oracle::MemDb::new();
    mem.create_table(&master_schema()).unwrap();
    mem.create_table(&salary_schema()).unwrap();
    mem.create_foreign_key(&employee_fk()).unwrap();
    mem
}
