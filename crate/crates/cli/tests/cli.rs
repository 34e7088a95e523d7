//! End-to-end tests against the built binary: exit codes, output bytes,
//! determinism, and agreement with the library API.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hydb::record::Value;
use hydb::{cover, Database, Predicate, Row};

fn hydb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn write_cover(dir: &Path, name: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(
        &path,
        cover::bmp24(64, 64, |x, y| [(x * 3) as u8, (y * 5) as u8, (x ^ y) as u8]),
    )
    .unwrap();
    path
}

/// Builds the employee fixture through the CLI alone; returns the db dir.
fn cli_fixture(root: &Path) -> PathBuf {
    fs::create_dir_all(root).unwrap();
    let db = root.join("db");
    let c1 = write_cover(root, "c1.bmp");
    let c2 = write_cover(root, "c2.bmp");
    let c3 = write_cover(root, "c3.bmp");
    let db_s = db.to_str().unwrap();
    assert_eq!(code(&hydb(&["init", db_s])), 0);
    assert_eq!(
        code(&hydb(&[
            "create-table",
            db_s,
            "--cover",
            c1.to_str().unwrap(),
            "--schema",
            "emp_master(emp_id INT NOT NULL, name CHAR(40), PRIMARY KEY(emp_id))",
        ])),
        0
    );
    assert_eq!(
        code(&hydb(&[
            "create-table",
            db_s,
            "--cover",
            c2.to_str().unwrap(),
            "--schema",
            "emp_salary(pay_id INT NOT NULL, emp_id INT, amount MONEY NOT NULL, PRIMARY KEY(pay_id))",
        ])),
        0
    );
    assert_eq!(
        code(&hydb(&[
            "link",
            db_s,
            "--child",
            "emp_salary(emp_id)",
            "--parent",
            "emp_master(emp_id)",
            "--cover",
            c3.to_str().unwrap(),
        ])),
        0
    );
    db
}

#[test]
fn select_prints_csv_rows_and_nothing_else() {
    let dir = tempfile::tempdir().unwrap();
    let db = cli_fixture(dir.path());
    let db = db.to_str().unwrap();
    for values in ["1, alice", "2, \"bob, jr\"", "3, \\N"] {
        assert_eq!(code(&hydb(&["insert", db, "emp_master", "--values", values])), 0);
    }
    let out = hydb(&["select", db, "emp_master"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "1,alice\n2,\"bob, jr\"\n3,\\N\n");

    let out = hydb(&[
        "select", db, "emp_master", "--where", "emp_id >= 2", "--columns", "name", "--output",
        "tsv",
    ]);
    assert_eq!(stdout(&out), "bob, jr\n\\N\n");
}

#[test]
fn identical_command_on_identical_state_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let db = cli_fixture(dir.path());
    let db = db.to_str().unwrap();
    hydb(&["insert", db, "emp_master", "--values", "1, ann"]);
    let args = ["select", db, "emp_master", "--where", "emp_id <= 5"];
    let first = hydb(&args);
    let second = hydb(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(code(&first), code(&second));
}

#[test]
fn exit_codes_match_the_documented_table() {
    let dir = tempfile::tempdir().unwrap();
    let db = cli_fixture(dir.path());
    let db = db.to_str().unwrap();

    // 1: usage problems.
    assert_eq!(code(&hydb(&["no-such-command"])), 1);
    assert_eq!(code(&hydb(&["select", db, "emp_master", "--bogus-flag"])), 1);
    assert_eq!(code(&hydb(&["select", db, "no_such_table"])), 1);
    assert_eq!(code(&hydb(&["select", db, "emp_master", "--where", "ghost = 1"])), 1);
    assert_eq!(
        code(&hydb(&["create-table", db, "--cover", "x", "--schema", "broken("])),
        1
    );

    // 2: constraint violations.
    assert_eq!(code(&hydb(&["insert", db, "emp_master", "--values", "1, a"])), 0);
    let dup = hydb(&["insert", db, "emp_master", "--values", "1, b"]);
    assert_eq!(code(&dup), 2);
    let stderr = String::from_utf8(dup.stderr).unwrap();
    assert!(stderr.contains("emp_id=1"), "names the key: {stderr}");
    assert_eq!(
        code(&hydb(&["insert", db, "emp_salary", "--values", "5, 99, 1.0"])),
        2
    );
    assert_eq!(code(&hydb(&["insert", db, "emp_master", "--values", "2"])), 2);
    // Deleting a parent row its child still references is refused.
    assert_eq!(
        code(&hydb(&["insert", db, "emp_salary", "--values", "5, 1, 1.0"])),
        0
    );
    assert_eq!(code(&hydb(&["delete", db, "emp_master"])), 2);

    // 4: environment.
    assert_eq!(code(&hydb(&["select", "/nonexistent-dir", "t"])), 4);

    // 0 and help.
    assert_eq!(code(&hydb(&["--help"])), 0);
}

#[test]
fn verify_reports_corruption_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let db_dir = cli_fixture(dir.path());
    let db = db_dir.to_str().unwrap();
    hydb(&["insert", db, "emp_master", "--values", "1, ann"]);

    let ok = hydb(&["verify", db]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("overall: ok"));

    // Flip a bit inside the trailer payload.
    let table = db_dir.join("emp_master.bmp");
    let mut bytes = fs::read(&table).unwrap();
    let image_end = hydb::ImageContainer::parse(bytes.clone()).unwrap().image_end();
    bytes[image_end + 9] ^= 0x01;
    fs::write(&table, bytes).unwrap();

    let bad = hydb(&["verify", db]);
    assert_eq!(code(&bad), 3);
    assert!(stdout(&bad).contains("overall: FAILED"));
    assert!(stdout(&bad).contains("emp_master"));
}

#[test]
fn library_and_cli_agree_on_the_same_scenario() {
    // The same script, once through the binary and once through the API;
    // outcomes must match row for row and error for error.
    let dir = tempfile::tempdir().unwrap();
    let cli_db = cli_fixture(&dir.path().join("via_cli"));

    let lib_root = dir.path().join("via_lib");
    fs::create_dir_all(&lib_root).unwrap();
    let (mut lib_db, _) = hydb_testkit::fixture::build(&lib_root, 64, 64);

    let inserts: [(&str, &str, Row); 4] = [
        (
            "emp_master",
            "1, alice",
            Row::new(vec![Value::Int(1), Value::Char("alice".into())]),
        ),
        (
            "emp_master",
            "2, \\N",
            Row::new(vec![Value::Int(2), Value::Null]),
        ),
        (
            "emp_salary",
            "10, 1, 99.5",
            Row::new(vec![Value::Int(10), Value::Int(1), Value::Money(995_000)]),
        ),
        (
            "emp_master",
            "1, dup",
            Row::new(vec![Value::Int(1), Value::Char("dup".into())]),
        ),
    ];
    for (table, values, row) in inserts {
        let cli_outcome = code(&hydb(&[
            "insert",
            cli_db.to_str().unwrap(),
            table,
            "--values",
            values,
        ]));
        let lib_outcome = match lib_db.insert(table, row) {
            Ok(()) => 0,
            Err(hydb::Error::PkViolation { .. }) => 2,
            Err(e) => panic!("unexpected library error {e}"),
        };
        assert_eq!(cli_outcome, lib_outcome, "insert {table} {values}");
    }

    let cli_rows = stdout(&hydb(&["select", cli_db.to_str().unwrap(), "emp_master"]));
    let lib_rows = lib_db.select("emp_master", &Predicate::all(), None).unwrap();
    let lib_rendered: String = lib_rows
        .iter()
        .map(|r| {
            let cells: Vec<String> = r
                .values()
                .iter()
                .map(|v| match v {
                    Value::Null => "\\N".to_string(),
                    other => hydb::render_value(other),
                })
                .collect();
            cells.join(",") + "\n"
        })
        .collect();
    assert_eq!(cli_rows, lib_rendered);

    let cli_update = hydb(&[
        "update",
        cli_db.to_str().unwrap(),
        "emp_master",
        "--set",
        "name='x'",
        "--where",
        "emp_id >= 1",
    ]);
    let lib_count = lib_db
        .update(
            "emp_master",
            &[("name".into(), Value::Char("x".into()))],
            &hydb::Predicate::new(vec![hydb::Conjunct {
                column: "emp_id".into(),
                op: hydb::Comparator::Ge,
                literal: Value::Int(1),
            }]),
        )
        .unwrap();
    assert_eq!(stdout(&cli_update), format!("{lib_count}\n"));
}

#[test]
fn inspect_is_read_only_and_reports_occupancy() {
    let dir = tempfile::tempdir().unwrap();
    let db_dir = cli_fixture(dir.path());
    let table = db_dir.join("emp_master.bmp");
    let before = fs::read(&table).unwrap();

    let out = hydb(&["inspect", table.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("lsb_channel: schema \"emp_master\""));
    assert!(text.contains("trailer: payload 0 bytes"));
    assert_eq!(fs::read(&table).unwrap(), before);

    let link = db_dir.join("emp_salary__emp_master.fk.bmp");
    let out = hydb(&["inspect", link.to_str().unwrap()]);
    assert!(stdout(&out).contains("lsb_channel: foreign-key"));

    // A pristine cover shows empty channels and the delta histogram is all
    // zeros against itself.
    let cover_path = dir.path().join("c1.bmp");
    let out = hydb(&[
        "inspect",
        cover_path.to_str().unwrap(),
        "--cover",
        cover_path.to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains("lsb_channel: empty"));
    assert!(text.contains("trailer: absent"));
    assert!(text.contains("delta[-1]: 0"));
    assert!(text.contains("delta[+1]: 0"));
    assert!(text.contains("extra_bytes: 0"));
}

#[test]
fn concurrent_invocations_are_excluded_by_the_lock() {
    let dir = tempfile::tempdir().unwrap();
    let db_dir = cli_fixture(dir.path());
    // Hold the lock through the library, then try the CLI.
    let db = Database::open(&db_dir).unwrap();
    let out = hydb(&["select", db_dir.to_str().unwrap(), "emp_master"]);
    assert_eq!(code(&out), 4);
    drop(db);
    let out = hydb(&["select", db_dir.to_str().unwrap(), "emp_master"]);
    assert_eq!(code(&out), 0);
}
