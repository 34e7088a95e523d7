//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them). Every tolerance is pinned in the
//! assertions themselves.
//!
//! 1. capacity — 60,000-byte payload in an 800x600 24-bit BMP, reopened,
//!    with `inspect` reporting exactly 180,000 bytes of LSB capacity, < 2 s
//! 2. bounded distortion — 1,000 random schemas into random covers, every
//!    pixel delta in {-1, 0, +1}, bytes beyond the frame untouched, < 30 s
//! 3. pixel invariance — 100 seeds x 100 CRUD ops never touch [0, image_end)
//! 4. codec round-trips — 10,000 random cases per codec, zero failures
//! 5. oracle equivalence — 100 seeds x 200 ops match the reference store
//! 6. integrity enforcement — documented error kinds; single-bit corruption
//!    in CRC-covered regions always detected
//! 7. crash safety — fault injection at every write/rename boundary over
//!    50 mutations leaves the prior state verifiable

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use hydb::image::{ImageContainer, PendingSave, FRAME_OVERHEAD};
use hydb::record::{decode_records, encode_records, parse_value, render_value, Row, Value};
use hydb::schema::{embed_schema, extract_schema, ForeignKey, TableSchema};
use hydb::{cover, Database, Error, Predicate};
use hydb_testkit::workload::{self, Op, WorkloadCfg};
use hydb_testkit::{fixture, gen};
use rand::Rng as _;

fn pass(criterion: &str, detail: String) {
    println!("ACCEPTANCE {criterion}: PASS ({detail})");
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .filter(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            name != hydb::engine::LOCK_FILE && !name.ends_with(".tmp")
        })
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect()
}

fn restore(state: &[(PathBuf, Vec<u8>)]) {
    for (path, bytes) in state {
        fs::write(path, bytes).unwrap();
    }
}

#[test]
fn acceptance_1_capacity() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let db_dir = dir.path().join("db");
    fs::create_dir(&db_dir).unwrap();

    // An 800x600 24-bit cover: 1,440,000 pixel bytes, 180,000 bytes of LSB
    // capacity.
    let cover_bytes = cover::bmp24(800, 600, |x, y| {
        [(x * 3) as u8, (y * 5) as u8, (x ^ y) as u8]
    });
    let container = ImageContainer::parse(cover_bytes).unwrap();
    assert_eq!(container.pixel_length(), 1_440_000);
    assert_eq!(container.lsb_capacity(), 180_000);

    // Build a table whose record block is at least 60,000 bytes and store
    // it through the trailer channel.
    let schema = fixture::master_schema();
    let rows: Vec<Row> = (0..1500)
        .map(|i| Row::new(vec![Value::Int(i), Value::Char(format!("employee {i:030}"))]))
        .collect();
    let block = encode_records(&schema, &rows).unwrap();
    assert!(
        block.len() >= 60_000,
        "record payload is {} bytes",
        block.len()
    );
    let table_path = db_dir.join("emp_master.bmp");
    embed_schema(&container, &schema)
        .unwrap()
        .write_trailer(&block)
        .save_atomic(&table_path)
        .unwrap();

    // Reopen through the engine and read everything back.
    let db = Database::open(&db_dir).unwrap();
    let back = db.select("emp_master", &Predicate::all(), None).unwrap();
    assert_eq!(back, rows);
    drop(db);

    // `inspect` must report the capacity figure exactly.
    let output = Command::new(env!("CARGO_BIN_EXE_hydb"))
        .args(["inspect", table_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(
        text.contains("lsb_capacity_bytes: 180000"),
        "inspect said:\n{text}"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 2.0, "took {elapsed:?}");
    pass(
        "1 capacity",
        format!("{}-byte payload, {elapsed:.2?}", block.len()),
    );
}

#[test]
fn acceptance_2_bounded_distortion() {
    let started = Instant::now();
    let mut rng = gen::rng(0xD157);
    for case in 0..1_000u32 {
        let schema = gen::schema(&mut rng);
        let payload_len = schema.encode().len();
        let needed = 8 * (FRAME_OVERHEAD + payload_len);

        // A random-format cover with just enough pixel bytes plus slack.
        let kind = match case % 4 {
            0 => gen::CoverKind::Bmp24,
            1 => gen::CoverKind::Bmp8,
            2 => gen::CoverKind::Ppm,
            _ => gen::CoverKind::Pgm,
        };
        let height = 16u32;
        let samples = match kind {
            gen::CoverKind::Bmp24 | gen::CoverKind::Ppm => 3,
            _ => 1,
        };
        let width = (needed as u32 / (height * samples)) + 2;
        let bytes = gen::cover_bytes_of(&mut rng, kind, width, height);
        let cover = ImageContainer::parse(bytes).unwrap();
        assert!(cover.lsb_capacity() >= FRAME_OVERHEAD + payload_len);

        let stego = embed_schema(&cover, &schema)
            .unwrap_or_else(|e| panic!("case {case}: embed failed: {e}"));
        assert_eq!(
            extract_schema(&stego).unwrap().as_ref(),
            Some(&schema),
            "case {case}: round trip"
        );

        let a = cover.as_bytes();
        let b = stego.as_bytes();
        assert_eq!(a.len(), b.len());
        let frame_span =
            cover.pixel_offset()..cover.pixel_offset() + needed;
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            let delta = i32::from(*y) - i32::from(*x);
            assert!(
                (-1..=1).contains(&delta),
                "case {case}: byte {i} moved by {delta}"
            );
            if !frame_span.contains(&i) {
                assert_eq!(x, y, "case {case}: byte {i} beyond the frame changed");
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass("2 bounded distortion", format!("1000 embeds, {elapsed:.2?}"));
}

#[test]
fn acceptance_3_pixel_invariance() {
    for seed in 0..100u64 {
        let dir = tempfile::tempdir().unwrap();
        let (mut db, db_dir) = fixture::build(dir.path(), 32, 32);
        let mut mem = fixture::build_oracle();

        let frozen: Vec<(PathBuf, Vec<u8>)> = snapshot(&db_dir)
            .into_iter()
            .map(|(path, bytes)| {
                let end = ImageContainer::parse(bytes.clone()).unwrap().image_end();
                (path, bytes[..end].to_vec())
            })
            .collect();

        let mut rng = gen::rng(seed);
        let cfg = WorkloadCfg {
            ops: 100,
            ddl: false,
            scratch_cover: None,
        };
        for (i, op) in workload::random_ops(&mut rng, &cfg).iter().enumerate() {
            workload::apply_both(&mut db, &mut mem, op, &format!("seed {seed} op {i}"));
            for (path, image_part) in &frozen {
                let now = fs::read(path).unwrap();
                assert!(
                    now.len() >= image_part.len() && now[..image_part.len()] == image_part[..],
                    "seed {seed} op {i}: bytes below image_end of {} changed",
                    path.display()
                );
            }
        }
    }
    pass("3 pixel invariance", "100 seeds x 100 ops".to_string());
}

#[test]
fn acceptance_4_codec_round_trips() {
    const CASES: usize = 10_000;

    // Image serialize/parse.
    let mut rng = gen::rng(41);
    for _ in 0..CASES {
        let w = rng.random_range(1..=12);
        let h = rng.random_range(1..=12);
        let bytes = gen::cover_bytes(&mut rng, w, h);
        let c = ImageContainer::parse(bytes.clone())
            .unwrap_or_else(|e| panic!("{w}x{h} cover failed to parse: {e}"));
        assert_eq!(c.as_bytes(), &bytes[..]);
    }

    // Schema encode/decode.
    let mut rng = gen::rng(42);
    for _ in 0..CASES {
        let schema = gen::schema(&mut rng);
        assert_eq!(TableSchema::decode(&schema.encode()).unwrap(), schema);
    }

    // Foreign-key encode/decode.
    let mut rng = gen::rng(43);
    for _ in 0..CASES {
        let fk = gen::foreign_key(&mut rng);
        assert_eq!(ForeignKey::decode(&fk.encode()).unwrap(), fk);
    }

    // Record block encode/decode.
    let mut rng = gen::rng(44);
    for _ in 0..CASES {
        let schema = gen::schema(&mut rng);
        let rows: Vec<Row> = (0..rng.random_range(0..4usize))
            .map(|_| gen::row_for(&mut rng, &schema))
            .collect();
        let block = encode_records(&schema, &rows).unwrap();
        assert_eq!(decode_records(&schema, &block).unwrap(), rows);
    }

    // Value parse/render.
    let mut rng = gen::rng(45);
    for _ in 0..CASES {
        let dtype = gen::datatype(&mut rng);
        let value = gen::value_for(&mut rng, dtype);
        assert_eq!(parse_value(&render_value(&value), dtype).unwrap(), value);
    }

    pass("4 codec round-trips", format!("5 codecs x {CASES} cases"));
}

#[test]
fn acceptance_5_oracle_equivalence() {
    for seed in 0..100u64 {
        let dir = tempfile::tempdir().unwrap();
        let (mut db, _) = fixture::build(dir.path(), 32, 32);
        let mut mem = fixture::build_oracle();

        let mut rng = gen::rng(0xE0_0000 + seed);
        let cfg = WorkloadCfg {
            ops: 200,
            ddl: false,
            scratch_cover: None,
        };
        for (i, op) in workload::random_ops(&mut rng, &cfg).iter().enumerate() {
            workload::apply_both(&mut db, &mut mem, op, &format!("seed {seed} op {i}"));
        }
        workload::assert_same_state(&db, &mem, &format!("seed {seed} final"));
    }
    pass("5 oracle equivalence", "100 seeds x 200 ops".to_string());
}

#[test]
fn acceptance_6_integrity_enforcement() {
    let dir = tempfile::tempdir().unwrap();
    let (mut db, db_dir) = fixture::build(dir.path(), 32, 32);
    db.insert(
        "emp_master",
        Row::new(vec![Value::Int(1), Value::Char("alice".into())]),
    )
    .unwrap();
    db.insert(
        "emp_salary",
        Row::new(vec![Value::Int(10), Value::Int(1), Value::Money(42_0000)]),
    )
    .unwrap();

    // Orphan child insert.
    let err = db
        .insert(
            "emp_salary",
            Row::new(vec![Value::Int(11), Value::Int(9), Value::Money(1)]),
        )
        .unwrap_err();
    assert!(matches!(err, Error::FkViolation { .. }), "got {err}");

    // Referenced-parent delete.
    let err = db.delete("emp_master", &Predicate::all()).unwrap_err();
    assert!(
        matches!(err, Error::RestrictViolation { children: 1 }),
        "got {err}"
    );

    // Referenced-key update.
    let err = db
        .update("emp_master", &[("emp_id".into(), Value::Int(5))], &Predicate::all())
        .unwrap_err();
    assert!(
        matches!(err, Error::RestrictViolation { children: 1 }),
        "got {err}"
    );

    assert!(db.verify().ok());

    // Single-bit corruption anywhere in a CRC-covered region is always
    // detected: every payload and CRC bit of the trailer frame, and every
    // payload and CRC carrier bit of the LSB frame.
    let mut flips = 0usize;
    for (path, pristine) in snapshot(&db_dir) {
        let container = ImageContainer::parse(pristine.clone()).unwrap();

        // Trailer frame: payload + CRC bytes start 9 bytes past image_end.
        if let Ok(Some(payload)) = container.read_trailer() {
            let start = container.image_end() + 9;
            for offset in 0..payload.len() + 4 {
                for bit in 0..8 {
                    let mut tampered = pristine.clone();
                    tampered[start + offset] ^= 1 << bit;
                    fs::write(&path, &tampered).unwrap();
                    assert!(
                        !db.verify().ok(),
                        "{}: trailer bit {bit} of byte {offset} went unnoticed",
                        path.display()
                    );
                    flips += 1;
                }
            }
        }

        // LSB frame: one carrier byte per frame bit; the payload + CRC bits
        // start after the 9-byte header, i.e. 72 carriers in.
        if let Ok(Some(payload)) = container.lsb_extract() {
            let first = container.pixel_offset() + 9 * 8;
            for i in 0..(payload.len() + 4) * 8 {
                let mut tampered = pristine.clone();
                tampered[first + i] ^= 1;
                fs::write(&path, &tampered).unwrap();
                assert!(
                    !db.verify().ok(),
                    "{}: LSB carrier {i} went unnoticed",
                    path.display()
                );
                flips += 1;
            }
        }

        fs::write(&path, &pristine).unwrap();
    }
    assert!(db.verify().ok());

    // And a fistful of random double-checks across both regions.
    let mut rng = gen::rng(66);
    let state = snapshot(&db_dir);
    for _ in 0..50 {
        let (path, pristine) = &state[rng.random_range(0..state.len())];
        let container = ImageContainer::parse(pristine.clone()).unwrap();
        let payload_len = container.read_trailer().unwrap().map(|p| p.len());
        if let Some(len) = payload_len {
            let start = container.image_end() + 9;
            let offset = rng.random_range(0..len + 4);
            let bit = rng.random_range(0..8);
            let mut tampered = pristine.clone();
            tampered[start + offset] ^= 1 << bit;
            fs::write(path, &tampered).unwrap();
            assert!(!db.verify().ok());
            fs::write(path, pristine).unwrap();
        }
    }
    assert!(db.verify().ok());

    pass("6 integrity enforcement", format!("{flips} bit flips detected"));
}

#[test]
fn acceptance_7_crash_safety() {
    let dir = tempfile::tempdir().unwrap();
    let (db, db_dir) = fixture::build(dir.path(), 32, 32);
    let mut mem = fixture::build_oracle();
    drop(db);

    // 50 mutations drawn from the workload generator.
    let mut rng = gen::rng(0xC8A54);
    let cfg = WorkloadCfg {
        ops: 50,
        ddl: false,
        scratch_cover: None,
    };
    let mut mutations: Vec<Op> = Vec::new();
    while mutations.len() < 50 {
        mutations.extend(
            workload::random_ops(&mut rng, &cfg)
                .into_iter()
                .filter(|op| matches!(op, Op::Insert { .. } | Op::Update { .. } | Op::Delete { .. })),
        );
    }
    mutations.truncate(50);

    let assert_pre_state = |pre: &[(PathBuf, Vec<u8>)], mem: &hydb_testkit::oracle::MemDb, context: &str| {
        assert_eq!(&snapshot(&db_dir), pre, "{context}: database files changed");
        let db = Database::open(&db_dir).unwrap();
        assert!(db.verify().ok(), "{context}: verify failed");
        workload::assert_same_state(&db, mem, context);
    };

    for (i, op) in mutations.iter().enumerate() {
        let pre = snapshot(&db_dir);

        // Run the mutation once to learn the bytes it writes, then put the
        // prior state back as if the power had failed instead.
        let mut db = Database::open(&db_dir).unwrap();
        let outcome = workload::apply_engine(&mut db, op);
        drop(db);
        let post = snapshot(&db_dir);
        let changed: Vec<(PathBuf, Vec<u8>)> = post
            .iter()
            .filter(|(path, bytes)| {
                pre.iter().find(|(p, _)| p == path).map(|(_, b)| b) != Some(bytes)
            })
            .cloned()
            .collect();
        restore(&pre);

        // Boundary 1: crash before anything is written.
        assert_pre_state(&pre, &mem, &format!("mutation {i} pre-write"));

        for (path, new_bytes) in &changed {
            // Boundary 2: crash mid-way through the temp write.
            let staged = PendingSave::stage(path, &new_bytes[..new_bytes.len() / 2]).unwrap();
            let tmp = staged.abandon();
            assert_pre_state(&pre, &mem, &format!("mutation {i} partial temp file"));
            fs::remove_file(&tmp).unwrap();

            // Boundary 3: crash after the temp write, before the rename.
            let staged = PendingSave::stage(path, new_bytes).unwrap();
            let tmp = staged.abandon();
            assert_pre_state(&pre, &mem, &format!("mutation {i} staged temp file"));
            fs::remove_file(&tmp).unwrap();
        }

        // No crash after all: apply the mutation for real and move on.
        let mut db = Database::open(&db_dir).unwrap();
        let replayed = workload::apply_engine(&mut db, op);
        assert_eq!(replayed, outcome, "mutation {i} replay diverged");
        let _ = workload::apply_oracle(&mut mem, op);
        drop(db);
    }
    pass("7 crash safety", "50 mutations x 3 boundaries".to_string());
}
