//! Property suites for every codec in the crate: image containers and both
//! storage channels, schema and foreign-key text, record blocks, and value
//! parse/render.

use proptest::prelude::*;

use hydb::image::{ImageContainer, FRAME_OVERHEAD};
use hydb::record::{decode_records, encode_records, parse_value, render_value, Row, Value};
use hydb::schema::{Column, DataType, ForeignKey, TableSchema};
use hydb::{cover, Error};

fn identifier() -> impl Strategy<Value = String> {
    "[a-z_][a-zA-Z0-9_]{0,11}"
}

fn datatype() -> impl Strategy<Value = DataType> {
    prop_oneof![
        (1u32..=40).prop_map(DataType::char),
        Just(DataType::Text),
        Just(DataType::Int),
        Just(DataType::Float),
        Just(DataType::Money),
        Just(DataType::Boolean),
    ]
}

prop_compose! {
    fn table_schema()(
        name in identifier(),
        columns in prop::collection::btree_map(identifier(), (datatype(), any::<bool>()), 1..=16),
        pk_len in 1usize..=3,
    ) -> TableSchema {
        let mut columns: Vec<Column> = columns
            .into_iter()
            .map(|(name, (dtype, nullable))| Column::new(name, dtype, nullable))
            .collect();
        if columns.iter().all(|c| c.nullable) {
            columns[0].nullable = false;
        }
        let candidates: Vec<String> = columns
            .iter()
            .filter(|c| !c.nullable)
            .map(|c| c.name.clone())
            .collect();
        let primary_key = candidates[..pk_len.min(candidates.len())].to_vec();
        let schema = TableSchema::new(name, columns, primary_key);
        schema.validate().expect("generated schema is valid");
        schema
    }
}

fn value_of(dtype: DataType) -> BoxedStrategy<Value> {
    match dtype {
        DataType::Int => any::<i64>().prop_map(Value::Int).boxed(),
        DataType::Money => any::<i64>().prop_map(Value::Money).boxed(),
        DataType::Boolean => any::<bool>().prop_map(Value::Bool).boxed(),
        DataType::Float => any::<f64>()
            .prop_filter("finite", |f| f.is_finite())
            .prop_map(|f| Value::Float(if f == 0.0 { 0.0 } else { f }))
            .boxed(),
        DataType::Char(max) => prop::collection::vec(any::<char>(), 0..=max.get() as usize)
            .prop_map(|chars| Value::Char(chars.into_iter().collect()))
            .boxed(),
        DataType::Text => prop::collection::vec(any::<char>(), 0..=48)
            .prop_map(|chars| Value::Text(chars.into_iter().collect()))
            .boxed(),
    }
}

fn row_of(schema: &TableSchema) -> BoxedStrategy<Row> {
    let cells: Vec<BoxedStrategy<Value>> = schema
        .columns
        .iter()
        .map(|c| {
            if c.nullable {
                prop_oneof![1 => Just(Value::Null), 4 => value_of(c.dtype)].boxed()
            } else {
                value_of(c.dtype)
            }
        })
        .collect();
    cells.prop_map(Row::new).boxed()
}

fn schema_and_rows() -> impl Strategy<Value = (TableSchema, Vec<Row>)> {
    table_schema().prop_flat_map(|schema| {
        let rows = prop::collection::vec(row_of(&schema), 0..8);
        (Just(schema), rows)
    })
}

fn foreign_key() -> impl Strategy<Value = ForeignKey> {
    (
        prop::collection::btree_set(identifier(), 4),
        prop::collection::btree_set(identifier(), 1..=3),
        prop::collection::btree_set(identifier(), 1..=3),
    )
        .prop_filter_map("need equal arity and disjoint names", |(tables, a, b)| {
            let arity = a.len().min(b.len());
            let tables: Vec<String> = tables.into_iter().collect();
            let child_cols: Vec<String> = a.into_iter().take(arity).collect();
            let parent_cols: Vec<String> = b.into_iter().take(arity).collect();
            let fk = ForeignKey::new(
                tables[0].clone(),
                child_cols,
                tables[1].clone(),
                parent_cols,
            );
            fk.validate().ok().map(|_| fk)
        })
}

/// A generated cover image: format, dimensions, deterministic noise.
fn cover_image() -> impl Strategy<Value = Vec<u8>> {
    (0u8..4, 1u32..=24, 1u32..=24, any::<u64>()).prop_map(|(kind, w, h, seed)| {
        let mut state = seed | 1;
        let mut next = move || -> u8 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as u8
        };
        match kind {
            0 => cover::bmp24(w, h, |_, _| [next(), next(), next()]),
            1 => cover::bmp8_gray(w, h, |_, _| next()),
            2 => cover::ppm(w, h, |_, _| [next(), next(), next()]),
            _ => cover::pgm(w, h, |_, _| next()),
        }
    })
}

proptest! {
    #[test]
    fn record_block_round_trips((schema, rows) in schema_and_rows()) {
        let block = encode_records(&schema, &rows).unwrap();
        let back = decode_records(&schema, &block).unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn schema_text_round_trips(schema in table_schema()) {
        let encoded = schema.encode();
        prop_assert_eq!(TableSchema::decode(&encoded).unwrap(), schema);
    }

    #[test]
    fn schema_encoding_is_injective(a in table_schema(), b in table_schema()) {
        prop_assume!(a != b);
        prop_assert_ne!(a.encode(), b.encode());
    }

    #[test]
    fn fk_text_round_trips(fk in foreign_key()) {
        prop_assert_eq!(ForeignKey::decode(&fk.encode()).unwrap(), fk);
    }

    #[test]
    fn value_render_parse_round_trips(
        (dtype, value) in datatype().prop_flat_map(|t| (Just(t), value_of(t))),
    ) {
        let text = render_value(&value);
        prop_assert_eq!(parse_value(&text, dtype).unwrap(), value);
    }

    #[test]
    fn money_matches_string_arithmetic_oracle(
        negative in any::<bool>(),
        int_digits in "[0-9]{1,13}",
        frac_digits in "[0-9]{0,4}",
    ) {
        // Independent route: digit-string arithmetic, no shared parser code.
        let text = if frac_digits.is_empty() {
            format!("{}{int_digits}", if negative { "-" } else { "" })
        } else {
            format!("{}{int_digits}.{frac_digits}", if negative { "-" } else { "" })
        };
        let mut expected: i64 = 0;
        for b in int_digits.bytes() {
            expected = expected * 10 + i64::from(b - b'0');
        }
        expected *= 10_000;
        let mut frac: i64 = 0;
        for b in frac_digits.bytes() {
            frac = frac * 10 + i64::from(b - b'0');
        }
        frac *= 10i64.pow(4 - frac_digits.len() as u32);
        expected += frac;
        if negative {
            expected = -expected;
        }
        prop_assert_eq!(parse_value(&text, DataType::Money).unwrap(), Value::Money(expected));
    }

    #[test]
    fn float_rendering_round_trips_bitwise(bits in any::<u64>()) {
        let f = f64::from_bits(bits);
        prop_assume!(f.is_finite());
        let normalized = if f == 0.0 { 0.0 } else { f };
        let rendered = render_value(&Value::Float(normalized));
        let reparsed: f64 = rendered.parse().unwrap();
        prop_assert_eq!(reparsed.to_bits(), normalized.to_bits());
    }

    #[test]
    fn container_parse_is_serialize_inverse(bytes in cover_image(), junk in prop::collection::vec(any::<u8>(), 0..6)) {
        let c = ImageContainer::parse(bytes.clone()).unwrap();
        prop_assert_eq!(c.as_bytes(), &bytes[..]);
        prop_assert_eq!(c.image_end(), bytes.len());

        // Appending junk is captured as a trailer and nothing else moves.
        let mut extended = bytes.clone();
        extended.extend_from_slice(&junk);
        let c2 = ImageContainer::parse(extended.clone()).unwrap();
        prop_assert_eq!(c2.as_bytes(), &extended[..]);
        prop_assert_eq!(c2.image_end(), bytes.len());
        prop_assert_eq!(c2.trailer_bytes().is_some(), !junk.is_empty());
    }

    #[test]
    fn lsb_capacity_law_and_bounded_distortion(
        bytes in cover_image(),
        payload in prop::collection::vec(any::<u8>(), 0..64),
    ) {
        let c = ImageContainer::parse(bytes).unwrap();
        let fits = 8 * (FRAME_OVERHEAD + payload.len()) <= c.pixel_length();
        match c.lsb_embed(&payload) {
            Err(Error::InsufficientCapacity { .. }) => prop_assert!(!fits),
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
            Ok(stego) => {
                prop_assert!(fits);
                prop_assert_eq!(stego.lsb_extract().unwrap().unwrap(), payload.clone());
                // Bounded distortion: every byte moves by at most one, and a
                // byte whose LSB already agreed does not move at all.
                prop_assert_eq!(stego.as_bytes().len(), c.as_bytes().len());
                let frame_bits = 8 * (FRAME_OVERHEAD + payload.len());
                for (i, (a, b)) in c.as_bytes().iter().zip(stego.as_bytes()).enumerate() {
                    let delta = i64::from(*a) - i64::from(*b);
                    prop_assert!((-1..=1).contains(&delta));
                    if a & 1 == b & 1 {
                        prop_assert_eq!(a, b);
                    }
                    let in_frame = i >= c.pixel_offset() && i < c.pixel_offset() + frame_bits;
                    if !in_frame {
                        prop_assert_eq!(a, b, "byte {} outside the frame changed", i);
                    }
                }
            }
        }
    }

    #[test]
    fn trailer_round_trips_and_never_touches_the_image(
        bytes in cover_image(),
        payload in prop::collection::vec(any::<u8>(), 0..200),
    ) {
        let c = ImageContainer::parse(bytes).unwrap();
        let t = c.write_trailer(&payload);
        prop_assert_eq!(&t.as_bytes()[..c.image_end()], &c.as_bytes()[..c.image_end()]);
        prop_assert_eq!(t.as_bytes().len(), c.image_end() + FRAME_OVERHEAD + payload.len());
        prop_assert_eq!(t.read_trailer().unwrap().unwrap(), payload);
    }

    #[test]
    fn pristine_covers_never_decode_a_frame(bytes in cover_image()) {
        let c = ImageContainer::parse(bytes).unwrap();
        prop_assert_eq!(c.lsb_extract().unwrap(), None);
        prop_assert_eq!(c.read_trailer().unwrap(), None);
    }

    #[test]
    fn mangled_files_error_cleanly_instead_of_panicking(
        bytes in cover_image(),
        mutations in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 0..8),
        cut in any::<prop::sample::Index>(),
    ) {
        // Damage a valid file arbitrarily: overwrite bytes, then truncate.
        let mut mangled = bytes;
        for (index, value) in mutations {
            let at = index.index(mangled.len());
            mangled[at] = value;
        }
        mangled.truncate(cut.index(mangled.len() + 1));
        if let Ok(c) = ImageContainer::parse(mangled) {
            let _ = c.lsb_extract();
            let _ = c.read_trailer();
        }
    }

    #[test]
    fn arbitrary_header_bytes_never_panic_the_parser(
        magic in prop_oneof![Just(&b"BM"[..]), Just(&b"P6"[..]), Just(&b"P5"[..]), Just(&b"XX"[..])],
        body in prop::collection::vec(any::<u8>(), 0..96),
    ) {
        let mut bytes = magic.to_vec();
        bytes.extend_from_slice(&body);
        if let Ok(c) = ImageContainer::parse(bytes) {
            let _ = c.lsb_extract();
            let _ = c.read_trailer();
        }
    }

    #[test]
    fn text_decoders_never_panic_on_arbitrary_bytes(
        bytes in prop::collection::vec(any::<u8>(), 0..128),
        schema in table_schema(),
    ) {
        let _ = TableSchema::decode(&bytes);
        let _ = ForeignKey::decode(&bytes);
        let _ = decode_records(&schema, &bytes);
    }

    #[test]
    fn text_decoders_never_panic_on_tagged_text(
        tag in prop_oneof![Just("T"), Just("C"), Just("P"), Just("F")],
        fields in prop::collection::vec("[a-zA-Z0-9_(),.\\\\-]{0,8}", 0..6),
        schema in table_schema(),
    ) {
        // Plausible-looking lines stress the field-arity and token paths
        // more than raw bytes do.
        let mut line = tag.to_string();
        for field in &fields {
            line.push('\u{1f}');
            line.push_str(field);
        }
        line.push('\n');
        let _ = TableSchema::decode(line.as_bytes());
        let _ = ForeignKey::decode(line.as_bytes());
        let _ = decode_records(&schema, line.as_bytes());
    }
}
