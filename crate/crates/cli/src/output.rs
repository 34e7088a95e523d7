//! Deterministic output rendering: CSV/TSV row printing and the `inspect`
//! report.

use std::fmt::Write as _;

use hydb::image::{ImageContainer, FRAME_OVERHEAD};
use hydb::record::{render_value, Row, Value};
use hydb::schema::{payload_kind, ForeignKey, PayloadKind, TableSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Tsv,
}

impl OutputFormat {
    fn delimiter(self) -> char {
        match self {
            OutputFormat::Csv => ',',
            OutputFormat::Tsv => '\t',
        }
    }
}

/// One output field: NULL prints as a bare `\N`; anything that contains the
/// delimiter, a quote, a line break, or reads like the NULL marker gets
/// RFC-style double-quoting.
fn format_field(value: &Value, delimiter: char) -> String {
    if value.is_null() {
        return "\\N".to_string();
    }
    let s = render_value(value);
    let needs_quotes = s.contains(delimiter)
        || s.contains('"')
        || s.contains('\n')
        || s.contains('\r')
        || s == "\\N";
    if needs_quotes {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

pub fn format_rows(rows: &[Row], format: OutputFormat) -> String {
    let delimiter = format.delimiter();
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for value in row.values() {
            if !first {
                out.push(delimiter);
            }
            first = false;
            out.push_str(&format_field(value, delimiter));
        }
        out.push('\n');
    }
    out
}

/// The `inspect` report: part boundaries, capacities, what each channel
/// holds, and (given the original cover) the byte-delta histogram.
pub fn inspect_report(container: &ImageContainer, cover: Option<&[u8]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format: {}", container.format());
    let _ = writeln!(out, "file_size: {}", container.as_bytes().len());
    let _ = writeln!(out, "pixel_offset: {}", container.pixel_offset());
    let _ = writeln!(out, "pixel_length: {}", container.pixel_length());
    let _ = writeln!(out, "image_end: {}", container.image_end());
    let _ = writeln!(out, "lsb_capacity_bytes: {}", container.lsb_capacity());

    let lsb = match container.lsb_extract() {
        Err(e) => format!("corrupt: {e}"),
        Ok(None) => "empty".to_string(),
        Ok(Some(payload)) => match payload_kind(&payload) {
            PayloadKind::Schema => match TableSchema::decode(&payload) {
                Ok(s) => format!("schema \"{}\" ({} bytes)", s.table_name, payload.len()),
                Err(e) => format!("corrupt: {e}"),
            },
            PayloadKind::ForeignKey => match ForeignKey::decode(&payload) {
                Ok(fk) => format!("foreign-key \"{}\" ({} bytes)", fk.label(), payload.len()),
                Err(e) => format!("corrupt: {e}"),
            },
            PayloadKind::Unknown => format!("occupied ({} bytes, unrecognized payload)", payload.len()),
        },
    };
    let _ = writeln!(out, "lsb_channel: {lsb}");

    let trailer = match container.read_trailer() {
        Err(e) => format!("corrupt: {e}"),
        Ok(None) => "absent".to_string(),
        Ok(Some(payload)) => format!(
            "payload {} bytes (frame {} bytes)",
            payload.len(),
            payload.len() + FRAME_OVERHEAD
        ),
    };
    let _ = writeln!(out, "trailer: {trailer}");

    if let Some(cover) = cover {
        let image = container.as_bytes();
        let mut histogram = [0usize; 3]; // -1, 0, +1
        let mut other = 0usize;
        for (a, b) in cover.iter().zip(image) {
            match i32::from(*b) - i32::from(*a) {
                -1 => histogram[0] += 1,
                0 => histogram[1] += 1,
                1 => histogram[2] += 1,
                _ => other += 1,
            }
        }
        let _ = writeln!(out, "delta[-1]: {}", histogram[0]);
        let _ = writeln!(out, "delta[0]: {}", histogram[1]);
        let _ = writeln!(out, "delta[+1]: {}", histogram[2]);
        let _ = writeln!(out, "delta[other]: {other}");
        let _ = writeln!(
            out,
            "extra_bytes: {}",
            image.len() as i64 - cover.len() as i64
        );
    }
    out
}
