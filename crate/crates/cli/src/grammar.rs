//! Command-line grammars: the CREATE TABLE style schema string, `--where`
//! conjunctions, `--set` assignment lists, CSV value rows, and the
//! `table(col,...)` link endpoints.
//!
//! Grammar errors are plain strings; the caller reports them as usage
//! errors. Typed-value errors come back as [`hydb::Error`] so the engine
//! and the CLI reject bad data identically.

use hydb::record::{parse_value, Row, Value};
use hydb::schema::{Column, DataType, TableSchema};
use hydb::{Comparator, Conjunct, Error, Predicate};

use crate::CliError;

/// Parses `name(col TYPE [NOT NULL], ..., PRIMARY KEY(col, ...))`.
/// Keywords are case-insensitive; identifiers are taken as written.
pub fn parse_schema_ddl(text: &str) -> Result<TableSchema, String> {
    let mut t = Tokens::new(text);
    let table_name = t.ident("table name")?;
    t.expect_symbol('(')?;
    let mut columns = Vec::new();
    let mut primary_key = Vec::new();
    loop {
        if t.peek_keyword("PRIMARY") {
            t.ident("PRIMARY")?;
            let kw = t.ident("KEY")?;
            if !kw.eq_ignore_ascii_case("KEY") {
                return Err(format!("expected KEY after PRIMARY, found {kw:?}"));
            }
            t.expect_symbol('(')?;
            loop {
                primary_key.push(t.ident("primary key column")?);
                if t.take_symbol(',') {
                    continue;
                }
                t.expect_symbol(')')?;
                break;
            }
            t.expect_symbol(')')?;
            t.expect_end()?;
            break;
        }
        let name = t.ident("column name")?;
        let dtype = parse_type(&mut t)?;
        let mut nullable = true;
        if t.peek_keyword("NOT") {
            t.ident("NOT")?;
            let kw = t.ident("NULL")?;
            if !kw.eq_ignore_ascii_case("NULL") {
                return Err(format!("expected NULL after NOT, found {kw:?}"));
            }
            nullable = false;
        }
        columns.push(Column::new(name, dtype, nullable));
        if t.take_symbol(',') {
            continue;
        }
        t.expect_symbol(')')?;
        t.expect_end()?;
        break;
    }
    Ok(TableSchema::new(table_name, columns, primary_key))
}

fn parse_type(t: &mut Tokens) -> Result<DataType, String> {
    let word = t.ident("column type")?.to_ascii_uppercase();
    Ok(match word.as_str() {
        "TEXT" => DataType::Text,
        "INT" => DataType::Int,
        "FLOAT" => DataType::Float,
        "MONEY" => DataType::Money,
        "BOOLEAN" => DataType::Boolean,
        "CHAR" => {
            t.expect_symbol('(')?;
            let n = t.ident("CHAR length")?;
            let n: u32 = n
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| format!("CHAR length must be a positive integer, found {n:?}"))?;
            t.expect_symbol(')')?;
            DataType::char(n)
        }
        other => return Err(format!("unknown column type {other:?}")),
    })
}

/// Parses `col OP literal [AND col OP literal ...]` against a schema; an
/// empty/absent string is the match-all predicate.
pub fn parse_where(text: Option<&str>, schema: &TableSchema) -> Result<Predicate, CliError> {
    let text = match text {
        None => return Ok(Predicate::all()),
        Some(t) if t.trim().is_empty() => return Ok(Predicate::all()),
        Some(t) => t,
    };
    let mut t = Tokens::new(text);
    let mut conjuncts = Vec::new();
    loop {
        let column = t.ident("column name").map_err(usage)?;
        let op = t.comparator().map_err(usage)?;
        let literal = t.literal().map_err(usage)?;
        let value = literal_value(&column, literal, schema)?;
        conjuncts.push(Conjunct {
            column,
            op,
            literal: value,
        });
        if t.at_end() {
            break;
        }
        let kw = t.ident("AND").map_err(usage)?;
        if !kw.eq_ignore_ascii_case("AND") {
            return Err(usage(format!("expected AND between conditions, found {kw:?}")));
        }
    }
    Ok(Predicate::new(conjuncts))
}

/// Parses `col=literal[, col=literal ...]`.
pub fn parse_set(text: &str, schema: &TableSchema) -> Result<Vec<(String, Value)>, CliError> {
    let mut t = Tokens::new(text);
    let mut assignments = Vec::new();
    loop {
        let column = t.ident("column name").map_err(usage)?;
        t.expect_symbol('=').map_err(usage)?;
        let literal = t.literal().map_err(usage)?;
        let value = literal_value(&column, literal, schema)?;
        assignments.push((column, value));
        if t.take_symbol(',') {
            continue;
        }
        t.expect_end().map_err(usage)?;
        break;
    }
    Ok(assignments)
}

fn usage(reason: String) -> CliError {
    CliError::Usage(reason)
}

/// Resolves a literal token against the column's declared type.
fn literal_value(column: &str, literal: Literal, schema: &TableSchema) -> Result<Value, CliError> {
    let col = schema
        .column(column)
        .ok_or_else(|| Error::UnknownColumn {
            table: schema.table_name.clone(),
            column: column.to_string(),
        })?;
    match literal {
        Literal::Null => Ok(Value::Null),
        Literal::Quoted(s) | Literal::Bare(s) => Ok(parse_value(&s, col.dtype)?),
    }
}

/// Parses one CSV record (doubled-quote escaping) into a typed row.
/// Unquoted `\N` is NULL; whitespace around unquoted fields is trimmed.
pub fn parse_values(text: &str, schema: &TableSchema) -> Result<Row, CliError> {
    let fields = split_csv(text).map_err(usage)?;
    if fields.len() != schema.columns.len() {
        return Err(Error::ArityMismatch {
            expected: schema.columns.len(),
            got: fields.len(),
        }
        .into());
    }
    let mut values = Vec::with_capacity(fields.len());
    for (field, col) in fields.into_iter().zip(&schema.columns) {
        values.push(match field {
            CsvField::Bare(s) if s == "\\N" => Value::Null,
            CsvField::Bare(s) => parse_value(&s, col.dtype)?,
            CsvField::Quoted(s) => parse_value(&s, col.dtype)?,
        });
    }
    Ok(Row::new(values))
}

#[derive(Debug, PartialEq)]
pub enum CsvField {
    Bare(String),
    Quoted(String),
}

/// Splits a CSV record with `""` escaping. Always yields at least one field.
pub fn split_csv(text: &str) -> Result<Vec<CsvField>, String> {
    let mut fields = Vec::new();
    let mut chars = text.chars().peekable();
    loop {
        // Skip leading spaces before a field.
        while matches!(chars.peek(), Some(c) if *c == ' ' || *c == '\t') {
            chars.next();
        }
        if chars.peek() == Some(&'"') {
            chars.next();
            let mut field = String::new();
            loop {
                match chars.next() {
                    None => return Err("unterminated quoted field".to_string()),
                    Some('"') => {
                        if chars.peek() == Some(&'"') {
                            chars.next();
                            field.push('"');
                        } else {
                            break;
                        }
                    }
                    Some(c) => field.push(c),
                }
            }
            while matches!(chars.peek(), Some(c) if *c == ' ' || *c == '\t') {
                chars.next();
            }
            fields.push(CsvField::Quoted(field));
            match chars.next() {
                None => break,
                Some(',') => continue,
                Some(c) => return Err(format!("unexpected {c:?} after quoted field")),
            }
        } else {
            let mut field = String::new();
            let mut ended = false;
            for c in chars.by_ref() {
                if c == ',' {
                    ended = true;
                    break;
                }
                field.push(c);
            }
            fields.push(CsvField::Bare(field.trim().to_string()));
            if !ended {
                break;
            }
        }
    }
    Ok(fields)
}

/// Parses `table(col, col, ...)` link endpoints.
pub fn parse_table_columns(text: &str) -> Result<(String, Vec<String>), String> {
    let mut t = Tokens::new(text);
    let table = t.ident("table name")?;
    t.expect_symbol('(')?;
    let mut columns = Vec::new();
    loop {
        columns.push(t.ident("column name")?);
        if t.take_symbol(',') {
            continue;
        }
        t.expect_symbol(')')?;
        break;
    }
    t.expect_end()?;
    Ok((table, columns))
}

/// Parses a `--columns a,b,c` projection list.
pub fn parse_columns(text: &str) -> Result<Vec<String>, String> {
    let columns: Vec<String> = text
        .split(',')
        .map(|c| c.trim().to_string())
        .collect();
    if columns.iter().any(|c| c.is_empty()) {
        return Err("empty column name in projection".to_string());
    }
    Ok(columns)
}

#[derive(Debug)]
enum Literal {
    Quoted(String),
    Bare(String),
    Null,
}

/// A tiny cursor over the grammar strings above.
struct Tokens<'a> {
    rest: &'a str,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Tokens<'a> {
        Tokens { rest: text }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.rest.is_empty()
    }

    fn expect_end(&mut self) -> Result<(), String> {
        if self.at_end() {
            Ok(())
        } else {
            Err(format!("unexpected trailing input: {:?}", self.rest))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, String> {
        self.skip_ws();
        let end = self
            .rest
            .char_indices()
            .find(|(_, c)| !c.is_ascii_alphanumeric() && *c != '_')
            .map(|(i, _)| i)
            .unwrap_or(self.rest.len());
        if end == 0 {
            return Err(match self.rest.chars().next() {
                Some(c) => format!("expected {what}, found {c:?}"),
                None => format!("expected {what}, found end of input"),
            });
        }
        let (word, rest) = self.rest.split_at(end);
        self.rest = rest;
        Ok(word.to_string())
    }

    fn peek_keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        let end = self
            .rest
            .char_indices()
            .find(|(_, c)| !c.is_ascii_alphanumeric() && *c != '_')
            .map(|(i, _)| i)
            .unwrap_or(self.rest.len());
        self.rest[..end].eq_ignore_ascii_case(word)
    }

    fn take_symbol(&mut self, symbol: char) -> bool {
        self.skip_ws();
        if let Some(rest) = self.rest.strip_prefix(symbol) {
            self.rest = rest;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, symbol: char) -> Result<(), String> {
        if self.take_symbol(symbol) {
            Ok(())
        } else {
            Err(match self.rest.chars().next() {
                Some(c) => format!("expected {symbol:?}, found {c:?}"),
                None => format!("expected {symbol:?}, found end of input"),
            })
        }
    }

    fn comparator(&mut self) -> Result<Comparator, String> {
        self.skip_ws();
        for symbol in ["!=", "<=", ">=", "=", "<", ">"] {
            if let Some(rest) = self.rest.strip_prefix(symbol) {
                self.rest = rest;
                return Ok(Comparator::from_symbol(symbol).expect("table is in sync"));
            }
        }
        Err(match self.rest.chars().next() {
            Some(c) => format!("expected a comparison operator, found {c:?}"),
            None => "expected a comparison operator, found end of input".to_string(),
        })
    }

    /// A literal: single-quoted with `''` escaping, or a bare token ending
    /// at whitespace or a comma. Bare `\N` is NULL.
    fn literal(&mut self) -> Result<Literal, String> {
        self.skip_ws();
        if let Some(rest) = self.rest.strip_prefix('\'') {
            let mut out = String::new();
            let mut chars = rest.char_indices().peekable();
            loop {
                match chars.next() {
                    None => return Err("unterminated string literal".to_string()),
                    Some((i, '\'')) => {
                        if matches!(chars.peek(), Some((_, '\''))) {
                            chars.next();
                            out.push('\'');
                        } else {
                            self.rest = &rest[i + 1..];
                            return Ok(Literal::Quoted(out));
                        }
                    }
                    Some((_, c)) => out.push(c),
                }
            }
        }
        let end = self
            .rest
            .char_indices()
            .find(|(_, c)| c.is_whitespace() || *c == ',')
            .map(|(i, _)| i)
            .unwrap_or(self.rest.len());
        if end == 0 {
            return Err("expected a literal".to_string());
        }
        let (word, rest) = self.rest.split_at(end);
        self.rest = rest;
        if word == "\\N" {
            Ok(Literal::Null)
        } else {
            Ok(Literal::Bare(word.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hydb::schema::DataType;

    fn emp() -> TableSchema {
        parse_schema_ddl("emp_master(emp_id INT NOT NULL, name CHAR(40), PRIMARY KEY(emp_id))")
            .unwrap()
    }

    #[test]
    fn ddl_builds_the_expected_schema() {
        let s = emp();
        assert_eq!(s.table_name, "emp_master");
        assert_eq!(s.columns.len(), 2);
        assert_eq!(s.columns[0].name, "emp_id");
        assert!(!s.columns[0].nullable);
        assert_eq!(s.columns[1].dtype, DataType::char(40));
        assert!(s.columns[1].nullable);
        assert_eq!(s.primary_key, vec!["emp_id".to_string()]);
        s.validate().unwrap();
    }

    #[test]
    fn ddl_is_case_insensitive_on_keywords_only() {
        let s = parse_schema_ddl("T(a int not null, primary key(a))").unwrap();
        assert_eq!(s.columns[0].dtype, DataType::Int);
        assert!(!s.columns[0].nullable);
    }

    #[test]
    fn ddl_rejects_garbage() {
        for bad in [
            "",
            "t",
            "t()",
            "t(a INT",
            "t(a WIBBLE, PRIMARY KEY(a))",
            "t(a CHAR(0), PRIMARY KEY(a))",
            "t(a INT, PRIMARY KEY(a)) trailing",
            "t(a INT NOT, PRIMARY KEY(a))",
        ] {
            assert!(parse_schema_ddl(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn ddl_without_primary_key_parses_but_fails_validation() {
        let s = parse_schema_ddl("t(a INT NOT NULL)").unwrap();
        assert!(matches!(s.validate(), Err(Error::EmptyPrimaryKey)));
    }

    #[test]
    fn where_parses_conjunctions_and_quotes() {
        let schema = emp();
        let p = parse_where(
            Some("emp_id >= 2 AND name != 'O''Brien'"),
            &schema,
        )
        .unwrap();
        assert_eq!(p.conjuncts().len(), 2);
        assert_eq!(p.conjuncts()[0].op, Comparator::Ge);
        assert_eq!(p.conjuncts()[1].literal, Value::Char("O'Brien".into()));

        assert_eq!(parse_where(None, &schema).unwrap(), Predicate::all());
        assert!(parse_where(Some("emp_id >"), &schema).is_err());
        assert!(parse_where(Some("ghost = 1"), &schema).is_err());
        assert!(parse_where(Some("emp_id = 1 OR emp_id = 2"), &schema).is_err());
    }

    #[test]
    fn where_null_literal_is_allowed() {
        let p = parse_where(Some("name = \\N"), &emp()).unwrap();
        assert_eq!(p.conjuncts()[0].literal, Value::Null);
    }

    #[test]
    fn set_parses_assignments() {
        let a = parse_set("name='bo b', emp_id=3", &emp()).unwrap();
        assert_eq!(a[0], ("name".to_string(), Value::Char("bo b".into())));
        assert_eq!(a[1], ("emp_id".to_string(), Value::Int(3)));
        assert!(parse_set("", &emp()).is_err());
        assert!(parse_set("name=", &emp()).is_err());
    }

    #[test]
    fn csv_values_handle_quoting_null_and_arity() {
        let row = parse_values("1, \"bob, the builder\"", &emp()).unwrap();
        assert_eq!(row.values()[1], Value::Char("bob, the builder".into()));

        let row = parse_values("2, \\N", &emp()).unwrap();
        assert_eq!(row.values()[1], Value::Null);

        // A quoted \N is the two-character string, not NULL.
        let row = parse_values("3, \"\\N\"", &emp()).unwrap();
        assert_eq!(row.values()[1], Value::Char("\\N".into()));

        assert!(matches!(
            parse_values("1", &emp()),
            Err(CliError::Db(Error::ArityMismatch { expected: 2, got: 1 }))
        ));
        assert!(matches!(
            parse_values("x, y", &emp()),
            Err(CliError::Db(Error::TypeParse { .. }))
        ));
        assert!(split_csv("\"open").is_err());
        assert!(split_csv("\"a\"b").is_err());
    }

    #[test]
    fn link_endpoints_parse() {
        let (t, cols) = parse_table_columns("emp_salary(emp_id, dept)").unwrap();
        assert_eq!(t, "emp_salary");
        assert_eq!(cols, vec!["emp_id".to_string(), "dept".to_string()]);
        assert!(parse_table_columns("emp_salary").is_err());
        assert!(parse_table_columns("t()").is_err());
    }
}
