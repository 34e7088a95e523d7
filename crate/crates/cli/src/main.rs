//! `hydb` — a database that hides in plain sight.
//!
//! Every table is an ordinary image file: the schema lives in the pixel
//! array's least significant bits, the records in a checksummed block
//! appended after the image's declared end. This binary is a thin adapter
//! over the `hydb` library; all data rules live there.
//!
//! Exit codes: 0 success, 1 usage error, 2 constraint violation,
//! 3 corruption or integrity failure, 4 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hydb::image::ImageContainer;
use hydb::schema::ForeignKey;
use hydb::{Database, Error};

mod grammar;
mod output;

use output::OutputFormat;

#[derive(Parser)]
#[command(
    name = "hydb",
    version,
    about = "Relational tables stored inside ordinary image files",
    after_help = "Exit codes: 0 success, 1 usage error, 2 constraint violation, \
                  3 corruption/integrity failure, 4 I/O error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create an empty database directory.
    Init { dir: PathBuf },
    /// Create a table inside a copy of the cover image.
    CreateTable {
        dir: PathBuf,
        /// Cover image (uncompressed BMP, PPM, or PGM) the table will live in.
        #[arg(long)]
        cover: PathBuf,
        /// Schema, e.g. "emp(emp_id INT NOT NULL, name CHAR(40), PRIMARY KEY(emp_id))".
        #[arg(long)]
        schema: String,
    },
    /// Insert one row.
    Insert {
        dir: PathBuf,
        table: String,
        /// CSV-style values with doubled-quote escaping; \N is NULL.
        #[arg(long)]
        values: String,
    },
    /// Print matching rows to standard output.
    Select {
        dir: PathBuf,
        table: String,
        /// Conjunctive filter, e.g. "emp_id >= 2 AND name != 'bob'".
        #[arg(long = "where")]
        r#where: Option<String>,
        /// Comma-separated projection.
        #[arg(long)]
        columns: Option<String>,
        #[arg(long, value_enum, default_value_t = Output::Csv)]
        output: Output,
    },
    /// Update matching rows; prints the matched-row count.
    Update {
        dir: PathBuf,
        table: String,
        /// Assignments, e.g. "name='ann', emp_id=3".
        #[arg(long)]
        set: String,
        #[arg(long = "where")]
        r#where: Option<String>,
    },
    /// Delete matching rows; prints the deleted-row count.
    Delete {
        dir: PathBuf,
        table: String,
        #[arg(long = "where")]
        r#where: Option<String>,
    },
    /// Create a foreign key stored in its own relationship image.
    Link {
        dir: PathBuf,
        /// Child endpoint, e.g. "emp_salary(emp_id)".
        #[arg(long)]
        child: String,
        /// Parent endpoint, e.g. "emp_master(emp_id)".
        #[arg(long)]
        parent: String,
        #[arg(long)]
        cover: PathBuf,
    },
    /// Drop a table and delete its image.
    DropTable { dir: PathBuf, table: String },
    /// Re-check every file: frames, schemas, records, keys.
    Verify { dir: PathBuf },
    /// Print an image's part boundaries, capacity, and channel contents.
    Inspect {
        image: PathBuf,
        /// Original cover; adds a byte-delta histogram.
        #[arg(long)]
        cover: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Csv,
    Tsv,
}

/// Anything a subcommand can fail with: a usage problem detected by the CLI
/// itself, or an error from the engine.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Db(Error),
    /// `verify` found problems; the report has already been printed.
    IntegrityFailed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Db(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(reason) => write!(f, "{reason}"),
            CliError::Db(e) => write!(f, "{e}"),
            CliError::IntegrityFailed => write!(f, "verification failed"),
        }
    }
}

/// The documented exit code for each error kind.
fn exit_code(error: &CliError) -> u8 {
    let db_error = match error {
        CliError::Usage(_) => return 1,
        CliError::IntegrityFailed => return 3,
        CliError::Db(e) => e,
    };
    match db_error {
        // The invocation itself is wrong: names, grammar, unusable covers.
        Error::UnknownTable(_)
        | Error::UnknownColumn { .. }
        | Error::PredicateTypeMismatch { .. }
        | Error::BadIdentifier(_)
        | Error::DuplicateColumn(_)
        | Error::EmptyPrimaryKey
        | Error::UnknownPkColumn(_)
        | Error::NullablePkColumn(_)
        | Error::InvalidForeignKey(_)
        | Error::UnsupportedFormat(_)
        | Error::MalformedHeader(_)
        | Error::CompressedImage(_) => 1,
        // The data rules rejected the operation.
        Error::PkViolation { .. }
        | Error::FkViolation { .. }
        | Error::RestrictViolation { .. }
        | Error::ExistingRowsViolate(_)
        | Error::TableExists(_)
        | Error::LinkExists(_)
        | Error::DanglingLink(_)
        | Error::TypeMismatchLink(_)
        | Error::TypeParse { .. }
        | Error::CharTooLong { .. }
        | Error::MoneyPrecisionExceeded(_)
        | Error::IntOutOfRange(_)
        | Error::ArityMismatch { .. }
        | Error::TypeMismatch { .. }
        | Error::NullNotAllowed { .. }
        | Error::InsufficientCapacity { .. }
        | Error::ChannelOccupied => 2,
        // Stored state is damaged or inconsistent.
        Error::CorruptFrame { .. }
        | Error::CorruptDbFile { .. }
        | Error::MalformedSchemaText { .. }
        | Error::MalformedFkText(_)
        | Error::MalformedRecordBlock { .. }
        | Error::DuplicateTable(_) => 3,
        // The environment failed us.
        Error::Io { .. } | Error::LockHeld { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::IntegrityFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Init { dir } => init(&dir),
        Command::CreateTable { dir, cover, schema } => {
            let schema = grammar::parse_schema_ddl(&schema).map_err(CliError::Usage)?;
            let mut db = Database::open(&dir)?;
            db.create_table(&schema, &cover)?;
            Ok(())
        }
        Command::Insert { dir, table, values } => {
            let mut db = Database::open(&dir)?;
            let row = grammar::parse_values(&values, db.schema(&table)?)?;
            db.insert(&table, row)?;
            Ok(())
        }
        Command::Select {
            dir,
            table,
            r#where,
            columns,
            output,
        } => {
            let db = Database::open(&dir)?;
            let schema = db.schema(&table)?;
            let predicate = grammar::parse_where(r#where.as_deref(), schema)?;
            let projection = columns
                .as_deref()
                .map(grammar::parse_columns)
                .transpose()
                .map_err(CliError::Usage)?;
            let rows = db.select(&table, &predicate, projection.as_deref())?;
            let format = match output {
                Output::Csv => OutputFormat::Csv,
                Output::Tsv => OutputFormat::Tsv,
            };
            print!("{}", output::format_rows(&rows, format));
            Ok(())
        }
        Command::Update {
            dir,
            table,
            set,
            r#where,
        } => {
            let mut db = Database::open(&dir)?;
            let schema = db.schema(&table)?;
            let assignments = grammar::parse_set(&set, schema)?;
            let predicate = grammar::parse_where(r#where.as_deref(), schema)?;
            let count = db.update(&table, &assignments, &predicate)?;
            println!("{count}");
            Ok(())
        }
        Command::Delete { dir, table, r#where } => {
            let mut db = Database::open(&dir)?;
            let predicate = grammar::parse_where(r#where.as_deref(), db.schema(&table)?)?;
            let count = db.delete(&table, &predicate)?;
            println!("{count}");
            Ok(())
        }
        Command::Link {
            dir,
            child,
            parent,
            cover,
        } => {
            let (child_table, child_columns) =
                grammar::parse_table_columns(&child).map_err(CliError::Usage)?;
            let (parent_table, parent_columns) =
                grammar::parse_table_columns(&parent).map_err(CliError::Usage)?;
            let fk = ForeignKey::new(child_table, child_columns, parent_table, parent_columns);
            let mut db = Database::open(&dir)?;
            db.create_foreign_key(&fk, &cover)?;
            Ok(())
        }
        Command::DropTable { dir, table } => {
            let mut db = Database::open(&dir)?;
            db.drop_table(&table)?;
            Ok(())
        }
        Command::Verify { dir } => {
            let db = Database::open(&dir)?;
            let report = db.verify();
            println!("{report}");
            if report.ok() {
                Ok(())
            } else {
                Err(CliError::IntegrityFailed)
            }
        }
        Command::Inspect { image, cover } => {
            let container = ImageContainer::open(&image)?;
            let cover_bytes = cover
                .map(|p| fs::read(&p).map_err(|e| Error::io(&p, e)))
                .transpose()?;
            print!(
                "{}",
                output::inspect_report(&container, cover_bytes.as_deref())
            );
            Ok(())
        }
    }
}

fn init(dir: &Path) -> Result<(), CliError> {
    if dir.is_dir() {
        return Ok(());
    }
    if dir.exists() {
        return Err(CliError::Usage(format!(
            "{} exists and is not a directory",
            dir.display()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}
