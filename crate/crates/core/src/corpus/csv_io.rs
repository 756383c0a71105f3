use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Provenance, RecipeRecord};
use crate::entities::{Category, Entity, EntitySet};
use crate::error::{Error, Result};
use crate::genre::Genre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvFormat {
    WithExtended,
    WithoutExtended,
}

impl CsvFormat {
    fn required(self) -> &'static [&'static str] {
        match self {
            CsvFormat::WithExtended => &["title", "directions", "NER", "extended_NER", "genre", "label"],
            CsvFormat::WithoutExtended => &["title", "directions", "NER", "genre", "label"],
        }
    }
}

#[derive(Debug)]
pub struct RowError {
    /// Zero-based data row; the id the record would have received.
    pub row: usize,
    pub line: u64,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub records: Vec<RecipeRecord>,
    pub errors: Vec<RowError>,
}

struct Columns {
    title: usize,
    directions: usize,
    ner: usize,
    extended: Option<usize>,
    genre: usize,
    label: usize,
    provenance: Option<usize>,
}

fn resolve_columns(headers: &csv::StringRecord, format: Option<CsvFormat>) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let format = format.unwrap_or(if find("extended_NER").is_some() {
        CsvFormat::WithExtended
    } else {
        CsvFormat::WithoutExtended
    });
    for col in format.required() {
        if find(col).is_none() {
            return Err(Error::Format(format!("missing required column '{col}'")));
        }
    }
    let req = |name: &str| find(name).expect("checked above");
    Ok(Columns {
        title: req("title"),
        directions: req("directions"),
        ner: req("NER"),
        extended: match format {
            CsvFormat::WithExtended => Some(req("extended_NER")),
            CsvFormat::WithoutExtended => None,
        },
        genre: req("genre"),
        label: req("label"),
        provenance: find("provenance"),
    })
}

/// Reads a CSV corpus. Header problems are fatal; per-row problems are
/// collected in [`IngestReport::errors`] and the row is skipped. Record ids
/// are data-row indices, so ids of surviving rows do not shift.
///
/// `format` of `None` detects the format from the header.
pub fn ingest_csv(path: &Path, format: Option<CsvFormat>) -> Result<IngestReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_csv_reader(file, format)
}

pub fn ingest_csv_reader<R: Read>(reader: R, format: Option<CsvFormat>) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = resolve_columns(&headers, format)?;

    let mut report = IngestReport::default();
    for (row, result) in rdr.records().enumerate() {
        let rec = match result {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.errors.push(RowError {
                    row,
                    line,
                    error: e.into(),
                });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        match decode_row(&rec, &cols, row as u64) {
            Ok(r) => report.records.push(r),
            Err(error) => report.errors.push(RowError { row, line, error }),
        }
    }
    Ok(report)
}

fn list_column(rec: &csv::StringRecord, idx: usize, name: &str, row: u64) -> Result<Vec<String>> {
    parse_list_cell(&rec[idx]).map_err(|e| match e {
        Error::Parse { offset, message } => Error::Parse {
            offset,
            message: format!("row {row}, column {name}: {message}"),
        },
        other => other,
    })
}

fn decode_row(rec: &csv::StringRecord, cols: &Columns, id: u64) -> Result<RecipeRecord> {
    let title = rec[cols.title].trim().to_owned();
    let directions = list_column(rec, cols.directions, "directions", id)?;
    let ner = list_column(rec, cols.ner, "NER", id)?;
    let extended_ner = match cols.extended {
        Some(idx) => {
            let surfaces = list_column(rec, idx, "extended_NER", id)?;
            Some(
                surfaces
                    .iter()
                    .filter_map(|s| Entity::new(s, Category::Other))
                    .collect::<EntitySet>(),
            )
        }
        None => None,
    };

    let genre_cell = rec[cols.genre].trim();
    let label_cell = rec[cols.label].trim();
    let by_name =
        if genre_cell.is_empty() {
            None
        } else {
            Some(genre_cell.parse::<Genre>().map_err(|_| {
                Error::validation(format!("row {id}: genre {genre_cell:?} is not one of the nine genres"))
            })?)
        };
    let by_label = if label_cell.is_empty() {
        None
    } else {
        let n: u8 = label_cell
            .parse()
            .map_err(|_| Error::validation(format!("row {id}: label {label_cell:?} is not an integer")))?;
        Some(Genre::from_id(n).map_err(|_| Error::validation(format!("row {id}: label {n} outside 1..9")))?)
    };
    let genre = match (by_name, by_label) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::validation(format!(
                "row {id}: genre {genre_cell:?} disagrees with label {label_cell}"
            )))
        }
        (a, b) => a.or(b),
    };

    let provenance = match (genre, cols.provenance.map(|i| rec[i].trim())) {
        (None, _) => Provenance::Unlabeled,
        (Some(_), None | Some("")) => Provenance::Human,
        (Some(_), Some(p)) => Provenance::parse(p)?,
    };

    let record = RecipeRecord {
        id,
        title,
        directions,
        ner,
        extended_ner,
        genre,
        provenance,
    };
    record.validate()?;
    Ok(record)
}

/// Writes records in the CSV layout. A `provenance` column is added only
/// when some record carries machine provenance, since ingest defaults
/// labeled rows to human.
pub fn write_csv(path: &Path, records: &[RecipeRecord], format: CsvFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(file, records, format)
}

pub fn write_csv_to<W: Write>(writer: W, records: &[RecipeRecord], format: CsvFormat) -> Result<()> {
    let with_provenance = records.iter().any(|r| r.provenance == Provenance::Machine);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header: Vec<&str> = format.required().to_vec();
    if with_provenance {
        header.push("provenance");
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.title.clone(),
            format_list_cell(&r.directions),
            format_list_cell(&r.ner),
        ];
        if format == CsvFormat::WithExtended {
            let surfaces: Vec<String> = r
                .extended_ner
                .as_ref()
                .map(|s| s.surfaces().map(str::to_owned).collect())
                .unwrap_or_default();
            row.push(format_list_cell(&surfaces));
        }
        row.push(r.genre.map(|g| g.slug().to_owned()).unwrap_or_default());
        row.push(r.genre.map(|g| g.id().to_string()).unwrap_or_default());
        if with_provenance {
            row.push(r.provenance.as_str().to_owned());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Decodes a bracketed list of quoted strings: `["a", "b \"c\""]`.
///
/// `\"`, `\'` and `\\` are unescaped; any other backslash sequence (such as
/// a literal `°` in scraped text) is kept verbatim. A blank cell is an
/// empty list. Errors carry the byte offset within the cell.
pub fn parse_list_cell(cell: &str) -> Result<Vec<String>> {
    let bytes = cell.as_bytes();
    let err = |offset: usize, message: &str| Error::Parse {
        offset,
        message: message.to_owned(),
    };
    let skip_ws = |mut i: usize| {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        i
    };

    let mut i = skip_ws(0);
    if i == bytes.len() {
        return Ok(Vec::new());
    }
    if bytes[i] != b'[' {
        return Err(err(i, "expected '['"));
    }
    i = skip_ws(i + 1);
    let mut items = Vec::new();
    if i < bytes.len() && bytes[i] == b']' {
        i = skip_ws(i + 1);
        return if i == bytes.len() {
            Ok(items)
        } else {
            Err(err(i, "trailing characters after ']'"))
        };
    }
    loop {
        if i >= bytes.len() {
            return Err(err(i, "unexpected end of list"));
        }
        let quote = bytes[i];
        if quote != b'"' && quote != b'\'' {
            return Err(err(i, "expected a quoted string"));
        }
        let open = i;
        i += 1;
        let mut item = String::new();
        let mut seg_start = i;
        loop {
            if i >= bytes.len() {
                return Err(err(open, "unbalanced quote: string is never closed"));
            }
            match bytes[i] {
                b'\\' if i + 1 < bytes.len() && matches!(bytes[i + 1], b'"' | b'\'' | b'\\') => {
                    item.push_str(&cell[seg_start..i]);
                    item.push(bytes[i + 1] as char);
                    i += 2;
                    seg_start = i;
                }
                b if b == quote => {
                    item.push_str(&cell[seg_start..i]);
                    i += 1;
                    break;
                }
                _ => i += 1,
            }
        }
        items.push(item);
        i = skip_ws(i);
        match bytes.get(i) {
            Some(b',') => i = skip_ws(i + 1),
            Some(b']') => {
                i = skip_ws(i + 1);
                if i != bytes.len() {
                    return Err(err(i, "trailing characters after ']'"));
                }
                return Ok(items);
            }
            Some(_) => return Err(err(i, "expected ',' or ']'")),
            None => return Err(err(i, "unexpected end of list")),
        }
    }
}

pub fn format_list_cell(items: &[String]) -> String {
    let mut out = String::from("[");
    for (k, item) in items.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        out.push('"');
        for c in item.chars() {
            if c == '"' || c == '\\' {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('"');
    }
    out.push(']');
    out
}
