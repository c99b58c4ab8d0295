//! CSV tables with a block of `# key=value` metadata lines on top.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

pub type Metadata = BTreeMap<String, String>;

pub fn write_table<W: Write>(
    mut out: W,
    meta: &Metadata,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Returns the metadata, then the data rows with the header checked
/// against `header`.
pub fn read_table<R: Read>(mut input: R, header: &[&str]) -> Result<(Metadata, Vec<csv::StringRecord>)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut meta = Metadata::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.trim().split_once('=') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
        body_start += line.len();
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[body_start..]);
    let found = reader.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!("expected columns {header:?}, found {:?}", found.iter().collect::<Vec<_>>())));
    }
    let rows = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((meta, rows))
}

pub fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = row.get(i).ok_or_else(|| Error::Parse(format!("missing column {i}")))?;
    raw.trim().parse().map_err(|_| Error::Parse(format!("cannot parse {raw:?} in column {i}")))
}
