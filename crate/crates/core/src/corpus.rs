//! One JSON object per line: the query, its context, the linearized MR, the
//! raw response and the annotated response.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mr::{AnnotatedTree, MrError, MrTree};
use crate::ontology::Ontology;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordContext {
    /// ISO-8601, no time zone.
    pub reference_datetime: String,
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub query: String,
    pub context: RecordContext,
    pub mr: String,
    pub response: String,
    pub annotated_response: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: MrError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusRecord {
    pub fn parse_mr(&self, ontology: &Ontology) -> Result<MrTree, MrError> {
        MrTree::parse(&self.mr, ontology)
    }

    pub fn parse_annotated(&self, ontology: &Ontology) -> Result<AnnotatedTree, MrError> {
        AnnotatedTree::parse(&self.annotated_response, ontology)
    }
}

pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed { line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<'a>(
    mut writer: impl Write,
    records: impl IntoIterator<Item = &'a CorpusRecord>,
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses every record's MR and annotated response, reporting the first
/// failing line.
pub fn parse_records(
    records: &[CorpusRecord],
    ontology: &Ontology,
) -> Result<Vec<(MrTree, AnnotatedTree)>, CorpusError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let err = |source| CorpusError::Invalid { line: i + 1, source };
            Ok((r.parse_mr(ontology).map_err(err)?, r.parse_annotated(ontology).map_err(err)?))
        })
        .collect()
}
