//! Line-oriented JSON ingestion and persistence.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::types::{AnnotationRecord, FieldError, ImagePair, PredictionRecord, Prompt};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: input is not valid UTF-8")]
    Encoding { line: usize },
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: duplicate id `{id}`")]
    Duplicate { line: usize, id: String },
}

impl DataError {
    fn schema(line: usize, err: FieldError) -> Self {
        DataError::Schema {
            line,
            field: err.field,
            message: err.message,
        }
    }
}

/// A record type that can live in a JSONL file.
pub trait JsonlRecord: Serialize + DeserializeOwned {
    /// Checks invariants after deserialization, normalizing in place where
    /// the schema allows it.
    fn sanitize(&mut self) -> Result<(), FieldError> {
        Ok(())
    }

    /// Identifier that must be unique within a file, if the schema has one.
    fn unique_id(&self) -> Option<&str> {
        None
    }
}

impl JsonlRecord for Prompt {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        if self.prompt_id.is_empty() {
            return Err(FieldError::new("prompt_id", "empty identifier"));
        }
        if let Some(v) = &self.embedding {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(FieldError::new("embedding", "non-finite component"));
            }
        }
        Ok(())
    }

    fn unique_id(&self) -> Option<&str> {
        Some(&self.prompt_id)
    }
}

impl JsonlRecord for ImagePair {
    fn unique_id(&self) -> Option<&str> {
        Some(&self.pair_id)
    }
}

impl JsonlRecord for AnnotationRecord {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        self.validate()
    }

    fn unique_id(&self) -> Option<&str> {
        Some(&self.pair_id)
    }
}

impl JsonlRecord for PredictionRecord {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        PredictionRecord::sanitize(self)
    }

    fn unique_id(&self) -> Option<&str> {
        Some(&self.pair_id)
    }
}

/// Top-level key renames that adapt externally released files to the
/// canonical schema. Keys are external names, values canonical names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMapping {
    #[serde(default)]
    pub renames: BTreeMap<String, String>,
}

impl FieldMapping {
    pub fn apply(&self, value: &mut Value) {
        if self.renames.is_empty() {
            return;
        }
        if let Value::Object(map) = value {
            for (from, to) in &self.renames {
                if let Some(v) = map.remove(from) {
                    map.insert(to.clone(), v);
                }
            }
        }
    }
}

/// Parses one record per non-blank line, validating each.
pub fn parse_jsonl<T: JsonlRecord>(
    reader: impl BufRead,
    mapping: Option<&FieldMapping>,
) -> Result<Vec<T>, DataError> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| match e.kind() {
            io::ErrorKind::InvalidData => DataError::Encoding { line: line_no },
            _ => DataError::Io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut value: Value = serde_json::from_str(&line).map_err(|source| DataError::Json {
            line: line_no,
            source,
        })?;
        if let Some(m) = mapping {
            m.apply(&mut value);
        }
        let mut record: T = serde_path_to_error::deserialize(value).map_err(|e| {
            let field = e.path().to_string();
            DataError::Schema {
                line: line_no,
                field,
                message: e.into_inner().to_string(),
            }
        })?;
        record
            .sanitize()
            .map_err(|e| DataError::schema(line_no, e))?;
        if let Some(id) = record.unique_id() {
            if !ids.insert(id.to_string()) {
                return Err(DataError::Duplicate {
                    line: line_no,
                    id: id.to_string(),
                });
            }
        }
        out.push(record);
    }
    Ok(out)
}

/// Writes one compact JSON object per line; field order follows the type's
/// declaration order and maps are key-sorted.
pub fn write_jsonl<T: Serialize>(mut writer: impl Write, records: &[T]) -> Result<(), DataError> {
    for record in records {
        serde_json::to_writer(&mut writer, record).map_err(io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn to_jsonl_string<T: Serialize>(records: &[T]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// The record schemas the toolkit persists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Prompt,
    ImagePair,
    Annotation,
    Prediction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Prompt(Vec<Prompt>),
    ImagePair(Vec<ImagePair>),
    Annotation(Vec<AnnotationRecord>),
    Prediction(Vec<PredictionRecord>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Prompt(v) => v.len(),
            Records::ImagePair(v) => v.len(),
            Records::Annotation(v) => v.len(),
            Records::Prediction(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write(&self, writer: impl Write) -> Result<(), DataError> {
        match self {
            Records::Prompt(v) => write_jsonl(writer, v),
            Records::ImagePair(v) => write_jsonl(writer, v),
            Records::Annotation(v) => write_jsonl(writer, v),
            Records::Prediction(v) => write_jsonl(writer, v),
        }
    }
}

/// Schema-dispatched variant of [`parse_jsonl`].
pub fn parse_records(
    reader: impl BufRead,
    schema: Schema,
    mapping: Option<&FieldMapping>,
) -> Result<Records, DataError> {
    Ok(match schema {
        Schema::Prompt => Records::Prompt(parse_jsonl(reader, mapping)?),
        Schema::ImagePair => Records::ImagePair(parse_jsonl(reader, mapping)?),
        Schema::Annotation => Records::Annotation(parse_jsonl(reader, mapping)?),
        Schema::Prediction => Records::Prediction(parse_jsonl(reader, mapping)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"pair_id":"a","alignment_scores":[3,4,3],"element_votes":{"cat (animal)":[1,null,1]},"structure_labels":["human_body"],"split_confidence":true,"nsfw_discard":false}"#;

    #[test]
    fn one_valid_annotation_line() {
        let recs: Vec<AnnotationRecord> = parse_jsonl(ONE.as_bytes(), None).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(
            recs[0].element_votes.values().next().unwrap(),
            &vec![Some(1), None, Some(1)]
        );
        assert_eq!(to_jsonl_string(&recs).trim_end(), ONE);
    }

    #[test]
    fn wrong_type_cites_field() {
        let err =
            parse_jsonl::<AnnotationRecord>(r#"{"pair_id": 5}"#.as_bytes(), None).unwrap_err();
        match err {
            DataError::Schema { line, field, .. } => {
                assert_eq!(line, 1);
                assert_eq!(field, "pair_id");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_cites_line() {
        let input = format!("{ONE}\n\n{{not json\n");
        let err = parse_jsonl::<AnnotationRecord>(input.as_bytes(), None).unwrap_err();
        assert!(matches!(err, DataError::Json { line: 3, .. }), "{err}");
    }

    #[test]
    fn invariant_violation_cites_field() {
        let line = r#"{"pair_id":"a","alignment_scores":[3,4]}"#;
        let err = parse_jsonl::<AnnotationRecord>(line.as_bytes(), None).unwrap_err();
        assert!(matches!(err, DataError::Schema { ref field, .. } if field == "alignment_scores"));

        let line =
            r#"{"pair_id":"a","alignment_scores":[3,4,4],"element_votes":{"x (vehicle)":[1,1,1]}}"#;
        let err = parse_jsonl::<AnnotationRecord>(line.as_bytes(), None).unwrap_err();
        assert!(err.to_string().contains("vehicle"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let input = format!("{ONE}\n{ONE}\n");
        let err = parse_jsonl::<AnnotationRecord>(input.as_bytes(), None).unwrap_err();
        assert!(matches!(err, DataError::Duplicate { line: 2, .. }));
    }

    #[test]
    fn invalid_utf8_reported_with_line() {
        let mut bytes = format!("{ONE}\n").into_bytes();
        bytes.extend_from_slice(b"{\"pair_id\":\"\xff\"}\n");
        let err = parse_jsonl::<AnnotationRecord>(&bytes[..], None).unwrap_err();
        assert!(matches!(err, DataError::Encoding { line: 2 }));
    }

    #[test]
    fn mapping_renames_external_fields() {
        let line = r#"{"id":"a","scores":[1,2,3]}"#;
        let mapping = FieldMapping {
            renames: [
                ("id".to_string(), "pair_id".to_string()),
                ("scores".to_string(), "alignment_scores".to_string()),
            ]
            .into(),
        };
        let recs: Vec<AnnotationRecord> = parse_jsonl(line.as_bytes(), Some(&mapping)).unwrap();
        assert_eq!(recs[0].pair_id, "a");
        assert_eq!(recs[0].alignment_scores, vec![1, 2, 3]);
    }

    #[test]
    fn write_shapes() {
        assert_eq!(to_jsonl_string::<Prompt>(&[]), "");
        let recs: Vec<AnnotationRecord> = parse_jsonl(ONE.as_bytes(), None).unwrap();
        let mut two = recs.clone();
        two.push(AnnotationRecord {
            pair_id: "b".into(),
            ..recs[0].clone()
        });
        assert_eq!(to_jsonl_string(&two).lines().count(), 2);
    }

    #[test]
    fn schema_dispatch() {
        let recs = parse_records(ONE.as_bytes(), Schema::Annotation, None).unwrap();
        assert_eq!(recs.len(), 1);
        let mut out = Vec::new();
        recs.write(&mut out).unwrap();
        assert_eq!(
            parse_records(&out[..], Schema::Annotation, None).unwrap(),
            recs
        );
    }
}
