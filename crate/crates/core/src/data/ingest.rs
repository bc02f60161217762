use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    tfidf_vectorize, CategoricalColumn, ColumnKind, ColumnMeta, Dataset, FeatureColumn, MISSING,
};
use crate::error::{Error, Result};

/// How a CSV column should be read. Columns not declared are numeric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclaredKind {
    Numeric,
    Categorical,
    Text,
    Ignore,
}

/// Column-kind declarations for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label: String,
    #[serde(default)]
    pub columns: BTreeMap<String, DeclaredKind>,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
}

fn default_vocab_size() -> usize {
    10_000
}

impl CsvSchema {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            columns: BTreeMap::new(),
            vocab_size: default_vocab_size(),
        }
    }

    pub fn with(mut self, column: impl Into<String>, kind: DeclaredKind) -> Self {
        self.columns.insert(column.into(), kind);
        self
    }
}

/// Reads a comma-separated file with a header row.
///
/// Empty numeric cells become [`MISSING`]; empty categorical cells become
/// their own (empty-string) category. Labels are mapped to ids through the
/// sorted distinct raw values (numerically when every label parses as a
/// number).
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub(crate) fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let label_idx = header
        .iter()
        .position(|h| *h == schema.label)
        .ok_or_else(|| Error::Schema(format!("label column '{}' not found", schema.label)))?;
    for declared in schema.columns.keys() {
        if !header.contains(declared) {
            return Err(Error::Schema(format!("declared column '{declared}' not found")));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record?;
        for (col, cell) in cells.iter_mut().zip(record.iter()) {
            col.push(cell.to_string());
        }
    }
    let n_rows = cells[label_idx].len();

    let raw_labels = &cells[label_idx];
    if let Some(row) = raw_labels.iter().position(String::is_empty) {
        return Err(Error::Ingestion {
            row,
            column: schema.label.clone(),
            message: "empty label".into(),
        });
    }
    let class_names = sorted_labels(raw_labels);
    if class_names.len() < 2 {
        return Err(Error::Degenerate("fewer than 2 classes".into()));
    }
    let labels = raw_labels
        .iter()
        .map(|l| class_names.iter().position(|c| c == l).unwrap() as u32)
        .collect();

    let mut columns = Vec::new();
    let mut metas = Vec::new();
    for (idx, name) in header.iter().enumerate() {
        if idx == label_idx {
            continue;
        }
        let kind = schema.columns.get(name).copied().unwrap_or(DeclaredKind::Numeric);
        match kind {
            DeclaredKind::Ignore => {}
            DeclaredKind::Numeric => {
                let values = cells[idx]
                    .iter()
                    .enumerate()
                    .map(|(row, cell)| parse_numeric(cell, row, name))
                    .collect::<Result<Vec<_>>>()?;
                columns.push(FeatureColumn::Dense(values));
                metas.push(ColumnMeta::new(name.clone(), ColumnKind::Numeric));
            }
            DeclaredKind::Categorical => {
                columns.push(FeatureColumn::Categorical(CategoricalColumn::from_tokens(
                    &cells[idx],
                )));
                metas.push(ColumnMeta::new(name.clone(), ColumnKind::Categorical));
            }
            DeclaredKind::Text => {
                let tfidf = tfidf_vectorize(&cells[idx], schema.vocab_size)?;
                for (term, column) in tfidf.vocabulary.into_iter().zip(tfidf.columns) {
                    columns.push(FeatureColumn::Sparse(column));
                    metas.push(ColumnMeta::new(format!("{name}:{term}"), ColumnKind::TextDerived));
                }
            }
        }
    }
    debug_assert!(columns.iter().all(|c| c.logical_len_ok(n_rows)));
    Dataset::new(columns, metas, labels, class_names)
}

fn parse_numeric(cell: &str, row: usize, column: &str) -> Result<f64> {
    if cell.is_empty() {
        return Ok(MISSING);
    }
    cell.parse::<f64>().map_err(|_| Error::Ingestion {
        row,
        column: column.to_string(),
        message: format!("cannot parse '{cell}' as a number"),
    })
}

fn sorted_labels(raw: &[String]) -> Vec<String> {
    let distinct: BTreeSet<&String> = raw.iter().collect();
    let mut names: Vec<String> = distinct.into_iter().cloned().collect();
    let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
    if let Some(keys) = numeric {
        let mut paired: Vec<(f64, String)> = keys.into_iter().zip(names).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        names = paired.into_iter().map(|(_, n)| n).collect();
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::is_missing;

    fn read(text: &str, schema: &CsvSchema) -> Result<Dataset> {
        read_csv(text.as_bytes(), schema)
    }

    #[test]
    fn three_row_file_maps_labels_by_sorted_value() {
        let ds = read("a,b,label\n1,2,A\n3,4,B\n5,6,A\n", &CsvSchema::new("label")).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_names(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn empty_numeric_cell_is_missing_not_zero() {
        let ds = read("a,label\n1,x\n,y\n", &CsvSchema::new("label")).unwrap();
        assert!(is_missing(ds.value(1, 0)));
        assert_eq!(ds.value(0, 0), 1.0);
    }

    #[test]
    fn single_class_label_is_rejected() {
        let err = read("a,label\n1,x\n2,x\n", &CsvSchema::new("label")).unwrap_err();
        assert!(err.to_string().contains("fewer than 2 classes"));
    }

    #[test]
    fn unparseable_cell_names_row_and_column() {
        let err = read("a,label\n1,x\nfoo,y\n", &CsvSchema::new("label")).unwrap_err();
        match err {
            Error::Ingestion { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_declared_column_is_schema_error() {
        let schema = CsvSchema::new("label").with("nope", DeclaredKind::Categorical);
        assert!(matches!(
            read("a,label\n1,x\n2,y\n", &schema),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let ds = read("a,label\n1,10\n2,2\n3,10\n", &CsvSchema::new("label")).unwrap();
        assert_eq!(ds.class_names(), &["2".to_string(), "10".to_string()]);
        assert_eq!(ds.labels(), &[1, 0, 1]);
    }

    #[test]
    fn categorical_and_text_columns() {
        let schema = CsvSchema::new("y")
            .with("c", DeclaredKind::Categorical)
            .with("t", DeclaredKind::Text)
            .with("skip", DeclaredKind::Ignore);
        let ds = read(
            "c,t,skip,y\nred,good movie,9,1\nblue,bad movie,9,0\n,good,9,1\n",
            &schema,
        )
        .unwrap();
        assert_eq!(ds.schema()[0].kind, ColumnKind::Categorical);
        assert!(ds.schema()[1..].iter().all(|m| m.kind == ColumnKind::TextDerived));
        assert_eq!(ds.n_features(), 1 + 3);
    }
}
