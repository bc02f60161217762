//! Column-oriented datasets and the preprocessing shared by every experiment.
//!
//! Missing values are stored as `NaN` in dense columns ([`MISSING`]). Sparse
//! columns store explicit entries only; absent entries are `0.0`, which is a
//! different thing from missing. Raw categorical columns hold category codes
//! and must be encoded (see [`encode`]) before a tree can use them.

mod encode;
mod folds;
mod ingest;
mod text;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use encode::{
    encode_categoricals, ordered_target_encode, CategoryStats, EncodedColumn, OrderedTargetEncoder,
};
pub use folds::{stratified_kfold, FoldPlan};
pub use ingest::{load_csv, CsvSchema, DeclaredKind};
pub use text::{tfidf_vectorize, tokenize, TfidfMatrix};

/// Marker stored in dense columns for a missing value.
pub const MISSING: f64 = f64::NAN;

#[inline]
pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    /// Raw category tokens, not yet usable by the tree learner.
    Categorical,
    CategoricalEncoded,
    TextDerived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Sparse column: strictly increasing row indices with explicit values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumn {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseColumn {
    pub fn new(indices: Vec<u32>, values: Vec<f64>, n_rows: usize) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: indices.len(),
                actual: values.len(),
            });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema(
                "sparse row indices must be strictly increasing".into(),
            ));
        }
        if indices.last().is_some_and(|&i| i as usize >= n_rows) {
            return Err(Error::Schema("sparse row index out of range".into()));
        }
        Ok(Self { indices, values })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored value for `row`, `None` when the entry is implicit.
    pub fn get(&self, row: usize) -> Option<f64> {
        self.indices
            .binary_search(&(row as u32))
            .ok()
            .map(|pos| self.values[pos])
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Raw categorical column: one code per row into `levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalColumn {
    codes: Vec<u32>,
    levels: Vec<String>,
}

impl CategoricalColumn {
    pub fn new(codes: Vec<u32>, levels: Vec<String>) -> Result<Self> {
        if codes.iter().any(|&c| c as usize >= levels.len()) {
            return Err(Error::Schema("category code out of range".into()));
        }
        Ok(Self { codes, levels })
    }

    /// Builds a column from raw tokens; levels are the sorted distinct tokens.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut levels: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
        levels.sort();
        levels.dedup();
        let codes = tokens
            .iter()
            .map(|t| levels.binary_search_by(|l| l.as_str().cmp(t.as_ref())).unwrap() as u32)
            .collect();
        Self { codes, levels }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumn {
    Dense(Vec<f64>),
    Sparse(SparseColumn),
    Categorical(CategoricalColumn),
}

impl FeatureColumn {
    fn logical_len_ok(&self, n_rows: usize) -> bool {
        match self {
            FeatureColumn::Dense(v) => v.len() == n_rows,
            FeatureColumn::Sparse(s) => s.indices.last().map_or(true, |&i| (i as usize) < n_rows),
            FeatureColumn::Categorical(c) => c.codes.len() == n_rows,
        }
    }

    /// Numeric value of a cell; implicit sparse entries are `0.0`, missing is
    /// `NaN`. Raw categorical cells read as missing.
    pub fn value(&self, row: usize) -> f64 {
        match self {
            FeatureColumn::Dense(v) => v[row],
            FeatureColumn::Sparse(s) => s.get(row).unwrap_or(0.0),
            FeatureColumn::Categorical(_) => MISSING,
        }
    }

    fn select(&self, rows: &[usize]) -> FeatureColumn {
        match self {
            FeatureColumn::Dense(v) => FeatureColumn::Dense(rows.iter().map(|&r| v[r]).collect()),
            FeatureColumn::Sparse(s) => {
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for (new_row, &r) in rows.iter().enumerate() {
                    if let Some(v) = s.get(r) {
                        indices.push(new_row as u32);
                        values.push(v);
                    }
                }
                FeatureColumn::Sparse(SparseColumn { indices, values })
            }
            FeatureColumn::Categorical(c) => FeatureColumn::Categorical(CategoricalColumn {
                codes: rows.iter().map(|&r| c.codes[r]).collect(),
                levels: c.levels.clone(),
            }),
        }
    }
}

/// Feature matrix with labels. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<FeatureColumn>,
    schema: Vec<ColumnMeta>,
    labels: Vec<u32>,
    class_names: Vec<String>,
    n_rows: usize,
}

impl Dataset {
    /// Validates the column/label invariants. Every class in
    /// `0..class_names.len()` must occur at least once, and there must be at
    /// least two classes.
    pub fn new(
        columns: Vec<FeatureColumn>,
        schema: Vec<ColumnMeta>,
        labels: Vec<u32>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self::from_parts(columns, schema, labels, class_names)?;
        if ds.n_classes() < 2 {
            return Err(Error::Degenerate("fewer than 2 classes".into()));
        }
        let counts = ds.class_counts();
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Schema(format!(
                "class {} ('{}') has no rows",
                c, ds.class_names[c]
            )));
        }
        Ok(ds)
    }

    /// Like [`Dataset::new`] but tolerates classes without rows, which happens
    /// for small classes inside a fold.
    fn from_parts(
        columns: Vec<FeatureColumn>,
        schema: Vec<ColumnMeta>,
        labels: Vec<u32>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n_rows = labels.len();
        if columns.len() != schema.len() {
            return Err(Error::Schema(format!(
                "{} columns but {} schema entries",
                columns.len(),
                schema.len()
            )));
        }
        for (col, meta) in columns.iter().zip(&schema) {
            if !col.logical_len_ok(n_rows) {
                return Err(Error::Schema(format!(
                    "column '{}' does not have {} rows",
                    meta.name, n_rows
                )));
            }
            let kind_ok = match col {
                FeatureColumn::Categorical(_) => meta.kind == ColumnKind::Categorical,
                _ => meta.kind != ColumnKind::Categorical,
            };
            if !kind_ok {
                return Err(Error::Schema(format!(
                    "column '{}' storage does not match kind {:?}",
                    meta.name, meta.kind
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= class_names.len()) {
            return Err(Error::Schema(format!("label id {bad} out of range")));
        }
        Ok(Self {
            columns,
            schema,
            labels,
            class_names,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &FeatureColumn {
        &self.columns[idx]
    }

    pub fn schema(&self) -> &[ColumnMeta] {
        &self.schema
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn has_categorical(&self) -> bool {
        self.schema.iter().any(|m| m.kind == ColumnKind::Categorical)
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col].value(row)
    }

    /// Materializes one row. With `absent_as_missing`, implicit sparse
    /// entries become [`MISSING`] instead of `0.0`.
    pub fn row_values(&self, row: usize, absent_as_missing: bool) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match c {
                FeatureColumn::Sparse(s) if absent_as_missing => s.get(row).unwrap_or(MISSING),
                other => other.value(row),
            })
            .collect()
    }

    /// New dataset holding `rows` in the given order. Classes with no
    /// remaining rows keep their ids.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::Parameter(format!("row {r} out of range")));
        }
        Self::from_parts(
            self.columns.iter().map(|c| c.select(rows)).collect(),
            self.schema.clone(),
            rows.iter().map(|&r| self.labels[r]).collect(),
            self.class_names.clone(),
        )
    }

    /// Replaces one column (used to swap raw categories for their encoding).
    pub fn with_column(&self, idx: usize, column: FeatureColumn, kind: ColumnKind) -> Result<Dataset> {
        let mut columns = self.columns.clone();
        let mut schema = self.schema.clone();
        columns[idx] = column;
        schema[idx].kind = kind;
        Self::from_parts(columns, schema, self.labels.clone(), self.class_names.clone())
    }

    /// Convenience constructor for dense numeric data given row-major rows.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u32>, n_classes: usize) -> Result<Dataset> {
        let n_features = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
            return Err(Error::LengthMismatch {
                expected: n_features,
                actual: bad.len(),
            });
        }
        crate::error::check_lengths(rows.len(), labels.len())?;
        let columns = (0..n_features)
            .map(|f| FeatureColumn::Dense(rows.iter().map(|r| r[f]).collect()))
            .collect();
        let schema = (0..n_features)
            .map(|f| ColumnMeta::new(format!("f{f}"), ColumnKind::Numeric))
            .collect();
        let class_names = (0..n_classes).map(|c| c.to_string()).collect();
        Dataset::new(columns, schema, labels, class_names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Dataset {
        Dataset::new(
            vec![
                FeatureColumn::Dense(vec![1.0, MISSING, 3.0]),
                FeatureColumn::Sparse(SparseColumn::new(vec![1], vec![5.0], 3).unwrap()),
            ],
            vec![
                ColumnMeta::new("a", ColumnKind::Numeric),
                ColumnMeta::new("b", ColumnKind::TextDerived),
            ],
            vec![0, 1, 0],
            vec!["A".into(), "B".into()],
        )
        .unwrap()
    }

    #[test]
    fn sparse_rejects_unsorted_or_out_of_range() {
        assert!(SparseColumn::new(vec![2, 1], vec![1.0, 1.0], 3).is_err());
        assert!(SparseColumn::new(vec![1, 1], vec![1.0, 1.0], 3).is_err());
        assert!(SparseColumn::new(vec![3], vec![1.0], 3).is_err());
    }

    #[test]
    fn implicit_sparse_is_zero_but_missing_is_nan() {
        let ds = small();
        assert_eq!(ds.value(0, 1), 0.0);
        assert_eq!(ds.value(1, 1), 5.0);
        assert!(is_missing(ds.value(1, 0)));
        let row = ds.row_values(0, true);
        assert!(is_missing(row[1]));
        assert_eq!(ds.row_values(0, false)[1], 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let err = Dataset::new(
            vec![FeatureColumn::Dense(vec![1.0, 2.0])],
            vec![ColumnMeta::new("a", ColumnKind::Numeric)],
            vec![0, 0],
            vec!["A".into()],
        )
        .unwrap_err();
        assert!(err.to_string().contains("fewer than 2 classes"));
    }

    #[test]
    fn select_rows_remaps_sparse_indices() {
        let ds = small();
        let sub = ds.select_rows(&[2, 1]).unwrap();
        assert_eq!(sub.labels(), &[0, 1]);
        assert_eq!(sub.value(1, 1), 5.0);
        assert_eq!(sub.value(0, 1), 0.0);
        assert_eq!(sub.value(0, 0), 3.0);
    }
}
