//! TF-IDF vectorization into sparse columns.

use std::collections::HashMap;

use super::SparseColumn;
use crate::error::{Error, Result};

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(doc: &str) -> Vec<String> {
    doc.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfMatrix {
    /// Selected terms, one per column, in order of decreasing document
    /// frequency (ties lexicographic).
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    pub columns: Vec<SparseColumn>,
}

/// Builds L2-normalized TF-IDF columns over the `vocab_size` terms with the
/// highest document frequency. `idf = ln((1 + N) / (1 + df)) + 1`.
pub fn tfidf_vectorize<S: AsRef<str>>(documents: &[S], vocab_size: usize) -> Result<TfidfMatrix> {
    if vocab_size == 0 {
        return Err(Error::Parameter("vocab_size must be at least 1".into()));
    }
    let tokenized: Vec<Vec<String>> = documents.iter().map(|d| tokenize(d.as_ref())).collect();
    if tokenized.iter().all(Vec::is_empty) {
        return Err(Error::Vectorization("all documents are empty".into()));
    }

    let mut df: HashMap<&str, usize> = HashMap::new();
    for tokens in &tokenized {
        let mut seen: Vec<&str> = tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(vocab_size);

    let n_docs = documents.len() as f64;
    let term_index: HashMap<&str, usize> =
        ranked.iter().enumerate().map(|(i, (t, _))| (*t, i)).collect();
    let idf: Vec<f64> = ranked
        .iter()
        .map(|&(_, d)| ((1.0 + n_docs) / (1.0 + d as f64)).ln() + 1.0)
        .collect();

    let mut col_indices: Vec<Vec<u32>> = vec![Vec::new(); ranked.len()];
    let mut col_values: Vec<Vec<f64>> = vec![Vec::new(); ranked.len()];
    for (row, tokens) in tokenized.iter().enumerate() {
        let mut tf: HashMap<usize, f64> = HashMap::new();
        for t in tokens {
            if let Some(&col) = term_index.get(t.as_str()) {
                *tf.entry(col).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> =
            tf.into_iter().map(|(col, count)| (col, count * idf[col])).collect();
        entries.sort_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for (col, w) in entries {
            col_indices[col].push(row as u32);
            col_values[col].push(w / norm);
        }
    }
    let columns = col_indices
        .into_iter()
        .zip(col_values)
        .map(|(i, v)| SparseColumn::new(i, v, documents.len()))
        .collect::<Result<Vec<_>>>()?;
    Ok(TfidfMatrix {
        vocabulary: ranked.into_iter().map(|(t, _)| t.to_string()).collect(),
        idf,
        columns,
    })
}
