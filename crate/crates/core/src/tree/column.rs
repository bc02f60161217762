use crate::data::{FeatureColumn, SparseColumn};

/// Read access to one numeric column as the tree learner sees it.
///
/// `None` means the row takes the default direction. With sparsity
/// awareness both missing values and implicit sparse entries are `None`;
/// without it both read as `0.0`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum ColumnView<'a> {
    Dense {
        values: &'a [f64],
        sparsity_aware: bool,
    },
    Sparse {
        column: &'a SparseColumn,
        sparsity_aware: bool,
    },
}

impl<'a> ColumnView<'a> {
    /// `None` for raw categorical columns.
    pub(crate) fn new(column: &'a FeatureColumn, sparsity_aware: bool) -> Option<Self> {
        match column {
            FeatureColumn::Dense(values) => Some(ColumnView::Dense {
                values,
                sparsity_aware,
            }),
            FeatureColumn::Sparse(column) => Some(ColumnView::Sparse {
                column,
                sparsity_aware,
            }),
            FeatureColumn::Categorical(_) => None,
        }
    }

    #[inline]
    fn resolve(v: f64, sparsity_aware: bool) -> Option<f64> {
        if v.is_nan() {
            (!sparsity_aware).then_some(0.0)
        } else {
            Some(v)
        }
    }

    #[inline]
    pub(crate) fn value(&self, row: usize) -> Option<f64> {
        match *self {
            ColumnView::Dense {
                values,
                sparsity_aware,
            } => Self::resolve(values[row], sparsity_aware),
            ColumnView::Sparse {
                column,
                sparsity_aware,
            } => match column.get(row) {
                Some(v) => Self::resolve(v, sparsity_aware),
                None => (!sparsity_aware).then_some(0.0),
            },
        }
    }
}
