//! Dense row-major matrix with NaN-encoded missing entries.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Patients-by-features matrix. A `NaN` entry means "missing"; every other
/// entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Matrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    /// Build from equally sized rows. Panics if row widths differ.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            n_rows,
            n_cols,
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n_cols + col] = value;
    }

    #[inline]
    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_nan()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }

    /// A new matrix holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
        }
    }

    /// A copy with one extra trailing column.
    pub fn with_appended_column(&self, col: &[f64]) -> Matrix {
        assert_eq!(col.len(), self.n_rows, "column length mismatch");
        let mut out = Matrix::zeros(self.n_rows, self.n_cols + 1);
        for r in 0..self.n_rows {
            out.data[r * (self.n_cols + 1)..r * (self.n_cols + 1) + self.n_cols]
                .copy_from_slice(self.row(r));
            out.data[r * (self.n_cols + 1) + self.n_cols] = col[r];
        }
        out
    }
}

// JSON has no NaN, so missing entries serialize as null.
impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            n_rows: usize,
            n_cols: usize,
            data: Vec<Option<f64>>,
            #[serde(skip)]
            _marker: std::marker::PhantomData<&'a ()>,
        }
        let repr = Repr {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self
                .data
                .iter()
                .map(|v| if v.is_nan() { None } else { Some(*v) })
                .collect(),
            _marker: std::marker::PhantomData,
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            n_rows: usize,
            n_cols: usize,
            data: Vec<Option<f64>>,
        }
        let repr = Repr::deserialize(deserializer)?;
        if repr.data.len() != repr.n_rows * repr.n_cols {
            return Err(D::Error::custom("matrix data length mismatch"));
        }
        Ok(Matrix {
            n_rows: repr.n_rows,
            n_cols: repr.n_cols,
            data: repr
                .data
                .into_iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect(),
        })
    }
}
