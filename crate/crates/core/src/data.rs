use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Observation mask, `true` = observed. Stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl Mask {
    pub fn all_observed(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            cells: vec![true; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::MaskDimensionMismatch {
                expected_rows: rows.len(),
                expected_cols: cols,
                detail: format!("row {} has {} entries", i, r.len()),
            });
        }
        Ok(Mask {
            rows: rows.len(),
            cols,
            cells: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, observed: bool) {
        self.cells[i * self.cols + j] = observed;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.cells[i * self.cols..(i + 1) * self.cols]
    }

    pub fn observed_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn missing_count(&self) -> usize {
        self.cells.len() - self.observed_count()
    }

    pub fn row_observed(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&c| c).count()
    }

    /// True if every cell observed here is also observed in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.dims() == other.dims() && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    pub fn and(&self, other: &Mask) -> Mask {
        debug_assert_eq!(self.dims(), other.dims());
        Mask {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| a && b).collect(),
        }
    }

    pub fn or(&self, other: &Mask) -> Mask {
        debug_assert_eq!(self.dims(), other.dims());
        Mask {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        self.cells.chunks(self.cols.max(1)).map(<[bool]>::to_vec).collect()
    }
}

/// A numeric n x p matrix with its observation mask. Values at unobserved
/// cells are never read.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    mask: Mask,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, mask: Mask) -> Result<Self> {
        if mask.dims() != x.shape() {
            return Err(Error::MaskDimensionMismatch {
                expected_rows: x.nrows(),
                expected_cols: x.ncols(),
                detail: format!("mask is {}x{}", mask.rows(), mask.cols()),
            });
        }
        if x.nrows() < 2 || x.ncols() < 1 {
            return Err(Error::InvalidArgument(format!(
                "dataset needs n >= 2 and p >= 1, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                if mask.get(i, j) && !x[(i, j)].is_finite() {
                    return Err(Error::Parse {
                        row: i,
                        column: j,
                        msg: "observed cell is not finite".into(),
                    });
                }
            }
        }
        Ok(Dataset { x, mask })
    }

    pub fn complete(x: DMatrix<f64>) -> Result<Self> {
        let mask = Mask::all_observed(x.nrows(), x.ncols());
        Dataset::new(x, mask)
    }

    /// Builds a dataset from rows where `None` marks a missing cell.
    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::Parse {
                row: i,
                column: r.len(),
                msg: format!("expected {} columns", p),
            });
        }
        let mut x = DMatrix::from_element(n, p, f64::NAN);
        let mut mask = Mask::all_observed(n, p);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                match v {
                    Some(v) => x[(i, j)] = *v,
                    None => mask.set(i, j, false),
                }
            }
        }
        Dataset::new(x, mask)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if self.mask.get(i, j) {
            Some(self.x[(i, j)])
        } else {
            None
        }
    }

    /// Same values under a different mask. The new mask must not reveal cells
    /// that were missing here.
    pub fn with_mask(&self, mask: Mask) -> Result<Self> {
        if mask.dims() != self.mask.dims() {
            return Err(Error::MaskDimensionMismatch {
                expected_rows: self.n(),
                expected_cols: self.p(),
                detail: format!("mask is {}x{}", mask.rows(), mask.cols()),
            });
        }
        Ok(Dataset {
            x: self.x.clone(),
            mask: mask.and(&self.mask),
        })
    }

    /// Observed `(row, value)` pairs of column `j`.
    pub fn column_observed(&self, j: usize) -> Vec<(usize, f64)> {
        (0..self.n())
            .filter(|&i| self.mask.get(i, j))
            .map(|i| (i, self.x[(i, j)]))
            .collect()
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let p = self.p();
        let x = DMatrix::from_fn(rows.len(), p, |r, j| self.x[(rows[r], j)]);
        let cells = rows.iter().flat_map(|&i| self.mask.row(i).iter().copied()).collect();
        Dataset {
            x,
            mask: Mask {
                rows: rows.len(),
                cols: p,
                cells,
            },
        }
    }

    pub fn missing_fraction(&self) -> f64 {
        self.mask.missing_count() as f64 / (self.n() * self.p()) as f64
    }

    /// Applies `x_ij -> scale_j * x_ij + shift_j` to every observed cell.
    pub fn affine_columns(&self, scale: &[f64], shift: &[f64]) -> Dataset {
        let mut x = self.x.clone();
        for j in 0..self.p() {
            for i in 0..self.n() {
                x[(i, j)] = scale[j] * x[(i, j)] + shift[j];
            }
        }
        Dataset {
            x,
            mask: self.mask.clone(),
        }
    }
}
