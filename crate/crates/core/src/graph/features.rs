use crate::tensor::{Real, Tensor};
use crate::{Error, Result};

/// Growable row-major `f32` matrix with a fixed width.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} feature matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        let c = self.cols;
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn push_row(&mut self, row: &[f32]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::Shape(format!(
                "feature row has width {}, expected {}",
                row.len(),
                self.cols
            )));
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn set(&mut self, r: usize, c: usize, v: f32) {
        self.data[r * self.cols + c] = v;
    }

    /// Selected rows as a tensor, in the given order.
    pub fn gather<T: Real>(&self, rows: impl IntoIterator<Item = usize>) -> Tensor<T> {
        let mut data = Vec::new();
        let mut n = 0;
        for r in rows {
            data.extend(self.row(r).iter().map(|&v| T::of(v)));
            n += 1;
        }
        Tensor::from_vec(n, self.cols, data).expect("row widths are uniform")
    }

    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        self.gather(0..self.rows())
    }

    /// Column means over the given rows; zeros when `rows` is empty.
    pub fn mean_of(&self, rows: &[u32]) -> Vec<f32> {
        let mut acc = vec![0.0f64; self.cols];
        for &r in rows {
            for (a, &v) in acc.iter_mut().zip(self.row(r as usize)) {
                *a += v as f64;
            }
        }
        if !rows.is_empty() {
            let n = rows.len() as f64;
            for a in &mut acc {
                *a /= n;
            }
        }
        acc.into_iter().map(|v| v as f32).collect()
    }
}
