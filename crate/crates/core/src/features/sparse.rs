use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted `(index, value)` pairs over a fixed dimension. Absent means zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            ..Default::default()
        }
    }

    /// Validating constructor: indices strictly increasing and below `dim`,
    /// values finite and non-zero.
    pub fn new(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, x) in pairs {
            if i >= dim {
                return Err(Error::Argument(format!("index {i} out of range for dimension {dim}")));
            }
            if indices.last().is_some_and(|&last| last as usize >= i) {
                return Err(Error::Argument("sparse indices must be strictly increasing".into()));
            }
            if !x.is_finite() || x == 0.0 {
                return Err(Error::Argument(format!("invalid sparse value {x} at index {i}")));
            }
            indices.push(i as u32);
            values.push(x);
        }
        Ok(SparseVector { dim, indices, values })
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i as u32, x))
            .unzip();
        SparseVector {
            dim: dense.len(),
            indices,
            values,
        }
    }

    pub(crate) fn from_parts_unchecked(dim: usize, indices: Vec<u32>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        SparseVector { dim, indices, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&(index as u32)) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.pairs().map(|(i, x)| dense[i] * x).sum()
    }

    /// `dense += scale * self`
    pub fn add_scaled_to(&self, dense: &mut [f64], scale: f64) {
        for (i, x) in self.pairs() {
            dense[i] += scale * x;
        }
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|x| x * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SparseVector::new(3, [(0, 1.0), (2, -0.5)]).is_ok());
        assert!(SparseVector::new(3, [(3, 1.0)]).is_err());
        assert!(SparseVector::new(3, [(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::new(3, [(2, 1.0), (0, 2.0)]).is_err());
        assert!(SparseVector::new(3, [(0, 0.0)]).is_err());
        assert!(SparseVector::new(3, [(0, f64::NAN)]).is_err());
    }

    #[test]
    fn dense_ops() {
        let x = SparseVector::from_dense(&[0.0, 2.0, 0.0, -1.0]);
        assert_eq!((x.dim(), x.nnz()), (4, 2));
        assert_eq!(x.get(1), 2.0);
        assert_eq!(x.get(2), 0.0);
        assert_eq!(x.dot(&[1.0, 1.0, 1.0, 3.0]), -1.0);
        let mut acc = vec![0.0; 4];
        x.add_scaled_to(&mut acc, 2.0);
        assert_eq!(acc, [0.0, 4.0, 0.0, -2.0]);
        assert_eq!(x.scaled(3.0).values(), [6.0, -3.0]);
    }
}
