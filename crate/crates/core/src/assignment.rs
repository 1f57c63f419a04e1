//! Binary OD-to-segment assignment matrix, stored by column.

use alloc::vec;
use alloc::vec::Vec;

use crate::network::Network;
use crate::paths::PathSet;

/// `A[i, z] = 1` iff segment `i` lies on the route of OD pair `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentMatrix {
    rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
}

impl AssignmentMatrix {
    pub fn build(net: &Network, paths: &PathSet) -> Self {
        let mut col_ptr = Vec::with_capacity(paths.len() + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for route in paths.routes() {
            let start = row_idx.len();
            row_idx.extend(route.iter().map(|s| s.0));
            row_idx[start..].sort_unstable();
            col_ptr.push(row_idx.len());
        }
        Self { rows: net.len(), col_ptr, row_idx }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Sorted row indices of the nonzeros in column `z`.
    #[inline]
    pub fn column(&self, z: usize) -> &[u32] {
        &self.row_idx[self.col_ptr[z]..self.col_ptr[z + 1]]
    }

    pub fn get(&self, row: usize, z: usize) -> bool {
        self.column(z).binary_search(&(row as u32)).is_ok()
    }

    /// Segment demand `λ = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols(), "demand vector length");
        out.fill(0.0);
        for (z, &xz) in x.iter().enumerate() {
            if xz == 0.0 {
                continue;
            }
            for &i in self.column(z) {
                out[i as usize] += xz;
            }
        }
    }

    /// `Aᵀ s`.
    pub fn apply_transpose(&self, s: &[f64]) -> Vec<f64> {
        assert_eq!(s.len(), self.rows, "segment vector length");
        (0..self.cols())
            .map(|z| self.column(z).iter().map(|&i| s[i as usize]).sum())
            .collect()
    }
}
