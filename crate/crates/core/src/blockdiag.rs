//! Block-diagonal operators stored block by block.
//!
//! The witness pipeline multiplies dense nest operators by diagonal factors
//! (`D_a^{-1}`, the shuffle isometry, the capture projection) many times;
//! keeping those factors blockwise turns each product into a sum of thin
//! GEMMs.

use ndarray::s;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonal {
    offsets: Vec<usize>,
    blocks: Vec<CMat>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<CMat>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for b in &blocks {
            if b.nrows() != b.ncols() {
                return Err(Error::Shape(format!("non-square diagonal block {:?}", b.dim())));
            }
            offsets.push(offsets.last().unwrap() + b.nrows());
        }
        Ok(Self { offsets, blocks })
    }

    pub fn from_fn(sizes: &[usize], mut f: impl FnMut(usize, usize) -> CMat) -> Result<Self> {
        Self::new(sizes.iter().enumerate().map(|(k, &n)| f(k, n)).collect())
    }

    pub fn identity(sizes: &[usize]) -> Self {
        Self::from_fn(sizes, |_, n| linalg::eye(n)).expect("square blocks")
    }

    /// Diagonal blocks of a dense matrix.
    pub fn extract(dense: &CMat, sizes: &[usize]) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if dense.dim() != (total, total) {
            return Err(Error::Shape(format!(
                "expected {total}x{total}, got {:?}",
                dense.dim()
            )));
        }
        let mut start = 0;
        Self::from_fn(sizes, |_, n| {
            let b = dense.slice(s![start..start + n, start..start + n]).to_owned();
            start += n;
            b
        })
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k]
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros((n, n));
        for (k, b) in self.blocks.iter().enumerate() {
            out.slice_mut(s![self.range(k), self.range(k)]).assign(b);
        }
        out
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        assert_eq!(self.offsets, other.offsets, "block partitions differ");
        Self {
            offsets: self.offsets.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        Self {
            offsets: self.offsets.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.dot(b))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|b| linalg::scale(b, a))
    }

    pub fn adjoint(&self) -> Self {
        self.map(linalg::adjoint)
    }

    pub fn inverse(&self) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(linalg::inverse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    /// Operator norm: the largest block norm.
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(linalg::operator_norm)
            .fold(0.0, f64::max)
    }

    /// `dense * self`.
    pub fn left_mul(&self, dense: &CMat) -> CMat {
        assert_eq!(dense.ncols(), self.dim());
        let mut out = CMat::zeros((dense.nrows(), self.dim()));
        for (k, b) in self.blocks.iter().enumerate() {
            let r = self.range(k);
            let cols = dense.slice(s![.., r.clone()]);
            out.slice_mut(s![.., r]).assign(&cols.dot(b));
        }
        out
    }

    /// `self * dense`.
    pub fn right_mul(&self, dense: &CMat) -> CMat {
        assert_eq!(dense.nrows(), self.dim());
        let mut out = CMat::zeros((self.dim(), dense.ncols()));
        for (k, b) in self.blocks.iter().enumerate() {
            let r = self.range(k);
            let rows = dense.slice(s![r.clone(), ..]);
            out.slice_mut(s![r, ..]).assign(&b.dot(&rows));
        }
        out
    }

    pub fn add_to_dense(&self, dense: &CMat) -> CMat {
        let mut out = dense.clone();
        for (k, b) in self.blocks.iter().enumerate() {
            let r = self.range(k);
            let mut view = out.slice_mut(s![r.clone(), r]);
            view += b;
        }
        out
    }

    pub fn complement(&self) -> Self {
        self.map(|b| linalg::eye(b.nrows()) - b)
    }

    pub fn zero_like(&self) -> Self {
        self.map(|b| CMat::zeros(b.dim()))
    }
}
