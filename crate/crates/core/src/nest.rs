//! Truncated ω-ordered nests and their nest algebras.
//!
//! A nest is given by its atom dimensions `n_1, .., n_K`. Atom `k` occupies
//! the coordinates `d_{k-1}..d_k` (zero-based, half-open) where `d_k` are the
//! prefix sums. The nest algebra is the set of block upper-triangular
//! matrices for that partition.

use ndarray::s;
use serde::{Deserialize, Serialize};

use crate::blockdiag::BlockDiagonal;
use crate::error::{Error, Result};
use crate::json::MatrixJson;
use crate::linalg::{self, C64, CMat};
use crate::sample::{random_matrix, seeded_rng};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NestSpecJson", into = "NestSpecJson")]
pub struct NestSpec {
    atom_dims: Vec<usize>,
    /// `offsets[k] = d_k`, with `offsets[0] = 0`.
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NestSpecJson {
    atom_dims: Vec<usize>,
}

impl TryFrom<NestSpecJson> for NestSpec {
    type Error = Error;

    fn try_from(raw: NestSpecJson) -> Result<Self> {
        NestSpec::new(raw.atom_dims)
    }
}

impl From<NestSpec> for NestSpecJson {
    fn from(spec: NestSpec) -> Self {
        NestSpecJson {
            atom_dims: spec.atom_dims,
        }
    }
}

impl NestSpec {
    pub fn new(atom_dims: Vec<usize>) -> Result<Self> {
        if atom_dims.is_empty() {
            return Err(Error::InvalidNest("a nest needs at least one atom".into()));
        }
        if let Some(k) = atom_dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidNest(format!("atom {} has dimension 0", k + 1)));
        }
        let mut offsets = Vec::with_capacity(atom_dims.len() + 1);
        offsets.push(0);
        for &n in &atom_dims {
            offsets.push(offsets.last().unwrap() + n);
        }
        Ok(Self { atom_dims, offsets })
    }

    pub fn atom_dims(&self) -> &[usize] {
        &self.atom_dims
    }

    /// Prefix sums `d_1, .., d_K`.
    pub fn cumulative(&self) -> &[usize] {
        &self.offsets[1..]
    }

    pub fn num_atoms(&self) -> usize {
        self.atom_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Zero-based coordinate range of atom `k` (one-based).
    pub fn atom_range(&self, k: usize) -> Result<std::ops::Range<usize>> {
        self.check_atom(k)?;
        Ok(self.offsets[k - 1]..self.offsets[k])
    }

    /// One-based atom containing zero-based coordinate `i`.
    pub fn atom_of(&self, i: usize) -> usize {
        self.offsets[1..].partition_point(|&d| d <= i) + 1
    }

    fn check_atom(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.num_atoms() {
            return Err(Error::IndexOutOfRange {
                index: k,
                count: self.num_atoms(),
            });
        }
        Ok(())
    }
}

/// `n_k >= 4 * sum_{i<k} n_i` for every `k >= 2`.
pub fn validate_growth(spec: &NestSpec) -> bool {
    first_growth_violation(spec).is_none()
}

/// One-based index of the first atom breaking the growth condition.
pub fn first_growth_violation(spec: &NestSpec) -> Option<usize> {
    (2..=spec.num_atoms()).find(|&k| spec.atom_dims[k - 1] < 4 * spec.offsets[k - 1])
}

/// A square matrix that is block upper-triangular for its nest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NestOperatorJson", into = "NestOperatorJson")]
pub struct NestOperator {
    spec: NestSpec,
    entries: CMat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NestOperatorJson {
    spec: NestSpec,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<NestOperatorJson> for NestOperator {
    type Error = Error;

    fn try_from(raw: NestOperatorJson) -> Result<Self> {
        let entries = MatrixJson {
            re: raw.re,
            im: raw.im,
        }
        .to_matrix()?;
        NestOperator::new(raw.spec, entries)
    }
}

impl From<NestOperator> for NestOperatorJson {
    fn from(op: NestOperator) -> Self {
        let MatrixJson { re, im } = (&op.entries).into();
        NestOperatorJson {
            spec: op.spec,
            re,
            im,
        }
    }
}

impl NestOperator {
    /// Wraps `entries`, which must have exact zeros below the block diagonal.
    pub fn new(spec: NestSpec, entries: CMat) -> Result<Self> {
        if !is_in_nest_algebra(&entries, &spec, 0.0)? {
            return Err(Error::Precondition(
                "matrix has nonzero entries below the block diagonal".into(),
            ));
        }
        Ok(Self { spec, entries })
    }

    /// Zeroes everything below the block diagonal of `entries`.
    pub fn truncate(spec: NestSpec, mut entries: CMat) -> Result<Self> {
        check_square(&entries, &spec)?;
        for k in 2..=spec.num_atoms() {
            let start = spec.offsets[k - 1];
            let end = spec.offsets[k];
            entries.slice_mut(s![start..end, ..start]).fill(C64::new(0.0, 0.0));
        }
        Ok(Self { spec, entries })
    }

    pub fn identity(spec: NestSpec) -> Self {
        let n = spec.total_dim();
        Self {
            spec,
            entries: linalg::eye(n),
        }
    }

    pub fn spec(&self) -> &NestSpec {
        &self.spec
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn norm(&self) -> f64 {
        linalg::operator_norm(&self.entries)
    }

    /// Diagonal blocks as a [`BlockDiagonal`].
    pub fn diagonal_blocks(&self) -> BlockDiagonal {
        BlockDiagonal::extract(&self.entries, self.spec.atom_dims()).expect("shape checked")
    }

    /// Product in the nest algebra.
    pub fn mul(&self, other: &NestOperator) -> Result<NestOperator> {
        if self.spec != other.spec {
            return Err(Error::Shape("operators belong to different nests".into()));
        }
        NestOperator::truncate(self.spec.clone(), self.entries.dot(&other.entries))
    }
}

fn check_square(m: &CMat, spec: &NestSpec) -> Result<()> {
    let n = spec.total_dim();
    if m.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "expected {n}x{n} for dims {:?}, got {}x{}",
            spec.atom_dims(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Coordinate projection `E_k` onto atom `k` (one-based).
pub fn atom_projection(spec: &NestSpec, k: usize) -> Result<NestOperator> {
    let range = spec.atom_range(k)?;
    let n = spec.total_dim();
    let mut e = CMat::zeros((n, n));
    for i in range {
        e[[i, i]] = C64::new(1.0, 0.0);
    }
    Ok(NestOperator {
        spec: spec.clone(),
        entries: e,
    })
}

/// `Δ(T) = Σ_k E_k T E_k`.
pub fn diagonal_expectation(t: &NestOperator) -> NestOperator {
    NestOperator {
        spec: t.spec.clone(),
        entries: t.diagonal_blocks().to_dense(),
    }
}

/// Whether every strictly-lower block of `t` has entries of magnitude at most `tol`.
pub fn is_in_nest_algebra(t: &CMat, spec: &NestSpec, tol: f64) -> Result<bool> {
    check_square(t, spec)?;
    for k in 2..=spec.num_atoms() {
        let start = spec.offsets[k - 1];
        let end = spec.offsets[k];
        if t.slice(s![start..end, ..start]).iter().any(|z| z.norm() > tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Seeded complex Gaussian member of the nest algebra, rescaled to have
/// operator norm `norm_bound`.
pub fn random_member(spec: &NestSpec, seed: u64, norm_bound: f64) -> Result<NestOperator> {
    if !(norm_bound > 0.0 && norm_bound.is_finite()) {
        return Err(Error::Precondition(format!(
            "norm bound must be positive, got {norm_bound}"
        )));
    }
    let n = spec.total_dim();
    let mut rng = seeded_rng(seed);
    let raw = random_matrix(&mut rng, n, n);
    let op = NestOperator::truncate(spec.clone(), raw)?;
    let norm = op.norm();
    let entries = linalg::scale(&op.entries, norm_bound / norm);
    Ok(NestOperator {
        spec: op.spec,
        entries,
    })
}

/// `P(E) T |_E` for the atom `E = E_k`: the k-th diagonal block.
pub fn semiinvariant_compression(t: &NestOperator, k: usize) -> Result<CMat> {
    let r = t.spec.atom_range(k)?;
    Ok(t.entries.slice(s![r.clone(), r]).to_owned())
}
