//! Dense complex kernels: polar factors, norms, rank-revealing projections,
//! partial isometries between subspaces and resolvents.
//!
//! Factorizations go through LAPACK (`zgesdd`, `zheevd`, `zgetrf`); this
//! module only assembles the derived objects.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, Inverse, JobSvd, SVDDC, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;

/// Singular values below this are treated as zero regardless of scale.
pub const RANK_FLOOR: f64 = 1e-12;

/// Resolvent norms beyond this mean `z` sits on the spectrum.
pub const SINGULAR_NORM: f64 = 1e12;

pub fn eye(n: usize) -> CMat {
    CMat::eye(n)
}

pub fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub fn scale(m: &CMat, a: f64) -> CMat {
    m.mapv(|z| z * a)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Copy of `m` with ordinary row-major strides.
///
/// Owned copies of 1x1 slices carry zero strides, which the LAPACK wrappers
/// reject.
fn lapack_ready(m: &CMat) -> std::borrow::Cow<'_, CMat> {
    if m.strides().contains(&0) {
        let data = m.iter().copied().collect();
        std::borrow::Cow::Owned(CMat::from_shape_vec(m.dim(), data).expect("same length"))
    } else {
        std::borrow::Cow::Borrowed(m)
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Result<Array1<f64>> {
    if m.is_empty() {
        return Ok(Array1::zeros(0));
    }
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(Array1::zeros(m.nrows().min(m.ncols())));
    }
    let (_, sigma, _) = lapack_ready(m).svddc(JobSvd::None)?;
    Ok(sigma)
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    // zgesdd only fails on NaN input; report that as an infinite norm.
    match singular_values(m) {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => f64::INFINITY,
    }
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(m: &CMat) -> f64 {
    match singular_values(m) {
        Ok(s) => s.last().copied().unwrap_or(0.0),
        Err(_) => f64::NAN,
    }
}

/// Number of singular values above `tol * sigma_max` and above [`RANK_FLOOR`].
pub fn numerical_rank(m: &CMat, tol: f64) -> usize {
    let sigma = match singular_values(m) {
        Ok(s) => s,
        Err(_) => return 0,
    };
    let Some(&top) = sigma.first() else { return 0 };
    let threshold = (tol * top).max(RANK_FLOOR);
    sigma.iter().filter(|&&s| s > threshold).count()
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    Ok(lapack_ready(m).inv()?)
}

/// Full SVD `m = W diag(sigma) V*`, returning `(W, sigma, V*)`.
pub fn svd(m: &CMat) -> Result<(CMat, Array1<f64>, CMat)> {
    let (w, sigma, vt) = lapack_ready(m).svddc(JobSvd::All)?;
    Ok((w.expect("requested U"), sigma, vt.expect("requested V*")))
}

#[derive(Debug, Clone)]
pub struct PolarFactors {
    pub unitary: CMat,
    pub positive: CMat,
}

/// `D = U P` with `U` unitary and `P = (D* D)^{1/2}`.
///
/// The unitary factor comes from the full SVD `D = W S V*` as `U = W V*`, so
/// the unmatched singular subspaces of a singular `D` are paired in SVD
/// order and `U` is unitary in every case. The zero matrix gets `U = I`.
pub fn polar(d: &CMat) -> Result<PolarFactors> {
    if d.nrows() != d.ncols() {
        return Err(Error::Shape(format!(
            "polar needs a square matrix, got {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    let n = d.nrows();
    if n == 0 || d.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(PolarFactors {
            unitary: eye(n),
            positive: CMat::zeros((n, n)),
        });
    }
    let (w, sigma, vt) = svd(d)?;
    let unitary = w.dot(&vt);
    let v = adjoint(&vt);
    let mut v_sigma = v.clone();
    for (mut col, &s) in v_sigma.axis_iter_mut(Axis(1)).zip(sigma.iter()) {
        col.mapv_inplace(|z| z * s);
    }
    let mut positive = v_sigma.dot(&vt);
    hermitize(&mut positive);
    Ok(PolarFactors { unitary, positive })
}

/// Replace `m` by `(m + m*) / 2`.
pub fn hermitize(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        m[[i, i]].im = 0.0;
        for j in (i + 1)..n {
            let avg = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
            m[[i, j]] = avg;
            m[[j, i]] = avg.conj();
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMat) -> Result<(Array1<f64>, CMat)> {
    // zheevd on a row-major complex buffer returns the eigenvectors of the
    // conjugate, so hand LAPACK a column-major copy.
    let mut f = Array2::zeros(h.raw_dim().f());
    f.assign(h);
    let (vals, vecs) = f.eigh(UPLO::Upper)?;
    Ok((vals, vecs.as_standard_layout().into_owned()))
}

/// Orthonormal basis (as columns) of the range of an orthogonal projection.
///
/// Eigenvectors are returned in descending eigenvalue order, which for a
/// projection is the `1` eigenspace first.
pub fn projection_range_basis(proj: &CMat) -> Result<CMat> {
    let n = proj.nrows();
    if n == 0 {
        return Ok(CMat::zeros((0, 0)));
    }
    if proj.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(CMat::zeros((n, 0)));
    }
    let mut h = proj.clone();
    hermitize(&mut h);
    let (vals, vecs) = hermitian_eigen(&h)?;
    let keep: Vec<usize> = (0..n).rev().filter(|&i| vals[i] > 0.5).collect();
    let mut basis = CMat::zeros((n, keep.len()));
    for (c, &i) in keep.iter().enumerate() {
        basis.column_mut(c).assign(&vecs.column(i));
    }
    Ok(basis)
}

/// `Q Q*` for a matrix `Q` with orthonormal columns.
pub fn projector_from_basis(basis: &CMat) -> CMat {
    basis.dot(&adjoint(basis))
}

/// Smallest orthogonal projection `Q`, supported on the coordinate block
/// `block`, with `T E = T Q` for every `T` in `ts` (up to `tol`), where `E`
/// is the coordinate projection onto `block`.
///
/// The range of `Q` is spanned by the right singular vectors of the stack
/// of normalized `T E` blocks. Singular values within a factor two of the
/// cut are kept, so near-threshold directions are captured rather than
/// dropped.
pub fn column_space_projection(ts: &[&CMat], block: Range<usize>, tol: f64) -> Result<CMat> {
    let basis = column_space_basis(ts, block.clone(), tol)?;
    let n = ts.first().map_or(block.end, |t| t.ncols());
    let mut q = CMat::zeros((n, n));
    q.slice_mut(s![block.clone(), block])
        .assign(&projector_from_basis(&basis));
    Ok(q)
}

/// Block-local version of [`column_space_projection`]: returns the
/// orthonormal basis (`block.len()` rows) of the captured subspace.
pub fn column_space_basis(ts: &[&CMat], block: Range<usize>, tol: f64) -> Result<CMat> {
    let width = block.len();
    let mut rows: Vec<ArrayView2<C64>> = Vec::new();
    let mut scales = Vec::new();
    for t in ts {
        if block.end > t.ncols() {
            return Err(Error::Shape(format!(
                "block {:?} exceeds {} columns",
                block,
                t.ncols()
            )));
        }
        let cols = t.slice(s![.., block.clone()]);
        let norm = cols.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            rows.push(cols);
            scales.push(norm);
        }
    }
    if rows.is_empty() || width == 0 {
        return Ok(CMat::zeros((width, 0)));
    }

    // Stack the nonzero rows only; strictly triangular inputs are mostly zero.
    let mut stacked: Vec<C64> = Vec::new();
    let mut count = 0;
    for (cols, norm) in rows.iter().zip(&scales) {
        for row in cols.axis_iter(Axis(0)) {
            if row.iter().any(|z| *z != C64::new(0.0, 0.0)) {
                stacked.extend(row.iter().map(|z| z / norm));
                count += 1;
            }
        }
    }
    let stack = CMat::from_shape_vec((count, width), stacked).expect("row-major stack");
    let (_, sigma, vt) = stack.svddc(JobSvd::Some)?;
    let vt = vt.expect("requested V*");
    let top = sigma.first().copied().unwrap_or(0.0);
    let cut = 0.5 * (tol * top).max(RANK_FLOOR);
    let rank = sigma.iter().filter(|&&s| s > cut).count();
    Ok(adjoint(&vt.slice(s![..rank, ..]).to_owned()))
}

/// Partial isometry `W` with `W W* = target` and `W* W` a subprojection of
/// `source` of the same rank, so `W = target W source`.
///
/// Source directions are taken in the eigenvector order of `source`.
pub fn partial_isometry_between(source: &CMat, target: &CMat) -> Result<CMat> {
    if source.dim() != target.dim() || source.nrows() != source.ncols() {
        return Err(Error::Shape(format!(
            "projections must be square and equal-sized, got {:?} and {:?}",
            source.dim(),
            target.dim()
        )));
    }
    let overlap = operator_norm(&source.dot(target));
    if overlap > 1e-8 {
        return Err(Error::Precondition(format!(
            "source and target projections overlap (||source * target|| = {overlap:e})"
        )));
    }
    let src = projection_range_basis(source)?;
    let tgt = projection_range_basis(target)?;
    isometry_between_bases(&src, &tgt)
}

/// `sum_i t_i s_i*` over the first `rank(target)` source columns.
pub fn isometry_between_bases(source: &CMat, target: &CMat) -> Result<CMat> {
    let r = target.ncols();
    if r > source.ncols() {
        return Err(Error::Precondition(format!(
            "target rank {r} exceeds source rank {}",
            source.ncols()
        )));
    }
    let src = source.slice(s![.., ..r]).to_owned();
    Ok(target.dot(&adjoint(&src)))
}

/// `(z I - B)^{-1}`.
pub fn resolvent(b: &CMat, z: C64) -> Result<CMat> {
    if b.nrows() != b.ncols() {
        return Err(Error::Shape(format!(
            "resolvent needs a square matrix, got {:?}",
            b.dim()
        )));
    }
    let n = b.nrows();
    let mut shifted = b.mapv(|x| -x);
    for i in 0..n {
        shifted[[i, i]] += z;
    }
    let singular = |norm| Error::Singular {
        re: z.re,
        im: z.im,
        norm,
    };
    let inv = shifted.inv().map_err(|_| singular(f64::INFINITY))?;
    let norm = operator_norm(&inv);
    if !norm.is_finite() || norm > SINGULAR_NORM {
        return Err(singular(norm));
    }
    Ok(inv)
}
