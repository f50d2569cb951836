//! Right-invertible perturbations of pairs `[A B]` in a nest algebra.
//!
//! Given `A, B` and `eps`, the pipeline
//!
//! 1. lifts the diagonal parts to invertible `D_a, D_b` (`U(P + eps/2)` per
//!    atom),
//! 2. normalizes the strictly upper parts to `A_0 = A'_0 D_a^{-1}`,
//!    `B_0 = B'_0 D_b^{-1}`,
//! 3. captures the row spaces of `A_0 E_k, B_0 E_k` in projections `P_k`
//!    of rank at most `n_k / 2`,
//! 4. shuffles the complement of each `P_k` onto `P_k` with a partial
//!    isometry `U`,
//! 5. sets `A'' = A' + delta U D_a` and writes down the right inverse of
//!    `[A'' B']` explicitly.
//!
//! The megablock variant runs the same steps on groups of consecutive atoms.

mod certificate;
mod megablock;

pub use certificate::{check_certificate, validate_certificate, CertificateCheck, PerturbationCertificate};
pub use megablock::{
    block_inverse_bound, megablock_plan, right_invertible_pair_megablock, MegablockPlan,
};

use ndarray::s;
use ndarray_linalg::QR;

use crate::blockdiag::BlockDiagonal;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::nest::{self, NestOperator, NestSpec};

/// Default absolute tolerance on `||[A'' B'][C1; C2] - I||`.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative singular-value cut used when capturing row spaces.
pub const CAPTURE_TOL: f64 = 1e-12;

/// `D' = U (P + s I)` blockwise, from the polar factors of each atom of the
/// block-diagonal `D`.
pub fn invertible_perturbation(d: &NestOperator, s: f64) -> Result<NestOperator> {
    let delta = nest::diagonal_expectation(d);
    if delta.entries() != d.entries() {
        return Err(Error::Precondition(
            "invertible_perturbation needs a block-diagonal operator".into(),
        ));
    }
    let lifted = lift_blocks(&d.diagonal_blocks(), s)?;
    NestOperator::new(d.spec().clone(), lifted.to_dense())
}

pub(crate) fn lift_blocks(d: &BlockDiagonal, s: f64) -> Result<BlockDiagonal> {
    if !(s > 0.0) {
        return Err(Error::Precondition(format!("shift must be positive, got {s}")));
    }
    let blocks = d
        .blocks()
        .iter()
        .map(|block| {
            if block.is_empty() {
                return Ok(block.clone());
            }
            // U (P + s) = W (Σ + s) V* for D = W Σ V*.
            let (mut w, sigma, vt) = linalg::svd(block)?;
            for (mut col, &x) in w.columns_mut().into_iter().zip(sigma.iter()) {
                col.mapv_inplace(|z| z * (x + s));
            }
            Ok(w.dot(&vt))
        })
        .collect::<Result<Vec<_>>>()?;
    BlockDiagonal::new(blocks)
}

/// Projections `P_k <= E_k` with `A_0 E_k = A_0 P_k` and `B_0 E_k = B_0 P_k`.
///
/// Returns `P` and the per-atom ranks. Each rank must fit the budget
/// `floor(n_k / 2)`, which the growth condition guarantees.
pub fn rank_capture(
    a0: &NestOperator,
    b0: &NestOperator,
    tol: f64,
) -> Result<(NestOperator, Vec<usize>)> {
    let spec = a0.spec();
    if b0.spec() != spec {
        return Err(Error::Shape("A0 and B0 belong to different nests".into()));
    }
    for (name, t) in [("A0", a0), ("B0", b0)] {
        if nest::diagonal_expectation(t).entries().iter().any(|z| z.norm() != 0.0) {
            return Err(Error::Precondition(format!(
                "{name} must be strictly block upper-triangular"
            )));
        }
    }
    let capture = capture_blocks(a0.entries(), b0.entries(), spec.atom_dims(), tol)?;
    let p = NestOperator::new(spec.clone(), capture.projection.to_dense())?;
    Ok((p, capture.ranks))
}

pub(crate) struct Capture {
    pub projection: BlockDiagonal,
    /// Orthonormal basis of the range of each `P_k`.
    pub bases: Vec<CMat>,
    pub ranks: Vec<usize>,
}

pub(crate) fn capture_blocks(a0: &CMat, b0: &CMat, sizes: &[usize], tol: f64) -> Result<Capture> {
    let mut offset = 0;
    let mut bases = Vec::with_capacity(sizes.len());
    for (k, &n) in sizes.iter().enumerate() {
        let range = offset..offset + n;
        offset += n;
        let basis = linalg::column_space_basis(&[a0, b0], range, tol)?;
        let rank = basis.ncols();
        let budget = n / 2;
        if rank > budget {
            return Err(Error::Budget {
                block: k + 1,
                rank,
                budget,
            });
        }
        bases.push(basis);
    }
    Ok(Capture {
        projection: BlockDiagonal::new(bases.iter().map(linalg::projector_from_basis).collect())?,
        ranks: bases.iter().map(|b| b.ncols()).collect(),
        bases,
    })
}

/// Block-diagonal partial isometry `U = Σ U_k` with `U U* = P` and
/// `U = P U (I - P)`.
pub fn shuffle_isometry(p: &NestOperator) -> Result<NestOperator> {
    let blocks = p.diagonal_blocks();
    if blocks.to_dense() != *p.entries() {
        return Err(Error::Precondition("P must be block diagonal".into()));
    }
    let u = shuffle_blocks(&blocks)?;
    NestOperator::new(p.spec().clone(), u.to_dense())
}

fn shuffle_blocks(p: &BlockDiagonal) -> Result<BlockDiagonal> {
    let bases = p
        .blocks()
        .iter()
        .map(linalg::projection_range_basis)
        .collect::<Result<Vec<_>>>()?;
    shuffle_from_bases(&bases)
}

fn shuffle_from_bases(bases: &[CMat]) -> Result<BlockDiagonal> {
    let sources = shuffle_sources(bases)?;
    BlockDiagonal::new(
        bases
            .iter()
            .zip(&sources)
            .map(|(v, s)| v.dot(&linalg::adjoint(s)))
            .collect(),
    )
}

/// Source bases `S_k` for `U_k = V_k S_k*`, where `V_k` spans `P_k`.
fn shuffle_sources(bases: &[CMat]) -> Result<Vec<CMat>> {
    bases
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let (n, r) = v.dim();
            if r > n - r {
                return Err(Error::Budget {
                    block: k + 1,
                    rank: r,
                    budget: n - r,
                });
            }
            complement_basis(v, r)
        })
        .collect()
}

/// `r` orthonormal vectors orthogonal to the columns of `v`: columns
/// `r..2r` of the Householder `Q` of `[V | X]`, with `X` the first
/// `min(n, 2r + 8)` coordinate vectors. The first `r` columns of `Q` span
/// `ran V`, so the rest are orthogonal to it whatever the conditioning of
/// `X`.
fn complement_basis(v: &CMat, r: usize) -> Result<CMat> {
    let n = v.nrows();
    if r == 0 {
        return Ok(CMat::zeros((n, 0)));
    }
    let m = n.min(2 * r + 8);
    let mut stacked = CMat::zeros((n, r + m));
    stacked.slice_mut(s![.., ..r]).assign(v);
    for j in 0..m {
        stacked[[j, r + j]] = C64::new(1.0, 0.0);
    }
    let (q, _) = stacked.qr()?;
    Ok(q.slice(s![.., r..2 * r]).to_owned())
}

/// Right-invertibility certificate for `[A'' B']` with `||A - A''|| < eps`
/// and `||B - B'|| < eps`.
pub fn right_invertible_pair(
    a: &NestOperator,
    b: &NestOperator,
    eps: f64,
    tol: f64,
) -> Result<PerturbationCertificate> {
    if let Some(atom) = nest::first_growth_violation(a.spec()) {
        return Err(Error::Growth { atom });
    }
    let blocks = a.spec().atom_dims().to_vec();
    certify(a, b, eps, tol, &blocks)
}

/// Shared pipeline. `blocks` is a coarsening of the atom partition; the
/// diagonal lift is always done atom by atom.
pub(crate) fn certify(
    a: &NestOperator,
    b: &NestOperator,
    eps: f64,
    tol: f64,
    blocks: &[usize],
) -> Result<PerturbationCertificate> {
    let spec = a.spec();
    if b.spec() != spec {
        return Err(Error::Shape("A and B belong to different nests".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tol must be positive, got {tol}")));
    }
    let coarse = NestSpec::new(blocks.to_vec())?;

    let sa = split(a, eps, blocks)?;
    let sb = split(b, eps, blocks)?;

    let capture = capture_blocks(&sa.strict_normalized, &sb.strict_normalized, blocks, CAPTURE_TOL)?;
    let sources = shuffle_sources(&capture.bases)?;

    let (da_norm, da_inv_norm) = norm_and_inverse_norm(&sa.diag)?;
    let delta = 0.25 * eps / da_norm;

    // Everything below is block diagonal and P_k = V V*, U_k = V S*, so
    // products with P, U are done through the thin factors.
    let mut shift = Vec::with_capacity(blocks.len());
    let mut g1 = Vec::with_capacity(blocks.len());
    let mut g2 = Vec::with_capacity(blocks.len());
    for (k, (v, s)) in capture.bases.iter().zip(&sources).enumerate() {
        let vh = linalg::adjoint(v);
        // delta U D_a
        shift.push(linalg::scale(&v.dot(&linalg::adjoint(s).dot(sa.diag.block(k))), delta));
        // P^perp U* = W V* with W = S - V (V* S)
        let w = s - &v.dot(&vh.dot(s));
        // G1 = D_a^{-1} P^perp U*
        g1.push(sa.diag_inv.block(k).dot(&w).dot(&vh));
        // G2 = D_b^{-1} P^perp (I - U*) = D_b^{-1} (I - (V + W) V*)
        let dbi = sb.diag_inv.block(k);
        g2.push(dbi - &dbi.dot(&(v + &w)).dot(&vh));
    }
    let shift = BlockDiagonal::new(shift)?;
    let g1 = BlockDiagonal::new(g1)?;
    let g2 = BlockDiagonal::new(g2)?;

    // (delta P + P^perp)^{-1} = delta^{-1} P + P^perp = I + (delta^{-1} - 1) P
    let c1 = times_middle_inv(&g1, &capture.bases, delta);
    let c2 = times_middle_inv(&g2, &capture.bases, delta);

    let a_pp = shift.add_to_dense(&sa.lifted);
    let b_p = sb.lifted;

    // A'' G1 + B' G2 = delta P + P^perp
    let lhs = g1.left_mul(&a_pp) + g2.left_mul(&b_p);
    let middle = capture.projection.scale(delta).add(&capture.projection.complement());
    let identity_residual = linalg::frobenius(&(&lhs - &middle.to_dense()));

    let n = spec.total_dim();
    let mut product = lhs;
    right_times_middle_inv(&mut product, &capture.bases, blocks, delta);
    let residual = linalg::operator_norm(&(product - linalg::eye(n)));

    // A' D_a^{-1} P^perp - P^perp = A_0 P^perp
    let mut a0_perp = sa.strict_normalized.clone();
    let mut start = 0;
    for (v, &nk) in capture.bases.iter().zip(blocks) {
        let mut cols = a0_perp.slice_mut(s![.., start..start + nk]);
        let captured = cols.dot(v).dot(&linalg::adjoint(v));
        cols -= &captured;
        start += nk;
    }
    let capture_residual = linalg::frobenius(&a0_perp);

    let pert_a = BlockDiagonal::extract(&(a.entries() - &a_pp), blocks)?.norm();
    // B - B' only touches the atoms.
    let pert_b = BlockDiagonal::extract(&(b.entries() - &b_p), spec.atom_dims())?.norm();

    if !(residual <= tol) {
        return Err(Error::Certification { residual, tol });
    }

    Ok(PerturbationCertificate {
        dims: spec.atom_dims().to_vec(),
        blocks: blocks.to_vec(),
        eps,
        delta,
        tol,
        residual,
        pert_a,
        pert_b,
        p_ranks: capture.ranks,
        a: a.clone(),
        b: b.clone(),
        a_pp: NestOperator::new(coarse.clone(), a_pp)?,
        b_p: NestOperator::new(coarse, b_p)?,
        c1: c1.to_dense(),
        c2: c2.to_dense(),
        identity_residual,
        capture_residual,
        da_norm,
        da_inv_norm,
    })
}

/// `G (I + (delta^{-1} - 1) V V*)` blockwise.
fn times_middle_inv(g: &BlockDiagonal, bases: &[CMat], delta: f64) -> BlockDiagonal {
    let blocks = g
        .blocks()
        .iter()
        .zip(bases)
        .map(|(gk, v)| gk + &linalg::scale(&gk.dot(v).dot(&linalg::adjoint(v)), 1.0 / delta - 1.0))
        .collect();
    BlockDiagonal::new(blocks).expect("square blocks")
}

/// Dense `X <- X (I + (delta^{-1} - 1) P)` for block-diagonal `P = Σ V_k V_k*`.
fn right_times_middle_inv(x: &mut CMat, bases: &[CMat], sizes: &[usize], delta: f64) {
    let mut start = 0;
    for (v, &n) in bases.iter().zip(sizes) {
        let mut cols = x.slice_mut(s![.., start..start + n]);
        let update = linalg::scale(&cols.dot(v).dot(&linalg::adjoint(v)), 1.0 / delta - 1.0);
        cols += &update;
        start += n;
    }
}

/// `(||D||, ||D^{-1}||)` from one set of singular values per block.
fn norm_and_inverse_norm(d: &BlockDiagonal) -> Result<(f64, f64)> {
    let mut norm: f64 = 0.0;
    let mut inv: f64 = 0.0;
    for block in d.blocks() {
        let sigma = linalg::singular_values(block)?;
        if let (Some(&top), Some(&bottom)) = (sigma.first(), sigma.last()) {
            norm = norm.max(top);
            inv = inv.max(1.0 / bottom);
        }
    }
    Ok((norm, inv))
}

pub(crate) struct Split {
    /// `A' = A - Δ(A) + Δ(A)'`.
    pub lifted: CMat,
    /// `D_a`: diagonal blocks of `A'` for the block partition.
    pub diag: BlockDiagonal,
    pub diag_inv: BlockDiagonal,
    /// `A_0 = (A' - D_a) D_a^{-1}`.
    pub strict_normalized: CMat,
}

pub(crate) fn split(t: &NestOperator, eps: f64, blocks: &[usize]) -> Result<Split> {
    let atoms = t.diagonal_blocks();
    let lift = lift_blocks(&atoms, 0.5 * eps)?;
    let lifted = lift.sub(&atoms).add_to_dense(t.entries());
    let diag = BlockDiagonal::extract(&lifted, blocks)?;
    let diag_inv = diag.inverse()?;
    let strict = &lifted - &diag.to_dense();
    let strict_normalized = diag_inv.left_mul(&strict);
    Ok(Split {
        lifted,
        diag,
        diag_inv,
        strict_normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{adjoint, operator_norm};
    use crate::nest::random_member;
    use crate::sample::{random_matrix, seeded_rng};

    fn spec(dims: &[usize]) -> NestSpec {
        NestSpec::new(dims.to_vec()).unwrap()
    }

    fn strict_part(t: &NestOperator) -> NestOperator {
        let d = nest::diagonal_expectation(t);
        NestOperator::new(t.spec().clone(), t.entries() - d.entries()).unwrap()
    }

    #[test]
    fn perturbation_of_identity() {
        let id = NestOperator::identity(spec(&[2, 3]));
        let d = invertible_perturbation(&id, 0.1).unwrap();
        assert!(operator_norm(&(d.entries() - linalg::eye(5) * 1.1)) < 1e-14);
        let inv = linalg::inverse(d.entries()).unwrap();
        assert!((operator_norm(&inv) - 1.0 / 1.1).abs() < 1e-14);
    }

    #[test]
    fn perturbation_of_zero() {
        let zero = NestOperator::new(spec(&[2]), CMat::zeros((2, 2))).unwrap();
        let d = invertible_perturbation(&zero, 0.5).unwrap();
        let inv = linalg::inverse(d.entries()).unwrap();
        assert!((operator_norm(&inv) - 2.0).abs() < 1e-14);
        // D' = 0.5 U with U unitary
        let u = d.entries() * C64::new(2.0, 0.0);
        assert!(operator_norm(&(adjoint(&u).dot(&u) - linalg::eye(2))) < 1e-14);
    }

    #[test]
    fn perturbation_norm_bounds_on_random_blocks() {
        let s = spec(&[1, 3, 5]);
        for seed in 0..10 {
            let t = random_member(&s, seed, 1.0).unwrap();
            let d = nest::diagonal_expectation(&t);
            let lifted = invertible_perturbation(&d, 0.25).unwrap();
            let gap = operator_norm(&(d.entries() - lifted.entries()));
            let inv = linalg::inverse(lifted.entries()).unwrap();
            assert!(gap <= 0.25 + 1e-12);
            assert!(linalg::singular_values(&inv).unwrap()[0] <= 4.0 + 1e-10);
        }
    }

    #[test]
    fn perturbation_requires_block_diagonal() {
        let t = random_member(&spec(&[1, 2]), 0, 1.0).unwrap();
        assert!(matches!(
            invertible_perturbation(&t, 0.1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn capture_of_zero_is_zero() {
        let z = NestOperator::new(spec(&[1, 4]), CMat::zeros((5, 5))).unwrap();
        let (p, ranks) = rank_capture(&z, &z, CAPTURE_TOL).unwrap();
        assert_eq!(p.entries(), &CMat::zeros((5, 5)));
        assert_eq!(ranks, vec![0, 0]);
    }

    #[test]
    fn capture_of_single_entry() {
        let s = spec(&[1, 4]);
        let mut a = CMat::zeros((5, 5));
        a[[0, 3]] = C64::new(0.7, -0.2);
        let a0 = NestOperator::new(s.clone(), a).unwrap();
        let b0 = NestOperator::new(s, CMat::zeros((5, 5))).unwrap();
        let (_, ranks) = rank_capture(&a0, &b0, CAPTURE_TOL).unwrap();
        assert_eq!(ranks, vec![0, 1]);
    }

    #[test]
    fn capture_residuals_on_random_pairs() {
        let s = spec(&[1, 4, 20, 100]);
        let tol = 1e-12;
        for seed in 0..3 {
            let a0 = strict_part(&random_member(&s, 2 * seed, 1.0).unwrap());
            let b0 = strict_part(&random_member(&s, 2 * seed + 1, 1.0).unwrap());
            let (p, ranks) = rank_capture(&a0, &b0, tol).unwrap();
            for k in 1..=4 {
                let e = nest::atom_projection(&s, k).unwrap();
                let pk = e.entries().dot(p.entries()).dot(e.entries());
                let gap = e.entries() - &pk;
                for t in [&a0, &b0] {
                    let resid = operator_norm(&t.entries().dot(&gap));
                    assert!(resid <= 10.0 * tol * t.norm());
                }
                assert!(ranks[k - 1] <= s.atom_dims()[k - 1] / 2);
                assert_eq!(linalg::numerical_rank(&pk, 1e-8), ranks[k - 1]);
            }
            // rank(A0 E_k) <= d_{k-1}, and the stack of both is at most twice that.
            assert_eq!(ranks, vec![0, 2, 10, 50]);
        }
    }

    #[test]
    fn capture_over_budget_is_rejected() {
        let s = spec(&[1, 3]);
        let a0 = strict_part(&random_member(&s, 1, 1.0).unwrap());
        let b0 = strict_part(&random_member(&s, 2, 1.0).unwrap());
        assert_eq!(
            rank_capture(&a0, &b0, CAPTURE_TOL).unwrap_err(),
            Error::Budget {
                block: 2,
                rank: 2,
                budget: 1
            }
        );
    }

    #[test]
    fn shuffle_examples() {
        let s = spec(&[2]);
        let zero = NestOperator::new(s.clone(), CMat::zeros((2, 2))).unwrap();
        assert_eq!(shuffle_isometry(&zero).unwrap().entries(), &CMat::zeros((2, 2)));

        let mut p = CMat::zeros((2, 2));
        p[[0, 0]] = C64::new(1.0, 0.0);
        let u = shuffle_isometry(&NestOperator::new(s.clone(), p).unwrap()).unwrap();
        let phase = u.entries()[[0, 1]];
        assert!((phase.norm() - 1.0).abs() < 1e-14);
        let mut unit = CMat::zeros((2, 2));
        unit[[0, 1]] = phase;
        assert!(operator_norm(&(u.entries() - unit)) < 1e-14);

        let full = NestOperator::new(s, linalg::eye(2)).unwrap();
        assert!(matches!(shuffle_isometry(&full), Err(Error::Budget { .. })));
    }

    #[test]
    fn shuffle_on_random_admissible_projection() {
        let s = spec(&[4, 6, 9]);
        let mut rng = seeded_rng(17);
        let blocks = BlockDiagonal::from_fn(s.atom_dims(), |_, n| {
            let basis = random_matrix(&mut rng, n, n / 2);
            let (_, vecs) = linalg::hermitian_eigen(&basis.dot(&adjoint(&basis))).unwrap();
            let top = vecs.slice(ndarray::s![.., n - n / 2..]).to_owned();
            linalg::projector_from_basis(&top)
        })
        .unwrap();
        let p = NestOperator::new(s.clone(), blocks.to_dense()).unwrap();
        let u = shuffle_isometry(&p).unwrap();
        let (u, p) = (u.entries(), p.entries());
        let p_perp = linalg::eye(19) - p;
        assert!(operator_norm(&(u.dot(&adjoint(u)) - p)) <= 1e-10);
        assert!(operator_norm(&(p.dot(u).dot(&p_perp) - u)) <= 1e-10);
    }

    #[test]
    fn identity_pair_certificate() {
        let s = spec(&[1, 4, 20]);
        let id = NestOperator::identity(s);
        let cert = right_invertible_pair(&id, &id, 0.5, DEFAULT_TOL).unwrap();
        assert!(cert.p_ranks.iter().all(|&r| r == 0));
        assert!(cert.residual <= 1e-12);
        assert!(cert.pert_a <= 0.5);
        assert!(cert.pert_a < cert.eps && cert.pert_b < cert.eps);
    }

    #[test]
    fn random_pair_certificates() {
        let s = spec(&[1, 4, 20, 100]);
        for &eps in &[0.5, 0.1, 0.02] {
            for seed in 0..2 {
                let a = random_member(&s, 2 * seed, 1.0).unwrap();
                let b = random_member(&s, 2 * seed + 1, 1.0).unwrap();
                let cert = right_invertible_pair(&a, &b, eps, DEFAULT_TOL).unwrap();
                assert!(cert.residual <= 1e-8);
                assert!(cert.pert_a < eps && cert.pert_b < eps);
                assert!(cert.delta > 0.0 && cert.delta < 0.5 * eps / cert.da_norm);
                assert!(cert.identity_residual <= 1e-9 * (1.0 + 1.0 / cert.delta));
                assert!(cert.capture_residual <= 1e-9 * cert.da_inv_norm);
                for (r, n) in cert.p_ranks.iter().zip(s.atom_dims()) {
                    assert!(*r <= n / 2);
                }
                // Direct evaluation of the residual from dense matrices.
                let direct = cert.a_pp.entries().dot(&cert.c1) + cert.b_p.entries().dot(&cert.c2)
                    - linalg::eye(125);
                assert!(operator_norm(&direct) <= 1e-8);
            }
        }
    }

    #[test]
    fn growth_failure_is_reported() {
        let s = spec(&[1, 3]);
        let a = random_member(&s, 0, 1.0).unwrap();
        let b = random_member(&s, 1, 1.0).unwrap();
        assert_eq!(
            right_invertible_pair(&a, &b, 0.1, DEFAULT_TOL).unwrap_err(),
            Error::Growth { atom: 2 }
        );
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let id = NestOperator::identity(spec(&[1, 4]));
        assert!(matches!(
            right_invertible_pair(&id, &id, 0.0, DEFAULT_TOL),
            Err(Error::Precondition(_))
        ));
        let other = NestOperator::identity(spec(&[1, 5]));
        assert!(matches!(
            right_invertible_pair(&id, &other, 0.1, DEFAULT_TOL),
            Err(Error::Shape(_))
        ));
    }
}
