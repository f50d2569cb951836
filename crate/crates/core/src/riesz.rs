//! Riesz idempotents and invertible corners.
//!
//! For `||A|| <= 1/2` the padded operator `A' = A ⊕ I_d` has its spectrum
//! split by the circle `|z| = 3/4`. A perturbation `B` of `A'` keeps that
//! split; the Riesz idempotent `P` of `B` for the inside of the circle is
//! close to `E = I_m ⊕ 0`, and `S = PE + (I - P)(I - E)` conjugates `B`
//! into block-diagonal form whose top-left corner `B_1` approximates `A`.

use std::f64::consts::PI;

use ndarray::s;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::sample::{random_matrix, seeded_rng};

/// Radius of the separating circle.
pub const RADIUS: f64 = 0.75;
pub const DEFAULT_NODES: usize = 256;
/// Factor applied to the sampled resolvent maximum.
pub const SAFETY: f64 = 1.05;
/// Lower bound on the reported resolvent supremum.
pub const M_FLOOR: f64 = 4.0;
/// Resolvent norm above which a node counts as hitting the spectrum.
pub const COLLISION_NORM: f64 = 1e10;

pub const IDEMPOTENT_TOL: f64 = 1e-8;
pub const SWAP_TOL: f64 = 1e-10;
pub const NORM_IDENTITY_TOL: f64 = 1e-12;
pub const OFF_CORNER_TOL: f64 = 1e-8;
pub const QUADRATURE_TOL: f64 = 1e-6;

const KIND: &str = "riesz_report";

/// `A ⊕ I_d`, for `||A|| <= 1/2`.
pub fn embed_corner(a: &CMat, pad: usize) -> Result<CMat> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!("corner must be square, got {:?}", a.dim())));
    }
    if pad == 0 {
        return Err(Error::Precondition("pad must be at least 1".into()));
    }
    let norm = linalg::operator_norm(a);
    if norm > 0.5 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("||A|| = {norm} exceeds 1/2")));
    }
    let m = a.nrows();
    let mut out = linalg::eye(m + pad);
    out.slice_mut(s![..m, ..m]).assign(a);
    Ok(out)
}

fn node(j: usize, nodes: usize) -> C64 {
    C64::from_polar(RADIUS, 2.0 * PI * j as f64 / nodes as f64)
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes == 0 {
        return Err(Error::Precondition("need at least one quadrature node".into()));
    }
    Ok(())
}

/// Resolvent norms `||(z_j I - A)^{-1}||` at the equispaced nodes.
fn resolvent_norms(a: &CMat, nodes: usize) -> Result<Vec<f64>> {
    check_nodes(nodes)?;
    (0..nodes)
        .map(|j| Ok(linalg::operator_norm(&linalg::resolvent(a, node(j, nodes))?)))
        .collect()
}

/// `M`: the largest sampled resolvent norm on the circle, times
/// [`SAFETY`], floored at [`M_FLOOR`].
pub fn contour_resolvent_sup(a: &CMat, nodes: usize) -> Result<f64> {
    let sup = resolvent_norms(a, nodes)?.into_iter().fold(0.0, f64::max);
    Ok((SAFETY * sup).max(M_FLOOR))
}

/// `P = (1/2πi) ∮ (zI - B)^{-1} dz` by the trapezoidal rule:
/// with `dz = i z dθ` this is `(1/N) Σ_j z_j (z_j I - B)^{-1}`.
pub fn riesz_idempotent(b: &CMat, nodes: usize) -> Result<CMat> {
    check_nodes(nodes)?;
    let n = b.nrows();
    let mut sum = CMat::zeros((n, n));
    for j in 0..nodes {
        let z = node(j, nodes);
        let collision = |norm| Error::ContourCollision { node: j, norm };
        let r = linalg::resolvent(b, z).map_err(|e| match e {
            Error::Singular { norm, .. } => collision(norm),
            other => other,
        })?;
        let norm = linalg::operator_norm(&r);
        if norm > COLLISION_NORM {
            return Err(collision(norm));
        }
        sum.scaled_add(z, &r);
    }
    Ok(sum.mapv(|x| x / nodes as f64))
}

/// `E = I_m ⊕ 0_d`.
pub fn corner_projection(m: usize, pad: usize) -> CMat {
    let mut e = CMat::zeros((m + pad, m + pad));
    for i in 0..m {
        e[[i, i]] = C64::new(1.0, 0.0);
    }
    e
}

/// `S = PE + (I - P)(I - E)`, requiring `||P - E|| < 1/2`.
pub fn similarity_swap(p: &CMat, e: &CMat) -> Result<CMat> {
    if p.dim() != e.dim() || p.nrows() != p.ncols() {
        return Err(Error::Shape(format!("P {:?} and E {:?} must be square and equal", p.dim(), e.dim())));
    }
    let distance = linalg::operator_norm(&(p - e));
    if !(distance < 0.5) {
        return Err(Error::Conditioning { distance });
    }
    let id = linalg::eye(p.nrows());
    Ok(p.dot(e) + (&id - p).dot(&(&id - e)))
}

/// Result of conjugating `B` by `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corner {
    /// `S^{-1} B S`.
    pub conjugated: CMat,
    /// Top-left `m x m` block of the conjugate.
    pub b1: CMat,
    /// Larger of the two off-diagonal block norms of the conjugate.
    pub off_corner: f64,
}

/// `B' = S^{-1} B S` and its corner; fails if `B'` is not block diagonal
/// to within `1e-8 ||B||`.
pub fn extract_corner(b: &CMat, s_mat: &CMat, m: usize) -> Result<Corner> {
    let n = b.nrows();
    if b.dim() != s_mat.dim() || b.ncols() != n || m > n {
        return Err(Error::Shape(format!(
            "B {:?}, S {:?}, corner {m} do not fit",
            b.dim(),
            s_mat.dim()
        )));
    }
    let conjugated = linalg::inverse(s_mat)?.dot(b).dot(s_mat);
    let upper = linalg::operator_norm(&conjugated.slice(s![..m, m..]).to_owned());
    let lower = linalg::operator_norm(&conjugated.slice(s![m.., ..m]).to_owned());
    let off_corner = upper.max(lower);
    let bound = OFF_CORNER_TOL * linalg::operator_norm(b);
    if off_corner > bound {
        return Err(Error::BlockStructure {
            residual: off_corner,
            bound,
        });
    }
    Ok(Corner {
        b1: conjugated.slice(s![..m, ..m]).to_owned(),
        conjugated,
        off_corner,
    })
}

/// `ε' = 3π M² ε`.
pub fn eps_prime(m_sup: f64, eps: f64) -> f64 {
    3.0 * PI * m_sup * m_sup * eps
}

/// `ε'' = (1 + 2ε) ε' / (1 - ε')`.
pub fn eps_double_prime(eps: f64, eps_prime: f64) -> f64 {
    (1.0 + 2.0 * eps) * eps_prime / (1.0 - eps_prime)
}

/// The largest admissible `ε`: half of `(6π M²)^{-1}`.
pub fn eps_ceiling(m_sup: f64) -> f64 {
    0.5 / (6.0 * PI * m_sup * m_sup)
}

/// Everything the corner pipeline computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReportJson", into = "ReportJson")]
pub struct RieszReport {
    pub a: CMat,
    pub pad: usize,
    pub b: CMat,
    pub m_sup: f64,
    pub eps: f64,
    pub eps_prime: f64,
    pub eps_double_prime: f64,
    pub quad_nodes: usize,
    pub p: CMat,
    pub s: CMat,
    pub b1: CMat,
    pub idempotency_residual: f64,
    pub commutation_residual: f64,
    pub corner_distance: f64,
    pub p_minus_e: f64,
    pub s_minus_i: f64,
    pub swap_residual: f64,
    pub b_shift: f64,
    pub off_corner: f64,
    pub resolvent_max: f64,
    pub quadrature_shift: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportJson {
    kind: String,
    #[serde(rename = "M")]
    m_sup: f64,
    eps: f64,
    eps_prime: f64,
    eps_double_prime: f64,
    quad_nodes: usize,
    pad: usize,
    idempotency_residual: f64,
    commutation_residual: f64,
    corner_distance: f64,
    p_minus_e: f64,
    s_minus_i: f64,
    swap_residual: f64,
    b_shift: f64,
    off_corner: f64,
    resolvent_max: f64,
    quadrature_shift: f64,
    #[serde(rename = "A", with = "crate::json::matrix")]
    a: CMat,
    #[serde(rename = "B", with = "crate::json::matrix")]
    b: CMat,
    #[serde(rename = "P", with = "crate::json::matrix")]
    p: CMat,
    #[serde(rename = "S", with = "crate::json::matrix")]
    s: CMat,
    #[serde(rename = "B1", with = "crate::json::matrix")]
    b1: CMat,
}

impl From<RieszReport> for ReportJson {
    fn from(r: RieszReport) -> Self {
        Self {
            kind: KIND.into(),
            m_sup: r.m_sup,
            eps: r.eps,
            eps_prime: r.eps_prime,
            eps_double_prime: r.eps_double_prime,
            quad_nodes: r.quad_nodes,
            pad: r.pad,
            idempotency_residual: r.idempotency_residual,
            commutation_residual: r.commutation_residual,
            corner_distance: r.corner_distance,
            p_minus_e: r.p_minus_e,
            s_minus_i: r.s_minus_i,
            swap_residual: r.swap_residual,
            b_shift: r.b_shift,
            off_corner: r.off_corner,
            resolvent_max: r.resolvent_max,
            quadrature_shift: r.quadrature_shift,
            a: r.a,
            b: r.b,
            p: r.p,
            s: r.s,
            b1: r.b1,
        }
    }
}

impl TryFrom<ReportJson> for RieszReport {
    type Error = Error;

    fn try_from(j: ReportJson) -> Result<Self> {
        if j.kind != KIND {
            return Err(Error::Shape(format!("expected kind {KIND:?}, got {:?}", j.kind)));
        }
        Ok(Self {
            a: j.a,
            pad: j.pad,
            b: j.b,
            m_sup: j.m_sup,
            eps: j.eps,
            eps_prime: j.eps_prime,
            eps_double_prime: j.eps_double_prime,
            quad_nodes: j.quad_nodes,
            p: j.p,
            s: j.s,
            b1: j.b1,
            idempotency_residual: j.idempotency_residual,
            commutation_residual: j.commutation_residual,
            corner_distance: j.corner_distance,
            p_minus_e: j.p_minus_e,
            s_minus_i: j.s_minus_i,
            swap_residual: j.swap_residual,
            b_shift: j.b_shift,
            off_corner: j.off_corner,
            resolvent_max: j.resolvent_max,
            quadrature_shift: j.quadrature_shift,
        })
    }
}

/// One recomputed inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            bound,
            passed: value <= bound,
        }
    }

    fn below(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            bound,
            passed: value < bound,
        }
    }
}

/// Random `m x m` corner with `||A|| = 1/2`.
pub fn random_corner(m: usize, seed: u64) -> Result<CMat> {
    if m == 0 {
        return Err(Error::Precondition("corner dimension must be positive".into()));
    }
    let raw = random_matrix(&mut seeded_rng(seed), m, m);
    let norm = linalg::operator_norm(&raw);
    Ok(linalg::scale(&raw, 0.5 / norm))
}

/// Runs the corner pipeline on `A` with a seeded perturbation of size
/// `0.99 ε`, `ε = min(eps, (6π M²)^{-1} / 2)`.
pub fn riesz_corner(a: &CMat, pad: usize, eps: f64, nodes: usize, seed: u64) -> Result<RieszReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    if nodes < 2 {
        return Err(Error::Precondition("need at least two quadrature nodes".into()));
    }
    let a_prime = embed_corner(a, pad)?;
    let m_sup = contour_resolvent_sup(a, nodes)?;
    let eps = eps.min(eps_ceiling(m_sup));

    let n = a_prime.nrows();
    let g = random_matrix(&mut seeded_rng(seed), n, n);
    let g = linalg::scale(&g, 0.99 * eps / linalg::operator_norm(&g));
    let b = &a_prime + &g;

    let p = riesz_idempotent(&b, nodes)?;
    let e = corner_projection(a.nrows(), pad);
    let s_mat = similarity_swap(&p, &e)?;
    let corner = extract_corner(&b, &s_mat, a.nrows())?;
    let report = assemble(a, pad, b, m_sup, eps, nodes, p, s_mat, corner)?;

    if let Some(failed) = evaluate(&report)?.into_iter().find(|c| !c.passed) {
        return Err(Error::Certification {
            residual: failed.value,
            tol: failed.bound,
        });
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    a: &CMat,
    pad: usize,
    b: CMat,
    m_sup: f64,
    eps: f64,
    nodes: usize,
    p: CMat,
    s_mat: CMat,
    corner: Corner,
) -> Result<RieszReport> {
    let m = a.nrows();
    let e = corner_projection(m, pad);
    let id = linalg::eye(m + pad);
    let eps_prime = eps_prime(m_sup, eps);
    let p_half = riesz_idempotent(&b, nodes / 2)?;
    let resolvent_max = resolvent_norms(&b, nodes)?.into_iter().fold(0.0, f64::max);
    Ok(RieszReport {
        idempotency_residual: linalg::operator_norm(&(p.dot(&p) - &p)),
        commutation_residual: linalg::operator_norm(&(p.dot(&b) - b.dot(&p))),
        corner_distance: linalg::operator_norm(&(a - &corner.b1)),
        p_minus_e: linalg::operator_norm(&(&p - &e)),
        s_minus_i: linalg::operator_norm(&(&s_mat - &id)),
        swap_residual: linalg::operator_norm(&(s_mat.dot(&e) - p.dot(&s_mat))),
        b_shift: linalg::operator_norm(&(&corner.conjugated - &b)),
        off_corner: corner.off_corner,
        quadrature_shift: linalg::operator_norm(&(&p - &p_half)),
        resolvent_max,
        eps_prime,
        eps_double_prime: eps_double_prime(eps, eps_prime),
        a: a.clone(),
        pad,
        b,
        m_sup,
        eps,
        quad_nodes: nodes,
        p,
        s: s_mat,
        b1: corner.b1,
    })
}

/// The inequalities of the corner argument, evaluated on stored fields.
fn evaluate(r: &RieszReport) -> Result<Vec<Check>> {
    let b_norm = linalg::operator_norm(&r.b);
    let b_invertible = linalg::min_singular_value(&r.b) > 1e-12 * b_norm;
    let b1_sigma = linalg::min_singular_value(&r.b1);
    let a_prime = embed_corner(&r.a, r.pad)?;
    Ok(vec![
        Check::below("eps_regime", r.eps, 1.0 / (6.0 * PI * r.m_sup * r.m_sup)),
        Check::below("perturbation", linalg::operator_norm(&(&a_prime - &r.b)), r.eps),
        Check::at_most("resolvent_bound", r.resolvent_max, 2.0 * r.m_sup),
        Check::at_most("idempotency", r.idempotency_residual, IDEMPOTENT_TOL),
        Check::at_most("commutation", r.commutation_residual, IDEMPOTENT_TOL),
        Check::below("eps_prime", r.eps_prime, 0.5),
        Check::at_most("p_minus_e", r.p_minus_e, r.eps_prime),
        Check::at_most("s_minus_i", (r.s_minus_i - r.p_minus_e).abs(), NORM_IDENTITY_TOL),
        Check::at_most("swap", r.swap_residual, SWAP_TOL),
        Check::at_most("off_corner", r.off_corner, OFF_CORNER_TOL * b_norm),
        Check::at_most("b_shift", r.b_shift, r.eps_double_prime),
        Check::below("corner_distance", r.corner_distance, r.eps + r.eps_double_prime),
        Check {
            name: "b1_invertible",
            value: b1_sigma,
            bound: 0.0,
            passed: !b_invertible || b1_sigma > 1e-12 * b_norm,
        },
        Check::below("quadrature", r.quadrature_shift, QUADRATURE_TOL),
    ])
}

/// Recomputes the report from `A`, `B` and the node count, compares the
/// stored `P`, `S`, `B_1` and scalars with the recomputation, and checks
/// every inequality.
pub fn check_report(report: &RieszReport) -> Result<Vec<Check>> {
    let m = report.a.nrows();
    let n = m + report.pad;
    if report.b.dim() != (n, n) || report.p.dim() != (n, n) || report.s.dim() != (n, n) {
        return Err(Error::Shape("report matrices do not match A ⊕ I_pad".into()));
    }
    if report.b1.dim() != (m, m) {
        return Err(Error::Shape("B1 does not match A".into()));
    }
    if report.quad_nodes < 2 {
        return Err(Error::Shape("quad_nodes must be at least 2".into()));
    }
    let m_sup = contour_resolvent_sup(&report.a, report.quad_nodes)?;
    let p = riesz_idempotent(&report.b, report.quad_nodes)?;
    let e = corner_projection(m, report.pad);
    let s_mat = similarity_swap(&p, &e)?;
    let conjugated = linalg::inverse(&s_mat)?.dot(&report.b).dot(&s_mat);
    let off_corner = linalg::operator_norm(&conjugated.slice(s![..m, m..]).to_owned())
        .max(linalg::operator_norm(&conjugated.slice(s![m.., ..m]).to_owned()));
    let corner = Corner {
        b1: conjugated.slice(s![..m, ..m]).to_owned(),
        conjugated,
        off_corner,
    };
    let fresh = assemble(
        &report.a,
        report.pad,
        report.b.clone(),
        m_sup,
        report.eps,
        report.quad_nodes,
        p,
        s_mat,
        corner,
    )?;

    let mut checks = evaluate(&fresh)?;
    let matrix_gap = [
        linalg::max_abs(&(&fresh.p - &report.p)),
        linalg::max_abs(&(&fresh.s - &report.s)),
        linalg::max_abs(&(&fresh.b1 - &report.b1)),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    checks.push(Check::at_most("stored_matrices", matrix_gap, 1e-10));
    let scalar_gap = [
        (fresh.m_sup, report.m_sup),
        (fresh.eps_prime, report.eps_prime),
        (fresh.eps_double_prime, report.eps_double_prime),
        (fresh.corner_distance, report.corner_distance),
        (fresh.p_minus_e, report.p_minus_e),
    ]
    .into_iter()
    .map(|(x, y)| (x - y).abs() / x.abs().max(1e-300))
    .fold(0.0, f64::max);
    checks.push(Check::at_most("stored_scalars", scalar_gap, 1e-8));
    Ok(checks)
}

pub fn validate_report(report: &RieszReport) -> Result<bool> {
    Ok(check_report(report)?.iter().all(|c| c.passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> CMat {
        let mut m = CMat::zeros((values.len(), values.len()));
        for (i, &v) in values.iter().enumerate() {
            m[[i, i]] = C64::new(v, 0.0);
        }
        m
    }

    #[test]
    fn embed_examples() {
        let a = CMat::zeros((1, 1));
        assert_eq!(embed_corner(&a, 1).unwrap(), diag(&[0.0, 1.0]));
        let a = random_corner(3, 4).unwrap();
        let e = embed_corner(&a, 2).unwrap();
        assert!((linalg::operator_norm(&e) - 1.0).abs() < 1e-12);
        assert!(embed_corner(&diag(&[0.6]), 1).is_err());
        assert!(embed_corner(&diag(&[0.1]), 0).is_err());
    }

    #[test]
    fn embedded_spectrum_adds_one() {
        let a = random_corner(4, 1).unwrap();
        let e = embed_corner(&a, 2).unwrap();
        use ndarray_linalg::Eig;
        let (ea, _) = a.eig().unwrap();
        let (ee, _) = e.eig().unwrap();
        let mut found = vec![false; ee.len()];
        for z in ea.iter().chain([C64::new(1.0, 0.0), C64::new(1.0, 0.0)].iter()) {
            let k = (0..ee.len())
                .filter(|&k| !found[k])
                .min_by(|&x, &y| (ee[x] - z).norm().total_cmp(&(ee[y] - z).norm()))
                .unwrap();
            assert!((ee[k] - z).norm() < 1e-10);
            found[k] = true;
        }
    }

    #[test]
    fn resolvent_sup_examples() {
        assert_eq!(contour_resolvent_sup(&CMat::zeros((1, 1)), 64).unwrap(), 4.0);
        let m = contour_resolvent_sup(&diag(&[0.5]), 64).unwrap();
        assert!((m - 4.2).abs() < 1e-12);
    }

    #[test]
    fn resolvent_sup_converges_in_nodes() {
        for seed in 0..5 {
            let a = random_corner(1 + seed as usize % 8, seed).unwrap();
            let coarse = contour_resolvent_sup(&a, 256).unwrap();
            let fine = contour_resolvent_sup(&a, 512).unwrap();
            assert!((fine - coarse).abs() < 0.01 * fine);
        }
    }

    #[test]
    fn idempotent_of_diagonal() {
        let p = riesz_idempotent(&diag(&[0.0, 1.0]), 256).unwrap();
        assert!(linalg::max_abs(&(p - diag(&[1.0, 0.0]))) < 1e-14);
    }

    #[test]
    fn idempotent_of_embedded_corner_is_e() {
        let a = random_corner(5, 2).unwrap();
        let b = embed_corner(&a, 3).unwrap();
        let p = riesz_idempotent(&b, 256).unwrap();
        assert!(linalg::operator_norm(&(p - corner_projection(5, 3))) < 1e-10);
    }

    #[test]
    fn contour_collision_is_reported() {
        let b = diag(&[0.75]);
        assert!(matches!(
            riesz_idempotent(&b, 8),
            Err(Error::ContourCollision { node: 0, .. })
        ));
    }

    #[test]
    fn swap_examples() {
        let e = corner_projection(2, 1);
        let s_mat = similarity_swap(&e, &e).unwrap();
        assert!(linalg::max_abs(&(s_mat - linalg::eye(3))) < 1e-15);

        // Rotate the range of E slightly.
        let t: f64 = 1e-3;
        let mut p = CMat::zeros((2, 2));
        p[[0, 0]] = C64::new(t.cos() * t.cos(), 0.0);
        p[[0, 1]] = C64::new(t.cos() * t.sin(), 0.0);
        p[[1, 0]] = C64::new(t.cos() * t.sin(), 0.0);
        p[[1, 1]] = C64::new(t.sin() * t.sin(), 0.0);
        let e = corner_projection(1, 1);
        let s_mat = similarity_swap(&p, &e).unwrap();
        let lhs = linalg::operator_norm(&(&s_mat - &linalg::eye(2)));
        let rhs = linalg::operator_norm(&(&p - &e));
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(linalg::operator_norm(&(s_mat.dot(&e) - p.dot(&s_mat))) < 1e-10);

        let far = corner_projection(0, 1);
        assert!(matches!(
            similarity_swap(&far, &corner_projection(1, 0)),
            Err(Error::Conditioning { .. })
        ));
    }

    #[test]
    fn unperturbed_corner_is_exact() {
        let a = random_corner(3, 7).unwrap();
        let b = embed_corner(&a, 2).unwrap();
        let p = riesz_idempotent(&b, 256).unwrap();
        let s_mat = similarity_swap(&p, &corner_projection(3, 2)).unwrap();
        assert!(linalg::operator_norm(&(&s_mat - &linalg::eye(5))) < 1e-12);
        let c = extract_corner(&b, &s_mat, 3).unwrap();
        assert!(linalg::operator_norm(&(c.b1 - &a)) < 1e-12);
        assert!(c.off_corner < 1e-12);
    }

    #[test]
    fn pipeline_on_random_corner() {
        let a = random_corner(6, 11).unwrap();
        let r = riesz_corner(&a, 2, 1e-3, 256, 11).unwrap();
        assert!(r.eps <= 1e-3 && r.eps < 1.0 / (6.0 * PI * r.m_sup * r.m_sup));
        assert!(r.idempotency_residual <= 1e-8);
        assert!(r.corner_distance < r.eps + r.eps_double_prime);
        assert!(validate_report(&r).unwrap());
    }

    #[test]
    fn report_round_trips_and_detects_tampering() {
        let a = random_corner(4, 3).unwrap();
        let r = riesz_corner(&a, 2, 1e-3, 128, 3).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: RieszReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let mut tampered = r.clone();
        tampered.b1[[0, 0]] += C64::new(1e-3, 0.0);
        assert!(!validate_report(&tampered).unwrap());
        let mut tampered = r;
        tampered.eps *= 1e-3;
        assert!(!validate_report(&tampered).unwrap());
    }
}
