use serde::{Deserialize, Serialize};

use super::split;
use crate::blockdiag::BlockDiagonal;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::nest::{self, NestOperator, NestSpec};

const KIND: &str = "perturbation_certificate";

/// Output of the right-invertibility pipeline.
///
/// `blocks` is the partition the shuffle was done on: the atoms themselves,
/// or megablocks of consecutive atoms. `a_pp`, `b_p` are block
/// upper-triangular for `blocks`; `c1`, `c2` are block diagonal for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CertificateJson", into = "CertificateJson")]
pub struct PerturbationCertificate {
    pub dims: Vec<usize>,
    pub blocks: Vec<usize>,
    pub eps: f64,
    pub delta: f64,
    pub tol: f64,
    pub residual: f64,
    pub pert_a: f64,
    pub pert_b: f64,
    pub p_ranks: Vec<usize>,
    pub a: NestOperator,
    pub b: NestOperator,
    pub a_pp: NestOperator,
    pub b_p: NestOperator,
    pub c1: CMat,
    pub c2: CMat,
    /// Frobenius norm of `A'' G1 + B' G2 - (delta P + P^perp)`, where
    /// `C_i = G_i (delta^-1 P + P^perp)`.
    pub identity_residual: f64,
    /// Frobenius norm of `A' D_a^{-1} P^perp - P^perp`.
    pub capture_residual: f64,
    pub da_norm: f64,
    pub da_inv_norm: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateJson {
    kind: String,
    dims: Vec<usize>,
    blocks: Vec<usize>,
    eps: f64,
    delta: f64,
    tol: f64,
    residual: f64,
    #[serde(rename = "pert_A")]
    pert_a: f64,
    #[serde(rename = "pert_B")]
    pert_b: f64,
    #[serde(rename = "P_ranks")]
    p_ranks: Vec<usize>,
    identity_residual: f64,
    capture_residual: f64,
    #[serde(rename = "Da_norm")]
    da_norm: f64,
    #[serde(rename = "Da_inv_norm")]
    da_inv_norm: f64,
    #[serde(rename = "A")]
    a: NestOperator,
    #[serde(rename = "B")]
    b: NestOperator,
    #[serde(rename = "A_pp")]
    a_pp: NestOperator,
    #[serde(rename = "B_p")]
    b_p: NestOperator,
    #[serde(rename = "C1", with = "crate::json::matrix")]
    c1: CMat,
    #[serde(rename = "C2", with = "crate::json::matrix")]
    c2: CMat,
}

impl TryFrom<CertificateJson> for PerturbationCertificate {
    type Error = Error;

    fn try_from(j: CertificateJson) -> Result<Self> {
        if j.kind != KIND {
            return Err(Error::Shape(format!("expected kind {KIND:?}, got {:?}", j.kind)));
        }
        Ok(Self {
            dims: j.dims,
            blocks: j.blocks,
            eps: j.eps,
            delta: j.delta,
            tol: j.tol,
            residual: j.residual,
            pert_a: j.pert_a,
            pert_b: j.pert_b,
            p_ranks: j.p_ranks,
            a: j.a,
            b: j.b,
            a_pp: j.a_pp,
            b_p: j.b_p,
            c1: j.c1,
            c2: j.c2,
            identity_residual: j.identity_residual,
            capture_residual: j.capture_residual,
            da_norm: j.da_norm,
            da_inv_norm: j.da_inv_norm,
        })
    }
}

impl From<PerturbationCertificate> for CertificateJson {
    fn from(c: PerturbationCertificate) -> Self {
        Self {
            kind: KIND.into(),
            dims: c.dims,
            blocks: c.blocks,
            eps: c.eps,
            delta: c.delta,
            tol: c.tol,
            residual: c.residual,
            pert_a: c.pert_a,
            pert_b: c.pert_b,
            p_ranks: c.p_ranks,
            identity_residual: c.identity_residual,
            capture_residual: c.capture_residual,
            da_norm: c.da_norm,
            da_inv_norm: c.da_inv_norm,
            a: c.a,
            b: c.b,
            a_pp: c.a_pp,
            b_p: c.b_p,
            c1: c.c1,
            c2: c.c2,
        }
    }
}

/// Everything [`check_certificate`] recomputed, with a verdict per check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub residual: f64,
    pub pert_a: f64,
    pub pert_b: f64,
    pub delta_bound: f64,
    pub ranks: Vec<usize>,
    pub residual_ok: bool,
    pub perturbation_ok: bool,
    pub membership_ok: bool,
    pub delta_ok: bool,
    pub ranks_ok: bool,
}

impl CertificateCheck {
    pub fn passed(&self) -> bool {
        self.residual_ok && self.perturbation_ok && self.membership_ok && self.delta_ok && self.ranks_ok
    }
}

/// Recomputes a certificate from its raw matrices against `A`, `B`.
///
/// Shape mismatches are errors; failed checks are reported in the result.
pub fn check_certificate(
    cert: &PerturbationCertificate,
    a: &NestOperator,
    b: &NestOperator,
    tol: f64,
) -> Result<CertificateCheck> {
    let spec = NestSpec::new(cert.dims.clone())?;
    if a.spec() != &spec || b.spec() != &spec {
        return Err(Error::Shape("A and B do not match the certificate dims".into()));
    }
    let coarse = NestSpec::new(cert.blocks.clone())?;
    if !refines(&spec, &coarse) {
        return Err(Error::Shape(format!(
            "blocks {:?} are not unions of consecutive atoms {:?}",
            cert.blocks, cert.dims
        )));
    }
    let n = spec.total_dim();
    for (name, m) in [
        ("A_pp", cert.a_pp.entries()),
        ("B_p", cert.b_p.entries()),
        ("C1", &cert.c1),
        ("C2", &cert.c2),
    ] {
        if m.dim() != (n, n) {
            return Err(Error::Shape(format!("{name} is {:?}, expected {n}x{n}", m.dim())));
        }
    }

    let residual = linalg::operator_norm(
        &(cert.a_pp.entries().dot(&cert.c1) + cert.b_p.entries().dot(&cert.c2) - linalg::eye(n)),
    );
    let pert_a = linalg::operator_norm(&(a.entries() - cert.a_pp.entries()));
    let pert_b = linalg::operator_norm(&(b.entries() - cert.b_p.entries()));

    let membership_ok = cert.a_pp.spec() == &coarse
        && cert.b_p.spec() == &coarse
        && nest::is_in_nest_algebra(&cert.c1, &coarse, 0.0)?
        && nest::is_in_nest_algebra(&cert.c2, &coarse, 0.0)?;

    let eps_ok = cert.eps > 0.0 && cert.eps.is_finite();
    let (delta_bound, ranks, shuffle_ok) = if eps_ok {
        recompute_shuffle(cert, a, tol)?
    } else {
        (0.0, Vec::new(), false)
    };
    let delta_ok = eps_ok && cert.delta > 0.0 && cert.delta < delta_bound;
    let ranks_ok = shuffle_ok
        && ranks == cert.p_ranks
        && ranks.iter().zip(&cert.blocks).all(|(r, n)| *r <= n / 2);

    Ok(CertificateCheck {
        residual,
        pert_a,
        pert_b,
        delta_bound,
        ranks,
        residual_ok: residual <= tol,
        perturbation_ok: eps_ok && pert_a < cert.eps && pert_b < cert.eps,
        membership_ok,
        delta_ok,
        ranks_ok,
    })
}

/// `true` when every check of [`check_certificate`] passes.
pub fn validate_certificate(
    cert: &PerturbationCertificate,
    a: &NestOperator,
    b: &NestOperator,
    tol: f64,
) -> Result<bool> {
    Ok(check_certificate(cert, a, b, tol)?.passed())
}

fn refines(fine: &NestSpec, coarse: &NestSpec) -> bool {
    let cuts = fine.cumulative();
    coarse.cumulative().iter().all(|c| cuts.contains(c)) && fine.total_dim() == coarse.total_dim()
}

/// Rebuilds `D_a` from `A` and recovers `U = (A'' - A') D_a^{-1} / delta`.
///
/// Returns the bound `eps / (2 ||D_a||)` on `delta`, the per-block ranks of
/// `U`, and whether `U` is a block-diagonal partial isometry with
/// `U^2 = 0`.
fn recompute_shuffle(
    cert: &PerturbationCertificate,
    a: &NestOperator,
    tol: f64,
) -> Result<(f64, Vec<usize>, bool)> {
    let sa = split(a, cert.eps, &cert.blocks)?;
    let delta_bound = 0.5 * cert.eps / sa.diag.norm();
    if !(cert.delta > 0.0 && cert.delta.is_finite()) {
        return Ok((delta_bound, Vec::new(), false));
    }
    let gap = cert.a_pp.entries() - &sa.lifted;
    let gap_blocks = BlockDiagonal::extract(&gap, &cert.blocks)?;
    let off_block = linalg::max_abs(&(&gap - &gap_blocks.to_dense()));
    let u = gap_blocks.mul(&sa.diag_inv).scale(1.0 / cert.delta);
    let ranks = u
        .blocks()
        .iter()
        .map(|uk| linalg::numerical_rank(uk, 1e-6))
        .collect();
    let u_adj = u.adjoint();
    let isometry_defect = u.mul(&u_adj).mul(&u).sub(&u).norm();
    let nilpotent_defect = u.mul(&u).norm();
    let slack = tol.max(1e-6);
    let ok = off_block <= tol && isometry_defect <= slack && nilpotent_defect <= slack;
    Ok((delta_bound, ranks, ok))
}
