use serde::Serialize;

use super::{certify, PerturbationCertificate};
use crate::error::{Error, Result};
use crate::nest::{NestOperator, NestSpec};

const MAX_P: usize = 100_000;

/// Bound on `||A^{-1}||` for an `n`-block upper-triangular `A` whose
/// diagonal blocks have inverses of norm at most `h`, with `||A|| <= norm_a`.
///
/// Splits off the first block: for `[[X, Y], [0, Z]]` the inverse has
/// norm at most `2 max(|X^-1|, |Z^-1|) + max(..)^2 |Y|`.
pub fn block_inverse_bound(h: f64, n: usize, norm_a: f64) -> Result<f64> {
    if !(h > 0.0) || n == 0 {
        return Err(Error::Precondition(format!(
            "block_inverse_bound needs H > 0 and n >= 1, got H = {h}, n = {n}"
        )));
    }
    let mut l = h;
    for _ in 1..n {
        let m = h.max(l);
        l = 2.0 * m + m * m * norm_a;
    }
    Ok(l)
}

/// Grouping of atoms into megablocks `F_k` of `p J` consecutive atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MegablockPlan {
    pub gamma: f64,
    #[serde(rename = "J")]
    pub j: usize,
    pub p: usize,
    /// One-based inclusive atom ranges of the complete megablocks.
    pub megablocks: Vec<(usize, usize)>,
    /// `M_k`: total dimension of each complete megablock.
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    /// Atoms after the last complete megablock.
    pub tail: Option<(usize, usize)>,
}

impl MegablockPlan {
    /// Block sizes the pipeline runs on. Tail atoms are merged into the last
    /// complete megablock; with no complete megablock everything is one block.
    pub fn partition(&self, spec: &NestSpec) -> Vec<usize> {
        let mut sizes = self.m.clone();
        let tail: usize = self
            .tail
            .map_or(0, |(first, last)| spec.atom_dims()[first - 1..last].iter().sum());
        match sizes.last_mut() {
            Some(last) => *last += tail,
            None => sizes.push(tail),
        }
        sizes
    }

    /// Number of atoms in each block of [`partition`](Self::partition).
    pub fn atoms_per_block(&self) -> Vec<usize> {
        let mut counts: Vec<usize> = self.megablocks.iter().map(|(a, b)| b - a + 1).collect();
        let tail = self.tail.map_or(0, |(a, b)| b - a + 1);
        match counts.last_mut() {
            Some(last) => *last += tail,
            None => counts.push(tail),
        }
        counts
    }
}

/// `R(k) = max_{i <= k} r_i`, zero-based storage of the one-based sequence.
fn running_max(dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .scan(0, |m, &r| {
            *m = (*m).max(r);
            Some(*m)
        })
        .collect()
}

fn p_condition(gamma: f64, j: usize, p: usize) -> bool {
    (1.0 + gamma).powi(p as i32) / p as f64 >= 5.0 * j as f64
}

pub fn megablock_plan(spec: &NestSpec, gamma: f64, j: usize) -> Result<MegablockPlan> {
    if !(gamma > 0.0 && gamma.is_finite()) || j == 0 {
        return Err(Error::Precondition(format!(
            "megablock plan needs gamma > 0 and J >= 1, got gamma = {gamma}, J = {j}"
        )));
    }
    let dims = spec.atom_dims();
    let k_atoms = dims.len();
    let r = running_max(dims);
    let big_r = |k: usize| r[k - 1];

    let mut k = 1;
    while (k + 1) * j <= k_atoms {
        if (big_r((k + 1) * j) as f64) < (1.0 + gamma) * big_r(k * j) as f64 {
            return Err(Error::Hypothesis {
                window: k,
                reason: format!(
                    "R({}) = {} < (1 + {gamma}) R({}) = {}",
                    (k + 1) * j,
                    big_r((k + 1) * j),
                    k * j,
                    (1.0 + gamma) * big_r(k * j) as f64
                ),
            });
        }
        k += 1;
    }

    let p = (1..=MAX_P)
        .find(|&p| p_condition(gamma, j, p))
        .ok_or_else(|| Error::Precondition(format!("no p <= {MAX_P} for gamma = {gamma}")))?;

    let width = p * j;
    let complete = k_atoms / width;
    let megablocks: Vec<(usize, usize)> = (0..complete)
        .map(|k| (k * width + 1, (k + 1) * width))
        .collect();
    let m: Vec<usize> = megablocks
        .iter()
        .map(|&(a, b)| dims[a - 1..b].iter().sum())
        .collect();
    let tail = (complete * width < k_atoms).then(|| (complete * width + 1, k_atoms));

    for k in 1..m.len() {
        let before: usize = m[..k].iter().sum();
        if m[k] < 5 * m[k - 1] || m[k] < 4 * before {
            return Err(Error::Hypothesis {
                window: k + 1,
                reason: format!("megablock ranks {m:?} fail M_(k+1) >= 5 M_k or M_k >= 4 sum M_i"),
            });
        }
    }

    Ok(MegablockPlan {
        gamma,
        j,
        p,
        megablocks,
        m,
        tail,
    })
}

/// The right-invertibility pipeline run on megablocks instead of atoms.
///
/// `A''`, `B'` and the right inverse are block upper-triangular (resp.
/// block diagonal) for the megablock partition, which is coarser than the
/// atoms of `A`, `B`.
pub fn right_invertible_pair_megablock(
    a: &NestOperator,
    b: &NestOperator,
    eps: f64,
    gamma: f64,
    j: usize,
    tol: f64,
) -> Result<PerturbationCertificate> {
    let plan = megablock_plan(a.spec(), gamma, j)?;
    let blocks = plan.partition(a.spec());
    let cert = certify(a, b, eps, tol, &blocks)?;

    let atoms = plan.atoms_per_block().into_iter().max().unwrap_or(1);
    let bound = block_inverse_bound(2.0 / eps, atoms, a.norm() + eps)?;
    if cert.da_inv_norm > bound {
        return Err(Error::Precondition(format!(
            "||D_a^-1|| = {:e} exceeds the block-triangular bound {bound:e}",
            cert.da_inv_norm
        )));
    }
    Ok(cert)
}
