use super::{IsometryFamily, PartialMap};
use crate::error::{Error, Result};
use crate::nest::NestSpec;

fn basis_labels(spec: &NestSpec) -> Vec<String> {
    spec.atom_dims()
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| (1..=n).map(move |j| format!("e({},{j})", k + 1)))
        .collect()
}

/// `p^a q^b`, or `None` when it overflows.
fn prime_power(p: usize, a: usize, q: usize, b: usize) -> Option<usize> {
    let a = u32::try_from(a).ok()?;
    let b = u32::try_from(b).ok()?;
    p.checked_pow(a)?.checked_mul(q.checked_pow(b)?)
}

/// Partial map `e_{k,j} -> e_{f(k,j),1}`, keeping only images inside the
/// truncation.
fn atom_map(spec: &NestSpec, name: &str, f: impl Fn(usize, usize) -> Option<usize>) -> Result<PartialMap> {
    let offsets = spec.cumulative();
    let start = |k: usize| offsets[k - 1] - spec.atom_dims()[k - 1];
    let atoms = spec.num_atoms();
    let mut pairs = Vec::new();
    for k in 1..=atoms {
        for j in 1..=spec.atom_dims()[k - 1] {
            if let Some(target) = f(k, j).filter(|&t| t <= atoms) {
                pairs.push((start(k) + j - 1, start(target)));
            }
        }
    }
    let map = PartialMap::new(name, pairs)?;
    if map.is_empty() {
        return Err(Error::EmptyFamily(format!(
            "{name} has no image inside {atoms} atoms"
        )));
    }
    Ok(map)
}

/// The co-isometries `U*, V*` with `U* e_{k,j} = e_{2^k 3^j, 1}` and
/// `V* e_{k,j} = e_{5^k 3^j, 1}`, truncated to the atoms of `spec`.
///
/// Their adjoints `U`, `V` lie in the nest algebra: `U` sends atom
/// `2^k 3^j` back to atom `k`.
pub fn prime_coisometry_pair(spec: &NestSpec) -> Result<IsometryFamily> {
    let u = atom_map(spec, "U*", |k, j| prime_power(2, k, 3, j))?;
    let v = atom_map(spec, "V*", |k, j| prime_power(5, k, 3, j))?;
    IsometryFamily::new(basis_labels(spec), spec.total_dim(), vec![u, v])
}

/// The shifts `U e_{k,j} = e_{2^j 3^k, 1}` and `V e_{k,j} = e_{5^j 7^k, 1}`
/// on the truncated basis of `spec`.
pub fn prime_shift_pair(spec: &NestSpec) -> Result<IsometryFamily> {
    let u = atom_map(spec, "U", |k, j| prime_power(2, j, 3, k))?;
    let v = atom_map(spec, "V", |k, j| prime_power(5, j, 7, k))?;
    IsometryFamily::new(basis_labels(spec), spec.total_dim(), vec![u, v])
}
