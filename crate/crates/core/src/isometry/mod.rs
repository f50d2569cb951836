//! Exact isometry families built from index maps.
//!
//! Every member is a partial injective map between basis vectors, so all
//! isometry identities (`W*W = I` on the domain, `W_i* W_j = 0`) are exact
//! integer statements. Dense 0/1 matrices are produced only on request.

mod defect;
mod fock;
mod prime;

pub use defect::{cuntz_defect, integer_rank, orthogonal_row_family, CuntzDefect, RowFamily};
pub use fock::{fock_left_shifts, WordBasis};
pub use prime::{prime_coisometry_pair, prime_shift_pair};

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact integer matrix.
pub type IntMat = Array2<i64>;

/// A partial map `e_from -> e_to` on basis indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialMap {
    pub name: String,
    map: BTreeMap<usize, usize>,
}

impl PartialMap {
    /// Fails if two sources share a target, since the map would not be an
    /// isometry on its domain.
    pub fn new(name: impl Into<String>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let name = name.into();
        let mut map = BTreeMap::new();
        let mut targets = BTreeSet::new();
        for (from, to) in pairs {
            if !targets.insert(to) || map.insert(from, to).is_some() {
                return Err(Error::Precondition(format!(
                    "{name} is not injective (basis vector {from} -> {to})"
                )));
            }
        }
        Ok(Self { name, map })
    }

    pub fn apply(&self, i: usize) -> Option<usize> {
        self.map.get(&i).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.map.iter().map(|(&a, &b)| (a, b))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn domain(&self) -> BTreeSet<usize> {
        self.map.keys().copied().collect()
    }

    pub fn range(&self) -> BTreeSet<usize> {
        self.map.values().copied().collect()
    }

    pub fn adjoint(&self) -> PartialMap {
        PartialMap {
            name: format!("{}*", self.name),
            map: self.map.iter().map(|(&a, &b)| (b, a)).collect(),
        }
    }

    /// `self ∘ other`, defined where both steps are.
    pub fn compose(&self, other: &PartialMap) -> PartialMap {
        PartialMap {
            name: format!("{}{}", self.name, other.name),
            map: other
                .map
                .iter()
                .filter_map(|(&a, &b)| self.apply(b).map(|c| (a, c)))
                .collect(),
        }
    }

    /// Restriction to the basis vectors in `domain`.
    pub fn restrict(&self, domain: &BTreeSet<usize>) -> PartialMap {
        PartialMap {
            name: self.name.clone(),
            map: self
                .map
                .iter()
                .filter(|(a, _)| domain.contains(a))
                .map(|(&a, &b)| (a, b))
                .collect(),
        }
    }

    /// `rows x cols` 0/1 matrix with a one at `(to, from)`.
    pub fn to_matrix(&self, rows: usize, cols: usize) -> Result<IntMat> {
        let mut m = IntMat::zeros((rows, cols));
        for (from, to) in self.pairs() {
            if from >= cols || to >= rows {
                return Err(Error::Shape(format!(
                    "{} maps {from} -> {to}, outside a {rows}x{cols} matrix",
                    self.name
                )));
            }
            m[[to, from]] = 1;
        }
        Ok(m)
    }
}

/// Partial isometries on a common labelled basis.
///
/// Members act from the first `domain_dim` basis vectors into all
/// `labels.len()` of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyJson", into = "FamilyJson")]
pub struct IsometryFamily {
    pub labels: Vec<String>,
    pub domain_dim: usize,
    pub members: Vec<PartialMap>,
}

impl IsometryFamily {
    pub fn new(labels: Vec<String>, domain_dim: usize, members: Vec<PartialMap>) -> Result<Self> {
        let family = Self {
            labels,
            domain_dim,
            members,
        };
        family.check_alignment()?;
        Ok(family)
    }

    pub fn codomain_dim(&self) -> usize {
        self.labels.len()
    }

    pub fn member(&self, name: &str) -> Option<&PartialMap> {
        self.members.iter().find(|m| m.name == name)
    }

    pub fn check_alignment(&self) -> Result<()> {
        if self.domain_dim > self.codomain_dim() {
            return Err(Error::Shape(format!(
                "domain dimension {} exceeds codomain dimension {}",
                self.domain_dim,
                self.codomain_dim()
            )));
        }
        for m in &self.members {
            if let Some((from, to)) = m
                .pairs()
                .find(|&(from, to)| from >= self.domain_dim || to >= self.codomain_dim())
            {
                return Err(Error::Shape(format!(
                    "{} maps {from} -> {to} outside domain {} / codomain {}",
                    m.name,
                    self.domain_dim,
                    self.codomain_dim()
                )));
            }
        }
        Ok(())
    }

    /// Dense `codomain x domain` matrix of a member.
    pub fn matrix(&self, index: usize) -> Result<IntMat> {
        self.members[index].to_matrix(self.codomain_dim(), self.domain_dim)
    }

    /// `W_i* W_j` from index sets: the domain indicator of `W_i` when
    /// `i == j`, and the partial map `W_i* W_j` otherwise.
    pub fn gram(&self, i: usize, j: usize) -> Result<IntMat> {
        let (wi, wj) = (&self.members[i], &self.members[j]);
        wi.adjoint()
            .compose(wj)
            .to_matrix(self.domain_dim, self.domain_dim)
    }

    /// Every member is total on the domain and the ranges are pairwise
    /// disjoint: `W_i* W_j = δ_ij I` exactly.
    pub fn is_orthogonal_isometry_family(&self) -> bool {
        let total = self.members.iter().all(|m| m.len() == self.domain_dim);
        total && self.ranges_disjoint()
    }

    pub fn ranges_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.members
            .iter()
            .all(|m| m.range().into_iter().all(|t| seen.insert(t)))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyJson {
    labels: Vec<String>,
    domain_dim: usize,
    members: Vec<String>,
    maps: Vec<MapJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapJson {
    member: String,
    from: String,
    to: String,
}

impl From<IsometryFamily> for FamilyJson {
    fn from(f: IsometryFamily) -> Self {
        let maps = f
            .members
            .iter()
            .flat_map(|m| {
                let labels = &f.labels;
                m.pairs().map(move |(a, b)| MapJson {
                    member: m.name.clone(),
                    from: labels[a].clone(),
                    to: labels[b].clone(),
                })
            })
            .collect();
        FamilyJson {
            members: f.members.iter().map(|m| m.name.clone()).collect(),
            labels: f.labels,
            domain_dim: f.domain_dim,
            maps,
        }
    }
}

impl TryFrom<FamilyJson> for IsometryFamily {
    type Error = Error;

    fn try_from(j: FamilyJson) -> Result<Self> {
        let index: BTreeMap<&str, usize> = j
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        if index.len() != j.labels.len() {
            return Err(Error::Shape("duplicate basis labels".into()));
        }
        let lookup = |l: &str| {
            index
                .get(l)
                .copied()
                .ok_or_else(|| Error::Shape(format!("unknown basis label {l:?}")))
        };
        let mut members = Vec::with_capacity(j.members.len());
        for name in &j.members {
            let pairs = j
                .maps
                .iter()
                .filter(|m| &m.member == name)
                .map(|m| Ok((lookup(&m.from)?, lookup(&m.to)?)))
                .collect::<Result<Vec<_>>>()?;
            members.push(PartialMap::new(name.clone(), pairs)?);
        }
        if let Some(m) = j.maps.iter().find(|m| !j.members.contains(&m.member)) {
            return Err(Error::Shape(format!("map entry for unknown member {:?}", m.member)));
        }
        IsometryFamily::new(j.labels, j.domain_dim, members)
    }
}
