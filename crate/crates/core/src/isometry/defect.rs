use std::collections::BTreeSet;

use serde::Serialize;

use super::{IntMat, IsometryFamily, PartialMap};
use crate::error::{Error, Result};

/// `Y = [U, VU, .., V^{n-1} U]` on the common domain of its columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowFamily {
    pub n: usize,
    pub codomain_dim: usize,
    /// Basis vectors on which every `V^i U` (`i < n`) is defined.
    pub domain: Vec<usize>,
    /// Image index of each column of `Y`, block `i` holding `V^i U`.
    pub columns: Vec<usize>,
    /// `Y* Y = I`: the columns are distinct basis vectors.
    pub isometry: bool,
    /// `rank(I - Y Y*)`.
    pub defect: usize,
    /// `dim ker Y* - dim ker Y`.
    pub index_proxy: i64,
    /// Number of domain vectors on which `V^n U` is still defined.
    pub next_defined: usize,
    /// `ran Y ⟂ ran V^n U` on the common domain.
    pub next_orthogonal: bool,
}

impl RowFamily {
    /// Dense `codomain x (n |domain|)` 0/1 matrix.
    pub fn matrix(&self) -> IntMat {
        let mut y = IntMat::zeros((self.codomain_dim, self.columns.len()));
        for (c, &row) in self.columns.iter().enumerate() {
            y[[row, c]] = 1;
        }
        y
    }
}

/// Builds the row `[U, VU, .., V^{n-1} U]` from members `u` and `v`.
pub fn orthogonal_row_family(family: &IsometryFamily, u: usize, v: usize, n: usize) -> Result<RowFamily> {
    if n == 0 {
        return Err(Error::Precondition("row family needs n >= 1".into()));
    }
    let count = family.members.len();
    for idx in [u, v] {
        if idx >= count {
            return Err(Error::IndexOutOfRange { index: idx, count });
        }
    }
    let (u, v) = (&family.members[u], &family.members[v]);
    if !u.range().is_disjoint(&v.range()) {
        return Err(Error::Precondition(format!(
            "{} and {} do not have orthogonal ranges",
            u.name, v.name
        )));
    }

    let mut powers: Vec<PartialMap> = vec![u.clone()];
    for i in 1..=n {
        let next = v.compose(&powers[i - 1]);
        powers.push(next);
    }
    let domain: BTreeSet<usize> = powers[..n]
        .iter()
        .map(PartialMap::domain)
        .reduce(|a, b| a.intersection(&b).copied().collect())
        .unwrap_or_default();
    if domain.is_empty() {
        return Err(Error::Truncation(format!(
            "no basis vector keeps {}^i {} defined for all i < {n}",
            v.name, u.name
        )));
    }

    let columns: Vec<usize> = powers[..n]
        .iter()
        .flat_map(|p| domain.iter().map(move |&x| p.apply(x).expect("common domain")))
        .collect();
    let distinct: BTreeSet<usize> = columns.iter().copied().collect();
    let m = family.codomain_dim();
    let next = powers[n].restrict(&domain);

    Ok(RowFamily {
        n,
        codomain_dim: m,
        domain: domain.into_iter().collect(),
        isometry: distinct.len() == columns.len(),
        // Y Y* is the indicator of the column images.
        defect: m - distinct.len(),
        index_proxy: (m - distinct.len()) as i64 - (columns.len() - distinct.len()) as i64,
        next_defined: next.len(),
        next_orthogonal: next.range().is_disjoint(&distinct),
        columns,
    })
}

/// `I - Σ W_i W_i*` compressed to the interior (the first `domain_dim`
/// basis vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct CuntzDefect {
    pub matrix: IntMat,
    pub rank: usize,
    pub positive: bool,
}

pub fn cuntz_defect(family: &IsometryFamily) -> Result<CuntzDefect> {
    family.check_alignment()?;
    let d = family.domain_dim;
    let mut matrix = IntMat::eye(d);
    // W W* is the 0/1 indicator of ran W.
    for w in &family.members {
        for t in w.range().into_iter().filter(|&t| t < d) {
            matrix[[t, t]] -= 1;
        }
    }
    let positive = matrix.diag().iter().all(|&x| x >= 0);
    let rank = integer_rank(&matrix)?;
    Ok(CuntzDefect {
        matrix,
        rank,
        positive,
    })
}

/// Rank over the rationals by fraction-free elimination.
pub fn integer_rank(m: &IntMat) -> Result<usize> {
    let (rows, cols) = m.dim();
    let off_diagonal = m
        .indexed_iter()
        .any(|((i, j), &x)| i != j && x != 0);
    if !off_diagonal {
        return Ok(m.diag().iter().filter(|&&x| x != 0).count());
    }
    let overflow = || Error::Precondition("integer overflow in rank computation".into());
    let mut a: Vec<Vec<i128>> = m
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, pivot);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let lhs = a[rank][col].checked_mul(a[r][c]).ok_or_else(overflow)?;
                let rhs = a[r][col].checked_mul(a[rank][c]).ok_or_else(overflow)?;
                a[r][c] = lhs.checked_sub(rhs).ok_or_else(overflow)? / prev;
            }
            a[r][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
        if rank == rows {
            break;
        }
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::fock_left_shifts;

    #[test]
    fn single_proper_isometry_row() {
        let f = fock_left_shifts(2, 3).unwrap();
        let row = orthogonal_row_family(&f, 0, 1, 1).unwrap();
        assert_eq!(row.domain.len(), f.domain_dim);
        assert!(row.isometry);
        assert_eq!(row.defect, f.codomain_dim() - f.domain_dim);
        assert_eq!(row.index_proxy, row.defect as i64);
    }

    #[test]
    fn two_column_row_is_an_exact_isometry() {
        let f = fock_left_shifts(2, 3).unwrap();
        let row = orthogonal_row_family(&f, 0, 1, 2).unwrap();
        let y = row.matrix();
        assert_eq!(y.t().dot(&y), IntMat::eye(y.ncols()));
        assert!(row.defect > 0);
        assert!(row.next_orthogonal);
        // Words of length <= 1 keep L2 L1 defined at depth 3.
        assert_eq!(row.domain.len(), 3);
        assert_eq!(row.next_defined, 1);
    }

    #[test]
    fn truncation_error_when_domain_empties() {
        let f = fock_left_shifts(2, 2).unwrap();
        assert!(orthogonal_row_family(&f, 0, 1, 2).is_ok());
        assert!(matches!(
            orthogonal_row_family(&f, 0, 1, 3),
            Err(Error::Truncation(_))
        ));
        assert!(matches!(
            orthogonal_row_family(&f, 0, 0, 1),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            orthogonal_row_family(&f, 0, 5, 1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn fock_defect_is_the_vacuum() {
        for depth in 2..6 {
            let f = fock_left_shifts(2, depth).unwrap();
            let d = cuntz_defect(&f).unwrap();
            assert_eq!(d.rank, 1);
            assert!(d.positive);
            let mut vacuum = IntMat::zeros((f.domain_dim, f.domain_dim));
            vacuum[[0, 0]] = 1;
            assert_eq!(d.matrix, vacuum);
        }
    }

    #[test]
    fn unitary_and_pair_defects() {
        let labels: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let w = PartialMap::new("W", [(0, 2), (1, 3), (2, 0), (3, 1)]).unwrap();
        let f = IsometryFamily::new(labels.clone(), 4, vec![w]).unwrap();
        assert_eq!(cuntz_defect(&f).unwrap().rank, 0);

        let labels: Vec<String> = (0..7).map(|i| i.to_string()).collect();
        let a = PartialMap::new("A", [(0, 1), (1, 2), (2, 5)]).unwrap();
        let b = PartialMap::new("B", [(0, 3), (1, 4), (2, 6)]).unwrap();
        let f = IsometryFamily::new(labels, 5, vec![a, b]).unwrap();
        // Ranges inside the interior {0..4}: {1, 2} and {3, 4}.
        assert_eq!(cuntz_defect(&f).unwrap().rank, 5 - 2 * 2);
    }

    #[test]
    fn rank_by_elimination() {
        let m = IntMat::from_shape_vec((3, 3), vec![1, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap();
        assert_eq!(integer_rank(&m).unwrap(), 2);
        let m = IntMat::from_shape_vec((2, 3), vec![0, 1, 1, 0, 2, 2]).unwrap();
        assert_eq!(integer_rank(&m).unwrap(), 1);
        let m = IntMat::from_shape_vec((3, 2), vec![0, 1, 1, 0, 1, 1]).unwrap();
        assert_eq!(integer_rank(&m).unwrap(), 2);
        assert_eq!(integer_rank(&IntMat::eye(4)).unwrap(), 4);
        assert_eq!(integer_rank(&IntMat::zeros((2, 5))).unwrap(), 0);
    }
}
