use ndarray_linalg::Eig;
use proptest::prelude::*;
use stablerank_core::linalg::{self, CMat, C64};
use stablerank_core::riesz::{
    corner_projection, embed_corner, random_corner, riesz_corner, riesz_idempotent, similarity_swap,
    validate_report,
};
use stablerank_core::sample::{random_matrix, seeded_rng};

/// Spectral projector for eigenvalues inside `|z| < 3/4`, from an
/// eigendecomposition `B = X Λ X^{-1}`.
fn spectral_projector(b: &CMat) -> CMat {
    let (values, vectors) = b.clone().eig().unwrap();
    let inv = linalg::inverse(&vectors).unwrap();
    let n = b.nrows();
    let mut mask = CMat::zeros((n, n));
    for (i, v) in values.iter().enumerate() {
        if v.norm() < 0.75 {
            mask[[i, i]] = C64::new(1.0, 0.0);
        }
    }
    vectors.dot(&mask).dot(&inv)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pipeline_invariants(m in 1usize..9, pad in 1usize..5, seed in any::<u64>()) {
        let a = random_corner(m, seed).unwrap();
        let r = riesz_corner(&a, pad, 1e-3, 256, seed).unwrap();
        prop_assert!(r.idempotency_residual <= 1e-8);
        prop_assert!(r.commutation_residual <= 1e-8);
        prop_assert!(r.resolvent_max <= 2.0 * r.m_sup);
        prop_assert!(r.p_minus_e <= r.eps_prime);
        prop_assert!((r.s_minus_i - r.p_minus_e).abs() <= 1e-12);
        prop_assert!(r.corner_distance < r.eps + r.eps_double_prime);
        prop_assert!(validate_report(&r).unwrap());
    }

    #[test]
    fn quadrature_matches_the_spectral_projector(m in 1usize..7, pad in 1usize..4, seed in any::<u64>()) {
        let a = random_corner(m, seed).unwrap();
        let a_prime = embed_corner(&a, pad).unwrap();
        let n = m + pad;
        let g = random_matrix(&mut seeded_rng(seed ^ 1), n, n);
        let b = &a_prime + &linalg::scale(&g, 1e-4 / linalg::operator_norm(&g));
        let p = riesz_idempotent(&b, 256).unwrap();
        prop_assert!(linalg::operator_norm(&(p - spectral_projector(&b))) <= 1e-8);
    }

    #[test]
    fn swap_norm_identity(m in 1usize..6, pad in 1usize..4, seed in any::<u64>()) {
        let a = random_corner(m, seed).unwrap();
        let n = m + pad;
        let g = random_matrix(&mut seeded_rng(seed), n, n);
        let b = embed_corner(&a, pad).unwrap() + linalg::scale(&g, 1e-4 / linalg::operator_norm(&g));
        let p = riesz_idempotent(&b, 256).unwrap();
        let e = corner_projection(m, pad);
        let s = similarity_swap(&p, &e).unwrap();
        let lhs = linalg::operator_norm(&(&s - &linalg::eye(n)));
        let rhs = linalg::operator_norm(&(&p - &e));
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        prop_assert!(linalg::operator_norm(&(s.dot(&e) - p.dot(&s))) <= 1e-10);
    }
}

#[test]
fn report_is_deterministic() {
    let a = random_corner(6, 9).unwrap();
    let x = serde_json::to_string(&riesz_corner(&a, 2, 1e-3, 256, 9).unwrap()).unwrap();
    let y = serde_json::to_string(&riesz_corner(&a, 2, 1e-3, 256, 9).unwrap()).unwrap();
    assert_eq!(x, y);
}
