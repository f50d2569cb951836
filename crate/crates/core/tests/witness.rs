use proptest::prelude::*;
use stablerank_core::linalg;
use stablerank_core::nest::random_member;
use stablerank_core::sample::{random_block_upper, seeded_rng};
use stablerank_core::witness::{
    block_inverse_bound, check_certificate, megablock_plan, right_invertible_pair, validate_certificate,
    DEFAULT_TOL,
};
use stablerank_core::{Error, NestSpec};

fn growth_dims() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        Just(vec![1, 4]),
        Just(vec![2, 8]),
        Just(vec![1, 4, 20]),
        Just(vec![2, 8, 40]),
        Just(vec![1, 5, 30]),
        Just(vec![3, 12, 60]),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certificates_are_sound(
        dims in growth_dims(),
        seed in 0u64..1000,
        eps in prop_oneof![Just(0.5), Just(0.1), Just(0.02)],
    ) {
        let spec = NestSpec::new(dims).unwrap();
        let a = random_member(&spec, 2 * seed, 1.0).unwrap();
        let b = random_member(&spec, 2 * seed + 1, 1.0).unwrap();
        let cert = right_invertible_pair(&a, &b, eps, DEFAULT_TOL).unwrap();

        let n = spec.total_dim();
        let lhs = cert.a_pp.entries().dot(&cert.c1) + cert.b_p.entries().dot(&cert.c2);
        prop_assert!(linalg::operator_norm(&(lhs - linalg::eye(n))) <= DEFAULT_TOL);
        prop_assert!(linalg::operator_norm(&(a.entries() - cert.a_pp.entries())) < eps);
        prop_assert!(linalg::operator_norm(&(b.entries() - cert.b_p.entries())) < eps);
        prop_assert!(validate_certificate(&cert, &a, &b, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn captured_ranks_stay_within_budget(dims in growth_dims(), seed in 0u64..1000) {
        let spec = NestSpec::new(dims.clone()).unwrap();
        let a = random_member(&spec, seed, 1.0).unwrap();
        let b = random_member(&spec, seed ^ 0x5a5a, 1.0).unwrap();
        let cert = right_invertible_pair(&a, &b, 0.1, DEFAULT_TOL).unwrap();
        for (r, n) in cert.p_ranks.iter().zip(&dims) {
            prop_assert!(*r <= n / 2);
        }
    }

    #[test]
    fn captured_columns_are_fixed(dims in growth_dims(), seed in 0u64..1000) {
        // A' D_a^{-1} P^⊥ = P^⊥ up to rounding, so A_0 P^⊥ is tiny.
        let spec = NestSpec::new(dims).unwrap();
        let a = random_member(&spec, seed, 1.0).unwrap();
        let b = random_member(&spec, seed + 7, 1.0).unwrap();
        let cert = right_invertible_pair(&a, &b, 0.1, DEFAULT_TOL).unwrap();
        prop_assert!(cert.capture_residual <= 1e-9 * cert.da_inv_norm);
    }

    #[test]
    fn identity_defect_is_small(dims in growth_dims(), seed in 0u64..1000) {
        let spec = NestSpec::new(dims).unwrap();
        let a = random_member(&spec, seed, 1.0).unwrap();
        let b = random_member(&spec, seed + 3, 1.0).unwrap();
        let cert = right_invertible_pair(&a, &b, 0.02, DEFAULT_TOL).unwrap();
        prop_assert!(cert.identity_residual <= 1e-9 * (1.0 + 1.0 / cert.delta));
    }

    #[test]
    fn p_is_minimal(gamma in 0.05f64..4.0, j in 1usize..6) {
        let spec = NestSpec::new(vec![1]).unwrap();
        let plan = megablock_plan(&spec, gamma, j).unwrap();
        let holds = |p: usize| (1.0 + gamma).powi(p as i32) / p as f64 >= 5.0 * j as f64;
        prop_assert!(holds(plan.p));
        prop_assert!((1..plan.p).all(|p| !holds(p)));
    }

    #[test]
    fn megablock_ranks_grow(atoms in 5usize..16, base in 1usize..4) {
        let dims: Vec<usize> = (0..atoms).map(|k| base << k).collect();
        let plan = megablock_plan(&NestSpec::new(dims.clone()).unwrap(), 1.0, 1).unwrap();
        prop_assert_eq!(plan.p, 5);
        for k in 1..plan.m.len() {
            prop_assert!(plan.m[k] >= 5 * plan.m[k - 1]);
            prop_assert!(plan.m[k] >= 4 * plan.m[..k].iter().sum::<usize>());
        }
        let covered: usize = plan.partition(&NestSpec::new(dims.clone()).unwrap()).iter().sum();
        prop_assert_eq!(covered, dims.iter().sum::<usize>());
    }
}

#[test]
fn block_inverse_bound_holds_on_random_matrices() {
    let mut rng = seeded_rng(2024);
    let mut checked = 0;
    for trial in 0..200u64 {
        let blocks = 2 + (trial % 2) as usize;
        let h = [1.0, 2.0, 5.0][(trial / 2 % 3) as usize];
        let sizes: Vec<usize> = (0..blocks).map(|i| 1 + ((trial * 7 + i as u64 * 3) % 6) as usize).collect();
        let a = random_block_upper(&mut rng, &sizes, h);
        let norm = linalg::operator_norm(&a);
        let inv = linalg::operator_norm(&linalg::inverse(&a).unwrap());
        let bound = block_inverse_bound(h, blocks, norm).unwrap();
        assert!(inv <= bound, "trial {trial}: {inv} > {bound}");
        checked += 1;
    }
    assert_eq!(checked, 200);
}

#[test]
fn growth_failure_is_not_a_certificate() {
    let spec = NestSpec::new(vec![1, 3]).unwrap();
    let a = random_member(&spec, 0, 1.0).unwrap();
    let b = random_member(&spec, 1, 1.0).unwrap();
    assert!(matches!(
        right_invertible_pair(&a, &b, 0.1, DEFAULT_TOL),
        Err(Error::Growth { atom: 2 })
    ));
}

#[test]
fn tampered_certificates_fail() {
    let spec = NestSpec::new(vec![1, 4, 20]).unwrap();
    let a = random_member(&spec, 10, 1.0).unwrap();
    let b = random_member(&spec, 11, 1.0).unwrap();
    let cert = right_invertible_pair(&a, &b, 0.1, DEFAULT_TOL).unwrap();
    assert!(check_certificate(&cert, &a, &b, DEFAULT_TOL).unwrap().passed());

    let mut bad = cert.clone();
    bad.c2[[0, 0]] += linalg::C64::new(1e-3, 0.0);
    assert!(!validate_certificate(&bad, &a, &b, DEFAULT_TOL).unwrap());

    let mut bad = cert.clone();
    bad.eps = 0.5 * linalg::operator_norm(&(a.entries() - cert.a_pp.entries()));
    assert!(!validate_certificate(&bad, &a, &b, DEFAULT_TOL).unwrap());

    // A different A invalidates the perturbation bound.
    let other = random_member(&spec, 99, 1.0).unwrap();
    assert!(!validate_certificate(&cert, &other, &b, DEFAULT_TOL).unwrap());
}
