use stablerank_core::linalg;
use stablerank_core::nest::random_member;
use stablerank_core::witness::{megablock_plan, right_invertible_pair_megablock, DEFAULT_TOL};
use stablerank_core::NestSpec;

fn powers(k: u32) -> NestSpec {
    NestSpec::new((0..k).map(|i| 1usize << i).collect()).unwrap()
}

#[test]
fn plan_for_twelve_doublings() {
    let plan = megablock_plan(&powers(12), 1.0, 1).unwrap();
    assert_eq!(plan.p, 5);
    assert_eq!(plan.megablocks, vec![(1, 5), (6, 10)]);
    assert_eq!(plan.m, vec![31, 992]);
    assert!(plan.m[1] >= 5 * plan.m[0] && plan.m[1] >= 4 * plan.m[0]);
    assert_eq!(megablock_plan(&powers(12), 1.0, 2).unwrap().p, 6);
}

#[test]
fn pipeline_on_ten_doublings() {
    let spec = powers(10);
    let a = random_member(&spec, 0, 1.0).unwrap();
    let b = random_member(&spec, 1, 1.0).unwrap();
    let cert = right_invertible_pair_megablock(&a, &b, 0.1, 1.0, 1, DEFAULT_TOL).unwrap();
    assert_eq!(cert.blocks, vec![31, 992]);
    assert!(cert.residual <= DEFAULT_TOL);
    assert!(cert.pert_a < 0.1 && cert.pert_b < 0.1);
    let n = spec.total_dim();
    let lhs = cert.a_pp.entries().dot(&cert.c1) + cert.b_p.entries().dot(&cert.c2);
    assert!(linalg::operator_norm(&(lhs - linalg::eye(n))) <= DEFAULT_TOL);
}
