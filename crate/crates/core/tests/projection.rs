mod common;

use amgenc_core::charge::{hard_charge, hard_charge_from_logits, soft_charge_gradient};
use amgenc_core::projection::{discrete_project, gauss_newton_step, reinterpolate};
use amgenc_core::{ElementTable, Error};
use common::{brute_force_repair, meg, random_logits, random_table, rng};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn dp_matches_exhaustive_search() {
    let mut r = rng(17);
    for _ in 0..300 {
        let n = r.random_range(1..=7);
        let d = r.random_range(2..=4);
        let t = random_table(&mut r, d);
        let l = random_logits(&mut r, n, d, 2.0);
        match (discrete_project(&l, &t), brute_force_repair(&l, &t)) {
            (Ok(rep), Some((cost, _))) => {
                assert_eq!(rep.total_cost, cost);
                assert_eq!(hard_charge(&rep.assignments, &t).unwrap(), 0);
            }
            (Err(Error::InfeasibleRepair { .. }), None) => {}
            (a, b) => panic!("disagreement: {a:?} vs {b:?}"),
        }
    }
}

#[test]
fn silica_fixture_matches_exhaustive_search() {
    // Si Si O O O with Q = +2, all 3^5 assignments enumerated
    let t = ElementTable::silica(0.1);
    let l = array![
        [3.0, 0.0, 0.5],
        [1.0, 0.9, 0.2],
        [0.0, 2.0, 1.0],
        [0.0, 2.0, 1.5],
        [0.0, 2.0, 0.1],
    ];
    let rep = discrete_project(&l, &t).unwrap();
    let (cost, assignment) = brute_force_repair(&l, &t).unwrap();
    assert_eq!(rep.total_cost, cost);
    assert_eq!(rep.assignments, assignment);
    assert_eq!(rep.swaps.len(), 2);
}

#[test]
fn large_instance_is_balanced() {
    let t = meg();
    let mut r = rng(2);
    let l = random_logits(&mut r, 800, t.len(), 3.0);
    let rep = discrete_project(&l, &t).unwrap();
    assert_eq!(hard_charge(&rep.assignments, &t).unwrap(), 0);
    assert_eq!(rep.charge_before, hard_charge_from_logits(&l, &t));
    let cost: f64 = rep
        .swaps
        .iter()
        .map(|s| l[[s.atom, s.from]] - l[[s.atom, s.to]])
        .sum();
    assert!((cost - rep.total_cost).abs() < 1e-9);
}

#[test]
fn gauss_newton_update_is_rank_one_along_gradient() {
    let t = meg();
    let mut r = rng(8);
    for _ in 0..50 {
        let l = random_logits(&mut r, 20, t.len(), 1.0);
        let tau = 0.13;
        let out = gauss_newton_step(&l, &t, tau).unwrap();
        let q = out.residual_charge_before as f64;
        let g = soft_charge_gradient(&l, tau, &t);
        let delta: Array2<f64> = &out.corrected_logits - &l;
        let dot: f64 = delta.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        assert!((dot + q).abs() < 1e-9, "first-order residual {}", dot + q);
        // delta = -(q / |g|^2) g entrywise
        let s = -q / out.gradient_norm_sq;
        for (dv, gv) in delta.iter().zip(g.iter()) {
            assert!((dv - s * gv).abs() < 1e-12 * (1.0 + dv.abs()));
        }
    }
}

#[test]
fn reinterpolation_is_linear() {
    let mut r = rng(1);
    let e0 = random_logits(&mut r, 3, 4, 1.0);
    let e1 = random_logits(&mut r, 3, 4, 1.0);
    let mid = reinterpolate(&e0, &e1, 0.3);
    let want = &e0 * 0.7 + &e1 * 0.3;
    assert!(common::max_abs_diff(mid.iter(), want.iter()) < 1e-15);
}

#[test]
fn infeasible_parity_reports_nearest() {
    let t = ElementTable::new(vec!["A".into(), "B".into()], vec![2, -2], vec![0.5, 0.5], None).unwrap();
    // three atoms: charge is always odd multiple of 2 away from zero
    let l = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    match discrete_project(&l, &t) {
        Err(Error::InfeasibleRepair { residual: 2, nearest }) => assert_eq!(nearest.abs(), 2),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn repair_cost_never_beaten_by_single_swaps(seed in any::<u64>()) {
        let t = ElementTable::silica(0.1);
        let mut r = rng(seed);
        let n = r.random_range(2..7);
        let l = random_logits(&mut r, n, 3, 2.0);
        if let Ok(rep) = discrete_project(&l, &t) {
            prop_assert_eq!(hard_charge(&rep.assignments, &t).unwrap(), 0);
            prop_assert!(rep.total_cost >= 0.0);
            let (cost, _) = brute_force_repair(&l, &t).unwrap();
            prop_assert_eq!(rep.total_cost, cost);
        }
    }
}
