mod common;

use amgenc_core::velocity::{init_weights, Egnn, EgnnConfig};
use amgenc_core::{Lattice, Vec3};
use common::{max_abs_diff, naive_egnn, random_logits, rng};
use nalgebra::Matrix3;
use ndarray::Array2;
use rand::Rng;

fn small_config(n_elements: usize) -> EgnnConfig {
    EgnnConfig {
        layers: 2,
        hidden_dim: 6,
        vector_channels: 3,
        r_cut: 4.0,
        n_norm: 5.0,
        attention_dim: 4,
        n_y: 2,
        n_elements,
    }
}

fn random_positions(r: &mut impl Rng, lattice: &Lattice, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|_| lattice.from_fractional(&Vec3::new(r.random(), r.random(), r.random())))
        .collect()
}

#[test]
fn matches_direct_transcription() {
    let mut r = rng(21);
    let cfg = small_config(3);
    for (seed, lattice) in [
        (1, Lattice::cubic(9.0).unwrap()),
        (2, Lattice::from_rows([[9.5, 0.0, 0.0], [1.5, 9.0, 0.0], [-1.0, 0.8, 10.0]]).unwrap()),
    ] {
        let w = init_weights(&cfg, seed).unwrap();
        let net = Egnn::from_weights(cfg.clone(), &w).unwrap();
        let x = random_positions(&mut r, &lattice, 40);
        let l = random_logits(&mut r, 40, 3, 1.0);
        let y = [0.3, -1.2];
        let out = net.forward(&lattice, &x, &l, &y, 0.4).unwrap();
        let (v_pos, v_el) = naive_egnn(&w, &cfg, &lattice, &x, &l, &y, 0.4);
        let flat = |v: &[Vec3]| v.iter().flat_map(|p| [p[0], p[1], p[2]]).collect::<Vec<_>>();
        assert!(max_abs_diff(&flat(&out.v_pos), &flat(&v_pos)) < 1e-10);
        assert!(max_abs_diff(out.v_el.iter(), v_el.iter()) < 1e-10);
    }
}

/// Signed permutation matrices: the symmetry group of a cube.
fn cube_symmetries() -> Vec<Matrix3<f64>> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::new();
    for p in perms {
        for signs in 0..8 {
            let mut m = Matrix3::zeros();
            for (row, &col) in p.iter().enumerate() {
                m[(row, col)] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            out.push(m);
        }
    }
    out
}

#[test]
fn equivariant_on_a_cubic_cell() {
    let lattice = Lattice::cubic(10.0).unwrap();
    let mut r = rng(4);
    let syms = cube_symmetries();
    for draw in 0..10 {
        let cfg = small_config(4);
        let net = Egnn::random(cfg, 100 + draw).unwrap();
        let x = random_positions(&mut r, &lattice, 30);
        let l = random_logits(&mut r, 30, 4, 1.0);
        let y = [1.0, 0.5];
        let base = net.forward(&lattice, &x, &l, &y, 0.2).unwrap();

        let rot = syms[r.random_range(0..syms.len())];
        let xr: Vec<Vec3> = x.iter().map(|p| lattice.wrap(&(rot * p))).collect();
        let out = net.forward(&lattice, &xr, &l, &y, 0.2).unwrap();
        for (a, b) in out.v_pos.iter().zip(&base.v_pos) {
            assert!((a - rot * b).norm() < 1e-9);
        }
        assert!(max_abs_diff(out.v_el.iter(), base.v_el.iter()) < 1e-9);

        let shift = Vec3::new(r.random_range(-20.0..20.0), r.random(), r.random_range(-3.0..3.0));
        let xt: Vec<Vec3> = x.iter().map(|p| lattice.wrap(&(p + shift))).collect();
        let out = net.forward(&lattice, &xt, &l, &y, 0.2).unwrap();
        for (a, b) in out.v_pos.iter().zip(&base.v_pos) {
            assert!((a - b).norm() < 1e-9);
        }

        let mut perm: Vec<usize> = (0..30).collect();
        perm.reverse();
        perm.swap(3, 17);
        let xp: Vec<Vec3> = perm.iter().map(|&i| x[i]).collect();
        let lp = Array2::from_shape_fn((30, 4), |(i, j)| l[[perm[i], j]]);
        let out = net.forward(&lattice, &xp, &lp, &y, 0.2).unwrap();
        for (i, &src) in perm.iter().enumerate() {
            assert!((out.v_pos[i] - base.v_pos[src]).norm() < 1e-9);
            for j in 0..4 {
                assert!((out.v_el[[i, j]] - base.v_el[[src, j]]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn unwrapped_positions_give_the_same_velocities() {
    let lattice = Lattice::cubic(10.0).unwrap();
    let mut r = rng(9);
    let net = Egnn::random(small_config(3), 5).unwrap();
    let x = random_positions(&mut r, &lattice, 25);
    let l = random_logits(&mut r, 25, 3, 1.0);
    let base = net.forward(&lattice, &x, &l, &[0.0, 0.0], 0.5).unwrap();
    let mut moved = x.clone();
    moved[0] += Vec3::new(10.0, -20.0, 0.0);
    moved[7] -= Vec3::new(0.0, 0.0, 30.0);
    let out = net.forward(&lattice, &moved, &l, &[0.0, 0.0], 0.5).unwrap();
    for (a, b) in out.v_pos.iter().zip(&base.v_pos) {
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn isolated_atoms_only_see_their_own_features() {
    let lattice = Lattice::cubic(30.0).unwrap();
    let net = Egnn::random(small_config(3), 2).unwrap();
    let x = vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(15.0, 15.0, 15.0)];
    let l = Array2::from_shape_vec((2, 3), vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    let out = net.forward(&lattice, &x, &l, &[0.0, 0.0], 0.1).unwrap();
    assert_eq!(out.v_pos, vec![Vec3::zeros(); 2]);
    assert_eq!(out.v_el.row(0), out.v_el.row(1));
}

#[test]
fn shape_errors() {
    let lattice = Lattice::cubic(10.0).unwrap();
    let net = Egnn::random(small_config(3), 2).unwrap();
    let x = vec![Vec3::zeros()];
    assert!(net.forward(&lattice, &x, &Array2::zeros((1, 4)), &[0.0, 0.0], 0.0).is_err());
    assert!(net.forward(&lattice, &x, &Array2::zeros((1, 3)), &[0.0], 0.0).is_err());
    let tiny = Lattice::cubic(6.0).unwrap();
    assert!(net.forward(&tiny, &x, &Array2::zeros((1, 3)), &[0.0, 0.0], 0.0).is_err());
}
