//! Independent oracles and fixture builders shared by the integration tests
//! and the acceptance runner.
#![allow(dead_code)]

use amgenc_core::io::{parse_charge_table, MEG_TABLE, SIO2_TABLE};
use amgenc_core::velocity::WeightContainer;
use amgenc_core::{ElementTable, EgnnConfig, Lattice, Vec3};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn meg() -> ElementTable {
    parse_charge_table(MEG_TABLE).unwrap().table
}

pub fn sio2() -> (ElementTable, Vec<Option<f64>>) {
    let t = parse_charge_table(SIO2_TABLE).unwrap();
    (t.table, t.radii)
}

/// Table with `d` elements, random charges in [-3, 3] and uniform frequencies.
pub fn random_table(r: &mut ChaCha8Rng, d: usize) -> ElementTable {
    let names = (0..d).map(|i| format!("E{i}")).collect();
    let charges = (0..d).map(|_| r.random_range(-3..=3)).collect();
    ElementTable::new(names, charges, vec![1.0 / d as f64; d], None).unwrap()
}

pub fn random_logits(r: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| r.random_range(-scale..scale))
}

/// Minimum repair cost by enumerating every assignment, summing per-atom
/// costs in atom order. `None` when no assignment balances the charge.
pub fn brute_force_repair(logits: &Array2<f64>, table: &ElementTable) -> Option<(f64, Vec<usize>)> {
    let (n, d) = logits.dim();
    let charges = table.charges();
    let top: Vec<f64> = (0..n)
        .map(|i| logits.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut a = vec![0usize; n];
    loop {
        let q: i64 = a.iter().map(|&e| charges[e]).sum();
        if q == 0 {
            let mut cost = 0.0;
            for i in 0..n {
                cost += top[i] - logits[[i, a[i]]];
            }
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, a.clone()));
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            a[k] += 1;
            if a[k] < d {
                break;
            }
            a[k] = 0;
            k += 1;
        }
    }
}

/// Minimum-image vector from `a` to `b` by explicit search over neighbouring images.
pub fn min_image_search(lattice: &Lattice, a: &Vec3, b: &Vec3) -> Vec3 {
    let raw = b - a;
    let f = lattice.to_fractional(&raw);
    let base = Vec3::new(f[0].round(), f[1].round(), f[2].round());
    let mut best = raw;
    let mut best_norm = f64::INFINITY;
    for i in -2..=2 {
        for j in -2..=2 {
            for k in -2..=2 {
                let s = base - Vec3::new(i as f64, j as f64, k as f64);
                let v = raw - lattice.from_fractional(&s);
                if v.norm() < best_norm {
                    best_norm = v.norm();
                    best = v;
                }
            }
        }
    }
    best
}

fn mat(w: &WeightContainer, name: &str) -> (Vec<usize>, Vec<f64>) {
    let t = w.get(name).unwrap_or_else(|| panic!("missing {name}"));
    (t.shape.clone(), t.values.clone())
}

/// `x W + b` for a single row, with `W` stored `[in, out]`.
fn linear(w: &WeightContainer, prefix: &str, x: &[f64]) -> Vec<f64> {
    let (shape, wv) = mat(w, &format!("{prefix}.weight"));
    let (_, bv) = mat(w, &format!("{prefix}.bias"));
    let (fan_in, fan_out) = (shape[0], shape[1]);
    assert_eq!(x.len(), fan_in);
    (0..fan_out)
        .map(|o| bv[o] + (0..fan_in).map(|i| x[i] * wv[i * fan_out + o]).sum::<f64>())
        .collect()
}

fn mlp(w: &WeightContainer, prefix: &str, x: &[f64]) -> Vec<f64> {
    let h = linear(w, &format!("{prefix}.lin1"), x);
    let (_, gamma) = mat(w, &format!("{prefix}.norm.weight"));
    let (_, beta) = mat(w, &format!("{prefix}.norm.bias"));
    let n = h.len() as f64;
    let mean = h.iter().sum::<f64>() / n;
    let var = h.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let act: Vec<f64> = h
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let z = (v - mean) / (var + 1e-5).sqrt() * gamma[k] + beta[k];
            z / (1.0 + (-z).exp())
        })
        .collect();
    linear(w, &format!("{prefix}.lin2"), &act)
}

/// Direct per-atom, per-neighbour transcription of the network update rules,
/// with neighbours found by an all-pairs minimum-image search.
pub fn naive_egnn(
    w: &WeightContainer,
    cfg: &EgnnConfig,
    lattice: &Lattice,
    x: &[Vec3],
    logits: &Array2<f64>,
    y: &[f64],
    t: f64,
) -> (Vec<Vec3>, Array2<f64>) {
    let n = x.len();
    let k = cfg.vector_channels;
    let rc = cfg.r_cut;
    // neighbours: (j, displacement x_i - x_j under min image)
    let mut nbrs: Vec<Vec<(usize, Vec3)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = -min_image_search(lattice, &x[i], &x[j]);
            if d.norm() < rc {
                nbrs[i].push((j, d));
            }
        }
    }
    let yp = linear(w, "property", y);
    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut h0 = vec![t];
            h0.extend(logits.row(i).iter());
            h0.extend(&yp);
            linear(w, "input", &h0)
        })
        .collect();
    // coordinate channels as displacements relative to the input position
    let mut rel: Vec<Vec<Vec3>> = vec![vec![Vec3::zeros(); k]; n];
    for l in 0..cfg.layers {
        let p = |m: &str| format!("layers.{l}.{m}");
        let mut new_h = h.clone();
        for i in 0..n {
            let mut agg = vec![0.0; cfg.hidden_dim];
            for &(j, d) in &nbrs[i] {
                let r = d.norm();
                let mut inp = h[i].clone();
                inp.extend(&h[j]);
                inp.push(2.0 * (r * r / (rc * rc)).tanh() - 1.0);
                let m = mlp(w, &p("edge"), &inp);
                let gate = mlp(w, &p("attention"), &m)[0];
                let alpha = 1.0 / (1.0 + (-gate).exp());
                let fc = 2.0 * (1.0 - r.min(rc) / rc).tanh().powi(2);
                for (a, mv) in agg.iter_mut().zip(&m) {
                    *a += fc * alpha * mv / cfg.n_norm;
                }
            }
            let mut inp = h[i].clone();
            inp.extend(&agg);
            let dh = mlp(w, &p("node"), &inp);
            for (v, dv) in new_h[i].iter_mut().zip(dh) {
                *v += dv;
            }
        }
        h = new_h;
        let mut new_rel = rel.clone();
        for i in 0..n {
            for &(j, d) in &nbrs[i] {
                let r = d.norm();
                let mut inp = h[i].clone();
                inp.extend(&h[j]);
                inp.push(2.0 * (r * r / (rc * rc)).tanh() - 1.0);
                let phi = mlp(w, &p("coord"), &inp);
                for a in 0..k {
                    for b in 0..k {
                        let db = d + rel[i][b] - rel[j][b];
                        new_rel[i][a] += phi[a * k + b] / cfg.n_norm * db;
                    }
                }
            }
        }
        rel = new_rel;
    }
    let scale = mat(w, "head.position_scale").1[0];
    let v_pos = rel.iter().map(|r| scale * r[0]).collect();
    let d_e = cfg.n_elements;
    let mut v_el = Array2::zeros((n, d_e));
    for i in 0..n {
        for (j, v) in linear(w, "head.element", &h[i]).into_iter().enumerate() {
            v_el[[i, j]] = v;
        }
    }
    (v_pos, v_el)
}

pub fn max_abs_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Three-membered silica ring: Si3O3 in a plane, Si-O bonds of 1.60 Å and no
/// Si-Si or O-O contacts within bonding range.
pub fn three_ring() -> (Vec<Vec3>, Vec<usize>) {
    let c = Vec3::new(10.0, 10.0, 10.0);
    let mut pos = Vec::new();
    let mut species = Vec::new();
    for k in 0..3 {
        let a = k as f64 * 2.0 * std::f64::consts::PI / 3.0;
        pos.push(c + 1.8 * Vec3::new(a.cos(), a.sin(), 0.0));
        species.push(0);
        let b = a + std::f64::consts::PI / 3.0;
        pos.push(c + 1.26 * Vec3::new(b.cos(), b.sin(), 0.0));
        species.push(1);
    }
    (pos, species)
}
