mod common;

use amgenc_core::noise::{derive_seed, sample_element_noise, sample_noise, sample_position_noise};
use amgenc_core::Lattice;
use common::meg;

#[test]
fn centers_follow_the_marginals() {
    let t = meg();
    let n = 200_000;
    let draw = sample_element_noise(n, &t, 0.25, 1).unwrap();
    let mut counts = vec![0usize; t.len()];
    for &c in &draw.centers {
        counts[c] += 1;
    }
    for (k, &f) in t.frequencies().iter().enumerate() {
        let sd = (f * (1.0 - f) / n as f64).sqrt();
        let p = counts[k] as f64 / n as f64;
        assert!((p - f).abs() < 5.0 * sd + 1e-12, "element {k}: {p} vs {f}");
    }
}

#[test]
fn residuals_have_the_requested_spread() {
    let t = meg();
    let sigma = 0.25;
    let draw = sample_element_noise(20_000, &t, sigma, 2).unwrap();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0.0;
    for (row, &k) in draw.logits.rows().into_iter().zip(&draw.centers) {
        for (j, &v) in row.iter().enumerate() {
            let z = v - if j == k { 1.0 } else { 0.0 };
            sum += z;
            sum_sq += z * z;
            count += 1.0;
        }
    }
    let mean = sum / count;
    let sd = (sum_sq / count - mean * mean).sqrt();
    assert!(mean.abs() < 0.005);
    assert!((sd - sigma).abs() < 0.005, "sd {sd}");
}

#[test]
fn positions_fill_the_cell_uniformly() {
    let lat = Lattice::from_rows([[10.0, 0.0, 0.0], [3.0, 9.0, 0.0], [1.0, 1.0, 8.0]]).unwrap();
    let x = sample_position_noise(40_000, &lat, 3);
    let mut bins = [0usize; 8];
    for p in &x {
        let f = lat.to_fractional(p);
        let b = (f[0] >= 0.5) as usize + 2 * (f[1] >= 0.5) as usize + 4 * (f[2] >= 0.5) as usize;
        bins[b] += 1;
    }
    for b in bins {
        assert!((b as f64 - 5000.0).abs() < 5.0 * (5000.0f64 * 7.0 / 8.0).sqrt());
    }
}

#[test]
fn same_seed_same_draw() {
    let t = meg();
    let lat = Lattice::cubic(10.0).unwrap();
    assert_eq!(sample_noise(50, &t, &lat, 0.25, 8).unwrap(), sample_noise(50, &t, &lat, 0.25, 8).unwrap());
    assert_ne!(derive_seed(8, 0), derive_seed(8, 1));
    assert_ne!(derive_seed(8, 0), derive_seed(9, 0));
}
