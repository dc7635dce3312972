mod common;

use std::f64::consts::PI;

use common::*;
use fractal_gap::fup::*;
use fractal_gap::sets::{gen_cantor, Ambient, CantorSpec, IntervalCover};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn cantor_circle(depth: u32) -> IntervalCover {
    gen_cantor(&CantorSpec::middle_third(depth)).unwrap().to_circle().unwrap()
}

fn points(ts: &[f64]) -> IntervalCover {
    IntervalCover::new(ts.iter().map(|&t| (t, t)).collect(), 1e-9, Ambient::Circle).unwrap()
}

fn tight() -> NormOptions {
    NormOptions { tol: 1e-10, max_iter: 20_000, ..NormOptions::default() }
}

fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
    let mut r = rng(seed);
    (0..n).map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn power_iteration_matches_svd() {
    let lambda = cantor_circle(6);
    let m = build_fup_matrix(&lambda, 2f64.powi(-6), 0.9, 0.6, &FupOptions::default()).unwrap();
    let k = m.masked_size();
    assert!((100..=400).contains(&k), "masked size {k}");
    let dense = m.to_dense().unwrap();
    let na = DMatrix::from_row_slice(k, k, &dense.data);
    let sigma = na.singular_values().max();
    let fft = m.norm(&tight());
    let direct = operator_norm(&dense, &tight());
    assert!(fft.converged && direct.converged);
    assert!((fft.value - sigma).abs() < 1e-8 * sigma, "{} vs {sigma}", fft.value);
    assert!((direct.value - sigma).abs() < 1e-8 * sigma, "{} vs {sigma}", direct.value);
}

#[test]
fn fft_and_dense_products_agree() {
    let lambda = cantor_circle(5);
    let m = build_fup_matrix(&lambda, 2f64.powi(-6), 1.0, 1.0, &FupOptions::default()).unwrap();
    let dense = m.to_dense().unwrap();
    let op = m.operator();
    let x = random_vec(m.masked_size(), 1);
    let y = random_vec(m.masked_size(), 2);
    let (a, b) = (op.apply(&x), dense.apply(&x));
    let err = a.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
    let lhs = dot(&y, &op.apply(&x));
    let rhs = dot(&op.apply_adjoint(&y), &x);
    assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
}

#[test]
fn norms_respect_trivial_bounds() {
    let lambda = cantor_circle(9);
    for k in 5..=9 {
        let row = norm_row(&lambda, 2f64.powi(-k), 0.9, 1.0, &FupOptions::default()).unwrap();
        assert!(row.converged && row.respects_bounds(), "{row:?}");
    }
}

#[test]
fn full_circle_has_flat_norm() {
    let full = IntervalCover::new(vec![(0.0, 2.0 * PI)], 1e-3, Ambient::Circle).unwrap();
    let hs: Vec<f64> = (4..=8).map(|k| 2f64.powi(-k)).collect();
    let s = fup_exponent(&full, &hs, 1.0, 1.0, &FupOptions::default()).unwrap();
    assert!(s.beta().abs() < 0.05, "β = {}", s.beta());
}

#[test]
fn two_separated_points_give_half_exponent() {
    let lambda = points(&[0.0, 1.0]);
    let hs: Vec<f64> = (5..=10).map(|k| 2f64.powi(-k)).collect();
    let s = fup_exponent(&lambda, &hs, 1.0, 1.0, &FupOptions::default()).unwrap();
    assert!(s.beta() >= 0.4, "β = {}", s.beta());
}

#[test]
fn single_point_norm_vanishes() {
    let m = build_fup_matrix(&points(&[2.0]), 2f64.powi(-7), 1.0, 1.0, &FupOptions::default()).unwrap();
    assert!(m.is_degenerate());
    assert_eq!(m.norm(&NormOptions::default()).value, 0.0);
}

#[test]
fn probe_sits_below_masked_norm_and_grows_with_the_mask() {
    let lambda = cantor_circle(10);
    let h = 2f64.powi(-8);
    let opts = FupOptions::default();
    let y1 = 2.0 * PI * (2.0 / 9.0);
    let mut prev = 0.0;
    for c in [1.0, 2.0, 4.0] {
        let p = jn_lower_probe(&lambda, h, 0.0, y1, 0.2, c * h, &opts).unwrap();
        assert!(p.ratio <= p.masked_norm * (1.0 + 1e-6), "{p:?}");
        assert!(p.ratio >= prev * (1.0 - 1e-12));
        prev = p.ratio;
    }
}

#[test]
fn kernel_is_bounded_by_its_weight() {
    let lambda = cantor_circle(10);
    let h = 2f64.powi(-7);
    let field = KernelField::new(&lambda, h, 0.9, KERNEL_GRID_C, ChiCutoff::default()).unwrap();
    let bound = field.grid.dtheta / h * field.support.iter().map(|s| s.1.abs()).sum::<f64>();
    let (ys, ypps) = kernel_scan_points(&lambda, &field, 50);
    for &y in ys.iter().step_by(37) {
        for &ypp in &ypps {
            assert!(field.eval(y, ypp).norm() <= bound * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn norm_grows_with_the_neighborhood(depth in 3u32..8, k in 5i32..8, c in 0.2..1.0f64) {
        let lambda = cantor_circle(depth);
        let h = 2f64.powi(-k);
        let opts = FupOptions { norm: tight(), ..FupOptions::default() };
        let small = build_fup_matrix(&lambda, h, 1.0, c, &opts).unwrap();
        let big = build_fup_matrix(&lambda, h, 1.0, 2.0 * c, &opts).unwrap();
        prop_assert!(small.mask.iter().all(|j| big.mask.binary_search(j).is_ok()));
        prop_assert!(small.norm(&opts.norm).value <= big.norm(&opts.norm).value * (1.0 + 1e-6));
    }

    #[test]
    fn cutoff_stays_in_unit_range(d in 0.0..2.0f64) {
        let v = ChiCutoff::default().eval(d);
        prop_assert!((0.0..=1.0).contains(&v));
    }
}
