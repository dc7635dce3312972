//! Independent oracles shared by the property suites and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use fractal_gap::geometry::{
    angle_diff, circle_point, endpoints_b, geodesic_flow, graph_check, horocycle_unstable, kappa,
    mobius_boundary_derivative, poisson_kernel, stereo_g, stereo_g_pts, cayley_point, DiskCotangent, Mat2, Sign,
};
use fractal_gap::sets::IntervalCover;
use fractal_gap::tree::MultiscaleTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Quadruple count by direct enumeration of A⁴.
pub fn energy_quartic(offsets: &[i64], tol: i64) -> u64 {
    let mut c = 0u64;
    for &a in offsets {
        for &b in offsets {
            for &x in offsets {
                for &d in offsets {
                    if (a - b + x - d).abs() <= tol {
                        c += 1;
                    }
                }
            }
        }
    }
    c
}

/// Largest subset of `pts` whose pairwise distances all exceed `alpha`, by subset enumeration.
pub fn max_separated_subset(pts: &[f64], alpha: f64) -> usize {
    assert!(pts.len() <= 16);
    let n = pts.len();
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let chosen: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]).collect();
        let ok = chosen.iter().enumerate().all(|(i, a)| chosen[i + 1..].iter().all(|b| (a - b).abs() > alpha));
        if ok {
            best = best.max(chosen.len());
        }
    }
    best
}

/// Longest progression with at least ε|P| members in `set`, trying every step, start and length.
pub fn longest_dense_progression(set: &[i64], eps: f64) -> i64 {
    let lo = *set.iter().min().unwrap();
    let hi = *set.iter().max().unwrap();
    let max_len = (set.len() as f64 / eps + 1e-9).floor() as i64;
    let member = |x: i64| set.binary_search(&x).is_ok();
    let mut best = 1;
    for step in 1..=(hi - lo).max(1) {
        for start in lo - (max_len - 1) * step..=hi {
            let mut hits = 0i64;
            for len in 1..=max_len {
                if member(start + (len - 1) * step) {
                    hits += 1;
                }
                if hits as f64 >= eps * len as f64 - 1e-9 {
                    best = best.max(len);
                }
            }
        }
    }
    best
}

/// Hitting triples at height N of a multiscale tree, found by scanning every triple of level-N
/// vertices and checking every ancestor triple directly against the α-neighborhoods.
pub fn brute_hitting_leaves(t: &MultiscaleTree, x: &IntervalCover) -> usize {
    let parent = |v: usize| t.tree.parent[v].unwrap();
    let hits = |ids: [usize; 3], h: u32| {
        let alpha = (t.m as f64).powi(-(h as i32));
        let (a, b, c) = (t.intervals[ids[0]], t.intervals[ids[1]], t.intervals[ids[2]]);
        let (p, q) = (a.0 - b.1 + c.0, a.1 - b.0 + c.1);
        // open neighborhood of X meets [p, q)
        x.intervals.iter().any(|&(lo, hi)| lo - alpha < q && hi + alpha > p)
    };
    let leaves = &t.levels[t.n as usize];
    let mut count = 0;
    for &u in leaves {
        for &v in leaves {
            for &w in leaves {
                let mut ids = [u, v, w];
                let mut ok = true;
                for h in (1..=t.n).rev() {
                    if !hits(ids, h) {
                        ok = false;
                        break;
                    }
                    ids = [parent(ids[0]), parent(ids[1]), parent(ids[2])];
                }
                if ok {
                    count += 1;
                }
            }
        }
    }
    count
}

pub fn random_cotangent(r: &mut ChaCha8Rng) -> DiskCotangent {
    let rad = 0.9 * r.gen::<f64>().sqrt();
    let phi = r.gen_range(0.0..2.0 * PI);
    let m = r.gen_range(0.2..5.0);
    let psi = r.gen_range(0.0..2.0 * PI);
    DiskCotangent::new([rad * phi.cos(), rad * phi.sin()], [m * psi.cos(), m * psi.sin()]).unwrap()
}

fn unit(c: &DiskCotangent) -> DiskCotangent {
    c.scaled(1.0 / c.p())
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Maximum residuals of the boundary-geometry identities over `n` seeded random inputs.
#[derive(Debug, Clone, Copy)]
pub struct GeometryResiduals {
    pub din1: f64,
    pub din2: f64,
    pub gide_fd: f64,
    pub kappa_hat2: f64,
    pub scroo1: f64,
    pub scroo2: f64,
    pub scroo2_sign: f64,
    pub mobius_bound: f64,
    pub mobius_chain: f64,
    pub geodesic_shift: f64,
}

pub fn din1_residual(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let c = random_cotangent(&mut r);
        let e = endpoints_b(&c);
        let lhs = poisson_kernel(c.x, e.b_plus) * poisson_kernel(c.x, e.b_minus) * (1.0 - e.b_plus[0] * e.b_minus[0] - e.b_plus[1] * e.b_minus[1]);
        let unit_err = (dist(e.b_plus, [0.0, 0.0]) - 1.0).abs().max((dist(e.b_minus, [0.0, 0.0]) - 1.0).abs());
        let phi_err = rel(e.phi_plus, poisson_kernel(c.x, e.b_plus) * e.p).max(rel(e.phi_minus, poisson_kernel(c.x, e.b_minus) * e.p));
        worst = worst.max((lhs - 2.0).abs()).max(unit_err).max(phi_err);
    }
    worst
}

pub fn din2_residual(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let t = r.gen_range(0.0..2.0 * PI);
        let tp = t + r.gen_range(0.05..2.0 * PI - 0.05);
        let (y, yp) = (circle_point(t), circle_point(tp));
        let c = y[0] * yp[0] + y[1] * yp[1];
        let g = stereo_g_pts(y, yp).unwrap();
        let ga = stereo_g(t, tp).unwrap();
        let rhs = (1.0 + c) / (1.0 - c);
        worst = worst.max(rel(g * g, rhs)).max(rel(g, ga));
    }
    worst
}

/// Central difference of θ ↦ log|y(θ) − y′|² against −𝒢(y, y′).
pub fn gide_fd_residual(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let step = 1e-6;
    let mut worst = 0.0f64;
    let f = |t: f64, tp: f64| {
        let d = dist(circle_point(t), circle_point(tp));
        (d * d).ln()
    };
    for _ in 0..n {
        let t = r.gen_range(0.0..2.0 * PI);
        let tp = t + r.gen_range(0.1..2.0 * PI - 0.1);
        let fd = (f(t + step, tp) - f(t - step, tp)) / (2.0 * step);
        let g = stereo_g(t, tp).unwrap();
        worst = worst.max(rel(fd, -g));
    }
    worst
}

pub fn kappa_hat2_residual(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let c = random_cotangent(&mut r);
        let km = kappa(&c, Sign::Minus).unwrap();
        let kp = kappa(&c, Sign::Plus).unwrap();
        let res = graph_check(&km, &kp).unwrap();
        let scale = km.theta.abs().max(km.eta.abs()).max(kp.eta.abs()).max(1.0);
        worst = worst.max(res.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale);
    }
    worst
}

/// Returns the largest residual of B₋ and 𝒫(·, B₋) preservation under the unstable horocycle flow.
pub fn scroo1_residual(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let c = unit(&random_cotangent(&mut r));
        let s = r.gen_range(-3.0..3.0);
        let h = horocycle_unstable(&c, s).unwrap();
        let (e0, e1) = (endpoints_b(&c), endpoints_b(&h));
        let pb = poisson_kernel(c.x, e0.b_minus);
        worst = worst.max(dist(e0.b_minus, e1.b_minus)).max(rel(poisson_kernel(h.x, e0.b_minus), pb)).max((h.p() - 1.0).abs());
    }
    worst
}

/// Residual of 𝒢(B₋, B₊(flowed)) − 𝒢(B₋, B₊) = σ𝒫(x, B₋)s for the better of σ = ±1, and that σ.
pub fn scroo2_residual(n: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut plus, mut minus) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let c = unit(&random_cotangent(&mut r));
        let s = r.gen_range(-3.0..3.0);
        let h = horocycle_unstable(&c, s).unwrap();
        let (e0, e1) = (endpoints_b(&c), endpoints_b(&h));
        let diff = stereo_g_pts(e0.b_minus, e1.b_plus).unwrap() - stereo_g_pts(e0.b_minus, e0.b_plus).unwrap();
        let lin = poisson_kernel(c.x, e0.b_minus) * s;
        let scale = lin.abs().max(1.0);
        plus = plus.max((diff - lin).abs() / scale);
        minus = minus.max((diff + lin).abs() / scale);
    }
    if plus <= minus {
        (plus, 1.0)
    } else {
        (minus, -1.0)
    }
}

fn random_sl2(r: &mut ChaCha8Rng) -> Mat2 {
    let rot = |a: f64| Mat2::new(a.cos(), -a.sin(), a.sin(), a.cos());
    let t: f64 = r.gen_range(0.0..3.0);
    let d = Mat2::new(t.exp(), 0.0, 0.0, (-t).exp());
    rot(r.gen_range(0.0..2.0 * PI)).mul(&d).mul(&rot(r.gen_range(0.0..2.0 * PI)))
}

/// Worst violation factor of 1/(2|γ|) ≤ |γ′(w)| ≤ 2|γ| (≤ 1 means it holds) and the worst
/// relative chain-rule residual.
pub fn mobius_residuals(n: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut bound, mut chain) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let (g1, g2) = (random_sl2(&mut r), random_sl2(&mut r));
        let theta = r.gen_range(0.0..2.0 * PI);
        let w = cayley_point(theta);
        let d1 = mobius_boundary_derivative(&g1, w).unwrap();
        let nrm = g1.norm_sq();
        bound = bound.max(d1 / (2.0 * nrm)).max(1.0 / (2.0 * nrm * d1));
        let d2 = mobius_boundary_derivative(&g2, w).unwrap();
        let w2 = cayley_point(g2.apply_angle(theta));
        let g12 = g1.mul(&g2);
        let d12 = mobius_boundary_derivative(&g12, w).unwrap();
        let prod = mobius_boundary_derivative(&g1, w2).unwrap() * d2;
        chain = chain.max((d12 - prod).abs() / prod);
    }
    (bound, chain)
}

/// Flowing along the geodesic for time t keeps (w, y, η) of κ± and shifts θ by −t for both signs.
pub fn geodesic_shift_residual(n: usize, seed: u64, times: &[f64]) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let c = random_cotangent(&mut r);
        for &t in times {
            let f = geodesic_flow(&c, t);
            for (sign, shift) in [(Sign::Plus, -t), (Sign::Minus, -t)] {
                let (k0, k1) = (kappa(&c, sign).unwrap(), kappa(&f, sign).unwrap());
                let scale = k0.eta.abs().max(k0.theta.abs()).max(1.0);
                let res = (k1.w - k0.w).abs().max(dist(k1.y, k0.y)).max((k1.eta - k0.eta).abs() / scale).max(
                    (k1.theta - k0.theta - shift).abs() / scale,
                );
                worst = worst.max(res);
            }
        }
    }
    worst
}

pub fn geometry_suite(n: usize, seed: u64) -> GeometryResiduals {
    let (scroo2, scroo2_sign) = scroo2_residual(n, seed + 5);
    let (mobius_bound, mobius_chain) = mobius_residuals(n, seed + 6);
    GeometryResiduals {
        din1: din1_residual(n, seed),
        din2: din2_residual(n, seed + 1),
        gide_fd: gide_fd_residual(n, seed + 2),
        kappa_hat2: kappa_hat2_residual(n, seed + 3),
        scroo1: scroo1_residual(n, seed + 4),
        scroo2,
        scroo2_sign,
        mobius_bound,
        mobius_chain,
        geodesic_shift: geodesic_shift_residual(n, seed + 7, &[0.1, 1.0, 2.0]),
    }
}

pub fn wrap_close(a: f64, b: f64) -> f64 {
    angle_diff(a, b).abs()
}
