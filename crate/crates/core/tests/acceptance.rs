//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::*;
use fractal_gap::constants::*;
use fractal_gap::energy::*;
use fractal_gap::fit::{geometric_range, FitReport};
use fractal_gap::fup::*;
use fractal_gap::regularity::{ad_constant, ap_avoidance, CenterPolicy, LatticeSet};
use fractal_gap::report::{dimension_sweep, energy_sweep, full_report, ReportOptions, ScaleRange, SetSource};
use fractal_gap::sets::*;
use fractal_gap::tree::*;
use rand::Rng;

type Outcome = (bool, String);

fn delta_cantor() -> f64 {
    2f64.ln() / 3f64.ln()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn gap_arithmetic() -> Outcome {
    let checks = [
        ("beta_gap(2,1/2,1/2)", beta_gap(2, 0.5, 0.5).unwrap(), 1.0 / 32.0),
        ("beta_std(2,1/2)", beta_std(2, 0.5), 0.0),
        ("beta_jn(2,1/2)", beta_jn(2, 0.5), 0.25),
        ("range.lo", improvement_range(2).0, 5.0 / 11.0),
        ("range.hi", improvement_range(2).1, 0.6),
        ("C1(1,1/2)", c1(1.0, 0.5).unwrap().value, 100.0),
        ("C2(1,1/2)", c2(1.0, 0.5).unwrap().value, 10.0),
        ("S(1;1,1/2)", s_eps(1.0, 1.0, 0.5).unwrap().value, 100.0),
    ];
    let bad: Vec<String> = checks.iter().filter(|c| !close(c.1, c.2)).map(|c| format!("{}={}", c.0, c.1)).collect();
    (bad.is_empty(), if bad.is_empty() { "8 values exact".into() } else { bad.join(", ") })
}

fn dimension_recovery() -> Outcome {
    let opts = LimitSetOptions::default();
    let s3: Vec<f64> = (4..=10).map(|k| 3f64.powi(-k)).collect();
    let d3 = dimension_sweep(&SetSource::Cantor(CantorSpec::middle_third(10)), &s3, &opts).unwrap().delta();
    let alt = CantorSpec::new(4, DigitRule::Alternating, 8).unwrap();
    let s4: Vec<f64> = (2..=8).map(|k| 4f64.powi(-k)).collect();
    let d4 = dimension_sweep(&SetSource::Cantor(alt), &s4, &opts).unwrap().delta();
    let ok = (d3 - delta_cantor()).abs() <= 0.02 && (d4 - 0.5).abs() <= 0.02;
    (ok, format!("middle third δ={d3:.4} (want {:.4}±0.02), base-4 alternating δ={d4:.4} (want 0.5±0.02)", delta_cantor()))
}

fn random_lattice_sets() -> Vec<LatticeSet> {
    let mut r = rng(2024);
    (0..200)
        .map(|i| {
            let n = r.gen_range(1..=50);
            let span = [40, 400, 100_000][i % 3];
            LatticeSet::from_points(1.0, 0.0, (0..n).map(|_| r.gen_range(0..span)).collect()).unwrap()
        })
        .collect()
}

fn energy_oracle() -> Outcome {
    let mut mismatches = 0;
    for a in random_lattice_sets() {
        for tol in 0..=2 {
            if energy_count(&a, tol).unwrap() != energy_quartic(&a.offsets, tol) {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0, format!("{mismatches} mismatches over 200 sets x 3 tolerances"))
}

fn energy_bounds() -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    let holds = |count: u64, n: usize| {
        let (c, n) = (count as u128, n as u128);
        n * n <= c && c <= 3 * n * n * n
    };
    for (i, a) in random_lattice_sets().iter().enumerate() {
        for tol in 0..=1 {
            checked += 1;
            if !holds(energy_count(a, tol).unwrap(), a.len()) {
                violations.push(format!("random set {i} tol {tol}"));
            }
        }
    }
    let limits = LimitSetOptions::default();
    let sweeps = [
        (SetSource::Cantor(CantorSpec::middle_third(9)), (3..=9).map(|k| 3f64.powi(-k)).collect::<Vec<_>>()),
        (SetSource::Cantor(CantorSpec::new(4, DigitRule::Alternating, 7).unwrap()), (2..=7).map(|k| 4f64.powi(-k)).collect()),
        (SetSource::Schottky([2.0, 2.0, 2.0]), geometric_range(1e-2, 1e-4, 0.5).unwrap()),
    ];
    for (src, scales) in &sweeps {
        let s = energy_sweep(src, scales, &limits).unwrap();
        for (r, &n) in s.rows.iter().zip(&s.sizes) {
            checked += 1;
            if !holds(r.count, n) {
                violations.push(format!("{src} at α={:e}", r.alpha));
            }
        }
    }
    (violations.is_empty(), format!("{} violations over {checked} (set, scale) pairs {}", violations.len(), violations.join("; ")))
}

/// Measure-normalized energy of depth-k leaves at α = base^−k, fitted against log α.
fn leaf_energy_fit(spec: &CantorSpec, ks: std::ops::RangeInclusive<u32>) -> (Vec<(f64, f64)>, FitReport) {
    let base = spec.base as f64;
    let rows: Vec<(f64, f64)> = ks
        .map(|k| {
            let alpha = base.powi(-(k as i32));
            let leaves = WeightedLeaves::cantor(&spec.with_depth(k)).unwrap();
            (alpha, energy_measure(&leaves, alpha).unwrap())
        })
        .collect();
    let fit = FitReport::fit(rows.iter().map(|r| r.0.ln()).collect(), rows.iter().map(|r| r.1.ln()).collect()).unwrap();
    (rows, fit)
}

fn energy_improvement() -> Outcome {
    let (_, fit) = leaf_energy_fit(&CantorSpec::middle_third(3), 3..=9);
    let beta = fit.slope - delta_cantor();
    (beta >= 0.05, format!("slope {:.4} = δ + β with measured β_X = {beta:.4} (need ≥ 0.05)", fit.slope))
}

fn near_extremal_example() -> Outcome {
    let expo = 0.5 + 1.0 / (10.0 * 4f64.ln());
    let spec = CantorSpec::new(4, DigitRule::Alternating, 2).unwrap();
    let (rows, fit) = leaf_energy_fit(&spec, 2..=6);
    let below: Vec<String> =
        rows.iter().filter(|(a, e)| *e < a.powf(expo)).map(|(a, e)| format!("α={a:e}: {e:.4e} < {:.4e}", a.powf(expo))).collect();
    let in_window = fit.slope >= 0.5 && fit.slope <= expo + 0.05;
    (
        below.is_empty() && in_window,
        format!(
            "slope {:.4} (window [0.5, {:.4}]); lower bound α^{expo:.4} fails at {} of {} scales {}",
            fit.slope,
            expo + 0.05,
            below.len(),
            rows.len(),
            below.join("; ")
        ),
    )
}

fn tree_machinery() -> Outcome {
    let mut r = rng(77);
    let (mut matched, mut mismatched) = (0, 0);
    let mut covers: Vec<(IntervalCover, u32, u32)> =
        (1..=5).map(|n| (gen_cantor(&CantorSpec::middle_third(n + 1)).unwrap(), 3, n)).collect();
    for _ in 0..100 {
        let k = r.gen_range(1..6);
        let iv = (0..k)
            .map(|_| {
                let a: f64 = r.gen_range(0.0..0.95);
                (a, (a + r.gen_range(0.0..0.05f64)).min(1.0))
            })
            .collect();
        covers.push((IntervalCover::from_unsorted(iv, 1e-4, Ambient::UnitInterval).unwrap(), r.gen_range(2..=3), r.gen_range(1..=5)));
    }
    let (mut bound_checked, mut bound_failed, mut triple_checked) = (0, 0, 0);
    for (x, m, n) in &covers {
        let t = discretize(x, *m, *n, None).unwrap();
        if t.leaf_count() > 40 {
            continue;
        }
        let tt = prune_triples(&t, x, DEFAULT_TRIPLE_BUDGET).unwrap();
        if tt.leaf_count() == brute_hitting_leaves(&t, x) {
            matched += 1;
        } else {
            mismatched += 1;
        }
        let (_, c) = tree_regularity(&t.tree, *m as f64 - 1.0, f64::INFINITY);
        if let Ok((lhs, rhs)) = pruned_triple_bound(&t, &tt, *m as f64 - 1.0, c) {
            triple_checked += 1;
            if lhs > rhs {
                bound_failed += 1;
            }
        }
    }
    for b in 2..=3usize {
        for h in 1..=6u32 {
            let t = Tree::perfect(b, h);
            for _ in 0..20 {
                let mut keep = vec![false; t.len()];
                keep[0] = true;
                for v in 0..t.len() {
                    if keep[v] && !t.is_leaf(v) {
                        let ch = &t.children[v];
                        let drop = r.gen_range(0..ch.len());
                        for (i, &c) in ch.iter().enumerate() {
                            keep[c] = i != drop && r.gen_bool(0.8);
                        }
                    }
                }
                if let Ok((lhs, rhs)) = pruned_leaf_bound(&t, &keep, b as f64, 1.0) {
                    bound_checked += 1;
                    if lhs > rhs + 1e-9 {
                        bound_failed += 1;
                    }
                }
            }
        }
    }
    let mut one_leaf = true;
    for n in 1..=8 {
        let t = Tree::perfect(2, n);
        let mut keep = vec![false; t.len()];
        keep[0] = true;
        for v in 0..t.len() {
            if keep[v] && !t.is_leaf(v) {
                keep[t.children[v][0]] = true;
            }
        }
        one_leaf &= pruned_leaf_bound(&t, &keep, 2.0, 1.0).map(|p| p.0 == 1.0).unwrap_or(false);
    }
    (
        mismatched == 0 && matched > 0 && bound_failed == 0 && one_leaf,
        format!(
            "{matched} brute-force matches, {mismatched} mismatches; leaf bound checked on {bound_checked} pruned trees and {triple_checked} triple trees with preconditions met, {bound_failed} failures; perfect binary pruning leaves 1: {one_leaf}"
        ),
    )
}

fn ap_avoidance_check() -> Outcome {
    let delta = delta_cantor();
    let mut worst = String::new();
    let mut ok = true;
    for d in 1..=8u32 {
        let x = gen_cantor(&CantorSpec::middle_third(d)).unwrap();
        let alpha = 3f64.powi(-(d as i32));
        let a = LatticeSet::from_cover(&x, alpha).unwrap();
        let radii = geometric_range(1.0, alpha, 1.0 / 3.0).unwrap();
        let c = ad_constant(&x, delta, &radii, &CenterPolicy::default()).unwrap().constant();
        for eps in [1.0, 0.5, 0.25] {
            let (len, _) = ap_avoidance(&a, eps).unwrap();
            let s = s_eps(eps, c, delta).unwrap().value;
            if len as f64 > s {
                ok = false;
                worst.push_str(&format!(" depth {d} ε={eps}: {len} > {s:.1};"));
            }
            if d == 8 && eps == 0.25 {
                worst.push_str(&format!(" depth 8, ε=1/4: longest {len}, S={s:.3e} (C={c:.3})"));
            }
        }
    }
    (ok, worst.trim().to_string())
}

fn geometry_identities() -> Outcome {
    let r = geometry_suite(10_000, 2024);
    let ok = r.din1 < 1e-8
        && r.din2 < 1e-8
        && r.gide_fd < 1e-6
        && r.kappa_hat2 < 1e-8
        && r.scroo1 < 1e-8
        && r.scroo2 < 1e-8
        && r.mobius_bound <= 1.0
        && r.mobius_chain < 1e-8
        && r.geodesic_shift < 1e-8;
    (
        ok,
        format!(
            "din1 {:.1e}, din2 {:.1e}, gide FD {:.1e}, kappa-hat2 {:.1e}, scroo-1 {:.1e}, scroo-2 {:.1e} (sign {:+}), Möbius bound factor {:.3} chain {:.1e}, geodesic θ shift {:.1e}",
            r.din1, r.din2, r.gide_fd, r.kappa_hat2, r.scroo1, r.scroo2, r.scroo2_sign, r.mobius_bound, r.mobius_chain, r.geodesic_shift
        ),
    )
}

fn schottky_construction() -> Outcome {
    let mut worst_trace = 0.0f64;
    let mut worst_pair = 0.0f64;
    for l in [[2.0, 2.0, 2.0], [2.0, 3.0, 4.0], [1.0, 1.0, 5.0]] {
        let g = build_three_funnel(l[0], l[1], l[2]).unwrap();
        worst_trace = g.trace_residuals().iter().fold(worst_trace, |m, r| m.max(r.abs()));
        worst_pair = worst_pair.max(g.pairing_residual());
    }
    let scales = geometric_range(1e-2, 1e-6, 0.5).unwrap();
    let opts = LimitSetOptions::default();
    let thin = dimension_sweep(&SetSource::Schottky([6.0, 6.0, 6.0]), &scales, &opts).unwrap().delta();
    let thick = dimension_sweep(&SetSource::Schottky([1.0, 1.0, 1.0]), &scales, &opts).unwrap().delta();
    (
        worst_trace < 1e-10 && worst_pair < 1e-8 && thin < thick,
        format!("trace residual {worst_trace:.1e}, disk pairing {worst_pair:.1e}, δ(6,6,6)={thin:.4} < δ(1,1,1)={thick:.4}"),
    )
}

fn cantor_on_circle() -> IntervalCover {
    gen_cantor(&CantorSpec::middle_third(12)).unwrap().to_circle().unwrap()
}

fn fup_sandwich() -> Outcome {
    let lambda = cantor_on_circle();
    let delta = delta_cantor();
    let hs: Vec<f64> = (6..=11).map(|k| 2f64.powi(-k)).collect();
    let opts = FupOptions::default();
    let sweep = fup_exponent(&lambda, &hs, 0.9, 1.0, &opts).unwrap();
    let (lo, hi) = ((0.5 - delta).max(0.0) - 0.05, 0.5 - 0.5 * delta + 0.05);
    let beta = sweep.beta();
    let bounds_ok = sweep.rows.iter().all(|r| r.respects_bounds() && r.converged);
    let mut worst_shift = 0.0f64;
    for &h in &hs {
        let (_, _, rel) = refinement_shift(&lambda, h, 0.9, 1.0, &opts).unwrap();
        worst_shift = worst_shift.max(rel);
    }
    (
        beta >= lo && beta <= hi && bounds_ok && worst_shift < 0.01,
        format!(
            "β={beta:.4} in [{lo:.4}, {hi:.4}]; all norms within tb-1/tb-2 and converged: {bounds_ok}; worst 2x refinement shift {:.3}%",
            100.0 * worst_shift
        ),
    )
}

fn jn_probe() -> Outcome {
    let lambda = cantor_on_circle();
    let h = 2f64.powi(-9);
    let y1 = 2.0 * PI * (2.0 / 9.0);
    let p = jn_lower_probe(&lambda, h, 0.0, y1, 0.2, h, &FupOptions::default()).unwrap();
    let need = h.powf(0.5 - 0.5 * delta_cantor() + 0.15);
    (p.ratio >= need, format!("ratio {:.4} ≥ h^(1/2−δ/2+0.15) = {need:.4} ({} ball points)", p.ratio, p.ball_points))
}

fn kernel_decay() -> Outcome {
    let lambda = cantor_on_circle();
    let field = KernelField::new(&lambda, 2f64.powi(-10), 0.9, KERNEL_GRID_C, ChiCutoff::default()).unwrap();
    let (ys, ypps) = kernel_scan_points(&lambda, &field, 200);
    let scan = kernel_scan(&field, &ys, &ypps).unwrap();
    (
        scan.decay_ratio <= 1e-3,
        format!("far/near |K| = {:.3e}/{:.3e} = {:.3e} (need ≤ 1e-3)", scan.far_max, scan.near_max, scan.decay_ratio),
    )
}

fn determinism() -> Outcome {
    let source = SetSource::Cantor(CantorSpec::middle_third(9));
    let scales = ScaleRange { start: 3f64.powi(-3), stop: 3f64.powi(-9), ratio: 1.0 / 3.0 };
    let run = || full_report(&source, &scales, &ReportOptions::default()).unwrap().to_json().unwrap();
    let a = run();
    let b = run();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    (a == b && a == single, format!("{} bytes; repeat identical: {}; single-thread identical: {}", a.len(), a == b, a == single))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("gap arithmetic", gap_arithmetic),
        ("dimension recovery", dimension_recovery),
        ("energy oracle equivalence", energy_oracle),
        ("energy trivial bounds", energy_bounds),
        ("energy improvement over δ", energy_improvement),
        ("near-extremal digit set", near_extremal_example),
        ("tree machinery", tree_machinery),
        ("progression avoidance", ap_avoidance_check),
        ("geometry identities", geometry_identities),
        ("Schottky construction", schottky_construction),
        ("uncertainty exponent sandwich", fup_sandwich),
        ("lower-bound probe", jn_probe),
        ("kernel decay", kernel_decay),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
