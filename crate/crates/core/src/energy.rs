//! Additive energy of lattice sets (quadruple counts) and of weighted leaf measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::fit::{is_geometric, FitReport};
use crate::geometry::wrap_angle;
use crate::regularity::LatticeSet;
use crate::sets::{Ambient, CantorSpec, IntervalCover};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMethod {
    Bruteforce,
    Histogram,
}

impl EnergyMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnergyMethod::Bruteforce => "bruteforce",
            EnergyMethod::Histogram => "histogram",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub alpha: f64,
    pub count: u64,
    /// Lattice count, which in dimension one equals α^{−4}·(count·α⁴).
    pub energy_def15: f64,
    /// Count divided by |A|⁴: the measure-weighted energy for uniform weights.
    pub energy_def62: f64,
    pub method: EnergyMethod,
}

impl EnergyResult {
    fn new(alpha: f64, count: u64, size: usize, method: EnergyMethod) -> Self {
        let n = size as f64;
        EnergyResult { alpha, count, energy_def15: count as f64, energy_def62: count as f64 / (n * n * n * n), method }
    }
}

/// Largest number of ordered pairs a sum histogram may enumerate.
pub const PAIR_BUDGET: f64 = 4e9;

/// Pair-sum span above which the sorted-pair representation is used instead of a dense histogram.
const DENSE_RATIO: f64 = 64.0;

/// Sum histogram h(s) = #{(a, b) ∈ A²: a + b = s} as (sum, multiplicity) pairs in increasing sum order.
pub fn sum_histogram(a: &LatticeSet) -> Result<Vec<(i64, u64)>> {
    let offs = &a.offsets;
    let n = offs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if (n as f64) * (n as f64) > PAIR_BUDGET {
        return Err(Error::Size(format!("{n} points exceed the pair-sum budget of {PAIR_BUDGET:e}; use a coarser scale")));
    }
    let span = 2 * a.range() as u64 + 1;
    if span as f64 / (n as f64 * n as f64) <= DENSE_RATIO {
        if span > 1 << 32 {
            return Err(Error::Size(format!("sum histogram span {span} too large")));
        }
        let threads = rayon::current_num_threads().max(1);
        let chunk = n.div_ceil(threads);
        let hist = offs
            .par_chunks(chunk)
            .map(|block| {
                let mut h = vec![0u64; span as usize];
                for &x in block {
                    for &y in offs {
                        h[(x + y) as usize] += 1;
                    }
                }
                h
            })
            .reduce_with(|mut p, q| {
                for (u, v) in p.iter_mut().zip(q) {
                    *u += v;
                }
                p
            })
            .unwrap_or_default();
        Ok(hist.into_iter().enumerate().filter(|p| p.1 > 0).map(|(s, c)| (s as i64, c)).collect())
    } else {
        if (n as u64) * (n as u64) > 1 << 31 {
            return Err(Error::Size(format!("{n} points give too many pair sums for the sparse histogram")));
        }
        let mut sums: Vec<i64> = offs.par_iter().flat_map_iter(|&x| offs.iter().map(move |&y| x + y)).collect();
        sums.par_sort_unstable();
        let mut out: Vec<(i64, u64)> = Vec::new();
        for s in sums {
            match out.last_mut() {
                Some(last) if last.0 == s => last.1 += 1,
                _ => out.push((s, 1)),
            }
        }
        Ok(out)
    }
}

/// Σ_{|k| ≤ tol} Σ_s h(s)·h(s + k) for a sparse histogram sorted by sum.
fn correlate(h: &[(i64, u64)], tol: i64) -> Result<u64> {
    let mut total: u128 = 0;
    for k in -tol..=tol {
        let mut j = 0usize;
        for &(s, c) in h {
            let t = s + k;
            while j < h.len() && h[j].0 < t {
                j += 1;
            }
            if j < h.len() && h[j].0 == t {
                total += c as u128 * h[j].1 as u128;
            }
        }
    }
    u64::try_from(total).map_err(|_| Error::Size("energy count overflows 64 bits".into()))
}

/// Exact number of ordered quadruples in A⁴ with |a₁ − a₂ + a₃ − a₄| ≤ tol (lattice units).
pub fn energy_count(a: &LatticeSet, tol: i64) -> Result<u64> {
    if a.is_empty() {
        return input("energy needs a nonempty set");
    }
    if tol < 0 {
        return input("tolerance must be non-negative");
    }
    correlate(&sum_histogram(a)?, tol)
}

/// Same count by enumerating triples and binary-searching the fourth point.
pub fn energy_count_bruteforce(a: &LatticeSet, tol: i64) -> Result<u64> {
    if a.is_empty() {
        return input("energy needs a nonempty set");
    }
    let n = a.len() as f64;
    if n * n * n > 1e11 {
        return Err(Error::Size(format!("{n} points are too many for triple enumeration")));
    }
    let offs = &a.offsets;
    let total: u128 = offs
        .par_iter()
        .map(|&x1| {
            let mut c: u128 = 0;
            for &x2 in offs {
                for &x3 in offs {
                    let t = x1 - x2 + x3;
                    let lo = offs.partition_point(|&v| v < t - tol);
                    let hi = offs.partition_point(|&v| v <= t + tol);
                    c += (hi - lo) as u128;
                }
            }
            c
        })
        .sum();
    u64::try_from(total).map_err(|_| Error::Size("energy count overflows 64 bits".into()))
}

/// Energy of a lattice set at its own scale with the chosen method.
pub fn energy(a: &LatticeSet, tol: i64, method: EnergyMethod) -> Result<EnergyResult> {
    let count = match method {
        EnergyMethod::Histogram => energy_count(a, tol)?,
        EnergyMethod::Bruteforce => energy_count_bruteforce(a, tol)?,
    };
    Ok(EnergyResult::new(a.alpha, count, a.len(), method))
}

/// |A|² ≤ count ≤ (2·tol + 1)·|A|³.
pub fn basic_bounds_hold(count: u64, size: usize, tol: i64) -> bool {
    let n = size as u128;
    let c = count as u128;
    n * n <= c && c <= (2 * tol as u128 + 1) * n * n * n
}

/// Leaves of a tree on a grid: representatives origin + grid·offset with nonnegative weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedLeaves {
    pub grid: f64,
    pub origin: f64,
    pub offsets: Vec<i64>,
    pub weights: Vec<f64>,
    pub leaf_width: f64,
}

impl WeightedLeaves {
    /// Depth-d cylinders of a Cantor set with equal weights (the natural measure).
    pub fn cantor(spec: &CantorSpec) -> Result<Self> {
        let idx = spec.cylinders()?;
        let w = 1.0 / idx.len() as f64;
        Ok(WeightedLeaves {
            grid: spec.cell(),
            origin: 0.0,
            weights: vec![w; idx.len()],
            offsets: idx.into_iter().map(|i| i as i64).collect(),
            leaf_width: spec.cell(),
        })
    }

    /// Uniform weights 1/|A| on the points of a lattice set, with zero leaf width.
    pub fn uniform(a: &LatticeSet) -> Self {
        let w = 1.0 / a.len() as f64;
        WeightedLeaves { grid: a.alpha, origin: a.origin, offsets: a.offsets.clone(), weights: vec![w; a.len()], leaf_width: 0.0 }
    }
}

/// Weighted quadruple sum Σ w₁w₂w₃w₄ over |k₁ − k₂ + k₃ − k₄| ≤ tol on the leaf grid.
pub fn energy_measure_tol(leaves: &WeightedLeaves, tol: i64) -> Result<f64> {
    if leaves.offsets.len() != leaves.weights.len() {
        return input("one weight per leaf is required");
    }
    if leaves.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return input("leaf weights must be finite and nonnegative");
    }
    if leaves.offsets.is_empty() {
        return Ok(0.0);
    }
    let min = *leaves.offsets.iter().min().unwrap();
    let max = *leaves.offsets.iter().max().unwrap();
    let span = (2 * (max - min) + 1) as usize;
    if span > 1 << 30 {
        return Err(Error::Size(format!("leaf grid span {span} too large")));
    }
    let n = leaves.offsets.len();
    let threads = rayon::current_num_threads().max(1);
    let chunk = n.div_ceil(threads);
    let idx: Vec<usize> = (0..n).collect();
    let hist = idx
        .par_chunks(chunk)
        .map(|block| {
            let mut h = vec![0.0f64; span];
            for &i in block {
                let (ki, wi) = (leaves.offsets[i] - min, leaves.weights[i]);
                for (kj, wj) in leaves.offsets.iter().zip(&leaves.weights) {
                    h[(ki + kj - min) as usize] += wi * wj;
                }
            }
            h
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|mut p, q| {
            for (u, v) in p.iter_mut().zip(q) {
                *u += v;
            }
            p
        })
        .unwrap();
    let mut total = 0.0;
    for k in -tol..=tol {
        for s in 0..span as i64 {
            let t = s + k;
            if t >= 0 && (t as usize) < span {
                total += hist[s as usize] * hist[t as usize];
            }
        }
    }
    Ok(total)
}

/// Lattice tolerance for the window |x₁ − x₂ + x₃ − x₄| < α widened by 4·leaf width.
pub fn measure_tolerance(leaves: &WeightedLeaves, alpha: f64) -> i64 {
    let w = (alpha + 4.0 * leaves.leaf_width) / leaves.grid;
    ((w * (1.0 - 1e-12)).ceil() as i64 - 1).max(0)
}

/// μ⁴ of the quadruples with |x₁ − x₂ + x₃ − x₄| < α, outer-approximated on the leaves.
pub fn energy_measure(leaves: &WeightedLeaves, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return input("scale must be positive");
    }
    energy_measure_tol(leaves, measure_tolerance(leaves, alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Lattice counts; the slope estimates −(3δ − β_E).
    Count,
    /// Measure-weighted; the slope estimates δ + β.
    Measure,
}

/// Slope of log(energy) against log α, skipping the `skip` coarsest scales.
pub fn energy_exponent(results: &[EnergyResult], norm: Normalization, skip: usize) -> Result<FitReport> {
    if results.len() < 4 {
        return input(format!("energy exponent needs at least 4 scales, got {}", results.len()));
    }
    let alphas: Vec<f64> = results.iter().map(|r| r.alpha).collect();
    if !is_geometric(&alphas) {
        return input("energy scales must form a strictly monotone geometric progression");
    }
    let mut sorted: Vec<&EnergyResult> = results.iter().collect();
    sorted.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));
    let used = &sorted[skip.min(sorted.len())..];
    let xs = used.iter().map(|r| r.alpha.ln()).collect();
    let ys = used
        .iter()
        .map(|r| match norm {
            Normalization::Count => r.energy_def15.ln(),
            Normalization::Measure => r.energy_def62.ln(),
        })
        .collect();
    FitReport::fit(xs, ys)
}

/// Image of a circle cover under 𝒢(y₀, ·) = cot((θ − θ₀)/2) on the line, keeping [−c1, c1].
/// Returns the projected cover and the number of arcs excised because they contain y₀.
pub fn project_cover(lambda: &IntervalCover, theta0: f64, c1: f64) -> Result<(IntervalCover, usize)> {
    if lambda.ambient != Ambient::Circle {
        return input("projection needs a cover of the circle");
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut excised = 0;
    let mut out = Vec::with_capacity(lambda.len());
    for &(a, b) in &lambda.intervals {
        let ra = (a - theta0).rem_euclid(two_pi);
        let rb = ra + (b - a);
        if ra < 1e-14 || rb > two_pi - 1e-14 {
            excised += 1;
            continue;
        }
        let (lo, hi) = ((0.5 * rb).cos() / (0.5 * rb).sin(), (0.5 * ra).cos() / (0.5 * ra).sin());
        let (lo, hi) = (lo.max(-c1), hi.min(c1));
        if lo <= hi {
            out.push((lo, hi));
        }
    }
    let cover = IntervalCover::from_unsorted(out, lambda.resolution, Ambient::Line)?;
    Ok((cover, excised))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedEnergy {
    pub theta0: f64,
    pub excised: usize,
    pub size: usize,
    pub result: EnergyResult,
}

/// Energy count at scale α (tolerance one lattice unit) of the projected set 𝒢(y₀, Λ) ∩ [−c1, c1].
pub fn projected_energy(lambda: &IntervalCover, theta0: f64, c1: f64, alpha: f64) -> Result<ProjectedEnergy> {
    if !(c1 > 0.0 && alpha > 0.0) {
        return input("window and scale must be positive");
    }
    if !lambda.contains(theta0, lambda.resolution) {
        return input(format!("base angle {theta0} is not within the resolution of the set"));
    }
    let (cover, excised) = project_cover(lambda, wrap_angle(theta0), c1)?;
    let a = LatticeSet::from_cover(&cover, alpha)?;
    let result = if a.is_empty() {
        EnergyResult { alpha, count: 0, energy_def15: 0.0, energy_def62: 0.0, method: EnergyMethod::Histogram }
    } else {
        energy(&a, 1, EnergyMethod::Histogram)?
    };
    Ok(ProjectedEnergy { theta0, excised, size: a.len(), result })
}

/// Maximum of [`projected_energy`] over base points at up to `samples` evenly chosen arc midpoints.
/// This is a lower bound for the supremum over the whole set.
pub fn projected_energy_sup(lambda: &IntervalCover, c1: f64, alpha: f64, samples: usize) -> Result<ProjectedEnergy> {
    if lambda.is_empty() {
        return input("projection needs a nonempty set");
    }
    let n = lambda.len();
    let step = n.div_ceil(samples.max(1)).max(1);
    let mids: Vec<f64> = lambda.intervals.iter().step_by(step).map(|&(a, b)| 0.5 * (a + b)).collect();
    let all: Vec<ProjectedEnergy> = mids.par_iter().map(|&t| projected_energy(lambda, t, c1, alpha)).collect::<Result<_>>()?;
    Ok(all
        .into_iter()
        .reduce(|x, y| if y.result.count > x.result.count { y } else { x })
        .expect("at least one sample"))
}
