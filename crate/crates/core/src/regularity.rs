//! Separated-point counts, regularity constants, neighborhood measures and progression avoidance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::fit::FitReport;
use crate::sets::{Ambient, IntervalCover};

/// Points origin + alpha·k for sorted distinct non-negative offsets k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSet {
    pub alpha: f64,
    pub offsets: Vec<i64>,
    pub origin: f64,
}

const SNAP: f64 = 1e-9;

impl LatticeSet {
    /// Normalizes arbitrary integer points: sorts, dedups and shifts so the smallest offset is 0.
    pub fn from_points(alpha: f64, origin: f64, mut points: Vec<i64>) -> Result<Self> {
        if !(alpha > 0.0) {
            return input(format!("lattice scale must be positive, got {alpha}"));
        }
        points.sort_unstable();
        points.dedup();
        let m = points.first().copied().unwrap_or(0);
        for p in &mut points {
            *p -= m;
        }
        Ok(LatticeSet { alpha, offsets: points, origin: origin + alpha * m as f64 })
    }

    /// The lattice points of αℤ lying in the open α-neighborhood of the cover.
    pub fn from_cover(cover: &IntervalCover, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return input(format!("lattice scale must be positive, got {alpha}"));
        }
        let mut pts: Vec<i64> = Vec::new();
        for &(lo, hi) in &cover.intervals {
            let kmin = (lo / alpha - 1.0 + SNAP).ceil() as i64;
            let kmax = (hi / alpha + 1.0 - SNAP).floor() as i64;
            let from = match pts.last() {
                Some(&last) => kmin.max(last + 1),
                None => kmin,
            };
            if kmax - from > 100_000_000 {
                return Err(Error::Size(format!("lattice at scale {alpha:e} exceeds 10^8 points")));
            }
            pts.extend(from..=kmax);
        }
        LatticeSet::from_points(alpha, 0.0, pts)
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn range(&self) -> i64 {
        match (self.offsets.first(), self.offsets.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        self.offsets.iter().map(move |&k| self.origin + self.alpha * k as f64)
    }
}

/// Maximal number of points of the cover that are pairwise more than `alpha` apart.
pub fn separated_count(x: &IntervalCover, alpha: f64) -> usize {
    separated_count_intervals(&x.intervals, alpha)
}

fn separated_count_intervals(intervals: &[(f64, f64)], alpha: f64) -> usize {
    // Every further point must exceed `frontier`; greedy leftmost placement is optimal on a line.
    let mut frontier = f64::NEG_INFINITY;
    let mut count = 0usize;
    for &(lo, hi) in intervals {
        let k = if lo > frontier {
            let d = hi - lo;
            let k = ((d / alpha) * (1.0 - 1e-12)).ceil().max(1.0);
            frontier = lo + (k - 1.0) * alpha + alpha;
            k
        } else if hi > frontier {
            let k = (((hi - frontier) / alpha) * (1.0 - 1e-12)).ceil().max(1.0);
            frontier += k * alpha;
            k
        } else {
            0.0
        };
        count += k as usize;
    }
    count
}

/// Separated count for a lattice set: points pairwise more than `alpha` apart.
pub fn separated_count_lattice(a: &LatticeSet, alpha: f64) -> usize {
    let mut last = f64::NEG_INFINITY;
    let mut count = 0;
    for p in a.points() {
        if p - last > alpha {
            count += 1;
            last = p;
        }
    }
    count
}

/// Lebesgue measure of the α-neighborhood, not clipped to the ambient domain.
pub fn neighborhood_measure(x: &IntervalCover, alpha: f64) -> f64 {
    x.neighborhood(alpha).measure()
}

/// Lebesgue measure of the α-neighborhood intersected with [0,1] (or [0,2π) on the circle, with wrap).
pub fn neighborhood_measure_clipped(x: &IntervalCover, alpha: f64) -> f64 {
    let nb = x.neighborhood(alpha);
    match x.ambient {
        Ambient::Line => nb.measure(),
        Ambient::UnitInterval => nb.intervals.iter().map(|&(lo, hi)| (hi.min(1.0) - lo.max(0.0)).max(0.0)).sum(),
        Ambient::Circle => {
            let t = 2.0 * PI;
            let mut pieces: Vec<(f64, f64)> = Vec::new();
            for &(lo, hi) in &nb.intervals {
                for shift in [-t, 0.0, t] {
                    let (a, b) = ((lo + shift).max(0.0), (hi + shift).min(t));
                    if b > a {
                        pieces.push((a, b));
                    }
                }
            }
            pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
            let merged = crate::sets::IntervalCover::from_unsorted(pieces, x.resolution, Ambient::Line)
                .map(|c| c.measure())
                .unwrap_or(0.0);
            merged.min(t)
        }
    }
}

/// Intervals of the cover intersected with the closed window [a, b]; circle covers are unrolled.
pub fn clip_window(x: &IntervalCover, a: f64, b: f64) -> Vec<(f64, f64)> {
    let shifts: &[f64] = match x.ambient {
        Ambient::Circle => &[-2.0 * PI, 0.0, 2.0 * PI],
        _ => &[0.0],
    };
    let mut out = Vec::new();
    for &s in shifts {
        for &(lo, hi) in x.window(a - s, b - s) {
            let (l, h) = ((lo + s).max(a), (hi + s).min(b));
            if h >= l {
                out.push((l, h));
            }
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub delta: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub samples: usize,
}

impl RegularityReport {
    /// Smallest C with C⁻¹ ≤ ratio ≤ C over the sample grid.
    pub fn constant(&self) -> f64 {
        self.c_upper.max(1.0 / self.c_lower).max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterPolicy {
    /// Take the left endpoint of every `stride`-th interval.
    pub stride: usize,
    /// Additional uniformly drawn members.
    pub random: usize,
    pub seed: u64,
}

impl Default for CenterPolicy {
    fn default() -> Self {
        CenterPolicy { stride: 16, random: 64, seed: 42 }
    }
}

/// Centers drawn from the cover according to the policy (deterministic for a given seed).
pub fn sample_centers(x: &IntervalCover, policy: &CenterPolicy) -> Vec<f64> {
    let mut centers: Vec<f64> = x.intervals.iter().step_by(policy.stride.max(1)).map(|iv| iv.0).collect();
    if !x.intervals.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
        for _ in 0..policy.random {
            let (lo, hi) = x.intervals[rng.gen_range(0..x.intervals.len())];
            let t: f64 = rng.gen();
            centers.push(lo + t * (hi - lo));
        }
    }
    centers
}

fn ambient_diameter(x: &IntervalCover) -> f64 {
    match x.ambient {
        Ambient::UnitInterval => 1.0,
        Ambient::Circle => PI,
        Ambient::Line => match (x.min(), x.max()) {
            (Some(a), Some(b)) => (b - a).max(x.resolution),
            _ => x.resolution,
        },
    }
}

/// Counting proxy 𝒩(X ∩ B(c, r), α₀)·α₀^δ / r^δ for every center and radius.
pub fn regularity_ratios(x: &IntervalCover, delta: f64, radii: &[f64], centers: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    if radii.is_empty() {
        return input("regularity check needs at least one radius");
    }
    if x.is_empty() {
        return input("regularity check needs a nonempty set");
    }
    let a0 = x.resolution;
    let diam = ambient_diameter(x);
    for &r in radii {
        if !(r >= a0 * (1.0 - 1e-9) && r <= diam * (1.0 + 1e-9)) {
            return input(format!("radius {r:e} outside [{a0:e}, {diam:e}]"));
        }
    }
    let scale = a0.powf(delta);
    let out: Vec<(f64, f64, f64)> = centers
        .par_iter()
        .flat_map_iter(|&c| {
            radii.iter().map(move |&r| {
                let n = separated_count_intervals(&clip_window(x, c - r, c + r), a0);
                (c, r, n as f64 * scale / r.powf(delta))
            })
        })
        .collect();
    Ok(out)
}

/// Worst-case empirical regularity constants over the center/radius grid.
pub fn ad_constant(x: &IntervalCover, delta: f64, radii: &[f64], policy: &CenterPolicy) -> Result<RegularityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return input(format!("δ must lie in (0,1), got {delta}"));
    }
    let centers = sample_centers(x, policy);
    let ratios = regularity_ratios(x, delta, radii, &centers)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &(_, _, v) in &ratios {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(RegularityReport { delta, c_lower: lo, c_upper: hi, samples: ratios.len() })
}

/// Fit of log(mean ratio) against log r: the slope is the mismatch between δ and the set's scaling.
pub fn regularity_drift(x: &IntervalCover, delta: f64, radii: &[f64], policy: &CenterPolicy) -> Result<FitReport> {
    let centers = sample_centers(x, policy);
    let ratios = regularity_ratios(x, delta, radii, &centers)?;
    let mut xs = Vec::with_capacity(radii.len());
    let mut ys = Vec::with_capacity(radii.len());
    for &r in radii {
        let vals: Vec<f64> = ratios.iter().filter(|t| t.1 == r).map(|t| t.2.ln()).collect();
        xs.push(r.ln());
        ys.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    FitReport::fit(xs, ys)
}

/// Arithmetic progression {start + step·i : 0 ≤ i < len} on the lattice offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progression {
    pub start: i64,
    pub step: i64,
    pub len: i64,
}

impl Progression {
    pub fn members(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len).map(move |i| self.start + self.step * i)
    }
}

/// Largest cap on lattice range accepted by [`ap_avoidance`].
pub const AP_RANGE_CAP: i64 = 1_000_000;

fn class_best(js: &[i64], eps: f64) -> (i64, i64) {
    // g(i) = ε·j_i − i; a window s..=e qualifies iff g(e) − g(s) ≤ 1 − ε.
    let g: Vec<f64> = js.iter().enumerate().map(|(i, &j)| eps * j as f64 - i as f64).collect();
    let mut pmax = Vec::with_capacity(g.len());
    let mut m = f64::NEG_INFINITY;
    for &v in &g {
        m = m.max(v);
        pmax.push(m);
    }
    let slack = 1.0 - eps + 1e-9;
    let mut best = (1i64, js[0]);
    for e in 0..g.len() {
        let s = pmax[..=e].partition_point(|&p| p < g[e] - slack);
        let c = (e - s + 1) as i64;
        let len = ((c as f64) / eps + 1e-9).floor() as i64;
        if len > best.0 {
            best = (len, js[s]);
        }
    }
    best
}

fn better(x: &(i64, Progression), y: &(i64, Progression)) -> bool {
    (x.0, -x.1.step, -x.1.start) > (y.0, -y.1.step, -y.1.start)
}

/// Longest progression P ⊂ ℤ with |P ∩ A| ≥ ε|P|, with one maximizer.
pub fn ap_avoidance(a: &LatticeSet, eps: f64) -> Result<(i64, Progression)> {
    if a.is_empty() {
        return input("progression search needs a nonempty set");
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return input(format!("ε must lie in (0,1], got {eps}"));
    }
    let range = a.range();
    if range > AP_RANGE_CAP {
        return Err(Error::Size(format!("lattice range {range} exceeds {AP_RANGE_CAP}")));
    }
    let offs = &a.offsets;
    let best = (1..=range.max(1))
        .into_par_iter()
        .map(|t| {
            let mut keyed: Vec<(i64, i64)> = offs.iter().map(|&x| (x.rem_euclid(t), x.div_euclid(t))).collect();
            keyed.sort_unstable();
            let mut best = (0i64, Progression { start: 0, step: t, len: 0 });
            let mut i = 0;
            while i < keyed.len() {
                let r = keyed[i].0;
                let mut k = i;
                while k < keyed.len() && keyed[k].0 == r {
                    k += 1;
                }
                let js: Vec<i64> = keyed[i..k].iter().map(|p| p.1).collect();
                let (len, j0) = class_best(&js, eps);
                if len > best.0 {
                    best = (len, Progression { start: r + t * j0, step: t, len });
                }
                i = k;
            }
            best
        })
        .reduce(|| (0, Progression { start: 0, step: 0, len: 0 }), |x, y| if better(&y, &x) { y } else { x });
    Ok(best)
}

/// Picks an interval I with [−1,1] ⊂ I ⊂ [−2,2] whose endpoints sit at the midpoints of
/// pieces of [−2,−1] and [1,2] (each cut into `c1` pieces) that miss Y; the pieces closest to ±1 win.
pub fn select_regular_window(y: &IntervalCover, c1: u32) -> Result<(f64, f64)> {
    if c1 == 0 {
        return input("C₁ must be a positive integer");
    }
    if y.window(-2.0, 2.0).is_empty() {
        return input("set must meet [−2, 2]");
    }
    let w = 1.0 / c1 as f64;
    let empty = |a: f64, b: f64| y.window(a, b).is_empty();
    let left = (0..c1).rev().map(|k| -2.0 + k as f64 * w).find(|&a| empty(a, a + w));
    let right = (0..c1).map(|k| 1.0 + k as f64 * w).find(|&a| empty(a, a + w));
    match (left, right) {
        (Some(l), Some(r)) => Ok((l + 0.5 * w, r + 0.5 * w)),
        (None, _) => Err(Error::Regularity(format!("no piece of [−2,−1] misses the set with C₁ = {c1}"))),
        (_, None) => Err(Error::Regularity(format!("no piece of [1,2] misses the set with C₁ = {c1}"))),
    }
}
