//! Regular subsets of the unit interval and the circle, stored as finite unions of closed intervals.

mod cantor;
mod cover;
pub mod schottky;

pub use cantor::{gen_cantor, CantorSpec, DigitRule};
pub use cover::{Ambient, IntervalCover};
pub use schottky::{build_three_funnel, schottky_limit_set, LimitSetOptions, SchottkyGroup};

use crate::error::{input, Result};
use crate::fit::FitReport;

/// Number of α-boxes needed to cover the intervals one by one (a point still costs one box).
pub fn box_count(cover: &IntervalCover, alpha: f64) -> usize {
    cover
        .intervals
        .iter()
        .map(|&(lo, hi)| {
            let k = ((hi - lo) / alpha - 1e-9).ceil();
            if k < 1.0 {
                1
            } else {
                k as usize
            }
        })
        .sum()
}

/// Fits log N(α) against log(1/α) over a family of covers indexed by scale.
pub fn minkowski_dimension(family: &[(f64, IntervalCover)]) -> Result<FitReport> {
    if family.len() < 3 {
        return input(format!("dimension fit needs at least 3 scales, got {}", family.len()));
    }
    if family.iter().any(|(a, _)| !(*a > 0.0)) {
        return input("scales must be positive");
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (a, _) in family {
        lo = lo.min(*a);
        hi = hi.max(*a);
    }
    if (hi / lo).log10() < 2.0 - 1e-9 {
        return input(format!("scales must span at least two decades, got {lo:e}..{hi:e}"));
    }
    let mut xs = Vec::with_capacity(family.len());
    let mut ys = Vec::with_capacity(family.len());
    for (a, cover) in family {
        let n = box_count(cover, *a);
        if n == 0 {
            return input("cannot fit the dimension of an empty cover");
        }
        xs.push((1.0 / a).ln());
        ys.push((n as f64).ln());
    }
    FitReport::fit(xs, ys)
}
