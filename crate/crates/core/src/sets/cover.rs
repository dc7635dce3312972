use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambient {
    UnitInterval,
    /// Angles in [0, 2π).
    Circle,
    /// The real line, used for projected sets.
    Line,
}

impl Ambient {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ambient::UnitInterval => "unit_interval",
            Ambient::Circle => "circle",
            Ambient::Line => "line",
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self {
            Ambient::UnitInterval => (0.0, 1.0),
            Ambient::Circle => (0.0, 2.0 * PI),
            Ambient::Line => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

impl FromStr for Ambient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_interval" => Ok(Ambient::UnitInterval),
            "circle" => Ok(Ambient::Circle),
            "line" => Ok(Ambient::Line),
            other => input(format!("unknown ambient space '{other}'")),
        }
    }
}

/// A finite union of disjoint closed intervals at a stated resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalCover {
    pub intervals: Vec<(f64, f64)>,
    pub resolution: f64,
    pub ambient: Ambient,
}

const DOMAIN_SLACK: f64 = 1e-12;

impl IntervalCover {
    /// Validates that the intervals are sorted, pairwise disjoint and inside the ambient domain.
    pub fn new(intervals: Vec<(f64, f64)>, resolution: f64, ambient: Ambient) -> Result<Self> {
        let c = IntervalCover { intervals, resolution, ambient };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(resolution: f64, ambient: Ambient) -> Self {
        IntervalCover { intervals: Vec::new(), resolution, ambient }
    }

    /// Sorts and merges overlapping or touching intervals.
    pub fn from_unsorted(mut intervals: Vec<(f64, f64)>, resolution: f64, ambient: Ambient) -> Result<Self> {
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        IntervalCover::new(merge_sorted(intervals, 0.0), resolution, ambient)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0) || !self.resolution.is_finite() {
            return input(format!("cover resolution must be positive, got {}", self.resolution));
        }
        let (dlo, dhi) = self.ambient.bounds();
        for (i, &(lo, hi)) in self.intervals.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return input(format!("interval {i} = [{lo}, {hi}] is malformed"));
            }
            if lo < dlo - DOMAIN_SLACK || hi > dhi + DOMAIN_SLACK {
                return input(format!("interval {i} = [{lo}, {hi}] leaves the {} domain", self.ambient.as_str()));
            }
            if i > 0 && self.intervals[i - 1].1 >= lo {
                return input(format!("intervals {} and {i} overlap or are out of order", i - 1));
            }
        }
        Ok(())
    }

    /// Places a subset of [0, 1] on the circle by θ = 2πx (so 0 and 1 land on the same point).
    pub fn to_circle(&self) -> Result<IntervalCover> {
        if self.ambient != Ambient::UnitInterval {
            return input("only subsets of the unit interval can be wrapped onto the circle");
        }
        let t = 2.0 * PI;
        IntervalCover::new(self.intervals.iter().map(|&(lo, hi)| (t * lo, t * hi)).collect(), t * self.resolution, Ambient::Circle)
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn max_len(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
    }

    pub fn min(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.0)
    }

    pub fn max(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.1)
    }

    /// Distance from `x` to the cover, measured along the ambient space (arc length on the circle).
    pub fn distance(&self, x: f64) -> f64 {
        if self.intervals.is_empty() {
            return f64::INFINITY;
        }
        let lin = |x: f64| {
            let k = self.intervals.partition_point(|iv| iv.1 < x);
            let mut d = f64::INFINITY;
            if k < self.intervals.len() {
                d = d.min((self.intervals[k].0 - x).max(0.0));
            }
            if k > 0 {
                d = d.min(x - self.intervals[k - 1].1);
            }
            d
        };
        match self.ambient {
            Ambient::Circle => {
                let t = 2.0 * PI;
                let x = x.rem_euclid(t);
                lin(x).min(lin(x + t)).min(lin(x - t))
            }
            _ => lin(x),
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// Intervals meeting the closed window [a, b] (no clipping).
    pub fn window(&self, a: f64, b: f64) -> &[(f64, f64)] {
        let s = self.intervals.partition_point(|iv| iv.1 < a);
        let e = self.intervals.partition_point(|iv| iv.0 <= b);
        if s >= e {
            &[]
        } else {
            &self.intervals[s..e]
        }
    }

    /// The α-neighborhood as a merged cover on the line (not clipped to the domain).
    pub fn neighborhood(&self, alpha: f64) -> IntervalCover {
        let inflated = self.intervals.iter().map(|&(lo, hi)| (lo - alpha, hi + alpha)).collect();
        IntervalCover {
            intervals: merge_sorted(inflated, 0.0),
            resolution: self.resolution.max(alpha),
            ambient: Ambient::Line,
        }
    }

    /// Writes the two-column CSV form with a header comment carrying ambient and resolution.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::with_capacity(48 * (self.intervals.len() + 2));
        let _ = writeln!(s, "# ambient={} resolution={:.16e}", self.ambient.as_str(), self.resolution);
        s.push_str("lo,hi\n");
        for (lo, hi) in &self.intervals {
            let _ = writeln!(s, "{lo:.16e},{hi:.16e}");
        }
        s
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut ambient = None;
        let mut resolution = None;
        let mut intervals = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for tok in rest.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("ambient=") {
                        ambient = Some(v.parse::<Ambient>()?);
                    } else if let Some(v) = tok.strip_prefix("resolution=") {
                        resolution = Some(parse_f64(v, lineno)?);
                    }
                }
                continue;
            }
            if line == "lo,hi" {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse { line: lineno, msg: "expected two columns".into() });
            };
            intervals.push((parse_f64(a.trim(), lineno)?, parse_f64(b.trim(), lineno)?));
        }
        let ambient = ambient.ok_or(Error::Parse { line: 1, msg: "missing ambient in header".into() })?;
        let resolution = resolution.ok_or(Error::Parse { line: 1, msg: "missing resolution in header".into() })?;
        IntervalCover::new(intervals, resolution, ambient)
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("'{s}': {e}") })
}

/// Merges a list sorted by left endpoint; intervals closer than `gap` are joined.
pub(crate) fn merge_sorted(intervals: Vec<(f64, f64)>, gap: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match out.last_mut() {
            Some(last) if lo <= last.1 + gap => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}
