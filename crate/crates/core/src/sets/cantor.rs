use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cover::{Ambient, IntervalCover};
use crate::error::{input, Error, Result};

/// Most cylinders a single Cantor construction may materialize.
pub const MAX_CYLINDERS: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitRule {
    /// The same digit subset at every position.
    Fixed(Vec<u32>),
    /// Odd positions take any digit, even positions are forced to zero.
    Alternating,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub base: u32,
    pub digits: DigitRule,
    pub depth: u32,
}

impl CantorSpec {
    pub fn new(base: u32, digits: DigitRule, depth: u32) -> Result<Self> {
        let s = CantorSpec { base, digits, depth };
        s.validate()?;
        Ok(s)
    }

    pub fn middle_third(depth: u32) -> Self {
        CantorSpec { base: 3, digits: DigitRule::Fixed(vec![0, 2]), depth }
    }

    pub fn with_depth(&self, depth: u32) -> Self {
        CantorSpec { depth, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base < 3 {
            return input(format!("Cantor base must be at least 3, got {}", self.base));
        }
        if self.depth < 1 {
            return input("Cantor depth must be at least 1");
        }
        if let DigitRule::Fixed(d) = &self.digits {
            if d.is_empty() {
                return input("digit set must be nonempty");
            }
            let mut sorted = d.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != d.len() {
                return input("digit set has repeated digits");
            }
            if sorted.iter().any(|&x| x >= self.base) {
                return input(format!("digits must lie in 0..{}", self.base));
            }
            if sorted.len() as u32 == self.base {
                return input("digit set must be a proper subset of the digits");
            }
        }
        if self.depth as f64 * (self.base as f64).ln() > 60.0 * 2f64.ln() + 1e-12 {
            return Err(Error::Size(format!(
                "base {} at depth {} exceeds 2^60 cells",
                self.base, self.depth
            )));
        }
        Ok(())
    }

    fn allowed(&self, position: u32) -> Vec<u32> {
        match &self.digits {
            DigitRule::Fixed(d) => {
                let mut d = d.clone();
                d.sort_unstable();
                d
            }
            DigitRule::Alternating => {
                if position % 2 == 1 {
                    (0..self.base).collect()
                } else {
                    vec![0]
                }
            }
        }
    }

    /// Dimension of the limiting set.
    pub fn delta(&self) -> f64 {
        match &self.digits {
            DigitRule::Fixed(d) => (d.len() as f64).ln() / (self.base as f64).ln(),
            DigitRule::Alternating => 0.5,
        }
    }

    /// Number of depth-d cylinders.
    pub fn cylinder_count(&self) -> u64 {
        (1..=self.depth).fold(1u64, |acc, p| acc.saturating_mul(self.allowed(p).len() as u64))
    }

    /// Cell width base^(−depth).
    pub fn cell(&self) -> f64 {
        (self.base as f64).powi(-(self.depth as i32))
    }

    /// Sorted integer indices i of the admissible cylinders [i·C^{−d}, (i+1)·C^{−d}].
    pub fn cylinders(&self) -> Result<Vec<u64>> {
        self.validate()?;
        let count = self.cylinder_count();
        if count > MAX_CYLINDERS {
            return Err(Error::Size(format!("{count} cylinders exceed the limit {MAX_CYLINDERS}")));
        }
        let mut idx = vec![0u64];
        for p in 1..=self.depth {
            let digits = self.allowed(p);
            let mut next = Vec::with_capacity(idx.len() * digits.len());
            for &i in &idx {
                for &a in &digits {
                    next.push(i * self.base as u64 + a as u64);
                }
            }
            idx = next;
        }
        Ok(idx)
    }
}

impl fmt::Display for CantorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.digits {
            DigitRule::Alternating => write!(f, "{}:alt", self.base),
            DigitRule::Fixed(d) => {
                let sep = if self.base > 10 { "," } else { "" };
                let s: Vec<String> = d.iter().map(|x| x.to_string()).collect();
                write!(f, "{}:{}", self.base, s.join(sep))
            }
        }
    }
}

/// Parses `base:digits` such as `3:02`, `12:0,5,11` or `4:alt`; depth defaults to 1.
impl FromStr for CantorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (b, d) = s
            .split_once(':')
            .ok_or_else(|| Error::Input(format!("Cantor spec '{s}' must look like 3:02 or 4:alt")))?;
        let base: u32 = b.trim().parse().map_err(|_| Error::Input(format!("bad Cantor base '{b}'")))?;
        let d = d.trim();
        let digits = if d == "alt" {
            DigitRule::Alternating
        } else if d.contains(',') {
            let v: std::result::Result<Vec<u32>, _> = d.split(',').map(|t| t.trim().parse::<u32>()).collect();
            DigitRule::Fixed(v.map_err(|_| Error::Input(format!("bad digit list '{d}'")))?)
        } else {
            let v: Option<Vec<u32>> = d.chars().map(|c| c.to_digit(10)).collect();
            DigitRule::Fixed(v.ok_or_else(|| Error::Input(format!("bad digit list '{d}'")))?)
        };
        CantorSpec::new(base, digits, 1)
    }
}

/// Union of admissible depth-d cylinders; touching cylinders are merged into one interval.
pub fn gen_cantor(spec: &CantorSpec) -> Result<IntervalCover> {
    let idx = spec.cylinders()?;
    let total = (spec.base as u64).pow(spec.depth);
    let scale = total as f64;
    let mut runs: Vec<(u64, u64)> = Vec::new();
    for i in idx {
        match runs.last_mut() {
            Some(r) if r.1 == i => r.1 = i + 1,
            _ => runs.push((i, i + 1)),
        }
    }
    let intervals = runs.into_iter().map(|(a, b)| (a as f64 / scale, b as f64 / scale)).collect();
    IntervalCover::new(intervals, 1.0 / scale, Ambient::UnitInterval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn middle_third_levels() {
        let c = gen_cantor(&CantorSpec::middle_third(1)).unwrap();
        assert_eq!(c.intervals, vec![(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)]);
        let c = gen_cantor(&CantorSpec::middle_third(2)).unwrap();
        assert_eq!(c.intervals, vec![(0.0, 1.0 / 9.0), (2.0 / 9.0, 1.0 / 3.0), (2.0 / 3.0, 7.0 / 9.0), (8.0 / 9.0, 1.0)]);
        assert_eq!(c.resolution, 1.0 / 9.0);
    }

    #[test]
    fn alternating_base_four() {
        let spec = CantorSpec::new(4, DigitRule::Alternating, 4).unwrap();
        let c = gen_cantor(&spec).unwrap();
        assert_eq!(c.len(), 16);
        for (lo, hi) in &c.intervals {
            assert!((hi - lo - 4f64.powi(-4)).abs() < 1e-15);
        }
        assert_eq!(spec.delta(), 0.5);
        // Odd depth: the free last digit fills whole parent cells.
        let c3 = gen_cantor(&spec.with_depth(3)).unwrap();
        assert_eq!(c3.len(), 4);
        assert!(c3.max_len() <= 4.0 * c3.resolution + 1e-15);
    }

    #[test]
    fn parsing() {
        let s: CantorSpec = "3:02".parse().unwrap();
        assert_eq!(s.digits, DigitRule::Fixed(vec![0, 2]));
        assert_eq!(s.to_string(), "3:02");
        let s: CantorSpec = "4:alt".parse().unwrap();
        assert_eq!(s.digits, DigitRule::Alternating);
        let s: CantorSpec = "12:0,5,11".parse().unwrap();
        assert_eq!(s.to_string(), "12:0,5,11");
        assert!("3:012".parse::<CantorSpec>().is_err());
        assert!("2:0".parse::<CantorSpec>().is_err());
        assert!("3:05".parse::<CantorSpec>().is_err());
        assert!("302".parse::<CantorSpec>().is_err());
    }

    #[test]
    fn size_guard() {
        assert!(matches!(CantorSpec::new(3, DigitRule::Fixed(vec![0, 2]), 40), Err(Error::Size(_))));
        let big = CantorSpec::new(3, DigitRule::Fixed(vec![0, 1]), 37).unwrap();
        assert!(matches!(gen_cantor(&big), Err(Error::Size(_))));
    }
}
