//! Pipelines that chain the modules: set sources, scale sweeps and the combined JSON report.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{self, ConstantsConfig, ConstantsSuite, GapReport, Scaled};
use crate::energy::{self, EnergyMethod, EnergyResult, Normalization};
use crate::error::{input, Error, Result};
use crate::fit::{geometric_range, FitReport};
use crate::fup::{self, FupOptions, FupSweep};
use crate::regularity::{ad_constant, CenterPolicy, LatticeSet, RegularityReport};
use crate::sets::{self, build_three_funnel, gen_cantor, schottky_limit_set, Ambient, CantorSpec, IntervalCover, LimitSetOptions};

/// Where a set comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSource {
    Cantor(CantorSpec),
    Schottky([f64; 3]),
    File(PathBuf),
}

impl fmt::Display for SetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSource::Cantor(s) => write!(f, "cantor {s}"),
            SetSource::Schottky([a, b, c]) => write!(f, "schottky {a},{b},{c}"),
            SetSource::File(p) => write!(f, "file {}", p.display()),
        }
    }
}

/// Parses "l1,l2,l3".
pub fn parse_lengths(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad length {t:?} in {s:?}"))))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [a, b, c] if v.iter().all(|x| *x > 0.0 && x.is_finite()) => Ok([*a, *b, *c]),
        _ => input(format!("expected three positive lengths l1,l2,l3, got {s:?}")),
    }
}

impl SetSource {
    /// The dimension if it is known in closed form.
    pub fn exact_delta(&self) -> Option<f64> {
        match self {
            SetSource::Cantor(s) => Some(s.delta()),
            _ => None,
        }
    }

    /// A cover of the set at resolution at most `alpha` (file sources are returned as stored).
    pub fn cover_at(&self, alpha: f64, limits: &LimitSetOptions) -> Result<IntervalCover> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return input(format!("scale must lie in (0, 1), got {alpha}"));
        }
        let cover = match self {
            SetSource::Cantor(s) => {
                let depth = ((1.0 / alpha).ln() / (s.base as f64).ln() - 1e-6).ceil().max(1.0) as u32;
                gen_cantor(&s.with_depth(depth))?
            }
            SetSource::Schottky([a, b, c]) => schottky_limit_set(&build_three_funnel(*a, *b, *c)?, alpha, limits)?,
            SetSource::File(p) => IntervalCover::read_csv(std::io::BufReader::new(std::fs::File::open(p)?))?,
        };
        if cover.is_empty() {
            return input(format!("{self} yields an empty set"));
        }
        Ok(cover)
    }

    /// The set on the circle: subsets of [0, 1] are wrapped by θ = 2πx.
    pub fn circle_cover_at(&self, alpha: f64, limits: &LimitSetOptions) -> Result<IntervalCover> {
        let c = match self {
            SetSource::Cantor(_) => self.cover_at(alpha / (2.0 * std::f64::consts::PI), limits)?,
            _ => self.cover_at(alpha, limits)?,
        };
        match c.ambient {
            Ambient::Circle => Ok(c),
            Ambient::UnitInterval => c.to_circle(),
            Ambient::Line => input("a cover of the line cannot be placed on the circle"),
        }
    }
}

/// Geometric scale list between two bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub start: f64,
    pub stop: f64,
    pub ratio: f64,
}

impl ScaleRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        geometric_range(self.start, self.stop, self.ratio)
    }
}

impl FromStr for ScaleRange {
    type Err = Error;

    /// "a:b" or "a:b:ratio" in either order; the list runs from the larger bound down.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return input(format!("scale range must look like 3e-4:3e-2[:ratio], got {s:?}"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad number {t:?} in {s:?}")));
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let ratio = if parts.len() == 3 { num(parts[2])? } else { 0.5 };
        let r = ScaleRange { start: a.max(b), stop: a.min(b), ratio };
        r.values()?;
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionResult {
    pub rows: Vec<(f64, usize)>,
    pub fit: FitReport,
}

impl DimensionResult {
    pub fn delta(&self) -> f64 {
        self.fit.slope
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("alpha,count\n");
        for (a, n) in &self.rows {
            s.push_str(&format!("{a:.16e},{n}\n"));
        }
        s
    }
}

pub fn dimension_sweep(source: &SetSource, scales: &[f64], limits: &LimitSetOptions) -> Result<DimensionResult> {
    let family: Vec<(f64, IntervalCover)> = scales.iter().map(|&a| Ok((a, source.cover_at(a, limits)?))).collect::<Result<_>>()?;
    let fit = sets::minkowski_dimension(&family)?;
    let rows = family.iter().map(|(a, c)| (*a, sets::box_count(c, *a))).collect();
    Ok(DimensionResult { rows, fit })
}

/// Radii for regularity checks: powers of two from 4α₀ up to a quarter of the ambient size.
pub fn regularity_radii(cover: &IntervalCover) -> Result<Vec<f64>> {
    let top = match cover.ambient {
        Ambient::Circle => 0.5 * std::f64::consts::PI,
        _ => 0.25 * (cover.max().unwrap_or(1.0) - cover.min().unwrap_or(0.0)).max(cover.resolution * 8.0),
    };
    let lo = 4.0 * cover.resolution;
    if lo >= top {
        return input("cover resolution is too coarse for a regularity check");
    }
    geometric_range(top, lo, 0.5)
}

pub fn regularity_check(cover: &IntervalCover, delta: f64, seed: u64) -> Result<RegularityReport> {
    let radii = regularity_radii(cover)?;
    ad_constant(cover, delta, &radii, &CenterPolicy { seed, ..CenterPolicy::default() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySweep {
    pub rows: Vec<EnergyResult>,
    pub sizes: Vec<usize>,
    /// Slope of log count against log α, expected near −(3δ − β_E).
    pub fit: FitReport,
    /// Scales where |A|² ≤ count ≤ 3|A|³ fails.
    pub bound_violations: Vec<f64>,
}

impl EnergySweep {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("alpha,count,energy_def15,energy_def62,method\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.16e},{},{:.16e},{:.16e},{}\n",
                r.alpha,
                r.count,
                r.energy_def15,
                r.energy_def62,
                r.method.as_str()
            ));
        }
        s
    }
}

/// Lattice energy (tolerance one lattice unit) of the set at every scale, with the fitted slope.
pub fn energy_sweep(source: &SetSource, scales: &[f64], limits: &LimitSetOptions) -> Result<EnergySweep> {
    let mut rows = Vec::with_capacity(scales.len());
    let mut sizes = Vec::with_capacity(scales.len());
    let mut bound_violations = Vec::new();
    for &a in scales {
        let lat = LatticeSet::from_cover(&source.cover_at(a, limits)?, a)?;
        let r = energy::energy(&lat, 1, EnergyMethod::Histogram)?;
        if !energy::basic_bounds_hold(r.count, lat.len(), 1) {
            bound_violations.push(a);
        }
        sizes.push(lat.len());
        rows.push(r);
    }
    let fit = energy::energy_exponent(&rows, Normalization::Count, 0)?;
    Ok(EnergySweep { rows, sizes, fit, bound_violations })
}

/// Norm sweep of the uncertainty operator for the set placed on the circle.
pub fn fup_sweep(source: &SetSource, hs: &[f64], rho: f64, c1: f64, opts: &FupOptions, limits: &LimitSetOptions) -> Result<FupSweep> {
    let finest = hs.iter().copied().fold(f64::INFINITY, f64::min);
    let cover = source.circle_cover_at(0.05 * finest, limits)?;
    fup::fup_exponent(&cover, hs, rho, c1, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Measured,
    Formula,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    /// Natural logarithm for quantities that leave floating-point range.
    pub ln: Option<f64>,
    pub kind: Kind,
}

impl Quantity {
    fn measured(value: f64) -> Self {
        Quantity { value, ln: None, kind: Kind::Measured }
    }

    fn formula(value: f64) -> Self {
        Quantity { value, ln: None, kind: Kind::Formula }
    }

    fn scaled(s: Scaled) -> Self {
        Quantity { value: s.value, ln: Some(s.ln), kind: Kind::Formula }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub seed: u64,
    pub constants: ConstantsConfig,
    /// Branching base M for the tree constants.
    pub tree_base: f64,
    pub limits: LimitSetOptions,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { seed: 42, constants: ConstantsConfig::default(), tree_base: 4.0, limits: LimitSetOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub source: String,
    pub scales: Vec<f64>,
    pub seed: u64,
    pub delta: Quantity,
    pub delta_exact: Option<Quantity>,
    pub dimension: DimensionResult,
    pub regularity: Option<RegularityReport>,
    pub c_reg: Option<Quantity>,
    pub energy: EnergySweep,
    pub energy_slope: Quantity,
    /// 3δ + slope, the energy exponent implied by the measured slope.
    pub beta_e_measured: Quantity,
    /// β from the measured energy exponent clipped to [0, δ].
    pub beta_measured: Option<Quantity>,
    pub beta_e_formula: Option<Quantity>,
    pub beta_formula: Option<Quantity>,
    pub beta_std: Quantity,
    pub beta_jn: Quantity,
    pub improvement_range: (f64, f64),
    pub gap_measured: Option<GapReport>,
    pub constants: Option<ConstantsSuite>,
    /// Unknown absolute constants used by the formulas (defaults of 1 are placeholders).
    pub constants_config: ConstantsConfig,
}

impl FullReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Input(format!("report serialization failed: {e}")))
    }
}

/// Measured δ, regularity constant and energy exponent side by side with the closed-form constants.
pub fn full_report(source: &SetSource, scales: &ScaleRange, opts: &ReportOptions) -> Result<FullReport> {
    opts.constants.validate()?;
    let values = scales.values()?;
    let dimension = dimension_sweep(source, &values, &opts.limits)?;
    let delta = dimension.delta();
    let in_unit = delta > 0.0 && delta < 1.0;
    let finest = values.iter().copied().fold(f64::INFINITY, f64::min);
    let regularity = if in_unit {
        Some(regularity_check(&source.cover_at(finest, &opts.limits)?, delta, opts.seed)?)
    } else {
        None
    };
    let c_reg = regularity.as_ref().map(|r| r.constant());
    let energy = energy_sweep(source, &values, &opts.limits)?;
    let slope = energy.fit.slope;
    let beta_e_raw = 3.0 * delta + slope;
    let beta_measured = if in_unit { Some(constants::beta_gap(2, delta, beta_e_raw.clamp(0.0, delta))?) } else { None };
    let (beta_e_formula, beta_formula, constants_suite) = match (in_unit, c_reg) {
        (true, Some(c)) => {
            let be = constants::beta_e_of_c(delta, c, &opts.constants)?;
            let bf = constants::beta_gap(2, delta, be.value.min(delta))?;
            let suite = constants::constants_suite(delta, c, opts.tree_base, 1.0, &opts.constants)?;
            (Some(Quantity::scaled(be)), Some(Quantity::formula(bf)), Some(suite))
        }
        _ => (None, None, None),
    };
    let gap_measured = if in_unit { Some(constants::gap_report(2, delta, beta_e_raw.clamp(0.0, delta), c_reg)?) } else { None };
    Ok(FullReport {
        source: source.to_string(),
        scales: values,
        seed: opts.seed,
        delta: Quantity::measured(delta),
        delta_exact: source.exact_delta().map(Quantity::formula),
        dimension,
        regularity,
        c_reg: c_reg.map(Quantity::measured),
        energy_slope: Quantity::measured(slope),
        energy,
        beta_e_measured: Quantity::measured(beta_e_raw),
        beta_measured: beta_measured.map(Quantity::measured),
        beta_e_formula,
        beta_formula,
        beta_std: Quantity::formula(constants::beta_std(2, delta)),
        beta_jn: Quantity::formula(constants::beta_jn(2, delta)),
        improvement_range: constants::improvement_range(2),
        gap_measured,
        constants: constants_suite,
        constants_config: opts.constants,
    })
}
