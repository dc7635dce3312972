//! Three-funneled Schottky groups in a fixed normal form and covers of their limit sets.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cover::{Ambient, IntervalCover};
use crate::error::{input, Error, Result};
use crate::geometry::{angle_diff, boundary_angle, cayley_point, wrap_angle, Mat2};

const TWO_PI: f64 = 2.0 * PI;

/// Boundary points sampled per disk for the pairing check.
pub const PAIRING_SAMPLES: usize = 256;

/// Counterclockwise boundary arc in cover coordinates (see [`boundary_angle`]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub len: f64,
}

impl Arc {
    pub fn between(start: f64, end: f64) -> Arc {
        Arc { start: wrap_angle(start), len: (end - start).rem_euclid(TWO_PI) }
    }

    /// The arc with endpoints a and b that contains `inside`.
    pub fn through(a: f64, b: f64, inside: f64) -> Arc {
        let arc = Arc::between(a, b);
        if arc.contains(inside) {
            arc
        } else {
            Arc::between(b, a)
        }
    }

    pub fn end(&self) -> f64 {
        wrap_angle(self.start + self.len)
    }

    pub fn mid(&self) -> f64 {
        wrap_angle(self.start + 0.5 * self.len)
    }

    pub fn contains(&self, t: f64) -> bool {
        (t - self.start).rem_euclid(TWO_PI) <= self.len
    }

    pub fn image(&self, g: &Mat2) -> Arc {
        Arc::between(g.apply_angle(self.start), g.apply_angle(self.start + self.len))
    }

    fn overlaps(&self, o: &Arc) -> bool {
        self.contains(o.start) || o.contains(self.start)
    }
}

/// Two hyperbolic generators with paired boundary disks D₁..D₄:
/// `generator(j)` maps the closure of `disks[j]` onto the complement of `disks[(j + 2) % 4]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchottkyGroup {
    pub gen1: Mat2,
    pub gen2: Mat2,
    pub disks: [Arc; 4],
    pub lengths: [f64; 3],
}

fn fixed_points(g: &Mat2) -> (f64, f64) {
    // c z² + (d − a) z − b = 0; returns (repelling, attracting).
    let disc = ((g.a - g.d).powi(2) + 4.0 * g.b * g.c).sqrt();
    let z1 = ((g.a - g.d) + disc) / (2.0 * g.c);
    let z2 = ((g.a - g.d) - disc) / (2.0 * g.c);
    let k1 = (g.c * z1 + g.d).abs();
    if k1 > 1.0 {
        (z2, z1)
    } else {
        (z1, z2)
    }
}

/// Builds the normal-form group with funnel lengths (ℓ₁, ℓ₂, ℓ₃).
///
/// gen1 = diag(e^{ℓ₁/2}, e^{−ℓ₁/2}); gen2 has trace 2cosh(ℓ₂/2), an axis symmetric under
/// inversion in the unit circle, and trace(gen1·gen2) = −2cosh(ℓ₃/2). The unit circle is
/// the common perpendicular of the two axes, and each pair of disks is bounded by the
/// geodesics perpendicular to the axis at distance ℓ/2 on either side of it.
pub fn build_three_funnel(l1: f64, l2: f64, l3: f64) -> Result<SchottkyGroup> {
    for (i, l) in [l1, l2, l3].iter().enumerate() {
        if !(*l > 0.0) || !l.is_finite() {
            return input(format!("funnel length ℓ{} must be positive, got {l}", i + 1));
        }
    }
    let lam = (0.5 * l1).exp();
    let t2 = 2.0 * (0.5 * l2).cosh();
    let t3 = 2.0 * (0.5 * l3).cosh();
    let gen1 = Mat2::new(lam, 0.0, 0.0, 1.0 / lam);
    let a = -(t3 + t2 / lam) / (lam - 1.0 / lam);
    let d = t2 - a;
    let c = -(1.0 - a * d).sqrt();
    let gen2 = Mat2::new(a, -c, c, d);

    let d1 = Arc::between(boundary_angle(-1.0 / lam), boundary_angle(1.0 / lam));
    let d3 = Arc::between(boundary_angle(lam), boundary_angle(-lam));

    let (rep, att) = fixed_points(&gen2);
    let m_inv = |w: f64| (w * att - rep) / (w - 1.0);
    let r0 = ((1.0 - rep) / (1.0 - att)).abs();
    let mu = (0.5 * l2).exp();
    let (r2, r4) = (r0 / mu, r0 * mu);
    let d2 = Arc::through(boundary_angle(m_inv(r2)), boundary_angle(m_inv(-r2)), boundary_angle(rep));
    let d4 = Arc::through(boundary_angle(m_inv(r4)), boundary_angle(m_inv(-r4)), boundary_angle(att));

    let g = SchottkyGroup { gen1, gen2, disks: [d1, d2, d3, d4], lengths: [l1, l2, l3] };
    g.check_disks()?;
    let residual = g.pairing_residual();
    if !(residual <= 1e-8) {
        return Err(Error::Geometry(format!("generators do not pair the disks (residual {residual:e})")));
    }
    Ok(g)
}

impl SchottkyGroup {
    /// γ₁ = gen1, γ₂ = gen2, γ₃ = gen1⁻¹, γ₄ = gen2⁻¹ (zero-based here).
    pub fn generator(&self, j: usize) -> Mat2 {
        match j % 4 {
            0 => self.gen1,
            1 => self.gen2,
            2 => self.gen1.inv(),
            _ => self.gen2.inv(),
        }
    }

    fn check_disks(&self) -> Result<()> {
        for i in 0..4 {
            if self.disks[i].contains(0.0) {
                return Err(Error::Geometry(format!("disk D{} contains the base angle", i + 1)));
            }
            for j in i + 1..4 {
                if self.disks[i].overlaps(&self.disks[j]) {
                    return Err(Error::Geometry(format!("disks D{} and D{} overlap", i + 1, j + 1)));
                }
            }
        }
        Ok(())
    }

    /// Relative trace errors against 2cosh(ℓ₁/2), 2cosh(ℓ₂/2), 2cosh(ℓ₃/2).
    pub fn trace_residuals(&self) -> [f64; 3] {
        let want = self.lengths.map(|l| 2.0 * (0.5 * l).cosh());
        let got = [self.gen1.trace().abs(), self.gen2.trace().abs(), self.gen1.mul(&self.gen2).trace().abs()];
        [0, 1, 2].map(|i| (got[i] - want[i]).abs() / want[i])
    }

    /// Maximum deviation, over sampled points of the boundary geodesic of each D_j, of the image
    /// under γ_j from the boundary geodesic of D_{j+2}; infinite if an interior point of D_j
    /// fails to land outside D_{j+2}.
    pub fn pairing_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..4 {
            let g = self.generator(j);
            let src = Geodesic::of(&self.disks[j]);
            let dst = Geodesic::of(&self.disks[(j + 2) % 4]);
            for k in 0..PAIRING_SAMPLES {
                let t = (k as f64 + 0.5) / PAIRING_SAMPLES as f64;
                let img = g.apply_disk(src.point(t));
                worst = worst.max(dst.residual(img));
            }
            let img = g.apply_disk(src.interior_point());
            if dst.in_region(img) {
                return f64::INFINITY;
            }
        }
        worst
    }

    /// Half-turn about the midpoint of the common perpendicular of the two axes.
    /// It swaps the axes, so it normalizes the group when ℓ₁ = ℓ₂.
    pub fn seam_half_turn(&self) -> Mat2 {
        let (p, q) = fixed_points(&self.gen2);
        let c = 0.5 * (p + q);
        let r = 0.5 * (p - q).abs();
        let x = (1.0 + c * c - r * r) / (2.0 * c);
        let foot = Complex64::new(x, (1.0 - x * x).max(0.0).sqrt());
        // S sends the unit-circle geodesic to the imaginary axis and fixes i.
        let s = 1.0 / 2f64.sqrt();
        let sm = Mat2::new(s, s, -s, s);
        let t = sm.apply_complex(foot).im;
        let m = sm.inv().apply_complex(Complex64::new(0.0, t.sqrt()));
        let sy = m.im.sqrt();
        let pm = Mat2::new(sy, m.re / sy, 0.0, 1.0 / sy);
        pm.mul(&Mat2::new(0.0, 1.0, -1.0, 0.0)).mul(&pm.inv())
    }

    /// Flat key-value record with matrix entries row-major at 17 significant digits.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "l1={:.16e}\nl2={:.16e}\nl3={:.16e}", self.lengths[0], self.lengths[1], self.lengths[2]);
        for (name, m) in [("gen1", &self.gen1), ("gen2", &self.gen2)] {
            let _ = writeln!(s, "{name}={:.16e},{:.16e},{:.16e},{:.16e}", m.a, m.b, m.c, m.d);
        }
        for (i, d) in self.disks.iter().enumerate() {
            let _ = writeln!(s, "d{}={:.16e},{:.16e}", i + 1, d.start, d.len);
        }
        s
    }

    pub fn from_record(text: &str) -> Result<SchottkyGroup> {
        let mut map = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse { line: i + 1, msg: "expected key=value".into() })?;
            let vals: std::result::Result<Vec<f64>, _> = v.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            map.insert(k.trim().to_string(), vals);
        }
        let get = |k: &str, n: usize| -> Result<Vec<f64>> {
            match map.get(k) {
                Some(v) if v.len() == n => Ok(v.clone()),
                _ => Err(Error::Parse { line: 0, msg: format!("missing or malformed field '{k}'") }),
            }
        };
        let m = |v: Vec<f64>| Mat2::new(v[0], v[1], v[2], v[3]);
        let arc = |v: Vec<f64>| Arc { start: v[0], len: v[1] };
        Ok(SchottkyGroup {
            gen1: m(get("gen1", 4)?),
            gen2: m(get("gen2", 4)?),
            disks: [arc(get("d1", 2)?), arc(get("d2", 2)?), arc(get("d3", 2)?), arc(get("d4", 2)?)],
            lengths: [get("l1", 1)?[0], get("l2", 1)?[0], get("l3", 1)?[0]],
        })
    }
}

/// The geodesic of the disk model bounding a boundary arc.
struct Geodesic {
    center: Complex64,
    radius: f64,
    from: f64,
    sweep: f64,
    boundary_mid: Complex64,
    arc: Arc,
}

fn to_c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl Geodesic {
    fn of(arc: &Arc) -> Geodesic {
        let half = 0.5 * arc.len;
        let mid = to_c(cayley_point(arc.mid()));
        let center = mid / half.cos();
        let radius = half.tan().abs();
        let e1 = to_c(cayley_point(arc.start)) - center;
        let e2 = to_c(cayley_point(arc.end())) - center;
        let (b1, b2) = (e1.arg(), e2.arg());
        let short = angle_diff(b1, b2);
        let long = if short > 0.0 { short - TWO_PI } else { short + TWO_PI };
        let probe = |sw: f64| (center + Complex64::from_polar(radius, b1 + 0.5 * sw)).norm();
        let sweep = if probe(short) < probe(long) { short } else { long };
        Geodesic { center, radius, from: b1, sweep, boundary_mid: mid, arc: *arc }
    }

    fn point(&self, t: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, self.from + t * self.sweep)
    }

    fn residual(&self, z: Complex64) -> f64 {
        ((z - self.center).norm() - self.radius).abs()
    }

    fn side(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }

    fn in_region(&self, z: Complex64) -> bool {
        self.side(z) == self.side(self.boundary_mid * 0.999_999)
    }

    fn interior_point(&self) -> Complex64 {
        // Halfway between the geodesic and the boundary along the ray through the arc midpoint.
        let g = self.point(0.5).norm();
        let dir = to_c(cayley_point(self.arc.mid()));
        dir * (0.5 * (1.0 + g))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSetOptions {
    /// Maximum number of word-tree nodes visited.
    pub node_budget: usize,
    /// Stop at this word length regardless of arc length.
    pub max_word_len: Option<usize>,
}

impl Default for LimitSetOptions {
    fn default() -> Self {
        LimitSetOptions { node_budget: 20_000_000, max_word_len: None }
    }
}

struct Walk<'a> {
    gens: [Mat2; 4],
    disks: &'a [Arc; 4],
    alpha: f64,
    max_len: Option<usize>,
    budget: usize,
    visited: &'a AtomicUsize,
    deepest: usize,
}

impl Walk<'_> {
    fn descend(&mut self, word: Mat2, m: usize, depth: usize, out: &mut Vec<(f64, f64)>) -> bool {
        if self.visited.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return false;
        }
        self.deepest = self.deepest.max(depth);
        let arc = self.disks[m].image(&word);
        let stop = match self.max_len {
            Some(k) => depth >= k,
            None => arc.len < self.alpha,
        };
        if stop {
            out.push((arc.start, arc.start + arc.len));
            return true;
        }
        let next = word.mul(&self.gens[(m + 2) % 4]);
        for n in 0..4 {
            if n != (m + 2) % 4 && !self.descend(next, n, depth + 1, out) {
                return false;
            }
        }
        true
    }
}

/// Cover of the limit set by the arcs γ(D_m) of reduced words, refined until every arc is
/// shorter than `alpha` (or until `max_word_len` when set). Word length 1 gives the disks.
pub fn schottky_limit_set(g: &SchottkyGroup, alpha: f64, opts: &LimitSetOptions) -> Result<IntervalCover> {
    if !(alpha > 0.0) {
        return input(format!("resolution must be positive, got {alpha}"));
    }
    let gens = [0, 1, 2, 3].map(|j| g.generator(j));
    let visited = AtomicUsize::new(0);
    let parts: Vec<(bool, usize, Vec<(f64, f64)>)> = (0..4)
        .into_par_iter()
        .map(|m| {
            let mut walk = Walk {
                gens,
                disks: &g.disks,
                alpha,
                max_len: opts.max_word_len,
                budget: opts.node_budget,
                visited: &visited,
                deepest: 0,
            };
            let mut out = Vec::new();
            let ok = walk.descend(Mat2::IDENTITY, m, 1, &mut out);
            (ok, walk.deepest, out)
        })
        .collect();
    if parts.iter().any(|p| !p.0) {
        let deepest = parts.iter().map(|p| p.1).max().unwrap_or(0);
        let arcs: usize = parts.iter().map(|p| p.2.len()).sum();
        return Err(Error::Resource(format!(
            "limit-set word tree exceeded {} nodes at resolution {alpha:e} (reached word length {deepest}, {arcs} finished arcs)",
            opts.node_budget
        )));
    }
    let mut arcs: Vec<(f64, f64)> = parts.into_iter().flat_map(|p| p.2).collect();
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let resolution = match opts.max_word_len {
        Some(_) => arcs.iter().map(|a| a.1 - a.0).fold(0.0, f64::max).max(f64::MIN_POSITIVE),
        None => alpha,
    };
    IntervalCover::new(arcs, resolution, Ambient::Circle)
}
