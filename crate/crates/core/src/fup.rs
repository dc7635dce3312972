//! Discretized oscillatory operator ℬ_χ(h) on the circle restricted to neighborhoods of a set,
//! its operator norm, the uncertainty exponent sweep, the lower-bound probe and the correlation kernel.
//!
//! The grid θ_j = (j + ½)Δθ is uniform, so the quadrature matrix is circulant before masking.
//! Masked operators are applied through FFTs; dense forms exist for small sizes and oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::fit::{is_geometric, FitReport};
use crate::geometry::chord;
use crate::sets::{Ambient, IntervalCover};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiCutoff {
    pub inner: f64,
    pub plateau_lo: f64,
    pub plateau_hi: f64,
    pub outer: f64,
    pub smoothness: u32,
}

impl Default for ChiCutoff {
    fn default() -> Self {
        ChiCutoff { inner: 0.4, plateau_lo: 0.7, plateau_hi: 1.8, outer: 1.95, smoothness: 3 }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Polynomial step with k vanishing derivatives at both ends.
fn smoothstep(k: u32, t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let mut s = 0.0;
    for j in 0..=k {
        s += binomial(k + j, j) * binomial(2 * k + 1, k - j) * (-t).powi(j as i32);
    }
    t.powi(k as i32 + 1) * s
}

impl ChiCutoff {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.inner
            && self.inner < self.plateau_lo
            && self.plateau_lo < self.plateau_hi
            && self.plateau_hi < self.outer
            && self.outer <= 2.0;
        if !ok {
            return input(format!(
                "cutoff needs 0 < inner < plateau_lo < plateau_hi < outer <= 2, got {:?}",
                (self.inner, self.plateau_lo, self.plateau_hi, self.outer)
            ));
        }
        Ok(())
    }

    /// χ as a function of chord distance.
    pub fn eval(&self, d: f64) -> f64 {
        if d <= self.inner || d >= self.outer {
            0.0
        } else if d < self.plateau_lo {
            smoothstep(self.smoothness, (d - self.inner) / (self.plateau_lo - self.inner))
        } else if d <= self.plateau_hi {
            1.0
        } else {
            smoothstep(self.smoothness, (self.outer - d) / (self.outer - self.plateau_hi))
        }
    }
}

pub trait LinearOp: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64>;
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return input(format!("{} entries for a {rows}x{cols} matrix", data.len()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return input("matrix entries must be finite");
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }
}

const ROW_BLOCK: usize = 64;

impl LinearOp for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        out.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            for (r, o) in chunk.iter_mut().enumerate() {
                let i = b * ROW_BLOCK + r;
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                *o = row.iter().zip(x).map(|(a, v)| a * v).sum();
            }
        });
        out
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        out.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            for (r, o) in chunk.iter_mut().enumerate() {
                let j = b * ROW_BLOCK + r;
                *o = (0..self.rows).map(|i| self.data[i * self.cols + j].conj() * y[i]).sum();
            }
        });
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { tol: 1e-6, max_iter: 10_000, seed: 42 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on the Gram operator A*A from a seeded random start
/// (a constant start is an exact eigenvector of every circulant and would miss the top mode).
/// Stops when the eigen-residual ‖A*Av − λv‖ drops below tol·λ.
pub fn operator_norm<O: LinearOp + ?Sized>(op: &O, opts: &NormOptions) -> NormEstimate {
    let n = op.cols();
    if n == 0 || op.rows() == 0 {
        return NormEstimate { value: 0.0, iterations: 0, converged: true };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let vn = l2(&v);
    v.iter_mut().for_each(|z| *z /= vn);
    let mut best = 0.0f64;
    for it in 1..=opts.max_iter {
        let w = op.apply_adjoint(&op.apply(&v));
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let wn = l2(&w);
        if wn == 0.0 {
            return NormEstimate { value: best.sqrt(), iterations: it, converged: true };
        }
        best = best.max(lambda);
        let res = w.iter().zip(&v).map(|(b, a)| (b - a * lambda).norm_sqr()).sum::<f64>().sqrt();
        if res <= opts.tol * lambda {
            return NormEstimate { value: best.sqrt(), iterations: it, converged: true };
        }
        v = w.into_iter().map(|z| z / wn).collect();
    }
    NormEstimate { value: best.sqrt(), iterations: opts.max_iter, converged: false }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FupOptions {
    /// Grid spacing as a multiple of h.
    pub grid_c: f64,
    pub mask_cap: usize,
    pub grid_cap: usize,
    pub chi: ChiCutoff,
    pub norm: NormOptions,
}

impl Default for FupOptions {
    fn default() -> Self {
        FupOptions { grid_c: 0.5, mask_cap: 20_000, grid_cap: 1 << 24, chi: ChiCutoff::default(), norm: NormOptions::default() }
    }
}

/// Uniform grid on the circle with n points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleGrid {
    pub n: usize,
    pub dtheta: f64,
}

impl CircleGrid {
    pub fn for_spacing(h: f64, c: f64, cap: usize) -> Result<Self> {
        if !(c > 0.0 && c <= 0.5) {
            return input(format!("grid constant must lie in (0, 0.5], got {c}"));
        }
        let n = (2.0 * PI / (c * h)).ceil();
        if n > cap as f64 {
            return Err(Error::Resource(format!("grid of {n} points at h = {h:e} exceeds the cap {cap}")));
        }
        let n = n as usize;
        Ok(CircleGrid { n, dtheta: 2.0 * PI / n as f64 })
    }

    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dtheta
    }

    /// Grid indices whose chord distance to the cover is at most `radius`.
    pub fn mask(&self, lambda: &IntervalCover, radius: f64) -> Vec<usize> {
        (0..self.n)
            .into_par_iter()
            .filter(|&j| 2.0 * (0.5 * lambda.distance(self.theta(j)).min(PI)).sin() <= radius)
            .collect()
    }
}

fn check_circle(lambda: &IntervalCover) -> Result<()> {
    if lambda.ambient != Ambient::Circle {
        return input("the operator acts on a cover of the circle");
    }
    if lambda.is_empty() {
        return input("the set is empty");
    }
    Ok(())
}

/// Quadrature matrix of ℬ_χ(h) restricted to the grid points of Λ(radius).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FupMatrix {
    pub h: f64,
    pub rho: f64,
    pub radius: f64,
    pub grid: CircleGrid,
    pub mask: Vec<usize>,
    /// Entry between grid points whose indices differ by k (mod n).
    pub row: Vec<Complex64>,
}

fn kernel_row(h: f64, grid: CircleGrid, chi: &ChiCutoff) -> Vec<Complex64> {
    let pre = (2.0 * PI * h).powf(-0.5) * grid.dtheta;
    (0..grid.n)
        .into_par_iter()
        .map(|k| {
            let d = 2.0 * (0.5 * k as f64 * grid.dtheta).sin().abs();
            let x = chi.eval(d);
            if x == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(pre * x, (2.0 / h) * d.ln())
            }
        })
        .collect()
}

/// Builds the masked quadrature matrix for the neighborhood Λ(c1·h^ρ).
pub fn build_fup_matrix(lambda: &IntervalCover, h: f64, rho: f64, c1: f64, opts: &FupOptions) -> Result<FupMatrix> {
    if !(rho > 0.0 && rho <= 1.0) {
        return input(format!("rho must lie in (0, 1], got {rho}"));
    }
    if !(c1 > 0.0) {
        return input("neighborhood constant must be positive");
    }
    let mut m = build_with_radius(lambda, h, c1 * h.powf(rho), opts)?;
    m.rho = rho;
    Ok(m)
}

fn build_with_radius(lambda: &IntervalCover, h: f64, radius: f64, opts: &FupOptions) -> Result<FupMatrix> {
    check_circle(lambda)?;
    opts.chi.validate()?;
    if !(h > 0.0 && h <= 0.2) {
        return input(format!("h must lie in (0, 0.2], got {h}"));
    }
    let grid = CircleGrid::for_spacing(h, opts.grid_c, opts.grid_cap)?;
    let mask = grid.mask(lambda, radius);
    if mask.len() > opts.mask_cap {
        return Err(Error::Resource(format!(
            "masked size {} at h = {h:e} exceeds the cap {}; use a larger h",
            mask.len(),
            opts.mask_cap
        )));
    }
    Ok(FupMatrix { h, rho: 1.0, radius, grid, mask, row: kernel_row(h, grid, &opts.chi) })
}

struct Fft2 {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 { fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) }
    }

    fn spectrum(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut b = v.to_vec();
        self.fwd.process(&mut b);
        b
    }

    /// Circular convolution with the sequence whose spectrum is given.
    fn convolve(&self, spec: &[Complex64], v: &mut [Complex64]) {
        self.fwd.process(v);
        let scale = 1.0 / v.len() as f64;
        for (a, s) in v.iter_mut().zip(spec) {
            *a *= s * scale;
        }
        self.inv.process(v);
    }
}

/// The masked circulant as a linear operator.
pub struct MaskedCirculant<'a> {
    mat: &'a FupMatrix,
    fft: Fft2,
    spec: Vec<Complex64>,
    spec_adj: Vec<Complex64>,
}

impl MaskedCirculant<'_> {
    fn scatter(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut z = vec![Complex64::new(0.0, 0.0); self.mat.grid.n];
        for (&j, &v) in self.mat.mask.iter().zip(x) {
            z[j] = v;
        }
        z
    }

    fn gather(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.mat.mask.iter().map(|&j| z[j]).collect()
    }

    /// Applies the unmasked circulant to a full-grid vector and restricts to the mask.
    pub fn apply_full(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut z = z.to_vec();
        self.fft.convolve(&self.spec, &mut z);
        self.gather(&z)
    }
}

impl LinearOp for MaskedCirculant<'_> {
    fn rows(&self) -> usize {
        self.mat.mask.len()
    }

    fn cols(&self) -> usize {
        self.mat.mask.len()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut z = self.scatter(x);
        self.fft.convolve(&self.spec, &mut z);
        self.gather(&z)
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut z = self.scatter(y);
        self.fft.convolve(&self.spec_adj, &mut z);
        self.gather(&z)
    }
}

impl FupMatrix {
    pub fn masked_size(&self) -> usize {
        self.mask.len()
    }

    /// Entry between masked positions a and b.
    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        let n = self.grid.n;
        self.row[(self.mask[a] + n - self.mask[b]) % n]
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let m = self.mask.len();
        if m > 8192 {
            return Err(Error::Resource(format!("dense form of a {m}x{m} matrix is too large")));
        }
        let data = (0..m * m).into_par_iter().map(|i| self.entry(i / m, i % m)).collect();
        Ok(DenseMatrix { rows: m, cols: m, data })
    }

    pub fn operator(&self) -> MaskedCirculant<'_> {
        let fft = Fft2::new(self.grid.n);
        let spec = fft.spectrum(&self.row);
        // The adjoint circulant has first column conj(row[−k]) = conj(row[k]).
        let adj: Vec<Complex64> = self.row.iter().map(|z| z.conj()).collect();
        let spec_adj = fft.spectrum(&adj);
        MaskedCirculant { mat: self, fft, spec, spec_adj }
    }

    /// Operator norm; exactly 0 when no two masked points are at a distance where χ is nonzero.
    pub fn norm(&self, opts: &NormOptions) -> NormEstimate {
        if self.is_degenerate() {
            return NormEstimate { value: 0.0, iterations: 0, converged: true };
        }
        operator_norm(&self.operator(), opts)
    }

    /// True when every masked entry vanishes (up to FFT roundoff in the row sums).
    pub fn is_degenerate(&self) -> bool {
        let top = self.row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.schur_bound() <= 1e-10 * top
    }

    /// Norm of the unmasked operator on the whole grid: the largest circulant eigenvalue modulus.
    pub fn full_circle_norm(&self) -> f64 {
        Fft2::new(self.grid.n).spectrum(&self.row).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Schur bound max row sum of |entries| over the mask (rows and columns agree by symmetry).
    pub fn schur_bound(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        let fft = Fft2::new(self.grid.n);
        let abs: Vec<Complex64> = self.row.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect();
        let spec = fft.spectrum(&abs);
        let mut ind = vec![Complex64::new(0.0, 0.0); self.grid.n];
        for &j in &self.mask {
            ind[j] = Complex64::new(1.0, 0.0);
        }
        fft.convolve(&spec, &mut ind);
        self.mask.iter().map(|&j| ind[j].re).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub h: f64,
    pub norm: f64,
    pub tb1_bound: f64,
    pub tb2_bound: f64,
    pub masked_size: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl NormRow {
    pub fn respects_bounds(&self) -> bool {
        self.norm <= self.tb1_bound * (1.0 + 1e-9) && self.norm <= self.tb2_bound * (1.0 + 1e-9)
    }
}

pub fn norm_row(lambda: &IntervalCover, h: f64, rho: f64, c1: f64, opts: &FupOptions) -> Result<NormRow> {
    let m = build_fup_matrix(lambda, h, rho, c1, opts)?;
    let est = m.norm(&opts.norm);
    Ok(NormRow {
        h,
        norm: est.value,
        tb1_bound: 1.05 * m.full_circle_norm(),
        tb2_bound: m.schur_bound(),
        masked_size: m.masked_size(),
        iterations: est.iterations,
        converged: est.converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FupSweep {
    pub rho: f64,
    pub c1: f64,
    pub rows: Vec<NormRow>,
    /// Slope of log‖·‖ against log h: the empirical exponent for this χ and C₁.
    pub fit: FitReport,
    pub warnings: Vec<String>,
}

impl FupSweep {
    pub fn beta(&self) -> f64 {
        self.fit.slope
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("h,norm,tb1_bound,tb2_bound,masked_size\n");
        for r in &self.rows {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{}\n", r.h, r.norm, r.tb1_bound, r.tb2_bound, r.masked_size));
        }
        s
    }
}

/// Norm sweep over h and the fitted exponent; zero norms are left out of the fit.
pub fn fup_exponent(lambda: &IntervalCover, hs: &[f64], rho: f64, c1: f64, opts: &FupOptions) -> Result<FupSweep> {
    if hs.len() < 4 || !is_geometric(hs) {
        return input("the exponent fit needs at least 4 values of h in geometric progression");
    }
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        rows.push(norm_row(lambda, h, rho, c1, opts)?);
    }
    let mut warnings = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in &rows {
        if r.norm > 0.0 {
            xs.push(r.h.ln());
            ys.push(r.norm.ln());
        } else {
            warnings.push(format!("norm vanishes at h = {:e} (degenerate mask); excluded from the fit", r.h));
        }
        if !r.converged {
            warnings.push(format!("norm iteration did not converge at h = {:e}", r.h));
        }
    }
    let fit = FitReport::fit(xs, ys).map_err(|e| Error::Input(format!("too few nonzero norms: {e}")))?;
    Ok(FupSweep { rho, c1, rows, fit, warnings })
}

/// Relative change of the norm when the grid spacing is halved.
pub fn refinement_shift(lambda: &IntervalCover, h: f64, rho: f64, c1: f64, opts: &FupOptions) -> Result<(f64, f64, f64)> {
    let coarse = build_fup_matrix(lambda, h, rho, c1, opts)?.norm(&opts.norm).value;
    let fine_opts = FupOptions { grid_c: 0.5 * opts.grid_c, mask_cap: 2 * opts.mask_cap, ..*opts };
    let fine = build_fup_matrix(lambda, h, rho, c1, &fine_opts)?.norm(&opts.norm).value;
    Ok((coarse, fine, (fine - coarse).abs() / coarse.max(f64::MIN_POSITIVE)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JnProbe {
    pub h: f64,
    pub ratio: f64,
    pub ball_points: usize,
    pub masked_size: usize,
    /// Norm of the same masked matrix, an upper bound for the ratio when the ball lies in the mask.
    pub masked_norm: f64,
}

/// ‖𝟙_{Λ(radius)} ℬ v‖ / ‖v‖ for v the indicator of the grid points in B(y₀, h^{1+ε̃}).
pub fn jn_lower_probe(
    lambda: &IntervalCover,
    h: f64,
    y0: f64,
    y1: f64,
    eps_tilde: f64,
    radius: f64,
    opts: &FupOptions,
) -> Result<JnProbe> {
    if !(eps_tilde >= 0.0) {
        return input("ball exponent offset must be non-negative");
    }
    let d01 = chord(y0, y1);
    if d01 < 1e-12 {
        return input("the probe needs two distinct points");
    }
    if opts.chi.eval(d01) < 1.0 {
        return input(format!("cutoff is not identically 1 at the pair distance {d01}"));
    }
    for y in [y0, y1] {
        if !lambda.contains(y, lambda.resolution) {
            return input(format!("angle {y} is not within the resolution of the set"));
        }
    }
    let m = build_with_radius(lambda, h, radius, opts)?;
    let r = h.powf(1.0 + eps_tilde);
    let mut v = vec![Complex64::new(0.0, 0.0); m.grid.n];
    let mut count = 0usize;
    for (j, z) in v.iter_mut().enumerate() {
        if chord(m.grid.theta(j), y0) <= r {
            *z = Complex64::new(1.0, 0.0);
            count += 1;
        }
    }
    if count == 0 {
        return input(format!("the ball of radius {r:e} around {y0} contains no grid point"));
    }
    let op = m.operator();
    let out = op.apply_full(&v);
    let ratio = l2(&out) / (count as f64).sqrt();
    let masked_norm = m.norm(&opts.norm).value;
    Ok(JnProbe { h, ratio, ball_points: count, masked_size: m.masked_size(), masked_norm })
}

/// Grid data for the correlation kernel 𝒦(y, y″; h) with ψ₀ a mollified indicator of Λ(h^{ρ/2}).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelField {
    pub h: f64,
    pub rho: f64,
    pub grid: CircleGrid,
    pub chi: ChiCutoff,
    /// Grid indices where ψ₀ is not negligible, with the values of ψ₀ there.
    pub support: Vec<(usize, f64)>,
}

/// Grid spacing used for kernel evaluation, as a multiple of h.
pub const KERNEL_GRID_C: f64 = 0.25;

impl KernelField {
    /// ψ₀ is the indicator of Λ(h^{ρ/2}) convolved with a discrete Gaussian of width h^{ρ/2}/4.
    pub fn new(lambda: &IntervalCover, h: f64, rho: f64, grid_c: f64, chi: ChiCutoff) -> Result<Self> {
        check_circle(lambda)?;
        chi.validate()?;
        if !(h > 0.0 && h <= 0.2) {
            return input(format!("h must lie in (0, 0.2], got {h}"));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return input(format!("rho must lie in (0, 1], got {rho}"));
        }
        let grid = CircleGrid::for_spacing(h, grid_c.min(0.5), 1 << 24)?;
        if grid.dtheta > 0.25 * h {
            return input(format!("grid spacing {:e} is too coarse for the phase; need at most h/4", grid.dtheta));
        }
        let r = h.powf(0.5 * rho);
        let width = 0.25 * r;
        let mut ind = vec![Complex64::new(0.0, 0.0); grid.n];
        for j in grid.mask(lambda, r) {
            ind[j] = Complex64::new(1.0, 0.0);
        }
        let mut g: Vec<Complex64> = (0..grid.n)
            .map(|k| {
                let d = k.min(grid.n - k) as f64 * grid.dtheta;
                Complex64::new((-0.5 * (d / width).powi(2)).exp(), 0.0)
            })
            .collect();
        let total: f64 = g.iter().map(|z| z.re).sum();
        for z in &mut g {
            *z /= total;
        }
        let fft = Fft2::new(grid.n);
        let spec = fft.spectrum(&g);
        fft.convolve(&spec, &mut ind);
        let support = ind.iter().enumerate().filter(|(_, z)| z.re > 1e-15).map(|(j, z)| (j, z.re)).collect();
        Ok(KernelField { h, rho, grid, chi, support })
    }

    /// h^{-1} Σ exp((2i/h)(log|y″ − y′| − log|y − y′|)) χ(|y − y′|) χ(|y″ − y′|) ψ₀(y′) Δθ.
    pub fn eval(&self, y: f64, ypp: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(j, psi) in &self.support {
            let t = self.grid.theta(j);
            let (d1, d2) = (chord(t, ypp), chord(t, y));
            let a = self.chi.eval(d1) * self.chi.eval(d2);
            if a == 0.0 {
                continue;
            }
            acc += Complex64::from_polar(a * psi, (2.0 / self.h) * (d1.ln() - d2.ln()));
        }
        acc * (self.grid.dtheta / self.h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub y: f64,
    pub ypp: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelScan {
    pub samples: Vec<KernelSample>,
    pub near_max: f64,
    pub far_max: f64,
    /// max|𝒦| over pairs farther apart than ½h^{1/2} divided by the max over nearer pairs.
    pub decay_ratio: f64,
}

impl KernelScan {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("y,ypp,re,im,abs\n");
        for k in &self.samples {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", k.y, k.ypp, k.re, k.im, k.abs));
        }
        s
    }
}

/// Evaluates 𝒦 on all pairs ys × ypps and the far/near decay ratio.
pub fn kernel_scan(field: &KernelField, ys: &[f64], ypps: &[f64]) -> Result<KernelScan> {
    if ys.is_empty() || ypps.is_empty() {
        return input("kernel scan needs sample points");
    }
    let pairs: Vec<(f64, f64)> = ypps.iter().flat_map(|&b| ys.iter().map(move |&a| (a, b))).collect();
    let samples: Vec<KernelSample> = pairs
        .par_iter()
        .map(|&(y, ypp)| {
            let k = field.eval(y, ypp);
            KernelSample { y, ypp, re: k.re, im: k.im, abs: k.norm() }
        })
        .collect();
    let threshold = 0.5 * field.h.sqrt();
    let (mut near, mut far) = (0.0f64, 0.0f64);
    for s in &samples {
        if chord(s.y, s.ypp) > threshold {
            far = far.max(s.abs);
        } else {
            near = near.max(s.abs);
        }
    }
    if near == 0.0 {
        return input("no near pair with a nonzero kernel value");
    }
    Ok(KernelScan { samples, near_max: near, far_max: far, decay_ratio: far / near })
}

/// Default scan points: all grid angles of Λ(h^ρ) as y, every `stride`-th of them as y″.
pub fn kernel_scan_points(lambda: &IntervalCover, field: &KernelField, stride: usize) -> (Vec<f64>, Vec<f64>) {
    let ys: Vec<f64> = field.grid.mask(lambda, field.h.powf(field.rho)).into_iter().map(|j| field.grid.theta(j)).collect();
    let ypps = ys.iter().step_by(stride.max(1)).copied().collect();
    (ys, ypps)
}
