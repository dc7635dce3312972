//! Formula layer for the Poincaré disk, the hyperboloid and the upper half-plane (n = 2).
//!
//! Points of the boundary circle are passed either as unit vectors `[f64; 2]` or as angles.
//! The scalar cotangent at a circle point is taken against the counterclockwise unit tangent.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

const TWO_PI: f64 = 2.0 * PI;

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm_sq(a: Vec2) -> f64 {
    dot(a, a)
}

#[inline]
fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

#[inline]
fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
fn rot90(a: Vec2) -> Vec2 {
    [-a[1], a[0]]
}

pub fn circle_point(theta: f64) -> Vec2 {
    [theta.cos(), theta.sin()]
}

/// Angle of a nonzero vector, normalized to [0, 2π).
pub fn angle_of(p: Vec2) -> f64 {
    wrap_angle(p[1].atan2(p[0]))
}

pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Signed angular difference b − a reduced to (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(TWO_PI);
    if d > PI {
        d - TWO_PI
    } else {
        d
    }
}

/// Euclidean (chordal) distance between the circle points at angles a and b.
pub fn chord(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * (b - a)).sin().abs()
}

/// Vector form of 𝒢(y, y′) = (y′ − (y·y′) y) / (1 − y·y′), tangent to the circle at y.
pub fn stereo_g_vec(y: Vec2, yp: Vec2) -> Result<Vec2> {
    let c = dot(y, yp);
    let den = 1.0 - c;
    if den <= 1e-28 {
        return Err(Error::Singular("stereographic projection at its base point".into()));
    }
    Ok(scale(1.0 / den, sub(yp, scale(c, y))))
}

/// Scalar 𝒢(y, y′) for circle points at angles `theta` and `theta_p`: cot((θ′ − θ)/2).
pub fn stereo_g(theta: f64, theta_p: f64) -> Result<f64> {
    let half = 0.5 * angle_diff(theta, theta_p);
    if half.abs() < 0.5e-14 {
        return Err(Error::Singular(format!(
            "stereographic projection at its base point (angle {theta})"
        )));
    }
    Ok(half.cos() / half.sin())
}

/// Scalar 𝒢 for unit vectors, against the counterclockwise tangent at `y`.
pub fn stereo_g_pts(y: Vec2, yp: Vec2) -> Result<f64> {
    Ok(dot(stereo_g_vec(y, yp)?, rot90(y)))
}

/// Poisson kernel (1 − |x|²) / |x − y|².
pub fn poisson_kernel(x: Vec2, y: Vec2) -> f64 {
    (1.0 - norm_sq(x)) / norm_sq(sub(x, y))
}

/// Generating function Θ(w, y, y′) = w log(|y − y′|² / 4).
pub fn theta_generating(w: f64, y: Vec2, yp: Vec2) -> f64 {
    w * (norm_sq(sub(y, yp)) / 4.0).ln()
}

/// A nonzero covector ξ at a point x of the open unit disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskCotangent {
    pub x: Vec2,
    pub xi: Vec2,
}

impl DiskCotangent {
    pub fn new(x: Vec2, xi: Vec2) -> Result<Self> {
        if !(norm_sq(x).sqrt() < 1.0 - 1e-12) {
            return Err(Error::Domain(format!("base point {x:?} is not inside the unit disk")));
        }
        if !(norm_sq(xi) > 0.0) || !xi[0].is_finite() || !xi[1].is_finite() {
            return Err(Error::Domain("covector must be finite and nonzero".into()));
        }
        Ok(DiskCotangent { x, xi })
    }

    /// Hyperbolic length |ξ|_g = (1 − |x|²)/2 · |ξ|.
    pub fn p(&self) -> f64 {
        0.5 * (1.0 - norm_sq(self.x)) * norm_sq(self.xi).sqrt()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        DiskCotangent { x: self.x, xi: scale(lambda, self.xi) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Endpoints {
    pub b_plus: Vec2,
    pub b_minus: Vec2,
    pub p: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

/// Forward and backward endpoints of the geodesic through x with direction dual to ξ.
pub fn endpoints_b(c: &DiskCotangent) -> Endpoints {
    let x = c.x;
    let xi = c.xi;
    let r2 = norm_sq(x);
    let xin = norm_sq(xi).sqrt();
    let xdx = dot(x, xi);
    let half = 0.5 * (1.0 - r2);
    let phi_plus = 0.5 * (1.0 + r2) * xin + xdx;
    let phi_minus = 0.5 * (1.0 + r2) * xin - xdx;
    let bp = add(scale(xin + xdx, x), scale(half, xi));
    let bm = sub(scale(xin - xdx, x), scale(half, xi));
    Endpoints {
        b_plus: scale(1.0 / phi_plus, bp),
        b_minus: scale(1.0 / phi_minus, bm),
        p: half * xin,
        phi_plus,
        phi_minus,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaCoords {
    pub w: f64,
    pub y: Vec2,
    pub theta: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// κ±(x, ξ) = (p, B∓, ±log 𝒫(x, B∓), ±p·𝒢(B∓, B±)).
pub fn kappa(c: &DiskCotangent, sign: Sign) -> Result<KappaCoords> {
    let e = endpoints_b(c);
    let (y, other, s) = match sign {
        Sign::Plus => (e.b_minus, e.b_plus, 1.0),
        Sign::Minus => (e.b_plus, e.b_minus, -1.0),
    };
    let g = stereo_g_pts(y, other)?;
    Ok(KappaCoords { w: e.p, y, theta: s * poisson_kernel(c.x, y).ln(), eta: s * e.p * g })
}

/// Residuals of the graph relations θ − θ′ = ∂_wΘ, η = ∂_yΘ, η′ = −∂_{y′}Θ
/// for κ⁻(x,ξ) = (w, y, θ, η) and κ⁺(x,ξ) = (w, y′, θ′, η′).
pub fn graph_check(kminus: &KappaCoords, kplus: &KappaCoords) -> Result<[f64; 3]> {
    let w = kminus.w;
    let (y, yp) = (kminus.y, kplus.y);
    let d = norm_sq(sub(y, yp));
    let dtheta = (d / 4.0).ln();
    let dy = scale(-2.0 * w / d, sub(yp, scale(dot(y, yp), y)));
    let dyp = scale(-2.0 * w / d, sub(y, scale(dot(y, yp), yp)));
    Ok([
        kminus.theta - kplus.theta - dtheta,
        kminus.eta - dot(dy, rot90(y)),
        kplus.eta + dot(dyp, rot90(yp)),
    ])
}

/// Hyperboloid point and unit tangent (X, V, E) of a covector with p = 1,
/// E being V rotated by +π/2.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub e: [f64; 3],
}

fn push_forward(x: Vec2, v: Vec2) -> [f64; 3] {
    let q = 1.0 - norm_sq(x);
    let xv = dot(x, v);
    let q2 = q * q;
    [4.0 * xv / q2, (2.0 * v[0] * q + 4.0 * x[0] * xv) / q2, (2.0 * v[1] * q + 4.0 * x[1] * xv) / q2]
}

fn lift_point(x: Vec2) -> [f64; 3] {
    let r2 = norm_sq(x);
    let q = 1.0 - r2;
    [(1.0 + r2) / q, 2.0 * x[0] / q, 2.0 * x[1] / q]
}

fn project_point(p: [f64; 3]) -> Vec2 {
    [p[1] / (1.0 + p[0]), p[2] / (1.0 + p[0])]
}

fn pull_back(p: [f64; 3], t: [f64; 3]) -> Vec2 {
    let den = 1.0 + p[0];
    [t[1] / den - p[1] * t[0] / (den * den), t[2] / den - p[2] * t[0] / (den * den)]
}

impl Frame {
    pub fn lift(c: &DiskCotangent) -> Frame {
        let q = 1.0 - norm_sq(c.x);
        let v = scale(0.25 * q * q, c.xi);
        Frame { x: lift_point(c.x), v: push_forward(c.x, v), e: push_forward(c.x, rot90(v)) }
    }

    /// Projects back to the disk; the covector keeps the hyperbolic length of V.
    pub fn project(&self) -> DiskCotangent {
        let x = project_point(self.x);
        let v = pull_back(self.x, self.v);
        let q = 1.0 - norm_sq(x);
        DiskCotangent { x, xi: scale(4.0 / (q * q), v) }
    }
}

fn lin3(a: f64, u: [f64; 3], b: f64, v: [f64; 3], c: f64, w: [f64; 3]) -> [f64; 3] {
    [a * u[0] + b * v[0] + c * w[0], a * u[1] + b * v[1] + c * w[1], a * u[2] + b * v[2] + c * w[2]]
}

fn check_unit(c: &DiskCotangent) -> Result<()> {
    let p = c.p();
    if (p - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("covector must have unit hyperbolic length, got {p}")));
    }
    Ok(())
}

/// Unstable horocycle flow for time s applied to a unit covector.
pub fn horocycle_unstable(c: &DiskCotangent, s: f64) -> Result<DiskCotangent> {
    check_unit(c)?;
    let f = Frame::lift(c);
    let h = 0.5 * s * s;
    let x = lin3(1.0 + h, f.x, -h, f.v, -s, f.e);
    let v = lin3(h, f.x, 1.0 - h, f.v, -s, f.e);
    Ok(Frame { x, v, e: f.e }.project())
}

/// Unit-speed geodesic flow for time t; the covector length is preserved.
pub fn geodesic_flow(c: &DiskCotangent, t: f64) -> DiskCotangent {
    let p = c.p();
    let unit = c.scaled(1.0 / p);
    let f = Frame::lift(&unit);
    let (ch, sh) = (t.cosh(), t.sinh());
    let x = lin3(ch, f.x, sh, f.v, 0.0, f.e);
    let v = lin3(sh, f.x, ch, f.v, 0.0, f.e);
    Frame { x, v, e: f.e }.project().scaled(p)
}

/// Real 2×2 matrix acting on the upper half-plane by Möbius transformations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// a² + b² + c² + d².
    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Inverse assuming determinant one.
    pub fn inv(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn apply_proj(&self, u: f64, v: f64) -> (f64, f64) {
        (self.a * u + self.b * v, self.c * u + self.d * v)
    }

    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    /// Action on circle angles (in the rotated Cayley coordinate of [`boundary_angle`]).
    pub fn apply_angle(&self, theta: f64) -> f64 {
        let (u, v) = angle_to_proj(theta);
        let (u2, v2) = self.apply_proj(u, v);
        proj_to_angle(u2, v2)
    }

    /// Action on the closed disk model, conjugated through the Cayley map.
    pub fn apply_disk(&self, w: Complex64) -> Complex64 {
        let i = Complex64::i();
        let z = i * (Complex64::new(1.0, 0.0) + w) / (Complex64::new(1.0, 0.0) - w);
        let z2 = self.apply_complex(z);
        (z2 - i) / (z2 + i)
    }
}

/// Boundary coordinate used for circle covers: θ = arg(Cayley(x)) − π/2 for real x,
/// so that x = −1 sits at θ = 0, x = 0 at π/2, x = 1 at π and x = ∞ at 3π/2.
pub fn boundary_angle(x: f64) -> f64 {
    proj_to_angle(x, 1.0)
}

/// Homogeneous half-plane boundary coordinates (u : v) of the circle angle θ.
pub fn angle_to_proj(theta: f64) -> (f64, f64) {
    let phi = theta + 0.5 * PI;
    (-(0.5 * phi).cos(), (0.5 * phi).sin())
}

pub fn proj_to_angle(u: f64, v: f64) -> f64 {
    wrap_angle(2.0 * v.atan2(-u) - 0.5 * PI)
}

/// Cayley image w = (z − i)/(z + i) of the boundary point with angle θ in cover coordinates.
pub fn cayley_point(theta: f64) -> Vec2 {
    circle_point(theta + 0.5 * PI)
}

/// |γ′(w)| for the boundary action of γ ∈ SL(2, ℝ) transported to the disk by the Cayley map,
/// with w given as a unit vector in the disk picture.
pub fn mobius_boundary_derivative(g: &Mat2, w: Vec2) -> Result<f64> {
    // relative to |γ|, since ad − bc loses that many digits to cancellation
    if (g.det() - 1.0).abs() > 1e-12 * g.norm_sq().max(1.0) {
        return Err(Error::Domain(format!("matrix determinant {} is not 1", g.det())));
    }
    // w = e^{iφ} corresponds to the half-plane point (−cos(φ/2) : sin(φ/2)).
    let phi = w[1].atan2(w[0]);
    let (u, v) = (-(0.5 * phi).cos(), (0.5 * phi).sin());
    let (u2, v2) = g.apply_proj(u, v);
    Ok((u * u + v * v) / (u2 * u2 + v2 * v2))
}
