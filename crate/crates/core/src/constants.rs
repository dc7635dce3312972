//! Closed-form gap exponents and the constants of the regular-set energy argument.
//!
//! The absolute constants are unknown; they default to 1, which is not a derived value.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsConfig {
    /// Constant in the exponent of β_E(C).
    pub k_thm4: f64,
    /// Constant in the exponent of β_𝒳.
    pub k_thm61: f64,
    pub k5: f64,
    pub k1: f64,
    pub k3: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig { k_thm4: 1.0, k_thm61: 1.0, k5: 1.0, k1: 1.0, k3: 1.0 }
    }
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k_thm4", self.k_thm4), ("k_thm61", self.k_thm61), ("k5", self.k5), ("k1", self.k1), ("k3", self.k3)] {
            if !(v > 0.0 && v.is_finite()) {
                return input(format!("constant {name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

/// A positive quantity with its natural logarithm, which stays finite when the value over- or underflows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaled {
    pub value: f64,
    pub ln: f64,
}

impl Scaled {
    pub fn from_ln(ln: f64) -> Self {
        Scaled { value: ln.exp(), ln }
    }

    /// True when the plain value lost the quantity to overflow or underflow.
    pub fn out_of_range(&self) -> bool {
        self.value == 0.0 || self.value.is_infinite() || !self.value.is_normal()
    }
}

fn check_delta_unit(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("dimension must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(c >= 1.0 && c.is_finite()) {
        return input(format!("regularity constant must be at least 1, got {c}"));
    }
    Ok(())
}

fn check_n(n: u32) -> Result<()> {
    if n < 2 {
        return input(format!("dimension of the hyperbolic space must be at least 2, got {n}"));
    }
    Ok(())
}

/// β = (3/8)((n − 1)/2 − δ) + β_E/16.
pub fn beta_gap(n: u32, delta: f64, beta_e: f64) -> Result<f64> {
    check_n(n)?;
    let m = (n - 1) as f64;
    if !(delta > 0.0 && delta < m) {
        return input(format!("dimension must lie in (0, {m}), got {delta}"));
    }
    if !(beta_e >= 0.0) {
        return input(format!("energy exponent must be non-negative, got {beta_e}"));
    }
    if beta_e > delta {
        return input(format!("energy exponent {beta_e} exceeds the maximal value δ = {delta}"));
    }
    Ok(0.375 * (0.5 * m - delta) + beta_e / 16.0)
}

/// max(0, (n − 1)/2 − δ).
pub fn beta_std(n: u32, delta: f64) -> f64 {
    (0.5 * (n - 1) as f64 - delta).max(0.0)
}

/// (n − 1)/2 − δ/2.
pub fn beta_jn(n: u32, delta: f64) -> f64 {
    0.5 * (n - 1) as f64 - 0.5 * delta
}

/// (5(n − 1)/11, 3(n − 1)/5): the dimensions where the gap with β_E = δ beats max(0, (n − 1)/2 − δ).
pub fn improvement_range(n: u32) -> (f64, f64) {
    let m = (n.max(2) - 1) as f64;
    (5.0 * m / 11.0, 3.0 * m / 5.0)
}

/// 1 + log¹⁴ C.
fn log14(c: f64) -> f64 {
    1.0 + c.ln().powi(14)
}

/// β_E = δ·exp[−K(1 − δ)^{−28}(1 + log¹⁴ C)].
pub fn beta_e_of_c(delta: f64, c: f64, cfg: &ConstantsConfig) -> Result<Scaled> {
    check_delta_unit(delta)?;
    check_c(c)?;
    Ok(Scaled::from_ln(delta.ln() - cfg.k_thm4 * (1.0 - delta).powi(-28) * log14(c)))
}

/// C₁ = (10C²)^{1/(1−δ)}.
pub fn c1(c: f64, delta: f64) -> Result<Scaled> {
    check_delta_unit(delta)?;
    check_c(c)?;
    Ok(Scaled::from_ln((10.0 * c * c).ln() / (1.0 - delta)))
}

/// C₂ = C²C₁^δ.
pub fn c2(c: f64, delta: f64) -> Result<Scaled> {
    let c1 = c1(c, delta)?;
    Ok(Scaled::from_ln(2.0 * c.ln() + delta * c1.ln))
}

/// S(ε) = (10C²/ε)^{1/(1−δ)}: the longest progression in which a regular set has density ε.
pub fn s_eps(eps: f64, c: f64, delta: f64) -> Result<Scaled> {
    check_delta_unit(delta)?;
    check_c(c)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return input(format!("density must lie in (0, 1], got {eps}"));
    }
    Ok(Scaled::from_ln((10.0 * c * c / eps).ln() / (1.0 - delta)))
}

/// M₀ = exp[K₅δ^{−1}(1 − δ)^{−14}(1 + log¹⁴ C)].
pub fn m0(c: f64, delta: f64, cfg: &ConstantsConfig) -> Result<Scaled> {
    check_delta_unit(delta)?;
    check_c(c)?;
    Ok(Scaled::from_ln(cfg.k5 / delta * (1.0 - delta).powi(-14) * log14(c)))
}

/// ρ = (C₂⁶ M^{3δ} log M)^{−1}: the per-level leaf loss rate of a pruned tree.
pub fn rho_tree(c: f64, delta: f64, m: f64) -> Result<Scaled> {
    if !(m >= 2.0) {
        return input(format!("branching base must be at least 2, got {m}"));
    }
    let c2 = c2(c, delta)?;
    Ok(Scaled::from_ln(-(6.0 * c2.ln + 3.0 * delta * m.ln() + m.ln().ln())))
}

/// β_𝒳 = δ·exp[−K(1 − δ)^{−14}(1 + log¹⁴ C)].
pub fn beta_x(delta: f64, c: f64, cfg: &ConstantsConfig) -> Result<Scaled> {
    check_delta_unit(delta)?;
    check_c(c)?;
    Ok(Scaled::from_ln(delta.ln() - cfg.k_thm61 * (1.0 - delta).powi(-14) * log14(c)))
}

/// Bound on |A| for A ⊂ 𝒳(α) ∩ αℤ with doubling |A + A| ≤ K|A|: exp[K₃(1 − δ)^{−1}(log C) log¹³ K].
pub fn doubling_size_bound(delta: f64, c: f64, k: f64, cfg: &ConstantsConfig) -> Result<Scaled> {
    check_delta_unit(delta)?;
    check_c(c)?;
    if !(k >= 1.0) {
        return input(format!("doubling constant must be at least 1, got {k}"));
    }
    Ok(Scaled::from_ln(cfg.k3 / (1.0 - delta) * c.ln() * k.ln().powi(13)))
}

/// Progression guaranteed inside a set with doubling K: (ln of the least length |A|^{1/(K₁log⁴K)},
/// ln of the least density e^{−K₁log⁹K}).
pub fn progression_guarantee(size: f64, k: f64, cfg: &ConstantsConfig) -> Result<(f64, f64)> {
    if !(k > 1.0 && size >= 1.0) {
        return input("progression guarantee needs K > 1 and a nonempty set");
    }
    let l = k.ln();
    Ok((size.ln() / (cfg.k1 * l.powi(4)), -cfg.k1 * l.powi(9)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSuite {
    pub delta: f64,
    pub c: f64,
    pub m: f64,
    pub eps: f64,
    pub c1: Scaled,
    pub c2: Scaled,
    pub s_eps: Scaled,
    pub m0: Scaled,
    pub rho_tree: Scaled,
    pub beta_x: Scaled,
}

pub fn constants_suite(delta: f64, c: f64, m: f64, eps: f64, cfg: &ConstantsConfig) -> Result<ConstantsSuite> {
    cfg.validate()?;
    Ok(ConstantsSuite {
        delta,
        c,
        m,
        eps,
        c1: c1(c, delta)?,
        c2: c2(c, delta)?,
        s_eps: s_eps(eps, c, delta)?,
        m0: m0(c, delta, cfg)?,
        rho_tree: rho_tree(c, delta, m)?,
        beta_x: beta_x(delta, c, cfg)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: u32,
    pub delta: f64,
    pub c_reg: Option<f64>,
    pub beta_e: f64,
    pub beta_formula: f64,
    pub beta_std: f64,
    pub beta_jn: f64,
    pub improvement_range: (f64, f64),
    pub improves: bool,
}

/// Gap exponents for a given energy exponent.
pub fn gap_report(n: u32, delta: f64, beta_e: f64, c_reg: Option<f64>) -> Result<GapReport> {
    let beta_formula = beta_gap(n, delta, beta_e)?;
    let beta_std = beta_std(n, delta);
    Ok(GapReport {
        n,
        delta,
        c_reg,
        beta_e,
        beta_formula,
        beta_std,
        beta_jn: beta_jn(n, delta),
        improvement_range: improvement_range(n),
        improves: beta_formula > beta_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_values() {
        assert_eq!(beta_gap(2, 0.5, 0.5).unwrap(), 1.0 / 32.0);
        assert_eq!(beta_gap(2, 0.5, 0.0).unwrap(), 0.0);
        assert!((beta_gap(2, 5.0 / 11.0, 5.0 / 11.0).unwrap() - 1.0 / 22.0).abs() < 1e-15);
        assert!(beta_gap(2, 0.5, 0.6).is_err());
        assert_eq!(improvement_range(2), (5.0 / 11.0, 0.6));
        assert_eq!(improvement_range(3), (10.0 / 11.0, 1.2));
        let r = gap_report(2, 0.5, 0.5, None).unwrap();
        assert!(r.improves && r.beta_std == 0.0 && r.beta_jn == 0.25);
    }

    #[test]
    fn constant_values() {
        let cfg = ConstantsConfig::default();
        let s = constants_suite(0.5, 1.0, 4.0, 1.0, &cfg).unwrap();
        assert!((s.c1.value - 100.0).abs() < 1e-12);
        assert!((s.c2.value - 10.0).abs() < 1e-12);
        assert!((s.s_eps.value - 100.0).abs() < 1e-12);
        assert!((s.m0.ln - 32768.0).abs() < 1e-9);
        assert!(s.m0.out_of_range());
        assert!((s.rho_tree.value - 1.0 / (1e6 * 8.0 * 4f64.ln())).abs() < 1e-20);
        let be = beta_e_of_c(0.5, 1.0, &cfg).unwrap();
        assert_eq!(be.value, 0.0);
        assert!((be.ln - (-(2f64.powi(28)) + 0.5f64.ln())).abs() < 1e-6);
        assert!(matches!(beta_e_of_c(1.0, 1.0, &cfg), Err(Error::Domain(_))));
        assert!(ConstantsConfig { k5: 0.0, ..cfg }.validate().is_err());
    }
}
