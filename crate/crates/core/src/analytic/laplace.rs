use super::{check_rate, Scale, StateCoefficients};
use crate::error::{Error, Result};
use crate::spectral::AllToAllModel;
use crate::state::SiteWindow;

fn check_s(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::param("s", format!("Laplace variable must be finite and non-negative, got {s}")))
    }
}

/// `∫ r e^{-(r+s)τ} cos(JNτ) dτ`.
pub fn average_cos(r: f64, s: f64, model: &AllToAllModel) -> f64 {
    let u = r + s;
    let jn = model.coupling() * model.n_sites() as f64;
    r * u / (u * u + jn * jn)
}

/// `∫ r e^{-(r+s)τ} sin(JNτ) dτ`.
pub fn average_sin(r: f64, s: f64, model: &AllToAllModel) -> f64 {
    let u = r + s;
    let jn = model.coupling() * model.n_sites() as f64;
    r * jn / (u * u + jn * jn)
}

/// `∫ r e^{-(r+s)τ} |1 + m b_τ|² dτ`.
pub fn average_lambda_sq(r: f64, s: f64, model: &AllToAllModel, window: &SiteWindow) -> f64 {
    let u = r + s;
    let n = model.n_sites() as f64;
    let m = window.cut() as f64;
    let j2 = model.coupling().powi(2);
    r * (j2 * (2.0 * m * m - 2.0 * m * n + n * n) + u * u) / (u * (j2 * n * n + u * u))
}

/// Dimensionless `Ŝ(s)` with `|J| = 1`.
fn survival_laplace_scaled(k: &StateCoefficients, sc: &Scale, r: f64, s: f64) -> f64 {
    let (n, u) = (sc.n, r + s);
    let n2 = n * n;
    let common = u * (n2 + u * u) / (sc.k() * r + n2 * s + s * u * u);
    let cos = r * u / (u * u + n2);
    let sin = sc.sign * r * n / (u * u + n2);
    (1.0 + common * (k.a1 * r / u + k.a2 * cos + k.a3 * sin)) / u
}

/// Laplace transform of the survival probability under Poissonian
/// measurements at rate `r`. Assumes a bright initial state.
pub fn survival_laplace(
    coeffs: &StateCoefficients,
    r: f64,
    s: f64,
    model: &AllToAllModel,
    window: &SiteWindow,
) -> Result<f64> {
    check_rate(r)?;
    check_s(s)?;
    let sc = Scale::new(model, window)?;
    Ok(survival_laplace_scaled(coeffs, &sc, r / sc.j, s / sc.j) / sc.j)
}

/// Mean first detection time `T(r)`.
pub fn mfdt(
    coeffs: &StateCoefficients,
    r: f64,
    model: &AllToAllModel,
    window: &SiteWindow,
) -> Result<f64> {
    check_rate(r)?;
    let sc = Scale::new(model, window)?;
    let x = r / sc.j;
    let n2 = sc.n * sc.n;
    let bracket = coeffs.a1
        + coeffs.a2 * x * x / (x * x + n2)
        + coeffs.a3 * sc.sign * x * sc.n / (x * x + n2);
    let t = (1.0 + x * (n2 + x * x) / (sc.k() * x) * bracket) / x;
    Ok(t / sc.j)
}

/// Minimizer of `T(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimalRate {
    Finite(f64),
    /// `c_{A⊥} = 0`: `T(r)` decreases monotonically.
    Unbounded,
}

/// `r* = √m·√(J²N²a₁ + 2J²Nm - 2J²m²)/|c_{A⊥}|`.
pub fn optimal_rate(
    coeffs: &StateCoefficients,
    model: &AllToAllModel,
    window: &SiteWindow,
) -> Result<OptimalRate> {
    let sc = Scale::new(model, window)?;
    let cp = coeffs.c_aperp.norm();
    if cp <= 1e-12 {
        return Ok(OptimalRate::Unbounded);
    }
    let radicand = sc.n * sc.n * coeffs.a1 + sc.k();
    if radicand < 0.0 {
        return Err(Error::fault(
            "optimal_rate",
            format!("negative radicand {radicand:.6e}; coefficients are inconsistent"),
        ));
    }
    Ok(OptimalRate::Finite(sc.j * sc.m.sqrt() * radicand.sqrt() / cp))
}

/// Dimensionless `F̂(s)` with `|J| = 1`.
///
/// Written as `Num(s) / ((s + r) Q(s))` with the `s/(r+s)` piece already
/// folded into the numerator; subtracting it from one loses every digit for
/// `s ≫ r`.
fn first_detection_laplace_scaled(k: &StateCoefficients, sc: &Scale, r: f64, s: f64) -> f64 {
    let n2 = sc.n * sc.n;
    let kk = sc.k();
    let one_minus = 1.0 - k.sigma();
    let b = k.a3 * sc.sign * sc.n;
    let num = r
        * (((one_minus * s + (2.0 * r * one_minus - b)) * s
            + (one_minus * r * r - b * r + (1.0 - k.a1) * n2))
            * s
            + kk * r);
    let q = ((s + 2.0 * r) * s + (n2 + r * r)) * s + kk * r;
    num / ((s + r) * q)
}

/// Generating function of the first detection time.
pub fn first_detection_laplace(
    coeffs: &StateCoefficients,
    r: f64,
    s: f64,
    model: &AllToAllModel,
    window: &SiteWindow,
) -> Result<f64> {
    check_rate(r)?;
    check_s(s)?;
    let sc = Scale::new(model, window)?;
    Ok(first_detection_laplace_scaled(coeffs, &sc, r / sc.j, s / sc.j))
}

/// Coefficients of `F̂(s) = c₁/s + c₂/s² + c₃/s³ + O(s⁻⁴)`; equivalently
/// `F(0⁺) = c₁`, `F'(0⁺) = c₂`, `F''(0⁺) = c₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeSExpansion {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn large_s_expansion(coeffs: &StateCoefficients, r: f64, model: &AllToAllModel) -> LargeSExpansion {
    let jn = model.coupling() * model.n_sites() as f64;
    let one_minus = 1.0 - coeffs.sigma();
    LargeSExpansion {
        c1: r * one_minus,
        c2: -coeffs.a3 * jn * r - r * r * one_minus,
        c3: coeffs.a2 * jn * jn * r + 2.0 * coeffs.a3 * jn * r * r + r.powi(3) * one_minus,
    }
}

/// Leading short-time behaviour: `(k, c)` with `F(t) ≈ c·t^k` as `t → 0`.
/// `k` is 0 for generic states and 2 when `F(0⁺)` and `F'(0⁺)` vanish.
pub fn short_time_prefactor(coeffs: &StateCoefficients, r: f64, model: &AllToAllModel) -> (u32, f64) {
    let e = large_s_expansion(coeffs, r, model);
    let scale = r.max(model.coupling().abs() * model.n_sites() as f64);
    if e.c1.abs() > 1e-10 * scale {
        (0, e.c1)
    } else if e.c2.abs() > 1e-10 * scale * scale {
        (1, e.c2)
    } else {
        (2, e.c3 / 2.0)
    }
}

/// Large-rate behaviour of `T(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LargeRate {
    /// `T(r)/r` tends to this constant (`c_{A⊥} ≠ 0`).
    Linear(f64),
    /// `r·T(r)` tends to this constant (`c_{A⊥} = 0`).
    Inverse(f64),
}

/// Limits of `T(r)` at small and large rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfdtAsymptotes {
    /// `lim_{r→0} r·T(r) = 1 + N²a₁/(2m(N-m))`.
    pub small_rate: f64,
    pub large_rate: LargeRate,
}

pub fn mfdt_asymptotes(
    coeffs: &StateCoefficients,
    model: &AllToAllModel,
    window: &SiteWindow,
) -> Result<MfdtAsymptotes> {
    let sc = Scale::new(model, window)?;
    let small_rate = 1.0 + sc.n * sc.n * coeffs.a1 / sc.k();
    let sigma = coeffs.sigma();
    let large_rate = if sigma.abs() > 1e-12 {
        LargeRate::Linear(sigma / (sc.k() * sc.j * sc.j))
    } else {
        LargeRate::Inverse(small_rate)
    };
    Ok(MfdtAsymptotes {
        small_rate,
        large_rate,
    })
}
