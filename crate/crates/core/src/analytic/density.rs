use num_complex::Complex64;

use super::{check_rate, cubic_roots, CubicRoots, Scale, StateCoefficients};
use crate::error::{Error, Result};
use crate::numerics::minimize_on_log_grid;
use crate::spectral::AllToAllModel;
use crate::state::SiteWindow;

/// Relative pole separation (in units of `r`) below which the simple-pole
/// residue formula is flagged as ill-conditioned.
pub const POLE_GUARD: f64 = 1e-8;

/// `F(t)` on a time grid, with the residue data that generated it.
///
/// `F(t) = Σ_k w_k e^{p_k t}` over the poles `p = (-r, s₁, s₂, s₃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstDetectionCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `t_m = 1/|s₁|`
    pub decay_timescale: f64,
    pub poles: [Complex64; 4],
    pub residue_weights: [Complex64; 4],
    pub roots: CubicRoots,
    /// Largest `|Im Σ w_k e^{p_k t}|` seen on the grid.
    pub max_imaginary_residual: f64,
    pub conditioning_warning: Option<String>,
}

impl FirstDetectionCurve {
    /// Complex sum of the four exponentials at `t`.
    pub fn evaluate_complex(&self, t: f64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.residue_weights)
            .map(|(p, w)| w * (p * t).exp())
            .sum()
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.evaluate_complex(t).re
    }

    /// `∫₀^∞ F dt` in closed form.
    pub fn integral(&self) -> f64 {
        self.poles
            .iter()
            .zip(&self.residue_weights)
            .map(|(p, w)| -w / p)
            .sum::<Complex64>()
            .re
    }

    /// `∫₀^∞ t F dt` in closed form.
    pub fn mean(&self) -> f64 {
        self.poles
            .iter()
            .zip(&self.residue_weights)
            .map(|(p, w)| w / (p * p))
            .sum::<Complex64>()
            .re
    }

    /// `∫₀^∞ e^{-st} F dt` in closed form.
    pub fn laplace(&self, s: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.residue_weights)
            .map(|(p, w)| w / (s - p))
            .sum::<Complex64>()
            .re
    }
}

/// `P(s) = s r [a₁(J²N² + (r+s)²) + (r+s)(a₃JN + a₂(r+s))]`, dimensionless.
fn p_poly(k: &StateCoefficients, sc: &Scale, r: f64, s: Complex64) -> Complex64 {
    let u = s + r;
    s * r * (k.a1 * (u * u + sc.n * sc.n) + u * (k.a3 * sc.sign * sc.n + k.a2 * u))
}

/// Evaluates `F(t)` by residues at the four simple poles of `F̂`.
pub fn first_detection_density(
    coeffs: &StateCoefficients,
    r: f64,
    model: &AllToAllModel,
    window: &SiteWindow,
    grid: &[f64],
) -> Result<FirstDetectionCurve> {
    check_rate(r)?;
    if let Some(t) = grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::param("grid", format!("times must be finite and non-negative, got {t}")));
    }
    let sc = Scale::new(model, window)?;
    let roots = cubic_roots(r, model, window)?;
    let j = sc.j;
    let x = r / j;
    let s1 = Complex64::new(roots.s1 / j, 0.0);
    let s2 = roots.s2() / j;
    let s3 = s2.conj();
    let s_i = s2.im;
    let i2 = Complex64::new(0.0, 2.0 * s_i);
    let rr = Complex64::new(x, 0.0);

    let w_r = x + (p_poly(coeffs, &sc, x, -rr) / ((rr + s1) * (rr + s2).norm_sqr())).re;
    let w_1 = -p_poly(coeffs, &sc, x, s1) / ((s1 + rr) * (s1 - s2).norm_sqr());
    let w_2 = -p_poly(coeffs, &sc, x, s2) / (i2 * (s2 - s1) * (s2 + rr));
    // computed independently rather than as conj(w_2) so that the
    // imaginary-part cancellation is a real check
    let w_3 = -p_poly(coeffs, &sc, x, s3) / (-i2 * (s3 - s1) * (s3 + rr));

    let poles = [Complex64::new(-r, 0.0), s1 * j, s2 * j, s3 * j];
    let residue_weights = [Complex64::new(w_r * j, 0.0), w_1 * j, w_2 * j, w_3 * j];

    let mut conditioning_warning = None;
    if (s1.re + x).abs() < POLE_GUARD * x || s_i.abs() < POLE_GUARD * x {
        conditioning_warning = Some(format!(
            "near-coincident poles at r = {r}: |s1 + r| = {:.3e}, s_I = {:.3e}",
            (roots.s1 + r).abs(),
            roots.s2_imag
        ));
    }

    let mut curve = FirstDetectionCurve {
        grid: grid.to_vec(),
        values: Vec::with_capacity(grid.len()),
        decay_timescale: 1.0 / roots.s1.abs(),
        poles,
        residue_weights,
        roots,
        max_imaginary_residual: 0.0,
        conditioning_warning,
    };
    let mut max_im = 0.0f64;
    let values = grid
        .iter()
        .map(|&t| {
            let z = curve.evaluate_complex(t);
            max_im = max_im.max(z.im.abs());
            z.re
        })
        .collect();
    curve.values = values;
    curve.max_imaginary_residual = max_im;
    Ok(curve)
}

/// `t_m(r) = 1/|s₁(r)|`, independent of the initial state.
pub fn decay_timescale(r: f64, model: &AllToAllModel, window: &SiteWindow) -> Result<f64> {
    Ok(1.0 / cubic_roots(r, model, window)?.s1.abs())
}

/// Rate `r_m*` minimizing `t_m(r)`, with the minimum value. Searched over
/// `[1e-3, 1e3]·|J|N`.
pub fn minimize_decay_timescale(model: &AllToAllModel, window: &SiteWindow) -> Result<(f64, f64)> {
    let scale = model.coupling().abs() * model.n_sites() as f64;
    let mut failure = None;
    let found = minimize_on_log_grid(
        |r| match decay_timescale(r, model, window) {
            Ok(t) => t,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        1e-3 * scale,
        1e3 * scale,
        241,
        1e-12,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    found.ok_or_else(|| Error::fault("minimize_decay_timescale", "minimum on search boundary"))
}
