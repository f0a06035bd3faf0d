use num_complex::Complex64;

use crate::darkbright::DARK_TOLERANCE;
use crate::error::{Error, Result};
use crate::spectral::{zero_mode, zero_mode_weight};
use crate::state::{check_dim, window_sums, SiteWindow, StateVector, TOLERANCE};

/// Allowed violation of `a₁ + a₂ = |c_{A⊥}|²/m` before it is reported as an
/// implementation fault.
pub const SUM_RULE_TOLERANCE: f64 = 1e-10;

/// The state functionals that carry all initial-state dependence of the
/// Poissonian closed forms. All dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCoefficients {
    pub c_a: Complex64,
    pub c_aperp: Complex64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Target size `m`; kept so that `|c_{A⊥}|²/m` can be checked later.
    pub cut: usize,
    pub n_sites: usize,
}

impl StateCoefficients {
    /// `a₁ + a₂`, equal to `|c_{A⊥}|²/m`.
    pub fn sigma(&self) -> f64 {
        self.a1 + self.a2
    }

    /// `|c_{A⊥}|²/m - (a₁ + a₂)`.
    pub fn sum_rule_residual(&self) -> f64 {
        self.c_aperp.norm_sqr() / self.cut as f64 - self.sigma()
    }
}

/// Computes `c_A`, `c_{A⊥}` and `a₁..a₃` for a normalized bright state.
pub fn coefficients(psi0: &StateVector, window: &SiteWindow) -> Result<StateCoefficients> {
    if !psi0.is_normalized() {
        return Err(Error::NotNormalized {
            deviation: (psi0.norm() - 1.0).abs(),
        });
    }
    check_dim(window.n_sites(), psi0.dim())?;
    let dark = dark_weight(psi0, window)?;
    if dark.sqrt() > DARK_TOLERANCE {
        return Err(Error::param(
            "psi0",
            format!("state has dark weight {dark:.3e}; closed forms need a bright state"),
        ));
    }
    coefficients_unchecked(psi0, window)
}

/// Same as [`coefficients`] without the normalization and brightness
/// preconditions, for diagnostics.
pub fn coefficients_unchecked(
    psi0: &StateVector,
    window: &SiteWindow,
) -> Result<StateCoefficients> {
    let (c_a, c_aperp) = window_sums(psi0, window)?;
    let n = window.n_sites() as f64;
    let m = window.cut() as f64;
    let rho = (n - m) / m;
    let pref = m / (n * n);
    let ca2 = c_a.norm_sqr();
    let cp2 = c_aperp.norm_sqr();
    let cross = (c_a * c_aperp.conj()).re;

    let a1 = pref * (2.0 * ca2 + cp2 * (1.0 + rho * rho) + 2.0 * cross * (1.0 - rho));
    let a2 = -2.0 * pref * (ca2 - cp2 * rho) - 2.0 * pref * cross * (1.0 - rho);
    // The sine average enters through Re{e^{-iθ}·z} = cos θ·Re z + sin θ·Im z,
    // which puts Im{c_A^* c_{A⊥}} here.
    let a3 = 2.0 * pref * (c_a.conj() * c_aperp).im * (1.0 + rho);

    let out = StateCoefficients {
        c_a,
        c_aperp,
        a1,
        a2,
        a3,
        cut: window.cut(),
        n_sites: window.n_sites(),
    };
    let residual = out.sum_rule_residual();
    let scale = 1.0f64.max(cp2 / m);
    if !(residual.abs() <= SUM_RULE_TOLERANCE * scale) {
        return Err(Error::fault(
            "coefficients",
            format!("a1 + a2 misses |c_Aperp|^2/m by {residual:.3e}"),
        ));
    }
    Ok(out)
}

fn dark_weight(psi0: &StateVector, window: &SiteWindow) -> Result<f64> {
    let mut w = 0.0;
    for l in 1..window.cut() {
        let mode = zero_mode(window.n_sites(), l)?;
        w += mode.inner(psi0)?.norm_sqr();
    }
    Ok(w)
}

/// Short-time shape of `F(t)`: a nonzero intercept, or `t²` onset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShortTimeClass {
    Constant,
    Quadratic,
}

/// `Quadratic` iff `|c_{A⊥}|² = m` (to 1e-10), which singles out the special
/// state up to a global phase.
pub fn short_time_class(psi0: &StateVector, window: &SiteWindow) -> Result<ShortTimeClass> {
    let (_, c_aperp) = window_sums(psi0, window)?;
    let m = window.cut() as f64;
    Ok(if (c_aperp.norm_sqr() - m).abs() <= TOLERANCE {
        ShortTimeClass::Quadratic
    } else {
        ShortTimeClass::Constant
    })
}

/// Returns `(⟨N|ψ₀⟩, Σ_{l=m}^{N-1} C_l ⟨0,l|ψ₀⟩)`.
///
/// Both are computed by direct overlaps with the eigenbasis and by the closed
/// forms `(c_{A⊥} + c_A)/√N` and `c_A/N - c_{A⊥}(N-m)/(Nm)`; disagreement
/// beyond 1e-12 is a fault.
pub fn eigenbasis_sum_rules(
    psi0: &StateVector,
    window: &SiteWindow,
) -> Result<(Complex64, Complex64)> {
    check_dim(window.n_sites(), psi0.dim())?;
    let n = window.n_sites();
    let m = window.cut();
    let (c_a, c_aperp) = window_sums(psi0, window)?;
    let (nf, mf) = (n as f64, m as f64);

    let overlap_n = StateVector::uniform(n).inner(psi0)?;
    let mut weighted = Complex64::new(0.0, 0.0);
    for l in m..n {
        weighted += zero_mode_weight(l) * zero_mode(n, l)?.inner(psi0)?;
    }

    let closed_n = (c_aperp + c_a) / nf.sqrt();
    let closed_w = c_a / nf - c_aperp * ((nf - mf) / (nf * mf));

    let tol = 1e-12 * psi0.norm().max(1.0);
    let dn = (overlap_n - closed_n).norm();
    let dw = (weighted - closed_w).norm();
    if dn > tol || dw > tol {
        return Err(Error::fault(
            "eigenbasis_sum_rules",
            format!("direct and closed-form routes differ by {dn:.3e} and {dw:.3e}"),
        ));
    }
    Ok((overlap_n, weighted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darkbright::special_state;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn w63() -> SiteWindow {
        SiteWindow::new(6, 3).unwrap()
    }

    #[test]
    fn special_state_coefficients() {
        let k = coefficients(&special_state(&w63()), &w63()).unwrap();
        assert!(k.c_a.norm() < 1e-15);
        assert!((k.c_aperp.norm_sqr() - 3.0).abs() < 1e-14);
        assert!((k.a1 - 0.5).abs() < 1e-15);
        assert!((k.a2 - 0.5).abs() < 1e-15);
        assert_eq!(k.a3, 0.0);
    }

    #[test]
    fn target_localized_state() {
        let psi = StateVector::site(6, 6).unwrap();
        let k = coefficients(&psi, &w63()).unwrap();
        assert_eq!(k.c_aperp, c(0.0, 0.0));
        assert!((k.a1 + k.a2).abs() < 1e-15);
        assert_eq!(k.a3, 0.0);
    }

    #[test]
    fn rejects_dark_admixture() {
        let mut amps = zero_mode(6, 1).unwrap().into_amplitudes();
        for (a, b) in amps.iter_mut().zip(StateVector::uniform(6).amplitudes()) {
            *a = (*a + b) / 2f64.sqrt();
        }
        let psi = StateVector::new(amps).unwrap();
        assert!(matches!(
            coefficients(&psi, &w63()),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(coefficients_unchecked(&psi, &w63()).is_ok());
    }

    #[test]
    fn short_time_classes() {
        let w = w63();
        let star = special_state(&w);
        assert_eq!(short_time_class(&star, &w).unwrap(), ShortTimeClass::Quadratic);
        assert_eq!(
            short_time_class(&star.with_phase(2.1), &w).unwrap(),
            ShortTimeClass::Quadratic
        );
        let psi = StateVector::normalize(vec![
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.3, 0.1),
            c(-0.2, 0.5),
            c(0.7, 0.0),
        ])
        .unwrap();
        assert_eq!(short_time_class(&psi, &w).unwrap(), ShortTimeClass::Constant);
    }

    #[test]
    fn sum_rules_for_named_states() {
        let w = w63();
        let (on, ow) = eigenbasis_sum_rules(&StateVector::uniform(6), &w).unwrap();
        assert!((on - c(1.0, 0.0)).norm() < 1e-14);
        assert!(ow.norm() < 1e-14);
        let (on, _) = eigenbasis_sum_rules(&special_state(&w), &w).unwrap();
        assert!((on.re - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn a3_vanishes_for_real_states() {
        let psi = StateVector::normalize(
            [0.1, -0.4, 0.3, 0.8, 0.2, -0.5].iter().map(|&x| c(x, 0.0)).collect(),
        )
        .unwrap();
        let k = coefficients_unchecked(&psi, &w63()).unwrap();
        assert_eq!(k.a3, 0.0);
    }

    proptest! {
        #[test]
        fn sum_rule_and_routes_agree(
            n in 2usize..12,
            cut_frac in 0.0f64..1.0,
            parts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        ) {
            let m = 1 + ((n - 1) as f64 * cut_frac) as usize;
            let m = m.min(n - 1);
            let w = SiteWindow::new(n, m).unwrap();
            let amps: Vec<_> = parts[..n].iter().map(|&(a, b)| c(a, b)).collect();
            prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3);
            let psi = StateVector::normalize(amps).unwrap();
            let k = coefficients_unchecked(&psi, &w).unwrap();
            prop_assert!(k.sum_rule_residual().abs() < 1e-13);
            prop_assert!(k.a1 >= -1e-15);
            eigenbasis_sum_rules(&psi, &w).unwrap();
        }
    }
}
