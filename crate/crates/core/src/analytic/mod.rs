//! Closed-form results for the all-to-all model under Poissonian monitoring:
//! state coefficients, the Laplace transforms of survival and first
//! detection, the mean first detection time and its optimum, the cubic
//! denominator roots and the residue inversion of `F(t)`.
//!
//! Everything is evaluated internally in units where `|J| = 1` and rescaled
//! at the boundary, so conditioning does not depend on the coupling scale.

mod coefficients;
mod density;
mod laplace;
mod roots;

pub use coefficients::{
    eigenbasis_sum_rules, coefficients, coefficients_unchecked, short_time_class, ShortTimeClass,
    StateCoefficients, SUM_RULE_TOLERANCE,
};
pub use density::{
    decay_timescale, first_detection_density, minimize_decay_timescale, FirstDetectionCurve,
    POLE_GUARD,
};
pub use laplace::{
    average_cos, average_lambda_sq, average_sin, first_detection_laplace, large_s_expansion,
    mfdt, mfdt_asymptotes, optimal_rate, short_time_prefactor, survival_laplace, LargeRate,
    LargeSExpansion, MfdtAsymptotes, OptimalRate,
};
pub use roots::{cubic_roots, CubicRoots, RouthHurwitz};

use crate::error::{Error, Result};
use crate::spectral::AllToAllModel;
use crate::state::SiteWindow;

/// Model parameters in units of `|J|`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scale {
    pub n: f64,
    pub m: f64,
    /// `|J|`
    pub j: f64,
    /// `sign(J)`; it survives the rescaling wherever `J` appears linearly.
    pub sign: f64,
}

impl Scale {
    pub fn new(model: &AllToAllModel, window: &SiteWindow) -> Result<Self> {
        if model.n_sites() != window.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: window.n_sites(),
                found: model.n_sites(),
            });
        }
        let j = model.coupling();
        Ok(Self {
            n: model.n_sites() as f64,
            m: window.cut() as f64,
            j: j.abs(),
            sign: j.signum(),
        })
    }

    /// `2 m (N - m)`, the constant term of the cubic divided by `r J²`.
    pub fn k(&self) -> f64 {
        2.0 * self.m * (self.n - self.m)
    }
}

pub(crate) fn check_rate(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::param("r", format!("measurement rate must be positive and finite, got {r}")))
    }
}
