//! Stochastic simulation of repeated projective measurements on the target
//! window, and the deterministic conditional survival for fixed interval
//! sequences.
//!
//! Each trajectory draws from its own ChaCha8 stream selected by
//! `(master_seed, trajectory index)`, and aggregation happens in index
//! order, so results do not depend on how many threads run the sampler.

mod dynamics;
mod ensemble;

pub use dynamics::{Dynamics, SpectralPropagator};
pub use ensemble::{
    numeric_laplace_of_survival, DetectionEnsemble, LaplaceEstimate, MeanEstimate, SurvivalCurve,
};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::state::{check_dim, SiteWindow, StateVector};

/// Default cap on measurements per trajectory.
pub const DEFAULT_MAX_MEASUREMENTS: u64 = 1_000_000;
/// Default number of survival histogram bins.
pub const DEFAULT_BINS: usize = 400;

/// Law of the i.i.d. waiting times between measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalLaw {
    Exponential { rate: f64 },
    Sharp { period: f64 },
}

impl IntervalLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            IntervalLaw::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(Error::param("rate", format!("must be positive and finite, got {rate}")))
            }
            IntervalLaw::Sharp { period } if !(period > 0.0 && period.is_finite()) => {
                Err(Error::param("period", format!("must be positive and finite, got {period}")))
            }
            _ => Ok(()),
        }
    }

    /// Draws one waiting time.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            IntervalLaw::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            IntervalLaw::Sharp { period } => period,
        }
    }
}

/// The RNG stream for one trajectory.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Histogram layout for the survival estimate. `t_max = None` picks the
/// range from the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub bins: usize,
    pub t_max: Option<f64>,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            t_max: None,
        }
    }
}

/// Everything needed to run the sampler.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub dynamics: Dynamics,
    pub window: SiteWindow,
    pub initial_state: StateVector,
    pub interval_law: IntervalLaw,
    pub max_measurements: u64,
    pub n_trajectories: u64,
    pub master_seed: u64,
    pub histogram: HistogramSpec,
}

impl ProtocolConfig {
    /// Config with default cap, histogram, seed 0 and 10⁴ trajectories.
    pub fn new(
        dynamics: impl Into<Dynamics>,
        window: SiteWindow,
        initial_state: StateVector,
        interval_law: IntervalLaw,
    ) -> Result<Self> {
        let cfg = Self {
            dynamics: dynamics.into(),
            window,
            initial_state,
            interval_law,
            max_measurements: DEFAULT_MAX_MEASUREMENTS,
            n_trajectories: 10_000,
            master_seed: 0,
            histogram: HistogramSpec::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_trajectories(mut self, n: u64) -> Self {
        self.n_trajectories = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_max_measurements(mut self, cap: u64) -> Self {
        self.max_measurements = cap;
        self
    }

    pub fn with_histogram(mut self, histogram: HistogramSpec) -> Self {
        self.histogram = histogram;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.interval_law.validate()?;
        self.dynamics.check(self.window.n_sites())?;
        check_dim(self.window.n_sites(), self.initial_state.dim())?;
        if !self.initial_state.is_normalized() {
            return Err(Error::NotNormalized {
                deviation: (self.initial_state.norm() - 1.0).abs(),
            });
        }
        if self.max_measurements == 0 {
            return Err(Error::param("max_measurements", "must be at least 1"));
        }
        if self.n_trajectories == 0 {
            return Err(Error::param("n_trajectories", "must be at least 1"));
        }
        if self.histogram.bins == 0 {
            return Err(Error::param("bins", "must be at least 1"));
        }
        if let Some(t) = self.histogram.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param("t_max", format!("must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// Result of one measurement.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Detected,
    /// The renormalized post-measurement state on the complement.
    Collapsed(StateVector),
}

/// Largest tolerated overshoot of `p_fail` above one.
const P_FAIL_SLACK: f64 = 1e-12;

/// Evolves in place, returns `p_fail = ‖P_{A⊥}ψ⁻‖²`, and on failure
/// collapses and renormalizes in place. Returns `true` on detection.
fn step_in_place(
    amps: &mut [Complex64],
    tau: f64,
    dynamics: &Dynamics,
    cut: usize,
    draw: f64,
    scratch: &mut Vec<Complex64>,
) -> Result<(bool, f64)> {
    dynamics.evolve(tau, amps, scratch);
    let p_fail: f64 = amps[..cut].iter().map(|a| a.norm_sqr()).sum();
    if !(p_fail <= 1.0 + P_FAIL_SLACK) {
        return Err(Error::fault(
            "measurement_step",
            format!("failure probability {p_fail:.17e} exceeds one"),
        ));
    }
    if draw >= p_fail {
        return Ok((true, p_fail));
    }
    let inv = 1.0 / p_fail.sqrt();
    for a in amps[..cut].iter_mut() {
        *a *= inv;
    }
    for a in amps[cut..].iter_mut() {
        *a = Complex64::new(0.0, 0.0);
    }
    Ok((false, p_fail))
}

/// One evolve-then-measure step. Detection happens iff
/// `uniform_draw ≥ p_fail`.
pub fn measurement_step(
    psi: &StateVector,
    tau: f64,
    dynamics: &Dynamics,
    window: &SiteWindow,
    uniform_draw: f64,
) -> Result<(StepOutcome, f64)> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", format!("must be finite and non-negative, got {tau}")));
    }
    if !(0.0..1.0).contains(&uniform_draw) {
        return Err(Error::param("uniform_draw", format!("must lie in [0, 1), got {uniform_draw}")));
    }
    if !psi.is_normalized() {
        return Err(Error::NotNormalized {
            deviation: (psi.norm() - 1.0).abs(),
        });
    }
    dynamics.check(window.n_sites())?;
    check_dim(window.n_sites(), psi.dim())?;
    let mut amps = psi.amplitudes().to_vec();
    let mut scratch = Vec::new();
    let (detected, p_fail) =
        step_in_place(&mut amps, tau, dynamics, window.cut(), uniform_draw, &mut scratch)?;
    if detected {
        Ok((StepOutcome::Detected, p_fail))
    } else {
        Ok((StepOutcome::Collapsed(StateVector::new(amps)?), p_fail))
    }
}

/// Outcome of one simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub detected: bool,
    /// Detection time, or for censored records the time of the last
    /// measurement performed.
    pub time: f64,
    pub n_measurements: u64,
}

/// Runs trajectory `index` of the configured ensemble.
pub fn run_trajectory(cfg: &ProtocolConfig, index: u64) -> Result<TrajectoryRecord> {
    let mut rng = trajectory_rng(cfg.master_seed, index);
    let mut amps = cfg.initial_state.amplitudes().to_vec();
    let mut scratch = Vec::with_capacity(amps.len());
    let cut = cfg.window.cut();
    let mut time = 0.0;
    for n in 1..=cfg.max_measurements {
        let tau = cfg.interval_law.sample(&mut rng);
        let draw: f64 = rng.random();
        time += tau;
        let (detected, _) = step_in_place(&mut amps, tau, &cfg.dynamics, cut, draw, &mut scratch)?;
        if detected {
            return Ok(TrajectoryRecord {
                index,
                detected: true,
                time,
                n_measurements: n,
            });
        }
    }
    Ok(TrajectoryRecord {
        index,
        detected: false,
        time,
        n_measurements: cfg.max_measurements,
    })
}

/// Runs all trajectories on the current rayon pool and builds the ensemble.
pub fn monte_carlo(cfg: &ProtocolConfig) -> Result<DetectionEnsemble> {
    cfg.validate()?;
    let records = (0..cfg.n_trajectories)
        .into_par_iter()
        .map(|i| run_trajectory(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    DetectionEnsemble::from_records(records, &cfg.histogram)
}

/// [`monte_carlo`] on a dedicated pool with `threads` workers.
pub fn monte_carlo_with_threads(cfg: &ProtocolConfig, threads: usize) -> Result<DetectionEnsemble> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    pool.install(|| monte_carlo(cfg))
}

/// Worker count from `QDETECT_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("QDETECT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// `‖Ũ_{τₙ}⋯Ũ_{τ₁}ψ₀‖²` with `Ũ_τ = P_{A⊥}U_τ`: the probability of no
/// detection in the first `n` measurements at the given intervals.
pub fn conditional_survival(
    psi0: &StateVector,
    taus: &[f64],
    dynamics: &Dynamics,
    window: &SiteWindow,
) -> Result<f64> {
    dynamics.check(window.n_sites())?;
    check_dim(window.n_sites(), psi0.dim())?;
    if let Some(t) = taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::param("taus", format!("intervals must be finite and non-negative, got {t}")));
    }
    let cut = window.cut();
    let mut amps = psi0.amplitudes().to_vec();
    let mut scratch = Vec::new();
    for &tau in taus {
        dynamics.evolve(tau, &mut amps, &mut scratch);
        for a in amps[cut..].iter_mut() {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    Ok(amps.iter().map(|a| a.norm_sqr()).sum::<f64>().clamp(0.0, 1.0))
}
