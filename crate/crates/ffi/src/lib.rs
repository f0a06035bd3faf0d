//! C interface to `qdetect`.
//!
//! Every fallible function returns a [`QdStatus`]; on failure the message is
//! available from [`qd_last_error`] on the same thread. Panics are caught at
//! the boundary and reported as `QD_STATUS_PANIC`. Objects created by
//! `*_new`/`*_run` are owned by the caller and released with the matching
//! `*_free`.
//!
//! Variable-length outputs follow one convention: `*len_out` always receives
//! the required length; passing null buffers only queries it, and a capacity
//! below the required length fails with `QD_STATUS_INVALID_ARGUMENT`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use qdetect::analytic::{self, OptimalRate, StateCoefficients};
use qdetect::darkbright::{bright_basis_all_to_all, eventual_detection_probability};
use qdetect::protocol::{self, DetectionEnsemble, HistogramSpec, IntervalLaw, ProtocolConfig};
use qdetect::spectral::AllToAllModel;
use qdetect::state::{SiteWindow, StateVector};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFault = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdComplex {
    pub re: f64,
    pub im: f64,
}

/// All-to-all model with its measurement window (opaque).
pub struct QdModel {
    model: AllToAllModel,
    window: SiteWindow,
}

/// Coefficients of an initial state.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdCoefficients {
    pub c_a: QdComplex,
    pub c_aperp: QdComplex,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

/// Roots of the cubic denominator at rate `r`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdRoots {
    pub r: f64,
    pub s1: f64,
    pub s2_real: f64,
    pub s2_imag: f64,
    pub p: f64,
    pub q: f64,
    pub discriminant: f64,
    /// 1 if the Routh–Hurwitz inequalities hold.
    pub routh_hurwitz: i32,
    /// 1 if every certificate holds with residual tolerance 1e-9.
    pub certified: i32,
}

/// Sampler settings. `sharp = 0` draws exponential intervals with `rate`;
/// otherwise intervals are exactly `period`. `t_max <= 0` picks the survival
/// histogram range from the sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdSimulationConfig {
    pub rate: f64,
    pub sharp: i32,
    pub period: f64,
    pub n_trajectories: u64,
    pub seed: u64,
    pub max_measurements: u64,
    pub bins: usize,
    pub t_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdSimulationSummary {
    pub n_trajectories: u64,
    pub n_detected: u64,
    pub n_censored: u64,
    /// NaN when nothing was detected.
    pub mean_fdt: f64,
    pub mean_fdt_stderr: f64,
    pub detected_fraction: f64,
}

/// Result of a Monte Carlo run (opaque).
pub struct QdSimulation {
    ensemble: DetectionEnsemble,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(QdStatus, String);

impl From<qdetect::Error> for Failure {
    fn from(e: qdetect::Error) -> Self {
        let status = match e {
            qdetect::Error::NumericalFault { .. } => QdStatus::NumericalFault,
            _ => QdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(QdStatus::InvalidArgument, msg.into())
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            QdStatus::Panic
        }
    }
}

unsafe fn nonnull<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(QdStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(QdStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(QdStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn state(model: &QdModel, amps: *const QdComplex, len: usize) -> Result<StateVector, Failure> {
    let amps = slice(amps, len, "amplitudes")?;
    if len != model.window.n_sites() {
        return Err(invalid(format!(
            "state has {len} amplitudes, model has {} sites",
            model.window.n_sites()
        )));
    }
    Ok(StateVector::new(
        amps.iter().map(|a| Complex64::new(a.re, a.im)).collect(),
    )?)
}

fn to_c(z: Complex64) -> QdComplex {
    QdComplex { re: z.re, im: z.im }
}

fn coeffs_from_c(model: &QdModel, c: &QdCoefficients) -> StateCoefficients {
    StateCoefficients {
        c_a: Complex64::new(c.c_a.re, c.c_a.im),
        c_aperp: Complex64::new(c.c_aperp.re, c.c_aperp.im),
        a1: c.a1,
        a2: c.a2,
        a3: c.a3,
        cut: model.window.cut(),
        n_sites: model.window.n_sites(),
    }
}

/// Writes `data` into a caller buffer under the length convention above.
unsafe fn fill<T: Copy>(data: &[T], buf: *mut T, cap: usize, len_out: *mut usize) -> Result<(), Failure> {
    *out(len_out, "len_out")? = data.len();
    if buf.is_null() {
        return Ok(());
    }
    if cap < data.len() {
        return Err(invalid(format!("buffer holds {cap}, need {}", data.len())));
    }
    std::ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn qd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an all-to-all model with `n_sites` sites, hopping `coupling` and
/// target sites `cut + 1 ..= n_sites`.
///
/// # Safety
/// `out_model` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qd_model_new(
    n_sites: usize,
    cut: usize,
    coupling: f64,
    out_model: *mut *mut QdModel,
) -> QdStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let model = AllToAllModel::new(n_sites, coupling)?;
        let window = SiteWindow::new(n_sites, cut)?;
        *slot = Box::into_raw(Box::new(QdModel { model, window }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or come from `qd_model_new` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn qd_model_free(model: *mut QdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Coefficients of a normalized bright state of `len` amplitudes.
///
/// # Safety
/// Pointers must be null or valid; `amplitudes` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn qd_coefficients(
    model: *const QdModel,
    amplitudes: *const QdComplex,
    len: usize,
    out_coeffs: *mut QdCoefficients,
) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let slot = out(out_coeffs, "out_coeffs")?;
        let psi = state(model, amplitudes, len)?;
        let k = analytic::coefficients(&psi, &model.window)?;
        *slot = QdCoefficients {
            c_a: to_c(k.c_a),
            c_aperp: to_c(k.c_aperp),
            a1: k.a1,
            a2: k.a2,
            a3: k.a3,
        };
        Ok(())
    })
}

/// Mean first detection time at rate `r`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_mfdt(
    model: *const QdModel,
    coeffs: *const QdCoefficients,
    r: f64,
    out_value: *mut f64,
) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let k = coeffs_from_c(model, nonnull(coeffs, "coeffs")?);
        *out(out_value, "out_value")? = analytic::mfdt(&k, r, &model.model, &model.window)?;
        Ok(())
    })
}

/// Rate minimizing the mean first detection time; `+inf` when it decreases
/// monotonically.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_optimal_rate(
    model: *const QdModel,
    coeffs: *const QdCoefficients,
    out_value: *mut f64,
) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let k = coeffs_from_c(model, nonnull(coeffs, "coeffs")?);
        *out(out_value, "out_value")? = match analytic::optimal_rate(&k, &model.model, &model.window)? {
            OptimalRate::Finite(r) => r,
            OptimalRate::Unbounded => f64::INFINITY,
        };
        Ok(())
    })
}

/// Laplace transform of the survival probability at `s >= 0`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_survival_laplace(
    model: *const QdModel,
    coeffs: *const QdCoefficients,
    r: f64,
    s: f64,
    out_value: *mut f64,
) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let k = coeffs_from_c(model, nonnull(coeffs, "coeffs")?);
        *out(out_value, "out_value")? =
            analytic::survival_laplace(&k, r, s, &model.model, &model.window)?;
        Ok(())
    })
}

/// Laplace transform of the first detection density at `s >= 0`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_first_detection_laplace(
    model: *const QdModel,
    coeffs: *const QdCoefficients,
    r: f64,
    s: f64,
    out_value: *mut f64,
) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let k = coeffs_from_c(model, nonnull(coeffs, "coeffs")?);
        *out(out_value, "out_value")? =
            analytic::first_detection_laplace(&k, r, s, &model.model, &model.window)?;
        Ok(())
    })
}

/// Roots of the cubic denominator at rate `r`, with their certificates.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_cubic_roots(model: *const QdModel, r: f64, out_roots: *mut QdRoots) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let slot = out(out_roots, "out_roots")?;
        let c = analytic::cubic_roots(r, &model.model, &model.window)?;
        *slot = QdRoots {
            r: c.r,
            s1: c.s1,
            s2_real: c.s2_real,
            s2_imag: c.s2_imag,
            p: c.p,
            q: c.q,
            discriminant: c.discriminant,
            routh_hurwitz: c.routh_hurwitz.holds() as i32,
            certified: c.verify(1e-9).is_ok() as i32,
        };
        Ok(())
    })
}

/// Decay timescale `t_m = 1/|s1|` at rate `r`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_decay_timescale(model: *const QdModel, r: f64, out_value: *mut f64) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        *out(out_value, "out_value")? = analytic::decay_timescale(r, &model.model, &model.window)?;
        Ok(())
    })
}

/// First detection density at each of `len` times, written to `values`
/// (`len` entries).
///
/// # Safety
/// `times` and `values` must hold `len` entries; other pointers must be null
/// or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_first_detection_density(
    model: *const QdModel,
    coeffs: *const QdCoefficients,
    r: f64,
    times: *const f64,
    len: usize,
    values: *mut f64,
) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let k = coeffs_from_c(model, nonnull(coeffs, "coeffs")?);
        let times = slice(times, len, "times")?;
        if len > 0 && values.is_null() {
            return Err(Failure(QdStatus::NullPointer, "`values` is null".into()));
        }
        let curve = analytic::first_detection_density(&k, r, &model.model, &model.window, times)?;
        if len > 0 {
            std::ptr::copy_nonoverlapping(curve.values.as_ptr(), values, len);
        }
        Ok(())
    })
}

/// Dimension of the dark subspace.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_dark_dimension(model: *const QdModel, out_value: *mut usize) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        *out(out_value, "out_value")? = bright_basis_all_to_all(&model.window).dark_dim();
        Ok(())
    })
}

/// Probability that a normalized state is ever detected.
///
/// # Safety
/// `amplitudes` must hold `len` entries; other pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_detection_probability(
    model: *const QdModel,
    amplitudes: *const QdComplex,
    len: usize,
    out_value: *mut f64,
) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let slot = out(out_value, "out_value")?;
        let psi = state(model, amplitudes, len)?;
        *slot = eventual_detection_probability(&psi, &bright_basis_all_to_all(&model.window))?;
        Ok(())
    })
}

/// Default sampler settings: rate 1, 10⁴ trajectories, seed 0.
#[no_mangle]
pub extern "C" fn qd_simulation_config_default() -> QdSimulationConfig {
    QdSimulationConfig {
        rate: 1.0,
        sharp: 0,
        period: 0.0,
        n_trajectories: 10_000,
        seed: 0,
        max_measurements: protocol::DEFAULT_MAX_MEASUREMENTS,
        bins: protocol::DEFAULT_BINS,
        t_max: 0.0,
    }
}

/// Runs the Monte Carlo sampler. Results do not depend on the thread count.
///
/// # Safety
/// `amplitudes` must hold `len` entries; other pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_simulation_run(
    model: *const QdModel,
    amplitudes: *const QdComplex,
    len: usize,
    config: *const QdSimulationConfig,
    out_sim: *mut *mut QdSimulation,
) -> QdStatus {
    guard(|| {
        let model = nonnull(model, "model")?;
        let cfg = nonnull(config, "config")?;
        let slot = out(out_sim, "out_sim")?;
        let psi = state(model, amplitudes, len)?;
        let law = if cfg.sharp != 0 {
            IntervalLaw::Sharp { period: cfg.period }
        } else {
            IntervalLaw::Exponential { rate: cfg.rate }
        };
        let pc = ProtocolConfig::new(model.model, model.window, psi, law)?
            .with_trajectories(cfg.n_trajectories)
            .with_seed(cfg.seed)
            .with_max_measurements(cfg.max_measurements)
            .with_histogram(HistogramSpec {
                bins: cfg.bins,
                t_max: (cfg.t_max > 0.0).then_some(cfg.t_max),
            });
        let ensemble = protocol::monte_carlo(&pc)?;
        *slot = Box::into_raw(Box::new(QdSimulation { ensemble }));
        Ok(())
    })
}

/// Summary statistics of a run.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_simulation_summary(
    sim: *const QdSimulation,
    out_summary: *mut QdSimulationSummary,
) -> QdStatus {
    guard(|| {
        let ens = &nonnull(sim, "sim")?.ensemble;
        let slot = out(out_summary, "out_summary")?;
        let mean = ens.mean_fdt();
        *slot = QdSimulationSummary {
            n_trajectories: ens.len() as u64,
            n_detected: ens.n_detected(),
            n_censored: ens.n_censored(),
            mean_fdt: mean.map_or(f64::NAN, |m| m.mean),
            mean_fdt_stderr: mean.map_or(f64::NAN, |m| m.stderr),
            detected_fraction: ens.detected_fraction().0,
        };
        Ok(())
    })
}

/// Survival estimate at the histogram edges: times, survival and standard
/// errors, each of length `*len_out`.
///
/// # Safety
/// Buffers must be null or hold `cap` entries; other pointers must be null
/// or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_simulation_survival(
    sim: *const QdSimulation,
    times: *mut f64,
    survival: *mut f64,
    stderr: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> QdStatus {
    guard(|| {
        let s = &nonnull(sim, "sim")?.ensemble.survival;
        fill(&s.edges, times, cap, len_out)?;
        fill(&s.survival, survival, cap, len_out)?;
        fill(&s.stderr, stderr, cap, len_out)
    })
}

/// Per-trajectory times (detection time, or last measurement if censored)
/// and detection flags, in trajectory order.
///
/// # Safety
/// Buffers must be null or hold `cap` entries; other pointers must be null
/// or valid.
#[no_mangle]
pub unsafe extern "C" fn qd_simulation_records(
    sim: *const QdSimulation,
    times: *mut f64,
    detected: *mut u8,
    cap: usize,
    len_out: *mut usize,
) -> QdStatus {
    guard(|| {
        let records = &nonnull(sim, "sim")?.ensemble.records;
        let t: Vec<f64> = records.iter().map(|r| r.time).collect();
        let d: Vec<u8> = records.iter().map(|r| r.detected as u8).collect();
        fill(&t, times, cap, len_out)?;
        fill(&d, detected, cap, len_out)
    })
}

/// Releases a simulation. Null is ignored.
///
/// # Safety
/// `sim` must be null or come from `qd_simulation_run` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn qd_simulation_free(sim: *mut QdSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
