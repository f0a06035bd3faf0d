use num_complex::Complex64;

use super::config::RunConfig;
use super::state_spec::StateSpec;
use super::{CliError, Setup};
use crate::analytic::{
    eigenbasis_sum_rules, coefficients, cubic_roots, first_detection_density,
    first_detection_laplace, mfdt, optimal_rate, OptimalRate, StateCoefficients,
};
use crate::darkbright::{bright_basis_all_to_all, special_state};
use crate::numerics::{log_grid, minimize_on_log_grid};
use crate::protocol::{monte_carlo, IntervalLaw, ProtocolConfig};
use crate::spectral::zero_mode;
use crate::state::{SiteWindow, StateVector};

/// Pass/fail thresholds of `validate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// `||c_{A⊥}|²/m - (a₁ + a₂)|`
    pub sum_rule: f64,
    /// `|F̂(0) - 1|`
    pub fhat_at_zero: f64,
    /// `|∫F dt - 1|`
    pub density_norm: f64,
    /// Relative gap between `∫tF dt` and `T(r)`.
    pub density_mean: f64,
    /// Relative gap between the residue sum and `F̂(s)`.
    pub density_laplace: f64,
    /// `|Q(sᵢ)|` relative to the largest coefficient.
    pub root_residual: f64,
    /// Relative gap between the closed-form and numerical optimal rate. A
    /// minimizer driven by function values resolves `r*` to about `√ε`, so
    /// this cannot usefully go below ~1e-7.
    pub optimal_rate: f64,
    /// Allowed `|T_mc - T|` in standard errors. Not tightened: a smaller
    /// value only raises the false-alarm rate at fixed sample size.
    pub mc_sigmas: f64,
}

pub const DEFAULT_THRESHOLDS: Thresholds = Thresholds {
    sum_rule: 1e-10,
    fhat_at_zero: 1e-10,
    density_norm: 1e-6,
    density_mean: 1e-5,
    density_laplace: 1e-8,
    root_residual: 1e-9,
    optimal_rate: 1e-6,
    mc_sigmas: 3.0,
};

pub const TIGHT_THRESHOLDS: Thresholds = Thresholds {
    sum_rule: 1e-13,
    fhat_at_zero: 1e-13,
    density_norm: 1e-10,
    density_mean: 1e-9,
    density_laplace: 1e-11,
    root_residual: 1e-12,
    optimal_rate: 1e-7,
    mc_sigmas: 3.0,
};

const MC_TRAJECTORIES: u64 = 100_000;
const RANDOM_STATES: u64 = 20;

struct Report {
    failed: Vec<&'static str>,
    total: usize,
}

impl Report {
    fn record(&mut self, name: &'static str, ok: bool, detail: String) {
        self.total += 1;
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(name);
        }
    }
}

/// `(1,…,1, i,…,i)/√N`: uniform phase on the complement, `i` on the target.
fn twisted(window: &SiteWindow) -> StateVector {
    let amps = (1..=window.n_sites())
        .map(|x| {
            if window.in_target(x) {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    StateVector::normalize(amps).expect("nonzero")
}

pub fn run(cfg: &RunConfig, th: &Thresholds, flip_a3: bool) -> Result<(), CliError> {
    if cfg.hamiltonian.is_some() {
        return Err(CliError::Config("validate runs on the all-to-all model; drop --hamiltonian".into()));
    }
    let setup = Setup::new(cfg)?;
    let model = setup.all_to_all("validate")?;
    let w = setup.window;
    let coeffs = |psi: &StateVector| -> Result<StateCoefficients, CliError> {
        let mut k = coefficients(psi, &w)?;
        if flip_a3 {
            k.a3 = -k.a3;
        }
        Ok(k)
    };
    let dec = bright_basis_all_to_all(&w);
    let mut states = vec![special_state(&w), StateVector::uniform(w.n_sites()), twisted(&w)];
    states.push(StateVector::site(w.n_sites(), w.n_sites())?);
    for seed in 0..RANDOM_STATES {
        states.push(StateSpec::RandomBright(seed).build(&w, || Ok(dec.bright_basis().to_vec()))?);
    }
    let rates = [0.3, 1.0, 3.0, 30.0].map(|x| x * model.coupling().abs());
    let mut report = Report {
        failed: Vec::new(),
        total: 0,
    };

    let mut err = 0.0f64;
    for psi in &states {
        err = err.max(coeffs(psi)?.sum_rule_residual().abs());
    }
    report.record("coefficient_sum_rule", err <= th.sum_rule, format!("max residual {err:.3e}"));

    let routes: Result<Vec<_>, _> = states.iter().map(|psi| eigenbasis_sum_rules(psi, &w)).collect();
    report.record(
        "eigenbasis_overlap_routes",
        routes.is_ok(),
        match routes {
            Ok(_) => format!("{} states agree", states.len()),
            Err(e) => e.to_string(),
        },
    );

    let (mut e_zero, mut e_norm, mut e_mean, mut e_lap) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for psi in &states {
        let k = coeffs(psi)?;
        for &r in &rates {
            e_zero = e_zero.max((first_detection_laplace(&k, r, 0.0, &model, &w)? - 1.0).abs());
            let curve = first_detection_density(&k, r, &model, &w, &[])?;
            e_norm = e_norm.max((curve.integral() - 1.0).abs());
            let t = mfdt(&k, r, &model, &w)?;
            e_mean = e_mean.max((curve.mean() - t).abs() / t);
            for s in [0.5 * r, 2.0 * r] {
                let want = first_detection_laplace(&k, r, s, &model, &w)?;
                e_lap = e_lap.max((curve.laplace(s) - want).abs() / want.abs().max(1e-3));
            }
        }
    }
    report.record("fhat_at_zero", e_zero <= th.fhat_at_zero, format!("max |F̂(0) - 1| {e_zero:.3e}"));
    report.record("density_normalization", e_norm <= th.density_norm, format!("max |∫F - 1| {e_norm:.3e}"));
    report.record("density_mean_vs_mfdt", e_mean <= th.density_mean, format!("max relative gap {e_mean:.3e}"));
    report.record(
        "density_laplace_vs_fhat",
        e_lap <= th.density_laplace,
        format!("max relative gap {e_lap:.3e}"),
    );

    let scale = model.coupling().abs() * model.n_sites() as f64;
    let mut root_fail = None;
    let mut e_root = 0.0f64;
    for r in log_grid(1e-3 * scale, 1e3 * scale, 61) {
        let c = cubic_roots(r, &model, &w)?;
        let (e1, e2) = c.residuals();
        e_root = e_root.max(e1).max(e2);
        if let Err(e) = c.verify(th.root_residual) {
            root_fail.get_or_insert(e.to_string());
        }
    }
    report.record(
        "root_certificates",
        root_fail.is_none(),
        root_fail.unwrap_or_else(|| format!("61 rates, max residual {e_root:.3e}")),
    );

    let mut e_opt = 0.0f64;
    let mut opt_fail = None;
    for psi in &states {
        let k = coeffs(psi)?;
        let OptimalRate::Finite(closed) = optimal_rate(&k, &model, &w)? else {
            continue;
        };
        let found = minimize_on_log_grid(
            |r| mfdt(&k, r, &model, &w).unwrap_or(f64::INFINITY),
            1e-4 * scale,
            1e4 * scale,
            161,
            1e-12,
        );
        match found {
            Some((x, _)) => e_opt = e_opt.max((x - closed).abs() / closed),
            None => {
                opt_fail.get_or_insert(format!("no interior minimum near r* = {closed}"));
            }
        }
    }
    report.record(
        "optimal_rate_vs_numeric",
        opt_fail.is_none() && e_opt <= th.optimal_rate,
        opt_fail.unwrap_or_else(|| format!("max relative gap {e_opt:.3e}")),
    );

    if w.cut() >= 2 {
        let pc = ProtocolConfig::new(model, w, zero_mode(w.n_sites(), 1)?, IntervalLaw::Exponential { rate: 1.0 })?
            .with_trajectories(200)
            .with_max_measurements(1_000)
            .with_seed(cfg.seed);
        let ens = monte_carlo(&pc)?;
        report.record(
            "dark_state_never_detected",
            ens.n_detected() == 0,
            format!("{} detections in {} trajectories", ens.n_detected(), ens.len()),
        );
    }

    let trajectories = cfg.trajectories.unwrap_or(MC_TRAJECTORIES);
    let mut mc_ok = true;
    let mut details = Vec::new();
    for (psi, r) in [(special_state(&w), 1.0), (twisted(&w), 2.0)] {
        let r = r * model.coupling().abs();
        let pc = ProtocolConfig::new(model, w, psi.clone(), IntervalLaw::Exponential { rate: r })?
            .with_trajectories(trajectories)
            .with_seed(cfg.seed);
        let est = monte_carlo(&pc)?
            .mean_fdt()
            .ok_or_else(|| CliError::Numerical("no detections in the MC comparison".into()))?;
        let t = mfdt(&coeffs(&psi)?, r, &model, &w)?;
        let z = est.z_score(t);
        mc_ok &= z <= th.mc_sigmas;
        details.push(format!("T = {t:.6}, MC {:.6} ± {:.6} (z = {z:.2})", est.mean, est.stderr));
    }
    report.record("mc_vs_analytic_mfdt", mc_ok, details.join("; "));

    println!("{}/{} checks passed", report.total - report.failed.len(), report.total);
    if report.failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(report.failed.join(", ")))
    }
}
