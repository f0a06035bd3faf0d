use super::config::{Grid, ProtocolKind, RunConfig};
use super::io::{fmt_f, write_csv};
use super::{CliError, Setup};
use crate::analytic::{
    coefficients, cubic_roots, first_detection_density, mfdt, mfdt_asymptotes, optimal_rate,
    short_time_prefactor, OptimalRate, StateCoefficients,
};
use crate::darkbright::{bright_basis_all_to_all, eventual_detection_probability, DarkBrightDecomposition};
use crate::protocol::{monte_carlo, DetectionEnsemble, HistogramSpec, IntervalLaw, ProtocolConfig};

const DEFAULT_TRAJECTORIES: u64 = 10_000;
const DEFAULT_R_GRID: &str = "0.01:100:81:log";
const DEFAULT_ROOTS_GRID: &str = "0.001:1000:61:log";
const DEFAULT_T_GRID: &str = "0:10:201";
/// Relative tolerance on `|Q(sᵢ)|` for the `roots` certificate.
const ROOT_TOLERANCE: f64 = 1e-9;

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn grid_or(g: Option<Grid>, default: &str) -> Grid {
    g.unwrap_or_else(|| Grid::parse(default).expect("default grid parses"))
}

fn interval_law(cfg: &RunConfig, rate: f64) -> Result<IntervalLaw, CliError> {
    match cfg.protocol {
        ProtocolKind::Exp => Ok(IntervalLaw::Exponential { rate }),
        ProtocolKind::Sharp => cfg
            .period
            .map(|period| IntervalLaw::Sharp { period })
            .ok_or_else(|| CliError::Config("--protocol sharp needs --period".into())),
    }
}

fn run_mc(
    cfg: &RunConfig,
    setup: &Setup,
    law: IntervalLaw,
    histogram: HistogramSpec,
) -> Result<DetectionEnsemble, CliError> {
    let pc = ProtocolConfig::new(setup.dynamics()?, setup.window, setup.state.clone(), law)?
        .with_trajectories(cfg.trajectories.unwrap_or(DEFAULT_TRAJECTORIES))
        .with_seed(cfg.seed)
        .with_max_measurements(cfg.max_measurements)
        .with_histogram(histogram);
    let ens = monte_carlo(&pc)?;
    if ens.n_censored() > 0 {
        eprintln!(
            "warning: {} of {} trajectories reached the cap of {} measurements and are censored",
            ens.n_censored(),
            ens.len(),
            cfg.max_measurements
        );
    }
    Ok(ens)
}

/// Coefficients for the analytic commands, which need a bright state.
fn bright_coefficients(setup: &Setup) -> Result<StateCoefficients, CliError> {
    coefficients(&setup.state, &setup.window).map_err(|e| {
        CliError::Config(format!("analytic results need a bright initial state: {e}"))
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = Setup::new(cfg)?;
    let law = interval_law(cfg, cfg.rate())?;
    let ens = run_mc(
        cfg,
        &setup,
        law,
        HistogramSpec {
            bins: cfg.bins,
            t_max: cfg.t_max,
        },
    )?;

    let rows: Vec<Vec<String>> = ens
        .records
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                u8::from(r.detected).to_string(),
                fmt_f(r.time),
                r.n_measurements.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_file("trajectories.csv"),
        &header(&["index", "detected", "time", "n_measurements"]),
        &rows,
    )?;
    let s = &ens.survival;
    let rows: Vec<Vec<String>> = (0..s.edges.len())
        .map(|i| vec![fmt_f(s.edges[i]), fmt_f(s.survival[i]), fmt_f(s.stderr[i])])
        .collect();
    write_csv(&cfg.out_file("survival.csv"), &header(&["t", "survival", "stderr"]), &rows)?;
    let d = &ens.density;
    let rows: Vec<Vec<String>> = (0..d.centers.len())
        .map(|i| vec![fmt_f(d.centers[i]), fmt_f(d.values[i]), fmt_f(d.stderr[i])])
        .collect();
    write_csv(&cfg.out_file("fdp.csv"), &header(&["t", "density", "stderr"]), &rows)?;

    let (p, p_err) = ens.detected_fraction();
    println!("trajectories       {}", ens.len());
    println!("detected fraction  {p:.6} ± {p_err:.6}");
    let p_det = eventual_detection_probability(&setup.state, &setup.decomposition()?)?;
    println!("predicted P_det    {p_det:.6}");
    match ens.mean_fdt() {
        Some(est) => {
            println!("mean FDT           {:.6} ± {:.6} (detected only)", est.mean, est.stderr);
            if let (Some(model), IntervalLaw::Exponential { rate }) = (setup.model, law) {
                if let Ok(k) = coefficients(&setup.state, &setup.window) {
                    let t = mfdt(&k, rate, &model, &setup.window)?;
                    println!("analytic T(r)      {t:.6} (z = {:.2})", est.z_score(t));
                }
            }
        }
        None => println!("mean FDT           n/a (no detections)"),
    }
    if let Some(nm) = ens.mean_measurements() {
        println!("mean measurements  {:.4} ± {:.4}", nm.mean, nm.stderr);
    }
    Ok(())
}

pub fn mfdt_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = Setup::new(cfg)?;
    let model = setup.all_to_all("mfdt-sweep")?;
    let w = setup.window;
    let k = bright_coefficients(&setup)?;
    let rates = grid_or(cfg.r_grid, DEFAULT_R_GRID).points();
    let t: Vec<f64> = rates
        .iter()
        .map(|&r| mfdt(&k, r, &model, &w))
        .collect::<Result<_, _>>()?;
    let r_star = match optimal_rate(&k, &model, &w)? {
        OptimalRate::Finite(x) => x,
        OptimalRate::Unbounded => f64::INFINITY,
    };
    let argmin = (0..t.len()).min_by(|&a, &b| t[a].total_cmp(&t[b])).expect("grid is non-empty");

    let mut cols = vec!["r", "T_analytic", "r_star", "is_min"];
    if cfg.with_mc {
        cols.extend(["T_mc", "T_mc_stderr", "n_censored"]);
    }
    let mut rows = Vec::with_capacity(rates.len());
    for (i, &r) in rates.iter().enumerate() {
        let mut row = vec![fmt_f(r), fmt_f(t[i]), fmt_f(r_star), u8::from(i == argmin).to_string()];
        if cfg.with_mc {
            let ens = run_mc(cfg, &setup, IntervalLaw::Exponential { rate: r }, HistogramSpec::default())?;
            match ens.mean_fdt() {
                Some(est) => row.extend([fmt_f(est.mean), fmt_f(est.stderr)]),
                None => row.extend([fmt_f(f64::NAN), fmt_f(f64::NAN)]),
            }
            row.push(ens.n_censored().to_string());
        }
        rows.push(row);
    }
    write_csv(&cfg.out_file("mfdt_sweep.csv"), &header(&cols), &rows)?;

    let asym = mfdt_asymptotes(&k, &model, &w)?;
    match r_star.is_finite() {
        true => println!("optimal rate r*        {r_star:.10}"),
        false => println!("optimal rate r*        unbounded (no weight on the complement)"),
    }
    println!("grid minimum           r = {:.6}, T = {:.10}", rates[argmin], t[argmin]);
    println!(
        "smallest grid rate     r = {:.3e}, r·T = {:.6} (limit r → 0: {:.6})",
        rates[0],
        rates[0] * t[0],
        asym.small_rate
    );
    if t.windows(2).all(|p| p[1] < p[0]) {
        println!("T(r) decreases monotonically over the grid");
    }
    Ok(())
}

pub fn fdp(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = Setup::new(cfg)?;
    let model = setup.all_to_all("fdp")?;
    let w = setup.window;
    let k = bright_coefficients(&setup)?;
    let grid = grid_or(cfg.t_grid, DEFAULT_T_GRID);
    let times = grid.points();
    let rates = cfg.rates.clone().unwrap_or_else(|| vec![1.0]);

    let mut curves = Vec::with_capacity(rates.len());
    for &r in &rates {
        let curve = first_detection_density(&k, r, &model, &w, &times)?;
        if let Some(msg) = &curve.conditioning_warning {
            eprintln!("warning: {msg}");
        }
        curves.push(curve);
    }
    let mut cols = vec!["t".to_string()];
    cols.extend(rates.iter().map(|r| format!("F(r={r})")));
    let rows: Vec<Vec<String>> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = vec![fmt_f(t)];
            row.extend(curves.iter().map(|c| fmt_f(c.values[i])));
            row
        })
        .collect();
    write_csv(&cfg.out_file("fdp.csv"), &cols, &rows)?;

    let mut rows = Vec::with_capacity(rates.len());
    for (&r, c) in rates.iter().zip(&curves) {
        let (order, prefactor) = short_time_prefactor(&k, r, &model);
        rows.push(vec![
            fmt_f(r),
            fmt_f(c.roots.s1),
            fmt_f(c.decay_timescale),
            fmt_f(c.roots.s2_real),
            fmt_f(c.roots.s2_imag),
            order.to_string(),
            fmt_f(prefactor),
            fmt_f(c.max_imaginary_residual),
            c.conditioning_warning.clone().unwrap_or_default(),
        ]);
        println!(
            "r = {r}: t_m = {:.10}, F(t) ≈ {prefactor:.6}·t^{order} as t → 0",
            c.decay_timescale
        );
    }
    write_csv(
        &cfg.out_file("fdp_timescales.csv"),
        &header(&[
            "r",
            "s1",
            "t_m",
            "s_R",
            "s_I",
            "short_time_order",
            "short_time_prefactor",
            "max_imaginary_residual",
            "warning",
        ]),
        &rows,
    )?;

    if cfg.with_mc {
        let mut rows = Vec::new();
        for &r in &rates {
            let spec = HistogramSpec {
                bins: (grid.n - 1).max(1),
                t_max: Some(grid.hi),
            };
            let ens = run_mc(cfg, &setup, IntervalLaw::Exponential { rate: r }, spec)?;
            let d = &ens.density;
            for i in 0..d.centers.len() {
                rows.push(vec![fmt_f(r), fmt_f(d.centers[i]), fmt_f(d.values[i]), fmt_f(d.stderr[i])]);
            }
        }
        write_csv(&cfg.out_file("fdp_mc.csv"), &header(&["r", "t", "density", "stderr"]), &rows)?;
    }
    Ok(())
}

fn basis_rows(kind: &str, dec: &DarkBrightDecomposition, rows: &mut Vec<Vec<String>>) {
    let basis = if kind == "dark" { dec.dark_basis() } else { dec.bright_basis() };
    for (v, vec) in basis.iter().enumerate() {
        for (site, a) in vec.amplitudes().iter().enumerate() {
            rows.push(vec![
                kind.to_string(),
                v.to_string(),
                (site + 1).to_string(),
                fmt_f(a.re),
                fmt_f(a.im),
            ]);
        }
    }
}

pub fn darkstates(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = Setup::new(cfg)?;
    let dec = match (&setup.matrix, setup.model) {
        (Some(h), _) => setup.numerical_decomposition(h)?,
        (None, Some(model)) => {
            // both routes are available here; they must agree
            let numerical = setup.numerical_decomposition(&model.hamiltonian())?;
            let closed = bright_basis_all_to_all(&setup.window);
            if numerical.dark_dim() != closed.dark_dim() {
                return Err(CliError::Numerical(format!(
                    "numerical dark dimension {} differs from the closed form {}",
                    numerical.dark_dim(),
                    closed.dark_dim()
                )));
            }
            closed
        }
        (None, None) => unreachable!("setup always holds a model or a matrix"),
    };
    let mut rows = Vec::new();
    basis_rows("dark", &dec, &mut rows);
    basis_rows("bright", &dec, &mut rows);
    write_csv(
        &cfg.out_file("darkstates.csv"),
        &header(&["kind", "vector", "site", "re", "im"]),
        &rows,
    )?;

    println!("sites              {}", setup.window.n_sites());
    println!("target sites       {}..={}", setup.window.cut() + 1, setup.window.n_sites());
    println!("dark dimension     {}", dec.dark_dim());
    println!("bright dimension   {}", dec.bright_dim());
    for (i, v) in dec.dark_basis().iter().enumerate() {
        let amps: Vec<String> = v
            .amplitudes()
            .iter()
            .map(|a| format!("{:+.6}{:+.6}i", a.re, a.im))
            .collect();
        println!("dark[{i}]            {}", amps.join(" "));
    }
    let p_det = eventual_detection_probability(&setup.state, &dec)?;
    println!("P_det(initial)     {p_det:.12}");
    Ok(())
}

pub fn roots(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = Setup::new(cfg)?;
    let model = setup.all_to_all("roots")?;
    let rates = grid_or(cfg.r_grid, DEFAULT_ROOTS_GRID).points();
    let mut rows = Vec::with_capacity(rates.len());
    let mut failures = Vec::new();
    for &r in &rates {
        let c = cubic_roots(r, &model, &setup.window)?;
        let (e1, e2) = c.residuals();
        let ok = c.verify(ROOT_TOLERANCE);
        if let Err(e) = &ok {
            failures.push(format!("r = {r}: {e}"));
        }
        let rh = c.routh_hurwitz;
        rows.push(vec![
            fmt_f(r),
            fmt_f(c.s1),
            fmt_f(c.s2_real),
            fmt_f(c.s2_imag),
            fmt_f(c.p),
            fmt_f(c.q),
            fmt_f(c.discriminant),
            fmt_f(c.u),
            fmt_f(c.v),
            fmt_f(1.0 / c.s1.abs()),
            fmt_f(rh.a2),
            fmt_f(rh.a1),
            fmt_f(rh.a0),
            fmt_f(rh.determinant),
            fmt_f(e1),
            fmt_f(e2),
            u8::from(ok.is_ok()).to_string(),
        ]);
    }
    write_csv(
        &cfg.out_file("roots.csv"),
        &header(&[
            "r",
            "s1",
            "s_R",
            "s_I",
            "p",
            "q",
            "discriminant",
            "u",
            "v",
            "t_m",
            "rh_a2",
            "rh_a1",
            "rh_a0",
            "rh_determinant",
            "residual_s1",
            "residual_s2",
            "certified",
        ]),
        &rows,
    )?;
    println!("{} rates, {} certified", rates.len(), rates.len() - failures.len());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failures.join("; ")))
    }
}
