use std::ffi::CStr;
use std::path::PathBuf;
use std::ptr;

use qdetect::analytic::{coefficients, cubic_roots, mfdt};
use qdetect::darkbright::special_state;
use qdetect::spectral::AllToAllModel;
use qdetect::state::SiteWindow;
use qdetect_ffi::*;

fn model(n: usize, m: usize, j: f64) -> *mut QdModel {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { qd_model_new(n, m, j, &mut p) }, QdStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(qd_last_error()) }.to_string_lossy().into_owned()
}

fn c(re: f64, im: f64) -> QdComplex {
    QdComplex { re, im }
}

fn special() -> Vec<QdComplex> {
    let a = 1.0 / 3f64.sqrt();
    vec![c(a, 0.0), c(a, 0.0), c(a, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
}

#[test]
fn analytic_calls_match_the_library() {
    let m = model(6, 3, 1.0);
    let psi = special();
    let mut k = QdCoefficients {
        c_a: c(0.0, 0.0),
        c_aperp: c(0.0, 0.0),
        a1: 0.0,
        a2: 0.0,
        a3: 0.0,
    };
    unsafe {
        assert_eq!(qd_coefficients(m, psi.as_ptr(), psi.len(), &mut k), QdStatus::Ok);
        assert!((k.a1 - 0.5).abs() < 1e-15 && (k.a2 - 0.5).abs() < 1e-15);

        let mut t = 0.0;
        assert_eq!(qd_mfdt(m, &k, 1.0, &mut t), QdStatus::Ok);
        let w = SiteWindow::new(6, 3).unwrap();
        let lib = mfdt(
            &coefficients(&special_state(&w), &w).unwrap(),
            1.0,
            &AllToAllModel::new(6, 1.0).unwrap(),
            &w,
        )
        .unwrap();
        assert_eq!(t, lib);

        let mut r_star = 0.0;
        assert_eq!(qd_optimal_rate(m, &k, &mut r_star), QdStatus::Ok);
        assert!((r_star - 6.0).abs() < 1e-12);

        let mut f0 = 0.0;
        assert_eq!(qd_first_detection_laplace(m, &k, 1.0, 0.0, &mut f0), QdStatus::Ok);
        assert!((f0 - 1.0).abs() < 1e-12);
        let mut s0 = 0.0;
        assert_eq!(qd_survival_laplace(m, &k, 1.0, 0.0, &mut s0), QdStatus::Ok);
        assert!((s0 - t).abs() < 1e-12);

        let mut roots: QdRoots = std::mem::zeroed();
        assert_eq!(qd_cubic_roots(m, 1.0, &mut roots), QdStatus::Ok);
        let lib = cubic_roots(1.0, &AllToAllModel::new(6, 1.0).unwrap(), &w).unwrap();
        assert_eq!(roots.s1, lib.s1);
        assert_eq!((roots.routh_hurwitz, roots.certified), (1, 1));
        let mut tm = 0.0;
        assert_eq!(qd_decay_timescale(m, 1.0, &mut tm), QdStatus::Ok);
        assert!((tm * roots.s1.abs() - 1.0).abs() < 1e-15);

        let times = [0.0, 0.1, 1.0, 5.0];
        let mut values = [f64::NAN; 4];
        assert_eq!(
            qd_first_detection_density(m, &k, 1.0, times.as_ptr(), 4, values.as_mut_ptr()),
            QdStatus::Ok
        );
        assert!(values[0].abs() < 1e-12 && values.iter().all(|v| v.is_finite()));
        assert!((values[1] / 0.01 - 9.0).abs() < 1.5);

        let mut dark = 99;
        assert_eq!(qd_dark_dimension(m, &mut dark), QdStatus::Ok);
        assert_eq!(dark, 2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // (|0,1> + |N>)/√2 with |0,1> = (-1, 1, 0, ...)/√2
        let n = 1.0 / 6f64.sqrt();
        let mix: Vec<QdComplex> = [-h, h, 0.0, 0.0, 0.0, 0.0]
            .iter()
            .map(|x| c(h * (x + n), 0.0))
            .collect();
        let mut p = 0.0;
        assert_eq!(qd_detection_probability(m, mix.as_ptr(), 6, &mut p), QdStatus::Ok);
        assert!((p - 0.5).abs() < 1e-12);
        qd_model_free(m);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(qd_model_new(6, 6, 1.0, &mut p), QdStatus::InvalidArgument);
        assert!(p.is_null());
        assert!(last_error().contains("window"), "{}", last_error());
        assert_eq!(qd_model_new(6, 3, 1.0, ptr::null_mut()), QdStatus::NullPointer);
        assert!(last_error().contains("out_model"));

        let m = model(6, 3, 1.0);
        let mut t = 0.0;
        assert_eq!(qd_mfdt(m, ptr::null(), 1.0, &mut t), QdStatus::NullPointer);
        let mut k: QdCoefficients = std::mem::zeroed();
        let bad = [c(1.0, 0.0), c(1.0, 0.0)];
        assert_eq!(qd_coefficients(m, bad.as_ptr(), 2, &mut k), QdStatus::InvalidArgument);
        let mut unnormalized = special();
        unnormalized[0].re = 2.0;
        assert_eq!(qd_coefficients(m, unnormalized.as_ptr(), 6, &mut k), QdStatus::InvalidArgument);
        let psi = special();
        assert_eq!(qd_coefficients(m, psi.as_ptr(), 6, &mut k), QdStatus::Ok);
        assert_eq!(last_error(), "");
        assert_eq!(qd_mfdt(m, &k, -1.0, &mut t), QdStatus::InvalidArgument);

        // dark state
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let dark = [c(-h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(qd_coefficients(m, dark.as_ptr(), 6, &mut k), QdStatus::InvalidArgument);

        qd_model_free(m);
        qd_model_free(ptr::null_mut());
        qd_simulation_free(ptr::null_mut());
    }
}

#[test]
fn simulation_handle() {
    unsafe {
        let m = model(6, 3, 1.0);
        let psi = special();
        let mut cfg = qd_simulation_config_default();
        cfg.n_trajectories = 20_000;
        cfg.seed = 3;
        let mut sim = ptr::null_mut();
        assert_eq!(qd_simulation_run(m, psi.as_ptr(), 6, &cfg, &mut sim), QdStatus::Ok);
        let mut s: QdSimulationSummary = std::mem::zeroed();
        assert_eq!(qd_simulation_summary(sim, &mut s), QdStatus::Ok);
        assert_eq!((s.n_trajectories, s.n_detected, s.n_censored), (20_000, 20_000, 0));
        assert!((s.mean_fdt - 37.0 / 18.0).abs() < 3.0 * s.mean_fdt_stderr);

        let mut len = 0;
        assert_eq!(
            qd_simulation_survival(sim, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), 0, &mut len),
            QdStatus::Ok
        );
        assert_eq!(len, protocol_bins() + 1);
        let mut small = vec![0.0; len - 1];
        assert_eq!(
            qd_simulation_survival(sim, small.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), len - 1, &mut len),
            QdStatus::InvalidArgument
        );
        let (mut t, mut sv, mut se) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        assert_eq!(
            qd_simulation_survival(sim, t.as_mut_ptr(), sv.as_mut_ptr(), se.as_mut_ptr(), len, &mut len),
            QdStatus::Ok
        );
        assert_eq!(sv[0], 1.0);
        assert!(sv.windows(2).all(|p| p[1] <= p[0]));

        let mut n = 0;
        qd_simulation_records(sim, ptr::null_mut(), ptr::null_mut(), 0, &mut n);
        let (mut times, mut det) = (vec![0.0; n], vec![0u8; n]);
        assert_eq!(
            qd_simulation_records(sim, times.as_mut_ptr(), det.as_mut_ptr(), n, &mut n),
            QdStatus::Ok
        );
        let mean = times.iter().sum::<f64>() / n as f64;
        assert!((mean - s.mean_fdt).abs() < 1e-12);
        assert!(det.iter().all(|&d| d == 1));

        // same seed, same result
        let mut again = ptr::null_mut();
        qd_simulation_run(m, psi.as_ptr(), 6, &cfg, &mut again);
        let mut s2: QdSimulationSummary = std::mem::zeroed();
        qd_simulation_summary(again, &mut s2);
        assert_eq!(s, s2);

        cfg.sharp = 1;
        cfg.period = -1.0;
        let mut bad = ptr::null_mut();
        assert_eq!(qd_simulation_run(m, psi.as_ptr(), 6, &cfg, &mut bad), QdStatus::InvalidArgument);
        assert!(bad.is_null());

        qd_simulation_free(sim);
        qd_simulation_free(again);
        qd_model_free(m);
    }
}

fn protocol_bins() -> usize {
    qdetect::protocol::DEFAULT_BINS
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(qd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(crate_dir().join("include/qdetect.h")).unwrap();
    let source = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 18, "{exports:?}");
    for name in exports {
        let declared = header
            .match_indices(&format!("{name}("))
            .any(|(i, _)| matches!(header.as_bytes()[i - 1], b' ' | b'*'));
        assert!(declared, "{name} missing from header");
    }
    for ty in ["QD_STATUS_OK", "QD_STATUS_PANIC", "typedef struct QdModel QdModel;", "typedef struct QdSimulation QdSimulation;"] {
        assert!(header.contains(ty), "{ty}");
    }
}

/// Directory holding the built `libqdetect_ffi.a` (the parent of `deps/`).
fn artifact_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?.to_path_buf();
    dir.join("libqdetect_ffi.a").exists().then_some(dir)
}

fn compiler() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .map(String::from)
}

const C_SMOKE: &str = r#"
#include <math.h>
#include <stdio.h>
#include "qdetect.h"

int main(void) {
    QdModel *m = NULL;
    if (qd_model_new(6, 3, 1.0, &m) != QD_STATUS_OK) return 1;
    double a = 1.0 / sqrt(3.0);
    QdComplex psi[6] = {{a, 0}, {a, 0}, {a, 0}, {0, 0}, {0, 0}, {0, 0}};
    QdCoefficients k;
    if (qd_coefficients(m, psi, 6, &k) != QD_STATUS_OK) return 2;
    double t = 0, r_star = 0;
    qd_mfdt(m, &k, 1.0, &t);
    qd_optimal_rate(m, &k, &r_star);
    if (fabs(t - 37.0 / 18.0) > 1e-12 || fabs(r_star - 6.0) > 1e-12) return 3;
    if (qd_model_new(6, 0, 1.0, &m) != QD_STATUS_INVALID_ARGUMENT) return 4;
    if (qd_last_error()[0] == '\0') return 5;
    QdSimulationConfig cfg = qd_simulation_config_default();
    cfg.n_trajectories = 2000;
    QdSimulation *sim = NULL;
    if (qd_simulation_run(m, psi, 6, &cfg, &sim) != QD_STATUS_OK) return 6;
    QdSimulationSummary s;
    qd_simulation_summary(sim, &s);
    if (s.n_detected != 2000) return 7;
    qd_simulation_free(sim);
    qd_model_free(m);
    printf("ok %s\n", qd_version());
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    let (Some(dir), Some(cc)) = (artifact_dir(), compiler()) else {
        eprintln!("skipping: static library or C compiler not found");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    let exe = tmp.path().join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let include = crate_dir().join("include");
    let lib = dir.join("libqdetect_ffi.a");
    let status = std::process::Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(format!("-I{}", include.display()))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
