use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use deflatecrb::bounds::{ecrb_deflated, BoundReport};
use deflatecrb::model::{gen_dictionary, ProblemDims};
use deflatecrb::stream_rng;
use deflatecrb_ffi::*;

fn dictionary(n: usize, l_a: usize, l_b: usize) -> (Vec<f64>, Vec<f64>) {
    let dims = ProblemDims {
        n,
        k: l_a + l_b,
        l_a,
        l_b,
    };
    let h = gen_dictionary(&dims, &mut stream_rng(11, 0));
    (
        h.columns(0, l_a).iter().copied().collect(),
        h.columns(l_a, l_b).iter().copied().collect(),
    )
}

fn last_error() -> String {
    let p = dcrb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn bounds_match_library() {
    let (a, b) = dictionary(40, 4, 6);
    let am = nalgebra::DMatrix::from_column_slice(40, 4, &a);
    let bm = nalgebra::DMatrix::from_column_slice(40, 6, &b);
    let mut v = 0.0;
    let st = unsafe { dcrb_ecrb_deflated(a.as_ptr(), b.as_ptr(), 40, 4, 6, 0.1, &mut v) };
    assert_eq!(st, DcrbStatus::Ok);
    assert_eq!(v, ecrb_deflated(&am, &bm, 0.1).unwrap());

    let mut r = DcrbBoundReport::default();
    let st = unsafe { dcrb_bound_report(a.as_ptr(), b.as_ptr(), 40, 4, 6, 20.0, 1.0, 1.0, &mut r) };
    assert_eq!(st, DcrbStatus::Ok);
    let lib = BoundReport::compute(&am, &bm, 20.0, 1.0, 1.0).unwrap();
    assert_eq!(r.c_joint, lib.c_joint);
    assert_eq!(r.c_ideal_inf, lib.c_ideal_inf);
    assert_eq!(r.rho, 10.0);
    assert!(dcrb_last_error().is_null());
}

#[test]
fn errors_set_status_and_message() {
    let (a, b) = dictionary(10, 6, 5);
    let mut v = 0.0;
    let st = unsafe { dcrb_ecrb_deflated(a.as_ptr(), b.as_ptr(), 10, 6, 5, 1.0, &mut v) };
    assert_ne!(st, DcrbStatus::Ok);
    assert!(!last_error().is_empty());

    let st = unsafe { dcrb_ecrb_ideal(a.as_ptr(), 10, 6, -1.0, &mut v) };
    assert_eq!(st, DcrbStatus::InvalidArgument);
    assert!(last_error().contains("noise variance"));

    let st = unsafe { dcrb_ecrb_ideal(ptr::null(), 10, 6, 1.0, &mut v) };
    assert_eq!(st, DcrbStatus::NullPointer);
    let st = unsafe { dcrb_ecrb_ideal(a.as_ptr(), 10, 6, 1.0, ptr::null_mut()) };
    assert_eq!(st, DcrbStatus::NullPointer);

    let mut s = DcrbMpSupport::default();
    assert_eq!(unsafe { dcrb_mp_support(-1.0, &mut s) }, DcrbStatus::InvalidArgument);
}

#[test]
fn marchenko_pastur_closed_forms() {
    let mut s = DcrbMpSupport::default();
    assert_eq!(unsafe { dcrb_mp_support(9.0, &mut s) }, DcrbStatus::Ok);
    assert_eq!((s.lambda_minus, s.lambda_plus, s.zero_mass), (4.0, 16.0, 0.0));
    let mut m = 0.0;
    assert_eq!(unsafe { dcrb_mp_moment(9.0, 2, &mut m) }, DcrbStatus::Ok);
    assert_eq!(m, 90.0);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { dcrb_mp_stieltjes(9.0, 0.0, 0.0, &mut re, &mut im) }, DcrbStatus::Ok);
    assert!((re - 0.125).abs() < 1e-15 && im == 0.0);
    assert_eq!(unsafe { dcrb_mp_stieltjes(9.0, 10.0, 0.0, &mut re, &mut im) }, DcrbStatus::InsideSupport);
    let (mut d, mut c) = (0.0, 0.0);
    assert_eq!(unsafe { dcrb_mp_density(9.0, 10.0, &mut d) }, DcrbStatus::Ok);
    assert_eq!(unsafe { dcrb_mp_cdf(9.0, 20.0, &mut c) }, DcrbStatus::Ok);
    assert!(d > 0.0 && (c - 1.0).abs() < 1e-9);
}

#[test]
fn lemma1_converges() {
    let mut r = DcrbLemma1::default();
    assert_eq!(unsafe { dcrb_lemma1(400, 800, 40, 40, 10, 3, 0, &mut r) }, DcrbStatus::Ok);
    assert!((r.inverse_trace_mean - r.inverse_trace_limit).abs() <= 0.05 * r.inverse_trace_limit);
    assert!((r.trace_mean - r.trace_limit).abs() <= 0.05 * r.trace_limit);
    assert_eq!(unsafe { dcrb_lemma1(10, 20, 6, 6, 10, 3, 0, &mut r) }, DcrbStatus::InvalidDims);
}

const TOML: &str = r#"
[dims]
n = 30
k = 90
la = 3
lb = 3

[noise]
snr_db = [10, 20]

[run]
trials = 4
seed = 1
estimators = ["omp", "oracle_ls"]
deflation = "both"
"#;

#[test]
fn scenario_round_trip() {
    let text = CString::new(TOML).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dcrb_scenario_from_toml(text.as_ptr(), &mut s) }, DcrbStatus::Ok);
    let mut r1 = ptr::null_mut();
    let mut r2 = ptr::null_mut();
    unsafe {
        assert_eq!(dcrb_experiment_run(s, 1, &mut r1), DcrbStatus::Ok);
        assert_eq!(dcrb_experiment_run(s, 2, &mut r2), DcrbStatus::Ok);
        assert_eq!(dcrb_result_row_count(r1), 8);
        for i in 0..8 {
            let (mut a, mut b) = (DcrbRow::default(), DcrbRow::default());
            assert_eq!(dcrb_result_row(r1, i, &mut a), DcrbStatus::Ok);
            assert_eq!(dcrb_result_row(r2, i, &mut b), DcrbStatus::Ok);
            assert_eq!(a, b);
            let label = CStr::from_ptr(dcrb_result_row_label(r1, i)).to_str().unwrap();
            assert_eq!(a.estimator, if label == "omp" { 0 } else { 3 });
        }
        let mut row = DcrbRow::default();
        assert_eq!(dcrb_result_row(r1, 8, &mut row), DcrbStatus::OutOfRange);
        assert!(dcrb_result_row_label(r1, 8).is_null());

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("r.csv").to_str().unwrap()).unwrap();
        let csv = CString::new("csv").unwrap();
        assert_eq!(dcrb_result_write(r1, path.as_ptr(), csv.as_ptr()), DcrbStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert_eq!(text.lines().count(), 9);
        let bad = CString::new("xml").unwrap();
        assert_ne!(dcrb_result_write(r1, path.as_ptr(), bad.as_ptr()), DcrbStatus::Ok);

        dcrb_result_free(r1);
        dcrb_result_free(r2);
        dcrb_scenario_free(s);
        dcrb_result_free(ptr::null_mut());
        dcrb_scenario_free(ptr::null_mut());
    }
}

#[test]
fn scenario_errors() {
    let bad = CString::new(TOML.replace("k = 90", "k = 10")).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dcrb_scenario_from_toml(bad.as_ptr(), &mut s) }, DcrbStatus::InvalidDims);
    assert!(s.is_null());
    let junk = CString::new("[dims\n").unwrap();
    assert_eq!(unsafe { dcrb_scenario_from_toml(junk.as_ptr(), &mut s) }, DcrbStatus::Config);
    assert_eq!(unsafe { dcrb_scenario_figure(9, 0, 0, &mut s) }, DcrbStatus::InvalidArgument);
    assert_eq!(unsafe { dcrb_experiment_run(ptr::null(), 1, ptr::null_mut()) }, DcrbStatus::NullPointer);
}

#[test]
fn figure_scenario_with_custom_grid() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(dcrb_scenario_figure(4, 5, 3, &mut s), DcrbStatus::Ok);
        let snr = [30.0];
        assert_eq!(dcrb_scenario_set_snr_grid(s, snr.as_ptr(), 1), DcrbStatus::Ok);
        assert_eq!(dcrb_scenario_set_snr_grid(s, snr.as_ptr(), 0), DcrbStatus::InvalidArgument);
        let mut r = ptr::null_mut();
        assert_eq!(dcrb_experiment_run(s, 0, &mut r), DcrbStatus::Ok);
        assert_eq!(dcrb_result_row_count(r), 8);
        let mut row = DcrbRow::default();
        dcrb_result_row(r, 0, &mut row);
        assert_eq!((row.figure_id, row.n, row.snr_db, row.trials_ok), (4, 100, 30.0, 3));
        dcrb_result_free(r);
        dcrb_scenario_free(s);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(dcrb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Directory holding the static library built for this test run.
fn staticlib_dir() -> Option<std::path::PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?.to_path_buf();
    dir.join("libdeflatecrb_ffi.a").exists().then_some(dir)
}

#[test]
fn c_program_links_against_header() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let Some(lib_dir) = staticlib_dir() else {
        eprintln!("skipping: static library not found");
        return;
    };
    let compiler = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()));
    let Some(compiler) = compiler else {
        eprintln!("skipping: no C compiler");
        return;
    };
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(compiler)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-o")
        .arg(&exe)
        .arg(lib_dir.join("libdeflatecrb_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C smoke test failed to build");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("ok"));
}
