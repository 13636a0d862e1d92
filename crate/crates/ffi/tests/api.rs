use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use gravwell_ffi::*;

fn golden() -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden.jsonl");
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = gw_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_kernels() {
    let mut out = f64::NAN;
    unsafe {
        assert_eq!(gw_otimes(1.0, 1.0, &mut out), GwStatus::Ok);
        assert_eq!(out, 1.0);
        assert_eq!(gw_otimes(0.5, 0.5, &mut out), GwStatus::Ok);
        assert!((out - 0.25 * (1.0 - 0.25f64.ln())).abs() < 1e-15);
        assert_eq!(gw_pair_contribution(1.0, -1.0, -1.0, &mut out), GwStatus::Ok);
        assert_eq!(out, 1.0);
        assert_eq!(gw_normalize_bias(1.0, 3, 3, &mut out), GwStatus::Ok);
        assert_eq!(out, 2.0);
        assert_eq!(gw_normalize_bias(0.7, 1, 0, &mut out), GwStatus::Ok);
        assert_eq!(out, 1.0);
        assert_eq!(gw_pull_force(10.0, 2.0, 1.0, 1.0, 0.5, &mut out), GwStatus::Ok);
        assert_eq!(out, 80.0);
        assert_eq!(gw_spearman_p_value(0.0, 100, &mut out), GwStatus::Ok);
        assert_eq!(out, 0.5);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(gw_otimes(1.5, 0.5, &mut out), GwStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(gw_pair_contribution(0.3, 1.0, 1.0, &mut out), GwStatus::InvalidArgument);
        assert!(last_error().contains("0.3"));
        assert_eq!(gw_otimes(0.5, 0.5, ptr::null_mut()), GwStatus::NullPointer);
        assert_eq!(gw_spearman_p_value(0.5, 2, &mut out), GwStatus::UndefinedStatistic);
        assert_eq!(
            gw_qwk(ptr::null(), ptr::null(), 0, &mut out),
            GwStatus::UndefinedStatistic
        );
        assert_eq!(gw_otimes(0.5, 0.5, &mut out), GwStatus::Ok);
    }
    assert!(gw_last_error_message().is_null());
}

#[test]
fn array_kernels() {
    let mut out = 0.0;
    let (a, b) = ([1.0, 2.0, 3.0], [2.0, 1.0, 3.0]);
    let (u, g) = ([1.0, 0.0], [0.0, 1.0]);
    let (h, ai) = ([1.0, 0.5], [0.5, 0.5]);
    unsafe {
        assert_eq!(gw_spearman_rho(a.as_ptr(), b.as_ptr(), 3, &mut out), GwStatus::Ok);
        assert_eq!(out, 0.5);
        assert_eq!(
            gw_ideological_distance(u.as_ptr(), g.as_ptr(), 2, &mut out),
            GwStatus::Ok
        );
        assert_eq!(out, 1.0);
        assert_eq!(
            gw_ideological_distance(u.as_ptr(), u.as_ptr(), 2, &mut out),
            GwStatus::Ok
        );
        assert_eq!(out, 1e-6);
        assert_eq!(gw_nmae(h.as_ptr(), ai.as_ptr(), 2, &mut out), GwStatus::Ok);
        assert_eq!(out, 0.125);
        assert_eq!(gw_qwk(h.as_ptr(), h.as_ptr(), 2, &mut out), GwStatus::Ok);
        assert_eq!(out, 1.0);
    }
}

#[test]
fn corpus_handle() {
    let mut corpus = ptr::null_mut();
    unsafe {
        assert_eq!(gw_corpus_load(golden().as_ptr(), &mut corpus), GwStatus::Ok);
        assert_eq!(gw_corpus_comment_count(corpus), 60);
        assert_eq!(gw_corpus_thread_count(corpus), 6);
        assert_eq!(gw_corpus_skipped_count(corpus), 3);
        gw_corpus_free(corpus);
        gw_corpus_free(ptr::null_mut());

        let missing = CString::new("/no/such/file.jsonl").unwrap();
        assert_eq!(gw_corpus_load(missing.as_ptr(), &mut corpus), GwStatus::Io);
        assert!(last_error().contains("/no/such/file.jsonl"));
        assert_eq!(gw_corpus_comment_count(ptr::null()), 0);
    }
}

#[test]
fn pipeline_handle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    let input = PathBuf::from(golden().to_str().unwrap());
    std::fs::write(&cfg, format!(r#"{{"inputs": [{:?}]}}"#, input)).unwrap();
    let cfg = CString::new(cfg.to_str().unwrap()).unwrap();
    let out_dir = CString::new(tmp.path().join("out").to_str().unwrap()).unwrap();

    let mut p = ptr::null_mut();
    let mut summary = GwRunSummary::default();
    unsafe {
        assert_eq!(gw_pipeline_from_config(cfg.as_ptr(), &mut p), GwStatus::Ok);
        assert_eq!(gw_pipeline_run(p, out_dir.as_ptr(), &mut summary), GwStatus::Ok);
        gw_pipeline_free(p);
        assert_eq!(
            gw_pipeline_run(ptr::null(), out_dir.as_ptr(), &mut summary),
            GwStatus::NullPointer
        );
    }
    assert_eq!((summary.subreddits, summary.users, summary.forces), (2, 12, 12));
    assert!(tmp.path().join("out/forces.csv").exists());
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(gw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
