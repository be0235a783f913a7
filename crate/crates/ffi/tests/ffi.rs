use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use srslab_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(srs_last_error()) }.to_string_lossy().into_owned()
}

/// Reads a string out through the needed-size protocol.
fn read_string(f: impl Fn(*mut c_char, usize, *mut usize) -> SrsStatus) -> String {
    let mut needed = 0usize;
    assert_eq!(f(ptr::null_mut(), 0, &mut needed), SrsStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(f(buf.as_mut_ptr(), buf.len(), &mut needed), SrsStatus::Ok);
    assert_eq!(needed, buf.len());
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

#[test]
fn thompson_round_trip() {
    unsafe {
        let (mut x0, mut x1, mut p, mut q, mut back) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(srs_thompson_generator(0, &mut x0), SrsStatus::Ok);
        assert_eq!(srs_thompson_generator(1, &mut x1), SrsStatus::Ok);
        assert_eq!(srs_thompson_mul(x0, x1, &mut p), SrsStatus::Ok);
        assert_eq!(srs_thompson_inverse(p, &mut q), SrsStatus::Ok);

        let text = read_string(|b, l, n| srs_thompson_format(p, b, l, n));
        assert_eq!(srs_thompson_parse(c(&text).as_ptr(), &mut back), SrsStatus::Ok);
        let mut eq = false;
        assert_eq!(srs_thompson_equal(p, back, &mut eq), SrsStatus::Ok);
        assert!(eq);
        assert_eq!(srs_thompson_equal(p, q, &mut eq), SrsStatus::Ok);
        assert!(!eq);

        // p · p⁻¹ is the identity, which differs from x0
        let mut id = ptr::null_mut();
        assert_eq!(srs_thompson_mul(p, q, &mut id), SrsStatus::Ok);
        assert_eq!(srs_thompson_equal(id, x0, &mut eq), SrsStatus::Ok);
        assert!(!eq);

        for h in [x0, x1, p, q, back, id] {
            srs_thompson_free(h);
        }
        srs_thompson_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(srs_thompson_generator(2, &mut out), SrsStatus::Precondition);
        assert!(out.is_null());
        assert!(last_error().contains("generator"));
        assert_eq!(srs_thompson_parse(ptr::null(), &mut out), SrsStatus::NullPointer);
        assert_eq!(srs_thompson_parse(c("not an element").as_ptr(), &mut out), SrsStatus::Parse);
        assert!(!last_error().is_empty());
        let bad = [0xffu8, 0];
        assert_eq!(srs_thompson_parse(bad.as_ptr().cast(), &mut out), SrsStatus::InvalidUtf8);
        assert_eq!(srs_thompson_generator(0, ptr::null_mut()), SrsStatus::NullPointer);

        let mut g = ptr::null_mut();
        assert_eq!(srs_bs_new(0, 3, &mut g), SrsStatus::Precondition);
        assert!(g.is_null());
        assert_eq!(srs_config_default(c("records").as_ptr(), ptr::null_mut()), SrsStatus::NullPointer);
        let mut cfg = ptr::null_mut();
        assert_eq!(srs_config_default(c("nope").as_ptr(), &mut cfg), SrsStatus::Config);
        assert_eq!(srs_config_from_toml(ptr::null(), c("trials = 3").as_ptr(), &mut cfg), SrsStatus::Config);
        assert!(cfg.is_null());
        let mut passed = false;
        assert_eq!(srs_verify(c("/nonexistent/run").as_ptr(), &mut passed), SrsStatus::MissingArtifact);
    }
}

#[test]
fn baumslag_solitar_queries() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(srs_bs_new(2, 3, &mut g), SrsStatus::Ok);
        let mut eq = false;
        assert_eq!(srs_bs_equal(g, c("taaT").as_ptr(), c("aaa").as_ptr(), &mut eq), SrsStatus::Ok);
        assert!(eq);
        assert_eq!(srs_bs_equal(g, c("ta").as_ptr(), c("at").as_ptr(), &mut eq), SrsStatus::Ok);
        assert!(!eq);
        let nf = read_string(|b, l, n| srs_bs_normal_form(g, c("taaT").as_ptr(), b, l, n));
        let aaa = read_string(|b, l, n| srs_bs_normal_form(g, c("aaa").as_ptr(), b, l, n));
        assert_eq!(nf, aaa);

        let mut h = 0i64;
        assert_eq!(srs_bs_height(g, c("tt").as_ptr(), &mut h), SrsStatus::Ok);
        assert_eq!(h.abs(), 2);

        for (w, want) in [("t", 3u64), ("tt", 9)] {
            let (mut k, mut found) = (0u64, false);
            assert_eq!(srs_bs_intersection_index(g, c(w).as_ptr(), 64, &mut k, &mut found), SrsStatus::Ok);
            assert!(found);
            assert_eq!(k, want, "{w}");
        }
        let (mut k, mut found) = (0u64, true);
        assert_eq!(srs_bs_intersection_index(g, c("tt").as_ptr(), 8, &mut k, &mut found), SrsStatus::Ok);
        assert!(!found);
        assert_eq!(srs_bs_height(g, c("tx").as_ptr(), &mut h), SrsStatus::Parse);
        srs_bs_free(g);
    }
}

#[test]
fn gauge_and_version() {
    unsafe {
        let mut phi = 0u64;
        assert_eq!(srs_gauge_telescoping(1, &mut phi), SrsStatus::Ok);
        assert!(phi >= 1);
        let mut prev = phi;
        for r in 2..6 {
            assert_eq!(srs_gauge_telescoping(r, &mut phi), SrsStatus::Ok);
            assert!(phi > prev);
            prev = phi;
        }
        assert!(!CStr::from_ptr(srs_version()).to_bytes().is_empty());
    }
}

#[test]
fn config_run_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = c(dir.path().to_str().unwrap());
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(srs_config_from_toml(c("bs-tree").as_ptr(), c("[bs]\nclaim_radius = 3\n").as_ptr(), &mut cfg), SrsStatus::Ok);
        assert_eq!(srs_config_set_run(cfg, 7, 1, 10), SrsStatus::Ok);
        let hash = read_string(|b, l, n| srs_config_hash(cfg, b, l, n));
        assert_eq!(hash.len(), 64);

        let mut all = true;
        assert_eq!(srs_run(cfg, out.as_ptr(), &mut all), SrsStatus::Ok);
        // BS(2,4): a² fixes a vertex outside the syntactic subtree
        assert!(!all);
        let mut passed = false;
        assert_eq!(srs_verify(out.as_ptr(), &mut passed), SrsStatus::Ok);
        assert!(passed);
        srs_config_free(cfg);

        let mut d = ptr::null_mut();
        assert_eq!(srs_config_default(c("records").as_ptr(), &mut d), SrsStatus::Ok);
        let other = read_string(|b, l, n| srs_config_hash(d, b, l, n));
        assert_ne!(hash, other);
        srs_config_free(d);
    }
    assert!(dir.path().join("manifest.json").exists());
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/srslab.h")
}

#[test]
fn header_declares_every_function() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let names: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(names.len() > 20);
    for name in names {
        assert!(text.contains(&format!("{name}(")), "{name} missing from the header");
    }
    assert!(text.contains("SRS_STATUS_BUFFER_TOO_SMALL"));
    assert!(text.contains("typedef struct SrsThompson SrsThompson"));
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include <string.h>
#include "srslab.h"

int main(void) {
    SrsBs *g = NULL;
    if (srs_bs_new(2, 3, &g) != SRS_STATUS_OK) return 1;
    uint64_t k = 0;
    bool found = false;
    if (srs_bs_intersection_index(g, "tt", 64, &k, &found) != SRS_STATUS_OK || !found || k != 9) return 2;
    srs_bs_free(g);

    SrsThompson *x = NULL;
    if (srs_thompson_generator(1, &x) != SRS_STATUS_OK) return 3;
    char buf[4];
    size_t needed = 0;
    if (srs_thompson_format(x, buf, sizeof buf, &needed) != SRS_STATUS_BUFFER_TOO_SMALL) return 4;
    char big[512];
    if (needed > sizeof big || srs_thompson_format(x, big, sizeof big, &needed) != SRS_STATUS_OK) return 5;
    srs_thompson_free(x);

    if (srs_thompson_generator(9, &x) != SRS_STATUS_PRECONDITION || strlen(srs_last_error()) == 0) return 6;
    printf("ok %s\n", big);
    return 0;
}
"#;

/// Compiles a C program against the header and links it to the static library.
#[test]
fn c_program_links_against_the_static_library() {
    let deps = std::env::current_exe().unwrap();
    let profile = deps.parent().and_then(Path::parent).unwrap();
    let lib = profile.join("libsrslab_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
