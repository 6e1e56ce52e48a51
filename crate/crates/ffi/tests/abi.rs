use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wpgegen_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        wpg_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn handles_round_trip() {
    unsafe {
        let (d, nu) = ([0.3, 0.3], [1.0 / 40.0, 0.2]);
        let mut model = ptr::null_mut();
        assert_eq!(wpg_model_new(d.as_ptr(), nu.as_ptr(), 2, 1.0, &mut model), WpgStatus::Ok);
        let mut tree = ptr::null_mut();
        assert_eq!(wpg_basis_ours(nu.as_ptr(), 2, 8, &mut tree), WpgStatus::Ok);
        assert_eq!(wpg_tree_leaf_count(tree), 15);

        let mut need = 0;
        assert_eq!(wpg_tree_to_json(tree, ptr::null_mut(), 0, &mut need), WpgStatus::BufferTooSmall);
        let mut buf = vec![0 as std::ffi::c_char; need];
        assert_eq!(wpg_tree_to_json(tree, buf.as_mut_ptr(), need, &mut need), WpgStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(wpg_tree_from_json(buf.as_ptr(), &mut again), WpgStatus::Ok);
        let (mut j, mut p) = (0u32, 0u64);
        assert_eq!(wpg_tree_leaf(again, 0, &mut j, &mut p), WpgStatus::Ok);
        assert_eq!((j, p), (5, 0));
        assert_eq!(wpg_tree_leaf(again, 99, &mut j, &mut p), WpgStatus::InvalidArgument);

        let mut acv = [0.0; 4];
        assert_eq!(wpg_model_acv(model, 3, 0.0, acv.as_mut_ptr()), WpgStatus::Ok);
        assert!(acv[0] > acv[1].abs());

        let mut out = vec![0.0; 3 * 256];
        assert_eq!(wpg_simulate_hosking(model, 256, 1, 3, out.as_mut_ptr()), WpgStatus::Ok);
        assert!(out.iter().all(|v| v.is_finite()) && out[0] != out[256]);

        wpg_tree_free(again);
        wpg_tree_free(tree);
        wpg_model_free(model);
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut model = ptr::null_mut();
        let (d, nu) = (0.6, 0.1);
        assert_eq!(wpg_model_new(&d, &nu, 1, 1.0, &mut model), WpgStatus::InvalidModel);
        assert!(!last_error().is_empty());
        assert_eq!(wpg_model_new(ptr::null(), &nu, 1, 1.0, &mut model), WpgStatus::NullPointer);
        let mut filter = ptr::null_mut();
        let label = CString::new("db99").unwrap();
        assert_eq!(wpg_filter_new(label.as_ptr(), &mut filter), WpgStatus::UnsupportedFilter);
        let nus = [0.1, 0.1];
        let mut tree = ptr::null_mut();
        assert_eq!(wpg_basis_ours(nus.as_ptr(), 2, 5, &mut tree), WpgStatus::DuplicateFrequency);
        let bad = CString::new("{\"J\":2,\"leaves\":[[1,0]]}").unwrap();
        assert_eq!(wpg_tree_from_json(bad.as_ptr(), &mut tree), WpgStatus::InvalidTree);
        assert!(tree.is_null());
        wpg_model_free(ptr::null_mut());
        assert_eq!(wpg_tree_length(ptr::null()), 0);
    }
}

#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include");
    let src = crate_dir.join("tests/c/smoke.c");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let syntax = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-fsyntax-only", "-D_DEFAULT_SOURCE", "-I"])
        .arg(&header)
        .arg(&src)
        .status()
        .unwrap();
    assert!(syntax.success(), "header does not compile as C99");

    // Link when the static library of this build is present.
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libwpgegen_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; link step skipped", lib.display());
        return;
    }
    let exe = tempfile::tempdir().unwrap();
    let bin = exe.path().join("smoke");
    let link = Command::new(&cc)
        .args(["-std=c99", "-O1", "-D_DEFAULT_SOURCE", "-I"])
        .arg(&header)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(link.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 0.1.0"));
}
