use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use netgame_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ng_last_error()) }.to_string_lossy().into_owned()
}

fn complete(n: usize) -> *mut NgNetwork {
    let json = CString::new(format!(r#"{{"kind": "complete", "n": {n}}}"#)).unwrap();
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { ng_network_from_json(json.as_ptr(), &mut net) }, NgStatus::Ok);
    net
}

#[test]
fn spectral_measures_of_complete_graph() {
    let net = complete(4);
    let mut sm = NgSpectral::default();
    unsafe {
        assert_eq!(ng_network_spectral(net, 0.0, &mut sm), NgStatus::Ok);
        ng_network_free(net);
    }
    assert!((sm.spectral_norm - 3.0).abs() < 1e-10);
    assert_eq!(sm.infinity_norm, 3.0);
    assert!((sm.min_eigenvalue + 1.0).abs() < 1e-10);
    assert!(sm.is_symmetric);
}

#[test]
fn invalid_network_reports_entry() {
    let w = [0.0, 1.0, 1.0, 0.5];
    let mut net = ptr::null_mut();
    let s = unsafe { ng_network_from_dense(w.as_ptr(), 2, &mut net) };
    assert_eq!(s, NgStatus::Config);
    assert!(net.is_null());
    assert!(last_error().contains("diagonal"), "{}", last_error());
}

#[test]
fn null_handles_are_rejected() {
    let mut dim = 0;
    assert_eq!(unsafe { ng_game_dim(ptr::null(), &mut dim) }, NgStatus::NullPointer);
    assert!(last_error().contains("game"));
    unsafe {
        ng_game_free(ptr::null_mut());
        ng_network_free(ptr::null_mut());
        ng_string_free(ptr::null_mut());
    }
}

#[test]
fn solve_certify_and_differentiate_a_pair() {
    let net = complete(2);
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(ng_game_scalar_lq(net, [0.5; 2].as_ptr(), [1.0; 2].as_ptr(), &mut g), NgStatus::Ok);
        ng_network_free(net);
        let mut c = NgCertificate::default();
        assert_eq!(ng_game_certify(g, 0, &mut c), NgStatus::Ok);
        assert!(c.existence_uniqueness && c.simultaneous_br_convergence && c.potential);
        assert!((c.alpha_2 - 0.5).abs() < 1e-12);

        let mut x = [0.0; 2];
        assert_eq!(ng_game_find_equilibrium(g, ptr::null(), 1e-12, x.as_mut_ptr(), 2), NgStatus::Ok);
        assert!(x.iter().all(|v| (v - 2.0 / 3.0).abs() < 1e-10));

        let mut p = 0;
        assert_eq!(
            ng_game_sensitivity(g, NgParameter::Intercept, x.as_ptr(), 2, ptr::null_mut(), 0, &mut p),
            NgStatus::Ok
        );
        assert_eq!(p, 2);
        let mut grad = [0.0; 4];
        assert_eq!(
            ng_game_sensitivity(g, NgParameter::Intercept, x.as_ptr(), 2, grad.as_mut_ptr(), 2, &mut p),
            NgStatus::Ok
        );
        // (I + 0.5 G)⁻¹ for the pair.
        let expect = [4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0];
        assert!(grad.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-10));
        assert_eq!(
            ng_game_sensitivity(g, NgParameter::Gamma, x.as_ptr(), 2, ptr::null_mut(), 0, &mut p),
            NgStatus::Config
        );

        let mut json = ptr::null_mut();
        assert_eq!(ng_game_certify_json(g, 0, &mut json), NgStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        ng_string_free(json);
        assert!(text.contains("\"guarantees\""));
        ng_game_free(g);
    }
}

#[test]
fn dynamics_report_oscillation_as_terminal() {
    let net = complete(4);
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(ng_game_scalar_lq(net, [0.5; 4].as_ptr(), [1.0; 4].as_ptr(), &mut g), NgStatus::Ok);
        ng_network_free(net);
        let x0 = [0.0; 4];
        let mut x = [0.0; 4];
        let mut term = NgTerminal::Converged;
        let mut iters = 0;
        let s = ng_game_run_dynamics(
            g, NgDynamicsMode::Simultaneous, 0.0, x0.as_ptr(), 4, 1000, 1e-9,
            x.as_mut_ptr(), &mut term, &mut iters,
        );
        assert_eq!((s, term), (NgStatus::Ok, NgTerminal::Oscillation));
        let s = ng_game_run_dynamics(
            g, NgDynamicsMode::Sequential, 0.0, x0.as_ptr(), 4, 1000, 1e-9,
            x.as_mut_ptr(), &mut term, &mut iters,
        );
        assert_eq!((s, term), (NgStatus::Ok, NgTerminal::Converged));
        assert!(x.iter().all(|v| (v - 0.4).abs() < 1e-8));
        let s = ng_game_run_dynamics(
            g, NgDynamicsMode::Relaxed, 2.0, x0.as_ptr(), 4, 10, 1e-9,
            x.as_mut_ptr(), &mut term, &mut iters,
        );
        assert_eq!(s, NgStatus::InvalidArgument);
        let mut r = 0.0;
        assert_eq!(ng_game_residual(g, x.as_ptr(), 3, &mut r), NgStatus::InvalidArgument);
        ng_game_free(g);
    }
}

#[test]
fn game_from_json_matches_constructor() {
    let json = CString::new(
        r#"{"family": "races", "network": {"kind": "complete", "n": 2}, "gamma": 0.1, "lower": 1, "upper": 5}"#,
    )
    .unwrap();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(ng_game_from_json(json.as_ptr(), &mut g), NgStatus::Ok);
        let mut dim = 0;
        assert_eq!(ng_game_dim(g, &mut dim), NgStatus::Ok);
        assert_eq!(dim, 2);
        ng_game_free(g);
        let bad = CString::new(r#"{"family": "races"}"#).unwrap();
        assert_eq!(ng_game_from_json(bad.as_ptr(), &mut g), NgStatus::Config);
    }
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/netgame.h")).unwrap();
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    for cc in ["cc", "clang"] {
        if let Ok(out) = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", "-"])
            .stdin(std::process::Stdio::piped())
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::piped())
            .spawn()
            .and_then(|mut child| {
                use std::io::Write;
                child
                    .stdin
                    .take()
                    .unwrap()
                    .write_all(format!("{header}\nint main(void) {{ return NG_STATUS_OK; }}\n").as_bytes())?;
                child.wait_with_output()
            })
        {
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            return;
        }
    }
}
