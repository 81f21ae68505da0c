use std::ffi::{c_char, CStr, CString};
use std::f64::consts::PI;
use std::ptr;

use eigenhess_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        eh_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn geometry(name: &str) -> *mut EhGeometry {
    let n = CString::new(name).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { eh_geometry_by_name(n.as_ptr(), &mut g) }, EhStatus::Ok);
    assert!(!g.is_null());
    g
}

#[test]
fn interval_pairs_round_trip() {
    unsafe {
        let g = geometry("interval");
        let mut p = ptr::null_mut();
        assert_eq!(eh_eigenpairs_enumerate(g, EH_BC_DIRICHLET, 5, &mut p), EhStatus::Ok);
        let mut len = 0;
        assert_eq!(eh_eigenpairs_len(p, &mut len), EhStatus::Ok);
        assert_eq!(len, 5);
        let mut lambda = 0.0;
        assert_eq!(eh_eigenpairs_lambda(p, 2, &mut lambda), EhStatus::Ok);
        assert!((lambda - 9.0).abs() < 1e-12);

        let x = [PI / 2.0];
        let (mut v, mut grad, mut hess) = (0.0, [0.0; EH_GRAD_LEN], [0.0; EH_HESS_LEN]);
        assert_eq!(eh_eigenpairs_eval(p, 0, x.as_ptr(), 1, &mut v, grad.as_mut_ptr(), hess.as_mut_ptr()), EhStatus::Ok);
        assert!((hess[0] + lambda / 9.0 * v).abs() < 1e-12);
        assert!(grad[0].abs() < 1e-12);

        let mut sups = [0.0; 3];
        assert_eq!(eh_eigenpairs_sup_norms(p, 0, g, sups.as_mut_ptr()), EhStatus::Ok);
        assert!((sups[2] / sups[0] - 1.0).abs() < 1e-9);

        assert_eq!(eh_eigenpairs_lambda(p, 5, &mut lambda), EhStatus::OutOfRange);
        assert!(last_error().contains("index 5"));
        eh_eigenpairs_free(p);
        eh_geometry_free(g);
    }
}

#[test]
fn disk_bound_report() {
    unsafe {
        let g = geometry("disk");
        let mut dim = 0;
        let mut amb = 0;
        assert_eq!(eh_geometry_dimension(g, &mut dim, &mut amb), EhStatus::Ok);
        assert_eq!((dim, amb), (2, 2));
        let mut r = ptr::null_mut();
        assert_eq!(eh_bound_dirichlet(g, 100.0, EH_ALPHA_PRINTED, 1e-3, &mut r), EhStatus::Ok);
        let (mut c, mut rb) = (0.0, 0.0);
        assert_eq!(eh_report_values(r, &mut c, &mut rb), EhStatus::Ok);
        assert!(c > 0.0 && (rb - 100.0 * c).abs() <= 1e-9 * rb);

        let mut needed = 0;
        assert_eq!(eh_report_json(r, ptr::null_mut(), 0, &mut needed), EhStatus::BufferTooSmall);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(eh_report_json(r, buf.as_mut_ptr(), buf.len(), &mut needed), EhStatus::Ok);
        let json = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        let parsed: eigenhess::bounds::BoundReport = eigenhess::bounds::BoundReport::from_json(json).unwrap();
        assert_eq!(parsed.constant, c);
        eh_report_free(r);

        assert_eq!(eh_bound_neumann(g, 10.0, &mut r), EhStatus::Ok);
        eh_report_free(r);
        eh_geometry_free(g);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut g = ptr::null_mut();
        let name = CString::new("torus").unwrap();
        assert_eq!(eh_geometry_by_name(name.as_ptr(), &mut g), EhStatus::Argument);
        assert!(last_error().contains("torus"));
        assert!(g.is_null());
        assert_eq!(eh_geometry_by_name(ptr::null(), &mut g), EhStatus::NullPointer);
        assert_eq!(eh_geometry_disk(-1.0, &mut g), EhStatus::Argument);
        let bad = [0xffu8, 0];
        assert_eq!(eh_geometry_by_name(bad.as_ptr() as *const c_char, &mut g), EhStatus::InvalidUtf8);

        let edges = [1.0, 2.0];
        assert_eq!(eh_geometry_box(edges.as_ptr(), 2, &mut g), EhStatus::Ok);
        let mut p = ptr::null_mut();
        assert_eq!(eh_eigenpairs_enumerate(g, 7, 3, &mut p), EhStatus::OutOfRange);
        let mut r = ptr::null_mut();
        assert_eq!(eh_bound_dirichlet(g, 10.0, 9, 1e-3, &mut r), EhStatus::OutOfRange);
        assert_eq!(eh_report_values(ptr::null(), ptr::null_mut(), ptr::null_mut()), EhStatus::NullPointer);
        eh_geometry_free(g);

        assert_eq!(eh_geometry_spherical_cap(2, PI / 2.0, &mut g), EhStatus::Ok);
        eh_geometry_free(g);
        eh_geometry_free(ptr::null_mut());
        assert_eq!(eh_geometry_interval(1.0, &mut g), EhStatus::Ok);
        assert_eq!(last_error(), "");
        eh_geometry_free(g);
    }
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(eh_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_surface_and_compiles() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/eigenhess.h");
    let header = std::fs::read_to_string(path).unwrap();
    for sym in [
        "typedef struct EhGeometry EhGeometry",
        "EH_STATUS_PANIC = 99",
        "eh_eigenpairs_eval",
        "eh_bound_dirichlet",
        "eh_report_json",
        "eh_last_error_message",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = std::env::temp_dir().join(format!("eigenhess-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("probe.c");
    std::fs::write(&src, format!("#include \"{path}\"\nint main(void) {{ EhGeometry *g = 0; return eh_geometry_disk(1.0, &g) == EH_STATUS_OK ? 0 : 1; }}\n")).unwrap();
    match std::process::Command::new(&cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("no C compiler `{cc}` ({e}); header syntax not checked"),
    }
    let _ = std::fs::remove_dir_all(&dir);
}
