//! Exercise the C ABI exactly as a foreign caller would: through the
//! exported extern "C" symbols, raw pointers and status codes.

use fraclab_capi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { fraclab_last_error(buf.as_mut_ptr() as *mut i8, buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8_lossy(&buf).into_owned()
}

#[test]
fn ml_eval_matches_exponential() {
    let (mut re, mut im, mut est) = (0.0f64, 0.0f64, 0.0f64);
    let status = unsafe { fraclab_ml_eval(1.0, 1.0, 1.0, 0.0, &mut re, &mut im, &mut est) };
    assert_eq!(status, FraclabStatus::Ok);
    assert!((re - 1f64.exp()).abs() < 1e-12);
    assert!(im.abs() < 1e-14);
    assert!(est >= 0.0);
}

#[test]
fn ml_eval_rejects_bad_parameters() {
    let status =
        unsafe { fraclab_ml_eval(-0.5, 1.0, 0.0, 0.0, std::ptr::null_mut(), std::ptr::null_mut(), std::ptr::null_mut()) };
    assert_eq!(status, FraclabStatus::InvalidArgument);
    assert!(last_error().contains("alpha"));
}

#[test]
fn grid_lifecycle_and_validation() {
    let g = fraclab_grid_new(1, 64, 8.0);
    assert!(!g.is_null());
    assert_eq!(unsafe { fraclab_grid_len(g) }, 64);
    unsafe { fraclab_grid_free(g) };

    let bad = fraclab_grid_new(1, 7, 8.0);
    assert!(bad.is_null());
    assert!(last_error().contains("power of two"));
}

fn gaussian_datum(n: usize, l: f64) -> Vec<f64> {
    let h = 2.0 * l / n as f64;
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        let x = -l + j as f64 * h;
        out.push((-x * x / 2.0).exp());
        out.push(0.0);
    }
    out
}

#[test]
fn solver_paths_agree_through_the_abi() {
    let n = 64usize;
    let l = 10.0;
    let g = fraclab_grid_new(1, n as u32, l);
    assert!(!g.is_null());
    let datum = gaussian_datum(n, l);
    let potential = vec![-1.0f64; n];
    let prob = unsafe {
        fraclab_problem_new(g, 0.5, 1.5, 0.75, datum.as_ptr(), potential.as_ptr(), 1.0)
    };
    assert!(!prob.is_null(), "{}", last_error());

    let mut contour = vec![0.0f64; 2 * n];
    let mut picard = vec![0.0f64; 2 * n];
    let mut iterates = 0u32;
    let s1 = unsafe { fraclab_contour_solve(prob, 1.0, contour.as_mut_ptr()) };
    assert_eq!(s1, FraclabStatus::Ok, "{}", last_error());
    let s2 = unsafe { fraclab_picard_solve(prob, 1.0, 1e-9, picard.as_mut_ptr(), &mut iterates) };
    assert_eq!(s2, FraclabStatus::Ok, "{}", last_error());
    assert!(iterates > 2);

    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in contour.iter().zip(&picard) {
        num += (a - b) * (a - b);
        den += a * a;
    }
    let rel = (num / den).sqrt();
    assert!(rel < 1e-6, "cross-path rel {rel:e}");

    let mut norm = 0.0f64;
    let s3 = unsafe { fraclab_sobolev_seminorm(g, contour.as_ptr(), 0.75, &mut norm) };
    assert_eq!(s3, FraclabStatus::Ok);
    assert!(norm.is_finite() && norm > 0.0);

    unsafe {
        fraclab_problem_free(prob);
        fraclab_grid_free(g);
    }
}

#[test]
fn null_pointers_are_reported() {
    let status = unsafe { fraclab_free_propagate(std::ptr::null(), 1.0, std::ptr::null_mut()) };
    assert_eq!(status, FraclabStatus::NullPointer);
}

#[test]
fn problem_rejects_positive_potential() {
    let n = 16usize;
    let g = fraclab_grid_new(1, n as u32, 4.0);
    let datum = vec![0.0f64; 2 * n];
    let potential = vec![0.5f64; n];
    let prob = unsafe {
        fraclab_problem_new(g, 0.5, 1.0, 0.5, datum.as_ptr(), potential.as_ptr(), 0.0)
    };
    assert!(prob.is_null());
    assert!(last_error().contains("p <= 0"));
    unsafe { fraclab_grid_free(g) };
}

#[test]
fn interval_evolution_through_the_abi() {
    // p = -1 on (0, pi): the first eigen-coefficient must be
    // E_{1/2,1}(-(1 + 1)) for a = phi_1 at t = 1
    let basis = 8u32;
    let a = [1.0f64, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let m = 64usize;
    let p = vec![-1.0f64; m + 1];
    let mut out = [0.0f64; 8];
    let status = unsafe {
        fraclab_interval_evolve(
            std::f64::consts::PI,
            0.5,
            1.5,
            basis,
            a.as_ptr(),
            p.as_ptr(),
            p.len(),
            1.0,
            out.as_mut_ptr(),
        )
    };
    assert_eq!(status, FraclabStatus::Ok, "{}", last_error());
    let mut want = 0.0f64;
    unsafe {
        fraclab_ml_eval(
            0.5,
            1.0,
            -2.0,
            0.0,
            &mut want,
            std::ptr::null_mut(),
            std::ptr::null_mut(),
        )
    };
    assert!((out[0].abs() - want.abs()).abs() < 1e-10);
}

#[test]
fn generated_header_is_valid_c() {
    let include = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = include.join("fraclab.h");
    if !header.exists() {
        panic!("header not generated at {}", header.display());
    }
    let src = format!("#include \"{}\"\nint main(void) {{ return 0; }}\n", header.display());
    let dir = std::env::temp_dir().join("fraclab_header_check");
    std::fs::create_dir_all(&dir).unwrap();
    let cfile = dir.join("check.c");
    std::fs::write(&cfile, src).unwrap();
    let status = std::process::Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg(&cfile)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile as C"),
        Err(_) => eprintln!("cc unavailable; skipping header syntax check"),
    }
}
