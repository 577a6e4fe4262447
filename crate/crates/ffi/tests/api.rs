use std::ffi::{c_void, CStr};
use std::ptr;

use qbkix_ffi::*;

unsafe extern "C" fn point_source(x: f64, y: f64, out: *mut f64, _user: *mut c_void) {
    *out = -((x - 1.7).hypot(y - 0.4)).ln() / std::f64::consts::TAU;
}

unsafe extern "C" fn constant(_x: f64, _y: f64, out: *mut f64, user: *mut c_void) {
    *out = *(user as *const f64);
}

fn laplace() -> QbkixKernel {
    QbkixKernel { family: QbkixFamily::Laplace, parameter: 0.0 }
}

fn last_error() -> String {
    let p = qbkix_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn circle_solve_and_evaluate() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(qbkix_curve_circle(1.0, &mut c), QbkixStatus::Ok);
        let mut sol = ptr::null_mut();
        let st = qbkix_solve_dirichlet(c, laplace(), QbkixMode::TwoSided, 8, 1e-12, 50, Some(point_source), ptr::null_mut(), &mut sol);
        assert_eq!(st, QbkixStatus::Ok);
        assert_eq!(qbkix_solution_len(sol), 128);
        assert!(qbkix_solution_iterations(sol) > 0);
        // one interior point deep inside, one close to the boundary
        let xs = [0.1, 0.995];
        let ys = [0.2, 0.0];
        let mut u = [0.0; 2];
        assert_eq!(qbkix_solution_evaluate(sol, xs.as_ptr(), ys.as_ptr(), 2, u.as_mut_ptr()), QbkixStatus::Ok);
        for i in 0..2 {
            let mut exact = 0.0;
            point_source(xs[i], ys[i], &mut exact, ptr::null_mut());
            assert!((u[i] - exact).abs() < 1e-8, "{} vs {exact}", u[i]);
        }
        let mut small = [0.0; 4];
        assert_eq!(qbkix_solution_density(sol, small.as_mut_ptr(), 4), QbkixStatus::BufferTooSmall);
        let mut full = vec![0.0; 128];
        assert_eq!(qbkix_solution_density(sol, full.as_mut_ptr(), 128), QbkixStatus::Ok);
        assert!(full.iter().all(|v| v.is_finite()));
        qbkix_solution_free(sol);
        qbkix_curve_free(c);
    }
}

#[test]
fn user_pointer_reaches_callback() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(qbkix_curve_star(1.0, 0.2, 3, &mut c), QbkixStatus::Ok);
        let mut value = 2.5f64;
        let mut sol = ptr::null_mut();
        let user = &mut value as *mut f64 as *mut c_void;
        let st = qbkix_solve_dirichlet(c, laplace(), QbkixMode::Direct, 16, 1e-12, 100, Some(constant), user, &mut sol);
        assert_eq!(st, QbkixStatus::Ok);
        let (x, y, mut u) = (0.2, -0.1, 0.0);
        assert_eq!(qbkix_solution_evaluate(sol, &x, &y, 1, &mut u), QbkixStatus::Ok);
        assert!((u - 2.5).abs() < 1e-10);
        qbkix_solution_free(sol);
        qbkix_curve_free(c);
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(qbkix_curve_circle(-1.0, &mut c), QbkixStatus::Config);
        assert!(c.is_null());
        assert!(last_error().contains("radius"));
        assert_eq!(qbkix_curve_circle(1.0, ptr::null_mut()), QbkixStatus::NullPointer);

        assert_eq!(qbkix_curve_square(1.0, &mut c), QbkixStatus::Ok);
        let mut sol = ptr::null_mut();
        let st = qbkix_solve_dirichlet(c, laplace(), QbkixMode::TwoSided, 8, 1e-12, 50, None, ptr::null_mut(), &mut sol);
        assert_eq!(st, QbkixStatus::NullPointer);
        let bad = QbkixKernel { family: QbkixFamily::Yukawa, parameter: -1.0 };
        let st = qbkix_solve_dirichlet(c, bad, QbkixMode::TwoSided, 8, 1e-12, 50, Some(point_source), ptr::null_mut(), &mut sol);
        assert_ne!(st, QbkixStatus::Ok);
        assert!(sol.is_null());
        let helm = QbkixKernel { family: QbkixFamily::Helmholtz, parameter: 2.0 };
        qbkix_curve_free(c);

        assert_eq!(qbkix_curve_circle(1.0, &mut c), QbkixStatus::Ok);
        let st = qbkix_solve_dirichlet(c, helm, QbkixMode::Direct, 8, 1e-12, 50, Some(point_source), ptr::null_mut(), &mut sol);
        assert_eq!(st, QbkixStatus::Unsupported);
        let st = qbkix_solve_dirichlet(c, laplace(), QbkixMode::OneSided, 8, 1e-14, 1, Some(point_source), ptr::null_mut(), &mut sol);
        assert_eq!(st, QbkixStatus::MaxIterations);
        assert!(sol.is_null());
        qbkix_curve_free(c);
        qbkix_curve_free(ptr::null_mut());
        qbkix_solution_free(ptr::null_mut());
        assert_eq!(qbkix_solution_len(ptr::null()), 0);
    }
}

#[test]
fn recommended_parameters() {
    let mut p = QbkixParameters::default();
    unsafe {
        assert_eq!(qbkix_recommend_parameters(1e-10, 16, &mut p), QbkixStatus::Ok);
        assert_eq!(qbkix_recommend_parameters(2.0, 16, &mut p), QbkixStatus::InvalidArgument);
    }
    assert_eq!(p.delta_over_l, 0.25);
    assert_eq!(p.k, 32);
    assert_eq!(p.beta, 5);
    assert!((p.theta - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn curve_position_and_version() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(qbkix_curve_star(1.0, 0.2, 3, &mut c), QbkixStatus::Ok);
        let mut xy = [0.0; 2];
        assert_eq!(qbkix_curve_position(c, 0.0, xy.as_mut_ptr()), QbkixStatus::Ok);
        assert!((xy[0] - 1.2).abs() < 1e-15 && xy[1].abs() < 1e-15);
        qbkix_curve_free(c);
        let v = CStr::from_ptr(qbkix_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
