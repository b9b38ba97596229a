//! Exercises the C surface from Rust: status discipline, handle lifecycle,
//! buffer contracts, and agreement with the underlying library.

use std::ffi::{c_char, CString};
use std::ptr;

use agglab_ffi::*;

fn last_error_string() -> String {
    unsafe {
        let needed = agglab_last_error(ptr::null_mut(), 0);
        let mut buf = vec![0u8; needed + 1];
        agglab_last_error(buf.as_mut_ptr() as *mut c_char, buf.len());
        buf.truncate(needed);
        String::from_utf8(buf).unwrap()
    }
}

#[test]
fn solve_reports_certified_optimum() {
    unsafe {
        let mut handle: *mut AgglabMinimax = ptr::null_mut();
        assert_eq!(agglab_minimax_solve(8, 2, &mut handle), AgglabStatus::Ok);
        assert!(!handle.is_null());

        let mut value = 0.0;
        assert_eq!(agglab_minimax_value(handle, &mut value), AgglabStatus::Ok);
        assert!((value - 3.0 / 7.0).abs() < 1e-12);
        let reference = agglab::minimax::discrete_minimax(8, 2).unwrap().value;
        assert_eq!(value, reference);

        let mut len = 0usize;
        assert_eq!(agglab_minimax_poly_len(handle, &mut len), AgglabStatus::Ok);
        assert_eq!(len, 3);
        let mut coeffs = vec![0.0; len];
        assert_eq!(agglab_minimax_poly(handle, coeffs.as_mut_ptr(), len), AgglabStatus::Ok);
        assert_eq!(coeffs[0], 1.0);

        assert_eq!(agglab_minimax_certificate_len(handle, &mut len), AgglabStatus::Ok);
        assert_eq!(len, 3);
        let mut points = vec![0i64; len];
        let mut signs = vec![0i8; len];
        assert_eq!(
            agglab_minimax_certificate(handle, points.as_mut_ptr(), signs.as_mut_ptr(), len),
            AgglabStatus::Ok
        );
        assert_eq!(points, [1, 4, 8]);
        assert_eq!(signs, [1, -1, 1]);

        let mut at_point = 0.0;
        assert_eq!(agglab_minimax_eval(handle, 4.0, &mut at_point), AgglabStatus::Ok);
        assert!((at_point + value).abs() < 1e-12, "sign -1 point evaluates to -value");
        let mut at_zero = 0.0;
        assert_eq!(agglab_minimax_eval(handle, 0.0, &mut at_zero), AgglabStatus::Ok);
        assert!((at_zero - 1.0).abs() < 1e-12);

        agglab_minimax_free(handle);
    }
}

#[test]
fn closed_forms_and_bounds_agree_with_library() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(agglab_closed_form_value(9, 2, &mut v), AgglabStatus::Ok);
        assert_eq!(v, agglab::minimax::closed_form_value(9, 2).unwrap());

        let (mut lo, mut up) = (0.0, 0.0);
        assert_eq!(agglab_error_bounds(20, 4, &mut lo, &mut up), AgglabStatus::Ok);
        let mut handle: *mut AgglabMinimax = ptr::null_mut();
        assert_eq!(agglab_minimax_solve(20, 4, &mut handle), AgglabStatus::Ok);
        let mut value = 0.0;
        agglab_minimax_value(handle, &mut value);
        agglab_minimax_free(handle);
        assert!(lo - 1e-9 <= value * value && value * value <= up + 1e-9);
    }
}

#[test]
fn rule_entry_points_match_closed_forms() {
    unsafe {
        let mut worst = 0.0;
        assert_eq!(agglab_randomized_worst_error(10, 4, &mut worst), AgglabStatus::Ok);
        assert!((worst - 0.6).abs() < 1e-12);

        let betas = [2.0 / 10.0];
        assert_eq!(
            agglab_symmetric_worst_error(9, betas.as_ptr(), 1, &mut worst),
            AgglabStatus::Ok
        );
        assert!((worst - 0.64).abs() < 1e-12, "((n-1)/(n+1))^2 at n=9, got {worst}");
    }
}

#[test]
fn models_parse_and_report() {
    unsafe {
        let mut model: *mut AgglabModel = ptr::null_mut();
        assert_eq!(agglab_model_singletons(4, &mut model), AgglabStatus::Ok);
        let mut n = 0usize;
        assert_eq!(agglab_model_agents(model, &mut n), AgglabStatus::Ok);
        assert_eq!(n, 4);
        let mut total = 0.0;
        assert_eq!(agglab_model_total_variance(model, &mut total), AgglabStatus::Ok);
        assert_eq!(total, 4.0);
        agglab_model_free(model);

        let json = agglab::rules::adversarial_singleton_model(3).unwrap().to_json();
        let c_json = CString::new(json).unwrap();
        let mut parsed: *mut AgglabModel = ptr::null_mut();
        assert_eq!(agglab_model_parse(c_json.as_ptr(), &mut parsed), AgglabStatus::Ok);
        assert_eq!(agglab_model_total_variance(parsed, &mut total), AgglabStatus::Ok);
        assert_eq!(total, 3.0);
        agglab_model_free(parsed);

        let garbage = CString::new("not json").unwrap();
        let mut bad: *mut AgglabModel = ptr::null_mut();
        assert_eq!(
            agglab_model_parse(garbage.as_ptr(), &mut bad),
            AgglabStatus::InvalidArgument
        );
        assert!(bad.is_null(), "out-pointer untouched on failure");
    }
}

#[test]
fn failure_paths_set_status_and_message() {
    unsafe {
        let mut handle: *mut AgglabMinimax = ptr::null_mut();
        assert_eq!(agglab_minimax_solve(5000, 3, &mut handle), AgglabStatus::OutOfRange);
        assert!(handle.is_null());
        let msg = last_error_string();
        assert!(msg.contains("5000"), "message was {msg:?}");

        // Truncation still NUL-terminates and reports the full length.
        let mut tiny = [0u8; 4];
        let needed = agglab_last_error(tiny.as_mut_ptr() as *mut c_char, tiny.len());
        assert_eq!(needed, msg.len());
        assert_eq!(tiny[3], 0);
        assert_eq!(&tiny[..3], &msg.as_bytes()[..3]);

        assert_eq!(
            agglab_minimax_value(ptr::null(), &mut 0.0),
            AgglabStatus::NullArgument
        );
        assert_eq!(
            agglab_closed_form_value(9, 2, ptr::null_mut()),
            AgglabStatus::NullArgument
        );

        let mut ok: *mut AgglabMinimax = ptr::null_mut();
        assert_eq!(agglab_minimax_solve(9, 3, &mut ok), AgglabStatus::Ok);
        let mut small = [0.0f64; 2];
        assert_eq!(
            agglab_minimax_poly(ok, small.as_mut_ptr(), small.len()),
            AgglabStatus::BufferTooSmall
        );
        agglab_minimax_free(ok);

        // Null handles are a safe no-op to free.
        agglab_minimax_free(ptr::null_mut());
        agglab_model_free(ptr::null_mut());
    }
}
