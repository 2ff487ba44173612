use std::ffi::{CStr, CString};
use std::ptr;

use irnn_ffi::*;

fn last_error() -> String {
    let p = irnn_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn penalty_handle_round_trip() {
    let name = CString::new("log").unwrap();
    let mut pen = ptr::null_mut();
    unsafe {
        assert_eq!(irnn_penalty_new(name.as_ptr(), 1.0, 1.5, 0.5, &mut pen), IrnnStatus::Ok);
        let mut v = 0.0;
        assert_eq!(irnn_penalty_value(pen, 0.0, &mut v), IrnnStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(irnn_penalty_supergradient(pen, 0.0, &mut v), IrnnStatus::Ok);
        assert!((v - 1.5 / 2.5f64.ln()).abs() < 1e-14);
        irnn_penalty_free(pen);
    }
}

#[test]
fn lp_supergradient_at_zero_is_infinite() {
    let name = CString::new("lp").unwrap();
    let mut pen = ptr::null_mut();
    unsafe {
        assert_eq!(irnn_penalty_new(name.as_ptr(), 1.0, 1.5, 0.5, &mut pen), IrnnStatus::Ok);
        let mut v = 0.0;
        assert_eq!(irnn_penalty_supergradient(pen, 0.0, &mut v), IrnnStatus::Ok);
        assert_eq!(v, f64::INFINITY);
        irnn_penalty_free(pen);
    }
}

#[test]
fn bad_inputs_report_errors() {
    let name = CString::new("nope").unwrap();
    let mut pen = ptr::null_mut();
    unsafe {
        assert_eq!(irnn_penalty_new(name.as_ptr(), 1.0, 1.5, 0.5, &mut pen), IrnnStatus::InvalidArgument);
        assert!(pen.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(irnn_penalty_new(ptr::null(), 1.0, 1.5, 0.5, &mut pen), IrnnStatus::NullPointer);
        assert!(last_error().contains("name"));
        let scad = CString::new("scad").unwrap();
        assert_eq!(irnn_penalty_new(scad.as_ptr(), 1.0, 0.5, 0.5, &mut pen), IrnnStatus::InvalidArgument);
        let mut v = 0.0;
        assert_eq!(irnn_penalty_value(ptr::null(), 1.0, &mut v), IrnnStatus::NullPointer);
        // free functions accept null
        irnn_penalty_free(ptr::null_mut());
        irnn_completion_free(ptr::null_mut());
        irnn_result_free(ptr::null_mut());
    }
}

#[test]
fn svt_and_wsvt_on_diagonal() {
    let y = [3.0, 0.0, 0.0, 1.0];
    let mut x = [0.0; 4];
    unsafe {
        assert_eq!(irnn_svt(2, 2, y.as_ptr(), 2.0, x.as_mut_ptr()), IrnnStatus::Ok);
    }
    assert!(x.iter().zip([1.0, 0.0, 0.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-12));
    let w = [0.5, f64::INFINITY];
    unsafe {
        assert_eq!(irnn_wsvt(2, 2, y.as_ptr(), w.as_ptr(), 2.0, x.as_mut_ptr()), IrnnStatus::Ok);
    }
    assert!(x.iter().zip([2.0, 0.0, 0.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-12));
    let decreasing = [1.0, 0.5];
    unsafe {
        assert_ne!(irnn_wsvt(2, 2, y.as_ptr(), decreasing.as_ptr(), 1.0, x.as_mut_ptr()), IrnnStatus::Ok);
    }
}

#[test]
fn buffers_are_row_major() {
    // rank-one 2x3 matrix with distinct entries; tau = 0 returns it unchanged
    let y = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0];
    let mut x = [0.0; 6];
    unsafe {
        assert_eq!(irnn_svt(2, 3, y.as_ptr(), 0.0, x.as_mut_ptr()), IrnnStatus::Ok);
    }
    assert_eq!(x, y);
}

#[test]
fn metrics() {
    let a = [1.0, 2.0, 3.0, 4.0];
    let b = [1.0, 2.0, 3.0, 5.0];
    let mut v = 0.0;
    unsafe {
        assert_eq!(irnn_relative_error(2, 2, a.as_ptr(), a.as_ptr(), &mut v), IrnnStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(irnn_relative_error(2, 2, b.as_ptr(), a.as_ptr(), &mut v), IrnnStatus::Ok);
        assert!((v - 1.0 / 30f64.sqrt()).abs() < 1e-15);
        assert_eq!(irnn_psnr(4, a.as_ptr(), a.as_ptr(), &mut v), IrnnStatus::Ok);
        assert_eq!(v, f64::INFINITY);
        assert_eq!(irnn_psnr(4, b.as_ptr(), a.as_ptr(), &mut v), IrnnStatus::Ok);
        assert!((v - 10.0 * (4.0 * 65025.0f64).log10()).abs() < 1e-12);
        let zero = [0.0; 4];
        assert_eq!(irnn_relative_error(2, 2, a.as_ptr(), zero.as_ptr(), &mut v), IrnnStatus::Numeric);
    }
}

#[test]
fn completion_recovers_rank_one_matrix() {
    // 12x10 rank-one matrix with about 70% of entries observed
    let (m, n) = (12usize, 10usize);
    let truth = |i: usize, j: usize| (1.0 + i as f64 * 0.3) * (2.0 - j as f64 * 0.15);
    let (mut ri, mut ci, mut vs) = (vec![], vec![], vec![]);
    for i in 0..m {
        for j in 0..n {
            if (i * 7 + j * 3) % 10 < 7 {
                ri.push(i);
                ci.push(j);
                vs.push(truth(i, j));
            }
        }
    }
    let name = CString::new("log").unwrap();
    unsafe {
        let mut prob = ptr::null_mut();
        assert_eq!(
            irnn_completion_new(m, n, vs.len(), ri.as_ptr(), ci.as_ptr(), vs.as_ptr(), &mut prob),
            IrnnStatus::Ok
        );
        let mut pen = ptr::null_mut();
        assert_eq!(irnn_penalty_new(name.as_ptr(), 1.0, 0.3, 0.5, &mut pen), IrnnStatus::Ok);
        let opts = irnn_solve_options_default(false);
        assert_eq!(opts.eta, 0.7);
        let mut res = ptr::null_mut();
        assert_eq!(irnn_complete(prob, pen, &opts, &mut res), IrnnStatus::Ok);
        let (mut r, mut c) = (0, 0);
        assert_eq!(irnn_result_shape(res, &mut r, &mut c), IrnnStatus::Ok);
        assert_eq!((r, c), (m, n));
        let mut buf = vec![0.0; m * n];
        assert_eq!(irnn_result_copy(res, buf.as_mut_ptr(), buf.len() - 1), IrnnStatus::ShapeMismatch);
        assert_eq!(irnn_result_copy(res, buf.as_mut_ptr(), buf.len()), IrnnStatus::Ok);
        let want: Vec<f64> = (0..m).flat_map(|i| (0..n).map(move |j| truth(i, j))).collect();
        let mut err = 0.0;
        assert_eq!(irnn_relative_error(m, n, buf.as_ptr(), want.as_ptr(), &mut err), IrnnStatus::Ok);
        assert!(err < 1e-3, "relative error {err}");
        let (mut iters, mut stages, mut obj) = (0, 0, 0.0);
        assert_eq!(irnn_result_summary(res, &mut iters, &mut stages, &mut obj), IrnnStatus::Ok);
        assert!(iters > 0 && stages > 0 && obj.is_finite());
        irnn_result_free(res);
        irnn_penalty_free(pen);
        irnn_completion_free(prob);
    }
}

#[test]
fn completion_rejects_out_of_range_entries() {
    let (ri, ci, vs) = ([0usize, 5], [0usize, 0], [1.0, 2.0]);
    let mut prob = ptr::null_mut();
    unsafe {
        let status = irnn_completion_new(3, 3, 2, ri.as_ptr(), ci.as_ptr(), vs.as_ptr(), &mut prob);
        assert_ne!(status, IrnnStatus::Ok);
        assert!(prob.is_null());
    }
}
