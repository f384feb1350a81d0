use std::ffi::{CStr, CString};
use std::ptr;

use graphkm::io::write_dataset;
use graphkm::AttributedGraph;
use graphkm_ffi::*;

fn scalar_dataset(values: &[f64]) -> CString {
    let graphs: Vec<_> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| AttributedGraph::single_node(format!("g{i}"), &[v]).unwrap())
        .collect();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &graphs).unwrap();
    CString::new(buf).unwrap()
}

fn last_error() -> String {
    let p = gkm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn parse_distance_and_cluster() {
    let text = scalar_dataset(&[0.0, 0.1, 10.0, 10.2]);
    let mut ds = ptr::null_mut();
    unsafe {
        assert_eq!(gkm_dataset_parse(text.as_ptr(), &mut ds), GkmStatus::Ok);
        assert_eq!(gkm_dataset_len(ds), 4);
        assert_eq!(gkm_dataset_max_order(ds), 1);

        let mut d = 0.0;
        let st = gkm_distance(ds, 0, 2, GkmMatcher::Exact, 10, &mut d);
        assert_eq!(st, GkmStatus::Ok);
        assert_eq!(d, 10.0);
        let st = gkm_distance(ds, 0, 9, GkmMatcher::Exact, 10, &mut d);
        assert_eq!(st, GkmStatus::OutOfRange);

        let mut opts = gkm_cluster_options_default(2);
        opts.seed = 7;
        let mut res = ptr::null_mut();
        assert_eq!(gkm_cluster(ds, &opts, &mut res), GkmStatus::Ok);
        assert_eq!(gkm_result_len(res), 4);
        assert_eq!(gkm_result_k(res), 2);
        assert!(gkm_result_iterations(res) >= 1);
        assert!(gkm_result_matchings(res) > 0);
        assert!((gkm_result_objective(res) - 0.025).abs() < 1e-9);

        let mut short = [0usize; 3];
        assert_eq!(
            gkm_result_assignment(res, short.as_mut_ptr(), short.len()),
            GkmStatus::OutOfRange
        );
        let mut a = [0usize; 4];
        assert_eq!(
            gkm_result_assignment(res, a.as_mut_ptr(), a.len()),
            GkmStatus::Ok
        );
        assert_eq!(a[0], a[1]);
        assert_eq!(a[2], a[3]);
        assert_ne!(a[0], a[2]);

        gkm_result_free(res);
        gkm_dataset_free(ds);
    }
}

#[test]
fn error_codes_and_messages() {
    let text = scalar_dataset(&[1.0, 2.0]);
    let mut ds = ptr::null_mut();
    unsafe {
        assert_eq!(
            gkm_dataset_parse(ptr::null(), &mut ds),
            GkmStatus::NullPointer
        );
        assert!(last_error().contains("text"));

        let bad = CString::new("not json").unwrap();
        assert_eq!(gkm_dataset_parse(bad.as_ptr(), &mut ds), GkmStatus::Parse);
        assert!(ds.is_null());

        let missing = CString::new("/nonexistent/graphkm.jsonl").unwrap();
        assert_eq!(gkm_dataset_load(missing.as_ptr(), &mut ds), GkmStatus::Io);

        assert_eq!(gkm_dataset_parse(text.as_ptr(), &mut ds), GkmStatus::Ok);
        let opts = gkm_cluster_options_default(5);
        let mut res = ptr::null_mut();
        assert_eq!(gkm_cluster(ds, &opts, &mut res), GkmStatus::Config);
        assert!(res.is_null());
        assert!(!last_error().is_empty());
        gkm_dataset_free(ds);

        // null handles are tolerated by accessors and destructors
        assert_eq!(gkm_dataset_len(ptr::null()), 0);
        assert!(gkm_result_objective(ptr::null()).is_nan());
        gkm_dataset_free(ptr::null_mut());
        gkm_result_free(ptr::null_mut());
    }
}

#[test]
fn load_from_file_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    std::fs::write(&path, scalar_dataset(&[3.0, 4.0]).as_bytes()).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut ds = ptr::null_mut();
    unsafe {
        assert_eq!(gkm_dataset_load(cpath.as_ptr(), &mut ds), GkmStatus::Ok);
        assert_eq!(gkm_dataset_len(ds), 2);
        gkm_dataset_free(ds);
        let v = CStr::from_ptr(gkm_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
