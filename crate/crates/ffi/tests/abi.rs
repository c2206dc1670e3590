use std::ffi::{CStr, CString};
use std::ptr;

use gprtopo_ffi::*;

const RING: [f64; 9] = [0.1, 0.1, 0.1, 0.1, 1.0, 0.1, 0.1, 0.1, 0.1];

unsafe fn last_error() -> String {
    let p = gprtopo_last_error_message();
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    gprtopo_string_free(p);
    s
}

unsafe fn ring() -> *mut GprtopoImage {
    let mut img = ptr::null_mut();
    assert_eq!(gprtopo_image_new(3, 3, RING.as_ptr(), &mut img), GprtopoStatus::Ok);
    img
}

#[test]
fn ring_diagram_through_the_abi() {
    unsafe {
        let img = ring();
        assert_eq!((gprtopo_image_width(img), gprtopo_image_height(img)), (3, 3));
        let mut d = ptr::null_mut();
        assert_eq!(gprtopo_diagram_compute(img, ptr::null(), &mut d), GprtopoStatus::Ok);
        assert!(gprtopo_last_error_message().is_null());

        let n = gprtopo_diagram_len(d);
        let mut loops = Vec::new();
        for i in 0..n {
            let mut p = GprtopoPair { dim: 0, birth: 0.0, death: 0.0, lifetime: 0.0, n_cycle_edges: 0 };
            assert_eq!(gprtopo_diagram_get(d, i, &mut p), GprtopoStatus::Ok);
            if p.dim == 1 {
                loops.push((i, p));
            }
        }
        assert_eq!(loops.len(), 1);
        let (idx, p) = loops[0];
        assert_eq!((p.birth, p.death, p.lifetime, p.n_cycle_edges), (0.1, 1.0, 0.9, 8));
        assert_eq!(gprtopo_diagram_betti(d, 1, 0.5), 1);
        assert_eq!(gprtopo_diagram_betti(d, 0, 0.5), 1);

        let mut len = 0;
        assert_eq!(gprtopo_diagram_cycle(d, idx, ptr::null_mut(), 0, &mut len), GprtopoStatus::BufferTooSmall);
        assert_eq!(len, 8);
        let mut edges = [0u32; 8];
        assert_eq!(gprtopo_diagram_cycle(d, idx, edges.as_mut_ptr(), 8, &mut len), GprtopoStatus::Ok);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));

        let mut map = [0.0; 9];
        let st = gprtopo_render_shape_map(d, GprtopoRenderMode::Boundary, 0.0, map.as_mut_ptr(), 9);
        assert_eq!(st, GprtopoStatus::Ok);
        assert_eq!(map, [1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0]);

        let mut blend = [0.0; 9];
        let st = gprtopo_fuse(img, d, GprtopoRenderMode::Boundary, 0.0, 0.5, blend.as_mut_ptr(), 9);
        assert_eq!(st, GprtopoStatus::Ok);
        assert_eq!(blend[4], 0.5);
        assert_eq!(blend[0], 0.5 * 0.1 + 0.5);

        gprtopo_diagram_free(d);
        gprtopo_image_free(img);
    }
}

#[test]
fn options_select_reduction_and_zero_pairs() {
    unsafe {
        let img = ring();
        let mut lens = Vec::new();
        for (reduction, keep) in [
            (GprtopoReduction::Twist, false),
            (GprtopoReduction::Standard, false),
            (GprtopoReduction::Twist, true),
        ] {
            let opts = GprtopoPersistenceOptions { invert: false, quantize: 0, reduction, keep_zero_persistence: keep };
            let mut d = ptr::null_mut();
            assert_eq!(gprtopo_diagram_compute(img, &opts, &mut d), GprtopoStatus::Ok);
            lens.push(gprtopo_diagram_len(d));
            gprtopo_diagram_free(d);
        }
        assert_eq!(lens[0], lens[1]);
        assert!(lens[2] > lens[0]);

        let opts = GprtopoPersistenceOptions {
            invert: false,
            quantize: 1,
            reduction: GprtopoReduction::Twist,
            keep_zero_persistence: false,
        };
        let mut d = ptr::null_mut();
        assert_eq!(gprtopo_diagram_compute(img, &opts, &mut d), GprtopoStatus::InvalidArgument);
        assert!(d.is_null());
        gprtopo_image_free(img);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut img = ptr::null_mut();
        assert_eq!(gprtopo_image_new(2, 2, ptr::null(), &mut img), GprtopoStatus::NullPointer);
        assert!(last_error().contains("pixels"));

        let bad = [0.0, 2.0];
        assert_eq!(gprtopo_image_new(2, 1, bad.as_ptr(), &mut img), GprtopoStatus::InvalidArgument);

        let dir = tempfile::tempdir().unwrap();
        let missing = CString::new(dir.path().join("nope.pgm").to_str().unwrap()).unwrap();
        assert_eq!(gprtopo_image_load(missing.as_ptr(), false, &mut img), GprtopoStatus::Io);
        assert!(last_error().contains("nope.pgm"));

        let junk = dir.path().join("junk.pgm");
        std::fs::write(&junk, "hello").unwrap();
        let junk = CString::new(junk.to_str().unwrap()).unwrap();
        assert_eq!(gprtopo_image_load(junk.as_ptr(), false, &mut img), GprtopoStatus::Format);

        let img = ring();
        let mut d = ptr::null_mut();
        gprtopo_diagram_compute(img, ptr::null(), &mut d);
        let mut p = GprtopoPair { dim: 0, birth: 0.0, death: 0.0, lifetime: 0.0, n_cycle_edges: 0 };
        assert_eq!(gprtopo_diagram_get(d, 1000, &mut p), GprtopoStatus::OutOfRange);
        let mut small = [0.0; 4];
        let st = gprtopo_render_shape_map(d, GprtopoRenderMode::Filled, 0.0, small.as_mut_ptr(), 4);
        assert_eq!(st, GprtopoStatus::BufferTooSmall);
        gprtopo_diagram_free(d);
        gprtopo_image_free(img);
        gprtopo_image_free(ptr::null_mut());
    }
}

#[test]
fn load_pgm_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ring.pgm");
    std::fs::write(&path, "P2\n3 3\n10\n1 1 1\n1 10 1\n1 1 1\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut img = ptr::null_mut();
        assert_eq!(gprtopo_image_load(c.as_ptr(), false, &mut img), GprtopoStatus::Ok);
        assert_eq!(gprtopo_image_width(img), 3);
        gprtopo_image_free(img);
        let v = CStr::from_ptr(gprtopo_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn iou_corner_case() {
    let a = GprtopoRect { x1: 0.0, y1: 0.0, x2: 2.0, y2: 2.0 };
    let b = GprtopoRect { x1: 1.0, y1: 1.0, x2: 3.0, y2: 3.0 };
    assert_eq!(gprtopo_iou(a, b), 1.0 / 7.0);
    assert_eq!(gprtopo_iou(a, a), 1.0);
}
