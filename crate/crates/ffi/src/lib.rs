//! C ABI for `gprtopo`.
//!
//! Every fallible call returns a [`GprtopoStatus`]; on failure the message is
//! kept per thread and can be fetched with [`gprtopo_last_error_message`].
//! Images and diagrams are opaque handles that the caller releases with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gprtopo::cubical::build_sublevel_complex;
use gprtopo::image::{self, load_image, LoadOptions};
use gprtopo::metrics::{self, Rect};
use gprtopo::persistence::{betti_curve, compute_persistence_with, PersistenceDiagram, Reduction};
use gprtopo::shape_map::{fuse, render_shape_map, RenderMode};
use gprtopo::{Error, GrayImage};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GprtopoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    Geometry = 6,
    BufferTooSmall = 7,
    OutOfRange = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GprtopoReduction {
    Twist = 0,
    Standard = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GprtopoRenderMode {
    Boundary = 0,
    Filled = 1,
}

/// Options for [`gprtopo_diagram_compute`]. A null pointer means defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GprtopoPersistenceOptions {
    pub invert: bool,
    /// Quantization levels; 0 keeps the input values.
    pub quantize: u32,
    pub reduction: GprtopoReduction,
    /// Keep pairs with birth == death.
    pub keep_zero_persistence: bool,
}

/// One persistence pair. `death` and `lifetime` are +inf for essential classes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GprtopoPair {
    pub dim: u8,
    pub birth: f64,
    pub death: f64,
    pub lifetime: f64,
    pub n_cycle_edges: usize,
}

/// Axis-aligned box as corners.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GprtopoRect {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

/// Opaque grayscale image.
pub struct GprtopoImage {
    inner: GrayImage,
}

/// Opaque persistence diagram.
pub struct GprtopoDiagram {
    inner: PersistenceDiagram,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: GprtopoStatus, msg: impl Into<String>) -> GprtopoStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> GprtopoStatus {
    match e {
        Error::Io { .. } => GprtopoStatus::Io,
        Error::UnsupportedFormat(_) | Error::ColorInput(_) | Error::Parse { .. } | Error::Image(_) => {
            GprtopoStatus::Format
        }
        Error::DimensionMismatch { .. } => GprtopoStatus::DimensionMismatch,
        Error::Geometry(_) => GprtopoStatus::Geometry,
        Error::InvalidArgument(_) | Error::MalformedComplex(_) => GprtopoStatus::InvalidArgument,
    }
}

/// Runs `f`, turning library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), GprtopoStatus>) -> GprtopoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GprtopoStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(GprtopoStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, GprtopoStatus>;
}

impl<T> OrStatus<T> for gprtopo::Result<T> {
    fn or_status(self) -> Result<T, GprtopoStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), GprtopoStatus> {
    if p.is_null() {
        Err(fail(GprtopoStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gprtopo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or null if the last call
/// succeeded. Release it with [`gprtopo_string_free`].
#[no_mangle]
pub extern "C" fn gprtopo_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must come from this library (or be null) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an image from `width * height` row-major values in `[0, 1]`.
///
/// # Safety
/// `pixels` must point to `width * height` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_image_new(
    width: usize,
    height: usize,
    pixels: *const f64,
    out: *mut *mut GprtopoImage,
) -> GprtopoStatus {
    guard(|| {
        non_null(pixels, "pixels")?;
        non_null(out, "out")?;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| fail(GprtopoStatus::InvalidArgument, "image size overflows"))?;
        let data = slice::from_raw_parts(pixels, n).to_vec();
        let inner = GrayImage::new(width, height, data).or_status()?;
        *out = Box::into_raw(Box::new(GprtopoImage { inner }));
        Ok(())
    })
}

/// Reads a PGM or grayscale PNG. Color PNGs fail unless `luma` is set.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_image_load(path: *const c_char, luma: bool, out: *mut *mut GprtopoImage) -> GprtopoStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(GprtopoStatus::InvalidArgument, "path is not UTF-8"))?;
        let inner = load_image(path, LoadOptions { luma }).or_status()?;
        *out = Box::into_raw(Box::new(GprtopoImage { inner }));
        Ok(())
    })
}

/// # Safety
/// `img` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_image_width(img: *const GprtopoImage) -> usize {
    img.as_ref().map_or(0, |i| i.inner.width())
}

/// # Safety
/// `img` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_image_height(img: *const GprtopoImage) -> usize {
    img.as_ref().map_or(0, |i| i.inner.height())
}

/// # Safety
/// `img` must come from this library (or be null) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_image_free(img: *mut GprtopoImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

impl Default for GprtopoPersistenceOptions {
    fn default() -> Self {
        Self {
            invert: false,
            quantize: 0,
            reduction: GprtopoReduction::Twist,
            keep_zero_persistence: false,
        }
    }
}

/// Sublevel persistence of `img`; `opts` may be null.
///
/// # Safety
/// `img` must be a live handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_diagram_compute(
    img: *const GprtopoImage,
    opts: *const GprtopoPersistenceOptions,
    out: *mut *mut GprtopoDiagram,
) -> GprtopoStatus {
    guard(|| {
        non_null(img, "img")?;
        non_null(out, "out")?;
        let opts = opts.as_ref().copied().unwrap_or_default();
        let mut filtered = if opts.invert {
            image::invert(&(*img).inner)
        } else {
            (*img).inner.clone()
        };
        if opts.quantize > 0 {
            filtered = image::quantize(&filtered, opts.quantize).or_status()?;
        }
        let reduction = match opts.reduction {
            GprtopoReduction::Twist => Reduction::Twist,
            GprtopoReduction::Standard => Reduction::Standard,
        };
        let mut inner = compute_persistence_with(&build_sublevel_complex(&filtered), reduction).or_status()?;
        if !opts.keep_zero_persistence {
            inner = inner.without_zero_persistence();
        }
        *out = Box::into_raw(Box::new(GprtopoDiagram { inner }));
        Ok(())
    })
}

/// Number of pairs, 0 for a null handle.
///
/// # Safety
/// `d` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_diagram_len(d: *const GprtopoDiagram) -> usize {
    d.as_ref().map_or(0, |d| d.inner.pairs.len())
}

/// # Safety
/// `d` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_diagram_get(d: *const GprtopoDiagram, index: usize, out: *mut GprtopoPair) -> GprtopoStatus {
    guard(|| {
        non_null(d, "diagram")?;
        non_null(out, "out")?;
        let pairs = &(*d).inner.pairs;
        let p = pairs
            .get(index)
            .ok_or_else(|| fail(GprtopoStatus::OutOfRange, format!("pair {index} of {}", pairs.len())))?;
        *out = GprtopoPair {
            dim: p.dim,
            birth: p.birth,
            death: p.death.unwrap_or(f64::INFINITY),
            lifetime: p.lifetime(),
            n_cycle_edges: p.rep_cycle.len(),
        };
        Ok(())
    })
}

/// Copies the representative cycle's edge ids of pair `index` into `edges`.
/// `len` receives the cycle length even when `cap` is too small.
///
/// # Safety
/// `edges` must hold `cap` values (may be null when `cap` is 0); `len` writable.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_diagram_cycle(
    d: *const GprtopoDiagram,
    index: usize,
    edges: *mut u32,
    cap: usize,
    len: *mut usize,
) -> GprtopoStatus {
    guard(|| {
        non_null(d, "diagram")?;
        non_null(len, "len")?;
        let pairs = &(*d).inner.pairs;
        let p = pairs
            .get(index)
            .ok_or_else(|| fail(GprtopoStatus::OutOfRange, format!("pair {index} of {}", pairs.len())))?;
        *len = p.rep_cycle.len();
        if cap < p.rep_cycle.len() {
            return Err(fail(GprtopoStatus::BufferTooSmall, format!("cycle needs {} slots", p.rep_cycle.len())));
        }
        if !p.rep_cycle.is_empty() {
            non_null(edges, "edges")?;
            slice::from_raw_parts_mut(edges, p.rep_cycle.len()).copy_from_slice(&p.rep_cycle);
        }
        Ok(())
    })
}

/// Classes of dimension `dim` alive at `eps`.
///
/// # Safety
/// `d` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_diagram_betti(d: *const GprtopoDiagram, dim: u8, eps: f64) -> usize {
    d.as_ref().map_or(0, |d| betti_curve(&d.inner, dim, eps))
}

/// # Safety
/// `d` must come from this library (or be null) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_diagram_free(d: *mut GprtopoDiagram) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

fn render_mode(mode: GprtopoRenderMode) -> RenderMode {
    match mode {
        GprtopoRenderMode::Boundary => RenderMode::Boundary,
        GprtopoRenderMode::Filled => RenderMode::Filled,
    }
}

unsafe fn out_plane<'a>(out: *mut f64, out_len: usize, need: usize) -> Result<&'a mut [f64], GprtopoStatus> {
    non_null(out, "out")?;
    if out_len < need {
        return Err(fail(GprtopoStatus::BufferTooSmall, format!("need {need} values, got {out_len}")));
    }
    Ok(slice::from_raw_parts_mut(out, need))
}

/// Writes the lifetime-weighted shape map (row-major, width * height values).
///
/// # Safety
/// `d` must be a live handle; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_render_shape_map(
    d: *const GprtopoDiagram,
    mode: GprtopoRenderMode,
    min_lifetime: f64,
    out: *mut f64,
    out_len: usize,
) -> GprtopoStatus {
    guard(|| {
        non_null(d, "diagram")?;
        let diag = &(*d).inner;
        let map = render_shape_map(diag, diag.source_dims, render_mode(mode), min_lifetime).or_status()?;
        out_plane(out, out_len, map.values.len())?.copy_from_slice(&map.values);
        Ok(())
    })
}

/// Writes the blend plane `alpha * raw + (1 - alpha) * shape_map` for a
/// diagram computed from `img`.
///
/// # Safety
/// Handles must be live; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gprtopo_fuse(
    img: *const GprtopoImage,
    d: *const GprtopoDiagram,
    mode: GprtopoRenderMode,
    min_lifetime: f64,
    alpha: f64,
    out: *mut f64,
    out_len: usize,
) -> GprtopoStatus {
    guard(|| {
        non_null(img, "img")?;
        non_null(d, "diagram")?;
        let raw = &(*img).inner;
        let map = render_shape_map(&(*d).inner, raw.dims(), render_mode(mode), min_lifetime).or_status()?;
        let fused = fuse(raw, &map, alpha).or_status()?;
        out_plane(out, out_len, fused.blend.len())?.copy_from_slice(&fused.blend);
        Ok(())
    })
}

/// Intersection over union of two boxes; 0 when disjoint.
#[no_mangle]
pub extern "C" fn gprtopo_iou(a: GprtopoRect, b: GprtopoRect) -> f64 {
    metrics::iou(&Rect::new(a.x1, a.y1, a.x2, a.y2), &Rect::new(b.x1, b.y1, b.x2, b.y2))
}
