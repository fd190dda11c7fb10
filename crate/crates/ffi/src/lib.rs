//! C interface. Objects are opaque handles created and destroyed by this
//! library; every fallible call returns a [`DaStatus`] and leaves a message
//! for [`da_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use delay_attractor::analysis::{containment, simulate_embedded_orbit};
use delay_attractor::boxcover::BoxCollection;
use delay_attractor::cli::run_config;
use delay_attractor::config::Config;
use delay_attractor::models;
use delay_attractor::subdivision::{RunConfig, SelectionReport, Subdivision};
use delay_attractor::embedding::EmbeddedMap;
use delay_attractor::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    EmptyCollection = 4,
    Numerical = 5,
    Io = 6,
    Format = 7,
    Panic = 8,
}

/// A box covering together with the report of the run that produced it.
pub struct DaCovering {
    collection: BoxCollection,
    report: Option<SelectionReport>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> DaStatus {
    match e {
        Error::Config(_)
        | Error::LayoutMismatch(_)
        | Error::StepMismatch { .. }
        | Error::InvalidSegment(_) => DaStatus::Config,
        Error::EmptyCollection { .. } => DaStatus::EmptyCollection,
        Error::Format { .. } => DaStatus::Format,
        Error::Io { .. } => DaStatus::Io,
        Error::EmptyInput | Error::InsufficientData(_) => DaStatus::InvalidArgument,
        Error::OutOfDomain { .. } | Error::NonFiniteState { .. } => DaStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DaStatus, String)>) -> DaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DaStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DaStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DaStatus, String) {
    (DaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DaStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DaStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn covering_arg<'a>(c: *const DaCovering) -> Result<&'a DaCovering, (DaStatus, String)> {
    c.as_ref().ok_or_else(|| null("covering"))
}

fn emit(out: *mut *mut DaCovering, covering: DaCovering) -> Result<(), (DaStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(covering)) };
    Ok(())
}

/// Message describing the last failed call on this thread; empty after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn da_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn da_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Runs `steps` subdivision steps for a built-in model (`wright`,
/// `wright-orbit`, `arneodo`, `mackey-glass`). `threads = 0` uses all cores.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn da_covering_run_preset(
    name: *const c_char,
    steps: u32,
    points_per_box: usize,
    seed: u64,
    threads: usize,
    out: *mut *mut DaCovering,
) -> DaStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let preset = models::preset(name).map_err(lib_err)?;
        let rc = RunConfig {
            steps,
            points_per_box,
            seed,
            threads: (threads > 0).then_some(threads),
            ..RunConfig::default()
        };
        let map = EmbeddedMap::new(preset.system, preset.embedding).map_err(lib_err)?;
        let (collection, report) = Subdivision::new(&map, preset.domain, preset.excluded, rc)
            .and_then(|s| s.run())
            .map_err(lib_err)?;
        emit(
            out,
            DaCovering {
                collection,
                report: Some(report),
            },
        )
    })
}

/// Runs the configuration given as INI text (the format read by the
/// command-line tool). No files are written.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn da_covering_run_config(
    config_text: *const c_char,
    out: *mut *mut DaCovering,
) -> DaStatus {
    guard(|| {
        let text = str_arg(config_text, "config_text")?;
        let cfg = Config::parse(text).map_err(lib_err)?;
        let (collection, report) = run_config(&cfg).map_err(lib_err)?;
        emit(
            out,
            DaCovering {
                collection,
                report: Some(report),
            },
        )
    })
}

/// Reads a covering file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn da_covering_load(
    path: *const c_char,
    out: *mut *mut DaCovering,
) -> DaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| lib_err(Error::io(path, e)))?;
        let collection = BoxCollection::from_text(&text).map_err(lib_err)?;
        emit(
            out,
            DaCovering {
                collection,
                report: None,
            },
        )
    })
}

/// Writes the covering file.
///
/// # Safety
/// `covering` must come from this library and `path` be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn da_covering_save(covering: *const DaCovering, path: *const c_char) -> DaStatus {
    guard(|| {
        let c = covering_arg(covering)?;
        let path = str_arg(path, "path")?;
        std::fs::write(path, c.collection.to_text()).map_err(|e| lib_err(Error::io(path, e)))
    })
}

/// Number of boxes; 0 for a null handle.
///
/// # Safety
/// `covering` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn da_covering_len(covering: *const DaCovering) -> usize {
    covering.as_ref().map_or(0, |c| c.collection.len())
}

/// Dimension `k`; 0 for a null handle.
///
/// # Safety
/// `covering` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn da_covering_dim(covering: *const DaCovering) -> usize {
    covering.as_ref().map_or(0, |c| c.collection.dim())
}

/// Subdivision depth; 0 for a null handle.
///
/// # Safety
/// `covering` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn da_covering_depth(covering: *const DaCovering) -> u32 {
    covering.as_ref().map_or(0, |c| c.collection.depth())
}

/// Copies the center and radii of box `index` (in file order) into two
/// arrays of length `k`.
///
/// # Safety
/// `center` and `radii` must each point to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn da_covering_box(
    covering: *const DaCovering,
    index: usize,
    center: *mut f64,
    radii: *mut f64,
) -> DaStatus {
    guard(|| {
        let c = covering_arg(covering)?;
        if center.is_null() || radii.is_null() {
            return Err(null("center or radii"));
        }
        let key = *c.collection.leaves().get(index).ok_or_else(|| {
            (
                DaStatus::InvalidArgument,
                format!("index {index} out of range ({} boxes)", c.collection.len()),
            )
        })?;
        let r = c.collection.leaf_region(key);
        let k = c.collection.dim();
        ptr::copy_nonoverlapping(r.center().as_ptr(), center, k);
        ptr::copy_nonoverlapping(r.radii().as_ptr(), radii, k);
        Ok(())
    })
}

/// Finds the box containing `x`. Writes its index, or -1 if no box does.
///
/// # Safety
/// `x` must point to `k` doubles and `index` to a writable `int64_t`.
#[no_mangle]
pub unsafe extern "C" fn da_covering_locate(
    covering: *const DaCovering,
    x: *const f64,
    k: usize,
    index: *mut i64,
) -> DaStatus {
    guard(|| {
        let c = covering_arg(covering)?;
        if x.is_null() || index.is_null() {
            return Err(null("x or index"));
        }
        if k != c.collection.dim() {
            return Err((
                DaStatus::InvalidArgument,
                format!("point has {k} coordinates, covering has {}", c.collection.dim()),
            ));
        }
        let x = std::slice::from_raw_parts(x, k);
        *index = match c.collection.locate(x) {
            Some(key) => c.collection.leaves().binary_search(&key).map_or(-1, |i| i as i64),
            None => -1,
        };
        Ok(())
    })
}

/// Fraction of the `n` points (row-major, `k` coordinates each) that lie
/// in the covering.
///
/// # Safety
/// `points` must point to `n * k` doubles and `fraction` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn da_covering_containment(
    covering: *const DaCovering,
    points: *const f64,
    n: usize,
    k: usize,
    fraction: *mut f64,
) -> DaStatus {
    guard(|| {
        let c = covering_arg(covering)?;
        if (points.is_null() && n > 0) || fraction.is_null() {
            return Err(null("points or fraction"));
        }
        if k != c.collection.dim() {
            return Err((
                DaStatus::InvalidArgument,
                format!("points have {k} coordinates, covering has {}", c.collection.dim()),
            ));
        }
        let pts: Vec<Vec<f64>> = if n == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(points, n * k)
                .chunks_exact(k)
                .map(<[f64]>::to_vec)
                .collect()
        };
        *fraction = containment(&c.collection, &pts);
        Ok(())
    })
}

/// Number of boxes after the selection at `depth`, or 0 if the covering
/// has no run report or did not reach `depth`.
///
/// # Safety
/// `covering` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn da_covering_boxes_at_depth(covering: *const DaCovering, depth: u32) -> usize {
    covering
        .as_ref()
        .and_then(|c| c.report.as_ref())
        .and_then(|r| r.steps.iter().find(|s| s.depth == depth))
        .map_or(0, |s| s.boxes_after)
}

/// Releases a covering. Null is ignored.
///
/// # Safety
/// `covering` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn da_covering_free(covering: *mut DaCovering) {
    if !covering.is_null() {
        drop(Box::from_raw(covering));
    }
}

/// Simulates a built-in model from its constant initial history and writes
/// `samples` embedded points (row-major, `k` coordinates each) to `out`,
/// which must hold `out_len >= samples * k` doubles.
///
/// # Safety
/// `name` must be NUL-terminated and `out` point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn da_simulate_preset_orbit(
    name: *const c_char,
    transient: f64,
    samples: usize,
    spacing: f64,
    out: *mut f64,
    out_len: usize,
) -> DaStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let p = models::preset(name).map_err(lib_err)?;
        let k = p.embedding.dim();
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < samples * k {
            return Err((
                DaStatus::InvalidArgument,
                format!("out holds {out_len} doubles, {} needed", samples * k),
            ));
        }
        let orbit = simulate_embedded_orbit(
            &p.system,
            &p.embedding.layout,
            &p.initial_history(),
            transient,
            samples,
            spacing,
            p.embedding.step,
        )
        .map_err(lib_err)?;
        let dst = std::slice::from_raw_parts_mut(out, samples * k);
        for (row, point) in dst.chunks_exact_mut(k).zip(&orbit.points) {
            row.copy_from_slice(point);
        }
        Ok(())
    })
}
