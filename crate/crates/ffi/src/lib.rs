//! C bindings for `snakedim`.
//!
//! Spaces, orders and hierarchies are opaque heap handles owned by the
//! caller and released with the matching `*_free`. Every fallible call
//! returns a [`SnakedimStatus`]; on failure the message is available from
//! [`snakedim_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use snakedim::chains::{lex_order, theorem_b_certificate, ChainError};
use snakedim::cover::CoverError;
use snakedim::hierarchy::{build_hierarchy, Builder, CoverHierarchy};
use snakedim::metric::{FiniteMetricSpace, Generator, MetricError, TotalOrder};
use snakedim::separating::{binary_code_order, separating_family, SeparationError, SeparationMethod};
use snakedim::snake::{longest_snake, snake_number_at_scale, SnakeError};

/// Written by [`snakedim_longest_snake`] when `u1` is empty.
pub const SNAKEDIM_NO_SNAKE: usize = usize::MAX;

/// A validated finite metric space.
pub struct SnakedimSpace(FiniteMetricSpace);

/// A total order on the points of a space.
pub struct SnakedimOrder(TotalOrder);

/// A cover hierarchy over a space.
pub struct SnakedimHierarchy(CoverHierarchy);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnakedimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Metric = 3,
    Snake = 4,
    Cover = 5,
    Chain = 6,
    Separation = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnakedimGenerator {
    /// `a` equally spaced points on the unit interval.
    Segment = 0,
    /// `a` equally spaced points on a circle of unit circumference.
    Circle = 1,
    /// `b^a` lattice in the unit cube (`a` = dimension, `b` = side).
    Grid = 2,
    /// Tripod with `a` points per leg.
    Tripod = 3,
    /// `a`-fold max-product of the tripod with `b` points per leg.
    TripodProduct = 4,
    /// Middle-thirds Cantor set at depth `a`.
    Cantor = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnakedimBuilder {
    Brick = 0,
    Partition = 1,
}

/// Result of a scale sweep: the largest snake length and the pair attaining it.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnakedimScaleMax {
    pub value: usize,
    pub x: usize,
    pub y: usize,
}

/// Summary of a chain-order certificate. The `worst_*` fields are only
/// meaningful when `has_worst` is true.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnakedimCertificate {
    pub pass: bool,
    pub bound: usize,
    pub has_worst: bool,
    pub worst_x: usize,
    pub worst_y: usize,
    pub worst_value: usize,
    pub worst_level: usize,
    pub worst_radius: f64,
    pub checked_pairs: usize,
    pub skipped_pairs: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(SnakedimStatus, String);

macro_rules! status_from {
    ($($err:ty => $status:ident),* $(,)?) => {$(
        impl From<$err> for Failure {
            fn from(e: $err) -> Self {
                Failure(SnakedimStatus::$status, e.to_string())
            }
        }
    )*};
}

status_from! {
    MetricError => Metric,
    SnakeError => Snake,
    CoverError => Cover,
    ChainError => Chain,
    SeparationError => Separation,
}

fn invalid(msg: impl Display) -> Failure {
    Failure(SnakedimStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnakedimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SnakedimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("Panic: internal error");
            SnakedimStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(SnakedimStatus::NullPointer, format!("NullPointer: {what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(SnakedimStatus::NullPointer, format!("NullPointer: {what} is null")))
}

unsafe fn array<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Failure(SnakedimStatus::NullPointer, format!("NullPointer: {what} is null")))
    } else {
        Ok(slice::from_raw_parts(p, len))
    }
}

fn check_order(space: &FiniteMetricSpace, order: &TotalOrder) -> Result<(), Failure> {
    if space.len() != order.len() {
        return Err(invalid(format!("SizeMismatch: space has {} points but the order has {}", space.len(), order.len())));
    }
    Ok(())
}

fn check_hierarchy(space: &FiniteMetricSpace, h: &CoverHierarchy) -> Result<(), Failure> {
    if h.level(0).sets()[0].len() != space.len() {
        return Err(invalid("SizeMismatch: hierarchy was built over a different space"));
    }
    Ok(())
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn snakedim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a space from a row-major `n × n` distance matrix.
///
/// # Safety
/// `dist` must point to `n * n` doubles and `out_space` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_space_from_matrix(dist: *const f64, n: usize, out_space: *mut *mut SnakedimSpace) -> SnakedimStatus {
    guard(|| {
        let out_space = out(out_space, "out_space")?;
        let len = n.checked_mul(n).ok_or_else(|| invalid("BadParams: n * n overflows"))?;
        let flat = array(dist, len, "dist")?;
        let rows: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let space = FiniteMetricSpace::from_matrix(&rows)?;
        *out_space = Box::into_raw(Box::new(SnakedimSpace(space)));
        Ok(())
    })
}

/// Builds one of the synthetic spaces; see [`SnakedimGenerator`] for the
/// meaning of `a` and `b`.
///
/// # Safety
/// `out_space` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_space_generate(
    kind: SnakedimGenerator,
    a: usize,
    b: usize,
    out_space: *mut *mut SnakedimSpace,
) -> SnakedimStatus {
    guard(|| {
        let out_space = out(out_space, "out_space")?;
        let generator = match kind {
            SnakedimGenerator::Segment => Generator::Segment { n: a },
            SnakedimGenerator::Circle => Generator::Circle { n: a },
            SnakedimGenerator::Grid => Generator::Grid { dim: a, m: b },
            SnakedimGenerator::Tripod => Generator::Tripod { m: a },
            SnakedimGenerator::TripodProduct => Generator::TripodProduct { factors: a, m: b },
            SnakedimGenerator::Cantor => Generator::Cantor { depth: a },
        };
        *out_space = Box::into_raw(Box::new(SnakedimSpace(generator.build()?)));
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakedim_space_len(space: *const SnakedimSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `space` must be a live handle and `out_distance` writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_space_distance(
    space: *const SnakedimSpace,
    i: usize,
    j: usize,
    out_distance: *mut f64,
) -> SnakedimStatus {
    guard(|| {
        let space = &borrow(space, "space")?.0;
        let out_distance = out(out_distance, "out_distance")?;
        space.check_point(i)?;
        space.check_point(j)?;
        *out_distance = space.d(i, j);
        Ok(())
    })
}

/// # Safety
/// `space` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snakedim_space_free(space: *mut SnakedimSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

unsafe fn store_order(out_order: *mut *mut SnakedimOrder, order: TotalOrder) -> Result<(), Failure> {
    *out(out_order, "out_order")? = Box::into_raw(Box::new(SnakedimOrder(order)));
    Ok(())
}

/// Natural order of a generated space.
///
/// # Safety
/// `space` must be a live handle and `out_order` writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_order_natural(space: *const SnakedimSpace, out_order: *mut *mut SnakedimOrder) -> SnakedimStatus {
    guard(|| {
        let space = &borrow(space, "space")?.0;
        store_order(out_order, space.natural_order()?)
    })
}

/// Order listing `perm[0], perm[1], ...` from smallest to largest.
///
/// # Safety
/// `perm` must point to `len` values; `space` must be live and `out_order` writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_order_from_permutation(
    space: *const SnakedimSpace,
    perm: *const usize,
    len: usize,
    out_order: *mut *mut SnakedimOrder,
) -> SnakedimStatus {
    guard(|| {
        let space = &borrow(space, "space")?.0;
        let perm = array(perm, len, "perm")?;
        store_order(out_order, space.order_from_permutation(perm.to_vec())?)
    })
}

/// Lexicographic chain order of a hierarchy, with sets in index order.
///
/// # Safety
/// `space` and `hierarchy` must be live handles and `out_order` writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_order_lex(
    space: *const SnakedimSpace,
    hierarchy: *const SnakedimHierarchy,
    out_order: *mut *mut SnakedimOrder,
) -> SnakedimStatus {
    guard(|| {
        let space = &borrow(space, "space")?.0;
        let h = &borrow(hierarchy, "hierarchy")?.0;
        check_hierarchy(space, h)?;
        store_order(out_order, lex_order(h, space.len(), None)?)
    })
}

/// Binary-code order from the single-linkage separating family.
///
/// # Safety
/// `space` must be a live handle and `out_order` writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_order_binary(space: *const SnakedimSpace, out_order: *mut *mut SnakedimOrder) -> SnakedimStatus {
    guard(|| {
        let space = &borrow(space, "space")?.0;
        let family = separating_family(space, SeparationMethod::Dendrogram)?;
        store_order(out_order, binary_code_order(&family))
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `order` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakedim_order_len(order: *const SnakedimOrder) -> usize {
    order.as_ref().map_or(0, |o| o.0.len())
}

/// Copies the points from smallest to largest into `buf`, which must hold
/// exactly `snakedim_order_len(order)` entries.
///
/// # Safety
/// `order` must be live and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn snakedim_order_sequence(order: *const SnakedimOrder, buf: *mut usize, len: usize) -> SnakedimStatus {
    guard(|| {
        let order = &borrow(order, "order")?.0;
        if len != order.len() {
            return Err(invalid(format!("BadParams: buffer holds {len} entries, order has {}", order.len())));
        }
        if len > 0 {
            out(buf, "buf")?;
            slice::from_raw_parts_mut(buf, len).copy_from_slice(order.sequence());
        }
        Ok(())
    })
}

/// # Safety
/// `order` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snakedim_order_free(order: *mut SnakedimOrder) {
    if !order.is_null() {
        drop(Box::from_raw(order));
    }
}

/// Length (points minus one) of the longest alternating snake from `u1` to
/// `u2`, or [`SNAKEDIM_NO_SNAKE`] when `u1` is empty.
///
/// # Safety
/// `order` must be live; `u1`/`u2` must point to `n1`/`n2` values.
#[no_mangle]
pub unsafe extern "C" fn snakedim_longest_snake(
    order: *const SnakedimOrder,
    u1: *const usize,
    n1: usize,
    u2: *const usize,
    n2: usize,
    out_len: *mut usize,
) -> SnakedimStatus {
    guard(|| {
        let order = &borrow(order, "order")?.0;
        let u1 = array(u1, n1, "u1")?;
        let u2 = array(u2, n2, "u2")?;
        let out_len = out(out_len, "out_len")?;
        if let Some(&p) = u1.iter().chain(u2).find(|&&p| p >= order.len()) {
            return Err(SnakeError::PointOutOfRange(p).into());
        }
        *out_len = longest_snake(order, u1, u2).value().unwrap_or(SNAKEDIM_NO_SNAKE);
        Ok(())
    })
}

/// Largest snake over ordered pairs of disjoint `eps`-balls.
///
/// # Safety
/// `space` and `order` must be live handles and `out_max` writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_snake_number_at_scale(
    space: *const SnakedimSpace,
    order: *const SnakedimOrder,
    eps: f64,
    out_max: *mut SnakedimScaleMax,
) -> SnakedimStatus {
    guard(|| {
        let space = &borrow(space, "space")?.0;
        let order = &borrow(order, "order")?.0;
        let out_max = out(out_max, "out_max")?;
        check_order(space, order)?;
        let m = snake_number_at_scale(space, order, eps)?;
        *out_max = SnakedimScaleMax { value: m.value.value().unwrap_or(0), x: m.argmax.x, y: m.argmax.y };
        Ok(())
    })
}

/// # Safety
/// `space` must be a live handle and `out_hierarchy` writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_hierarchy_build(
    space: *const SnakedimSpace,
    builder: SnakedimBuilder,
    depth: usize,
    mult_bound: usize,
    out_hierarchy: *mut *mut SnakedimHierarchy,
) -> SnakedimStatus {
    guard(|| {
        let space = &borrow(space, "space")?.0;
        let out_hierarchy = out(out_hierarchy, "out_hierarchy")?;
        let builder = match builder {
            SnakedimBuilder::Brick => Builder::Brick,
            SnakedimBuilder::Partition => Builder::Partition,
        };
        let h = build_hierarchy(space, builder, depth, mult_bound)?;
        *out_hierarchy = Box::into_raw(Box::new(SnakedimHierarchy(h)));
        Ok(())
    })
}

/// Number of levels, or 0 for a null handle.
///
/// # Safety
/// `hierarchy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakedim_hierarchy_depth(hierarchy: *const SnakedimHierarchy) -> usize {
    hierarchy.as_ref().map_or(0, |h| h.0.depth())
}

/// # Safety
/// `hierarchy` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snakedim_hierarchy_free(hierarchy: *mut SnakedimHierarchy) {
    if !hierarchy.is_null() {
        drop(Box::from_raw(hierarchy));
    }
}

/// Checks every pair against the bound `2n + 1`. A failing certificate is
/// still `SNAKEDIM_STATUS_OK`; read `pass`.
///
/// # Safety
/// All handles must be live and `out_certificate` writable.
#[no_mangle]
pub unsafe extern "C" fn snakedim_certify(
    space: *const SnakedimSpace,
    order: *const SnakedimOrder,
    hierarchy: *const SnakedimHierarchy,
    n: usize,
    out_certificate: *mut SnakedimCertificate,
) -> SnakedimStatus {
    guard(|| {
        let space = &borrow(space, "space")?.0;
        let order = &borrow(order, "order")?.0;
        let h = &borrow(hierarchy, "hierarchy")?.0;
        let out_certificate = out(out_certificate, "out_certificate")?;
        check_order(space, order)?;
        check_hierarchy(space, h)?;
        let cert = theorem_b_certificate(space, order, h, n)?;
        let mut c = SnakedimCertificate {
            pass: cert.pass,
            bound: cert.bound,
            checked_pairs: cert.checked_pairs,
            skipped_pairs: cert.skipped_pairs.len(),
            ..Default::default()
        };
        if let Some(w) = &cert.worst {
            c.has_worst = true;
            c.worst_x = w.pair.x;
            c.worst_y = w.pair.y;
            c.worst_value = w.value;
            c.worst_level = w.level;
            c.worst_radius = w.radius;
        }
        *out_certificate = c;
        Ok(())
    })
}
