//! C ABI over `tunnelkit`.
//!
//! All quantities are in the library's natural units (length in angstrom,
//! energy in units of 3.81 eV, see `tk_from_ev`). Fallible calls return a
//! [`TkStatus`]; on failure `tk_last_error()` describes the problem on the
//! calling thread. Handles are created by `tk_*_new`/producer calls and must
//! be released with the matching `tk_*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use tunnelkit::compose::{compose_pair, GapJoin};
use tunnelkit::oracle::{solve_exact, ScatterData};
use tunnelkit::potential::{compress, Potential, Segment};
use tunnelkit::resonance::rect_pair_resonant_l;
use tunnelkit::riccati::{integrate_alpha_form, integrate_complex, integrate_real, RiccatiOptions};
use tunnelkit::spectra::wells::{bound_levels, OuterWalls, Well, WellSystem};
use tunnelkit::spectra::{band_structure, BandSet};
use tunnelkit::units::UnitSystem;
use tunnelkit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Solver failure: conditioning, singular denominator, step underflow.
    Numerical = 3,
    NoResonance = 4,
    IndexOutOfRange = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkOuterWalls {
    Infinite = 0,
    Finite = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkRiccatiForm {
    Complex = 0,
    Real = 1,
    Alpha = 2,
}

/// Scattering amplitudes of one element. `r` is referenced at the left
/// edge, `t` and `r_rev` at the right edge; `transmittance` is
/// `(k_right/k_left)|t|^2`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TkScatter {
    pub t_re: f64,
    pub t_im: f64,
    pub r_re: f64,
    pub r_im: f64,
    pub t_rev_re: f64,
    pub t_rev_im: f64,
    pub r_rev_re: f64,
    pub r_rev_im: f64,
    pub k_left: f64,
    pub k_right: f64,
    pub width: f64,
    pub loss: f64,
    pub transmittance: f64,
    pub reflectance: f64,
}

impl From<&ScatterData> for TkScatter {
    fn from(s: &ScatterData) -> Self {
        Self {
            t_re: s.t.re,
            t_im: s.t.im,
            r_re: s.r.re,
            r_im: s.r.im,
            t_rev_re: s.t_rev.re,
            t_rev_im: s.t_rev.im,
            r_rev_re: s.r_rev.re,
            r_rev_im: s.r_rev.im,
            k_left: s.k_left,
            k_right: s.k_right,
            width: s.width,
            loss: s.loss,
            transmittance: s.transmittance(),
            reflectance: s.reflectance(),
        }
    }
}

impl From<&TkScatter> for ScatterData {
    fn from(s: &TkScatter) -> Self {
        ScatterData {
            t: Complex64::new(s.t_re, s.t_im),
            r: Complex64::new(s.r_re, s.r_im),
            t_rev: Complex64::new(s.t_rev_re, s.t_rev_im),
            r_rev: Complex64::new(s.r_rev_re, s.r_rev_im),
            k_left: s.k_left,
            k_right: s.k_right,
            width: s.width,
            loss: s.loss,
        }
    }
}

/// Opaque piecewise potential.
pub struct TkPotential(Potential);
/// Opaque multi-well system.
pub struct TkWellSystem(WellSystem);
/// Opaque list of bound levels.
pub struct TkLevelSet(Vec<f64>);
/// Opaque list of allowed bands.
pub struct TkBandSet(BandSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TkStatus {
    match e {
        Error::InvalidParameter(_) | Error::BelowMedium { .. } | Error::MediaMismatch { .. } | Error::Config(_) => {
            TkStatus::InvalidArgument
        }
        Error::NoResonance(_) => TkStatus::NoResonance,
        _ => TkStatus::Numerical,
    }
}

/// Run `f`, translating errors and panics into a status and the last error.
fn guard(f: impl FnOnce() -> Result<(), (TkStatus, String)>) -> TkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TkStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TkStatus::Internal
        }
    }
}

fn lib(e: Error) -> (TkStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TkStatus, String) {
    (TkStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a pointer obtained from this library and not freed.
unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TkStatus, String)> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for writes.
unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), (TkStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    unsafe { p.write(v) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn tk_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn tk_from_ev(ev: f64) -> f64 {
    UnitSystem::electron_angstrom().from_ev(ev)
}

#[no_mangle]
pub extern "C" fn tk_to_ev(e: f64) -> f64 {
    UnitSystem::electron_angstrom().to_ev(e)
}

#[no_mangle]
pub extern "C" fn tk_from_erg(erg: f64) -> f64 {
    UnitSystem::electron_angstrom().from_erg(erg)
}

#[no_mangle]
pub extern "C" fn tk_from_cm(cm: f64) -> f64 {
    UnitSystem::electron_angstrom().from_cm(cm)
}

/// Empty potential between media at `left_level` and `right_level`.
#[no_mangle]
pub extern "C" fn tk_potential_new(left_level: f64, right_level: f64) -> *mut TkPotential {
    Box::into_raw(Box::new(TkPotential(
        Potential::new(Vec::new()).with_media(left_level, right_level),
    )))
}

/// # Safety
/// `p` must be null or a handle from `tk_potential_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tk_potential_free(p: *mut TkPotential) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// # Safety
/// `p` must be a live potential handle.
unsafe fn push(p: *mut TkPotential, seg: impl FnOnce() -> tunnelkit::Result<Segment>) -> TkStatus {
    guard(|| {
        let p = unsafe { p.as_mut() }.ok_or_else(|| null("potential"))?;
        p.0.segments.push(seg().map_err(lib)?);
        Ok(())
    })
}

/// Append a constant segment.
///
/// # Safety
/// `p` must be a live potential handle.
#[no_mangle]
pub unsafe extern "C" fn tk_potential_push_constant(p: *mut TkPotential, width: f64, height: f64) -> TkStatus {
    unsafe { push(p, || Segment::constant(width, height)) }
}

/// Append a linear ramp `start + slope * t`.
///
/// # Safety
/// `p` must be a live potential handle.
#[no_mangle]
pub unsafe extern "C" fn tk_potential_push_linear(p: *mut TkPotential, width: f64, start: f64, slope: f64) -> TkStatus {
    unsafe { push(p, || Segment::linear(width, start, slope)) }
}

/// Append a sampled profile of `n` heights on a uniform grid.
///
/// # Safety
/// `p` must be a live potential handle and `heights` valid for `n` reads.
#[no_mangle]
pub unsafe extern "C" fn tk_potential_push_sampled(
    p: *mut TkPotential,
    width: f64,
    heights: *const f64,
    n: usize,
) -> TkStatus {
    if heights.is_null() {
        set_error("heights is null".into());
        return TkStatus::NullPointer;
    }
    let hs = unsafe { std::slice::from_raw_parts(heights, n) }.to_vec();
    unsafe { push(p, || Segment::sampled(width, hs)) }
}

/// # Safety
/// `p` must be a live potential handle.
#[no_mangle]
pub unsafe extern "C" fn tk_potential_segment_count(p: *const TkPotential) -> usize {
    unsafe { p.as_ref() }.map_or(0, |p| p.0.segments.len())
}

/// # Safety
/// `p` must be a live potential handle.
#[no_mangle]
pub unsafe extern "C" fn tk_potential_extent(p: *const TkPotential) -> f64 {
    unsafe { p.as_ref() }.map_or(f64::NAN, |p| p.0.extent())
}

/// New potential with barrier widths scaled by `factor` in (0, 1].
///
/// # Safety
/// `p` must be a live potential handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_potential_compress(
    p: *const TkPotential,
    factor: f64,
    out: *mut *mut TkPotential,
) -> TkStatus {
    guard(|| {
        let p = unsafe { as_ref(p, "potential") }?;
        let c = compress(&p.0, factor).map_err(lib)?;
        unsafe { write_out(out, Box::into_raw(Box::new(TkPotential(c))), "out") }
    })
}

/// Exact transfer-matrix solution at `energy`.
///
/// # Safety
/// `p` must be a live potential handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_solve_exact(p: *const TkPotential, energy: f64, out: *mut TkScatter) -> TkStatus {
    guard(|| {
        let p = unsafe { as_ref(p, "potential") }?;
        let s = solve_exact(&p.0, energy).map_err(lib)?;
        unsafe { write_out(out, TkScatter::from(&s), "out") }
    })
}

/// Phase-equation integration at `energy` with relative tolerance `rtol`
/// (0 for the default).
///
/// # Safety
/// `p` must be a live potential handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_solve_riccati(
    p: *const TkPotential,
    energy: f64,
    form: TkRiccatiForm,
    rtol: f64,
    out: *mut TkScatter,
) -> TkStatus {
    guard(|| {
        let p = unsafe { as_ref(p, "potential") }?;
        let mut opts = RiccatiOptions::default();
        if rtol != 0.0 {
            if !(rtol > 0.0 && rtol < 1.0) {
                return Err((TkStatus::InvalidArgument, format!("rtol must be in (0, 1), got {rtol}")));
            }
            opts.tol.rtol = rtol;
            opts.tol.atol = 1e-2 * rtol;
        }
        let f = match form {
            TkRiccatiForm::Complex => integrate_complex,
            TkRiccatiForm::Real => integrate_real,
            TkRiccatiForm::Alpha => integrate_alpha_form,
        };
        let sol = f(&p.0, energy, &opts).map_err(lib)?;
        unsafe { write_out(out, TkScatter::from(&sol.scatter), "out") }
    })
}

/// Join `left` and `right` across a free gap of `length` in a medium with
/// wave number `k`.
///
/// # Safety
/// `left`, `right` valid for reads; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_compose_pair(
    left: *const TkScatter,
    length: f64,
    k: f64,
    right: *const TkScatter,
    out: *mut TkScatter,
) -> TkStatus {
    guard(|| {
        let l = ScatterData::from(unsafe { as_ref(left, "left") }?);
        let r = ScatterData::from(unsafe { as_ref(right, "right") }?);
        let gap = GapJoin::new(length, k).map_err(lib)?;
        let s = compose_pair(&l, &gap, &r).map_err(lib)?;
        unsafe { write_out(out, TkScatter::from(&s), "out") }
    })
}

/// Closed-form resonant gap of two equal rectangular barriers, branch `n`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_rect_pair_resonant_l(height: f64, width: f64, energy: f64, n: i64, out: *mut f64) -> TkStatus {
    guard(|| {
        let l = rect_pair_resonant_l(height, width, energy, n).map_err(lib)?;
        unsafe { write_out(out, l, "out") }
    })
}

/// Wells of `depths[i]`, `widths[i]` (`n` each) separated by `n - 1`
/// barriers.
///
/// # Safety
/// `depths`, `widths` valid for `n` reads, `barriers` for `n - 1` (may be
/// null when `n == 1`); `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_wells_new(
    depths: *const f64,
    widths: *const f64,
    n: usize,
    barriers: *const f64,
    outer: TkOuterWalls,
    out: *mut *mut TkWellSystem,
) -> TkStatus {
    guard(|| {
        if n == 0 {
            return Err((TkStatus::InvalidArgument, "need at least one well".into()));
        }
        if depths.is_null() || widths.is_null() || (n > 1 && barriers.is_null()) {
            return Err(null("well arrays"));
        }
        let d = unsafe { std::slice::from_raw_parts(depths, n) };
        let w = unsafe { std::slice::from_raw_parts(widths, n) };
        let b = if n > 1 {
            unsafe { std::slice::from_raw_parts(barriers, n - 1) }.to_vec()
        } else {
            Vec::new()
        };
        let wells = d.iter().zip(w).map(|(&depth, &width)| Well { depth, width }).collect();
        let outer = match outer {
            TkOuterWalls::Infinite => OuterWalls::Infinite,
            TkOuterWalls::Finite => OuterWalls::Finite,
        };
        let ws = WellSystem::new(wells, b, outer).map_err(lib)?;
        unsafe { write_out(out, Box::into_raw(Box::new(TkWellSystem(ws))), "out") }
    })
}

/// # Safety
/// `ws` must be null or a live well-system handle.
#[no_mangle]
pub unsafe extern "C" fn tk_wells_free(ws: *mut TkWellSystem) {
    if !ws.is_null() {
        drop(unsafe { Box::from_raw(ws) });
    }
}

/// Bound levels (binding energies, ascending) on an energy grid of `grid`
/// points.
///
/// # Safety
/// `ws` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_wells_levels(ws: *const TkWellSystem, grid: usize, out: *mut *mut TkLevelSet) -> TkStatus {
    guard(|| {
        let ws = unsafe { as_ref(ws, "well system") }?;
        let set = bound_levels(&ws.0, grid).map_err(lib)?;
        unsafe { write_out(out, Box::into_raw(Box::new(TkLevelSet(set.levels))), "out") }
    })
}

/// # Safety
/// `s` must be a live level-set handle.
#[no_mangle]
pub unsafe extern "C" fn tk_levelset_len(s: *const TkLevelSet) -> usize {
    unsafe { s.as_ref() }.map_or(0, |s| s.0.len())
}

/// # Safety
/// `s` must be a live level-set handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_levelset_get(s: *const TkLevelSet, i: usize, out: *mut f64) -> TkStatus {
    guard(|| {
        let s = unsafe { as_ref(s, "level set") }?;
        let v = *s
            .0
            .get(i)
            .ok_or_else(|| (TkStatus::IndexOutOfRange, format!("level {i} of {}", s.0.len())))?;
        unsafe { write_out(out, v, "out") }
    })
}

/// # Safety
/// `s` must be null or a live level-set handle.
#[no_mangle]
pub unsafe extern "C" fn tk_levelset_free(s: *mut TkLevelSet) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Allowed bands of the periodic lattice built from `cell`.
///
/// # Safety
/// `cell` must be a live potential handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tk_band_structure(
    cell: *const TkPotential,
    e_lo: f64,
    e_hi: f64,
    grid: usize,
    out: *mut *mut TkBandSet,
) -> TkStatus {
    guard(|| {
        let cell = unsafe { as_ref(cell, "cell") }?;
        let set = band_structure(&cell.0, e_lo, e_hi, grid).map_err(lib)?;
        unsafe { write_out(out, Box::into_raw(Box::new(TkBandSet(set))), "out") }
    })
}

/// # Safety
/// `s` must be a live band-set handle.
#[no_mangle]
pub unsafe extern "C" fn tk_bandset_len(s: *const TkBandSet) -> usize {
    unsafe { s.as_ref() }.map_or(0, |s| s.0.bands.len())
}

/// Edges of band `i`; `clipped` is set when the band touches the window.
///
/// # Safety
/// `s` must be a live band-set handle; outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tk_bandset_get(
    s: *const TkBandSet,
    i: usize,
    lo: *mut f64,
    hi: *mut f64,
    clipped: *mut bool,
) -> TkStatus {
    guard(|| {
        let s = unsafe { as_ref(s, "band set") }?;
        let b = *s
            .0
            .bands
            .get(i)
            .ok_or_else(|| (TkStatus::IndexOutOfRange, format!("band {i} of {}", s.0.bands.len())))?;
        unsafe {
            write_out(lo, b.lo, "lo")?;
            write_out(hi, b.hi, "hi")?;
            write_out(clipped, b.clipped, "clipped")
        }
    })
}

/// # Safety
/// `s` must be null or a live band-set handle.
#[no_mangle]
pub unsafe extern "C" fn tk_bandset_free(s: *mut TkBandSet) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}
