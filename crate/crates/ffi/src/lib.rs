//! C ABI over the monfer library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`MonferStatus`]; on failure the message is kept per thread and read
//! back with [`monfer_last_error`]. Output arrays are caller-allocated: a
//! call given too little room reports the required length and returns
//! `MONFER_STATUS_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use monfer::lattice::{Geometry, Lattice, SubsystemMask};
use monfer::observables::{entanglement_entropy, CorrelationMatrix};
use monfer::rmt::gap_ratios;
use monfer::scaling::{digamma, page_law_density};
use monfer::spectrum::entanglement_hamiltonian;
use monfer::trajectory::{EvolutionConfig, InitialState, Propagator, TrajectoryState};
use monfer::Error;

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonferStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    InsufficientData = 4,
    BufferTooSmall = 5,
    Io = 6,
    Panic = 7,
}

impl From<&Error> for MonferStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidLattice(_)
            | Error::InvalidMask(_)
            | Error::InvalidParameter { .. }
            | Error::Config(_) => MonferStatus::InvalidArgument,
            Error::NotNormalized(_)
            | Error::Orthonormalization { .. }
            | Error::Eigen(_)
            | Error::BrokenCorrelation { .. }
            | Error::FitFailed(_) => MonferStatus::Numerical,
            Error::InsufficientData(_) | Error::Incomplete(_) => MonferStatus::InsufficientData,
            Error::Format { .. } | Error::Io { .. } => MonferStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(MonferStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MonferStatus::from(&e), e.to_string())
    }
}

fn fail<T>(status: MonferStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MonferStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MonferStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            MonferStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(MonferStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .map_or_else(|| fail(MonferStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn string(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return fail(MonferStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .or_else(|_| fail(MonferStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(MonferStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `src` into the caller's buffer, or reports the needed length.
unsafe fn copy_out(src: &[f64], out: *mut f64, capacity: usize, out_len: *mut usize) -> Result<(), Failure> {
    *deref_mut(out_len, "out_len")? = src.len();
    if capacity < src.len() {
        return fail(
            MonferStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", src.len()),
        );
    }
    if !src.is_empty() {
        if out.is_null() {
            return fail(MonferStatus::NullPointer, "output buffer is null");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    *deref_mut(out, "out")? = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn monfer_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn monfer_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Periodic hypercubic lattice.
pub struct MonferLattice(Lattice);

/// Set of sites defining a subsystem.
pub struct MonferMask(SubsystemMask);

/// Gaussian trajectory with its evolution parameters.
pub struct MonferTrajectory {
    state: TrajectoryState,
    config: EvolutionConfig,
    propagator: Propagator,
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn monfer_lattice_new(dim: usize, size: usize, out: *mut *mut MonferLattice) -> MonferStatus {
    guard(|| put(out, MonferLattice(Lattice::new(dim, size)?)))
}

/// # Safety
/// `lattice` must come from `monfer_lattice_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn monfer_lattice_free(lattice: *mut MonferLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// # Safety
/// `lattice` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn monfer_lattice_num_sites(lattice: *const MonferLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.0.num_sites())
}

/// Subsystem from a geometry tag: `halfcut`, `checkerboard` or
/// `strip<width>[@<offset>]`.
///
/// # Safety
/// `lattice` must be live, `geometry` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn monfer_mask_new(
    lattice: *const MonferLattice,
    geometry: *const c_char,
    out: *mut *mut MonferMask,
) -> MonferStatus {
    guard(|| {
        let lat = deref(lattice, "lattice")?;
        let g = Geometry::parse(&string(geometry, "geometry")?)?;
        put(out, MonferMask(SubsystemMask::new(&lat.0, g)?))
    })
}

/// # Safety
/// `mask` must come from `monfer_mask_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn monfer_mask_free(mask: *mut MonferMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// # Safety
/// `mask` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn monfer_mask_len(mask: *const MonferMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.len())
}

/// Half-filled trajectory at monitoring rate `gamma` with step `dt`.
/// `initial` is `random_gaussian` or `neel`. Trajectory `id` of master
/// seed `seed` gives the same noise as the command-line runs.
///
/// # Safety
/// `lattice` must be live, `initial` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn monfer_trajectory_new(
    lattice: *const MonferLattice,
    gamma: f64,
    dt: f64,
    initial: *const c_char,
    seed: u64,
    id: u64,
    out: *mut *mut MonferTrajectory,
) -> MonferStatus {
    guard(|| {
        let lat = &deref(lattice, "lattice")?.0;
        let init = InitialState::parse(&string(initial, "initial")?)?;
        let mut config = EvolutionConfig::new(gamma, lat);
        config.dt = dt;
        config.initial = init;
        config.validate()?;
        let propagator = Propagator::new(lat, dt)?;
        let state = TrajectoryState::new(lat, init, seed, id)?;
        put(
            out,
            MonferTrajectory {
                state,
                config,
                propagator,
            },
        )
    })
}

/// # Safety
/// `traj` must come from `monfer_trajectory_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn monfer_trajectory_free(traj: *mut MonferTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Advances by `steps` time steps.
///
/// # Safety
/// `traj` must be live.
#[no_mangle]
pub unsafe extern "C" fn monfer_trajectory_step(traj: *mut MonferTrajectory, steps: u64) -> MonferStatus {
    guard(|| {
        let t = deref_mut(traj, "trajectory")?;
        t.state.evolve(&t.config, &t.propagator, steps)?;
        Ok(())
    })
}

/// # Safety
/// `traj` must be live or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn monfer_trajectory_time(traj: *const MonferTrajectory) -> f64 {
    traj.as_ref().map_or(f64::NAN, |t| t.state.time())
}

/// Site occupations `<n_l>`.
///
/// # Safety
/// `traj` must be live; `out` must hold `capacity` doubles; `out_len` valid.
#[no_mangle]
pub unsafe extern "C" fn monfer_trajectory_occupations(
    traj: *const MonferTrajectory,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> MonferStatus {
    guard(|| copy_out(&deref(traj, "trajectory")?.state.occupations(), out, capacity, out_len))
}

/// Von Neumann entanglement entropy of `mask`.
///
/// # Safety
/// Handles must be live and built on the same lattice; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn monfer_trajectory_entropy(
    traj: *const MonferTrajectory,
    mask: *const MonferMask,
    out: *mut f64,
) -> MonferStatus {
    guard(|| {
        let s = entanglement_entropy(&deref(traj, "trajectory")?.state, &deref(mask, "mask")?.0)?;
        *deref_mut(out, "out")? = s;
        Ok(())
    })
}

/// Entanglement-Hamiltonian single-particle energies of `mask`, ascending.
/// Saturated levels are included at the clamp energy; their number is
/// written to `out_saturated` when it is not null.
///
/// # Safety
/// Handles must be live; `out` must hold `capacity` doubles; `out_len`
/// valid; `out_saturated` valid or null.
#[no_mangle]
pub unsafe extern "C" fn monfer_trajectory_spectrum(
    traj: *const MonferTrajectory,
    mask: *const MonferMask,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
    out_saturated: *mut usize,
) -> MonferStatus {
    guard(|| {
        let g = CorrelationMatrix::new(&deref(traj, "trajectory")?.state, &deref(mask, "mask")?.0)?;
        let spec = entanglement_hamiltonian(&g, false)?;
        if let Some(s) = out_saturated.as_mut() {
            *s = spec.saturated_count();
        }
        copy_out(spec.energies(), out, capacity, out_len)
    })
}

/// Mean of `min(r, 1/r)` over one ascending spectrum.
///
/// # Safety
/// `levels` must hold `n` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn monfer_mean_gap_ratio(levels: *const f64, n: usize, out: *mut f64) -> MonferStatus {
    guard(|| {
        let r = gap_ratios(slice(levels, n, "levels")?)?;
        match r.mean_tilde() {
            Some(m) => {
                *deref_mut(out, "out")? = m;
                Ok(())
            }
            None => fail(MonferStatus::InsufficientData, "no non-degenerate spacing pair"),
        }
    })
}

/// Average entanglement entropy of a subsystem of `l` sites in a random
/// Gaussian state on `size` sites.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn monfer_page_law_density(l: usize, size: usize, out: *mut f64) -> MonferStatus {
    guard(|| {
        *deref_mut(out, "out")? = page_law_density(l, size)?;
        Ok(())
    })
}

/// Digamma function for `z > 0`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn monfer_digamma(z: f64, out: *mut f64) -> MonferStatus {
    guard(|| {
        *deref_mut(out, "out")? = digamma(z)?;
        Ok(())
    })
}
