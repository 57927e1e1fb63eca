//! C interface to `prefixsim`.
//!
//! Objects cross the boundary as opaque handles created by `ps_*_new`/`ps_*_from_*`
//! and released by the matching `ps_*_free`. Every fallible call returns a
//! [`PsStatus`] and writes its result through an out pointer; on failure the
//! message is available from [`ps_last_error_message`] on the same thread.
//! Bit strings are arrays of bytes, each 0 or 1.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use prefixsim::adhoc::thresholds::check_gap;
use prefixsim::adhoc::{test_ad_hoc, AdHocInstance, Verdict};
use prefixsim::bits::BitString;
use prefixsim::divergence::{kl_divergence, tv_distance};
use prefixsim::lab::expected_binomial_kl;
use prefixsim::oracle::PrefixOracle;
use prefixsim::rng::{tags, RandomStream};
use prefixsim::simulation::{init_simulation, SimulationState};
use prefixsim::tree::MarginalTree;
use prefixsim::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Capability = 3,
    Precondition = 4,
    Inconsistency = 5,
    Format = 6,
    Io = 7,
    Panic = 8,
}

/// A distribution over `{0,1}^n` given by its marginal tree.
pub struct PsTree(MarginalTree);

/// A lazy simulation over a tree, with its own sampling stream.
pub struct PsSimulation {
    state: SimulationState<MarginalTree>,
    rng: RandomStream,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PsStatus {
    match err {
        Error::Domain(_) => PsStatus::Domain,
        Error::Capability { .. } => PsStatus::Capability,
        Error::Precondition(_) => PsStatus::Precondition,
        Error::Inconsistency(_) => PsStatus::Inconsistency,
        Error::Format(_) | Error::Json(_) => PsStatus::Format,
        Error::Io(_) => PsStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PsStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            PsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn bits(p: *const u8, len: usize) -> Result<BitString, Failure> {
    let raw = slice(p, len, "bits")?;
    if let Some(b) = raw.iter().find(|&&b| b > 1) {
        return Err(Error::Domain(format!("bit value {b} is not 0 or 1")).into());
    }
    Ok(BitString::new(raw.iter().map(|&b| b == 1).collect()))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    *deref_mut(out, "out")? = value;
    Ok(())
}

/// The message of the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// A tree from its `2^n − 1` marginals in heap order (root first, children of
/// node `i` at `2i+1` and `2i+2`).
///
/// # Safety
/// `f` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_tree_from_table(n: usize, f: *const f64, len: usize, out: *mut *mut PsTree) -> PsStatus {
    guard(|| {
        let table = slice(f, len, "f")?.to_vec();
        let tree = MarginalTree::from_table(n, table)?;
        put(out, Box::into_raw(Box::new(PsTree(tree))))
    })
}

/// The uniform distribution over `{0,1}^n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_tree_uniform(n: usize, out: *mut *mut PsTree) -> PsStatus {
    guard(|| {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()).into());
        }
        put(out, Box::into_raw(Box::new(PsTree(MarginalTree::uniform(n)))))
    })
}

/// A tree from `{"n": ..., "f": {prefix: value}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_tree_from_json(json: *const c_char, out: *mut *mut PsTree) -> PsStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::Format(e.to_string()))?;
        put(out, Box::into_raw(Box::new(PsTree(MarginalTree::from_json(text)?))))
    })
}

/// # Safety
/// `tree` must come from this library and not be used afterwards. NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn ps_tree_free(tree: *mut PsTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Length `n` of the strings the tree is over; 0 for NULL.
///
/// # Safety
/// `tree` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_tree_n(tree: *const PsTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.n())
}

/// `μ(x)`.
///
/// # Safety
/// `tree` must be a live handle, `x` must point to `len` bytes, `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ps_tree_mass(tree: *const PsTree, x: *const u8, len: usize, out: *mut f64) -> PsStatus {
    guard(|| {
        let tree = deref(tree, "tree")?;
        put(out, tree.0.mass(&bits(x, len)?)?)
    })
}

/// Exact total variation distance (`n ≤ 24`).
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_tv_distance(a: *const PsTree, b: *const PsTree, out: *mut f64) -> PsStatus {
    guard(|| put(out, tv_distance(&deref(a, "a")?.0, &deref(b, "b")?.0)?))
}

/// Exact `D_KL(a‖b)` in bits (`n ≤ 24`), possibly infinite.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_kl_divergence(a: *const PsTree, b: *const PsTree, out: *mut f64) -> PsStatus {
    guard(|| put(out, kl_divergence(&deref(a, "a")?.0, &deref(b, "b")?.0)?))
}

/// Starts a lazy simulation at accuracy `delta` over a copy of `tree`.
/// `seed` keys the edge estimates and the sampling stream.
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_simulation_new(
    tree: *const PsTree,
    delta: f64,
    seed: u64,
    out: *mut *mut PsSimulation,
) -> PsStatus {
    guard(|| {
        let tree = deref(tree, "tree")?.0.clone();
        let state = init_simulation(PrefixOracle::new(tree), delta, seed)?;
        let rng = RandomStream::for_index(seed, tags::USER, 0);
        put(out, Box::into_raw(Box::new(PsSimulation { state, rng })))
    })
}

/// # Safety
/// `sim` must come from this library and not be used afterwards. NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn ps_simulation_free(sim: *mut PsSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Simulated mass of `x`.
///
/// # Safety
/// `sim` must be a live handle, `x` must point to `len` bytes, `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ps_simulation_query(sim: *mut PsSimulation, x: *const u8, len: usize, out: *mut f64) -> PsStatus {
    guard(|| {
        let sim = deref_mut(sim, "sim")?;
        put(out, sim.state.query(&bits(x, len)?)?)
    })
}

/// Draws from the simulated distribution. Writes `n` bytes to `x` and the
/// simulated mass to `p`.
///
/// # Safety
/// `sim` must be a live handle, `x` must have room for `len` bytes, `p` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_simulation_sample(sim: *mut PsSimulation, x: *mut u8, len: usize, p: *mut f64) -> PsStatus {
    guard(|| {
        let sim = deref_mut(sim, "sim")?;
        if len != sim.state.n() {
            return Err(Error::Domain(format!("buffer holds {len} bits, need {}", sim.state.n())).into());
        }
        if x.is_null() {
            return Err(Failure::Null("x"));
        }
        let (drawn, mass) = sim.state.sample(&mut sim.rng);
        for (i, &b) in drawn.bits().iter().enumerate() {
            *x.add(i) = b as u8;
        }
        put(p, mass)
    })
}

/// Conditional samples spent so far.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_simulation_budget(sim: *const PsSimulation, out: *mut u64) -> PsStatus {
    guard(|| put(out, deref(sim, "sim")?.state.budget().conditional_calls))
}

/// `E_{t∼Bin(m,p)}[D_KL(t/m, p)]` in bits, `1 ≤ m ≤ 64`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_expected_binomial_kl(m: u64, p: f64, out: *mut f64) -> PsStatus {
    guard(|| put(out, expected_binomial_kl(m, p)?))
}

/// Whether `(1−ε)p_H > (1+ε)p_L` at length `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_check_gap(n: f64, epsilon: f64, out: *mut bool) -> PsStatus {
    guard(|| put(out, check_gap(n, epsilon)?))
}

/// Runs the Poissonized tester on the hidden vector `p`. Writes whether it
/// accepted and how many draws it made.
///
/// # Safety
/// `p` must point to `len` doubles; `accept` and `draws` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_test_ad_hoc(
    p: *const f64,
    len: usize,
    delta: f64,
    r: f64,
    seed: u64,
    accept: *mut bool,
    draws: *mut u64,
) -> PsStatus {
    guard(|| {
        let mut inst = AdHocInstance::from_probabilities(slice(p, len, "p")?.to_vec())?;
        let out = test_ad_hoc(&mut inst, delta, r, &mut RandomStream::from_seed(seed))?;
        put(accept, out.verdict == Verdict::Accept)?;
        put(draws, out.loop_count)
    })
}
