//! C interface to `xychain`.
//!
//! Objects are opaque handles created by `*_new` and released by the
//! matching `*_free`. Every fallible call returns an [`XyStatus`]; on failure
//! [`xy_last_error`] describes the cause for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xychain::chain::{ChainParams, ChainPoint, Param};
use xychain::fisher::{saturation_from, FisherPoint};
use xychain::multiparam::MultiparamPoint;
use xychain::protocol::{
    adaptive_run_with, EstimatorGrid, Orientation, ProtocolConfig, ProtocolModel, ProtocolTrace,
};
use xychain::{Error, QuadratureConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XyStatus {
    Ok = 0,
    /// Output could not be written.
    Io = 1,
    InvalidInput = 2,
    /// Quadrature failure, critical point, divergence and similar.
    Numerical = 3,
    NullPointer = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XyParam {
    J = 0,
    Gamma = 1,
    D = 2,
}

impl From<XyParam> for Param {
    fn from(p: XyParam) -> Self {
        match p {
            XyParam::J => Param::J,
            XyParam::Gamma => Param::Gamma,
            XyParam::D => Param::D,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XyCorrelators {
    pub mz: f64,
    pub gxx: f64,
    pub gyy: f64,
    pub gzz: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XyFisher {
    /// Classical FI of the σᶻ⊗σᶻ measurement.
    pub f: f64,
    /// Quantum FI.
    pub h: f64,
    /// Saturation F/H, with the limit taken at degenerate points.
    pub s: f64,
    pub singular: bool,
    pub s_from_limit: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XySloppiness {
    pub det: f64,
    /// Descending.
    pub eigenvalues: [f64; 3],
    pub condition: f64,
    pub relative_det: f64,
    pub singular: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyProtocolConfig {
    pub j_true: f64,
    pub gamma: f64,
    pub d: f64,
    pub j_guess: f64,
    pub shots: u64,
    pub rounds: usize,
    /// Grid of |j| for the estimator.
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
    /// Field antiparallel to the estimate, so that J/B < 0.
    pub opposed: bool,
    pub sign_switch: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XyRound {
    pub field: f64,
    /// Outcomes ↑↑, ↑↓, ↓↑, ↓↓.
    pub counts: [u64; 4],
    pub estimate: f64,
    pub variance: f64,
    pub opposed: bool,
    pub at_edge: bool,
    pub degenerate: bool,
}

/// Evaluated chain at one parameter point.
pub struct XyChain {
    point: ChainPoint,
    quad: QuadratureConfig,
}

/// Likelihood tables for one protocol configuration.
pub struct XyProtocol {
    cfg: ProtocolConfig,
    model: ProtocolModel,
}

pub struct XyTrace {
    trace: ProtocolTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> XyStatus {
    match e.exit_code() {
        1 => XyStatus::Io,
        2 => XyStatus::InvalidInput,
        _ => XyStatus::Numerical,
    }
}

fn guard<F>(f: F) -> XyStatus
where
    F: FnOnce() -> Result<(), XyStatus>,
{
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => XyStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            XyStatus::Panic
        }
    }
}

fn check<T>(r: xychain::Result<T>) -> Result<T, XyStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), XyStatus> {
    if p.is_null() {
        set_error(format!("{what} is NULL"));
        return Err(XyStatus::NullPointer);
    }
    Ok(())
}

fn quad_from(tol: f64) -> xychain::Result<QuadratureConfig> {
    if tol > 0.0 {
        QuadratureConfig::with_tol(tol)
    } else {
        Ok(QuadratureConfig::default())
    }
}

/// Message for the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next call into this library from the
/// same thread.
#[no_mangle]
pub extern "C" fn xy_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn xy_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Evaluates the chain at `(J, gamma, D)`.
///
/// `tol <= 0` selects the default quadrature tolerance.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn xy_chain_new(
    j: f64,
    gamma: f64,
    d: f64,
    tol: f64,
    out: *mut *mut XyChain,
) -> XyStatus {
    guard(|| {
        non_null(out, "out")?;
        let quad = check(quad_from(tol))?;
        let params = check(ChainParams::new(j, gamma, d))?;
        let point = check(ChainPoint::evaluate(&params, &quad))?;
        *out = Box::into_raw(Box::new(XyChain { point, quad }));
        Ok(())
    })
}

/// # Safety
/// `chain` must be NULL or a handle from [`xy_chain_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xy_chain_free(chain: *mut XyChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// `chain` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn xy_chain_correlators(
    chain: *const XyChain,
    out: *mut XyCorrelators,
) -> XyStatus {
    guard(|| {
        non_null(chain, "chain")?;
        non_null(out, "out")?;
        let c = (*chain).point.correlators;
        *out = XyCorrelators {
            mz: c.mz,
            gxx: c.gxx,
            gyy: c.gyy,
            gzz: c.gzz,
        };
        Ok(())
    })
}

/// Two-spin density matrix, row-major in the basis |00⟩, |01⟩, |10⟩, |11⟩.
///
/// # Safety
/// `chain` must be a live handle and `out` valid for 16 doubles.
#[no_mangle]
pub unsafe extern "C" fn xy_chain_state(chain: *const XyChain, out: *mut f64) -> XyStatus {
    guard(|| {
        non_null(chain, "chain")?;
        non_null(out, "out")?;
        let m = check((*chain).point.checked_state())?.matrix();
        let out = std::slice::from_raw_parts_mut(out, 16);
        for r in 0..4 {
            for c in 0..4 {
                out[4 * r + c] = m[(r, c)];
            }
        }
        Ok(())
    })
}

/// Classical and quantum Fisher information about `wrt`.
///
/// # Safety
/// `chain` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn xy_chain_fisher(
    chain: *const XyChain,
    wrt: XyParam,
    out: *mut XyFisher,
) -> XyStatus {
    guard(|| {
        non_null(chain, "chain")?;
        non_null(out, "out")?;
        let chain = &*chain;
        let wrt = Param::from(wrt);
        let fp = check(FisherPoint::at(&chain.point, wrt))?;
        let s = check(saturation_from(&chain.point.params, &fp, wrt, &chain.quad))?;
        *out = XyFisher {
            f: fp.f,
            h: fp.h,
            s: s.value,
            singular: fp.singular,
            s_from_limit: s.from_limit,
        };
        Ok(())
    })
}

/// QFI matrix, Uhlmann matrix and spectrum summary. Either matrix pointer
/// may be NULL; matrices are row-major 3×3 in the order J, gamma, D.
///
/// # Safety
/// `chain` must be a live handle; non-NULL outputs must be writable, the
/// matrices for 9 doubles each.
#[no_mangle]
pub unsafe extern "C" fn xy_chain_qfim(
    chain: *const XyChain,
    qfim: *mut f64,
    uhlmann: *mut f64,
    sloppiness: *mut XySloppiness,
) -> XyStatus {
    guard(|| {
        non_null(chain, "chain")?;
        let m = check(MultiparamPoint::at(&(*chain).point))?;
        for (dst, src) in [(qfim, &m.qfim.entries), (uhlmann, &m.uhlmann.entries)] {
            if !dst.is_null() {
                let dst = std::slice::from_raw_parts_mut(dst, 9);
                for r in 0..3 {
                    dst[3 * r..3 * r + 3].copy_from_slice(&src[r]);
                }
            }
        }
        if !sloppiness.is_null() {
            let s = &m.sloppiness;
            *sloppiness = XySloppiness {
                det: s.det,
                eigenvalues: s.eigenvalues,
                condition: s.condition,
                relative_det: s.relative_det,
                singular: s.singular,
            };
        }
        Ok(())
    })
}

/// Builds the likelihood tables for a protocol configuration.
///
/// # Safety
/// `cfg` must point to a valid configuration and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn xy_protocol_new(
    cfg: *const XyProtocolConfig,
    tol: f64,
    out: *mut *mut XyProtocol,
) -> XyStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        let c = &*cfg;
        let cfg = ProtocolConfig {
            grid: EstimatorGrid {
                lo: c.grid_lo,
                hi: c.grid_hi,
                points: c.grid_points,
            },
            orientation: if c.opposed {
                Orientation::Opposed
            } else {
                Orientation::Aligned
            },
            sign_switch: c.sign_switch,
            ..ProtocolConfig::new(c.j_true, c.gamma, c.d, c.j_guess, c.shots, c.rounds)
        };
        check(cfg.validate())?;
        let model = check(cfg.model(&check(quad_from(tol))?))?;
        *out = Box::into_raw(Box::new(XyProtocol { cfg, model }));
        Ok(())
    })
}

/// # Safety
/// `protocol` must be NULL or a handle from [`xy_protocol_new`].
#[no_mangle]
pub unsafe extern "C" fn xy_protocol_free(protocol: *mut XyProtocol) {
    if !protocol.is_null() {
        drop(Box::from_raw(protocol));
    }
}

/// Runs the adaptive protocol with `seed`.
///
/// # Safety
/// `protocol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn xy_protocol_run(
    protocol: *const XyProtocol,
    seed: u64,
    out: *mut *mut XyTrace,
) -> XyStatus {
    guard(|| {
        non_null(protocol, "protocol")?;
        non_null(out, "out")?;
        let p = &*protocol;
        let trace = check(adaptive_run_with(
            &p.model,
            &ProtocolConfig { seed, ..p.cfg },
        ))?;
        *out = Box::into_raw(Box::new(XyTrace { trace }));
        Ok(())
    })
}

/// # Safety
/// `trace` must be NULL or a handle from [`xy_protocol_run`].
#[no_mangle]
pub unsafe extern "C" fn xy_trace_free(trace: *mut XyTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of recorded rounds; 0 for NULL.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xy_trace_len(trace: *const XyTrace) -> usize {
    if trace.is_null() {
        0
    } else {
        (*trace).trace.rounds.len()
    }
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn xy_trace_round(
    trace: *const XyTrace,
    index: usize,
    out: *mut XyRound,
) -> XyStatus {
    guard(|| {
        non_null(trace, "trace")?;
        non_null(out, "out")?;
        let rounds = &(*trace).trace.rounds;
        let Some(r) = rounds.get(index) else {
            set_error(format!(
                "round {index} out of range ({} rounds)",
                rounds.len()
            ));
            return Err(XyStatus::InvalidInput);
        };
        *out = XyRound {
            field: r.field,
            counts: r.counts,
            estimate: r.estimate,
            variance: r.variance_est,
            opposed: r.orientation == Orientation::Opposed,
            at_edge: r.at_edge,
            degenerate: r.degenerate,
        };
        Ok(())
    })
}

/// Final estimate and variance; returns whether the run converged.
///
/// # Safety
/// `trace` must be a live handle; `estimate` and `variance` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn xy_trace_result(
    trace: *const XyTrace,
    estimate: *mut f64,
    variance: *mut f64,
) -> bool {
    if trace.is_null() {
        return false;
    }
    let t = &(*trace).trace;
    if !estimate.is_null() {
        *estimate = t.final_estimate;
    }
    if !variance.is_null() {
        *variance = t.final_variance;
    }
    t.converged
}
