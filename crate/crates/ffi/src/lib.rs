//! C ABI over `netgame`.
//!
//! Objects are opaque handles created by the `ng_network_*` and `ng_game_*`
//! constructors and released with the matching `_free`. Every fallible call returns
//! an [`NgStatus`]; on failure, `ng_last_error` gives a message that stays
//! valid until the next failing call on the same thread. Agents and
//! coordinates are 0-based here. Profiles are flat arrays of length
//! `ng_game_dim`, agent-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use netgame::cli::GameConfig;
use netgame::diagnostics::{certify_with, CertifyOptions, GuaranteeKind};
use netgame::nalgebra::{DMatrix, DVector};
use netgame::network::DEFAULT_SYM_TOL;
use netgame::sensitivity::{equilibrium_sensitivity, ParamSelector, SensitivityOptions};
use netgame::solvers::{self, DynamicsConfig, DynamicsMode, Terminal};
use netgame::{Error, GameSpec, Network};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed configuration or invalid game data.
    Config = 3,
    /// Numerical or regularity failure.
    Numerical = 4,
    NonConvergence = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgDynamicsMode {
    Simultaneous = 0,
    Sequential = 1,
    /// `param` is the relaxation weight in (0, 1].
    Relaxed = 2,
    /// `param` is the RK4 step.
    ContinuousRk4 = 3,
    /// `param` is the initial projection step.
    Projection = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgTerminal {
    Converged = 0,
    MaxIters = 1,
    Oscillation = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgParameter {
    /// Linear-quadratic intercepts.
    Intercept = 0,
    /// Linear-quadratic linear cost term.
    LinearTerm = 1,
    /// Races peer-effect strength.
    Gamma = 2,
    /// Multi-activity intercepts, interleaved per agent.
    ActivityIntercepts = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NgSpectral {
    pub spectral_norm: f64,
    pub infinity_norm: f64,
    /// NaN when the network is not symmetric.
    pub min_eigenvalue: f64,
    pub is_symmetric: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NgCertificate {
    pub kappa1: f64,
    pub kappa2: f64,
    pub alpha_2: f64,
    pub alpha_inf: f64,
    /// NaN when the network is not symmetric.
    pub alpha_min: f64,
    pub existence_uniqueness: bool,
    pub continuous_br_convergence: bool,
    pub simultaneous_br_convergence: bool,
    pub sequential_br_convergence: bool,
    pub lipschitz_continuity: bool,
    pub potential: bool,
}

/// Opaque network handle.
pub struct NgNetwork(Network);

/// Opaque game handle.
pub struct NgGame(GameSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NgStatus {
    match e {
        Error::Config(_)
        | Error::InvalidNetwork(_)
        | Error::InvalidGame(_)
        | Error::Infeasible(_)
        | Error::Unsupported(_)
        | Error::Io(_) => NgStatus::Config,
        Error::Dimension { .. } => NgStatus::InvalidArgument,
        Error::NotConverged(_) => NgStatus::NonConvergence,
        _ => NgStatus::Numerical,
    }
}

struct Fail(NgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NgStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NgStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {m}"));
            NgStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn game<'a>(g: *const NgGame) -> Result<&'a GameSpec, Fail> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null("game"))
}

fn check_len(what: &str, expected: usize, got: usize) -> Result<(), Fail> {
    if expected == got {
        Ok(())
    } else {
        Err(Fail(
            NgStatus::InvalidArgument,
            format!("{what}: expected length {expected}, got {got}"),
        ))
    }
}

/// Message of the last failing call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ng_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ng_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Network from a row-major `n × n` weight matrix.
///
/// # Safety
/// `weights` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ng_network_from_dense(
    weights: *const f64,
    n: usize,
    out: *mut *mut NgNetwork,
) -> NgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = slice(weights, n * n, "weights")?;
        let net = Network::new(DMatrix::from_row_slice(n, n, w))?;
        *out = Box::into_raw(Box::new(NgNetwork(net)));
        Ok(())
    })
}

/// Network from a JSON generator description such as
/// `{"kind": "complete", "n": 4}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ng_network_from_json(json: *const c_char, out: *mut *mut NgNetwork) -> NgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = serde_json::from_str(string(json, "json")?)
            .map_err(|e| Fail(NgStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(NgNetwork(Network::generate(&kind)?)));
        Ok(())
    })
}

/// # Safety
/// `net` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ng_network_free(net: *mut NgNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle and `n_agents` writable.
#[no_mangle]
pub unsafe extern "C" fn ng_network_size(net: *const NgNetwork, n_agents: *mut usize) -> NgStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("network"))?;
        *n_agents.as_mut().ok_or_else(|| null("n_agents"))? = net.0.n_agents();
        Ok(())
    })
}

/// Spectral measures; `sym_tol <= 0` selects the default tolerance.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ng_network_spectral(
    net: *const NgNetwork,
    sym_tol: f64,
    out: *mut NgSpectral,
) -> NgStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("network"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let tol = if sym_tol > 0.0 { sym_tol } else { DEFAULT_SYM_TOL };
        let sm = net.0.spectral_measures(tol);
        *out = NgSpectral {
            spectral_norm: sm.spectral_norm,
            infinity_norm: sm.infinity_norm,
            min_eigenvalue: sm.min_eigenvalue.unwrap_or(f64::NAN),
            is_symmetric: sm.is_symmetric,
        };
        Ok(())
    })
}

/// Scalar linear-quadratic game `½x² + (kⁱzⁱ − cⁱ)x` on `x ≥ 0`. The
/// network is copied.
///
/// # Safety
/// `k` and `intercept` must point to one double per agent.
#[no_mangle]
pub unsafe extern "C" fn ng_game_scalar_lq(
    net: *const NgNetwork,
    k: *const f64,
    intercept: *const f64,
    out: *mut *mut NgGame,
) -> NgStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("network"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = net.0.n_agents();
        let g = netgame::games::scalar_lq(net.0.clone(), slice(k, n, "k")?, slice(intercept, n, "intercept")?)?;
        *out = Box::into_raw(Box::new(NgGame(g)));
        Ok(())
    })
}

/// Races with response `γz(bⁱ − z)` on `[aⁱ, bⁱ]`.
///
/// # Safety
/// `lower` and `upper` must point to one double per agent.
#[no_mangle]
pub unsafe extern "C" fn ng_game_races(
    net: *const NgNetwork,
    gamma: f64,
    lower: *const f64,
    upper: *const f64,
    out: *mut *mut NgGame,
) -> NgStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("network"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = net.0.n_agents();
        let g = netgame::games::races(net.0.clone(), gamma, slice(lower, n, "lower")?, slice(upper, n, "upper")?)?;
        *out = Box::into_raw(Box::new(NgGame(g)));
        Ok(())
    })
}

/// Game from the JSON `game` object of a run configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ng_game_from_json(json: *const c_char, out: *mut *mut NgGame) -> NgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg: GameConfig = serde_json::from_str(string(json, "json")?)
            .map_err(|e| Fail(NgStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(NgGame(cfg.build()?)));
        Ok(())
    })
}

/// # Safety
/// `g` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ng_game_free(g: *mut NgGame) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Profile length `N·n`.
///
/// # Safety
/// `g` must be a live handle and `dim` writable.
#[no_mangle]
pub unsafe extern "C" fn ng_game_dim(g: *const NgGame, dim: *mut usize) -> NgStatus {
    guard(|| {
        let g = game(g)?;
        *dim.as_mut().ok_or_else(|| null("dim"))? = g.dim();
        Ok(())
    })
}

/// Margins and guarantees of the certificate report.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ng_game_certify(g: *const NgGame, seed: u64, out: *mut NgCertificate) -> NgStatus {
    guard(|| {
        let g = game(g)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = certify_with(
            g,
            CertifyOptions {
                seed,
                ..Default::default()
            },
        )?;
        *out = NgCertificate {
            kappa1: r.kappa.kappa1,
            kappa2: r.kappa.kappa2,
            alpha_2: r.margins.alpha_2,
            alpha_inf: r.margins.alpha_inf,
            alpha_min: r.margins.alpha_min.unwrap_or(f64::NAN),
            existence_uniqueness: r.has(GuaranteeKind::ExistenceUniqueness),
            continuous_br_convergence: r.has(GuaranteeKind::ContinuousBrConvergence),
            simultaneous_br_convergence: r.has(GuaranteeKind::DiscreteSimultaneousBrConvergence),
            sequential_br_convergence: r.has(GuaranteeKind::DiscreteSequentialBrConvergence),
            lipschitz_continuity: r.has(GuaranteeKind::LipschitzContinuity),
            potential: r.potential.is_potential(),
        };
        Ok(())
    })
}

/// Full certificate report as JSON; release with `ng_string_free`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ng_game_certify_json(g: *const NgGame, seed: u64, out: *mut *mut c_char) -> NgStatus {
    guard(|| {
        let g = game(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = certify_with(
            g,
            CertifyOptions {
                seed,
                ..Default::default()
            },
        )?;
        let text = serde_json::to_string(&r).map_err(|e| Fail(NgStatus::Numerical, e.to_string()))?;
        *out = CString::new(text).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// Natural residual `‖x − Π_X[x − F(x)]‖₂` of a feasible profile.
///
/// # Safety
/// `x` must point to `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ng_game_residual(g: *const NgGame, x: *const f64, len: usize, out: *mut f64) -> NgStatus {
    guard(|| {
        let g = game(g)?;
        check_len("profile", g.dim(), len)?;
        let x = DVector::from_column_slice(slice(x, len, "x")?);
        *out.as_mut().ok_or_else(|| null("out"))? = g.natural_residual(&x)?;
        Ok(())
    })
}

/// Equilibrium near `x0` (or the centre default start when `x0` is null).
///
/// # Safety
/// `x0`, when non-null, and `x_out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ng_game_find_equilibrium(
    g: *const NgGame,
    x0: *const f64,
    tol: f64,
    x_out: *mut f64,
    len: usize,
) -> NgStatus {
    guard(|| {
        let g = game(g)?;
        check_len("profile", g.dim(), len)?;
        if !(tol > 0.0) {
            return Err(Fail(NgStatus::InvalidArgument, format!("tol must be positive, got {tol}")));
        }
        let start = if x0.is_null() {
            solvers::default_initial_conditions(g)?.swap_remove(1)
        } else {
            DVector::from_column_slice(slice(x0, len, "x0")?)
        };
        let x = solvers::find_equilibrium(g, &start, tol)?;
        slice_mut(x_out, len, "x_out")?.copy_from_slice(x.as_slice());
        Ok(())
    })
}

/// Runs best-response or projection dynamics from `x0`, writing the final
/// profile to `x_out`. Oscillation and exhausted budgets are reported
/// through `terminal`, not the status.
///
/// # Safety
/// `x0` and `x_out` must point to `len` doubles; `terminal` and
/// `iterations` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ng_game_run_dynamics(
    g: *const NgGame,
    mode: NgDynamicsMode,
    param: f64,
    x0: *const f64,
    len: usize,
    max_iters: usize,
    residual_tol: f64,
    x_out: *mut f64,
    terminal: *mut NgTerminal,
    iterations: *mut usize,
) -> NgStatus {
    guard(|| {
        let g = game(g)?;
        check_len("profile", g.dim(), len)?;
        let mode = match mode {
            NgDynamicsMode::Simultaneous => DynamicsMode::DiscreteSimultaneous,
            NgDynamicsMode::Sequential => DynamicsMode::DiscreteSequential,
            NgDynamicsMode::Relaxed => DynamicsMode::DiscreteRelaxed { tau: param },
            NgDynamicsMode::ContinuousRk4 => DynamicsMode::ContinuousRk4 { step: param },
            NgDynamicsMode::Projection => DynamicsMode::Projection {
                step: param,
                adaptive: true,
            },
        };
        let mut cfg = DynamicsConfig::new(mode);
        cfg.max_iters = max_iters;
        cfg.residual_tol = residual_tol;
        cfg.record_every = max_iters.max(1);
        cfg.validate().map_err(|e| Fail(NgStatus::InvalidArgument, e.to_string()))?;
        let t = solvers::run_dynamics(g, &DVector::from_column_slice(slice(x0, len, "x0")?), &cfg)?;
        slice_mut(x_out, len, "x_out")?.copy_from_slice(t.final_profile().as_slice());
        *terminal.as_mut().ok_or_else(|| null("terminal"))? = match t.terminal {
            Terminal::Converged => NgTerminal::Converged,
            Terminal::MaxIters => NgTerminal::MaxIters,
            Terminal::OscillationDetected => NgTerminal::Oscillation,
        };
        *iterations.as_mut().ok_or_else(|| null("iterations"))? = t.iterations;
        Ok(())
    })
}

/// `∇_y x*` at the equilibrium `xstar`, row-major with one row per
/// profile coordinate. Call with `out = NULL` to query `n_params` only.
///
/// # Safety
/// `xstar` must point to `len` doubles; `out`, when non-null, to
/// `len * out_cols` doubles; `n_params` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ng_game_sensitivity(
    g: *const NgGame,
    parameter: NgParameter,
    xstar: *const f64,
    len: usize,
    out: *mut f64,
    out_cols: usize,
    n_params: *mut usize,
) -> NgStatus {
    guard(|| {
        let g = game(g)?;
        check_len("profile", g.dim(), len)?;
        let sel = match parameter {
            NgParameter::Intercept => ParamSelector::Intercept,
            NgParameter::LinearTerm => ParamSelector::LinearTerm,
            NgParameter::Gamma => ParamSelector::Gamma,
            NgParameter::ActivityIntercepts => ParamSelector::ActivityIntercepts,
        };
        let p = netgame::sensitivity::parameters(g, sel)?.len();
        *n_params.as_mut().ok_or_else(|| null("n_params"))? = p;
        if out.is_null() {
            return Ok(());
        }
        check_len("output columns", p, out_cols)?;
        let x = DVector::from_column_slice(slice(xstar, len, "xstar")?);
        let res = equilibrium_sensitivity(g, &x, sel, SensitivityOptions::default())?;
        let dst = slice_mut(out, len * p, "out")?;
        for r in 0..len {
            for c in 0..p {
                dst[r * p + c] = res.grad_y_xstar[(r, c)];
            }
        }
        Ok(())
    })
}

/// Empty string helper for callers that want to reset the error slot.
#[no_mangle]
pub extern "C" fn ng_clear_error() {
    set_error(String::new());
}

