//! C interface to `rgv_jscc`.
//!
//! Every function returns an [`RgvStatus`]. On failure a message is kept per
//! thread and can be read with [`rgv_last_error_message`]. Objects are opaque
//! handles released with their `_free` function; strings returned by the
//! library are released with [`rgv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rgv_jscc::cli::config::{Experiment, ExperimentConfig};
use rgv_jscc::cli::CONSTRUCT_STREAM;
use rgv_jscc::codebook::{construct_traced, verify_min_distance, Codebook};
use rgv_jscc::exponents::{
    self as exponents, random_coding_exponent, source_reliability, Channel, SolverSpec, SourceSpec,
};
use rgv_jscc::rng::trial_rng;
use rgv_jscc::sim::{estimate_error_probability, SimMode};
use rgv_jscc::types::Pmf;
use rgv_jscc::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RgvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or inconsistent configuration.
    Config = 3,
    /// Invalid numeric argument (pmf, channel, index).
    InvalidArgument = 4,
    /// A codeword draw had no admissible sequence.
    Infeasible = 5,
    /// An enumeration exceeded its cap.
    TooLarge = 6,
    /// A codebook text could not be parsed.
    Format = 7,
    /// The library panicked; the handle arguments should be discarded.
    Panic = 8,
}

/// Simulation mode for [`rgv_estimate_error`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RgvSimMode {
    /// One codebook for all trials.
    Fixed = 0,
    /// A new codebook per trial.
    Fresh = 1,
}

/// Monte Carlo error estimate with a Clopper-Pearson 95% interval.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RgvErrorEstimate {
    pub trials: u64,
    pub errors: u64,
    pub ties: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Parsed experiment: code configuration, channel and solver.
pub struct RgvExperiment {
    inner: Experiment,
}

/// A constructed or parsed codebook.
pub struct RgvCodebook {
    inner: Codebook,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> RgvStatus {
    match e {
        Error::Config(_) | Error::InvalidConfig(_) => RgvStatus::Config,
        Error::EmptyFeasibleSet { .. } | Error::RejectionBudgetExceeded { .. } => {
            RgvStatus::Infeasible
        }
        Error::EnumerationTooLarge { .. } => RgvStatus::TooLarge,
        Error::CodebookFormat { .. } => RgvStatus::Format,
        _ => RgvStatus::InvalidArgument,
    }
}

struct Failure(RgvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RgvStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records its error and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RgvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RgvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            RgvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(RgvStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn solver_for(grid: u64) -> SolverSpec {
    if grid == 0 {
        SolverSpec::continuous()
    } else {
        SolverSpec::discrete(grid)
    }
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rgv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rgv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rgv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML experiment description. Relative table paths resolve
/// against the working directory.
///
/// # Safety
/// `toml` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_experiment_from_toml(
    toml: *const c_char,
    out: *mut *mut RgvExperiment,
) -> RgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(toml, "toml")?;
        let inner = ExperimentConfig::from_toml(text)?.build(None)?;
        *out = Box::into_raw(Box::new(RgvExperiment { inner }));
        Ok(())
    })
}

/// # Safety
/// `exp` must be null or a live handle from [`rgv_experiment_from_toml`].
#[no_mangle]
pub unsafe extern "C" fn rgv_experiment_free(exp: *mut RgvExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Number of source messages `|V|^k`.
///
/// # Safety
/// `exp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_experiment_num_messages(
    exp: *const RgvExperiment,
    out: *mut u64,
) -> RgvStatus {
    guard(|| {
        let exp = ref_arg(exp, "exp")?;
        let n = exp.inner.code.num_messages();
        *out_arg(out, "out")? = u64::try_from(n)
            .map_err(|_| Failure(RgvStatus::TooLarge, "message count exceeds u64".into()))?;
        Ok(())
    })
}

/// Builds a codebook from `seed`. Equal seeds give the same codebook as the
/// `construct` command of the command-line tool.
///
/// # Safety
/// `exp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_codebook_construct(
    exp: *const RgvExperiment,
    seed: u64,
    out: *mut *mut RgvCodebook,
) -> RgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let exp = ref_arg(exp, "exp")?;
        let mut rng = trial_rng(seed, CONSTRUCT_STREAM);
        let (inner, _) = construct_traced(
            &exp.inner.code,
            &mut rng,
            exp.inner.config.simulation.construct,
            Some(seed),
        )?;
        *out = Box::into_raw(Box::new(RgvCodebook { inner }));
        Ok(())
    })
}

/// Parses a codebook from its text form.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_codebook_from_text(
    text: *const c_char,
    out: *mut *mut RgvCodebook,
) -> RgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let inner = Codebook::from_text(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(RgvCodebook { inner }));
        Ok(())
    })
}

/// Text form of a codebook; free it with [`rgv_string_free`].
///
/// # Safety
/// `cb` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_codebook_to_text(
    cb: *const RgvCodebook,
    out: *mut *mut c_char,
) -> RgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = ref_arg(cb, "cb")?.inner.to_text()?;
        *out = CString::new(text)
            .map_err(|e| Failure(RgvStatus::Format, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `cb` must be null or a live codebook handle.
#[no_mangle]
pub unsafe extern "C" fn rgv_codebook_free(cb: *mut RgvCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Number of codewords.
///
/// # Safety
/// `cb` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_codebook_len(cb: *const RgvCodebook, out: *mut usize) -> RgvStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(cb, "cb")?.inner.len();
        Ok(())
    })
}

/// Copies codeword `index` (in message order) into `buf`, which holds `len`
/// symbols and must hold at least `n`.
///
/// # Safety
/// `cb` must be a live handle; `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rgv_codebook_codeword(
    cb: *const RgvCodebook,
    index: usize,
    buf: *mut u8,
    len: usize,
) -> RgvStatus {
    guard(|| {
        let cb = ref_arg(cb, "cb")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let entry = cb.inner.entries().get(index).ok_or_else(|| {
            Failure(
                RgvStatus::InvalidArgument,
                format!(
                    "index {index} out of range for {} codewords",
                    cb.inner.len()
                ),
            )
        })?;
        let cw = &entry.codeword;
        if len < cw.len() {
            return Err(Failure(
                RgvStatus::InvalidArgument,
                format!("buffer of {len} symbols is shorter than n = {}", cw.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, cw.len()).copy_from_slice(cw);
        Ok(())
    })
}

/// Checks the codebook against the experiment's distance thresholds.
/// `ok` is set to false when any pair violates them.
///
/// # Safety
/// Handles must be live; `ok` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_codebook_verify(
    exp: *const RgvExperiment,
    cb: *const RgvCodebook,
    ok: *mut bool,
) -> RgvStatus {
    guard(|| {
        let exp = ref_arg(exp, "exp")?;
        let cb = ref_arg(cb, "cb")?;
        let ok = out_arg(ok, "ok")?;
        cb.inner.check_types(&exp.inner.code)?;
        *ok = verify_min_distance(&cb.inner, &exp.inner.code).ok;
        Ok(())
    })
}

/// Monte Carlo estimate of the block error probability.
///
/// # Safety
/// `exp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_estimate_error(
    exp: *const RgvExperiment,
    seed: u64,
    trials: u64,
    mode: RgvSimMode,
    out: *mut RgvErrorEstimate,
) -> RgvStatus {
    guard(|| {
        let exp = ref_arg(exp, "exp")?;
        let out = out_arg(out, "out")?;
        let mode = match mode {
            RgvSimMode::Fixed => SimMode::FixedCodebook,
            RgvSimMode::Fresh => SimMode::FreshCodebookPerTrial,
        };
        let e = estimate_error_probability(
            &exp.inner.code,
            &exp.inner.channel,
            seed,
            trials,
            mode,
            exp.inner.config.simulation.construct,
        )?;
        *out = RgvErrorEstimate {
            trials: e.trials,
            errors: e.errors,
            ties: e.ties,
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
        };
        Ok(())
    })
}

/// Smallest pair exponent of the experiment, using its configured solver.
/// Infinite values are reported as `INFINITY`.
///
/// # Safety
/// `exp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_overall_exponent(
    exp: *const RgvExperiment,
    out: *mut f64,
) -> RgvStatus {
    guard(|| {
        let exp = ref_arg(exp, "exp")?;
        let out = out_arg(out, "out")?;
        let table = exponents::rgv_overall_exponent(
            &exp.inner.code,
            &exp.inner.channel,
            &exp.inner.solver,
        )?;
        *out = table.overall.to_f64();
        Ok(())
    })
}

/// Source reliability function `e(R, P)` of the pmf `p[0..len]`.
/// `grid = 0` selects the continuous solver, otherwise the grid denominator.
///
/// # Safety
/// `p` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_source_reliability(
    p: *const f64,
    len: usize,
    rate: f64,
    grid: u64,
    out: *mut f64,
) -> RgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let src = SourceSpec::new(Pmf::new(slice_arg(p, len, "p")?.to_vec())?);
        *out = source_reliability(rate, &src, &solver_for(grid))?
            .value
            .to_f64();
        Ok(())
    })
}

/// Random coding exponent `E_r(Q, R)` for input pmf `q[0..inputs]` and the
/// row-major channel `w[0..inputs * outputs]`. `grid` as in
/// [`rgv_source_reliability`].
///
/// # Safety
/// Pointers must cover the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgv_random_coding_exponent(
    q: *const f64,
    w: *const f64,
    inputs: usize,
    outputs: usize,
    rate: f64,
    grid: u64,
    out: *mut f64,
) -> RgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let q = Pmf::new(slice_arg(q, inputs, "q")?.to_vec())?;
        if outputs == 0 {
            return Err(Failure(
                RgvStatus::InvalidArgument,
                "channel has no outputs".into(),
            ));
        }
        let rows = slice_arg(w, inputs * outputs, "w")?
            .chunks(outputs)
            .map(<[f64]>::to_vec)
            .collect();
        let w = Channel::new(rows)?;
        *out = random_coding_exponent(&q, &w, rate, &solver_for(grid))?
            .value
            .to_f64();
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML: &str = "[source]\npmf = [0.5, 0.5]\n[channel]\nbsc = 0.05\n\
        [code]\nk = 2\nn = 8\npalette = [[4, 4]]\ndelta = 0.01\n\0";

    fn experiment() -> *mut RgvExperiment {
        let mut exp = ptr::null_mut();
        let s = unsafe { rgv_experiment_from_toml(TOML.as_ptr().cast(), &mut exp) };
        assert_eq!(s, RgvStatus::Ok);
        exp
    }

    fn last_error() -> String {
        let p = rgv_last_error_message();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
    }

    #[test]
    fn construct_round_trips_through_text() {
        let exp = experiment();
        unsafe {
            let mut cb = ptr::null_mut();
            assert_eq!(rgv_codebook_construct(exp, 3, &mut cb), RgvStatus::Ok);
            let mut len = 0;
            assert_eq!(rgv_codebook_len(cb, &mut len), RgvStatus::Ok);
            assert_eq!(len, 4);
            let mut text = ptr::null_mut();
            assert_eq!(rgv_codebook_to_text(cb, &mut text), RgvStatus::Ok);
            let mut back = ptr::null_mut();
            assert_eq!(rgv_codebook_from_text(text, &mut back), RgvStatus::Ok);
            assert_eq!((*back).inner, (*cb).inner);
            let mut ok = false;
            assert_eq!(rgv_codebook_verify(exp, back, &mut ok), RgvStatus::Ok);
            assert!(ok);
            let mut buf = [9u8; 8];
            assert_eq!(
                rgv_codebook_codeword(cb, 1, buf.as_mut_ptr(), 8),
                RgvStatus::Ok
            );
            assert_eq!(buf.iter().map(|&s| s as u32).sum::<u32>(), 4);
            assert_eq!(
                rgv_codebook_codeword(cb, 4, buf.as_mut_ptr(), 8),
                RgvStatus::InvalidArgument
            );
            assert!(last_error().contains("out of range"));
            rgv_string_free(text);
            rgv_codebook_free(back);
            rgv_codebook_free(cb);
            rgv_experiment_free(exp);
        }
    }

    #[test]
    fn errors_set_status_and_message() {
        unsafe {
            let mut exp = ptr::null_mut();
            let bad = TOML.replace("[code]", "[code]\nbogus = 1");
            assert_eq!(
                rgv_experiment_from_toml(bad.as_ptr().cast(), &mut exp),
                RgvStatus::Config
            );
            assert!(exp.is_null());
            assert!(last_error().contains("bogus"));
            assert_eq!(
                rgv_experiment_from_toml(ptr::null(), &mut exp),
                RgvStatus::NullPointer
            );
            let mut cb = ptr::null_mut();
            let garbage = b"not a codebook\n\0";
            assert_eq!(
                rgv_codebook_from_text(garbage.as_ptr().cast(), &mut cb),
                RgvStatus::Format
            );
        }
    }

    #[test]
    fn infeasible_construction_is_reported() {
        let toml = "[source]\npmf = [0.5, 0.5]\n[channel]\nbsc = 0.05\n\
            [code]\nk = 2\nn = 4\npalette = [[2, 2]]\ndelta = 0.01\n\0";
        unsafe {
            let mut exp = ptr::null_mut();
            assert_eq!(
                rgv_experiment_from_toml(toml.as_ptr().cast(), &mut exp),
                RgvStatus::Ok
            );
            let mut cb = ptr::null_mut();
            assert_eq!(
                rgv_codebook_construct(exp, 1, &mut cb),
                RgvStatus::Infeasible
            );
            assert!(cb.is_null());
            rgv_experiment_free(exp);
        }
    }

    #[test]
    fn estimate_and_exponents() {
        let exp = experiment();
        unsafe {
            let mut est = RgvErrorEstimate::default();
            assert_eq!(
                rgv_estimate_error(exp, 7, 500, RgvSimMode::Fixed, &mut est),
                RgvStatus::Ok
            );
            assert_eq!(est.trials, 500);
            assert!(est.ci_low <= est.p_hat && est.p_hat <= est.ci_high);
            let mut e = 0.0;
            assert_eq!(rgv_overall_exponent(exp, &mut e), RgvStatus::Ok);
            assert!(e > 0.0);
            rgv_experiment_free(exp);

            let p = [0.5, 0.5];
            assert_eq!(
                rgv_source_reliability(p.as_ptr(), 2, 0.5, 0, &mut e),
                RgvStatus::Ok
            );
            assert_eq!(e, 0.0);
            let q = [0.5, 0.5];
            let w = [0.9, 0.1, 0.1, 0.9];
            assert_eq!(
                rgv_random_coding_exponent(q.as_ptr(), w.as_ptr(), 2, 2, 0.0, 0, &mut e),
                RgvStatus::Ok
            );
            assert!((e + 0.8f64.ln()).abs() < 1e-6);
        }
    }
}
