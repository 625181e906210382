//! C ABI over the `dircat` library.
//!
//! Every fallible function returns a [`DircatStatus`]. On failure a message is
//! kept per thread and can be read with [`dircat_last_error`]. Posteriors are
//! opaque handles created by [`dircat_posterior_from_data`] and released with
//! [`dircat_posterior_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use dircat::baselines::{normal_chance_to_beat, normal_fit};
use dircat::metrics::{JointDrawConfig, JointDraws, MetricResult};
use dircat::posterior::{BinSpec, DirichletPosterior, OutOfRange, PriorVector};
use dircat::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DircatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfBounds = 3,
    EmptyData = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Posterior over bin proportions for one group.
pub struct DircatPosterior {
    inner: DirichletPosterior,
}

/// One Monte Carlo summary: mean, its standard error and a central interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DircatMetric {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DircatComparison {
    pub chance_to_beat: DircatMetric,
    pub expected_loss_e: DircatMetric,
    pub expected_loss_c: DircatMetric,
    pub mean_diff: DircatMetric,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: DircatStatus, msg: impl Into<String>) -> DircatStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> DircatStatus {
    match e {
        Error::OutOfBounds { .. } => DircatStatus::OutOfBounds,
        Error::EmptyData | Error::InsufficientData { .. } => DircatStatus::EmptyData,
        Error::InvalidArgument(_)
        | Error::InvalidBins(_)
        | Error::InvalidConcentration(_)
        | Error::DimensionMismatch { .. } => DircatStatus::InvalidArgument,
        _ => DircatStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> DircatStatus
where
    F: FnOnce() -> Result<(), DircatStatus>,
{
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DircatStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(DircatStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: dircat::Result<T>) -> Result<T, DircatStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// # Safety
/// `data` must be null only when `len` is 0, otherwise valid for `len` reads.
unsafe fn input<'a>(data: *const f64, len: usize, name: &str) -> Result<&'a [f64], DircatStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(DircatStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(data, len))
}

fn metric(m: MetricResult) -> DircatMetric {
    DircatMetric {
        estimate: m.estimate,
        std_error: m.std_error,
        ci_lo: m.ci_lo,
        ci_hi: m.ci_hi,
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn dircat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dircat_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(c) => c,
            Err(_) => panic!("version contains NUL"),
        };
    VERSION.as_ptr()
}

/// Bins `data` into `bins` equal-width bins on `[lower, upper]` and applies a
/// uniform `1/bins` prior. Out-of-range values are an error unless `clamp`.
///
/// # Safety
/// `data` must be valid for `len` reads and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dircat_posterior_from_data(
    data: *const f64,
    len: usize,
    bins: usize,
    lower: f64,
    upper: f64,
    clamp: bool,
    out: *mut *mut DircatPosterior,
) -> DircatStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DircatStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let data = input(data, len, "data")?;
        let spec = lift(BinSpec::equal_width(bins, lower, upper))?;
        let prior = lift(PriorVector::uniform(bins))?;
        let policy = if clamp {
            OutOfRange::Clamp
        } else {
            OutOfRange::Reject
        };
        let (inner, _) = lift(DirichletPosterior::from_data(data, &spec, &prior, policy))?;
        *out = Box::into_raw(Box::new(DircatPosterior { inner }));
        Ok(())
    })
}

/// # Safety
/// `post` must come from [`dircat_posterior_from_data`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dircat_posterior_free(post: *mut DircatPosterior) {
    if !post.is_null() {
        drop(Box::from_raw(post));
    }
}

/// Number of bins, or 0 for a null handle.
///
/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dircat_posterior_num_bins(post: *const DircatPosterior) -> usize {
    post.as_ref().map_or(0, |p| p.inner.len())
}

/// # Safety
/// `post` must be a live handle and `dst` valid for `len` writes.
unsafe fn copy_out(
    post: *const DircatPosterior,
    dst: *mut f64,
    len: usize,
    pick: fn(&DirichletPosterior) -> &[f64],
) -> DircatStatus {
    guard(|| {
        let p = post
            .as_ref()
            .ok_or_else(|| fail(DircatStatus::NullPointer, "posterior is null"))?;
        let src = pick(&p.inner);
        if len < src.len() {
            return Err(fail(
                DircatStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", src.len()),
            ));
        }
        if dst.is_null() {
            return Err(fail(DircatStatus::NullPointer, "output buffer is null"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
        Ok(())
    })
}

/// Copies the posterior concentration vector into `dst`.
///
/// # Safety
/// `post` must be a live handle and `dst` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dircat_posterior_alpha(
    post: *const DircatPosterior,
    dst: *mut f64,
    len: usize,
) -> DircatStatus {
    copy_out(post, dst, len, |p| p.alpha_star())
}

/// Copies the per-bin representative values into `dst`.
///
/// # Safety
/// `post` must be a live handle and `dst` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dircat_posterior_values(
    post: *const DircatPosterior,
    dst: *mut f64,
    len: usize,
) -> DircatStatus {
    copy_out(post, dst, len, |p| p.values().values())
}

unsafe fn pair<'a>(
    e: *const DircatPosterior,
    c: *const DircatPosterior,
) -> Result<(&'a DirichletPosterior, &'a DirichletPosterior), DircatStatus> {
    match (e.as_ref(), c.as_ref()) {
        (Some(e), Some(c)) => Ok((&e.inner, &c.inner)),
        _ => Err(fail(DircatStatus::NullPointer, "posterior is null")),
    }
}

/// Chance to beat, expected losses and mean difference of experiment over
/// control from `draws` joint posterior draws.
///
/// # Safety
/// Both handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dircat_compare(
    experiment: *const DircatPosterior,
    control: *const DircatPosterior,
    draws: usize,
    seed: u64,
    gamma: f64,
    out: *mut DircatComparison,
) -> DircatStatus {
    guard(|| {
        let (e, c) = pair(experiment, control)?;
        if out.is_null() {
            return Err(fail(DircatStatus::NullPointer, "out is null"));
        }
        let cfg = JointDrawConfig::new(draws, seed).with_gamma(gamma);
        let jd = lift(JointDraws::sample(e, c, &[], &cfg))?;
        *out = DircatComparison {
            chance_to_beat: metric(jd.chance_to_beat()),
            expected_loss_e: metric(jd.expected_loss_e()),
            expected_loss_c: metric(jd.expected_loss_c()),
            mean_diff: metric(jd.mean_diff()),
        };
        Ok(())
    })
}

/// Posterior mean and pointwise interval of `Q_E(tau) - Q_C(tau)` for each
/// of the `n_taus` increasing levels. Each output array holds `n_taus` values.
///
/// # Safety
/// Both handles must be live, `taus` valid for `n_taus` reads and each output
/// valid for `n_taus` writes.
#[no_mangle]
pub unsafe extern "C" fn dircat_delta_quantiles(
    experiment: *const DircatPosterior,
    control: *const DircatPosterior,
    taus: *const f64,
    n_taus: usize,
    draws: usize,
    seed: u64,
    gamma: f64,
    mean_out: *mut f64,
    lo_out: *mut f64,
    hi_out: *mut f64,
) -> DircatStatus {
    guard(|| {
        let (e, c) = pair(experiment, control)?;
        let taus = input(taus, n_taus, "taus")?;
        if taus.is_empty() {
            return Err(fail(DircatStatus::InvalidArgument, "no quantile levels"));
        }
        if mean_out.is_null() || lo_out.is_null() || hi_out.is_null() {
            return Err(fail(DircatStatus::NullPointer, "output buffer is null"));
        }
        let cfg = JointDrawConfig::new(draws, seed).with_gamma(gamma);
        let jd = lift(JointDraws::sample(e, c, taus, &cfg))?;
        for i in 0..taus.len() {
            let m = jd.quantile_result(i);
            *mean_out.add(i) = m.estimate;
            *lo_out.add(i) = m.ci_lo;
            *hi_out.add(i) = m.ci_hi;
        }
        Ok(())
    })
}

/// Normal approximation to the mean difference of two raw samples, with its
/// chance to beat.
///
/// # Safety
/// Each sample pointer must be valid for its length; outputs valid for one
/// write each.
#[no_mangle]
pub unsafe extern "C" fn dircat_normal_fit(
    experiment: *const f64,
    n_experiment: usize,
    control: *const f64,
    n_control: usize,
    mu: *mut f64,
    sigma: *mut f64,
    chance_to_beat: *mut f64,
) -> DircatStatus {
    guard(|| {
        let e = input(experiment, n_experiment, "experiment")?;
        let c = input(control, n_control, "control")?;
        if mu.is_null() || sigma.is_null() || chance_to_beat.is_null() {
            return Err(fail(DircatStatus::NullPointer, "output is null"));
        }
        let fit = lift(normal_fit(e, c))?;
        *mu = fit.mu;
        *sigma = fit.sigma;
        *chance_to_beat = lift(normal_chance_to_beat(&fit))?;
        Ok(())
    })
}
