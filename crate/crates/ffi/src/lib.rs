//! C ABI over the `gravwell` crate.
//!
//! Every function returns a [`GwStatus`]; results come back through out
//! pointers. On failure, `gw_last_error_message` describes the error for the
//! calling thread. Handles are opaque and must be released with their
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use gravwell::bias::{normalize_bias, otimes, pair_contribution};
use gravwell::config::AnalysisConfig;
use gravwell::gravity::{ideological_distance, pull_force, EmbeddingVector, SubgroupModel};
use gravwell::ingest::{build_threads, parse_comments, Comment, ThreadIndex};
use gravwell::metrics::{
    normalized_mae, quadratic_weighted_kappa, spearman_p_value, spearman_rho, CalibrationSample, RankSeries,
};
use gravwell::pipeline::Pipeline;
use gravwell::scoring::{ScoreKind, ScoreLevel};
use gravwell::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    Scoring = 6,
    Analysis = 7,
    UndefinedStatistic = 8,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> GwStatus {
    match e {
        Error::Read { .. } | Error::File { .. } | Error::Report(_) => GwStatus::Io,
        Error::DuplicateId(_) | Error::Cycle(_) => GwStatus::Parse,
        Error::Domain(_) => GwStatus::InvalidArgument,
        Error::Scoring { .. } => GwStatus::Scoring,
        Error::Config(_) => GwStatus::Config,
        Error::Analysis(_) => GwStatus::Analysis,
        Error::UndefinedStatistic(_) => GwStatus::UndefinedStatistic,
    }
}

fn fail(status: GwStatus, msg: impl Into<String>) -> GwStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), GwStatus>>(f: F) -> GwStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GwStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(GwStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: gravwell::Result<T>) -> Result<T, GwStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write<T>(out: *mut T, v: T) -> Result<(), GwStatus> {
    if out.is_null() {
        return Err(fail(GwStatus::NullPointer, "null output pointer"));
    }
    out.write(v);
    Ok(())
}

/// # Safety
/// `p` must be null or point to `n` readable values.
unsafe fn view<'a>(p: *const f64, n: usize) -> Result<&'a [f64], GwStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(GwStatus::NullPointer, "null array pointer"));
    }
    Ok(slice::from_raw_parts(p, n))
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, GwStatus> {
    if p.is_null() {
        return Err(fail(GwStatus::NullPointer, "null path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(GwStatus::InvalidArgument, "path is not UTF-8"))
}

fn level(v: f64) -> Result<ScoreLevel, GwStatus> {
    ScoreLevel::from_value(v).ok_or_else(|| fail(GwStatus::InvalidArgument, format!("{v} is not a score level")))
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next `gw_*` call on the same thread.
#[no_mangle]
pub extern "C" fn gw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn gw_otimes(a: f64, b: f64, out: *mut f64) -> GwStatus {
    guard(|| write(out, lift(otimes(a, b))?))
}

/// Inputs must each be one of -1, -0.5, 0, 0.5, 1.
///
/// # Safety
/// `out` must be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn gw_pair_contribution(sup_i: f64, sup_j: f64, align: f64, out: *mut f64) -> GwStatus {
    guard(|| write(out, pair_contribution(level(sup_i)?, level(sup_j)?, level(align)?)))
}

/// # Safety
/// `out` must be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn gw_normalize_bias(m_unweighted: f64, n: usize, pair_count: usize, out: *mut f64) -> GwStatus {
    guard(|| {
        if !(-1.0..=1.0).contains(&m_unweighted) {
            return Err(fail(GwStatus::InvalidArgument, "m_unweighted outside [-1, 1]"));
        }
        write(out, normalize_bias(m_unweighted, n, pair_count))
    })
}

/// # Safety
/// `u` and `g` must each point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gw_ideological_distance(u: *const f64, g: *const f64, dim: usize, out: *mut f64) -> GwStatus {
    guard(|| {
        let u = EmbeddingVector(view(u, dim)?.to_vec());
        let g = EmbeddingVector(view(g, dim)?.to_vec());
        write(out, lift(ideological_distance(&u, &g))?)
    })
}

/// # Safety
/// `out` must be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn gw_pull_force(mass: f64, m_user: f64, tm: f64, tsm: f64, d: f64, out: *mut f64) -> GwStatus {
    guard(|| {
        let model = lift(SubgroupModel::new("", mass, EmbeddingVector(vec![1.0]), tm, tsm, 1))?;
        write(out, lift(pull_force(&model, "", m_user, d))?.f_w)
    })
}

/// Spearman's rho between two score arrays describing the same `n` items.
///
/// # Safety
/// `a` and `b` must each point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gw_spearman_rho(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> GwStatus {
    guard(|| {
        let series = |xs: &[f64]| RankSeries::from_scores(xs.iter().enumerate().map(|(i, x)| (i.to_string(), *x)));
        let (a, b) = (series(view(a, n)?), series(view(b, n)?));
        write(out, lift(spearman_rho(&a, &b))?)
    })
}

/// One-sided p-value for positive association.
///
/// # Safety
/// `out` must be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn gw_spearman_p_value(rho: f64, n: usize, out: *mut f64) -> GwStatus {
    guard(|| write(out, lift(spearman_p_value(rho, n))?))
}

unsafe fn samples(human: *const f64, ai: *const f64, n: usize) -> Result<Vec<CalibrationSample>, GwStatus> {
    view(human, n)?
        .iter()
        .zip(view(ai, n)?)
        .map(|(&h, &a)| {
            Ok(CalibrationSample {
                kind: ScoreKind::Support,
                human: level(h)?,
                ai: level(a)?,
            })
        })
        .collect()
}

/// # Safety
/// `human` and `ai` must each point to `n` score levels; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gw_qwk(human: *const f64, ai: *const f64, n: usize, out: *mut f64) -> GwStatus {
    guard(|| write(out, lift(quadratic_weighted_kappa(&samples(human, ai, n)?))?))
}

/// # Safety
/// `human` and `ai` must each point to `n` score levels; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gw_nmae(human: *const f64, ai: *const f64, n: usize, out: *mut f64) -> GwStatus {
    guard(|| write(out, lift(normalized_mae(&samples(human, ai, n)?))?))
}

/// A parsed and indexed comment dump.
pub struct GwCorpus {
    comments: Vec<Comment>,
    index: ThreadIndex,
    malformed: usize,
    dropped: usize,
}

/// Loads a JSON Lines comment dump.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable. On
/// success `*out` owns a handle to release with `gw_corpus_free`.
#[no_mangle]
pub unsafe extern "C" fn gw_corpus_load(path: *const c_char, out: *mut *mut GwCorpus) -> GwStatus {
    guard(|| {
        let path = path_arg(path)?;
        let file = File::open(&path).map_err(|e| fail(GwStatus::Io, format!("{}: {e}", path.display())))?;
        let parsed = lift(parse_comments(BufReader::new(file)))?;
        let index = lift(build_threads(&parsed.comments))?;
        let corpus = GwCorpus {
            comments: parsed.comments,
            index,
            malformed: parsed.malformed,
            dropped: parsed.dropped,
        };
        write(out, Box::into_raw(Box::new(corpus)))
    })
}

/// # Safety
/// `corpus` must be null or a live handle from `gw_corpus_load`.
#[no_mangle]
pub unsafe extern "C" fn gw_corpus_comment_count(corpus: *const GwCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.comments.len())
}

/// # Safety
/// `corpus` must be null or a live handle from `gw_corpus_load`.
#[no_mangle]
pub unsafe extern "C" fn gw_corpus_thread_count(corpus: *const GwCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.index.thread_count())
}

/// Malformed plus dropped lines.
///
/// # Safety
/// `corpus` must be null or a live handle from `gw_corpus_load`.
#[no_mangle]
pub unsafe extern "C" fn gw_corpus_skipped_count(corpus: *const GwCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.malformed + c.dropped)
}

/// # Safety
/// `corpus` must be null or a handle from `gw_corpus_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gw_corpus_free(corpus: *mut GwCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Configured analysis pipeline.
pub struct GwPipeline {
    inner: Pipeline,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GwRunSummary {
    pub subreddits: usize,
    pub users: usize,
    pub forces: usize,
    pub scoring_failures: usize,
    pub scoring_calls: usize,
    pub embedding_calls: usize,
}

/// Builds a pipeline from a JSON config file.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` must be writable.
/// On success `*out` owns a handle to release with `gw_pipeline_free`.
#[no_mangle]
pub unsafe extern "C" fn gw_pipeline_from_config(config_path: *const c_char, out: *mut *mut GwPipeline) -> GwStatus {
    guard(|| {
        let config = lift(AnalysisConfig::load(path_arg(config_path)?))?;
        let inner = lift(Pipeline::from_config(config))?;
        write(out, Box::into_raw(Box::new(GwPipeline { inner })))
    })
}

/// Runs every stage, writing artifacts into `out_dir` (created if needed).
///
/// # Safety
/// `pipeline` must be a live handle, `out_dir` a NUL-terminated string and
/// `summary` null or writable.
#[no_mangle]
pub unsafe extern "C" fn gw_pipeline_run(
    pipeline: *const GwPipeline,
    out_dir: *const c_char,
    summary: *mut GwRunSummary,
) -> GwStatus {
    guard(|| {
        let p = pipeline
            .as_ref()
            .ok_or_else(|| fail(GwStatus::NullPointer, "null pipeline"))?;
        let dir = path_arg(out_dir)?;
        std::fs::create_dir_all(&dir).map_err(|e| fail(GwStatus::Io, format!("{}: {e}", dir.display())))?;
        let s = lift(p.inner.cmd_run(&dir))?;
        if !summary.is_null() {
            summary.write(GwRunSummary {
                subreddits: s.subreddits,
                users: s.users,
                forces: s.forces,
                scoring_failures: s.scoring_failures,
                scoring_calls: s.scoring_calls,
                embedding_calls: s.embedding_calls,
            });
        }
        Ok(())
    })
}

/// # Safety
/// `pipeline` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gw_pipeline_free(pipeline: *mut GwPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}
