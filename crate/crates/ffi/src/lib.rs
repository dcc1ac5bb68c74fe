//! C ABI over the relaynav simulator.
//!
//! Scenes, episodes and rollouts cross the boundary as opaque handles, each
//! released by the matching `rn_*_free`. Fallible calls return
//! an [`RnStatus`]; the message of the last failure on the calling thread is
//! available from [`rn_last_error`].

use relaynav::rove::{generate_episode, EpisodeConfig, EpisodeError, EpisodeSpec, MockRecognizer};
use relaynav::spe::{self, Rollout, RolloutConfig};
use relaynav::world::{generate_scene, SceneGraph, SceneParams};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Io = 4,
    InvalidConfig = 5,
    Rejected = 6,
    Simulation = 7,
    Panic = 8,
}

pub struct RnScene {
    inner: SceneGraph,
}

pub struct RnEpisode {
    inner: EpisodeSpec,
}

pub struct RnRollout {
    inner: Rollout,
}

/// Per-episode outcome, flat for C callers.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RnResult {
    pub success_fh: bool,
    pub success_sh: bool,
    pub both_success: bool,
    pub path_len_fh_m: f64,
    pub path_len_sh_m: f64,
    pub ne_fh_m: f64,
    pub ne_sh_m: f64,
    pub subtasks_done_fh: u32,
    pub subtasks_done_sh: u32,
    pub subtasks_total_fh: u32,
    pub subtasks_total_sh: u32,
    pub ticks: u64,
    pub swap_count: u64,
    pub dialogue_count: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: RnStatus, msg: impl ToString) -> RnStatus {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
    status
}

fn guard(f: impl FnOnce() -> RnStatus) -> RnStatus {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|_| fail(RnStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, RnStatus> {
    if s.is_null() {
        return Err(fail(RnStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(RnStatus::InvalidUtf8, e))
}

fn out_string(s: String, out: *mut *mut c_char) -> RnStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            RnStatus::Ok
        }
        Err(e) => fail(RnStatus::Parse, e),
    }
}

fn boxed<T>(v: T, out: *mut *mut T) {
    unsafe { *out = Box::into_raw(Box::new(v)) };
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn rn_version() -> *const c_char {
    static V: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr().cast()
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; empty when nothing failed yet.
#[no_mangle]
pub extern "C" fn rn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from a relaynav function returning an owned string, or be null.
#[no_mangle]
pub unsafe extern "C" fn rn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates a scene with default parameters.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rn_scene_generate(seed: u64, out: *mut *mut RnScene) -> RnStatus {
    guard(|| {
        if out.is_null() {
            return fail(RnStatus::NullArgument, "out is null");
        }
        match generate_scene(seed, &SceneParams::default()) {
            Ok(s) => {
                boxed(RnScene { inner: s }, out);
                RnStatus::Ok
            }
            Err(e) => fail(RnStatus::InvalidConfig, e),
        }
    })
}

/// Loads a scene file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rn_scene_load(path: *const c_char, out: *mut *mut RnScene) -> RnStatus {
    guard(|| {
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(RnStatus::NullArgument, "out is null");
        }
        match SceneGraph::load(std::path::Path::new(path)) {
            Ok(s) => {
                boxed(RnScene { inner: s }, out);
                RnStatus::Ok
            }
            Err(relaynav::world::WorldError::Io(e)) => fail(RnStatus::Io, e),
            Err(e) => fail(RnStatus::Parse, e),
        }
    })
}

/// Scene as JSON, to be released with `rn_string_free`.
///
/// # Safety
/// `scene` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rn_scene_to_json(scene: *const RnScene, out: *mut *mut c_char) -> RnStatus {
    guard(|| {
        if scene.is_null() || out.is_null() {
            return fail(RnStatus::NullArgument, "null argument");
        }
        match (*scene).inner.to_json() {
            Ok(s) => out_string(s, out),
            Err(e) => fail(RnStatus::Parse, e),
        }
    })
}

/// # Safety
/// `scene` must come from a scene constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn rn_scene_free(scene: *mut RnScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Samples one verified episode. Returns `Rejected` when the scene cannot
/// host one for this seed.
///
/// # Safety
/// `scene` must be live, `episode_id` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rn_episode_generate(
    scene: *const RnScene,
    seed: u64,
    episode_id: *const c_char,
    out: *mut *mut RnEpisode,
) -> RnStatus {
    guard(|| {
        let id = match str_arg(episode_id) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if scene.is_null() || out.is_null() {
            return fail(RnStatus::NullArgument, "null argument");
        }
        let cfg = EpisodeConfig::default();
        match generate_episode(&(*scene).inner, seed, id, &cfg, &MockRecognizer::default()) {
            Ok(ep) => {
                boxed(RnEpisode { inner: ep }, out);
                RnStatus::Ok
            }
            Err(e @ (EpisodeError::Rejected(_) | EpisodeError::Precondition { .. })) => fail(RnStatus::Rejected, e),
            Err(e) => fail(RnStatus::Simulation, e),
        }
    })
}

/// Parses one episode record.
///
/// # Safety
/// `json` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rn_episode_from_json(json: *const c_char, out: *mut *mut RnEpisode) -> RnStatus {
    guard(|| {
        let json = match str_arg(json) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(RnStatus::NullArgument, "out is null");
        }
        match serde_json::from_str::<EpisodeSpec>(json) {
            Ok(ep) => {
                boxed(RnEpisode { inner: ep }, out);
                RnStatus::Ok
            }
            Err(e) => fail(RnStatus::Parse, e),
        }
    })
}

/// # Safety
/// `episode` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rn_episode_to_json(episode: *const RnEpisode, out: *mut *mut c_char) -> RnStatus {
    guard(|| {
        if episode.is_null() || out.is_null() {
            return fail(RnStatus::NullArgument, "null argument");
        }
        out_string((*episode).inner.to_json_line(), out)
    })
}

/// The episode's instruction, to be released with `rn_string_free`.
///
/// # Safety
/// `episode` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rn_episode_instruction(episode: *const RnEpisode, out: *mut *mut c_char) -> RnStatus {
    guard(|| {
        if episode.is_null() || out.is_null() {
            return fail(RnStatus::NullArgument, "null argument");
        }
        out_string((*episode).inner.instruction.clone(), out)
    })
}

/// # Safety
/// `episode` must come from an episode constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn rn_episode_free(episode: *mut RnEpisode) {
    if !episode.is_null() {
        drop(Box::from_raw(episode));
    }
}

/// Runs one rollout. `config_json` may be null for defaults; otherwise it is
/// a JSON object with any subset of the rollout config fields.
///
/// # Safety
/// Handles must be live, `config_json` null or NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rn_rollout_run(
    scene: *const RnScene,
    episode: *const RnEpisode,
    config_json: *const c_char,
    out: *mut *mut RnRollout,
) -> RnStatus {
    guard(|| {
        if scene.is_null() || episode.is_null() || out.is_null() {
            return fail(RnStatus::NullArgument, "null argument");
        }
        let cfg = if config_json.is_null() {
            RolloutConfig::default()
        } else {
            let text = match str_arg(config_json) {
                Ok(t) => t,
                Err(s) => return s,
            };
            match serde_json::from_str::<RolloutConfig>(text) {
                Ok(c) => c,
                Err(e) => return fail(RnStatus::InvalidConfig, e),
            }
        };
        match spe::run(&(*scene).inner, &(*episode).inner, &cfg) {
            Ok(r) => {
                boxed(RnRollout { inner: r }, out);
                RnStatus::Ok
            }
            Err(e @ spe::SpeError::Config(_)) => fail(RnStatus::InvalidConfig, e),
            Err(e) => fail(RnStatus::Simulation, e),
        }
    })
}

/// # Safety
/// `rollout` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rn_rollout_result(rollout: *const RnRollout, out: *mut RnResult) -> RnStatus {
    guard(|| {
        if rollout.is_null() || out.is_null() {
            return fail(RnStatus::NullArgument, "null argument");
        }
        let r = &(*rollout).inner.result;
        *out = RnResult {
            success_fh: r.success_fh,
            success_sh: r.success_sh,
            both_success: r.both_success,
            path_len_fh_m: r.path_len_fh_m,
            path_len_sh_m: r.path_len_sh_m,
            ne_fh_m: r.ne_fh_m,
            ne_sh_m: r.ne_sh_m,
            subtasks_done_fh: r.subtasks_done_fh as u32,
            subtasks_done_sh: r.subtasks_done_sh as u32,
            subtasks_total_fh: r.subtasks_total_fh as u32,
            subtasks_total_sh: r.subtasks_total_sh as u32,
            ticks: r.ticks,
            swap_count: r.swap_count,
            dialogue_count: r.dialogue_count,
        };
        RnStatus::Ok
    })
}

/// Number of trace records (ticks) in the rollout, 0 for a null handle.
///
/// # Safety
/// `rollout` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn rn_rollout_trace_len(rollout: *const RnRollout) -> u64 {
    if rollout.is_null() {
        return 0;
    }
    (*rollout).inner.trace.len() as u64
}

/// The trace as JSON lines, to be released with `rn_string_free`.
///
/// # Safety
/// `rollout` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rn_rollout_trace_json(rollout: *const RnRollout, out: *mut *mut c_char) -> RnStatus {
    guard(|| {
        if rollout.is_null() || out.is_null() {
            return fail(RnStatus::NullArgument, "null argument");
        }
        out_string(spe::trace_to_string(&(*rollout).inner.trace), out)
    })
}

/// # Safety
/// `rollout` must come from `rn_rollout_run`, or be null.
#[no_mangle]
pub unsafe extern "C" fn rn_rollout_free(rollout: *mut RnRollout) {
    if !rollout.is_null() {
        drop(Box::from_raw(rollout));
    }
}

/// Success-weighted path length of one robot.
#[no_mangle]
pub extern "C" fn rn_spl(success: bool, gt_length_m: f64, path_length_m: f64) -> f64 {
    relaynav::metrics::spl(success, gt_length_m, path_length_m)
}
