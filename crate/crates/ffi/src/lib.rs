//! C ABI over the process engine.
//!
//! Every call returns a [`TfStatus`]. Results come back through out
//! pointers as NUL-terminated JSON or plain strings owned by the caller and
//! released with [`tf_string_free`]. After a failure,
//! [`tf_last_error_message`] describes it on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tokenflow::repository::Repository;
use tokenflow::runtime::ContractType;
use tokenflow::services::{Engine, ServiceError};
use tokenflow::word::Address;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    CompilationFailed = 4,
    UnknownModel = 5,
    UnknownInstance = 6,
    UnknownWorkitem = 7,
    BadInput = 8,
    LedgerRejection = 9,
    Io = 10,
    Internal = 11,
    Panic = 12,
}

/// Which kind of resource a workitem lives on.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfResource {
    Worklist = 0,
    Service = 1,
}

/// Opaque engine handle: one simulated ledger plus an artifact repository.
pub struct TfEngine {
    engine: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(TfStatus, String);

impl From<ServiceError> for Fail {
    fn from(e: ServiceError) -> Self {
        let s = match &e {
            ServiceError::CompilationFailed(_) => TfStatus::CompilationFailed,
            ServiceError::UnknownModel(_) => TfStatus::UnknownModel,
            ServiceError::UnknownInstance(_) => TfStatus::UnknownInstance,
            ServiceError::UnknownWorkitem { .. } => TfStatus::UnknownWorkitem,
            ServiceError::BadInput(_) => TfStatus::BadInput,
            ServiceError::LedgerRejection { .. } => TfStatus::LedgerRejection,
            ServiceError::Repository(_) | ServiceError::Internal(_) => TfStatus::Internal,
        };
        Fail(s, e.to_string())
    }
}

fn set_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("no interior NUL"));
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            TfStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(Some(m));
            s
        }
        Err(_) => {
            set_error(Some("panic inside tokenflow".into()));
            TfStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(TfStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(TfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn engine<'a>(e: *const TfEngine) -> Result<&'a Engine, Fail> {
    e.as_ref().map(|h| &h.engine).ok_or_else(|| Fail(TfStatus::NullArgument, "engine is null".into()))
}

unsafe fn put(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(TfStatus::NullArgument, "out pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| Fail(TfStatus::Internal, "result holds a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, Fail> {
    serde_json::to_string(v).map_err(|e| Fail(TfStatus::Internal, e.to_string()))
}

fn address(s: &str) -> Result<Address, Fail> {
    s.parse().map_err(|_| Fail(TfStatus::InvalidArgument, format!("`{s}` is not an address")))
}

/// Opens (creating if needed) the repository at `repo_dir` and starts an
/// engine on a fresh ledger.
///
/// # Safety
/// `repo_dir` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_engine_new(repo_dir: *const c_char, out: *mut *mut TfEngine) -> TfStatus {
    guard(|| {
        let dir = text(repo_dir, "repo_dir")?;
        if out.is_null() {
            return Err(Fail(TfStatus::NullArgument, "out pointer is null".into()));
        }
        let repo = Repository::open(dir).map_err(|e| Fail(TfStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(TfEngine { engine: Engine::new(repo) }));
        Ok(())
    })
}

/// # Safety
/// `e` must come from [`tf_engine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_engine_free(e: *mut TfEngine) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Compiles and deploys a BPMN document; writes the model hash.
///
/// # Safety
/// Pointers must be valid; `out_hash` receives a string to free.
#[no_mangle]
pub unsafe extern "C" fn tf_deploy_model(e: *const TfEngine, bpmn: *const c_char, out_hash: *mut *mut c_char) -> TfStatus {
    guard(|| {
        let hash = engine(e)?.deploy_model(text(bpmn, "bpmn")?)?;
        put(out_hash, hash)
    })
}

/// Starts an instance of a deployed model; writes its address.
///
/// # Safety
/// Pointers must be valid; `out_address` receives a string to free.
#[no_mangle]
pub unsafe extern "C" fn tf_instantiate(e: *const TfEngine, hash: *const c_char, out_address: *mut *mut c_char) -> TfStatus {
    guard(|| {
        let r = engine(e)?.instantiate(text(hash, "hash")?)?;
        put(out_address, r.address)
    })
}

/// Writes the JSON state view of a process instance.
///
/// # Safety
/// Pointers must be valid; `out_json` receives a string to free.
#[no_mangle]
pub unsafe extern "C" fn tf_instance_state(e: *const TfEngine, process: *const c_char, out_json: *mut *mut c_char) -> TfStatus {
    guard(|| {
        let a = address(text(process, "process")?)?;
        let view = engine(e)?.instance_state_for(a)?;
        put(out_json, json(&view)?)
    })
}

/// Checks in workitem `id` on a worklist or service bridge. `inputs_json`
/// is an object keyed by import parameter name or a positional array and
/// may be null when the task imports nothing. Writes the receipt as JSON.
///
/// # Safety
/// Pointers must be valid; `out_json` receives a string to free.
#[no_mangle]
pub unsafe extern "C" fn tf_execute_task(
    e: *const TfEngine,
    kind: TfResource,
    resource: *const c_char,
    id: u64,
    inputs_json: *const c_char,
    out_json: *mut *mut c_char,
) -> TfStatus {
    guard(|| {
        let r = address(text(resource, "resource")?)?;
        let inputs = if inputs_json.is_null() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(text(inputs_json, "inputs_json")?)
                .map_err(|err| Fail(TfStatus::BadInput, format!("inputs: {err}")))?
        };
        let ty = match kind {
            TfResource::Worklist => ContractType::Worklist,
            TfResource::Service => ContractType::Service,
        };
        let receipt = engine(e)?.execute_task(r, ty, id, &inputs)?;
        put(out_json, json(&receipt)?)
    })
}

/// Writes notifications with sequence number at least `since` as a JSON array.
///
/// # Safety
/// Pointers must be valid; `out_json` receives a string to free.
#[no_mangle]
pub unsafe extern "C" fn tf_notifications(e: *const TfEngine, since: u64, out_json: *mut *mut c_char) -> TfStatus {
    guard(|| {
        let ns = engine(e)?.notifications_since(since);
        put(out_json, json(&ns)?)
    })
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn tf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
