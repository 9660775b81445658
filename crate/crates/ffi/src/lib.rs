//! C interface to tree replicas.
//!
//! Every function returns a [`TreeStatus`]. Strings handed out by the
//! library are NUL-terminated, owned by the caller and released with
//! [`tree_string_free`]. On failure [`tree_last_error`] describes what went
//! wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tree_crdt::causal::ReplicaId;
use tree_crdt::combo::Combo;
use tree_crdt::replica::{decode_envelope, encode_envelope, Replica};
use tree_crdt::Error;

/// Opaque replica handle.
pub struct TreeReplica {
    inner: Replica,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    PreconditionViolation = 3,
    IllegalCombo = 4,
    KindMismatch = 5,
    Parse = 6,
    Wire = 7,
    SeveralBlowup = 8,
    InvalidInterval = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: Error) -> TreeStatus {
    set_error(&e.to_string());
    match e {
        Error::PreconditionViolation(_) => TreeStatus::PreconditionViolation,
        Error::KindMismatch(_) => TreeStatus::KindMismatch,
        Error::InvalidInterval => TreeStatus::InvalidInterval,
        Error::SeveralBlowup { .. } => TreeStatus::SeveralBlowup,
        Error::IllegalCombo(_) => TreeStatus::IllegalCombo,
        Error::Parse { .. } => TreeStatus::Parse,
        Error::Wire(_) => TreeStatus::Wire,
    }
}

fn guard(f: impl FnOnce() -> TreeStatus) -> TreeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            TreeStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, TreeStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(TreeStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        TreeStatus::InvalidUtf8
    })
}

unsafe fn hand_out(s: String, out: *mut *mut c_char) -> TreeStatus {
    if out.is_null() {
        set_error("null output pointer");
        return TreeStatus::NullPointer;
    }
    *out = CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw();
    TreeStatus::Ok
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Creates a replica. `combo` uses the `key=value` form, e.g.
/// `"repr=graph set=or flavor=op connect=skip map=zero pi=none"`.
///
/// # Safety
/// `combo` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tree_replica_new(
    combo: *const c_char,
    replica_id: u32,
    seed: u64,
    out: *mut *mut TreeReplica,
) -> TreeStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return TreeStatus::NullPointer;
        }
        let spec = tri!(text(combo));
        let combo = tri!(Combo::parse(spec).map_err(fail));
        let inner = tri!(Replica::new(ReplicaId(replica_id), combo, seed).map_err(fail));
        *out = Box::into_raw(Box::new(TreeReplica { inner }));
        TreeStatus::Ok
    })
}

/// # Safety
/// `replica` must come from [`tree_replica_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tree_replica_free(replica: *mut TreeReplica) {
    if !replica.is_null() {
        drop(Box::from_raw(replica));
    }
}

unsafe fn handle<'a>(p: *mut TreeReplica) -> Result<&'a mut TreeReplica, TreeStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null replica");
        TreeStatus::NullPointer
    })
}

/// Adds `label` below the node `parent` at sibling `index` (negative for
/// last). On success `op_out` receives the op to ship to other replicas.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tree_replica_add(
    replica: *mut TreeReplica,
    label: *const c_char,
    parent: *const c_char,
    index: i64,
    op_out: *mut *mut c_char,
) -> TreeStatus {
    guard(|| {
        let r = tri!(handle(replica));
        let label = tri!(text(label));
        let parent = tri!(text(parent));
        let index = usize::try_from(index).ok();
        let env = tri!(r.inner.add(label, parent, index).map_err(fail));
        hand_out(encode_envelope(&env), op_out)
    })
}

/// Removes the node `key` with its subtree.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tree_replica_rmv(
    replica: *mut TreeReplica,
    key: *const c_char,
    op_out: *mut *mut c_char,
) -> TreeStatus {
    guard(|| {
        let r = tri!(handle(replica));
        let key = tri!(text(key));
        let env = tri!(r.inner.rmv(key).map_err(fail));
        hand_out(encode_envelope(&env), op_out)
    })
}

/// Delivers an op produced by another replica. Ops whose causal
/// predecessors are missing are held back until those arrive.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tree_replica_apply(replica: *mut TreeReplica, op: *const c_char) -> TreeStatus {
    guard(|| {
        let r = tri!(handle(replica));
        let env = tri!(decode_envelope(tri!(text(op))).map_err(fail));
        r.inner.receive(env);
        TreeStatus::Ok
    })
}

/// Joins the state of `other` into `replica` (state-based configurations).
///
/// # Safety
/// Both handles must be valid and distinct.
#[no_mangle]
pub unsafe extern "C" fn tree_replica_merge(replica: *mut TreeReplica, other: *const TreeReplica) -> TreeStatus {
    guard(|| {
        let r = tri!(handle(replica));
        let Some(o) = other.as_ref() else {
            set_error("null replica");
            return TreeStatus::NullPointer;
        };
        tri!(r.inner.merge_from(&o.inner).map_err(fail));
        TreeStatus::Ok
    })
}

/// Writes the indented outline of the replica's current tree to `out`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tree_replica_dump(replica: *const TreeReplica, out: *mut *mut c_char) -> TreeStatus {
    guard(|| {
        let Some(r) = replica.as_ref() else {
            set_error("null replica");
            return TreeStatus::NullPointer;
        };
        let t = tri!(r.inner.lookup().map_err(fail));
        hand_out(t.dump(), out)
    })
}

/// Output of one of the canned demos (`cycle`, `orphan-policies`,
/// `word-example`, `wootr-abc`).
///
/// # Safety
/// Pointers must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tree_demo(name: *const c_char, out: *mut *mut c_char) -> TreeStatus {
    guard(|| {
        let name = tri!(text(name));
        let t = tri!(tree_crdt::demo::run_demo(name).map_err(fail));
        hand_out(t, out)
    })
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn tree_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread. Valid until the next call
/// into the library from the same thread; never null.
#[no_mangle]
pub extern "C" fn tree_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
