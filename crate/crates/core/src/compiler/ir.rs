//! Contract intermediate representation. The runtime interprets it directly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::guard::{Decls, Expr, Param, Stmt};
use crate::model::partition::Origin;
use crate::word::{Bytes32, Word};

use super::CompilationMode;

/// Event kinds exchanged through `handleEvent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventKind {
    Default = 0,
    Terminate = 1,
    Error = 2,
    Escalation = 3,
    Signal = 4,
}

impl EventKind {
    pub fn from_u64(v: u64) -> Option<EventKind> {
        Some(match v {
            0 => EventKind::Default,
            1 => EventKind::Terminate,
            2 => EventKind::Error,
            3 => EventKind::Escalation,
            4 => EventKind::Signal,
            _ => return None,
        })
    }
}

/// Which contract serves an external element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Resource {
    Worklist,
    Service,
    /// Flat baselines: the task function lives on the process contract.
    Direct,
}

/// Edge and started-node bits that make up a region of the contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Region {
    pub edges: Word,
    pub nodes: Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CatchEffect {
    /// Kill a scope, then put tokens on the catching event's outgoing flows.
    Interrupt { kill: u32, produce: Word },
    /// Start a handler instance for a non-interrupting catch.
    Spawn { reusable: u32 },
    /// Intermediate catch event: move the waiting token on.
    Move { consume: Word, produce: Word },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catcher {
    pub kind: EventKind,
    /// `None` catches every code of the kind.
    pub code: Option<Bytes32>,
    /// Index of the catching event.
    pub node: u32,
    /// Only catches while this region holds a token or started element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active: Option<Region>,
    pub effect: CatchEffect,
}

impl Catcher {
    pub fn matches(&self, kind: EventKind, code: Bytes32) -> bool {
        self.kind == kind && self.code.is_none_or(|c| c == code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Action {
    None,
    Script(Vec<Stmt>),
    /// Start the listed external elements through their resources.
    Start(Vec<u32>),
    /// Create child instance(s) for a reusable element.
    Instantiate(u32),
    /// End event finishing a token inside an inlined scope (0 = the contract).
    EndScope(u32),
    Terminate(u32),
    Throw {
        kind: EventKind,
        code: Bytes32,
        /// Matching local catchers, innermost first.
        catchers: Vec<Catcher>,
        /// End events close their scope unless a catch interrupted it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end_scope: Option<u32>,
    },
    /// Message throw: reported in the log for whoever listens.
    Message { end_scope: Option<u32> },
    Revert(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    /// Element whose firing this is.
    pub node: u32,
    /// All of these edge bits must carry a token.
    pub guard: Word,
    /// Started bits that must be clear.
    #[serde(default, skip_serializing_if = "Word::is_zero")]
    pub idle: Word,
    pub consume: Word,
    pub produce: Word,
    #[serde(default, skip_serializing_if = "Word::is_zero")]
    pub start: Word,
    /// Message boundary events armed by this firing.
    #[serde(default, skip_serializing_if = "Word::is_zero")]
    pub arm: Word,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Expr>,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Trigger {
    Task,
    /// Message boundary event; completion requires the armed bit.
    Boundary { interrupting: bool, host: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalBinding {
    pub index: u32,
    pub id: String,
    pub name: String,
    /// Base function name; `<f>_Start`, `<f>` and `<f>_Complete` derive from it.
    pub function: String,
    pub resource: Resource,
    pub exports: Vec<Param>,
    pub imports: Vec<Param>,
    pub ops: Vec<Stmt>,
    pub produce: Word,
    /// Started bits cleared on completion: the element and its race siblings.
    pub clear: Word,
    /// Boundary events disarmed on completion.
    pub disarm: Word,
    pub trigger: Trigger,
}

impl ExternalBinding {
    pub fn start_function(&self) -> String {
        format!("{}_Start", self.function)
    }

    pub fn complete_function(&self) -> String {
        match self.resource {
            Resource::Direct => self.function.clone(),
            _ => format!("{}_Complete", self.function),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MiKind {
    Single,
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReusableBinding {
    pub index: u32,
    pub id: String,
    pub name: String,
    /// Contract hash of the child.
    pub child: String,
    pub origin: Origin,
    pub multi: MiKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<Expr>,
    /// The child starts with a copy of this contract's variables.
    pub pass_vars: bool,
    pub produce: Word,
    pub disarm: Word,
    /// Catchers consulted when a child reports an error or escalation.
    pub catchers: Vec<Catcher>,
    /// Scope closed by a terminate coming from this element's handler.
    pub terminate_scope: u32,
}

/// Region cleared by `killProcess(index)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillEntry {
    pub index: u32,
    pub region: Region,
    pub armed: Word,
    /// Reusable elements whose running children are terminated.
    pub reusable: Vec<u32>,
}

/// An inlined subprocess (embedded without multi-instance marker, or an
/// interrupting event subprocess).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeInfo {
    pub index: u32,
    pub region: Region,
    pub produce: Word,
    pub disarm: Word,
    /// Enclosing inlined scope, 0 for the contract.
    pub parent: u32,
    /// Event subprocesses close their parent scope when they finish.
    pub event_subprocess: bool,
    /// Kill indexes that wipe this scope (itself and its ancestors).
    pub killed_by: Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub index: u32,
    pub id: String,
    pub name: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeInfo {
    pub index: u32,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledContract {
    pub name: String,
    pub mode: CompilationMode,
    pub process_id: String,
    /// Key node of the contract's scope; `None` for a whole process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    pub origin: Origin,
    pub decls: Decls,
    pub nodes: Vec<NodeInfo>,
    pub edges: Vec<EdgeInfo>,
    pub full_edges: Word,
    pub full_nodes: Word,
    pub initial_marking: Word,
    pub transitions: Vec<Transition>,
    pub externals: Vec<ExternalBinding>,
    pub reusables: Vec<ReusableBinding>,
    pub scopes: Vec<ScopeInfo>,
    pub kills: Vec<KillEntry>,
    /// Signal catchers checked on broadcast, in document order.
    pub signal_catchers: Vec<Catcher>,
}

impl CompiledContract {
    /// Canonical serialization; the contract hash is its SHA-256.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("IR serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn external(&self, index: u32) -> Option<&ExternalBinding> {
        self.externals.iter().find(|b| b.index == index)
    }

    pub fn external_by_function(&self, f: &str) -> Option<&ExternalBinding> {
        self.externals.iter().find(|b| b.function == f)
    }

    pub fn reusable(&self, index: u32) -> Option<&ReusableBinding> {
        self.reusables.iter().find(|b| b.index == index)
    }

    pub fn scope_info(&self, index: u32) -> Option<&ScopeInfo> {
        self.scopes.iter().find(|s| s.index == index)
    }

    pub fn kill_entry(&self, index: u32) -> Option<&KillEntry> {
        self.kills.iter().find(|k| k.index == index)
    }

    pub fn node_info(&self, index: u32) -> Option<&NodeInfo> {
        self.nodes.iter().find(|n| n.index == index)
    }

    /// State-changing operations callable from outside.
    pub fn operations(&self) -> Vec<String> {
        if self.mode == CompilationMode::Basic {
            return vec!["record".into()];
        }
        let mut ops = vec!["startExecution".to_string()];
        ops.extend(self.externals.iter().map(|b| b.complete_function()));
        if self.mode == CompilationMode::Full {
            ops.extend(["setInstanceIndex", "handleEvent", "terminate", "broadcastSignal"].map(String::from));
        }
        ops
    }
}
