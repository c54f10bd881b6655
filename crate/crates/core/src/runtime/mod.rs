//! Interprets compiled contracts on the ledger: process instances, worklists,
//! service bridges, factories, the runtime registry and the Basic-mode recorder.

mod deploy;
mod process;
mod registry;
mod resource;
mod session;

use serde::{Deserialize, Serialize};

use crate::compiler::ir::{CompiledContract, Resource};
use crate::compiler::CompilationMode;
use crate::guard::{Decls, Param};
use crate::ledger::{Host, Revert, Storage, Vm};
use crate::value::{Type, Value};
use crate::word::{Address, Bytes32, Word};

pub use deploy::{deploy, instantiate, ContractAddresses, DeployError, Deployment};
pub use process::{init_storage, Status};
pub use registry::{ContractType, ResourceKind};
pub use session::{OpenItem, Session};

/// One check-in function served by a worklist or service bridge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceFn {
    pub function: String,
    pub element: u32,
    pub exports: Vec<Param>,
    pub imports: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCode {
    /// Hash of the process contract this resource serves.
    pub process: String,
    pub decls: Decls,
    pub functions: Vec<ResourceFn>,
}

impl ResourceCode {
    /// Resource for the externals of `c` bound to `kind`; `None` if there are none.
    pub fn for_contract(c: &CompiledContract, kind: Resource) -> Option<Self> {
        let functions: Vec<ResourceFn> = c
            .externals
            .iter()
            .filter(|b| b.resource == kind)
            .map(|b| ResourceFn {
                function: b.function.clone(),
                element: b.index,
                exports: b.exports.clone(),
                imports: b.imports.clone(),
            })
            .collect();
        if functions.is_empty() {
            None
        } else {
            Some(ResourceCode { process: c.hash(), decls: c.decls.clone(), functions })
        }
    }

    pub fn function(&self, name: &str) -> Option<&ResourceFn> {
        self.functions.iter().find(|f| f.function == name)
    }
}

/// Contract image as stored on the ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ContractCode {
    /// Process instance, or the Basic-mode recorder when `mode == Basic`.
    Process(CompiledContract),
    Worklist(ResourceCode),
    Service(ResourceCode),
    Registry,
    Factory { process: Box<CompiledContract> },
}

impl ContractCode {
    pub fn to_image(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("contract code serializes")
    }

    pub fn from_image(image: &[u8]) -> Result<Self, String> {
        serde_json::from_slice(image).map_err(|e| e.to_string())
    }

    pub fn read_only_ops(&self) -> &'static [&'static str] {
        match self {
            ContractCode::Process(c) if c.mode == CompilationMode::Basic => &["recordCount", "recordAt"],
            ContractCode::Process(_) => &[
                "marking",
                "startedActivities",
                "armed",
                "status",
                "findWorklist",
                "findServiceBridge",
                "findStartedInstances",
                "subInstances",
                "variable",
                "variables",
                "parent",
                "instanceIndex",
            ],
            ContractCode::Worklist(_) | ContractCode::Service(_) => {
                &["workitemsFor", "elementIndexFor", "instanceFor", "workitemCount", "processHash"]
            }
            ContractCode::Registry => {
                &["findHashFor", "instancesOf", "factoryFor", "resourceFor", "childFor"]
            }
            ContractCode::Factory { .. } => &["processHash"],
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProcessVm;

impl Vm for ProcessVm {
    type Program = ContractCode;

    fn load(&self, image: &[u8]) -> Result<ContractCode, String> {
        ContractCode::from_image(image)
    }

    fn is_read_only(&self, p: &ContractCode, op: &str) -> bool {
        p.read_only_ops().contains(&op)
    }

    fn execute(&self, p: &ContractCode, host: &mut dyn Host, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
        match p {
            ContractCode::Process(c) if c.mode == CompilationMode::Basic => process::recorder(host, op, args),
            ContractCode::Process(c) => process::execute(c, host, op, args),
            ContractCode::Worklist(r) | ContractCode::Service(r) => resource::execute(r, host, op, args),
            ContractCode::Registry => registry::execute_registry(host, op, args),
            ContractCode::Factory { process } => registry::execute_factory(process, host, op, args),
        }
    }
}

pub(crate) fn revert<T>(msg: impl Into<String>) -> Result<T, Revert> {
    Err(Revert::new(msg))
}

pub(crate) fn arg_uint(args: &[Value], i: usize) -> Result<Word, Revert> {
    args.get(i).and_then(Value::as_uint).ok_or_else(|| Revert(format!("BadArguments: argument {i} must be uint")))
}

pub(crate) fn arg_u64(args: &[Value], i: usize) -> Result<u64, Revert> {
    arg_uint(args, i)?.to_u64().ok_or_else(|| Revert(format!("BadArguments: argument {i} out of range")))
}

pub(crate) fn arg_address(args: &[Value], i: usize) -> Result<Address, Revert> {
    args.get(i).and_then(Value::as_address).ok_or_else(|| Revert(format!("BadArguments: argument {i} must be address")))
}

pub(crate) fn arg_bytes32(args: &[Value], i: usize) -> Result<Bytes32, Revert> {
    args.get(i).and_then(Value::as_bytes32).ok_or_else(|| Revert(format!("BadArguments: argument {i} must be bytes32")))
}

/// Checks that `args` fit `params` exactly (count, type, enum range).
pub(crate) fn check_args(params: &[Param], args: &[Value], decls: &Decls) -> Result<(), Revert> {
    if params.len() != args.len() {
        return revert(format!("BadArguments: expected {} values, got {}", params.len(), args.len()));
    }
    let enums = decls.enum_table();
    for (p, a) in params.iter().zip(args) {
        let ok = match (&p.ty, a) {
            (Type::Enum(t), Value::Enum { ty, ordinal }) => {
                t == ty && enums.len(t).is_some_and(|n| (*ordinal as usize) < n)
            }
            (t, v) => *t == v.type_of(),
        };
        if !ok {
            return revert(format!("BadArguments: `{}` must be {}, got {}", p.name, p.ty, a.type_of()));
        }
    }
    Ok(())
}

pub(crate) fn hash_word(hash: &str) -> Result<Bytes32, Revert> {
    Bytes32::from_hex(hash).ok_or_else(|| Revert(format!("bad hash {hash}")))
}

pub(crate) fn store_addr(h: &mut dyn Host, key: &str, a: Address) -> Result<(), Revert> {
    h.sstore(key, a.to_word())
}

pub(crate) fn load_addr(h: &mut dyn Host, key: &str) -> Result<Address, Revert> {
    Ok(Address::from_word(h.sload(key)?))
}

/// Image and constructor storage for a worklist or service bridge.
pub fn resource_image(code: &ResourceCode, kind: Resource) -> Vec<u8> {
    match kind {
        Resource::Service => ContractCode::Service(code.clone()).to_image(),
        _ => ContractCode::Worklist(code.clone()).to_image(),
    }
}

pub fn factory_image(c: &CompiledContract) -> Vec<u8> {
    ContractCode::Factory { process: Box::new(c.clone()) }.to_image()
}

pub fn factory_init(registry: Address) -> Storage {
    Storage::from([("registry".to_string(), registry.to_word())])
}

pub fn process_image(c: &CompiledContract) -> Vec<u8> {
    ContractCode::Process(c.clone()).to_image()
}

#[cfg(test)]
mod tests;
