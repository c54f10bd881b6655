//! Putting a compilation on a ledger and creating instances of it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compiler::ir::Resource;
use crate::compiler::{Compilation, CompilationMode};
use crate::ledger::{Ledger, LedgerError, Receipt, Storage, Vm};
use crate::value::Value;
use crate::word::{Address, Bytes32};

use super::{factory_image, factory_init, init_storage, process_image, resource_image, ContractCode, ResourceCode, ResourceKind};

#[derive(Debug, thiserror::Error)]
pub enum DeployError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("{op} rejected: {reason}")]
    Rejected { op: String, reason: String },
}

/// Addresses serving one contract hash.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractAddresses {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factory: Option<Address>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worklist: Option<Address>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment {
    pub mode: CompilationMode,
    pub root: String,
    /// Full mode only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub registry: Option<Address>,
    pub contracts: BTreeMap<String, ContractAddresses>,
    /// Gas spent setting up the deployment.
    pub gas: u64,
}

fn accepted(op: &str, r: Receipt) -> Result<Receipt, DeployError> {
    match r.reason() {
        Some(reason) => Err(DeployError::Rejected { op: op.to_string(), reason: reason.to_string() }),
        None => Ok(r),
    }
}

fn hash_arg(hash: &str) -> Value {
    Value::Bytes32(Bytes32::from_hex(hash).expect("contract hashes are hex"))
}

/// One-off setup. Flat modes need none: every instance is its own deployment.
pub fn deploy<V: Vm<Program = ContractCode>>(
    ledger: &mut Ledger<V>,
    sender: Address,
    comp: &Compilation,
) -> Result<Deployment, DeployError> {
    let mut d = Deployment {
        mode: comp.mode,
        root: comp.root.clone(),
        registry: None,
        contracts: BTreeMap::new(),
        gas: 0,
    };
    if comp.mode != CompilationMode::Full {
        return Ok(d);
    }
    let (registry, r) = ledger.deploy(sender, ContractCode::Registry.to_image(), Storage::new())?;
    d.gas += accepted("deploy registry", r)?.gas_used;
    d.registry = Some(registry);
    for c in &comp.contracts {
        let hash = c.hash();
        let mut a = ContractAddresses::default();
        let (factory, r) = ledger.deploy(sender, factory_image(c), factory_init(registry))?;
        d.gas += accepted("deploy factory", r)?.gas_used;
        let r = ledger.send(sender, registry, "registerFactory", vec![hash_arg(&hash), Value::Address(factory)])?;
        d.gas += accepted("registerFactory", r)?.gas_used;
        a.factory = Some(factory);
        for (kind, rk) in [(Resource::Worklist, ResourceKind::Worklist), (Resource::Service, ResourceKind::Service)] {
            let Some(code) = ResourceCode::for_contract(c, kind) else { continue };
            let (addr, r) = ledger.deploy(sender, resource_image(&code, kind), Storage::new())?;
            d.gas += accepted("deploy resource", r)?.gas_used;
            let args = vec![hash_arg(&hash), Value::uint(rk as u64), Value::Address(addr)];
            let r = ledger.send(sender, registry, "registerResource", args)?;
            d.gas += accepted("registerResource", r)?.gas_used;
            match kind {
                Resource::Service => a.service = Some(addr),
                _ => a.worklist = Some(addr),
            }
        }
        d.contracts.insert(hash, a);
    }
    for rel in &comp.relations {
        let args = vec![hash_arg(&rel.parent), Value::uint(rel.element as u64), hash_arg(&rel.child)];
        let r = ledger.send(sender, registry, "relateProcess", args)?;
        d.gas += accepted("relateProcess", r)?.gas_used;
    }
    Ok(d)
}

/// A fresh root instance and the gas its creation and start cost.
pub fn instantiate<V: Vm<Program = ContractCode>>(
    ledger: &mut Ledger<V>,
    sender: Address,
    comp: &Compilation,
    d: &Deployment,
) -> Result<(Address, u64), DeployError> {
    let root = comp.root_contract();
    match comp.mode {
        CompilationMode::Basic => {
            let (addr, r) = ledger.deploy(sender, process_image(root), Storage::new())?;
            Ok((addr, accepted("deploy", r)?.gas_used))
        }
        CompilationMode::Default | CompilationMode::Optimized => {
            let init = init_storage(root, Address::ZERO, Address::ZERO, Address::ZERO, Address::ZERO);
            let (addr, r) = ledger.deploy(sender, process_image(root), init)?;
            let mut gas = accepted("deploy", r)?.gas_used;
            gas += accepted("startExecution", ledger.send(sender, addr, "startExecution", vec![])?)?.gas_used;
            Ok((addr, gas))
        }
        CompilationMode::Full => {
            let registry = d.registry.expect("full deployments have a registry");
            let r = accepted("newInstanceFor", ledger.send(sender, registry, "newInstanceFor", vec![hash_arg(&d.root)])?)?;
            let mut gas = r.gas_used;
            let addr = r.output.first().and_then(Value::as_address).expect("registry returns the instance");
            gas += accepted("startExecution", ledger.send(sender, addr, "startExecution", vec![])?)?.gas_used;
            Ok((addr, gas))
        }
    }
}
