//! Runtime registry (factories, resources, parent/child relations, instance
//! lists) and per-contract factories.

use crate::compiler::ir::CompiledContract;
use crate::ledger::{Host, Revert};
use crate::value::Value;
use crate::word::{Address, Bytes32, Word};

use super::{arg_address, arg_bytes32, arg_u64, load_addr, process_image, revert, store_addr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractType {
    Process = 1,
    Worklist = 2,
    Service = 3,
    Factory = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceKind {
    Worklist = 1,
    Service = 2,
}

impl ResourceKind {
    fn from_u64(v: u64) -> Option<Self> {
        match v {
            1 => Some(ResourceKind::Worklist),
            2 => Some(ResourceKind::Service),
            _ => None,
        }
    }
}

fn hex(b: Bytes32) -> String {
    b.to_hex()
}

pub fn execute_registry(h: &mut dyn Host, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
    match op {
        "registerFactory" => {
            let hash = arg_bytes32(args, 0)?;
            let addr = arg_address(args, 1)?;
            store_addr(h, &format!("factory.{}", hex(hash)), addr)?;
            h.sstore(&format!("hash.{addr}.{}", ContractType::Factory as u64), hash.to_word())?;
            Ok(vec![])
        }
        "registerResource" => {
            let hash = arg_bytes32(args, 0)?;
            let kind = ResourceKind::from_u64(arg_u64(args, 1)?).ok_or_else(|| Revert::new("BadArguments: resource kind"))?;
            let addr = arg_address(args, 2)?;
            store_addr(h, &format!("resource.{}.{}", hex(hash), kind as u64), addr)?;
            let ty = match kind {
                ResourceKind::Worklist => ContractType::Worklist,
                ResourceKind::Service => ContractType::Service,
            };
            h.sstore(&format!("hash.{addr}.{}", ty as u64), hash.to_word())?;
            Ok(vec![])
        }
        "relateProcess" => {
            let parent = arg_bytes32(args, 0)?;
            let idx = arg_u64(args, 1)?;
            let child = arg_bytes32(args, 2)?;
            h.sstore(&format!("child.{}.{idx}", hex(parent)), child.to_word())?;
            Ok(vec![])
        }
        "newInstanceFor" => new_instance_for(h, args),
        "findHashFor" => {
            let addr = arg_address(args, 0)?;
            let ty = arg_u64(args, 1)?;
            Ok(vec![Value::Bytes32(Bytes32::from_word(h.sload(&format!("hash.{addr}.{ty}"))?))])
        }
        "instancesOf" => {
            let hash = hex(arg_bytes32(args, 0)?);
            let n = h.sload(&format!("instances.{hash}.len"))?.to_u64().unwrap_or(0);
            (0..n).map(|i| Ok(Value::Address(load_addr(h, &format!("instances.{hash}.{i}"))?))).collect()
        }
        "factoryFor" => {
            let hash = hex(arg_bytes32(args, 0)?);
            Ok(vec![Value::Address(load_addr(h, &format!("factory.{hash}"))?)])
        }
        "resourceFor" => {
            let hash = hex(arg_bytes32(args, 0)?);
            let kind = arg_u64(args, 1)?;
            Ok(vec![Value::Address(load_addr(h, &format!("resource.{hash}.{kind}"))?)])
        }
        "childFor" => {
            let hash = hex(arg_bytes32(args, 0)?);
            let idx = arg_u64(args, 1)?;
            Ok(vec![Value::Bytes32(Bytes32::from_word(h.sload(&format!("child.{hash}.{idx}"))?))])
        }
        _ => revert(format!("UnknownOperation {op}")),
    }
}

fn new_instance_for(h: &mut dyn Host, args: &[Value]) -> Result<Vec<Value>, Revert> {
    let (hash, parent) = match args {
        [Value::Bytes32(hash)] => (*hash, Address::ZERO),
        [Value::Uint(idx), Value::Address(parent)] => {
            if h.sender() != *parent {
                return revert("ChildInstantiationByExternal");
            }
            let parent_hash = h.sload(&format!("hash.{parent}.{}", ContractType::Process as u64))?;
            if parent_hash.is_zero() {
                return revert("ChildInstantiationByExternal: parent is not a registered instance");
            }
            let key = format!("child.{}.{}", Bytes32::from_word(parent_hash).to_hex(), idx);
            let child = h.sload(&key)?;
            if child.is_zero() {
                return revert(format!("NoRelation: element {idx}"));
            }
            (Bytes32::from_word(child), *parent)
        }
        _ => return revert("BadArguments: newInstanceFor(hash) or newInstanceFor(index, parent)"),
    };
    let hx = hex(hash);
    let factory = load_addr(h, &format!("factory.{hx}"))?;
    if factory.is_zero() {
        return revert(format!("NoFactory: {hx}"));
    }
    let worklist = load_addr(h, &format!("resource.{hx}.{}", ResourceKind::Worklist as u64))?;
    let service = load_addr(h, &format!("resource.{hx}.{}", ResourceKind::Service as u64))?;
    let out = h.call(
        factory,
        "newInstance",
        &[Value::Address(parent), Value::Address(worklist), Value::Address(service)],
    )?;
    let addr = out.first().and_then(Value::as_address).ok_or_else(|| Revert::new("factory returned no address"))?;
    h.sstore(&format!("hash.{addr}.{}", ContractType::Process as u64), hash.to_word())?;
    let n = h.sload(&format!("instances.{hx}.len"))?.to_u64().unwrap_or(0);
    store_addr(h, &format!("instances.{hx}.{n}"), addr)?;
    h.sstore(&format!("instances.{hx}.len"), Word::from_u64(n + 1))?;
    h.emit("NewInstanceCreated", vec![Value::Bytes32(hash), Value::Address(addr), Value::Address(parent)])?;
    Ok(vec![Value::Address(addr)])
}

pub fn execute_factory(c: &CompiledContract, h: &mut dyn Host, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
    match op {
        "processHash" => Ok(vec![Value::Bytes32(super::hash_word(&c.hash())?)]),
        "newInstance" => {
            let registry = load_addr(h, "registry")?;
            if h.sender() != registry {
                return revert("Unauthorized: only the registry creates instances");
            }
            let parent = arg_address(args, 0)?;
            let worklist = arg_address(args, 1)?;
            let service = arg_address(args, 2)?;
            let init = super::init_storage(c, parent, worklist, service, registry);
            let addr = h.create(&process_image(c), init)?;
            Ok(vec![Value::Address(addr)])
        }
        _ => revert(format!("UnknownOperation {op}")),
    }
}
