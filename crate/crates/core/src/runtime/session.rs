//! A compilation deployed on its own ledger, with helpers to walk instance
//! trees and check workitems in. Used by the engine, replay and tests.

use crate::compiler::ir::{CompiledContract, ExternalBinding, Resource, Trigger};
use crate::compiler::{Compilation, CompilationMode};
use crate::ledger::{Ledger, LedgerError, Receipt, Vm};
use crate::value::Value;
use crate::word::{Address, Bytes32, Word};

use super::{deploy, instantiate, ContractCode, ContractType, DeployError, Deployment};

/// A started user task or armed message boundary waiting for its check-in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenItem {
    pub instance: Address,
    pub element: u32,
    pub element_id: String,
    pub function: String,
    /// Worklist or service holding the workitem; `None` for flat contracts.
    pub resource: Option<Address>,
    pub workitem: Option<u64>,
}

pub struct Session<V: Vm<Program = ContractCode>> {
    pub ledger: Ledger<V>,
    pub comp: Compilation,
    pub deployment: Deployment,
    pub admin: Address,
}

impl<V: Vm<Program = ContractCode> + Clone> Clone for Session<V> {
    fn clone(&self) -> Self {
        Session {
            ledger: self.ledger.clone(),
            comp: self.comp.clone(),
            deployment: self.deployment.clone(),
            admin: self.admin,
        }
    }
}

fn word_of(v: &[Value]) -> Word {
    v.first().and_then(Value::as_uint).unwrap_or(Word::ZERO)
}

impl<V: Vm<Program = ContractCode>> Session<V> {
    pub fn new(vm: V, comp: Compilation) -> Result<Self, DeployError> {
        let mut ledger = Ledger::new(vm);
        let admin = Address::from_label("admin");
        let deployment = deploy(&mut ledger, admin, &comp)?;
        Ok(Session { ledger, comp, deployment, admin })
    }

    pub fn instantiate(&mut self) -> Result<(Address, u64), DeployError> {
        instantiate(&mut self.ledger, self.admin, &self.comp, &self.deployment)
    }

    /// Contract an instance runs.
    pub fn contract_of(&self, inst: Address) -> Option<&CompiledContract> {
        match (self.comp.mode, self.deployment.registry) {
            (CompilationMode::Full, Some(reg)) => {
                let out = self.ledger.call(reg, "findHashFor", &[Value::Address(inst), Value::uint(ContractType::Process as u64)]).ok()?;
                let hash = out.first()?.as_bytes32()?;
                if hash == Bytes32::ZERO {
                    return None;
                }
                self.comp.contract(&hash.to_hex())
            }
            _ => self.ledger.is_contract(inst).then(|| self.comp.root_contract()),
        }
    }

    pub fn read(&self, inst: Address, op: &str) -> Result<Word, LedgerError> {
        Ok(word_of(&self.ledger.call(inst, op, &[])?))
    }

    pub fn marking(&self, inst: Address) -> Word {
        self.read(inst, "marking").unwrap_or(Word::ZERO)
    }

    pub fn started(&self, inst: Address) -> Word {
        self.read(inst, "startedActivities").unwrap_or(Word::ZERO)
    }

    pub fn status(&self, inst: Address) -> u64 {
        self.read(inst, "status").ok().and_then(|w| w.to_u64()).unwrap_or(0)
    }

    pub fn children(&self, inst: Address) -> Vec<Address> {
        if self.comp.mode != CompilationMode::Full {
            return Vec::new();
        }
        let out = self.ledger.call(inst, "subInstances", &[]).unwrap_or_default();
        out.iter().filter_map(Value::as_address).filter(|a| !a.is_zero()).collect()
    }

    /// The instance and all its descendants, parents first.
    pub fn tree(&self, root: Address) -> Vec<Address> {
        let mut out = vec![root];
        let mut i = 0;
        while i < out.len() {
            let kids = self.children(out[i]);
            out.extend(kids);
            i += 1;
        }
        out
    }

    pub fn variable(&self, inst: Address, name: &str) -> Option<Value> {
        self.ledger.call(inst, "variable", &[Value::Bytes32(Bytes32::from_text(name))]).ok()?.into_iter().next()
    }

    fn resource_of(&self, inst: Address, b: &ExternalBinding) -> Option<Address> {
        let op = match b.resource {
            Resource::Direct => return None,
            Resource::Worklist => "findWorklist",
            Resource::Service => "findServiceBridge",
        };
        self.ledger.call(inst, op, &[]).ok()?.first()?.as_address()
    }

    /// Open items of one instance, in element order.
    pub fn open_items(&self, inst: Address) -> Vec<OpenItem> {
        let Some(c) = self.contract_of(inst) else { return Vec::new() };
        if c.mode == CompilationMode::Basic {
            return Vec::new();
        }
        let started = self.started(inst);
        let armed = self.read(inst, "armed").unwrap_or(Word::ZERO);
        let mut out = Vec::new();
        for b in &c.externals {
            let live = match b.trigger {
                Trigger::Task => started.test_bit(b.index as usize),
                Trigger::Boundary { .. } => armed.test_bit(b.index as usize),
            };
            if !live {
                continue;
            }
            let resource = self.resource_of(inst, b);
            let workitem = resource.and_then(|wl| {
                let ids = self.ledger.call(wl, "workitemsFor", &[Value::uint(b.index as u64), Value::Address(inst)]).ok()?;
                ids.last().and_then(Value::as_uint).and_then(|w| w.to_u64())
            });
            out.push(OpenItem {
                instance: inst,
                element: b.index,
                element_id: b.id.clone(),
                function: b.function.clone(),
                resource,
                workitem,
            });
        }
        out
    }

    /// Open item for `element_id` anywhere under `root`, first in tree order.
    pub fn find_open(&self, root: Address, element_id: &str) -> Option<OpenItem> {
        self.tree(root).into_iter().flat_map(|i| self.open_items(i)).find(|o| o.element_id == element_id)
    }

    /// Submits the check-in for an open item.
    pub fn check_in(&mut self, user: Address, item: &OpenItem, args: Vec<Value>) -> Result<Receipt, LedgerError> {
        match (item.resource, item.workitem) {
            (Some(res), Some(id)) => {
                let mut a = vec![Value::uint(id)];
                a.extend(args);
                self.ledger.send(user, res, &item.function, a)
            }
            _ => self.ledger.send(user, item.instance, &item.function, args),
        }
    }

    /// Check-in of `element_id` under `root`; `None` when nothing is open for it.
    pub fn complete(&mut self, root: Address, element_id: &str, args: Vec<Value>) -> Option<Receipt> {
        let item = self.find_open(root, element_id)?;
        let user = Address::from_label("user");
        self.check_in(user, &item, args).ok()
    }

    /// Every node of the tree has neither tokens nor started elements.
    pub fn quiescent(&self, root: Address) -> bool {
        self.tree(root).into_iter().all(|i| self.marking(i).is_zero() && self.started(i).is_zero())
    }
}
