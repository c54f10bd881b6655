//! Event monitor: ledger log entries to notifications, deduplicated on
//! (block, log index).

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::guard::Param;
use crate::ledger::LogEntry;
use crate::value::Value;
use crate::word::Address;

use super::view::ParamValue;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Notification {
    #[serde(rename_all = "camelCase")]
    InstanceCreated {
        seq: u64,
        block: u64,
        log_index: u64,
        address: String,
        parent: Option<String>,
        /// Model hash when the contract came from a deployed model.
        process_identifier: Option<String>,
        href: String,
    },
    #[serde(rename_all = "camelCase")]
    WorkitemRequested {
        seq: u64,
        block: u64,
        log_index: u64,
        resource: String,
        id: u64,
        element_id: Option<String>,
        export_parameters: Vec<ParamValue>,
    },
    #[serde(rename_all = "camelCase")]
    WorkitemCompleted { seq: u64, block: u64, log_index: u64, resource: String, id: u64, element_id: Option<String> },
}

impl Notification {
    pub fn seq(&self) -> u64 {
        match self {
            Notification::InstanceCreated { seq, .. }
            | Notification::WorkitemRequested { seq, .. }
            | Notification::WorkitemCompleted { seq, .. } => *seq,
        }
    }

    pub fn key(&self) -> (u64, u64) {
        match self {
            Notification::InstanceCreated { block, log_index, .. }
            | Notification::WorkitemRequested { block, log_index, .. }
            | Notification::WorkitemCompleted { block, log_index, .. } => (*block, *log_index),
        }
    }
}

#[derive(Debug, Default)]
pub(super) struct Monitor {
    /// Log entries consumed so far.
    pub cursor: usize,
    seen: BTreeSet<(u64, u64)>,
    exports: HashMap<(Address, u64), Vec<Value>>,
    history: Vec<Notification>,
}

impl Monitor {
    /// Export values carried by the request event of a workitem.
    pub fn exports(&self, resource: Address, id: u64) -> Option<Vec<Value>> {
        self.exports.get(&(resource, id)).cloned()
    }

    pub fn since(&self, from: u64) -> Vec<Notification> {
        self.history.iter().filter(|n| n.seq() >= from).cloned().collect()
    }

    /// `element` is the element id and export parameters of the workitem
    /// the entry is about; `model` the model hash of a new instance.
    pub fn ingest(
        &mut self,
        log: &LogEntry,
        element: Option<(String, Vec<Param>)>,
        model: Option<String>,
    ) -> Option<Notification> {
        if !self.seen.insert((log.block, log.index)) {
            return None;
        }
        let seq = self.history.len() as u64;
        let (block, log_index) = (log.block, log.index);
        let id = || log.payload.first().and_then(Value::as_uint).and_then(|w| w.to_u64());
        let n = match log.name.as_str() {
            "NewInstanceCreated" => {
                let addr = log.payload.get(1)?.as_address()?;
                let parent = log.payload.get(2).and_then(Value::as_address).filter(|p| !p.is_zero());
                Notification::InstanceCreated {
                    seq,
                    block,
                    log_index,
                    address: addr.to_string(),
                    parent: parent.map(|p| p.to_string()),
                    process_identifier: model,
                    href: format!("/processes/{addr}"),
                }
            }
            "WorkitemCompleted" => Notification::WorkitemCompleted {
                seq,
                block,
                log_index,
                resource: log.emitter.to_string(),
                id: id()?,
                element_id: element.map(|e| e.0),
            },
            name if name.ends_with("_Requested") => {
                let id = id()?;
                let values: Vec<Value> = log.payload[1..].to_vec();
                let params = element.as_ref().map(|e| e.1.clone()).unwrap_or_default();
                let export_parameters = params
                    .iter()
                    .zip(&values)
                    .map(|(p, v)| ParamValue {
                        ty: p.ty.to_string(),
                        name: p.name.clone(),
                        value: v.display_text(&Default::default()),
                    })
                    .collect();
                self.exports.insert((log.emitter, id), values);
                Notification::WorkitemRequested {
                    seq,
                    block,
                    log_index,
                    resource: log.emitter.to_string(),
                    id,
                    element_id: element.map(|e| e.0),
                    export_parameters,
                }
            }
            _ => return None,
        };
        self.history.push(n.clone());
        Some(n)
    }
}
