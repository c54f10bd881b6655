//! Log replay: classify traces as conforming or not and measure gas per
//! compilation mode.
//!
//! Every distinct trace runs once, on its own copy of the freshly deployed
//! ledger, so its gas does not depend on which traces ran before it.

mod log;
mod noise;
mod report;

pub use log::{dedupe, Event, EventLog, LogError, Trace};
pub use noise::inject_noise;
pub use report::{overhead, table, CostReport, ModeCost, ReportRow};

use crate::compiler::ir::{ExternalBinding, Resource};
use crate::compiler::{compile, CompilationMode, CompileError};
use crate::ledger::{Ledger, Receipt};
use crate::model::{NodeKind, ProcessModel};
use crate::runtime::{DeployError, ProcessVm, Session};
use crate::value::Value;
use crate::word::{Address, Bytes32};

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("UnknownTask({0})")]
    UnknownTask(String),
    #[error("task `{task}`: {message}")]
    BadInput { task: String, message: String },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Deploy(#[from] DeployError),
    #[error(transparent)]
    Ledger(#[from] crate::ledger::LedgerError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceResult {
    /// No transaction of the trace was rejected.
    pub conforming: bool,
    /// Event positions whose transaction was rejected.
    pub rejected: Vec<usize>,
    pub reasons: Vec<String>,
    pub instantiation_gas: u64,
    /// All event transactions, rejected ones included.
    pub execution_gas: u64,
    /// The instance tree holds no tokens and no started elements.
    pub completed: bool,
    /// Rejections that changed storage or logs; always 0 unless the ledger is broken.
    pub mutating_rejections: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReplayOptions {
    /// Compare storage and logs around each rejected transaction.
    pub verify_rejections: bool,
}

/// A model compiled and deployed in one mode, ready to replay traces.
#[derive(Clone)]
pub struct Replayer {
    pub mode: CompilationMode,
    model: ProcessModel,
    base: Session<ProcessVm>,
    user: Address,
}

fn state_of(l: &Ledger<ProcessVm>) -> (Vec<(Address, crate::ledger::Storage)>, usize) {
    (l.contracts().map(|a| (a, l.storage(a))).collect(), l.logs().len())
}

impl Replayer {
    pub fn new(model: &ProcessModel, mode: CompilationMode) -> Result<Self, ReplayError> {
        let comp = compile(model, mode)?;
        let base = Session::new(ProcessVm, comp)?;
        Ok(Replayer { mode, model: model.clone(), base, user: Address::from_label("user") })
    }

    /// Deployment gas (registry, factories, worklists); 0 in flat modes.
    pub fn deployment_gas(&self) -> u64 {
        self.base.deployment.gas
    }

    fn binding(&self, name: &str) -> Option<(&ExternalBinding, String)> {
        self.base.comp.contracts.iter().find_map(|c| {
            c.externals.iter().find(|b| b.name == name || b.id == name).map(|b| (b, c.hash()))
        })
    }

    fn is_task(&self, name: &str) -> bool {
        self.model.nodes.iter().any(|n| matches!(n.kind, NodeKind::Task(_)) && (n.name == name || n.id == name))
    }

    /// Checks that every event names a task before anything runs.
    pub fn check(&self, t: &Trace) -> Result<(), ReplayError> {
        for e in &t.events {
            let known = match self.mode {
                CompilationMode::Basic => self.is_task(&e.name),
                _ => self.binding(&e.name).is_some(),
            };
            if !known {
                return Err(ReplayError::UnknownTask(e.name.clone()));
            }
        }
        Ok(())
    }

    fn inputs(&self, b: &ExternalBinding, e: &Event) -> Result<Vec<Value>, ReplayError> {
        let enums = self.base.comp.contract(&self.base.comp.root).map(|c| c.decls.enum_table()).unwrap_or_default();
        b.imports
            .iter()
            .map(|p| {
                let bad = |message: String| ReplayError::BadInput { task: e.name.clone(), message };
                let text = e.input(&p.name).ok_or_else(|| bad(format!("missing input `{}`", p.name)))?;
                Value::parse_text(&p.ty, text, &enums).map_err(bad)
            })
            .collect()
    }

    /// Transaction for an event with no open item, so the ledger itself
    /// refuses it.
    fn send_unmatched(
        s: &mut Session<ProcessVm>,
        user: Address,
        root: Address,
        b: &ExternalBinding,
        hash: &str,
        args: Vec<Value>,
    ) -> Result<Receipt, ReplayError> {
        let resource = s.deployment.contracts.get(hash).and_then(|a| match b.resource {
            Resource::Worklist => a.worklist,
            Resource::Service => a.service,
            Resource::Direct => None,
        });
        let r = match resource {
            Some(res) => {
                let next = s.ledger.call(res, "workitemCount", &[])?.first().and_then(Value::as_uint);
                let mut a = vec![Value::Uint(next.unwrap_or_default())];
                a.extend(args);
                s.ledger.send(user, res, &b.function, a)?
            }
            None => s.ledger.send(user, root, &b.function, args)?,
        };
        Ok(r)
    }

    pub fn run(&self, t: &Trace, opts: ReplayOptions) -> Result<TraceResult, ReplayError> {
        self.check(t)?;
        let mut s = self.base.clone();
        let (root, instantiation_gas) = s.instantiate()?;
        let mut out = TraceResult { instantiation_gas, ..TraceResult::default() };
        for (i, e) in t.events.iter().enumerate() {
            let before = opts.verify_rejections.then(|| state_of(&s.ledger));
            let r = if self.mode == CompilationMode::Basic {
                s.ledger.send(self.user, root, "record", vec![Value::Bytes32(Bytes32::from_text(&e.name))])?
            } else {
                let (b, hash) = self.binding(&e.name).expect("checked above");
                let args = self.inputs(b, e)?;
                let open = s.tree(root).into_iter().flat_map(|inst| s.open_items(inst)).find(|o| o.element_id == b.id);
                match open {
                    Some(item) => s.check_in(self.user, &item, args)?,
                    None => Self::send_unmatched(&mut s, self.user, root, b, &hash, args)?,
                }
            };
            out.execution_gas += r.gas_used;
            if let Some(reason) = r.reason() {
                out.rejected.push(i);
                out.reasons.push(reason.to_string());
                if before.is_some_and(|b| b != state_of(&s.ledger)) {
                    out.mutating_rejections += 1;
                }
            }
        }
        out.conforming = out.rejected.is_empty();
        out.completed = self.mode == CompilationMode::Basic || s.quiescent(root);
        Ok(out)
    }
}

/// Outcome of replaying a log in one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub mode: CompilationMode,
    pub conforming: usize,
    pub non_conforming: usize,
    /// Distinct traces with multiplicity and result.
    pub traces: Vec<(Trace, usize, TraceResult)>,
    pub cost: ModeCost,
}

pub fn replay(model: &ProcessModel, log: &EventLog, mode: CompilationMode, opts: ReplayOptions) -> Result<Replay, ReplayError> {
    let r = Replayer::new(model, mode)?;
    let mut traces = Vec::new();
    for (t, n) in dedupe(log) {
        let res = r.run(&t, opts)?;
        traces.push((t, n, res));
    }
    let (mut conforming, mut non_conforming) = (0, 0);
    for (_, n, res) in &traces {
        if res.conforming {
            conforming += n;
        } else {
            non_conforming += n;
        }
    }
    let weighted: Vec<(u64, u64, usize)> =
        traces.iter().map(|(_, n, res)| (res.instantiation_gas, res.execution_gas, *n)).collect();
    let cost = ModeCost::weighted(mode, &weighted);
    Ok(Replay { mode, conforming, non_conforming, traces, cost })
}

/// Replays the log in every mode.
pub fn cost_report(process: &str, model: &ProcessModel, log: &EventLog) -> Result<CostReport, ReplayError> {
    let mut modes = Vec::new();
    for m in [CompilationMode::Basic, CompilationMode::Default, CompilationMode::Optimized, CompilationMode::Full] {
        modes.push(replay(model, log, m, ReplayOptions::default())?.cost);
    }
    Ok(CostReport { process: process.to_string(), tested_traces: log.len(), modes })
}

#[cfg(test)]
mod tests;
