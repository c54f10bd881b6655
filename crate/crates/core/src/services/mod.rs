//! Off-chain runtime: deployment mediator, execution monitor and event
//! monitor over one shared ledger and one repository.

mod http;
mod monitor;
mod view;

pub use http::router;
pub use monitor::Notification;
pub use view::{InstanceRef, InstanceStateView, ModelDetail, ModelSummary, ParamValue, TaskEntry, TaskInstance};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Mutex, MutexGuard};

use tokio::sync::broadcast;

use crate::compiler::{compile_with, Compilation, CompilationMode, CompileError, ElementType};
use crate::guard::Param;
use crate::ledger::{Ledger, LedgerError, LogEntry, Receipt, SharedLedger};
use crate::model::parse_bpmn_str;
use crate::repository::{ArtifactBundle, RepoError, Repository};
use crate::runtime::{deploy, instantiate, ContractType, DeployError, Deployment, ProcessVm};
use crate::value::Value;
use crate::word::{Address, Bytes32, Word};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("CompilationFailed: {}", .0.join("; "))]
    CompilationFailed(Vec<String>),
    #[error("UnknownModel: {0}")]
    UnknownModel(String),
    #[error("UnknownInstance: {0}")]
    UnknownInstance(String),
    #[error("UnknownWorkitem: {resource} #{id}")]
    UnknownWorkitem { resource: String, id: u64 },
    #[error("BadInput: {0}")]
    BadInput(String),
    #[error("LedgerRejection: {reason}")]
    LedgerRejection { reason: String, receipt: Box<Receipt> },
    #[error(transparent)]
    Repository(#[from] RepoError),
    #[error("{0}")]
    Internal(String),
}

impl From<LedgerError> for ServiceError {
    fn from(e: LedgerError) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

impl From<DeployError> for ServiceError {
    fn from(e: DeployError) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

struct ModelEntry {
    name: String,
    comp: Compilation,
    deployments: Vec<Deployment>,
}

#[derive(Default)]
struct Inner {
    models: BTreeMap<String, ModelEntry>,
    /// Contract hash to the model hash that first produced it.
    contract_model: BTreeMap<String, String>,
    registries: Vec<Address>,
    monitor: monitor::Monitor,
}

/// Shared state behind the REST handlers. Lock order: `inner`, then the ledger.
pub struct Engine {
    repo: Repository,
    ledger: SharedLedger<ProcessVm>,
    admin: Address,
    user: Address,
    inner: Mutex<Inner>,
    events: broadcast::Sender<Notification>,
}

fn hash_of(v: &[Value]) -> Option<String> {
    let h = v.first()?.as_bytes32()?;
    (h != Bytes32::ZERO).then(|| h.to_hex())
}

fn first_address(v: &[Value]) -> Address {
    v.first().and_then(Value::as_address).unwrap_or(Address::ZERO)
}

/// JSON input to a value of the declared type. Values that do not parse
/// are passed on as-is so the worklist's own argument check rejects them.
fn json_value(p: &Param, v: &serde_json::Value, enums: &crate::guard::EnumTable) -> Value {
    let text = match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if let Ok(x) = Value::parse_text(&p.ty, &text, enums) {
        return x;
    }
    match v {
        serde_json::Value::Bool(b) => Value::Bool(*b),
        serde_json::Value::Number(n) => Value::uint(n.as_u64().unwrap_or(0)),
        _ => Value::Bytes32(Bytes32::from_text(&text)),
    }
}

impl Engine {
    pub fn new(repo: Repository) -> Self {
        Self::with_ledger(repo, Ledger::new(ProcessVm))
    }

    pub fn with_ledger(repo: Repository, ledger: Ledger<ProcessVm>) -> Self {
        let (events, _) = broadcast::channel(1024);
        Engine {
            repo,
            ledger: SharedLedger::new(ledger),
            admin: Address::from_label("admin"),
            user: Address::from_label("rest-user"),
            inner: Mutex::new(Inner::default()),
            events,
        }
    }

    pub fn ledger(&self) -> &SharedLedger<ProcessVm> {
        &self.ledger
    }

    pub fn repository(&self) -> &Repository {
        &self.repo
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Notification> {
        self.events.subscribe()
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Compiles in full mode, stores the bundle, deploys factories and
    /// resources and registers every relation. Returns the model hash.
    pub fn deploy_model(&self, xml: &str) -> Result<String, ServiceError> {
        let model = parse_bpmn_str(xml).map_err(|e| ServiceError::CompilationFailed(vec![e.to_string()]))?;
        let resolve = |h: &str| self.repo.get(h).ok().and_then(|b| String::from_utf8(b.bpmn_xml).ok());
        let comp = compile_with(&model, CompilationMode::Full, &resolve).map_err(|e| match e {
            CompileError::Invalid(ds) => ServiceError::CompilationFailed(ds.iter().map(|d| d.to_string()).collect()),
            other => ServiceError::CompilationFailed(vec![other.to_string()]),
        })?;
        let hash = self.repo.put(&ArtifactBundle::from_compilation(xml.as_bytes(), &comp))?;
        let mut inner = self.lock();
        let d = self.ledger.write(|l| deploy(l, self.admin, &comp))?;
        if let Some(r) = d.registry {
            inner.registries.push(r);
        }
        for c in &comp.contracts {
            inner.contract_model.entry(c.hash()).or_insert_with(|| hash.clone());
        }
        let name = if model.name.is_empty() { model.id.clone() } else { model.name.clone() };
        let e = inner.models.entry(hash.clone()).or_insert(ModelEntry { name, comp, deployments: Vec::new() });
        e.deployments.push(d);
        self.sync(&mut inner);
        Ok(hash)
    }

    /// Name and hash of every stored model, deployed ones included.
    pub fn models(&self) -> Result<Vec<ModelSummary>, ServiceError> {
        let inner = self.lock();
        let mut out = Vec::new();
        for h in self.repo.list()? {
            let name = match inner.models.get(&h) {
                Some(e) => e.name.clone(),
                None => {
                    let b = self.repo.get(&h)?;
                    let xml = String::from_utf8_lossy(&b.bpmn_xml).into_owned();
                    parse_bpmn_str(&xml).map(|m| m.name).unwrap_or_default()
                }
            };
            out.push(ModelSummary { name, hash: h.clone(), href: format!("/models/{h}") });
        }
        Ok(out)
    }

    pub fn model(&self, hash: &str) -> Result<ModelDetail, ServiceError> {
        let b = self.repo.get(hash).map_err(|e| match e {
            RepoError::NotFound(h) => ServiceError::UnknownModel(h),
            other => other.into(),
        })?;
        let comp = b.compilation().map_err(ServiceError::Internal)?;
        let inner = self.lock();
        let name = inner.models.get(hash).map(|e| e.name.clone()).unwrap_or_default();
        Ok(ModelDetail {
            hash: hash.to_string(),
            name,
            mode: b.mode,
            bpmn: String::from_utf8_lossy(&b.bpmn_xml).into_owned(),
            contracts: String::from_utf8_lossy(&b.rendered_text).into_owned(),
            dictionary: comp.dictionary,
            deployed: inner.models.contains_key(hash),
        })
    }

    /// Creates and starts a root instance on the latest deployment.
    /// A model stored in full mode but not deployed here is deployed first.
    pub fn instantiate(&self, hash: &str) -> Result<InstanceRef, ServiceError> {
        let known = self.lock().models.contains_key(hash);
        if !known && self.repo.contains(hash) {
            let b = self.repo.get(hash)?;
            if b.mode == CompilationMode::Full {
                self.deploy_model(&String::from_utf8_lossy(&b.bpmn_xml))?;
            }
        }
        let mut inner = self.lock();
        let e = inner.models.get(hash).ok_or_else(|| ServiceError::UnknownModel(hash.to_string()))?;
        let d = e.deployments.last().expect("deployed models have a deployment").clone();
        let comp = e.comp.clone();
        let (addr, gas) = self.ledger.write(|l| instantiate(l, self.user, &comp, &d))?;
        self.sync(&mut inner);
        Ok(InstanceRef { address: addr.to_string(), href: format!("/processes/{addr}"), gas: Some(gas) })
    }

    /// Deployments of a model, oldest first.
    pub fn deployments(&self, hash: &str) -> Vec<Deployment> {
        self.lock().models.get(hash).map(|e| e.deployments.clone()).unwrap_or_default()
    }

    /// Root instances of a model, across its deployments, oldest first.
    pub fn instances(&self, hash: &str) -> Result<Vec<InstanceRef>, ServiceError> {
        let inner = self.lock();
        let e = inner.models.get(hash).ok_or_else(|| ServiceError::UnknownModel(hash.to_string()))?;
        let l = self.ledger.read();
        let root = Value::Bytes32(Bytes32::from_hex(&e.comp.root).ok_or_else(|| ServiceError::Internal("bad root hash".into()))?);
        let mut out = Vec::new();
        for d in &e.deployments {
            let reg = d.registry.expect("full deployments have a registry");
            for v in l.call(reg, "instancesOf", std::slice::from_ref(&root))? {
                let a = v.as_address().unwrap_or(Address::ZERO);
                if l.call(a, "parent", &[]).map(|p| first_address(&p).is_zero()).unwrap_or(false) {
                    out.push(InstanceRef { address: a.to_string(), href: format!("/processes/{a}"), gas: None });
                }
            }
        }
        Ok(out)
    }

    fn registry_for(inner: &Inner, l: &Ledger<ProcessVm>, a: Address, ty: ContractType) -> Option<(Address, String)> {
        inner.registries.iter().find_map(|r| {
            let out = l.call(*r, "findHashFor", &[Value::Address(a), Value::uint(ty as u64)]).ok()?;
            hash_of(&out).map(|h| (*r, h))
        })
    }

    fn compilation_of<'a>(inner: &'a Inner, contract: &str) -> Option<(&'a str, &'a Compilation)> {
        let mh = inner.contract_model.get(contract)?;
        inner.models.get(mh).map(|e| (mh.as_str(), &e.comp))
    }

    /// Depth-first walk of the instance tree from `process`, collecting
    /// open workitems and service tasks of every started element.
    pub fn instance_state_for(&self, process: Address) -> Result<InstanceStateView, ServiceError> {
        let mut inner = self.lock();
        self.sync(&mut inner);
        let l = self.ledger.read();
        let unknown = || ServiceError::UnknownInstance(process.to_string());
        let (_, root_hash) = Self::registry_for(&inner, &l, process, ContractType::Process).ok_or_else(unknown)?;
        let (model_hash, _) = Self::compilation_of(&inner, &root_hash).ok_or_else(unknown)?;
        let mut view = InstanceStateView::new(model_hash, &format!("/processes/{process}"));
        let mut pending = vec![process];
        let mut visited = BTreeSet::new();
        while let Some(inst) = pending.pop() {
            if !visited.insert(inst) {
                continue;
            }
            let Some((_, hash)) = Self::registry_for(&inner, &l, inst, ContractType::Process) else { continue };
            let Some((_, comp)) = Self::compilation_of(&inner, &hash) else { continue };
            let Some(dict) = comp.dictionary.contract(&hash) else { continue };
            let enums = comp.contract(&hash).map(|c| c.decls.enum_table()).unwrap_or_default();
            let worklist = first_address(&l.call(inst, "findWorklist", &[])?);
            let service = first_address(&l.call(inst, "findServiceBridge", &[])?);
            let started = l.call(inst, "startedActivities", &[])?.first().and_then(Value::as_uint).unwrap_or(Word::ZERO);
            for idx in started.bits() {
                let idx = idx as u32;
                let Some(entry) = dict.entry(idx) else { continue };
                let (resource, base, services) = match dict.type_of(idx) {
                    ElementType::Workitem => (worklist, "worklists", false),
                    ElementType::Service => (service, "services", true),
                    ElementType::SeparateInstance => {
                        for v in l.call(inst, "findStartedInstances", &[Value::uint(idx as u64)])? {
                            pending.push(v.as_address().unwrap_or(Address::ZERO));
                        }
                        continue;
                    }
                    ElementType::Internal => continue,
                };
                let ids = l.call(resource, "workitemsFor", &[Value::uint(idx as u64), Value::Address(inst)])?;
                let leaf = if services { "tasks" } else { "workitems" };
                for id in ids.iter().filter_map(Value::as_uint).filter_map(|w| w.to_u64()) {
                    let exports = inner.monitor.exports(resource, id).unwrap_or_default();
                    let export_parameters = entry
                        .export_parameters
                        .iter()
                        .zip(exports.iter().chain(std::iter::repeat(&Value::uint(0))))
                        .map(|(p, v)| ParamValue { ty: p.ty.to_string(), name: p.name.clone(), value: v.display_text(&enums) })
                        .collect();
                    let inst_entry =
                        TaskInstance { export_parameters, href: format!("/{base}/{resource}/{leaf}/{id}") };
                    view.add(services, entry, inst_entry);
                }
            }
        }
        Ok(view)
    }

    /// Looks up the element behind a workitem and calls its check-in
    /// function on the worklist (or service bridge) with `inputs`.
    pub fn execute_task(
        &self,
        resource: Address,
        kind: ContractType,
        id: u64,
        inputs: &serde_json::Value,
    ) -> Result<Receipt, ServiceError> {
        let mut inner = self.lock();
        let unknown = || ServiceError::UnknownWorkitem { resource: resource.to_string(), id };
        let (function, args) = {
            let l = self.ledger.read();
            let (_, hash) = Self::registry_for(&inner, &l, resource, kind).ok_or_else(unknown)?;
            let elem = l
                .call(resource, "elementIndexFor", &[Value::uint(id)])
                .map_err(|_| unknown())?
                .first()
                .and_then(Value::as_uint)
                .and_then(|w| w.to_u64())
                .ok_or_else(unknown)? as u32;
            let (_, comp) = Self::compilation_of(&inner, &hash).ok_or_else(unknown)?;
            let entry = comp.dictionary.contract(&hash).and_then(|d| d.entry(elem)).ok_or_else(unknown)?;
            let function = entry.function_name.clone().ok_or_else(unknown)?;
            let enums = comp.contract(&hash).map(|c| c.decls.enum_table()).unwrap_or_default();
            let mut args = vec![Value::uint(id)];
            match inputs {
                serde_json::Value::Null => {}
                serde_json::Value::Object(m) => {
                    for p in &entry.import_parameters {
                        let v = m.get(&p.name).ok_or_else(|| ServiceError::BadInput(format!("missing `{}`", p.name)))?;
                        args.push(json_value(p, v, &enums));
                    }
                }
                serde_json::Value::Array(vs) => {
                    for (i, v) in vs.iter().enumerate() {
                        match entry.import_parameters.get(i) {
                            Some(p) => args.push(json_value(p, v, &enums)),
                            None => args.push(json_value(&Param { ty: crate::value::Type::Uint, name: String::new() }, v, &enums)),
                        }
                    }
                }
                other => return Err(ServiceError::BadInput(format!("inputs must be an object or a list, not {other}"))),
            }
            (function, args)
        };
        let r = self.ledger.write(|l| l.send(self.user, resource, &function, args))?;
        self.sync(&mut inner);
        match r.reason() {
            Some(reason) => Err(ServiceError::LedgerRejection { reason: reason.to_string(), receipt: Box::new(r) }),
            None => Ok(r),
        }
    }

    /// Turns log entries not seen yet into notifications and returns them.
    pub fn event_monitor_poll(&self) -> Vec<Notification> {
        let mut inner = self.lock();
        self.sync(&mut inner)
    }

    /// Notifications with sequence number at or above `from`.
    pub fn notifications_since(&self, from: u64) -> Vec<Notification> {
        let mut inner = self.lock();
        self.sync(&mut inner);
        inner.monitor.since(from)
    }

    fn workitem_element(inner: &Inner, l: &Ledger<ProcessVm>, log: &LogEntry) -> Option<(String, Vec<Param>)> {
        if !(log.name.ends_with("_Requested") || log.name == "WorkitemCompleted") {
            return None;
        }
        let id = log.payload.first()?.as_uint()?.to_u64()?;
        let elem = l.call(log.emitter, "elementIndexFor", &[Value::uint(id)]).ok()?.first()?.as_uint()?.to_u64()? as u32;
        let (_, hash) = [ContractType::Worklist, ContractType::Service]
            .into_iter()
            .find_map(|t| Self::registry_for(inner, l, log.emitter, t))?;
        let (_, comp) = Self::compilation_of(inner, &hash)?;
        let e = comp.dictionary.contract(&hash)?.entry(elem)?;
        Some((e.id.clone(), e.export_parameters.clone()))
    }

    fn sync(&self, inner: &mut Inner) -> Vec<Notification> {
        let l = self.ledger.read();
        let start = inner.monitor.cursor;
        let logs = &l.logs()[start..];
        let mut fresh = Vec::new();
        for log in logs {
            let element = Self::workitem_element(inner, &l, log);
            let model = match log.name.as_str() {
                "NewInstanceCreated" => hash_of(&log.payload).and_then(|h| inner.contract_model.get(&h).cloned()),
                _ => None,
            };
            if let Some(n) = inner.monitor.ingest(log, element, model) {
                let _ = self.events.send(n.clone());
                fresh.push(n);
            }
        }
        inner.monitor.cursor = start + logs.len();
        fresh
    }
}
