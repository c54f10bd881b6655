//! Splits one process model into the element sets that become separate
//! contracts: the process itself, each multi-instance subprocess body,
//! each non-interrupting event subprocess body, and each handler flow
//! of a non-interrupting boundary event. Call activities refer to other
//! models and are handled by the caller.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::*;

/// How the runtime treats an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ElementClass {
    /// Executed inline by the token game.
    Internal,
    /// Waits for an actor outside the ledger.
    External,
    /// Runs in a separate contract instance.
    Reusable,
}

pub fn classify(n: &FlowNode) -> ElementClass {
    match &n.kind {
        NodeKind::Task(TaskKind::User | TaskKind::Service | TaskKind::Receive) => ElementClass::External,
        NodeKind::IntermediateCatch(d) if d.ty == EventType::Message => ElementClass::External,
        NodeKind::BoundaryEvent { interrupting: false, .. } => ElementClass::Reusable,
        NodeKind::BoundaryEvent { event, .. } if event.ty == EventType::Message => ElementClass::External,
        NodeKind::CallActivity { .. } => ElementClass::Reusable,
        NodeKind::EmbeddedSubprocess if !n.multi_instance.is_none() => ElementClass::Reusable,
        NodeKind::EventSubprocess { interrupting: false } => ElementClass::Reusable,
        _ => ElementClass::Internal,
    }
}

/// Why a contract exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Origin {
    Root,
    CallActivity,
    MultiInstance,
    BoundaryHandler,
    EventSubprocess,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    /// Node that spawns this unit; `None` for the process itself.
    pub key: Option<String>,
    pub origin: Origin,
    /// Member node ids in document order.
    pub nodes: Vec<String>,
    /// Member edge ids in document order.
    pub edges: Vec<String>,
    /// Index of the parent unit within the same partition.
    pub parent: Option<usize>,
}

/// Nodes reachable from a non-interrupting boundary event, stopping at
/// nested non-interrupting boundaries.
pub fn handler_flow(m: &ProcessModel, boundary: &str) -> Vec<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut stack: Vec<String> = m.outgoing(boundary).map(|e| e.target.clone()).collect();
    while let Some(id) = stack.pop() {
        if !seen.insert(id.clone()) {
            continue;
        }
        for b in m.boundaries_of(&id) {
            stack.push(b.id.clone());
        }
        let is_nested_handler = matches!(m.node(&id).map(|n| &n.kind), Some(NodeKind::BoundaryEvent { interrupting: false, .. }));
        if !is_nested_handler {
            stack.extend(m.outgoing(&id).map(|e| e.target.clone()));
        }
    }
    m.nodes.iter().filter(|n| seen.contains(&n.id)).map(|n| n.id.clone()).collect()
}

/// Owning unit key for every node (`None` = the process itself).
pub fn owners(m: &ProcessModel) -> BTreeMap<String, Option<String>> {
    let mut handler_of: BTreeMap<String, String> = BTreeMap::new();
    for n in &m.nodes {
        if let NodeKind::BoundaryEvent { interrupting: false, .. } = n.kind {
            for member in handler_flow(m, &n.id) {
                handler_of.entry(member).or_insert_with(|| n.id.clone());
            }
        }
    }
    let mut out: BTreeMap<String, Option<String>> = BTreeMap::new();
    // Document order guarantees a subprocess precedes its content, and a
    // boundary event precedes its handler flow only sometimes, so resolve lazily.
    fn resolve(
        m: &ProcessModel,
        id: &str,
        handler_of: &BTreeMap<String, String>,
        memo: &mut BTreeMap<String, Option<String>>,
    ) -> Option<String> {
        if let Some(v) = memo.get(id) {
            return v.clone();
        }
        let owner = if let Some(b) = handler_of.get(id) {
            Some(b.clone())
        } else {
            match m.node(id).and_then(|n| n.scope.clone()) {
                None => None,
                Some(s) => {
                    let sn = m.node(&s).expect("scope exists");
                    if classify(sn) == ElementClass::Reusable {
                        Some(s)
                    } else {
                        resolve(m, &s, handler_of, memo)
                    }
                }
            }
        };
        memo.insert(id.to_string(), owner.clone());
        owner
    }
    for n in &m.nodes {
        resolve(m, &n.id, &handler_of, &mut out);
    }
    out
}

/// Contract units of `m`, the process itself first, then the others in document order.
pub fn partition(m: &ProcessModel) -> Vec<Unit> {
    let owner = owners(m);
    let mut keys: Vec<Option<String>> = vec![None];
    for n in &m.nodes {
        let spawns_unit = match n.kind {
            NodeKind::BoundaryEvent { interrupting: false, .. } => true,
            NodeKind::EmbeddedSubprocess => !n.multi_instance.is_none(),
            NodeKind::EventSubprocess { interrupting: false } => true,
            _ => false,
        };
        if spawns_unit {
            keys.push(Some(n.id.clone()));
        }
    }
    let index_of: BTreeMap<Option<String>, usize> = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    keys.iter()
        .map(|k| {
            let origin = match k {
                None => Origin::Root,
                Some(id) => match m.node(id).map(|n| &n.kind) {
                    Some(NodeKind::BoundaryEvent { .. }) => Origin::BoundaryHandler,
                    Some(NodeKind::EventSubprocess { .. }) => Origin::EventSubprocess,
                    _ => Origin::MultiInstance,
                },
            };
            let nodes: Vec<String> =
                m.nodes.iter().filter(|n| owner.get(&n.id) == Some(k)).map(|n| n.id.clone()).collect();
            let edges: Vec<String> =
                m.edges.iter().filter(|e| owner.get(&e.target) == Some(k)).map(|e| e.id.clone()).collect();
            let parent = k.as_ref().map(|id| index_of[&owner[id]]);
            Unit { key: k.clone(), origin, nodes, edges, parent }
        })
        .collect()
}
