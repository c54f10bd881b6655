//! In-memory process graph parsed from BPMN 2.0 XML.

mod annotation;
mod parse;
pub mod partition;
mod validate;
mod write;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::guard::{Decls, Expr};

pub use annotation::{parse_annotation, parse_annotation_checked, print_annotation, AnnotationError, TaskAnnotation};
pub use parse::{parse_bpmn, parse_bpmn_str, ParseError};
pub use validate::{validate_model, Diagnostic, DiagnosticCode, Severity, MAX_EDGES, MAX_NODES};
pub use write::write_bpmn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventType {
    None,
    Message,
    Signal,
    Error,
    Escalation,
    Terminate,
}

/// Event trigger or result; `code` names the error, signal or escalation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventDef {
    #[serde(rename = "type")]
    pub ty: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

impl EventDef {
    pub fn none() -> Self {
        EventDef { ty: EventType::None, code: None }
    }

    pub fn of(ty: EventType, code: Option<&str>) -> Self {
        EventDef { ty, code: code.map(str::to_string) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TaskKind {
    User,
    Service,
    Script,
    Receive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GatewayKind {
    Exclusive,
    Parallel,
    EventBased,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NodeKind {
    StartEvent(EventDef),
    EndEvent(EventDef),
    IntermediateThrow(EventDef),
    IntermediateCatch(EventDef),
    Task(TaskKind),
    Gateway(GatewayKind),
    CallActivity { called: String },
    EmbeddedSubprocess,
    EventSubprocess { interrupting: bool },
    BoundaryEvent { interrupting: bool, event: EventDef },
}

impl NodeKind {
    /// BPMN element name used in diagnostics and dictionaries.
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::StartEvent(_) => "startEvent",
            NodeKind::EndEvent(_) => "endEvent",
            NodeKind::IntermediateThrow(_) => "intermediateThrowEvent",
            NodeKind::IntermediateCatch(_) => "intermediateCatchEvent",
            NodeKind::Task(TaskKind::User) => "userTask",
            NodeKind::Task(TaskKind::Service) => "serviceTask",
            NodeKind::Task(TaskKind::Script) => "scriptTask",
            NodeKind::Task(TaskKind::Receive) => "receiveTask",
            NodeKind::Gateway(GatewayKind::Exclusive) => "exclusiveGateway",
            NodeKind::Gateway(GatewayKind::Parallel) => "parallelGateway",
            NodeKind::Gateway(GatewayKind::EventBased) => "eventBasedGateway",
            NodeKind::CallActivity { .. } => "callActivity",
            NodeKind::EmbeddedSubprocess => "subProcess",
            NodeKind::EventSubprocess { .. } => "eventSubProcess",
            NodeKind::BoundaryEvent { .. } => "boundaryEvent",
        }
    }

    pub fn is_subprocess(&self) -> bool {
        matches!(self, NodeKind::EmbeddedSubprocess | NodeKind::EventSubprocess { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MultiInstance {
    None,
    Parallel(Expr),
    Sequential(Expr),
}

impl MultiInstance {
    pub fn is_none(&self) -> bool {
        matches!(self, MultiInstance::None)
    }

    pub fn cardinality(&self) -> Option<&Expr> {
        match self {
            MultiInstance::None => None,
            MultiInstance::Parallel(e) | MultiInstance::Sequential(e) => Some(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowNode {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    pub multi_instance: MultiInstance,
    pub annotation: Option<TaskAnnotation>,
    pub attached_to: Option<String>,
    /// Enclosing subprocess id; `None` at the process level.
    pub scope: Option<String>,
}

impl FlowNode {
    pub fn new(id: &str, name: &str, kind: NodeKind) -> Self {
        FlowNode {
            id: id.to_string(),
            name: name.to_string(),
            kind,
            multi_instance: MultiInstance::None,
            annotation: None,
            attached_to: None,
            scope: None,
        }
    }

    pub fn in_scope(mut self, scope: Option<&str>) -> Self {
        self.scope = scope.map(str::to_string);
        self
    }

    pub fn with_annotation(mut self, a: TaskAnnotation) -> Self {
        self.annotation = Some(a);
        self
    }

    /// Display name, falling back to the id.
    pub fn label(&self) -> &str {
        if self.name.trim().is_empty() {
            &self.id
        } else {
            &self.name
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SequenceFlow {
    pub id: String,
    pub name: String,
    pub source: String,
    pub target: String,
    pub condition: Option<Expr>,
    pub is_default: bool,
}

impl SequenceFlow {
    pub fn new(id: &str, source: &str, target: &str) -> Self {
        SequenceFlow {
            id: id.to_string(),
            name: String::new(),
            source: source.to_string(),
            target: target.to_string(),
            condition: None,
            is_default: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ChildModel {
    Inline(Box<ProcessModel>),
    /// Repository hash of a previously stored model.
    Hash(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessModel {
    pub id: String,
    pub name: String,
    pub decls: Decls,
    /// Nodes in document order.
    pub nodes: Vec<FlowNode>,
    /// Sequence flows in document order.
    pub edges: Vec<SequenceFlow>,
    /// Call-activity node id to the process it invokes.
    pub child_models: BTreeMap<String, ChildModel>,
}

impl ProcessModel {
    pub fn new(id: &str, name: &str) -> Self {
        ProcessModel {
            id: id.to_string(),
            name: name.to_string(),
            decls: Decls::default(),
            nodes: Vec::new(),
            edges: Vec::new(),
            child_models: BTreeMap::new(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn edge(&self, id: &str) -> Option<&SequenceFlow> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn incoming<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a SequenceFlow> + 'a {
        self.edges.iter().filter(move |e| e.target == node)
    }

    pub fn outgoing<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a SequenceFlow> + 'a {
        self.edges.iter().filter(move |e| e.source == node)
    }

    /// Nodes whose enclosing scope is exactly `scope`.
    pub fn nodes_in<'a>(&'a self, scope: Option<&'a str>) -> impl Iterator<Item = &'a FlowNode> + 'a {
        self.nodes.iter().filter(move |n| n.scope.as_deref() == scope)
    }

    pub fn boundaries_of<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a FlowNode> + 'a {
        self.nodes.iter().filter(move |n| n.attached_to.as_deref() == Some(node))
    }

    /// The untyped start event of a process or embedded-subprocess scope,
    /// or the typed start of an event subprocess.
    pub fn start_of<'a>(&'a self, scope: Option<&'a str>) -> Option<&'a FlowNode> {
        self.nodes_in(scope).find(|n| matches!(n.kind, NodeKind::StartEvent(_)))
    }

    /// True if `node` is `ancestor` or nested (transitively) inside it.
    pub fn is_within(&self, node: &str, ancestor: &str) -> bool {
        let mut cur = Some(node.to_string());
        while let Some(id) = cur {
            if id == ancestor {
                return true;
            }
            cur = self.node(&id).and_then(|n| n.scope.clone());
        }
        false
    }
}

#[cfg(test)]
mod tests;
