use std::collections::{BTreeMap, BTreeSet};

use roxmltree::{Document, Node};

use crate::guard::{parse_decls, parse_expr, parse_stmts, GuardError};

use super::annotation::{parse_annotation, AnnotationError, TaskAnnotation};
use super::*;

/// Documentation `textFormat` marking a process-level variable block.
pub const VARIABLES_FORMAT: &str = "caterpillar:variables";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("XML syntax error: {0}")]
    XmlSyntax(String),
    #[error("unsupported element `{kind}` ({id})")]
    UnsupportedElement { kind: String, id: String },
    #[error("dangling reference in `{0}`")]
    DanglingReference(String),
    #[error("invalid model at `{id}`: {message}")]
    InvalidModel { id: String, message: String },
    #[error("annotation of `{id}`: {source}")]
    Annotation { id: String, source: AnnotationError },
    #[error("expression in `{id}`: {source}")]
    Guard { id: String, source: GuardError },
    #[error("no process element found")]
    NoProcess,
    #[error("call activities form a cycle through `{0}`")]
    CyclicCallActivity(String),
}

fn invalid(id: &str, message: impl Into<String>) -> ParseError {
    ParseError::InvalidModel { id: id.to_string(), message: message.into() }
}

fn unsupported(kind: &str, id: &str) -> ParseError {
    ParseError::UnsupportedElement { kind: kind.to_string(), id: id.to_string() }
}

/// Ids of `<error>`, `<signal>` and `<escalation>` definitions mapped to their codes.
#[derive(Default)]
struct EventCodes {
    errors: BTreeMap<String, String>,
    signals: BTreeMap<String, String>,
    escalations: BTreeMap<String, String>,
}

fn attr<'a>(n: Node<'a, '_>, name: &str) -> Option<&'a str> {
    n.attributes().find(|a| a.name() == name).map(|a| a.value())
}

fn id_of(n: Node<'_, '_>) -> String {
    attr(n, "id").unwrap_or("").to_string()
}

fn text_of(n: Node<'_, '_>) -> String {
    n.descendants().filter(|d| d.is_text()).filter_map(|d| d.text()).collect::<String>()
}

fn elements<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(|c| c.is_element())
}

const IGNORED: &[&str] = &[
    "documentation",
    "extensionElements",
    "laneSet",
    "textAnnotation",
    "association",
    "dataObject",
    "dataObjectReference",
    "dataStoreReference",
    "ioSpecification",
    "dataInputAssociation",
    "dataOutputAssociation",
    "property",
    "incoming",
    "outgoing",
    "group",
    "category",
    // read by multi_instance()
    "multiInstanceLoopCharacteristics",
];

pub fn parse_bpmn(xml: &[u8]) -> Result<ProcessModel, ParseError> {
    let text = std::str::from_utf8(xml).map_err(|e| ParseError::XmlSyntax(e.to_string()))?;
    parse_bpmn_str(text)
}

pub fn parse_bpmn_str(xml: &str) -> Result<ProcessModel, ParseError> {
    let doc = Document::parse(xml).map_err(|e| ParseError::XmlSyntax(e.to_string()))?;
    let defs = doc.root_element();

    let mut codes = EventCodes::default();
    for n in elements(defs) {
        let id = id_of(n);
        let pick = |keys: &[&str]| keys.iter().find_map(|k| attr(n, k)).unwrap_or(&id).to_string();
        match n.tag_name().name() {
            "error" => {
                codes.errors.insert(id.clone(), pick(&["errorCode", "name"]));
            }
            "signal" => {
                codes.signals.insert(id.clone(), pick(&["name"]));
            }
            "escalation" => {
                codes.escalations.insert(id.clone(), pick(&["escalationCode", "name"]));
            }
            _ => {}
        }
    }

    let mut processes: Vec<ProcessModel> = Vec::new();
    let process_nodes: Vec<Node> = if defs.tag_name().name() == "process" {
        vec![defs]
    } else {
        elements(defs).filter(|n| n.tag_name().name() == "process").collect()
    };
    for p in process_nodes {
        processes.push(parse_process(p, &codes)?);
    }
    if processes.is_empty() {
        return Err(ParseError::NoProcess);
    }

    let called: BTreeSet<String> = processes
        .iter()
        .flat_map(|p| p.nodes.iter())
        .filter_map(|n| match &n.kind {
            NodeKind::CallActivity { called } => Some(called.clone()),
            _ => None,
        })
        .collect();
    let root = processes
        .iter()
        .find(|p| !called.contains(&p.id))
        .ok_or_else(|| ParseError::CyclicCallActivity(processes[0].id.clone()))?
        .id
        .clone();
    let by_id: BTreeMap<String, ProcessModel> = processes.into_iter().map(|p| (p.id.clone(), p)).collect();
    link_children(&root, &by_id, &mut Vec::new())
}

fn link_children(
    id: &str,
    by_id: &BTreeMap<String, ProcessModel>,
    stack: &mut Vec<String>,
) -> Result<ProcessModel, ParseError> {
    if stack.iter().any(|s| s == id) {
        return Err(ParseError::CyclicCallActivity(id.to_string()));
    }
    stack.push(id.to_string());
    let mut model = by_id[id].clone();
    for n in &model.nodes {
        if let NodeKind::CallActivity { called } = &n.kind {
            let child = if by_id.contains_key(called) {
                ChildModel::Inline(Box::new(link_children(called, by_id, stack)?))
            } else if called.len() == 64 && called.bytes().all(|b| b.is_ascii_hexdigit()) {
                ChildModel::Hash(called.to_ascii_lowercase())
            } else {
                return Err(ParseError::DanglingReference(n.id.clone()));
            };
            model.child_models.insert(n.id.clone(), child);
        }
    }
    stack.pop();
    Ok(model)
}

fn parse_process(p: Node<'_, '_>, codes: &EventCodes) -> Result<ProcessModel, ParseError> {
    let id = id_of(p);
    let mut model = ProcessModel::new(&id, attr(p, "name").unwrap_or(""));
    for d in elements(p).filter(|n| n.tag_name().name() == "documentation") {
        if attr(d, "textFormat") == Some(VARIABLES_FORMAT) {
            model.decls = parse_decls(&text_of(d)).map_err(|source| ParseError::Guard { id: id.clone(), source })?;
        }
    }
    let mut defaults = BTreeSet::new();
    parse_container(p, None, codes, &mut model, &mut defaults)?;
    for e in &mut model.edges {
        e.is_default = defaults.contains(&e.id);
    }
    check_invariants(&model)?;
    Ok(model)
}

fn event_def(n: Node<'_, '_>, codes: &EventCodes, id: &str) -> Result<EventDef, ParseError> {
    let mut found: Option<EventDef> = None;
    for c in elements(n) {
        let tag = c.tag_name().name();
        let def = match tag {
            "messageEventDefinition" => EventDef::none_of(EventType::Message),
            "terminateEventDefinition" => EventDef::none_of(EventType::Terminate),
            "signalEventDefinition" => {
                EventDef { ty: EventType::Signal, code: lookup(attr(c, "signalRef"), &codes.signals, id)? }
            }
            "errorEventDefinition" => {
                EventDef { ty: EventType::Error, code: lookup(attr(c, "errorRef"), &codes.errors, id)? }
            }
            "escalationEventDefinition" => EventDef {
                ty: EventType::Escalation,
                code: lookup(attr(c, "escalationRef"), &codes.escalations, id)?,
            },
            t if t.ends_with("EventDefinition") => return Err(unsupported(t, id)),
            _ => continue,
        };
        if found.is_some() {
            return Err(unsupported("multiple event definitions", id));
        }
        found = Some(def);
    }
    Ok(found.unwrap_or_else(EventDef::none))
}

fn lookup(r: Option<&str>, table: &BTreeMap<String, String>, id: &str) -> Result<Option<String>, ParseError> {
    match r {
        None | Some("") => Ok(None),
        Some(r) => table.get(r).cloned().map(Some).ok_or_else(|| ParseError::DanglingReference(id.to_string())),
    }
}

impl EventDef {
    fn none_of(ty: EventType) -> Self {
        EventDef { ty, code: None }
    }
}

fn documentation(n: Node<'_, '_>) -> Option<String> {
    elements(n).find(|c| c.tag_name().name() == "documentation").map(text_of)
}

/// Documentation reads as an annotation when it opens with `(`; prose is ignored.
fn annotation_of(n: Node<'_, '_>, id: &str) -> Result<Option<TaskAnnotation>, ParseError> {
    match documentation(n) {
        Some(text) if text.trim_start().starts_with('(') => parse_annotation(text.trim())
            .map(Some)
            .map_err(|source| ParseError::Annotation { id: id.to_string(), source }),
        _ => Ok(None),
    }
}

fn multi_instance(n: Node<'_, '_>, id: &str) -> Result<MultiInstance, ParseError> {
    let Some(mi) = elements(n).find(|c| c.tag_name().name() == "multiInstanceLoopCharacteristics") else {
        if elements(n).any(|c| c.tag_name().name() == "standardLoopCharacteristics") {
            return Err(unsupported("standardLoopCharacteristics", id));
        }
        return Ok(MultiInstance::None);
    };
    let text = mi
        .attributes()
        .find(|a| a.name() == "cardinality" && a.namespace().is_some())
        .map(|a| a.value().to_string())
        .or_else(|| elements(mi).find(|c| c.tag_name().name() == "loopCardinality").map(text_of))
        .ok_or_else(|| invalid(id, "multi-instance activity without cardinality"))?;
    let expr = parse_expr(text.trim()).map_err(|source| ParseError::Guard { id: id.to_string(), source })?;
    Ok(if attr(mi, "isSequential") == Some("true") {
        MultiInstance::Sequential(expr)
    } else {
        MultiInstance::Parallel(expr)
    })
}

fn parse_container(
    container: Node<'_, '_>,
    scope: Option<&str>,
    codes: &EventCodes,
    model: &mut ProcessModel,
    defaults: &mut BTreeSet<String>,
) -> Result<(), ParseError> {
    for n in elements(container) {
        let tag = n.tag_name().name();
        let id = id_of(n);
        let name = attr(n, "name").unwrap_or("").to_string();
        if tag == "sequenceFlow" {
            let mut e = SequenceFlow::new(&id, attr(n, "sourceRef").unwrap_or(""), attr(n, "targetRef").unwrap_or(""));
            e.name = name;
            if let Some(c) = elements(n).find(|c| c.tag_name().name() == "conditionExpression") {
                let text = text_of(c);
                if !text.trim().is_empty() {
                    e.condition =
                        Some(parse_expr(text.trim()).map_err(|source| ParseError::Guard { id: id.clone(), source })?);
                }
            }
            model.edges.push(e);
            continue;
        }
        if IGNORED.contains(&tag) {
            continue;
        }
        let kind = match tag {
            "startEvent" => NodeKind::StartEvent(event_def(n, codes, &id)?),
            "endEvent" => NodeKind::EndEvent(event_def(n, codes, &id)?),
            "intermediateThrowEvent" => NodeKind::IntermediateThrow(event_def(n, codes, &id)?),
            "intermediateCatchEvent" => NodeKind::IntermediateCatch(event_def(n, codes, &id)?),
            "boundaryEvent" => NodeKind::BoundaryEvent {
                interrupting: attr(n, "cancelActivity") != Some("false"),
                event: event_def(n, codes, &id)?,
            },
            "userTask" => NodeKind::Task(TaskKind::User),
            "serviceTask" => NodeKind::Task(TaskKind::Service),
            "scriptTask" => NodeKind::Task(TaskKind::Script),
            "receiveTask" => NodeKind::Task(TaskKind::Receive),
            "exclusiveGateway" => NodeKind::Gateway(GatewayKind::Exclusive),
            "parallelGateway" => NodeKind::Gateway(GatewayKind::Parallel),
            "eventBasedGateway" => NodeKind::Gateway(GatewayKind::EventBased),
            "callActivity" => NodeKind::CallActivity { called: attr(n, "calledElement").unwrap_or("").to_string() },
            "subProcess" if attr(n, "triggeredByEvent") == Some("true") => {
                let interrupting = elements(n)
                    .find(|c| c.tag_name().name() == "startEvent")
                    .map(|s| attr(s, "isInterrupting") != Some("false"))
                    .unwrap_or(true);
                NodeKind::EventSubprocess { interrupting }
            }
            "subProcess" => NodeKind::EmbeddedSubprocess,
            other => return Err(unsupported(other, &id)),
        };
        if id.is_empty() {
            return Err(invalid(tag, "element without id"));
        }
        if let Some(d) = attr(n, "default") {
            defaults.insert(d.to_string());
        }
        let mut node = FlowNode::new(&id, &name, kind).in_scope(scope);
        node.multi_instance = multi_instance(n, &id)?;
        node.attached_to = attr(n, "attachedToRef").map(str::to_string);
        node.annotation = match &node.kind {
            NodeKind::Task(TaskKind::Script) => {
                let body = elements(n).find(|c| c.tag_name().name() == "script").map(text_of).unwrap_or_default();
                let ops = parse_stmts(&body).map_err(|source| ParseError::Guard { id: id.clone(), source })?;
                Some(TaskAnnotation::script(ops))
            }
            NodeKind::Task(_)
            | NodeKind::IntermediateCatch(_)
            | NodeKind::IntermediateThrow(_)
            | NodeKind::EndEvent(_)
            | NodeKind::BoundaryEvent { .. }
            | NodeKind::StartEvent(_) => annotation_of(n, &id)?,
            _ => None,
        };
        let nested = node.kind.is_subprocess();
        model.nodes.push(node);
        if nested {
            parse_container(n, Some(&id), codes, model, defaults)?;
        }
    }
    Ok(())
}

pub(crate) fn check_invariants(m: &ProcessModel) -> Result<(), ParseError> {
    let mut ids = BTreeSet::new();
    for n in &m.nodes {
        if !ids.insert(n.id.as_str()) {
            return Err(invalid(&n.id, "duplicate node id"));
        }
    }
    let mut edge_ids = BTreeSet::new();
    for e in &m.edges {
        if e.id.is_empty() || !edge_ids.insert(e.id.as_str()) || ids.contains(e.id.as_str()) {
            return Err(invalid(&e.id, "duplicate or missing sequence flow id"));
        }
        let (Some(s), Some(t)) = (m.node(&e.source), m.node(&e.target)) else {
            return Err(ParseError::DanglingReference(e.id.clone()));
        };
        if s.scope != t.scope {
            return Err(invalid(&e.id, "sequence flow crosses a subprocess boundary"));
        }
    }
    for n in &m.nodes {
        match &n.kind {
            NodeKind::BoundaryEvent { .. } => {
                let target = n
                    .attached_to
                    .as_deref()
                    .and_then(|a| m.node(a))
                    .ok_or_else(|| ParseError::DanglingReference(n.id.clone()))?;
                if target.scope != n.scope {
                    return Err(invalid(&n.id, "boundary event outside the scope of its activity"));
                }
                if m.incoming(&n.id).next().is_some() {
                    return Err(invalid(&n.id, "boundary event with incoming flow"));
                }
            }
            NodeKind::EventSubprocess { .. } => {
                if m.incoming(&n.id).next().is_some() || m.outgoing(&n.id).next().is_some() {
                    return Err(invalid(&n.id, "event subprocess with sequence flows"));
                }
            }
            _ => {
                if n.attached_to.is_some() {
                    return Err(invalid(&n.id, "attachedToRef on a non-boundary element"));
                }
            }
        }
        if !n.multi_instance.is_none()
            && !matches!(n.kind, NodeKind::CallActivity { .. } | NodeKind::EmbeddedSubprocess)
        {
            return Err(unsupported("multiInstanceLoopCharacteristics", &n.id));
        }
    }
    // one start event per scope: untyped for processes and subprocesses, typed for event subprocesses
    let mut scopes: Vec<(Option<&str>, bool, &str)> = vec![(None, false, m.id.as_str())];
    for n in &m.nodes {
        match n.kind {
            NodeKind::EmbeddedSubprocess => scopes.push((Some(&n.id), false, &n.id)),
            NodeKind::EventSubprocess { .. } => scopes.push((Some(&n.id), true, &n.id)),
            _ => {}
        }
    }
    for (scope, typed, cite) in scopes {
        let starts: Vec<&FlowNode> =
            m.nodes_in(scope).filter(|n| matches!(n.kind, NodeKind::StartEvent(_))).collect();
        if starts.len() != 1 {
            return Err(invalid(cite, format!("expected exactly one start event, found {}", starts.len())));
        }
        let NodeKind::StartEvent(def) = &starts[0].kind else { unreachable!() };
        if typed == (def.ty == EventType::None) {
            let msg = if typed {
                "event subprocess needs a triggered start event"
            } else {
                "process start event must be untyped"
            };
            return Err(invalid(&starts[0].id, msg));
        }
    }
    Ok(())
}
