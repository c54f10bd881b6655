use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::guard::{check_decls, typecheck_expr, TypeEnv};
use crate::value::Type;

use super::annotation::check_annotation;
use super::partition::{handler_flow, partition};
use super::*;

/// Largest node index a 256-bit started-activities word can hold (bit 0 is the process).
pub const MAX_NODES: usize = 255;
pub const MAX_EDGES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticCode {
    MissingGuard,
    MultipleDefaults,
    TooManyEdges,
    TooManyNodes,
    MissingIncoming,
    MissingOutgoing,
    UnexpectedIncoming,
    UnexpectedOutgoing,
    TypeError,
    UnsupportedConstruct,
    EventGatewayTarget,
    NonInterruptingMerge,
    InvalidBoundary,
    IgnoredCondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub element_id: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {} @ {}", self.message, self.element_id)
    }
}

struct Sink(Vec<Diagnostic>);

impl Sink {
    fn error(&mut self, code: DiagnosticCode, id: &str, message: impl Into<String>) {
        self.0.push(Diagnostic { severity: Severity::Error, code, message: message.into(), element_id: id.into() });
    }

    fn warn(&mut self, code: DiagnosticCode, id: &str, message: impl Into<String>) {
        self.0.push(Diagnostic { severity: Severity::Warning, code, message: message.into(), element_id: id.into() });
    }
}

/// Structural and type checks; an empty error set means the model compiles.
/// Inline child processes are checked too.
pub fn validate_model(m: &ProcessModel) -> Vec<Diagnostic> {
    let mut sink = Sink(Vec::new());
    check_model(m, &mut sink);
    sink.0
}

fn check_model(m: &ProcessModel, s: &mut Sink) {
    use DiagnosticCode::*;
    let decls_ok = match check_decls(&m.decls) {
        Ok(()) => true,
        Err(e) => {
            s.error(TypeError, &m.id, format!("variable declarations: {e}"));
            false
        }
    };
    let env = TypeEnv::from_decls(&m.decls);

    for n in &m.nodes {
        let ins = m.incoming(&n.id).count();
        let outs = m.outgoing(&n.id).count();
        let need_in = |s: &mut Sink| {
            if ins == 0 {
                s.error(MissingIncoming, &n.id, format!("{} `{}` has no incoming flow", n.kind.label(), n.label()));
            }
        };
        let need_out = |s: &mut Sink| {
            if outs == 0 {
                s.error(MissingOutgoing, &n.id, format!("{} `{}` has no outgoing flow", n.kind.label(), n.label()));
            }
        };
        match &n.kind {
            NodeKind::StartEvent(def) => {
                if ins > 0 {
                    s.error(UnexpectedIncoming, &n.id, "start event with incoming flow");
                }
                need_out(s);
                let in_event_sub = matches!(
                    n.scope.as_deref().and_then(|sc| m.node(sc)).map(|p| &p.kind),
                    Some(NodeKind::EventSubprocess { .. })
                );
                if in_event_sub {
                    match def.ty {
                        EventType::Signal | EventType::Error | EventType::Escalation => {}
                        _ => s.error(
                            UnsupportedConstruct,
                            &n.id,
                            "event subprocess start must be a signal, error or escalation event",
                        ),
                    }
                    if def.ty == EventType::Error {
                        if let Some(NodeKind::EventSubprocess { interrupting: false }) =
                            n.scope.as_deref().and_then(|sc| m.node(sc)).map(|p| &p.kind)
                        {
                            s.error(InvalidBoundary, &n.id, "error start events must interrupt");
                        }
                    }
                }
            }
            NodeKind::EndEvent(_) => {
                need_in(s);
                if outs > 0 {
                    s.error(UnexpectedOutgoing, &n.id, "end event with outgoing flow");
                }
            }
            NodeKind::IntermediateThrow(def) => {
                need_in(s);
                need_out(s);
                if matches!(def.ty, EventType::Error | EventType::Terminate) {
                    s.error(UnsupportedConstruct, &n.id, "intermediate throw of error or terminate");
                }
            }
            NodeKind::IntermediateCatch(def) => {
                need_in(s);
                need_out(s);
                if !matches!(def.ty, EventType::Message | EventType::Signal) {
                    s.error(UnsupportedConstruct, &n.id, "intermediate catch events must be message or signal");
                }
            }
            NodeKind::Task(_) | NodeKind::CallActivity { .. } | NodeKind::EmbeddedSubprocess => {
                need_in(s);
                need_out(s);
            }
            NodeKind::Gateway(kind) => {
                need_in(s);
                need_out(s);
                let defaults = m.outgoing(&n.id).filter(|e| e.is_default).count();
                if defaults > 1 {
                    s.error(MultipleDefaults, &n.id, "more than one default flow");
                }
                if *kind == GatewayKind::Exclusive && outs > 1 {
                    for e in m.outgoing(&n.id) {
                        if e.condition.is_none() && !e.is_default {
                            s.error(
                                MissingGuard,
                                &e.id,
                                format!("flow leaving exclusive gateway `{}` has neither a condition nor the default mark", n.label()),
                            );
                        }
                    }
                }
                if *kind == GatewayKind::EventBased {
                    for e in m.outgoing(&n.id) {
                        let Some(t) = m.node(&e.target) else { continue };
                        let ok = matches!(t.kind, NodeKind::Task(TaskKind::Receive))
                            || matches!(&t.kind, NodeKind::IntermediateCatch(d) if d.ty == EventType::Message);
                        if !ok {
                            s.error(EventGatewayTarget, &t.id, "event-based gateway must lead to message catch events or receive tasks");
                        } else if m.incoming(&t.id).count() != 1 {
                            s.error(EventGatewayTarget, &t.id, "event-based gateway target must have a single incoming flow");
                        }
                    }
                }
            }
            NodeKind::EventSubprocess { .. } => {}
            NodeKind::BoundaryEvent { interrupting, event } => {
                need_out(s);
                let host = n.attached_to.as_deref().and_then(|a| m.node(a));
                let host_ok = host.is_some_and(|h| {
                    matches!(
                        h.kind,
                        NodeKind::Task(TaskKind::User | TaskKind::Service | TaskKind::Receive)
                            | NodeKind::CallActivity { .. }
                            | NodeKind::EmbeddedSubprocess
                    )
                });
                if !host_ok {
                    s.error(InvalidBoundary, &n.id, "boundary events attach to user, service or receive tasks, call activities or subprocesses");
                }
                match event.ty {
                    EventType::Message | EventType::Signal | EventType::Escalation => {}
                    EventType::Error if *interrupting => {}
                    EventType::Error => s.error(InvalidBoundary, &n.id, "error boundary events must interrupt"),
                    _ => s.error(UnsupportedConstruct, &n.id, "boundary events must be message, signal, error or escalation"),
                }
                if !interrupting {
                    let flow: BTreeSet<String> = handler_flow(m, &n.id).into_iter().collect();
                    for member in &flow {
                        for e in m.incoming(member) {
                            if e.source != n.id && !flow.contains(&e.source) {
                                s.error(NonInterruptingMerge, &e.id, "flow joins the handler of a non-interrupting boundary event from outside");
                            }
                        }
                    }
                }
            }
        }

        if decls_ok {
            if let Some(a) = &n.annotation {
                if let Err(e) = check_annotation(a, &m.decls) {
                    s.error(TypeError, &n.id, format!("annotation: {e}"));
                }
            }
            if let Some(card) = n.multi_instance.cardinality() {
                match typecheck_expr(card, &env) {
                    Ok(Type::Uint) => {}
                    Ok(t) => s.error(TypeError, &n.id, format!("cardinality must be uint, found {t}")),
                    Err(e) => s.error(TypeError, &n.id, format!("cardinality: {e}")),
                }
            }
        }
    }

    for e in &m.edges {
        let Some(cond) = &e.condition else { continue };
        let from_xor = matches!(m.node(&e.source).map(|n| &n.kind), Some(NodeKind::Gateway(GatewayKind::Exclusive)));
        if !from_xor {
            s.warn(IgnoredCondition, &e.id, "condition on a flow not leaving an exclusive gateway is ignored");
            continue;
        }
        if decls_ok {
            match typecheck_expr(cond, &env) {
                Ok(Type::Bool) => {}
                Ok(t) => s.error(TypeError, &e.id, format!("condition must be bool, found {t}")),
                Err(err) => s.error(TypeError, &e.id, format!("condition: {err}")),
            }
        }
    }

    for unit in partition(m) {
        if unit.nodes.len() > MAX_NODES {
            s.error(
                TooManyNodes,
                &unit.nodes[MAX_NODES],
                format!("{} elements exceed the {MAX_NODES}-element limit of one contract", unit.nodes.len()),
            );
        }
        if unit.edges.len() > MAX_EDGES {
            s.error(
                TooManyEdges,
                &unit.edges[MAX_EDGES],
                format!("{} sequence flows exceed the {MAX_EDGES}-flow limit of one contract", unit.edges.len()),
            );
        }
    }

    for c in m.child_models.values() {
        if let ChildModel::Inline(child) = c {
            check_model(child, s);
        }
    }
}
