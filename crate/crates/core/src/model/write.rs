use std::collections::BTreeMap;
use std::fmt::Write;

use crate::guard::{print_decls, print_expr, print_stmt};

use super::annotation::print_annotation;
use super::parse::VARIABLES_FORMAT;
use super::*;

const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
const EXT_NS: &str = "urn:tokenflow:bpmn-extensions";
const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

#[derive(Default)]
struct Codes {
    table: BTreeMap<(u8, String), String>,
}

impl Codes {
    fn key(ty: EventType) -> Option<(u8, &'static str, &'static str)> {
        match ty {
            EventType::Error => Some((0, "error", "errorCode")),
            EventType::Signal => Some((1, "signal", "name")),
            EventType::Escalation => Some((2, "escalation", "escalationCode")),
            _ => None,
        }
    }

    fn collect(&mut self, m: &ProcessModel) {
        for n in &m.nodes {
            let def = match &n.kind {
                NodeKind::StartEvent(d)
                | NodeKind::EndEvent(d)
                | NodeKind::IntermediateThrow(d)
                | NodeKind::IntermediateCatch(d)
                | NodeKind::BoundaryEvent { event: d, .. } => d,
                _ => continue,
            };
            if let (Some((k, tag, _)), Some(code)) = (Self::key(def.ty), &def.code) {
                let next = self.table.len();
                self.table.entry((k, code.clone())).or_insert_with(|| format!("{tag}_{next}"));
            }
        }
        for c in m.child_models.values() {
            if let ChildModel::Inline(child) = c {
                self.collect(child);
            }
        }
    }

    fn id_for(&self, def: &EventDef) -> Option<&str> {
        let (k, _, _) = Self::key(def.ty)?;
        self.table.get(&(k, def.code.clone()?)).map(String::as_str)
    }
}

/// Serializes a model (and its inline children) to BPMN 2.0 XML.
pub fn write_bpmn(m: &ProcessModel) -> String {
    let mut codes = Codes::default();
    codes.collect(m);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<bpmn:definitions xmlns:bpmn=\"{BPMN_NS}\" xmlns:caterpillar=\"{EXT_NS}\" xmlns:xsi=\"{XSI_NS}\" id=\"Definitions_{}\" targetNamespace=\"urn:tokenflow:models\">",
        esc(&m.id)
    );
    for ((k, code), id) in &codes.table {
        let (tag, attr_name) = match k {
            0 => ("error", "errorCode"),
            1 => ("signal", "name"),
            _ => ("escalation", "escalationCode"),
        };
        let _ = writeln!(out, "  <bpmn:{tag} id=\"{id}\" {attr_name}=\"{}\"/>", esc(code));
    }
    let mut written = Vec::new();
    write_process(m, &codes, &mut out, &mut written);
    out.push_str("</bpmn:definitions>\n");
    out
}

fn write_process(m: &ProcessModel, codes: &Codes, out: &mut String, written: &mut Vec<String>) {
    if written.contains(&m.id) {
        return;
    }
    written.push(m.id.clone());
    let _ = writeln!(out, "  <bpmn:process id=\"{}\" name=\"{}\" isExecutable=\"true\">", esc(&m.id), esc(&m.name));
    if !m.decls.enums.is_empty() || !m.decls.vars.is_empty() {
        let _ = writeln!(
            out,
            "    <bpmn:documentation textFormat=\"{VARIABLES_FORMAT}\">{}</bpmn:documentation>",
            esc(print_decls(&m.decls).trim_end())
        );
    }
    write_scope(m, None, codes, out, 2);
    out.push_str("  </bpmn:process>\n");
    for n in &m.nodes {
        if let Some(ChildModel::Inline(child)) = m.child_models.get(&n.id) {
            write_process(child, codes, out, written);
        }
    }
}

fn write_scope(m: &ProcessModel, scope: Option<&str>, codes: &Codes, out: &mut String, depth: usize) {
    let pad = "  ".repeat(depth);
    for n in m.nodes_in(scope) {
        write_node(m, n, codes, out, depth);
    }
    for e in m.edges.iter().filter(|e| m.node(&e.source).map(|s| s.scope.as_deref()) == Some(scope)) {
        let name = if e.name.is_empty() { String::new() } else { format!(" name=\"{}\"", esc(&e.name)) };
        let head = format!(
            "{pad}<bpmn:sequenceFlow id=\"{}\"{name} sourceRef=\"{}\" targetRef=\"{}\"",
            esc(&e.id),
            esc(&e.source),
            esc(&e.target)
        );
        match &e.condition {
            None => {
                let _ = writeln!(out, "{head}/>");
            }
            Some(c) => {
                let _ = writeln!(
                    out,
                    "{head}>\n{pad}  <bpmn:conditionExpression xsi:type=\"bpmn:tFormalExpression\">{}</bpmn:conditionExpression>\n{pad}</bpmn:sequenceFlow>",
                    esc(&print_expr(c))
                );
            }
        }
    }
}

fn event_definition(def: &EventDef, codes: &Codes) -> Option<String> {
    let (tag, attr_name) = match def.ty {
        EventType::None => return None,
        EventType::Message => return Some("<bpmn:messageEventDefinition/>".into()),
        EventType::Terminate => return Some("<bpmn:terminateEventDefinition/>".into()),
        EventType::Error => ("errorEventDefinition", "errorRef"),
        EventType::Signal => ("signalEventDefinition", "signalRef"),
        EventType::Escalation => ("escalationEventDefinition", "escalationRef"),
    };
    Some(match codes.id_for(def) {
        Some(id) => format!("<bpmn:{tag} {attr_name}=\"{id}\"/>"),
        None => format!("<bpmn:{tag}/>"),
    })
}

fn write_node(m: &ProcessModel, n: &FlowNode, codes: &Codes, out: &mut String, depth: usize) {
    let pad = "  ".repeat(depth);
    let inner_pad = "  ".repeat(depth + 1);
    let mut attrs = format!(" id=\"{}\"", esc(&n.id));
    if !n.name.is_empty() {
        let _ = write!(attrs, " name=\"{}\"", esc(&n.name));
    }
    let mut body: Vec<String> = Vec::new();
    let mut def: Option<&EventDef> = None;
    let tag = match &n.kind {
        NodeKind::StartEvent(d) => {
            def = Some(d);
            if let Some(NodeKind::EventSubprocess { interrupting: false }) =
                n.scope.as_deref().and_then(|s| m.node(s)).map(|s| &s.kind)
            {
                attrs.push_str(" isInterrupting=\"false\"");
            }
            "startEvent"
        }
        NodeKind::EndEvent(d) => {
            def = Some(d);
            "endEvent"
        }
        NodeKind::IntermediateThrow(d) => {
            def = Some(d);
            "intermediateThrowEvent"
        }
        NodeKind::IntermediateCatch(d) => {
            def = Some(d);
            "intermediateCatchEvent"
        }
        NodeKind::BoundaryEvent { interrupting, event } => {
            def = Some(event);
            if !interrupting {
                attrs.push_str(" cancelActivity=\"false\"");
            }
            "boundaryEvent"
        }
        NodeKind::Task(_) | NodeKind::Gateway(_) => n.kind.label(),
        NodeKind::CallActivity { called } => {
            let target = match m.child_models.get(&n.id) {
                Some(ChildModel::Inline(c)) => c.id.clone(),
                Some(ChildModel::Hash(h)) => h.clone(),
                None => called.clone(),
            };
            let _ = write!(attrs, " calledElement=\"{}\"", esc(&target));
            "callActivity"
        }
        NodeKind::EmbeddedSubprocess => "subProcess",
        NodeKind::EventSubprocess { .. } => {
            attrs.push_str(" triggeredByEvent=\"true\"");
            "subProcess"
        }
    };
    if let Some(a) = &n.attached_to {
        let _ = write!(attrs, " attachedToRef=\"{}\"", esc(a));
    }
    if let Some(d) = m.outgoing(&n.id).find(|e| e.is_default) {
        let _ = write!(attrs, " default=\"{}\"", esc(&d.id));
    }
    match (&n.kind, &n.annotation) {
        (NodeKind::Task(TaskKind::Script), Some(a)) => {
            let script: Vec<String> = a.operations.iter().map(print_stmt).collect();
            body.push(format!("<bpmn:script>{}</bpmn:script>", esc(&script.join(" "))));
        }
        (_, Some(a)) => body.push(format!("<bpmn:documentation>{}</bpmn:documentation>", esc(&print_annotation(a)))),
        _ => {}
    }
    if let Some(def) = def.and_then(|d| event_definition(d, codes)) {
        body.push(def);
    }
    match &n.multi_instance {
        MultiInstance::None => {}
        MultiInstance::Parallel(e) | MultiInstance::Sequential(e) => body.push(format!(
            "<bpmn:multiInstanceLoopCharacteristics isSequential=\"{}\" caterpillar:cardinality=\"{}\"/>",
            matches!(n.multi_instance, MultiInstance::Sequential(_)),
            esc(&print_expr(e))
        )),
    }
    if body.is_empty() && !n.kind.is_subprocess() {
        let _ = writeln!(out, "{pad}<bpmn:{tag}{attrs}/>");
        return;
    }
    let _ = writeln!(out, "{pad}<bpmn:{tag}{attrs}>");
    for b in body {
        let _ = writeln!(out, "{inner_pad}{b}");
    }
    if n.kind.is_subprocess() {
        write_scope(m, Some(&n.id), codes, out, depth + 1);
    }
    let _ = writeln!(out, "{pad}</bpmn:{tag}>");
}
