use proptest::prelude::*;

use super::*;
use crate::guard::{Param, Stmt};
use crate::models::{NESTED_EVENTS, ORDER_TO_CASH};
use crate::value::Type;

const MINIMAL: &str = r#"<?xml version="1.0"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL">
  <process id="p">
    <startEvent id="s"/>
    <userTask id="a" name="A"/>
    <endEvent id="e"/>
    <sequenceFlow id="f1" sourceRef="s" targetRef="a"/>
    <sequenceFlow id="f2" sourceRef="a" targetRef="e"/>
  </process>
</definitions>"#;

#[test]
fn minimal_model_has_three_nodes_two_edges() {
    let m = parse_bpmn_str(MINIMAL).unwrap();
    assert_eq!(m.nodes.len(), 3);
    assert_eq!(m.edges.len(), 2);
    assert!(validate_model(&m).is_empty());
}

#[test]
fn order_to_cash_has_call_activity_and_cancel_boundary() {
    let m = parse_bpmn_str(ORDER_TO_CASH).unwrap();
    let gs = m.node("GoodsShipment").unwrap();
    assert_eq!(gs.name, "Goods Shipment");
    assert!(matches!(gs.kind, NodeKind::CallActivity { .. }));
    let child = match m.child_models.get("GoodsShipment") {
        Some(ChildModel::Inline(c)) => c,
        other => panic!("expected inline child, got {other:?}"),
    };
    assert_eq!(child.id, "GoodsShipmentProcess");
    let cancel = m.node("OrderCanceled").unwrap();
    assert_eq!(cancel.name, "Order canceled");
    assert_eq!(cancel.attached_to.as_deref(), Some("GoodsShipment"));
    assert!(matches!(
        &cancel.kind,
        NodeKind::BoundaryEvent { interrupting: true, event } if event.ty == EventType::Message
    ));
    let cs = child.node("CarrierSelection").unwrap();
    assert!(matches!(cs.multi_instance, MultiInstance::Parallel(_)));
}

#[test]
fn order_to_cash_validates_clean() {
    let m = parse_bpmn_str(ORDER_TO_CASH).unwrap();
    assert_eq!(validate_model(&m), vec![]);
}

#[test]
fn nested_events_validates_clean() {
    let m = parse_bpmn_str(NESTED_EVENTS).unwrap();
    assert_eq!(validate_model(&m), vec![]);
    let e1 = m.node("E1_End").unwrap();
    assert_eq!(e1.kind, NodeKind::EndEvent(EventDef::of(EventType::Error, Some("E1"))));
    assert_eq!(e1.scope.as_deref(), Some("S1"));
}

#[test]
fn inclusive_gateway_is_unsupported() {
    let xml = MINIMAL.replace("<userTask id=\"a\" name=\"A\"/>", "<inclusiveGateway id=\"a\"/>");
    assert_eq!(
        parse_bpmn_str(&xml),
        Err(ParseError::UnsupportedElement { kind: "inclusiveGateway".into(), id: "a".into() })
    );
}

#[test]
fn dangling_edge_reported() {
    let xml = MINIMAL.replace("targetRef=\"e\"", "targetRef=\"nowhere\"");
    assert_eq!(parse_bpmn_str(&xml), Err(ParseError::DanglingReference("f2".into())));
}

#[test]
fn malformed_xml_reported() {
    assert!(matches!(parse_bpmn_str("<definitions><process>"), Err(ParseError::XmlSyntax(_))));
}

#[test]
fn second_start_event_rejected() {
    let xml = MINIMAL.replace("<endEvent id=\"e\"/>", "<endEvent id=\"e\"/><startEvent id=\"s2\"/>");
    assert!(matches!(parse_bpmn_str(&xml), Err(ParseError::InvalidModel { .. })));
}

#[test]
fn validate_po_annotation_counts() {
    let a = parse_annotation(
        "(bytes32 sku, uint quantity, uint price) : (POStatus decision) -> { require(decision == POStatus.ACCEPTED || decision == POStatus.REJECTED); status = decision; }",
    )
    .unwrap();
    assert_eq!(a.export_params.len(), 3);
    assert_eq!(a.import_params.len(), 1);
    assert_eq!(a.operations.len(), 2);
}

#[test]
fn empty_annotation() {
    assert_eq!(parse_annotation("() : () -> {}").unwrap(), TaskAnnotation::default());
}

#[test]
fn unbalanced_annotation_is_syntax_error() {
    assert!(matches!(parse_annotation("(uint x : (uint y) -> {}"), Err(AnnotationError::AnnotationSyntax { .. })));
}

#[test]
fn annotation_with_undeclared_variable() {
    let decls = crate::guard::parse_decls("uint a;").unwrap();
    assert_eq!(
        parse_annotation_checked("(uint b) : () -> {}", &decls),
        Err(AnnotationError::UndeclaredVariable("b".into()))
    );
    assert_eq!(
        parse_annotation_checked("() : () -> { a = c; }", &decls),
        Err(AnnotationError::UndeclaredVariable("c".into()))
    );
}

fn xor_model(guard_second: bool) -> ProcessModel {
    let mut m = ProcessModel::new("p", "p");
    m.decls = crate::guard::parse_decls("uint x;").unwrap();
    for (id, kind) in [
        ("s", NodeKind::StartEvent(EventDef::none())),
        ("g", NodeKind::Gateway(GatewayKind::Exclusive)),
        ("a", NodeKind::Task(TaskKind::User)),
        ("b", NodeKind::Task(TaskKind::User)),
        ("e", NodeKind::EndEvent(EventDef::none())),
    ] {
        m.nodes.push(FlowNode::new(id, id, kind));
    }
    m.edges.push(SequenceFlow::new("f0", "s", "g"));
    let mut fa = SequenceFlow::new("fa", "g", "a");
    fa.condition = Some(crate::guard::parse_expr("x == 1").unwrap());
    m.edges.push(fa);
    let mut fb = SequenceFlow::new("fb", "g", "b");
    if guard_second {
        fb.condition = Some(crate::guard::parse_expr("x == 2").unwrap());
    }
    m.edges.push(fb);
    m.edges.push(SequenceFlow::new("fa2", "a", "e"));
    m.edges.push(SequenceFlow::new("fb2", "b", "e"));
    m
}

#[test]
fn unguarded_xor_branch_reported() {
    assert!(validate_model(&xor_model(true)).is_empty());
    let d = validate_model(&xor_model(false));
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, DiagnosticCode::MissingGuard);
    assert_eq!(d[0].element_id, "fb");
    assert!(d[0].to_string().starts_with("error: "));
    assert!(d[0].to_string().ends_with(" @ fb"));
}

#[test]
fn guard_type_error_reported() {
    let mut m = xor_model(true);
    m.edges[1].condition = Some(crate::guard::parse_expr("x + 1").unwrap());
    let d = validate_model(&m);
    assert_eq!(d[0].code, DiagnosticCode::TypeError);
    assert_eq!(d[0].element_id, "fa");
}

/// A chain of 299 tasks: 300 flows.
fn long_chain(tasks: usize) -> ProcessModel {
    let mut m = ProcessModel::new("chain", "chain");
    m.nodes.push(FlowNode::new("s", "", NodeKind::StartEvent(EventDef::none())));
    for i in 0..tasks {
        m.nodes.push(FlowNode::new(&format!("t{i}"), &format!("T{i}"), NodeKind::Task(TaskKind::Script)));
    }
    m.nodes.push(FlowNode::new("e", "", NodeKind::EndEvent(EventDef::none())));
    let ids: Vec<String> = m.nodes.iter().map(|n| n.id.clone()).collect();
    for (i, w) in ids.windows(2).enumerate() {
        m.edges.push(SequenceFlow::new(&format!("f{i}"), &w[0], &w[1]));
    }
    m
}

#[test]
fn three_hundred_flows_exceed_capacity() {
    let m = long_chain(299);
    assert_eq!(m.edges.len(), 300);
    let d = validate_model(&m);
    let codes: Vec<DiagnosticCode> = d.iter().map(|d| d.code).collect();
    assert!(codes.contains(&DiagnosticCode::TooManyEdges));
    assert!(codes.contains(&DiagnosticCode::TooManyNodes));
    let edge_diag = d.iter().find(|d| d.code == DiagnosticCode::TooManyEdges).unwrap();
    assert_eq!(edge_diag.element_id, "f256");
}

#[test]
fn diagnostics_cite_existing_ids() {
    let samples = [xor_model(false), long_chain(299)];
    for m in samples {
        for d in validate_model(&m) {
            let known = m.node(&d.element_id).is_some() || m.edge(&d.element_id).is_some() || d.element_id == m.id;
            assert!(known, "{d}");
        }
    }
}

#[test]
fn serialization_reaches_fixed_point() {
    for xml in [MINIMAL, ORDER_TO_CASH, NESTED_EVENTS] {
        let m1 = parse_bpmn_str(xml).unwrap();
        let m2 = parse_bpmn_str(&write_bpmn(&m1)).unwrap();
        let m3 = parse_bpmn_str(&write_bpmn(&m2)).unwrap();
        assert_eq!(m2, m3);
        // same content regardless of order
        let mut a: Vec<_> = m1.nodes.iter().map(|n| format!("{n:?}")).collect();
        let mut b: Vec<_> = m2.nodes.iter().map(|n| format!("{n:?}")).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        let mut a: Vec<_> = m1.edges.iter().map(|n| format!("{n:?}")).collect();
        let mut b: Vec<_> = m2.edges.iter().map(|n| format!("{n:?}")).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(m1.decls, m2.decls);
    }
}

#[test]
fn order_to_cash_document_order_is_stable() {
    let m = parse_bpmn_str(ORDER_TO_CASH).unwrap();
    let m2 = parse_bpmn_str(&write_bpmn(&m)).unwrap();
    let ids = |m: &ProcessModel| m.edges.iter().map(|e| e.id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&m), ids(&m2));
}

#[test]
fn partition_of_nested_events() {
    let m = parse_bpmn_str(NESTED_EVENTS).unwrap();
    let units = partition::partition(&m);
    assert_eq!(units.len(), 2);
    assert_eq!(units[1].key.as_deref(), Some("M"));
    assert!(units[1].nodes.contains(&"S3".to_string()));
    assert!(units[1].nodes.contains(&"T3".to_string()));
    assert!(!units[0].nodes.contains(&"T3".to_string()));
    assert!(units[0].nodes.contains(&"M".to_string()));
    assert_eq!(units[1].parent, Some(0));
}

#[test]
fn non_interrupting_boundary_handler_is_own_unit() {
    let xml = r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL">
      <process id="p">
        <startEvent id="s"/>
        <userTask id="a"/>
        <boundaryEvent id="b" attachedToRef="a" cancelActivity="false"><messageEventDefinition/></boundaryEvent>
        <userTask id="h"/>
        <endEvent id="he"/>
        <endEvent id="e"/>
        <sequenceFlow id="f1" sourceRef="s" targetRef="a"/>
        <sequenceFlow id="f2" sourceRef="a" targetRef="e"/>
        <sequenceFlow id="f3" sourceRef="b" targetRef="h"/>
        <sequenceFlow id="f4" sourceRef="h" targetRef="he"/>
      </process></definitions>"#;
    let m = parse_bpmn_str(xml).unwrap();
    assert!(validate_model(&m).is_empty());
    let units = partition::partition(&m);
    assert_eq!(units.len(), 2);
    assert_eq!(units[1].nodes, vec!["h".to_string(), "he".to_string()]);
    assert_eq!(units[1].edges, vec!["f3".to_string(), "f4".to_string()]);
    assert_eq!(units[0].nodes, vec!["s", "a", "b", "e"].into_iter().map(String::from).collect::<Vec<_>>());
}

#[test]
fn merge_into_handler_flow_reported() {
    let xml = r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL">
      <process id="p">
        <startEvent id="s"/>
        <userTask id="a"/>
        <boundaryEvent id="b" attachedToRef="a" cancelActivity="false"><messageEventDefinition/></boundaryEvent>
        <endEvent id="e"/>
        <sequenceFlow id="f1" sourceRef="s" targetRef="a"/>
        <sequenceFlow id="f2" sourceRef="a" targetRef="e"/>
        <sequenceFlow id="f3" sourceRef="b" targetRef="e"/>
      </process></definitions>"#;
    let m = parse_bpmn_str(xml).unwrap();
    let d = validate_model(&m);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, DiagnosticCode::NonInterruptingMerge);
}

fn arb_type() -> impl Strategy<Value = Type> {
    prop_oneof![Just(Type::Uint), Just(Type::Bool), Just(Type::Bytes32), Just(Type::Address), "[A-Z][a-z]{1,4}".prop_map(Type::Enum)]
}

fn arb_ident() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9]{0,6}".prop_filter("reserved", |s| {
        !matches!(s.as_str(), "true" | "false" | "require" | "enum" | "uint" | "bool" | "address")
    })
}

prop_compose! {
    fn arb_annotation()(
        exports in prop::collection::vec((arb_type(), arb_ident()), 0..4),
        imports in prop::collection::vec((arb_type(), arb_ident()), 0..4),
        assigns in prop::collection::vec((arb_ident(), any::<u32>()), 0..4),
        requires in prop::collection::vec((arb_ident(), any::<u32>()), 0..3),
    ) -> TaskAnnotation {
        let p = |v: Vec<(Type, String)>| v.into_iter().map(|(ty, name)| Param { ty, name }).collect();
        let mut operations: Vec<Stmt> = requires.into_iter().map(|(n, k)| Stmt::Require(crate::guard::Expr::binary(
            crate::guard::BinOp::Gt, crate::guard::Expr::Var(n), crate::guard::Expr::Uint((k as u64).into())))).collect();
        operations.extend(assigns.into_iter().map(|(target, k)| Stmt::Assign {
            target,
            value: crate::guard::Expr::binary(crate::guard::BinOp::Add, crate::guard::Expr::Var("x".into()), crate::guard::Expr::Uint((k as u64).into())),
        }));
        TaskAnnotation { export_params: p(exports), import_params: p(imports), operations }
    }
}

proptest! {
    #[test]
    fn annotation_print_parse_round_trip(a in arb_annotation()) {
        prop_assert_eq!(parse_annotation(&print_annotation(&a)).unwrap(), a);
    }

    #[test]
    fn chain_models_survive_serialization(n in 1usize..20) {
        let m = long_chain(n);
        let back = parse_bpmn_str(&write_bpmn(&m)).unwrap();
        prop_assert_eq!(back.nodes.len(), m.nodes.len());
        prop_assert_eq!(&back.edges, &m.edges);
    }
}
