use super::*;
use crate::compiler::{compile, CompilationMode};
use crate::ledger::Receipt;
use crate::model::parse_bpmn_str;
use crate::models::{NESTED_EVENTS, ORDER_TO_CASH};

const FLAT: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL"
                  xmlns:caterpillar="urn:tokenflow:bpmn-extensions"
                  xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" id="D">
  <bpmn:process id="Flat" name="Flat" isExecutable="true">
    <bpmn:documentation textFormat="caterpillar:variables">uint v;</bpmn:documentation>
    <bpmn:startEvent id="S"/>
    <bpmn:userTask id="A" name="Enter value">
      <bpmn:documentation>() : (uint x) -> { v = x; }</bpmn:documentation>
    </bpmn:userTask>
    <bpmn:exclusiveGateway id="G" default="f_low"/>
    <bpmn:userTask id="B" name="Approve"/>
    <bpmn:endEvent id="E1"/>
    <bpmn:endEvent id="E2"/>
    <bpmn:sequenceFlow id="f1" sourceRef="S" targetRef="A"/>
    <bpmn:sequenceFlow id="f2" sourceRef="A" targetRef="G"/>
    <bpmn:sequenceFlow id="f_high" sourceRef="G" targetRef="B">
      <bpmn:conditionExpression xsi:type="bpmn:tFormalExpression">v &gt; 5</bpmn:conditionExpression>
    </bpmn:sequenceFlow>
    <bpmn:sequenceFlow id="f_low" sourceRef="G" targetRef="E1"/>
    <bpmn:sequenceFlow id="f3" sourceRef="B" targetRef="E2"/>
  </bpmn:process>
</bpmn:definitions>"#;

fn session(src: &str, mode: CompilationMode) -> (Session<ProcessVm>, Address) {
    let m = parse_bpmn_str(src).unwrap();
    let comp = compile(&m, mode).unwrap();
    let mut s = Session::new(ProcessVm, comp).unwrap();
    let (root, _) = s.instantiate().unwrap();
    (s, root)
}

fn ok(r: Option<Receipt>) -> Receipt {
    let r = r.expect("element is open");
    assert!(r.accepted(), "rejected: {:?}", r.reason());
    r
}

fn rejected(r: Receipt) -> String {
    r.reason().expect("should be rejected").to_string()
}

fn accepted_enum(ordinal: u32) -> Value {
    Value::Enum { ty: "POStatus".into(), ordinal }
}

fn submit_and_accept(s: &mut Session<ProcessVm>, root: Address) {
    let sku = Value::Bytes32(Bytes32::from_text("SKU-1"));
    ok(s.complete(root, "SubmitPO", vec![sku, Value::uint(5), Value::uint(100)]));
    ok(s.complete(root, "ValidatePO", vec![accepted_enum(1)]));
}

#[test]
fn flat_instance_runs_to_completion() {
    for mode in [CompilationMode::Default, CompilationMode::Optimized] {
        let (mut s, root) = session(FLAT, mode);
        // A is node 2, its outgoing edge 1
        assert_eq!(s.started(root), Word::bit(2));
        ok(s.complete(root, "A", vec![Value::uint(9)]));
        assert_eq!(s.variable(root, "v"), Some(Value::uint(9)));
        assert!(s.find_open(root, "B").is_some());
        ok(s.complete(root, "B", vec![]));
        assert!(s.quiescent(root));
        assert_eq!(s.status(root), Status::Done as u64);
        assert!(s.ledger.logs().iter().any(|l| l.name == "ProcessCompleted"));
    }
}

#[test]
fn flat_default_branch() {
    let (mut s, root) = session(FLAT, CompilationMode::Default);
    ok(s.complete(root, "A", vec![Value::uint(1)]));
    assert!(s.quiescent(root));
}

#[test]
fn check_in_needs_started_element() {
    let (mut s, root) = session(FLAT, CompilationMode::Default);
    let user = Address::from_label("user");
    let r = s.ledger.send(user, root, "Approve", vec![]).unwrap();
    assert!(rejected(r).starts_with("NotStarted"));
}

#[test]
fn bad_arguments_rejected() {
    let (mut s, root) = session(FLAT, CompilationMode::Default);
    let user = Address::from_label("user");
    let r = s.ledger.send(user, root, "EnterValue", vec![Value::Bool(true)]).unwrap();
    assert!(rejected(r).starts_with("BadArguments"));
    let r = s.ledger.send(user, root, "EnterValue", vec![]).unwrap();
    assert!(rejected(r).starts_with("BadArguments"));
}

#[test]
fn start_twice_rejected() {
    let (mut s, root) = session(FLAT, CompilationMode::Default);
    let r = s.ledger.send(s.admin, root, "startExecution", vec![]).unwrap();
    assert_eq!(rejected(r), "AlreadyStarted");
}

#[test]
fn basic_mode_records() {
    let (mut s, root) = session(FLAT, CompilationMode::Basic);
    let user = Address::from_label("user");
    let r = s.ledger.send(user, root, "record", vec![Value::Bytes32(Bytes32::from_text("A"))]).unwrap();
    assert!(r.accepted());
    assert_eq!(s.read(root, "recordCount").unwrap(), Word::from(1));
}

#[test]
fn order_to_cash_listing_three_state() {
    let (mut s, root) = session(ORDER_TO_CASH, CompilationMode::Full);
    assert_eq!(s.started(root), Word::bit(1));
    let sku = Value::Bytes32(Bytes32::from_text("SKU-1"));
    ok(s.complete(root, "SubmitPO", vec![sku, Value::uint(5), Value::uint(100)]));
    // token passed Flow_Submitted, ValidatePO is running
    assert_eq!(s.marking(root), Word::ZERO);
    assert_eq!(s.started(root), Word::bit(2));
    let wl = s.find_open(root, "ValidatePO").unwrap();
    assert_eq!(wl.workitem, Some(1));
}

#[test]
fn order_to_cash_full_session() {
    let (mut s, root) = session(ORDER_TO_CASH, CompilationMode::Full);
    submit_and_accept(&mut s, root);
    let tree = s.tree(root);
    assert_eq!(tree.len(), 4, "root, shipment, two carrier selections");
    for q in [10, 12] {
        ok(s.complete(root, "Request_Quote_Id", vec![Value::uint(q)]));
    }
    ok(s.complete(root, "Submit_Quote_Id", vec![]));
    ok(s.complete(root, "Submit_Quote_Id", vec![]));
    ok(s.complete(root, "SelectCarrier", vec![Value::Bytes32(Bytes32::from_text("DHL"))]));
    ok(s.complete(root, "ShipGoods", vec![]));
    assert_eq!(s.status(tree[1]), Status::Done as u64);
    ok(s.complete(root, "PayCustomerInvoice", vec![Value::Bool(false)]));
    assert_eq!(s.variable(root, "customerInvoices"), Some(Value::uint(2)));
    ok(s.complete(root, "PayCustomerInvoice", vec![Value::Bool(true)]));
    ok(s.complete(root, "PaySupplierInvoice", vec![Value::Bool(true)]));
    assert!(s.quiescent(root));
    assert!(tree.iter().all(|i| s.status(*i) == Status::Done as u64));
}

#[test]
fn children_get_a_copy_of_variables() {
    let (mut s, root) = session(ORDER_TO_CASH, CompilationMode::Full);
    submit_and_accept(&mut s, root);
    let tree = s.tree(root);
    // carrier selections copy the shipment's variables
    assert_eq!(s.variable(tree[2], "carriers"), Some(Value::uint(2)));
    assert_eq!(s.read(tree[3], "instanceIndex").unwrap(), Word::from(1));
}

#[test]
fn cancel_before_dispatch_kills_shipment() {
    let (mut s, root) = session(ORDER_TO_CASH, CompilationMode::Full);
    submit_and_accept(&mut s, root);
    let tree = s.tree(root);
    ok(s.complete(root, "Request_Quote_Id", vec![Value::uint(10)]));
    ok(s.complete(root, "OrderCanceled", vec![]));
    for i in &tree[1..] {
        assert_eq!(s.status(*i), Status::Done as u64);
        assert!(s.marking(*i).is_zero() && s.started(*i).is_zero());
    }
    assert!(s.find_open(root, "Refund").is_some());
    assert!(s.find_open(root, "Submit_Quote_Id").is_none());
    ok(s.complete(root, "Refund", vec![]));
    assert!(s.quiescent(root));
    assert_eq!(s.status(root), Status::Done as u64);
}

#[test]
fn cancel_after_dispatch_rejected() {
    let (mut s, root) = session(ORDER_TO_CASH, CompilationMode::Full);
    submit_and_accept(&mut s, root);
    let cancel = s.find_open(root, "OrderCanceled").unwrap();
    for q in [10, 12] {
        ok(s.complete(root, "Request_Quote_Id", vec![Value::uint(q)]));
    }
    ok(s.complete(root, "Submit_Quote_Id", vec![]));
    ok(s.complete(root, "Submit_Quote_Id", vec![]));
    ok(s.complete(root, "SelectCarrier", vec![Value::Bytes32(Bytes32::from_text("DHL"))]));
    ok(s.complete(root, "ShipGoods", vec![]));
    assert!(s.find_open(root, "OrderCanceled").is_none());
    let before = s.ledger.storage(root).clone();
    let r = s.check_in(Address::from_label("user"), &cancel, vec![]).unwrap();
    assert!(rejected(r).contains("NotArmed"));
    assert_eq!(s.ledger.storage(root), before);
}

#[test]
fn only_the_worklist_completes() {
    let (mut s, root) = session(ORDER_TO_CASH, CompilationMode::Full);
    let user = Address::from_label("user");
    let args = vec![Value::Bytes32(Bytes32::from_text("x")), Value::uint(1), Value::uint(1)];
    let r = s.ledger.send(user, root, "SubmitPO_Complete", args).unwrap();
    assert!(rejected(r).starts_with("Unauthorized"));
}

#[test]
fn workitem_completes_once() {
    let (mut s, root) = session(ORDER_TO_CASH, CompilationMode::Full);
    let item = s.find_open(root, "SubmitPO").unwrap();
    let args = vec![Value::Bytes32(Bytes32::from_text("x")), Value::uint(1), Value::uint(1)];
    let user = Address::from_label("user");
    assert!(s.check_in(user, &item, args.clone()).unwrap().accepted());
    let r = s.check_in(user, &item, args).unwrap();
    assert!(rejected(r).starts_with("AlreadyCompleted"));
}

#[test]
fn failed_require_leaves_state_alone() {
    let (mut s, root) = session(ORDER_TO_CASH, CompilationMode::Full);
    let sku = Value::Bytes32(Bytes32::from_text("SKU-1"));
    ok(s.complete(root, "SubmitPO", vec![sku, Value::uint(5), Value::uint(100)]));
    let before = s.ledger.snapshot().accounts;
    let r = s.complete(root, "ValidatePO", vec![accepted_enum(0)]).unwrap();
    assert!(!r.accepted());
    assert_eq!(s.ledger.snapshot().accounts, before);
}

#[test]
fn external_child_instantiation_refused() {
    let (mut s, _) = session(ORDER_TO_CASH, CompilationMode::Full);
    let reg = s.deployment.registry.unwrap();
    let user = Address::from_label("user");
    let r = s.ledger.send(user, reg, "newInstanceFor", vec![Value::uint(3), Value::Address(user)]).unwrap();
    assert!(rejected(r).starts_with("ChildInstantiationByExternal"));
}

fn nested() -> (Session<ProcessVm>, Address, Vec<Address>) {
    let (s, root) = session(NESTED_EVENTS, CompilationMode::Full);
    let tree = s.tree(root);
    (s, root, tree)
}

#[test]
fn nested_start_state() {
    let (s, root, tree) = nested();
    // P, two M bodies, one Q under each
    assert_eq!(tree.len(), 5);
    assert!(s.find_open(root, "RaiseAlarm").is_some());
    for m in &tree[1..3] {
        let open: Vec<String> = s.open_items(*m).into_iter().map(|o| o.element_id).collect();
        assert_eq!(open, ["T1", "T3", "T2"]);
    }
}

#[test]
fn inner_error_kills_only_its_scope() {
    let (mut s, _root, tree) = nested();
    let m0 = tree[1];
    ok(s.complete(m0, "T3", vec![Value::uint(1)]));
    let open: Vec<String> = s.open_items(m0).into_iter().map(|o| o.element_id).collect();
    assert_eq!(open, ["T1", "Recover"]);
    let other: Vec<String> = s.open_items(tree[2]).into_iter().map(|o| o.element_id).collect();
    assert_eq!(other, ["T1", "T3", "T2"]);
    assert_eq!(s.status(m0), Status::Running as u64);
}

#[test]
fn outer_error_kills_every_body() {
    let (mut s, root, tree) = nested();
    ok(s.complete(tree[1], "T1", vec![Value::uint(1)]));
    for i in &tree[1..] {
        assert_eq!(s.status(*i), Status::Done as u64, "{i}");
        assert!(s.started(*i).is_zero());
    }
    let open: Vec<String> = s.open_items(root).into_iter().map(|o| o.element_id).collect();
    assert_eq!(open, ["HandleE1", "RaiseAlarm"]);
    ok(s.complete(root, "HandleE1", vec![]));
    ok(s.complete(root, "RaiseAlarm", vec![]));
    assert!(s.quiescent(root));
}

#[test]
fn signal_reaches_grandchildren() {
    let (mut s, root, tree) = nested();
    ok(s.complete(root, "RaiseAlarm", vec![]));
    for q in &tree[3..] {
        let open: Vec<String> = s.open_items(*q).into_iter().map(|o| o.element_id).collect();
        assert_eq!(open, ["HandleAlarm"]);
    }
}

#[test]
fn nested_normal_completion() {
    let (mut s, root, tree) = nested();
    for m in &tree[1..3] {
        ok(s.complete(*m, "T1", vec![Value::uint(0)]));
        ok(s.complete(*m, "T3", vec![Value::uint(0)]));
        ok(s.complete(*m, "T2", vec![]));
    }
    for q in &tree[3..] {
        ok(s.complete(*q, "Await", vec![]));
    }
    ok(s.complete(root, "RaiseAlarm", vec![]));
    assert!(s.quiescent(root));
    assert_eq!(s.status(root), Status::Done as u64);
}

#[test]
fn terminate_only_from_parent() {
    let (mut s, _root, tree) = nested();
    let r = s.ledger.send(Address::from_label("user"), tree[1], "terminate", vec![]).unwrap();
    assert!(rejected(r).starts_with("Unauthorized"));
    let r = s.ledger.send(Address::from_label("user"), tree[1], "handleEvent", vec![Value::uint(0), Value::Bytes32(Bytes32::ZERO)]).unwrap();
    assert!(!r.accepted());
}

#[test]
fn image_round_trip() {
    let m = parse_bpmn_str(ORDER_TO_CASH).unwrap();
    let comp = compile(&m, CompilationMode::Full).unwrap();
    let code = ContractCode::Process(comp.root_contract().clone());
    assert_eq!(ContractCode::from_image(&code.to_image()).unwrap(), code);
}
