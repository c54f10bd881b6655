use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value as Json};
use tower::ServiceExt;

use tokenflow::compiler::{compile, CompilationMode};
use tokenflow::model::parse_bpmn_str;
use tokenflow::models::ORDER_TO_CASH;
use tokenflow::repository::Repository;
use tokenflow::services::{router, Engine, InstanceStateView, Notification};
use tokenflow::value::Value;
use tokenflow::word::{Address, Bytes32};

struct App {
    engine: Arc<Engine>,
    router: Router,
    _dir: tempfile::TempDir,
}

fn app() -> App {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(Engine::new(Repository::open(dir.path()).unwrap()));
    App { router: router(engine.clone()), engine, _dir: dir }
}

async fn call(app: &App, method: &str, uri: &str, body: Option<Json>) -> (StatusCode, Json) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let resp = app.router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Json::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn deploy(app: &App) -> String {
    let (s, v) = call(app, "POST", "/models", Some(json!({ "bpmn": ORDER_TO_CASH }))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["hash"].as_str().unwrap().to_string()
}

async fn start(app: &App, hash: &str) -> String {
    let (s, v) = call(app, "POST", &format!("/models/{hash}"), None).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["href"].as_str().unwrap().to_string()
}

async fn state(app: &App, href: &str) -> Json {
    let (s, v) = call(app, "GET", href, None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    v
}

/// href of the single open instance of `element` in the state body.
fn href_of(st: &Json, element: &str) -> String {
    let e = st["workitems"].as_array().unwrap().iter().find(|w| w["elementId"] == element);
    let e = e.unwrap_or_else(|| panic!("{element} not open in {st}"));
    e["instances"][0]["href"].as_str().unwrap().to_string()
}

async fn check_in(app: &App, href: &str, inputs: Json) -> (StatusCode, Json) {
    call(app, "PUT", href, Some(json!({ "inputs": inputs }))).await
}

async fn ok(app: &App, href: &str, inputs: Json) {
    let (s, v) = check_in(app, href, inputs).await;
    assert_eq!(s, StatusCode::OK, "{v}");
}

/// Runs the order-to-cash instance up to two started carrier selections.
async fn to_carrier_selection(app: &App) -> String {
    let hash = deploy(app).await;
    let p = start(app, &hash).await;
    let st = state(app, &p).await;
    ok(app, &href_of(&st, "SubmitPO"), json!({"newSku": "SKU-1", "newQuantity": 5, "newPrice": 100})).await;
    let st = state(app, &p).await;
    ok(app, &href_of(&st, "ValidatePO"), json!({"decision": "ACCEPTED"})).await;
    p
}

#[tokio::test]
async fn deploy_registers_factories_and_relations() {
    let app = app();
    let hash = deploy(&app).await;
    let comp = compile(&parse_bpmn_str(ORDER_TO_CASH).unwrap(), CompilationMode::Full).unwrap();
    let d = app.engine.deployments(&hash).pop().unwrap();
    let reg = d.registry.unwrap();
    let l = app.engine.ledger().read();
    let hash_arg = |h: &str| Value::Bytes32(Bytes32::from_hex(h).unwrap());
    assert_eq!(comp.contracts.len(), 3);
    for c in &comp.contracts {
        let f = l.call(reg, "factoryFor", &[hash_arg(&c.hash())]).unwrap();
        assert!(!f[0].as_address().unwrap().is_zero(), "{}", c.name);
    }
    let names: Vec<&str> = comp.contracts.iter().map(|c| c.process_id.as_str()).collect();
    assert_eq!(names[0], "OrderToCash");
    for r in &comp.relations {
        let got = l.call(reg, "childFor", &[hash_arg(&r.parent), Value::uint(r.element as u64)]).unwrap();
        assert_eq!(got[0].as_bytes32().unwrap().to_hex(), r.child);
    }
    assert_eq!(comp.relations.len(), 2);
}

#[tokio::test]
async fn redeploy_is_idempotent_in_store_but_fresh_on_ledger() {
    let app = app();
    let a = deploy(&app).await;
    let b = deploy(&app).await;
    assert_eq!(a, b);
    let ds = app.engine.deployments(&a);
    assert_eq!(ds.len(), 2);
    assert_ne!(ds[0].registry, ds[1].registry);
    assert_ne!(ds[0].contracts[&ds[0].root].factory, ds[1].contracts[&ds[1].root].factory);
    let (_, list) = call(&app, "GET", "/models", None).await;
    assert_eq!(list, json!([{"name": "Order to cash", "hash": a, "href": format!("/models/{a}")}]));
}

#[tokio::test]
async fn guard_type_error_is_compilation_failed() {
    let app = app();
    let bad = ORDER_TO_CASH.replace("customerPaid = paid;", "customerPaid = 3;");
    let (s, v) = call(&app, "POST", "/models", Some(json!({ "bpmn": bad }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "CompilationFailed");
    assert!(!v["diagnostics"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn model_detail_and_unknowns() {
    let app = app();
    let hash = deploy(&app).await;
    let (s, v) = call(&app, "GET", &format!("/models/{hash}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["hash"], hash.as_str());
    assert_eq!(v["mode"], "full");
    assert!(v["bpmn"].as_str().unwrap().contains("OrderToCash"));
    assert!(!v["contracts"].as_str().unwrap().is_empty());
    assert_eq!(v["dictionary"]["contracts"].as_array().unwrap().len(), 3);
    let missing = "0".repeat(64);
    assert_eq!(call(&app, "GET", &format!("/models/{missing}"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "POST", &format!("/models/{missing}"), None).await.0, StatusCode::NOT_FOUND);
    let nobody = Address::from_label("nobody");
    assert_eq!(call(&app, "GET", &format!("/processes/{nobody}"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/processes/xyz", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn fresh_instance_shows_submit_po() {
    let app = app();
    let hash = deploy(&app).await;
    let p = start(&app, &hash).await;
    let st = state(&app, &p).await;
    assert_eq!(st["process-identifier"], hash.as_str());
    assert_eq!(st["href"], p.as_str());
    assert_eq!(st["services"], json!([]));
    let w = st["workitems"].as_array().unwrap();
    assert_eq!(w.len(), 1);
    assert_eq!(w[0]["elementId"], "SubmitPO");
    assert_eq!(w[0]["name"], "Submit PO");
    assert_eq!(
        w[0]["importParameters"],
        json!([{"type": "bytes32", "name": "newSku"}, {"type": "uint", "name": "newQuantity"}, {"type": "uint", "name": "newPrice"}])
    );
    let href = w[0]["instances"][0]["href"].as_str().unwrap();
    assert!(href.starts_with("/worklists/0x") && href.ends_with("/workitems/0"), "{href}");
    let (_, list) = call(&app, "GET", &format!("/models/{hash}/instances"), None).await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["href"], p.as_str());
}

/// Keys and value kinds, with arrays reduced to the shape of their elements.
fn shape(v: &Json) -> Json {
    match v {
        Json::Object(m) => Json::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect()),
        Json::Array(a) => {
            let mut shapes: Vec<Json> = a.iter().map(shape).collect();
            shapes.dedup();
            Json::Array(shapes)
        }
        Json::String(_) => json!("string"),
        Json::Number(_) => json!("number"),
        Json::Bool(_) => json!("bool"),
        Json::Null => Json::Null,
    }
}

// The published sample response, with its JSON syntax slips fixed.
const LISTING: &str = r#"{
    "process-identifier": "o2c-hash",
    "href": "/processes/o2c-address",
    "workitems": [
        {
            "elementId": "Request_Quote_Id",
            "name": "Request_Quote",
            "importParameters": [ { "type": "uint", "name": "quote" } ],
            "instances": [ { "exportParameters": [], "href": "/worklists/wl_address/workitems/wi_1" } ]
        },
        {
            "elementId": "Submit_Quote_Id",
            "name": "Submit_Quote",
            "importParameters": [],
            "instances": [
                {
                    "exportParameters": [ { "type": "uint", "name": "quote", "value": "100" } ],
                    "href": "/worklists/wl_address/workitems/wi_3"
                }
            ]
        }
    ],
    "services": []
}"#;

#[tokio::test]
async fn carrier_selection_state_matches_sample_response() {
    let app = app();
    let p = to_carrier_selection(&app).await;
    let st = state(&app, &p).await;
    let rq = &st["workitems"][0];
    assert_eq!(rq["elementId"], "Request_Quote_Id");
    assert_eq!(rq["instances"].as_array().unwrap().len(), 2, "{st}");
    // the child visited second, so the traversal lists elements in the sample's order
    let second = rq["instances"][1]["href"].as_str().unwrap().to_string();
    ok(&app, &second, json!({"quote": 100})).await;

    let st = state(&app, &p).await;
    let expected: Json = serde_json::from_str(LISTING).unwrap();
    assert_eq!(shape(&st), shape(&expected), "{st}");
    let w = st["workitems"].as_array().unwrap();
    assert_eq!(w.len(), 2);
    for (got, want) in w.iter().zip(expected["workitems"].as_array().unwrap()) {
        assert_eq!(got["elementId"], want["elementId"]);
        assert_eq!(got["name"], want["name"]);
        assert_eq!(got["importParameters"], want["importParameters"]);
        assert_eq!(got["instances"].as_array().unwrap().len(), 1);
        let ex = &got["instances"][0]["exportParameters"];
        assert_eq!(ex, &want["instances"][0]["exportParameters"]);
    }
    let worklist_href = |h: &str| {
        let parts: Vec<&str> = h.split('/').collect();
        parts.len() == 5 && parts[1] == "worklists" && parts[2].starts_with("0x") && parts[3] == "workitems"
    };
    assert!(w.iter().all(|x| worklist_href(x["instances"][0]["href"].as_str().unwrap())));
    let view: InstanceStateView = serde_json::from_value(st.clone()).unwrap();
    assert!(view.process_identifier.len() == 64);
}

#[tokio::test]
async fn every_node_visited_once() {
    let app = app();
    let p = to_carrier_selection(&app).await;
    let st = state(&app, &p).await;
    let hrefs: Vec<&str> = st["workitems"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|w| w["instances"].as_array().unwrap().iter().map(|i| i["href"].as_str().unwrap()))
        .collect();
    let mut uniq = hrefs.clone();
    uniq.sort();
    uniq.dedup();
    assert_eq!(hrefs.len(), 2);
    assert_eq!(uniq.len(), hrefs.len());
}

#[tokio::test]
async fn executing_twice_is_rejected_without_changes() {
    let app = app();
    let hash = deploy(&app).await;
    let p = start(&app, &hash).await;
    let st = state(&app, &p).await;
    let href = href_of(&st, "SubmitPO");
    let inputs = json!({"newSku": "A", "newQuantity": 1, "newPrice": 2});
    ok(&app, &href, inputs.clone()).await;
    let before = app.engine.ledger().read().snapshot();
    let (s, v) = check_in(&app, &href, inputs).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "LedgerRejection");
    assert!(v["reason"].as_str().unwrap().starts_with("AlreadyCompleted"), "{v}");
    let after = app.engine.ledger().read().snapshot();
    assert_eq!(before.accounts, after.accounts);
    assert_eq!(before.logs, after.logs);
}

#[tokio::test]
async fn wrong_typed_input_is_rejected_by_the_ledger() {
    let app = app();
    let hash = deploy(&app).await;
    let p = start(&app, &hash).await;
    let st = state(&app, &p).await;
    let href = href_of(&st, "SubmitPO");
    let (s, v) = check_in(&app, &href, json!({"newSku": "A", "newQuantity": true, "newPrice": 2})).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    assert!(v["reason"].as_str().unwrap().contains("BadArguments"), "{v}");
    let (s, _) = check_in(&app, &href, json!({"newSku": "A"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let wl = href.split('/').nth(2).unwrap();
    let (s, v) = call(&app, "PUT", &format!("/worklists/{wl}/workitems/99"), Some(json!({"inputs": []}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "UnknownWorkitem");
}

#[tokio::test]
async fn validate_po_brings_goods_shipment_tasks() {
    let app = app();
    let p = to_carrier_selection(&app).await;
    let st = state(&app, &p).await;
    let ids: Vec<&str> = st["workitems"].as_array().unwrap().iter().map(|w| w["elementId"].as_str().unwrap()).collect();
    assert_eq!(ids, ["Request_Quote_Id"]);
}

#[tokio::test]
async fn notifications_follow_the_log() {
    let app = app();
    let hash = deploy(&app).await;
    assert!(app.engine.event_monitor_poll().is_empty());
    let p = start(&app, &hash).await;
    let (_, all) = call(&app, "GET", "/notifications?since=0", None).await;
    let all: Vec<Notification> = serde_json::from_value(all).unwrap();
    let addr = p.trim_start_matches("/processes/");
    assert!(matches!(&all[0], Notification::InstanceCreated { address, process_identifier: Some(h), .. } if address == addr && *h == hash));
    assert!(matches!(&all[1], Notification::WorkitemRequested { id: 0, element_id: Some(e), .. } if e == "SubmitPO"));
    assert!(app.engine.event_monitor_poll().is_empty());

    let st = state(&app, &p).await;
    ok(&app, &href_of(&st, "SubmitPO"), json!({"newSku": "SKU-1", "newQuantity": 5, "newPrice": 100})).await;
    let fresh = app.engine.event_monitor_poll();
    assert!(fresh.is_empty(), "already delivered through the check-in sync");
    let (_, rest) = call(&app, "GET", &format!("/notifications?since={}", all.len()), None).await;
    let rest: Vec<Notification> = serde_json::from_value(rest).unwrap();
    let kinds: Vec<String> = rest.iter().map(|n| serde_json::to_value(n).unwrap()["type"].as_str().unwrap().to_string()).collect();
    assert_eq!(kinds, ["WorkitemRequested", "WorkitemCompleted"]);
    match &rest[0] {
        Notification::WorkitemRequested { element_id, export_parameters, .. } => {
            assert_eq!(element_id.as_deref(), Some("ValidatePO"));
            let vals: Vec<&str> = export_parameters.iter().map(|p| p.value.as_str()).collect();
            assert_eq!(vals, ["SKU-1", "5", "100"]);
        }
        other => panic!("{other:?}"),
    }
    let keys: Vec<(u64, u64)> = all.iter().chain(&rest).map(Notification::key).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[tokio::test]
async fn stream_pushes_notifications() {
    let app = app();
    let hash = deploy(&app).await;
    let req = Request::builder().uri("/notifications/stream").body(Body::empty()).unwrap();
    let resp = app.router.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    let mut body = resp.into_body();
    start(&app, &hash).await;
    let mut text = String::new();
    while !text.contains("WorkitemRequested") {
        let frame = tokio::time::timeout(Duration::from_secs(5), body.frame()).await.unwrap().unwrap().unwrap();
        if let Ok(d) = frame.into_data() {
            text.push_str(&String::from_utf8_lossy(&d));
        }
    }
    assert!(text.contains("\"type\":\"InstanceCreated\""), "{text}");
    assert!(text.contains("id: 0"), "{text}");
}

fn check_schema(st: &Json) {
    let keys = |v: &Json| -> Vec<String> {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(keys(st), ["href", "process-identifier", "services", "workitems"]);
    for list in ["workitems", "services"] {
        for w in st[list].as_array().unwrap() {
            assert_eq!(keys(w), ["elementId", "importParameters", "instances", "name"]);
            for p in w["importParameters"].as_array().unwrap() {
                assert_eq!(keys(p), ["name", "type"]);
            }
            for i in w["instances"].as_array().unwrap() {
                assert_eq!(keys(i), ["exportParameters", "href"]);
                for p in i["exportParameters"].as_array().unwrap() {
                    assert_eq!(keys(p), ["name", "type", "value"]);
                    assert!(p["value"].is_string());
                }
            }
        }
    }
}

#[tokio::test]
async fn every_state_of_a_full_run_keeps_the_schema() {
    let app = app();
    let hash = deploy(&app).await;
    let p = start(&app, &hash).await;
    let mut steps = 0;
    loop {
        let st = state(&app, &p).await;
        check_schema(&st);
        let Some(w) = st["workitems"].as_array().unwrap().first().cloned() else { break };
        let mut inputs = serde_json::Map::new();
        for prm in w["importParameters"].as_array().unwrap() {
            let v = match prm["type"].as_str().unwrap() {
                "uint" => json!(7),
                "bool" => json!(true),
                "bytes32" => json!("X"),
                _ => json!("ACCEPTED"),
            };
            inputs.insert(prm["name"].as_str().unwrap().to_string(), v);
        }
        ok(&app, w["instances"][0]["href"].as_str().unwrap(), Json::Object(inputs)).await;
        steps += 1;
        assert!(steps < 50);
    }
    // submit, validate, two quotes requested and submitted, select, ship, two payments
    assert_eq!(steps, 10);
    let root: Address = p.trim_start_matches("/processes/").parse().unwrap();
    let l = app.engine.ledger().read();
    assert_eq!(l.call(root, "status", &[]).unwrap()[0], Value::uint(2));
}
