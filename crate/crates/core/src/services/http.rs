//! REST routes and the notification stream.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | /models | `{"bpmn": "<xml>"}` | 201 `{"name", "hash", "href"}` |
//! | GET | /models | | `[{"name", "hash", "href"}]` |
//! | GET | /models/:m-hash | | model, rendered contracts, dictionary |
//! | POST | /models/:m-hash | | 201 `{"address", "href", "gas"}` |
//! | GET | /models/:m-hash/instances | | `[{"address", "href"}]` |
//! | GET | /processes/:p-address | | instance state |
//! | PUT | /worklists/:wl-address/workitems/:wi-index | `{"inputs": {...}}` | receipt |
//! | PUT | /services/:s-address/tasks/:t-index | `{"inputs": {...}}` | receipt |
//! | GET | /notifications?since=N | | notifications with seq ≥ N |
//! | GET | /notifications/stream | | server-sent events |
//!
//! `inputs` is an object keyed by import parameter name or a positional
//! list. Errors reply `{"error": <kind>, "message", ...}`.

use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::{Stream, StreamExt};

use crate::runtime::ContractType;
use crate::word::Address;

use super::{Engine, ServiceError};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        let (status, body) = match self {
            ServiceError::CompilationFailed(ds) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({"error": "CompilationFailed", "message": message, "diagnostics": ds}),
            ),
            ServiceError::UnknownModel(_) => (StatusCode::NOT_FOUND, json!({"error": "UnknownModel", "message": message})),
            ServiceError::UnknownInstance(_) => {
                (StatusCode::NOT_FOUND, json!({"error": "UnknownInstance", "message": message}))
            }
            ServiceError::UnknownWorkitem { .. } => {
                (StatusCode::NOT_FOUND, json!({"error": "UnknownWorkitem", "message": message}))
            }
            ServiceError::BadInput(_) => (StatusCode::BAD_REQUEST, json!({"error": "BadInput", "message": message})),
            ServiceError::LedgerRejection { reason, receipt } => (
                StatusCode::CONFLICT,
                json!({"error": "LedgerRejection", "message": message, "reason": reason, "receipt": receipt}),
            ),
            ServiceError::Repository(_) | ServiceError::Internal(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": "Internal", "message": message}))
            }
        };
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<Engine>;
type Reply = Result<Response, ServiceError>;

fn address(s: &str, what: &str) -> Result<Address, ServiceError> {
    s.parse().map_err(|_| ServiceError::BadInput(format!("`{s}` is not a {what} address")))
}

#[derive(Deserialize)]
struct NewModel {
    bpmn: String,
}

async fn post_model(State(e): State<Shared>, Json(body): Json<NewModel>) -> Reply {
    let hash = e.deploy_model(&body.bpmn)?;
    let name = e.model(&hash)?.name;
    Ok((StatusCode::CREATED, Json(json!({"name": name, "hash": hash, "href": format!("/models/{hash}")})))
        .into_response())
}

async fn list_models(State(e): State<Shared>) -> Reply {
    Ok(Json(e.models()?).into_response())
}

async fn get_model(State(e): State<Shared>, Path(hash): Path<String>) -> Reply {
    Ok(Json(e.model(&hash)?).into_response())
}

async fn new_instance(State(e): State<Shared>, Path(hash): Path<String>) -> Reply {
    Ok((StatusCode::CREATED, Json(e.instantiate(&hash)?)).into_response())
}

async fn list_instances(State(e): State<Shared>, Path(hash): Path<String>) -> Reply {
    Ok(Json(e.instances(&hash)?).into_response())
}

async fn get_process(State(e): State<Shared>, Path(addr): Path<String>) -> Reply {
    let a = address(&addr, "process").map_err(|_| ServiceError::UnknownInstance(addr.clone()))?;
    Ok(Json(e.instance_state_for(a)?).into_response())
}

#[derive(Deserialize, Default)]
struct CheckIn {
    #[serde(default)]
    inputs: serde_json::Value,
}

fn check_in(e: &Engine, res: &str, kind: ContractType, id: u64, body: Option<Json<CheckIn>>) -> Reply {
    let r = address(res, "resource")?;
    let inputs = body.map(|b| b.0.inputs).unwrap_or_default();
    Ok(Json(e.execute_task(r, kind, id, &inputs)?).into_response())
}

async fn put_workitem(State(e): State<Shared>, Path((wl, id)): Path<(String, u64)>, body: Option<Json<CheckIn>>) -> Reply {
    check_in(&e, &wl, ContractType::Worklist, id, body)
}

async fn put_service(State(e): State<Shared>, Path((s, id)): Path<(String, u64)>, body: Option<Json<CheckIn>>) -> Reply {
    check_in(&e, &s, ContractType::Service, id, body)
}

#[derive(Deserialize)]
struct Since {
    #[serde(default)]
    since: u64,
}

async fn poll(State(e): State<Shared>, Query(q): Query<Since>) -> Reply {
    Ok(Json(e.notifications_since(q.since)).into_response())
}

async fn stream(State(e): State<Shared>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = e.subscribe();
    let s = BroadcastStream::new(rx).filter_map(|n| {
        let n = n.ok()?;
        let ev = Event::default().id(n.seq().to_string()).json_data(&n).ok()?;
        Some(Ok(ev))
    });
    Sse::new(s).keep_alive(KeepAlive::default())
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/models", get(list_models).post(post_model))
        .route("/models/:hash", get(get_model).post(new_instance))
        .route("/models/:hash/instances", get(list_instances))
        .route("/processes/:address", get(get_process))
        .route("/worklists/:address/workitems/:index", put(put_workitem))
        .route("/services/:address/tasks/:index", put(put_service))
        .route("/notifications", get(poll))
        .route("/notifications/stream", get(stream))
        .with_state(engine)
}
