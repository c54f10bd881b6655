//! JSON bodies of the REST API. Field names of the instance state follow
//! the published sample response.

use serde::{Deserialize, Serialize};

use crate::compiler::{CompilationDictionary, CompilationMode, DictionaryEntry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamType {
    #[serde(rename = "type")]
    pub ty: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamValue {
    #[serde(rename = "type")]
    pub ty: String,
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskInstance {
    pub export_parameters: Vec<ParamValue>,
    pub href: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskEntry {
    pub element_id: String,
    pub name: String,
    pub import_parameters: Vec<ParamType>,
    pub instances: Vec<TaskInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceStateView {
    #[serde(rename = "process-identifier")]
    pub process_identifier: String,
    pub href: String,
    pub workitems: Vec<TaskEntry>,
    pub services: Vec<TaskEntry>,
}

impl InstanceStateView {
    pub fn new(model_hash: &str, href: &str) -> Self {
        InstanceStateView {
            process_identifier: model_hash.to_string(),
            href: href.to_string(),
            workitems: Vec::new(),
            services: Vec::new(),
        }
    }

    /// Adds one open workitem, grouped under its element.
    pub fn add(&mut self, service: bool, e: &DictionaryEntry, inst: TaskInstance) {
        let list = if service { &mut self.services } else { &mut self.workitems };
        match list.iter_mut().find(|t| t.element_id == e.id) {
            Some(t) => t.instances.push(inst),
            None => list.push(TaskEntry {
                element_id: e.id.clone(),
                name: e.name.clone(),
                import_parameters: e
                    .import_parameters
                    .iter()
                    .map(|p| ParamType { ty: p.ty.to_string(), name: p.name.clone() })
                    .collect(),
                instances: vec![inst],
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub hash: String,
    pub href: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDetail {
    pub hash: String,
    pub name: String,
    pub mode: CompilationMode,
    pub bpmn: String,
    /// Rendered contract text.
    pub contracts: String,
    pub dictionary: CompilationDictionary,
    pub deployed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRef {
    pub address: String,
    pub href: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas: Option<u64>,
}
