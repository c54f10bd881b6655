use serde::{Deserialize, Serialize};

use crate::guard::Param;
use crate::model::partition::Origin;

use super::ir::{CompiledContract, Resource};
use super::CompilationMode;

/// How off-chain components treat a started element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementType {
    Workitem,
    Service,
    SeparateInstance,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DictionaryEntry {
    pub index: u32,
    pub id: String,
    pub name: String,
    pub kind: String,
    #[serde(rename = "type")]
    pub ty: ElementType,
    /// Check-in function on the worklist or service bridge (the task
    /// function itself in single-contract modes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete_function: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub import_parameters: Vec<Param>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub export_parameters: Vec<Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContractDictionary {
    pub hash: String,
    pub name: String,
    pub process_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    pub origin: Origin,
    pub elements: Vec<DictionaryEntry>,
}

impl ContractDictionary {
    pub fn of(c: &CompiledContract) -> Self {
        let elements = c
            .nodes
            .iter()
            .map(|n| {
                let ext = c.external(n.index);
                let reusable = c.reusable(n.index);
                let ty = match (ext, reusable) {
                    (_, Some(_)) => ElementType::SeparateInstance,
                    (Some(b), None) if b.resource == Resource::Service => ElementType::Service,
                    (Some(_), None) => ElementType::Workitem,
                    (None, None) => ElementType::Internal,
                };
                DictionaryEntry {
                    index: n.index,
                    id: n.id.clone(),
                    name: n.name.clone(),
                    kind: n.kind.clone(),
                    ty,
                    function_name: ext.map(|b| b.function.clone()),
                    start_function: ext.filter(|b| b.resource != Resource::Direct).map(|b| b.start_function()),
                    complete_function: ext.map(|b| b.complete_function()),
                    import_parameters: ext.map(|b| b.imports.clone()).unwrap_or_default(),
                    export_parameters: ext.map(|b| b.exports.clone()).unwrap_or_default(),
                    child: reusable.map(|r| r.child.clone()),
                }
            })
            .collect();
        ContractDictionary {
            hash: c.hash(),
            name: c.name.clone(),
            process_id: c.process_id.clone(),
            scope: c.scope.clone(),
            origin: c.origin,
            elements,
        }
    }

    pub fn entry(&self, index: u32) -> Option<&DictionaryEntry> {
        self.elements.iter().find(|e| e.index == index)
    }

    pub fn type_of(&self, index: u32) -> ElementType {
        self.entry(index).map_or(ElementType::Internal, |e| e.ty)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompilationDictionary {
    pub mode: CompilationMode,
    pub root: String,
    pub contracts: Vec<ContractDictionary>,
}

impl CompilationDictionary {
    pub fn contract(&self, hash: &str) -> Option<&ContractDictionary> {
        self.contracts.iter().find(|c| c.hash == hash)
    }
}
