//! BPMN model to contract IR.

mod build;
mod contract;
mod dictionary;
mod index;
pub mod ir;
mod text;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::partition::{partition, Origin};
use crate::model::{validate_model, ChildModel, Diagnostic, NodeKind, ProcessModel, Severity};

pub use build::function_name;
pub use contract::contract_model;
pub use dictionary::{CompilationDictionary, ContractDictionary, DictionaryEntry, ElementType};
pub use index::{assign_indexes, IndexAssignment};
pub use ir::CompiledContract;
pub use text::emit_contract_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompilationMode {
    Full,
    Basic,
    Default,
    Optimized,
}

impl CompilationMode {
    pub const ALL: [CompilationMode; 4] =
        [CompilationMode::Full, CompilationMode::Basic, CompilationMode::Default, CompilationMode::Optimized];

    pub fn as_str(self) -> &'static str {
        match self {
            CompilationMode::Full => "full",
            CompilationMode::Basic => "basic",
            CompilationMode::Default => "default",
            CompilationMode::Optimized => "optimized",
        }
    }
}

impl fmt::Display for CompilationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CompilationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("model has errors:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("scope `{scope}` has {nodes} elements and {edges} flows; a contract holds at most 255 and 256")]
    CapacityExceeded { scope: String, nodes: usize, edges: usize },
    #[error("call activities form a cycle through `{0}`")]
    CyclicCallActivity(String),
    #[error("no contract for reusable element `{0}`")]
    UnresolvedChild(String),
    #[error("unknown scope `{0}`")]
    UnknownScope(String),
    #[error("{what} is not supported in {mode} mode (element {id})")]
    Unsupported { mode: CompilationMode, id: String, what: String },
}

/// Parent contract, element index, child contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub parent: String,
    pub element: u32,
    pub child: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Compilation {
    pub mode: CompilationMode,
    pub root: String,
    /// Parents before children; a hash appears once.
    pub contracts: Vec<CompiledContract>,
    pub relations: Vec<Relation>,
    pub dictionary: CompilationDictionary,
}

impl Compilation {
    pub fn contract(&self, hash: &str) -> Option<&CompiledContract> {
        self.contracts.iter().find(|c| c.hash() == hash)
    }

    pub fn root_contract(&self) -> &CompiledContract {
        self.contract(&self.root).expect("root contract present")
    }
}

/// Node of the contract hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyNode {
    pub name: String,
    pub origin: Origin,
    pub children: Vec<(String, HierarchyNode)>,
}

/// Tree of contracts: the process, call-activity targets, multi-instance
/// bodies, non-interrupting event subprocesses and boundary handlers.
pub fn split_hierarchy(m: &ProcessModel) -> Result<HierarchyNode, CompileError> {
    fn walk(m: &ProcessModel, origin: Origin, stack: &mut Vec<String>) -> Result<HierarchyNode, CompileError> {
        if stack.contains(&m.id) {
            return Err(CompileError::CyclicCallActivity(m.id.clone()));
        }
        stack.push(m.id.clone());
        let units = partition(m);
        fn unit_node(
            m: &ProcessModel,
            units: &[crate::model::partition::Unit],
            i: usize,
            origin: Origin,
            stack: &mut Vec<String>,
        ) -> Result<HierarchyNode, CompileError> {
            let u = &units[i];
            let mut children = Vec::new();
            for id in &u.nodes {
                let n = m.node(id).expect("node");
                if let Some(j) = units.iter().position(|c| c.key.as_deref() == Some(id.as_str())) {
                    children.push((id.clone(), unit_node(m, units, j, units[j].origin, stack)?));
                } else if let NodeKind::CallActivity { .. } = n.kind {
                    match m.child_models.get(id) {
                        Some(ChildModel::Inline(c)) => children.push((id.clone(), walk(c, Origin::CallActivity, stack)?)),
                        Some(ChildModel::Hash(h)) => children.push((
                            id.clone(),
                            HierarchyNode { name: h.clone(), origin: Origin::CallActivity, children: vec![] },
                        )),
                        None => return Err(CompileError::UnresolvedChild(id.clone())),
                    }
                }
            }
            let name = u.key.as_ref().map_or(m.id.clone(), |k| format!("{}_{k}", m.id));
            Ok(HierarchyNode { name, origin, children })
        }
        let out = unit_node(m, &units, 0, origin, stack)?;
        stack.pop();
        Ok(out)
    }
    walk(m, Origin::Root, &mut Vec::new())
}

pub fn compile(m: &ProcessModel, mode: CompilationMode) -> Result<Compilation, CompileError> {
    compile_with(m, mode, &|_| None)
}

/// Like [`compile`]; `resolve` maps a repository model hash named by a call
/// activity to the root contract hash of that stored model.
pub fn compile_with(
    m: &ProcessModel,
    mode: CompilationMode,
    resolve: &dyn Fn(&str) -> Option<String>,
) -> Result<Compilation, CompileError> {
    let errors: Vec<Diagnostic> = validate_model(m).into_iter().filter(|d| d.severity == Severity::Error).collect();
    if !errors.is_empty() {
        return Err(CompileError::Invalid(errors));
    }
    let mut out: Vec<CompiledContract> = Vec::new();
    let mut relations = Vec::new();
    let root = match mode {
        CompilationMode::Basic => {
            let c = basic_contract(m);
            let h = c.hash();
            out.push(c);
            h
        }
        CompilationMode::Default | CompilationMode::Optimized => {
            let flat = if mode == CompilationMode::Optimized { contract_model(m) } else { m.clone() };
            let units = partition(&flat);
            if units.len() > 1 {
                let key = units[1].key.clone().unwrap_or_default();
                return Err(CompileError::Unsupported { mode, id: key, what: "separate contract scope".into() });
            }
            let none = BTreeMap::new();
            let c = build::Builder::new(&flat, &units[0], mode, &none)?.build()?;
            let h = c.hash();
            out.push(c);
            h
        }
        CompilationMode::Full => compile_full(m, resolve, &mut Vec::new(), &mut out, &mut relations)?,
    };
    // parents first
    out.reverse();
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|c| seen.insert(c.hash()));
    relations.reverse();
    let dictionary = CompilationDictionary {
        mode,
        root: root.clone(),
        contracts: out.iter().map(ContractDictionary::of).collect(),
    };
    Ok(Compilation { mode, root, contracts: out, relations, dictionary })
}

fn compile_full(
    m: &ProcessModel,
    resolve: &dyn Fn(&str) -> Option<String>,
    stack: &mut Vec<String>,
    out: &mut Vec<CompiledContract>,
    relations: &mut Vec<Relation>,
) -> Result<String, CompileError> {
    if stack.contains(&m.id) {
        return Err(CompileError::CyclicCallActivity(m.id.clone()));
    }
    stack.push(m.id.clone());
    let units = partition(m);
    let mut unit_hash: BTreeMap<Option<String>, String> = BTreeMap::new();
    // children come after their parents in the partition, so go backwards
    for u in units.iter().rev() {
        let mut children: BTreeMap<String, String> = BTreeMap::new();
        for id in &u.nodes {
            if let Some(h) = unit_hash.get(&Some(id.clone())) {
                children.insert(id.clone(), h.clone());
            } else if let Some(NodeKind::CallActivity { .. }) = m.node(id).map(|n| &n.kind) {
                let h = match m.child_models.get(id) {
                    Some(ChildModel::Inline(c)) => compile_full(c, resolve, stack, out, relations)?,
                    Some(ChildModel::Hash(h)) => resolve(h).ok_or_else(|| CompileError::UnresolvedChild(h.clone()))?,
                    None => return Err(CompileError::UnresolvedChild(id.clone())),
                };
                children.insert(id.clone(), h);
            }
        }
        let c = build::Builder::new(m, u, CompilationMode::Full, &children)?.build()?;
        let h = c.hash();
        for r in &c.reusables {
            relations.push(Relation { parent: h.clone(), element: r.index, child: r.child.clone() });
        }
        out.push(c);
        unit_hash.insert(u.key.clone(), h);
    }
    stack.pop();
    Ok(unit_hash[&None].clone())
}

fn basic_contract(m: &ProcessModel) -> CompiledContract {
    use crate::word::Word;
    CompiledContract {
        name: m.id.clone(),
        mode: CompilationMode::Basic,
        process_id: m.id.clone(),
        scope: None,
        origin: Origin::Root,
        decls: Default::default(),
        nodes: Vec::new(),
        edges: Vec::new(),
        full_edges: Word::ZERO,
        full_nodes: Word::ZERO,
        initial_marking: Word::ZERO,
        transitions: Vec::new(),
        externals: Vec::new(),
        reusables: Vec::new(),
        scopes: Vec::new(),
        kills: Vec::new(),
        signal_catchers: Vec::new(),
    }
}
