use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::partition::{partition, Unit};
use crate::model::{MAX_EDGES, MAX_NODES};
use crate::model::ProcessModel;
use crate::word::Word;

use super::CompileError;

/// Node and edge numbering of one contract scope. Node 0 is the process itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexAssignment {
    pub nodes: BTreeMap<String, u32>,
    pub edges: BTreeMap<String, u32>,
    pub node_order: Vec<String>,
    pub edge_order: Vec<String>,
}

impl IndexAssignment {
    pub fn for_unit(m: &ProcessModel, unit: &Unit) -> Result<Self, CompileError> {
        if unit.nodes.len() > MAX_NODES || unit.edges.len() > MAX_EDGES {
            return Err(CompileError::CapacityExceeded {
                scope: unit.key.clone().unwrap_or_else(|| m.id.clone()),
                nodes: unit.nodes.len(),
                edges: unit.edges.len(),
            });
        }
        Ok(IndexAssignment {
            nodes: unit.nodes.iter().enumerate().map(|(i, id)| (id.clone(), i as u32 + 1)).collect(),
            edges: unit.edges.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect(),
            node_order: unit.nodes.clone(),
            edge_order: unit.edges.clone(),
        })
    }

    pub fn node(&self, id: &str) -> Option<u32> {
        self.nodes.get(id).copied()
    }

    pub fn edge(&self, id: &str) -> Option<u32> {
        self.edges.get(id).copied()
    }

    /// `1 << nodeIndex`, zero for ids outside the scope.
    pub fn node_mask(&self, id: &str) -> Word {
        self.node(id).map_or(Word::ZERO, |i| Word::bit(i as usize))
    }

    pub fn edge_mask(&self, id: &str) -> Word {
        self.edge(id).map_or(Word::ZERO, |i| Word::bit(i as usize))
    }

    pub fn incoming_mask(&self, m: &ProcessModel, node: &str) -> Word {
        m.incoming(node).fold(Word::ZERO, |acc, e| acc | self.edge_mask(&e.id))
    }

    pub fn outgoing_mask(&self, m: &ProcessModel, node: &str) -> Word {
        m.outgoing(node).fold(Word::ZERO, |acc, e| acc | self.edge_mask(&e.id))
    }

    pub fn full_edges(&self) -> Word {
        (0..self.edge_order.len()).fold(Word::ZERO, |acc, i| acc | Word::bit(i))
    }

    pub fn full_nodes(&self) -> Word {
        (1..=self.node_order.len()).fold(Word::ZERO, |acc, i| acc | Word::bit(i))
    }
}

/// Index assignment of the contract whose scope is keyed by `scope`
/// (`None` for the process itself).
pub fn assign_indexes(m: &ProcessModel, scope: Option<&str>) -> Result<IndexAssignment, CompileError> {
    let units = partition(m);
    let unit = units
        .iter()
        .find(|u| u.key.as_deref() == scope)
        .ok_or_else(|| CompileError::UnknownScope(scope.unwrap_or("").to_string()))?;
    IndexAssignment::for_unit(m, unit)
}
