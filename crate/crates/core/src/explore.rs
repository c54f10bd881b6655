//! Exhaustive exploration of a compiled flat model on the engine, with
//! states expressed in the token game's bit layout so the two sets compare
//! directly.

use std::collections::{BTreeSet, VecDeque};

use crate::compiler::ir::CompiledContract;
use crate::compiler::{compile, CompilationMode};
use crate::guard::Param;
use crate::model::ProcessModel;
use crate::oracle::GameState;
use crate::runtime::{ProcessVm, Session};
use crate::value::Value;
use crate::word::{Address, Word};

/// Engine bit positions to the token game's: edge `i` in document order is
/// bit `i`, node `j` is bit `j + 1`.
struct Layout {
    edge: Vec<(usize, usize)>,
    node: Vec<(usize, usize)>,
}

impl Layout {
    fn new(m: &ProcessModel, c: &CompiledContract) -> Result<Self, String> {
        let mut edge = Vec::new();
        for e in &c.edges {
            let i = m.edges.iter().position(|x| x.id == e.id).ok_or_else(|| format!("edge {} not in model", e.id))?;
            edge.push((e.index as usize, i));
        }
        let mut node = Vec::new();
        for n in &c.nodes {
            let j = m.nodes.iter().position(|x| x.id == n.id).ok_or_else(|| format!("node {} not in model", n.id))?;
            node.push((n.index as usize, j + 1));
        }
        Ok(Layout { edge, node })
    }

    fn map(pairs: &[(usize, usize)], w: Word) -> Word {
        let mut out = Word::ZERO;
        for &(from, to) in pairs {
            if w.test_bit(from) {
                out |= Word::bit(to);
            }
        }
        out
    }

    fn state(&self, marking: Word, started: Word) -> GameState {
        GameState { marking: Self::map(&self.edge, marking), started: Self::map(&self.node, started) }
    }
}

fn combos(params: &[Param], domain: &dyn Fn(&Param) -> Vec<Value>) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for p in params {
        let vals = domain(p);
        out = out.iter().flat_map(|pre| vals.iter().map(move |v| [pre.clone(), vec![v.clone()]].concat())).collect();
    }
    out
}

/// Every (marking, started) state the compiled model reaches, trying each
/// value of `domain` for each import of each check-in. States are taken as
/// equal on the bit arrays alone, which holds when variables are only read
/// by the splits right after the check-in that sets them.
pub fn engine_states(
    m: &ProcessModel,
    mode: CompilationMode,
    domain: &dyn Fn(&Param) -> Vec<Value>,
    limit: usize,
) -> Result<BTreeSet<GameState>, String> {
    let comp = compile(m, mode).map_err(|e| e.to_string())?;
    let layout = Layout::new(m, comp.root_contract())?;
    let mut s = Session::new(ProcessVm, comp).map_err(|e| e.to_string())?;
    let (root, _) = s.instantiate().map_err(|e| e.to_string())?;
    let user = Address::from_label("user");
    let state = |s: &Session<ProcessVm>| layout.state(s.marking(root), s.started(root));
    let mut seen = BTreeSet::from([state(&s)]);
    let mut queue = VecDeque::from([s]);
    while let Some(s) = queue.pop_front() {
        for item in s.open_items(root) {
            let b = s.contract_of(root).and_then(|c| c.external(item.element)).cloned().ok_or("unknown element")?;
            for args in combos(&b.imports, domain) {
                let mut next = s.clone();
                let r = next.check_in(user, &item, args).map_err(|e| e.to_string())?;
                if !r.accepted() {
                    return Err(format!("{} rejected: {:?}", item.element_id, r.reason()));
                }
                if seen.insert(state(&next)) {
                    if seen.len() > limit {
                        return Err(format!("more than {limit} states"));
                    }
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(seen)
}
