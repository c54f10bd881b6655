//! Brute-force token game over the model graph, independent of the compiler.
//! Covers flat models: none start/end events, user tasks, exclusive and
//! parallel gateways. Edge `i` in document order is marking bit `i`; node
//! `j` in document order is started bit `j + 1`.
//!
//! Two readings of exclusive splits: [`TokenGame`] explores every branch,
//! [`Run`] follows the conditions of the model against its variables.

use std::collections::{BTreeSet, VecDeque};

use crate::guard::{eval, exec_with_params, Decls, EnumTable, Expr, VarEnv};
use crate::model::{EventType, GatewayKind, NodeKind, ProcessModel, TaskAnnotation, TaskKind};
use crate::value::Value;
use crate::word::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Start,
    End,
    Task,
    Xor,
    And,
}

#[derive(Debug, Clone)]
struct GNode {
    id: String,
    name: String,
    kind: Kind,
    ins: Vec<usize>,
    outs: Vec<usize>,
    annotation: Option<TaskAnnotation>,
}

#[derive(Debug, Clone)]
struct GEdge {
    condition: Option<Expr>,
    is_default: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GameState {
    pub marking: Word,
    pub started: Word,
}

impl GameState {
    pub fn is_final(&self) -> bool {
        self.marking.is_zero() && self.started.is_zero()
    }
}

#[derive(Debug, Clone)]
pub struct TokenGame {
    nodes: Vec<GNode>,
    edges: Vec<GEdge>,
    decls: Decls,
    enums: EnumTable,
}

/// Guard against runaway automatic firing (an exclusive loop without a task).
const MAX_AUTO: usize = 10_000;

fn node_bit(i: usize) -> Word {
    Word::bit(i + 1)
}

impl TokenGame {
    pub fn new(m: &ProcessModel) -> Result<Self, String> {
        let mut nodes = Vec::new();
        for n in &m.nodes {
            if n.scope.is_some() || n.attached_to.is_some() || !n.multi_instance.is_none() {
                return Err(format!("{}: only flat models are supported", n.id));
            }
            let kind = match &n.kind {
                NodeKind::StartEvent(e) if e.ty == EventType::None => Kind::Start,
                NodeKind::EndEvent(e) if e.ty == EventType::None => Kind::End,
                NodeKind::Task(TaskKind::User) => Kind::Task,
                NodeKind::Gateway(GatewayKind::Exclusive) => Kind::Xor,
                NodeKind::Gateway(GatewayKind::Parallel) => Kind::And,
                other => return Err(format!("{}: {} is not supported", n.id, other.label())),
            };
            nodes.push(GNode {
                id: n.id.clone(),
                name: n.label().to_string(),
                kind,
                ins: Vec::new(),
                outs: Vec::new(),
                annotation: n.annotation.clone(),
            });
        }
        if nodes.len() + 1 > 256 || m.edges.len() > 256 {
            return Err("model exceeds 256 bits".into());
        }
        let pos = |id: &str| m.nodes.iter().position(|n| n.id == id).ok_or_else(|| format!("unknown node {id}"));
        let mut edges = Vec::new();
        for (i, e) in m.edges.iter().enumerate() {
            let (s, t) = (pos(&e.source)?, pos(&e.target)?);
            nodes[s].outs.push(i);
            nodes[t].ins.push(i);
            edges.push(GEdge { condition: e.condition.clone(), is_default: e.is_default });
        }
        for n in &nodes {
            let (ins, outs) = (n.ins.len(), n.outs.len());
            let ok = match n.kind {
                Kind::Start => ins == 0 && outs >= 1,
                Kind::End => ins >= 1 && outs == 0,
                Kind::Task => ins >= 1 && outs == 1,
                Kind::Xor | Kind::And => ins >= 1 && outs >= 1,
            };
            if !ok {
                return Err(format!("{}: unsupported arity {ins} in / {outs} out", n.id));
            }
        }
        Ok(TokenGame { nodes, edges, enums: m.decls.enum_table(), decls: m.decls.clone() })
    }

    pub fn task_names(&self) -> Vec<&str> {
        self.nodes.iter().filter(|n| n.kind == Kind::Task).map(|n| n.name.as_str()).collect()
    }

    fn start_marking(&self) -> Word {
        let mut w = Word::ZERO;
        for n in self.nodes.iter().filter(|n| n.kind == Kind::Start) {
            for e in &n.outs {
                w |= Word::bit(*e);
            }
        }
        w
    }

    fn produce_all(&self, mut m: Word, outs: &[usize]) -> Word {
        for e in outs {
            m |= Word::bit(*e);
        }
        m
    }

    /// First enabled automatic node in document order, with the incoming
    /// edges it would consume.
    fn enabled(&self, s: &GameState) -> Option<(usize, Word)> {
        for (i, n) in self.nodes.iter().enumerate() {
            match n.kind {
                Kind::Start => {}
                Kind::Task => {
                    if s.started.intersects(node_bit(i)) {
                        continue;
                    }
                    if let Some(e) = n.ins.iter().find(|e| s.marking.test_bit(**e)) {
                        return Some((i, Word::bit(*e)));
                    }
                }
                Kind::End | Kind::Xor => {
                    if let Some(e) = n.ins.iter().find(|e| s.marking.test_bit(**e)) {
                        return Some((i, Word::bit(*e)));
                    }
                }
                Kind::And => {
                    let all = self.produce_all(Word::ZERO, &n.ins);
                    if s.marking.contains(all) {
                        return Some((i, all));
                    }
                }
            }
        }
        None
    }

    /// Every stable state reachable by automatic moves, any exclusive branch.
    fn saturate(&self, s: GameState) -> Result<BTreeSet<GameState>, String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(s, 0usize)];
        let mut seen = BTreeSet::new();
        while let Some((s, depth)) = stack.pop() {
            if depth > MAX_AUTO {
                return Err("automatic moves do not terminate".into());
            }
            if !seen.insert(s) {
                continue;
            }
            let Some((i, consume)) = self.enabled(&s) else {
                out.insert(s);
                continue;
            };
            let n = &self.nodes[i];
            let mut base = s;
            base.marking &= !consume;
            match n.kind {
                Kind::Task => {
                    base.started |= node_bit(i);
                    stack.push((base, depth + 1));
                }
                Kind::End => stack.push((base, depth + 1)),
                Kind::And => {
                    base.marking = self.produce_all(base.marking, &n.outs);
                    stack.push((base, depth + 1));
                }
                Kind::Xor => {
                    for e in &n.outs {
                        let mut t = base;
                        t.marking |= Word::bit(*e);
                        stack.push((t, depth + 1));
                    }
                }
                Kind::Start => unreachable!(),
            }
        }
        Ok(out)
    }

    pub fn initial_states(&self) -> Result<BTreeSet<GameState>, String> {
        self.saturate(GameState { marking: self.start_marking(), started: Word::ZERO })
    }

    /// Stable states after completing started task `task` (node position).
    fn complete(&self, s: &GameState, task: usize) -> Result<BTreeSet<GameState>, String> {
        let mut t = *s;
        t.started &= !node_bit(task);
        t.marking = self.produce_all(t.marking, &self.nodes[task].outs);
        self.saturate(t)
    }

    fn started_tasks(&self, s: &GameState) -> Vec<usize> {
        (0..self.nodes.len()).filter(|i| self.nodes[*i].kind == Kind::Task && s.started.intersects(node_bit(*i))).collect()
    }

    /// All stable states reachable from the start; errs past `limit` states.
    pub fn reachable(&self, limit: usize) -> Result<BTreeSet<GameState>, String> {
        let init = self.initial_states()?;
        let mut seen: BTreeSet<GameState> = init.clone();
        let mut queue: VecDeque<GameState> = init.into_iter().collect();
        while let Some(s) = queue.pop_front() {
            for t in self.started_tasks(&s) {
                for n in self.complete(&s, t)? {
                    if seen.insert(n) {
                        if seen.len() > limit {
                            return Err(format!("more than {limit} states"));
                        }
                        queue.push_back(n);
                    }
                }
            }
        }
        Ok(seen)
    }

    /// States after replaying task names in order; empty if some event has
    /// no started task of that name under every choice.
    pub fn replay_names<S: AsRef<str>>(&self, trace: &[S]) -> Result<BTreeSet<GameState>, String> {
        let mut cur = self.initial_states()?;
        for name in trace {
            let mut next = BTreeSet::new();
            for s in &cur {
                for t in self.started_tasks(s) {
                    if self.nodes[t].name == name.as_ref() {
                        next.extend(self.complete(s, t)?);
                    }
                }
            }
            if next.is_empty() {
                return Ok(next);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Replayable under some choice of exclusive branches.
    pub fn accepts<S: AsRef<str>>(&self, trace: &[S]) -> bool {
        self.replay_names(trace).map(|s| !s.is_empty()).unwrap_or(false)
    }

    /// Replayable and ending with no token and nothing started.
    pub fn completes<S: AsRef<str>>(&self, trace: &[S]) -> bool {
        self.replay_names(trace).map(|s| s.iter().any(GameState::is_final)).unwrap_or(false)
    }
}

/// Data-driven run of a flat model: exclusive splits take the first
/// outgoing flow (document order) whose condition holds, else the default.
#[derive(Debug, Clone)]
pub struct Run<'g> {
    game: &'g TokenGame,
    pub state: GameState,
    pub vars: VarEnv,
}

impl<'g> Run<'g> {
    pub fn new(game: &'g TokenGame) -> Result<Self, String> {
        let mut vars = VarEnv::new();
        for d in &game.decls.vars {
            vars.set(&d.name, game.decls.initial_value(d));
        }
        let mut r = Run { game, state: GameState { marking: game.start_marking(), started: Word::ZERO }, vars };
        r.settle()?;
        Ok(r)
    }

    fn settle(&mut self) -> Result<(), String> {
        let g = self.game;
        for _ in 0..MAX_AUTO {
            let Some((i, consume)) = g.enabled(&self.state) else { return Ok(()) };
            let n = &g.nodes[i];
            self.state.marking &= !consume;
            match n.kind {
                Kind::Task => self.state.started |= node_bit(i),
                Kind::End => {}
                Kind::And => self.state.marking = g.produce_all(self.state.marking, &n.outs),
                Kind::Xor => {
                    let mut chosen = None;
                    for e in &n.outs {
                        if let Some(c) = &g.edges[*e].condition {
                            match eval(c, &self.vars, &g.enums).map_err(|e| e.to_string())? {
                                Value::Bool(true) => {
                                    chosen = Some(*e);
                                    break;
                                }
                                Value::Bool(false) => {}
                                v => return Err(format!("condition gave {v}")),
                            }
                        }
                    }
                    let chosen = chosen
                        .or_else(|| n.outs.iter().copied().find(|e| g.edges[*e].is_default))
                        .or_else(|| (n.outs.len() == 1).then(|| n.outs[0]))
                        .ok_or_else(|| format!("{}: no branch applies", n.id))?;
                    self.state.marking |= Word::bit(chosen);
                }
                Kind::Start => unreachable!(),
            }
        }
        Err("automatic moves do not terminate".into())
    }

    /// Started tasks as (id, name), document order.
    pub fn started(&self) -> Vec<(&'g str, &'g str)> {
        self.game
            .started_tasks(&self.state)
            .into_iter()
            .map(|i| (self.game.nodes[i].id.as_str(), self.game.nodes[i].name.as_str()))
            .collect()
    }

    /// Import parameters of a task.
    pub fn imports(&self, task_id: &str) -> Vec<crate::guard::Param> {
        self.game
            .nodes
            .iter()
            .find(|n| n.id == task_id)
            .and_then(|n| n.annotation.as_ref())
            .map(|a| a.import_params.clone())
            .unwrap_or_default()
    }

    pub fn complete(&mut self, task_id: &str, inputs: &VarEnv) -> Result<(), String> {
        let g = self.game;
        let i = g.nodes.iter().position(|n| n.id == task_id).ok_or_else(|| format!("unknown task {task_id}"))?;
        if !self.state.started.intersects(node_bit(i)) {
            return Err(format!("{task_id} is not started"));
        }
        if let Some(a) = &g.nodes[i].annotation {
            self.vars = exec_with_params(&a.operations, &self.vars, inputs, &g.enums).map_err(|e| e.to_string())?;
        }
        self.state.started &= !node_bit(i);
        self.state.marking = g.produce_all(self.state.marking, &g.nodes[i].outs);
        self.settle()
    }

    pub fn is_final(&self) -> bool {
        self.state.is_final()
    }
}
