use std::collections::{BTreeMap, BTreeSet};

use crate::model::partition::{classify, ElementClass, Origin, Unit};
use crate::model::{
    EventDef, EventType, FlowNode, GatewayKind, MultiInstance, NodeKind, ProcessModel, TaskKind,
};
use crate::word::{Bytes32, Word};

use super::index::IndexAssignment;
use super::ir::*;
use super::{CompilationMode, CompileError};

pub(crate) struct Builder<'a> {
    m: &'a ProcessModel,
    unit: &'a Unit,
    ix: IndexAssignment,
    /// Model scope that counts as "the contract" for this unit.
    top: Option<String>,
    mode: CompilationMode,
    /// Reusable node id to child contract hash.
    children: &'a BTreeMap<String, String>,
}

fn event_kind(ty: EventType) -> Option<EventKind> {
    match ty {
        EventType::Error => Some(EventKind::Error),
        EventType::Escalation => Some(EventKind::Escalation),
        EventType::Signal => Some(EventKind::Signal),
        _ => None,
    }
}

fn code_word(def: &EventDef) -> Option<Bytes32> {
    def.code.as_deref().map(Bytes32::from_text)
}

/// Identifier-safe function base name.
pub fn function_name(n: &FlowNode) -> String {
    let src = if n.name.trim().is_empty() { &n.id } else { &n.name };
    let mut s = String::new();
    for word in src.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
        let mut cs = word.chars();
        if let Some(first) = cs.next() {
            s.push(first.to_ascii_uppercase());
            s.extend(cs);
        }
    }
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, 'E');
    }
    s
}

impl<'a> Builder<'a> {
    pub fn new(
        m: &'a ProcessModel,
        unit: &'a Unit,
        mode: CompilationMode,
        children: &'a BTreeMap<String, String>,
    ) -> Result<Self, CompileError> {
        let ix = IndexAssignment::for_unit(m, unit)?;
        let top = match unit.origin {
            Origin::Root | Origin::CallActivity => None,
            Origin::BoundaryHandler => unit.key.as_deref().and_then(|k| m.node(k)).and_then(|b| b.scope.clone()),
            Origin::MultiInstance | Origin::EventSubprocess => unit.key.clone(),
        };
        Ok(Builder { m, unit, ix, top, mode, children })
    }

    fn in_unit(&self, id: &str) -> bool {
        self.ix.node(id).is_some()
    }

    fn idx(&self, id: &str) -> u32 {
        self.ix.node(id).unwrap_or(0)
    }

    fn bit(&self, id: &str) -> Word {
        self.ix.node_mask(id)
    }

    fn ins(&self, id: &str) -> Word {
        self.ix.incoming_mask(self.m, id)
    }

    fn outs(&self, id: &str) -> Word {
        self.ix.outgoing_mask(self.m, id)
    }

    /// Kill/scope index of a model scope: 0 for the contract itself.
    fn scope_index(&self, scope: Option<&str>) -> u32 {
        if scope == self.top.as_deref() {
            0
        } else {
            scope.map_or(0, |s| self.idx(s))
        }
    }

    fn is_inlined_scope(&self, n: &FlowNode) -> bool {
        match n.kind {
            NodeKind::EmbeddedSubprocess => n.multi_instance.is_none(),
            NodeKind::EventSubprocess { interrupting } => interrupting,
            _ => false,
        }
    }

    fn region_of_scope(&self, s: &str) -> Region {
        let mut r = Region::default();
        for n in self.unit.nodes.iter().filter(|n| n.as_str() != s && self.m.is_within(n, s)) {
            r.nodes |= self.bit(n);
        }
        for e in &self.unit.edges {
            let t = &self.m.edge(e).expect("edge").target;
            if t != s && self.m.is_within(t, s) {
                r.edges |= self.ix.edge_mask(e);
            }
        }
        r
    }

    /// Tokens and started elements that keep `scope` alive.
    fn region_of(&self, scope: Option<&str>) -> Region {
        match scope {
            s if s == self.top.as_deref() => Region { edges: self.ix.full_edges(), nodes: self.ix.full_nodes() },
            Some(s) => self.region_of_scope(s),
            None => Region { edges: self.ix.full_edges(), nodes: self.ix.full_nodes() },
        }
    }

    /// Region that makes a boundary host active.
    fn host_region(&self, host: &FlowNode) -> Region {
        if self.is_inlined_scope(host) {
            self.region_of_scope(&host.id)
        } else {
            Region { edges: Word::ZERO, nodes: self.bit(&host.id) }
        }
    }

    fn message_boundaries(&self, host: &str) -> Word {
        self.m
            .boundaries_of(host)
            .filter(|b| matches!(&b.kind, NodeKind::BoundaryEvent { event, .. } if event.ty == EventType::Message))
            .fold(Word::ZERO, |acc, b| acc | self.bit(&b.id))
    }

    fn boundary_catcher(&self, b: &FlowNode, active: Option<Region>) -> Option<Catcher> {
        let NodeKind::BoundaryEvent { interrupting, event } = &b.kind else { return None };
        let kind = event_kind(event.ty)?;
        let host = b.attached_to.as_deref()?;
        let effect = if *interrupting {
            CatchEffect::Interrupt { kill: self.idx(host), produce: self.outs(&b.id) }
        } else {
            CatchEffect::Spawn { reusable: self.idx(&b.id) }
        };
        Some(Catcher { kind, code: code_word(event), node: self.idx(&b.id), active, effect })
    }

    fn esp_catcher(&self, esp: &FlowNode, active: Option<Region>) -> Option<Catcher> {
        let NodeKind::EventSubprocess { interrupting } = esp.kind else { return None };
        let start = self.m.start_of(Some(&esp.id))?;
        let NodeKind::StartEvent(def) = &start.kind else { return None };
        let kind = event_kind(def.ty)?;
        let effect = if interrupting {
            CatchEffect::Interrupt { kill: self.scope_index(esp.scope.as_deref()), produce: self.outs(&start.id) }
        } else {
            CatchEffect::Spawn { reusable: self.idx(&esp.id) }
        };
        Some(Catcher { kind, code: code_word(def), node: self.idx(&start.id), active, effect })
    }

    /// Error and escalation catchers from `scope` outward to the contract
    /// boundary, innermost first; specific codes before catch-alls per level.
    fn chain_catchers(&self, scope: Option<&str>) -> Vec<Catcher> {
        let mut out = Vec::new();
        let mut cur = scope.map(str::to_string);
        let mut came_from: Option<String> = None;
        loop {
            let mut level: Vec<Catcher> = self
                .m
                .nodes_in(cur.as_deref())
                .filter(|n| matches!(n.kind, NodeKind::EventSubprocess { .. }))
                .filter(|n| came_from.as_deref() != Some(n.id.as_str()) && self.in_unit(&n.id))
                .filter_map(|n| self.esp_catcher(n, None))
                .filter(|c| c.kind != EventKind::Signal)
                .collect();
            if cur.as_deref() != self.top.as_deref() {
                if let Some(s) = cur.as_deref() {
                    level.extend(
                        self.m.boundaries_of(s).filter_map(|b| self.boundary_catcher(b, None)).filter(|c| c.kind != EventKind::Signal),
                    );
                }
            }
            level.sort_by_key(|c| c.code.is_none());
            out.extend(level);
            if cur.as_deref() == self.top.as_deref() || cur.is_none() {
                break;
            }
            let s = cur.clone().expect("scope");
            came_from = Some(s.clone());
            cur = self.m.node(&s).and_then(|n| n.scope.clone());
        }
        out
    }

    fn signal_catchers(&self) -> Vec<Catcher> {
        let mut out = Vec::new();
        for id in &self.unit.nodes {
            let n = self.m.node(id).expect("node");
            match &n.kind {
                NodeKind::IntermediateCatch(d) if d.ty == EventType::Signal => out.push(Catcher {
                    kind: EventKind::Signal,
                    code: code_word(d),
                    node: self.idx(id),
                    active: Some(Region { edges: self.ins(id), nodes: Word::ZERO }),
                    effect: CatchEffect::Move { consume: self.ins(id), produce: self.outs(id) },
                }),
                NodeKind::BoundaryEvent { event, .. } if event.ty == EventType::Signal => {
                    let host = self.m.node(n.attached_to.as_deref().unwrap_or_default()).expect("host");
                    out.extend(self.boundary_catcher(n, Some(self.host_region(host))));
                }
                NodeKind::EventSubprocess { .. } => {
                    let active = self.region_of(n.scope.as_deref());
                    out.extend(self.esp_catcher(n, Some(active)).filter(|c| c.kind == EventKind::Signal));
                }
                _ => {}
            }
        }
        // Non-interrupting ESP and boundary nodes belong to this unit even
        // though their bodies do not; both are covered above.
        out
    }

    fn throw_action(&self, n: &FlowNode, def: &EventDef, end_scope: Option<u32>) -> Action {
        let kind = event_kind(def.ty).expect("throwing kind");
        let code = code_word(def).unwrap_or(Bytes32::ZERO);
        let catchers = if kind == EventKind::Signal {
            Vec::new()
        } else {
            self.chain_catchers(n.scope.as_deref()).into_iter().filter(|c| c.matches(kind, code)).take(1).collect()
        };
        let end_scope = if kind == EventKind::Error { None } else { end_scope };
        Action::Throw { kind, code, catchers, end_scope }
    }

    fn check_flat(&self) -> Result<(), CompileError> {
        for id in &self.unit.nodes {
            let n = self.m.node(id).expect("node");
            let ok = match &n.kind {
                NodeKind::StartEvent(d) | NodeKind::IntermediateThrow(d) => d.ty == EventType::None,
                NodeKind::EndEvent(d) => matches!(d.ty, EventType::None | EventType::Terminate),
                NodeKind::Task(_) => true,
                NodeKind::Gateway(_) => true,
                NodeKind::IntermediateCatch(d) => d.ty == EventType::Message,
                _ => false,
            };
            if !ok {
                return Err(CompileError::Unsupported {
                    mode: self.mode,
                    id: id.clone(),
                    what: format!("{} in a single-contract mode", n.kind.label()),
                });
            }
        }
        Ok(())
    }

    pub fn build(self) -> Result<CompiledContract, CompileError> {
        let flat = matches!(self.mode, CompilationMode::Default | CompilationMode::Optimized);
        if flat {
            self.check_flat()?;
        }
        let m = self.m;
        let nodes: Vec<&FlowNode> = self.unit.nodes.iter().map(|id| m.node(id).expect("node")).collect();

        // initial marking
        let initial_marking = match self.unit.origin {
            Origin::BoundaryHandler => self.outs(self.unit.key.as_deref().unwrap_or_default()),
            _ => self
                .m
                .start_of(self.top.as_deref())
                .map(|s| self.outs(&s.id))
                .unwrap_or(Word::ZERO),
        };

        // external elements fed by an event-based gateway race each other
        let mut race_of: BTreeMap<String, Word> = BTreeMap::new();
        let mut gated: BTreeSet<String> = BTreeSet::new();
        for g in nodes.iter().filter(|n| n.kind == NodeKind::Gateway(GatewayKind::EventBased)) {
            let succ: Vec<String> = m.outgoing(&g.id).map(|e| e.target.clone()).collect();
            let all = succ.iter().fold(Word::ZERO, |acc, s| acc | self.bit(s));
            for s in succ {
                race_of.insert(s.clone(), all);
                gated.insert(s);
            }
        }

        // function names, unique per contract
        let mut fnames: BTreeMap<String, String> = BTreeMap::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for n in &nodes {
            if classify(n) == ElementClass::External || self.is_message_boundary(n) {
                *seen.entry(function_name(n)).or_default() += 1;
            }
        }
        for n in &nodes {
            if classify(n) == ElementClass::External || self.is_message_boundary(n) {
                let base = function_name(n);
                let f = if seen[&base] > 1 { format!("{base}_{}", self.idx(&n.id)) } else { base };
                fnames.insert(n.id.clone(), f);
            }
        }

        let mut transitions = Vec::new();
        let mut externals = Vec::new();
        let mut reusables = Vec::new();
        for n in &nodes {
            let idx = self.idx(&n.id);
            let per_edge = |f: &mut dyn FnMut(&str, Word)| {
                for e in m.incoming(&n.id) {
                    f(&e.id, self.ix.edge_mask(&e.id));
                }
            };
            let scope_ix = self.scope_index(n.scope.as_deref());
            let class = classify(n);
            match &n.kind {
                NodeKind::StartEvent(_) | NodeKind::EventSubprocess { .. } | NodeKind::BoundaryEvent { .. } => {}
                NodeKind::Task(TaskKind::Script) => {
                    let ops = n.annotation.as_ref().map(|a| a.operations.clone()).unwrap_or_default();
                    per_edge(&mut |_, e| {
                        transitions.push(Transition {
                            node: idx,
                            guard: e,
                            idle: Word::ZERO,
                            consume: e,
                            produce: self.outs(&n.id),
                            start: Word::ZERO,
                            arm: Word::ZERO,
                            condition: None,
                            action: if ops.is_empty() { Action::None } else { Action::Script(ops.clone()) },
                        })
                    });
                }
                NodeKind::Gateway(GatewayKind::Exclusive) => {
                    let outs: Vec<_> = m.outgoing(&n.id).collect();
                    per_edge(&mut |_, e| {
                        let mut t = Transition {
                            node: idx,
                            guard: e,
                            idle: Word::ZERO,
                            consume: e,
                            produce: Word::ZERO,
                            start: Word::ZERO,
                            arm: Word::ZERO,
                            condition: None,
                            action: Action::None,
                        };
                        let branching = outs.len() > 1 || outs.iter().any(|o| o.condition.is_some());
                        if !branching {
                            t.produce = outs.iter().fold(Word::ZERO, |acc, o| acc | self.ix.edge_mask(&o.id));
                            transitions.push(t);
                            return;
                        }
                        for o in outs.iter().filter(|o| o.condition.is_some() && !o.is_default) {
                            transitions.push(Transition {
                                produce: self.ix.edge_mask(&o.id),
                                condition: o.condition.clone(),
                                ..t.clone()
                            });
                        }
                        match outs.iter().find(|o| o.is_default) {
                            Some(d) => transitions.push(Transition { produce: self.ix.edge_mask(&d.id), ..t }),
                            None => transitions
                                .push(Transition { action: Action::Revert("NoBranchEnabled".into()), ..t }),
                        }
                    });
                }
                NodeKind::Gateway(GatewayKind::Parallel) => transitions.push(Transition {
                    node: idx,
                    guard: self.ins(&n.id),
                    idle: Word::ZERO,
                    consume: self.ins(&n.id),
                    produce: self.outs(&n.id),
                    start: Word::ZERO,
                    arm: Word::ZERO,
                    condition: None,
                    action: Action::None,
                }),
                NodeKind::Gateway(GatewayKind::EventBased) => {
                    let succ: Vec<String> = m.outgoing(&n.id).map(|e| e.target.clone()).collect();
                    let bits = succ.iter().fold(Word::ZERO, |acc, s| acc | self.bit(s));
                    let arm = succ.iter().fold(Word::ZERO, |acc, s| acc | self.message_boundaries(s));
                    let list: Vec<u32> = succ.iter().map(|s| self.idx(s)).collect();
                    per_edge(&mut |_, e| {
                        transitions.push(Transition {
                            node: idx,
                            guard: e,
                            idle: bits,
                            consume: e,
                            produce: Word::ZERO,
                            start: bits,
                            arm,
                            condition: None,
                            action: Action::Start(list.clone()),
                        })
                    });
                }
                NodeKind::IntermediateThrow(def) => {
                    let action = match def.ty {
                        EventType::Signal | EventType::Escalation => self.throw_action(n, def, None),
                        EventType::Message => Action::Message { end_scope: None },
                        _ => Action::None,
                    };
                    per_edge(&mut |_, e| {
                        transitions.push(Transition {
                            node: idx,
                            guard: e,
                            idle: Word::ZERO,
                            consume: e,
                            produce: self.outs(&n.id),
                            start: Word::ZERO,
                            arm: Word::ZERO,
                            condition: None,
                            action: action.clone(),
                        })
                    });
                }
                NodeKind::IntermediateCatch(d) if d.ty == EventType::Signal => {}
                NodeKind::EndEvent(def) => {
                    let action = match def.ty {
                        EventType::None => Action::EndScope(scope_ix),
                        EventType::Terminate => Action::Terminate(scope_ix),
                        EventType::Message => Action::Message { end_scope: Some(scope_ix) },
                        _ => self.throw_action(n, def, Some(scope_ix)),
                    };
                    per_edge(&mut |_, e| {
                        transitions.push(Transition {
                            node: idx,
                            guard: e,
                            idle: Word::ZERO,
                            consume: e,
                            produce: Word::ZERO,
                            start: Word::ZERO,
                            arm: Word::ZERO,
                            condition: None,
                            action: action.clone(),
                        })
                    });
                }
                NodeKind::EmbeddedSubprocess if n.multi_instance.is_none() => {
                    let start = m.start_of(Some(&n.id)).expect("subprocess start");
                    let produce = self.outs(&start.id);
                    let arm = self.message_boundaries(&n.id);
                    per_edge(&mut |_, e| {
                        transitions.push(Transition {
                            node: idx,
                            guard: e,
                            idle: Word::ZERO,
                            consume: e,
                            produce,
                            start: Word::ZERO,
                            arm,
                            condition: None,
                            action: Action::None,
                        })
                    });
                }
                _ if class == ElementClass::External => {
                    if !gated.contains(&n.id) {
                        let bit = self.bit(&n.id);
                        let arm = self.message_boundaries(&n.id);
                        per_edge(&mut |_, e| {
                            transitions.push(Transition {
                                node: idx,
                                guard: e,
                                idle: bit,
                                consume: e,
                                produce: Word::ZERO,
                                start: bit,
                                arm,
                                condition: None,
                                action: Action::Start(vec![idx]),
                            })
                        });
                    }
                }
                _ if class == ElementClass::Reusable => {
                    let bit = self.bit(&n.id);
                    let arm = self.message_boundaries(&n.id);
                    per_edge(&mut |_, e| {
                        transitions.push(Transition {
                            node: idx,
                            guard: e,
                            idle: bit,
                            consume: e,
                            produce: Word::ZERO,
                            start: bit,
                            arm,
                            condition: None,
                            action: Action::Instantiate(idx),
                        })
                    });
                }
                other => {
                    return Err(CompileError::Unsupported {
                        mode: self.mode,
                        id: n.id.clone(),
                        what: other.label().to_string(),
                    })
                }
            }

            // bindings
            if class == ElementClass::External || self.is_message_boundary(n) {
                let a = n.annotation.clone().unwrap_or_default();
                let resource = if flat {
                    Resource::Direct
                } else if n.kind == NodeKind::Task(TaskKind::Service) {
                    Resource::Service
                } else {
                    Resource::Worklist
                };
                let trigger = match &n.kind {
                    NodeKind::BoundaryEvent { interrupting, .. } => Trigger::Boundary {
                        interrupting: *interrupting,
                        host: self.idx(n.attached_to.as_deref().unwrap_or_default()),
                    },
                    _ => Trigger::Task,
                };
                externals.push(ExternalBinding {
                    index: idx,
                    id: n.id.clone(),
                    name: n.name.clone(),
                    function: fnames[&n.id].clone(),
                    resource,
                    exports: a.export_params,
                    imports: a.import_params,
                    ops: a.operations,
                    produce: self.outs(&n.id),
                    clear: self.bit(&n.id) | race_of.get(&n.id).copied().unwrap_or(Word::ZERO),
                    disarm: self.message_boundaries(&n.id),
                    trigger,
                });
            }
            if class == ElementClass::Reusable {
                reusables.push(self.reusable_binding(n)?);
            }
        }

        // inlined scopes
        let mut scopes = Vec::new();
        for n in nodes.iter().filter(|n| self.is_inlined_scope(n)) {
            let parent = self.scope_index(n.scope.as_deref());
            let mut killed_by = Word::bit(0) | self.bit(&n.id);
            let mut cur = n.scope.clone();
            while let Some(s) = cur {
                if Some(s.as_str()) == self.top.as_deref() {
                    break;
                }
                killed_by |= self.bit(&s);
                cur = m.node(&s).and_then(|p| p.scope.clone());
            }
            scopes.push(ScopeInfo {
                index: self.idx(&n.id),
                region: self.region_of_scope(&n.id),
                produce: self.outs(&n.id),
                disarm: self.message_boundaries(&n.id),
                parent,
                event_subprocess: matches!(n.kind, NodeKind::EventSubprocess { .. }),
                killed_by,
            });
        }

        // kill table: the contract, inlined scopes, boundary hosts
        let all_armed = nodes.iter().filter(|n| self.is_message_boundary(n)).fold(Word::ZERO, |acc, n| acc | self.bit(&n.id));
        let mut kills = vec![KillEntry {
            index: 0,
            region: Region { edges: self.ix.full_edges(), nodes: self.ix.full_nodes() },
            armed: all_armed,
            reusable: reusables.iter().map(|r| r.index).collect(),
        }];
        for n in &nodes {
            let has_boundary = m.boundaries_of(&n.id).next().is_some();
            if !(self.is_inlined_scope(n) || has_boundary) {
                continue;
            }
            let entry = if self.is_inlined_scope(n) {
                let inside = |id: &str| id != n.id && m.is_within(id, &n.id);
                KillEntry {
                    index: self.idx(&n.id),
                    region: self.region_of_scope(&n.id),
                    armed: nodes
                        .iter()
                        .filter(|b| self.is_message_boundary(b))
                        .filter(|b| inside(&b.id) || b.attached_to.as_deref() == Some(n.id.as_str()))
                        .fold(Word::ZERO, |acc, b| acc | self.bit(&b.id)),
                    reusable: reusables.iter().filter(|r| inside(&r.id)).map(|r| r.index).collect(),
                }
            } else {
                KillEntry {
                    index: self.idx(&n.id),
                    region: Region { edges: Word::ZERO, nodes: self.bit(&n.id) },
                    armed: self.message_boundaries(&n.id),
                    reusable: if classify(n) == ElementClass::Reusable { vec![self.idx(&n.id)] } else { vec![] },
                }
            };
            kills.push(entry);
        }

        let name = match &self.unit.key {
            None => m.id.clone(),
            Some(k) => format!("{}_{}", m.id, k),
        };
        Ok(CompiledContract {
            name,
            mode: self.mode,
            process_id: m.id.clone(),
            scope: self.unit.key.clone(),
            origin: self.unit.origin,
            decls: m.decls.clone(),
            nodes: nodes
                .iter()
                .map(|n| NodeInfo { index: self.idx(&n.id), id: n.id.clone(), name: n.name.clone(), kind: n.kind.label().into() })
                .collect(),
            edges: self
                .ix
                .edge_order
                .iter()
                .enumerate()
                .map(|(i, id)| EdgeInfo { index: i as u32, id: id.clone() })
                .collect(),
            full_edges: self.ix.full_edges(),
            full_nodes: self.ix.full_nodes(),
            initial_marking,
            transitions,
            externals,
            reusables,
            scopes,
            kills,
            signal_catchers: if flat { Vec::new() } else { self.signal_catchers() },
        })
    }

    fn is_message_boundary(&self, n: &FlowNode) -> bool {
        matches!(&n.kind, NodeKind::BoundaryEvent { event, .. } if event.ty == EventType::Message)
    }

    fn reusable_binding(&self, n: &FlowNode) -> Result<ReusableBinding, CompileError> {
        let child = self
            .children
            .get(&n.id)
            .cloned()
            .ok_or_else(|| CompileError::UnresolvedChild(n.id.clone()))?;
        let (origin, pass_vars) = match &n.kind {
            NodeKind::CallActivity { .. } => (Origin::CallActivity, false),
            NodeKind::BoundaryEvent { .. } => (Origin::BoundaryHandler, true),
            NodeKind::EventSubprocess { .. } => (Origin::EventSubprocess, true),
            _ => (Origin::MultiInstance, true),
        };
        let (multi, cardinality) = match &n.multi_instance {
            MultiInstance::None => (MiKind::Single, None),
            MultiInstance::Parallel(e) => (MiKind::Parallel, Some(e.clone())),
            MultiInstance::Sequential(e) => (MiKind::Sequential, Some(e.clone())),
        };
        let mut catchers: Vec<Catcher> = self
            .m
            .boundaries_of(&n.id)
            .filter_map(|b| self.boundary_catcher(b, None))
            .filter(|c| c.kind != EventKind::Signal)
            .collect();
        catchers.sort_by_key(|c| c.code.is_none());
        catchers.extend(self.chain_catchers(n.scope.as_deref()));
        let produce = match origin {
            Origin::BoundaryHandler | Origin::EventSubprocess => Word::ZERO,
            _ => self.outs(&n.id),
        };
        Ok(ReusableBinding {
            index: self.idx(&n.id),
            id: n.id.clone(),
            name: n.name.clone(),
            child,
            origin,
            multi,
            cardinality,
            pass_vars,
            produce,
            disarm: self.message_boundaries(&n.id),
            catchers,
            terminate_scope: self.scope_index(n.scope.as_deref()),
        })
    }
}
