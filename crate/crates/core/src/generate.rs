//! Random block-structured flat models and simulated event logs.
//!
//! Models are built from sequences, exclusive choices, parallel blocks and
//! loops, so they are 1-safe and sound. Each exclusive split `g<k>` reads a
//! uint variable of the same name; every task imports the split variables it
//! can reach before the next task, so a check-in decides those branches.

use std::collections::BTreeMap;

use rand::Rng;

use crate::guard::{parse_expr, Param, Stmt, VariableDecl};
use crate::model::{EventDef, FlowNode, GatewayKind, NodeKind, ProcessModel, SequenceFlow, TaskAnnotation, TaskKind};
use crate::oracle::{Run, TokenGame};
use crate::replay::{Event, EventLog, Trace};
use crate::value::Type;

/// Task and gateway counts of the evaluation datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub name: &'static str,
    pub tasks: usize,
    pub gateways: usize,
}

pub const DATASETS: [Shape; 4] = [
    Shape { name: "Invoicing", tasks: 40, gateways: 18 },
    Shape { name: "Supply chain", tasks: 10, gateways: 2 },
    Shape { name: "Incident management", tasks: 9, gateways: 6 },
    Shape { name: "Insurance claim", tasks: 13, gateways: 8 },
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Block {
    Task,
    Seq(Vec<Block>),
    Xor(Vec<Block>),
    And(Vec<Block>),
    Loop(Box<Block>),
}

/// How an exclusive split is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    pub branches: usize,
    /// Value 0 takes the loop back edge.
    pub loop_back: bool,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub model: ProcessModel,
    pub choices: BTreeMap<String, Choice>,
}

fn tasks(n: usize) -> Block {
    Block::Seq(vec![Block::Task; n])
}

/// A block with exactly `t` tasks and `b` gateway pairs; needs `t > b`.
fn gen<R: Rng>(rng: &mut R, t: usize, b: usize, allow_loops: bool) -> Block {
    if b == 0 {
        return tasks(t);
    }
    let roll = rng.gen_range(0..if allow_loops { 3 } else { 2 });
    let k = match roll {
        2 => 1,
        _ if t >= b + 2 && rng.gen_bool(0.3) => 3,
        _ => 2,
    };
    // remaining blocks go into branches or the part after this block
    let mut bb = vec![0usize; k + 1];
    for _ in 0..b - 1 {
        bb[rng.gen_range(0..=k)] += 1;
    }
    let need = |bb: &[usize]| -> usize {
        (0..k).map(|i| bb[i] + 1).sum::<usize>() + if bb[k] > 0 { bb[k] + 1 } else { 0 }
    };
    if need(&bb) > t {
        bb = vec![0; k + 1];
        bb[0] = b - 1;
    }
    let mut tt: Vec<usize> = (0..k).map(|i| bb[i] + 1).collect();
    tt.push(if bb[k] > 0 { bb[k] + 1 } else { 0 });
    tt.push(0); // before
    for _ in 0..t - need(&bb) {
        tt[rng.gen_range(0..=k + 1)] += 1;
    }
    let branches: Vec<Block> = (0..k).map(|i| gen(rng, tt[i], bb[i], allow_loops)).collect();
    let block = match roll {
        0 => Block::Xor(branches),
        1 => Block::And(branches),
        _ => Block::Loop(Box::new(branches.into_iter().next().unwrap())),
    };
    let mut seq = vec![tasks(tt[k + 1]), block];
    if tt[k] > 0 {
        seq.push(gen(rng, tt[k], bb[k], allow_loops));
    }
    Block::Seq(seq)
}

struct Emitter {
    m: ProcessModel,
    tasks: usize,
    gateways: usize,
    splits: usize,
    choices: BTreeMap<String, Choice>,
    /// Exclusive split node id to its variable.
    split_var: BTreeMap<String, String>,
}

impl Emitter {
    fn node(&mut self, kind: NodeKind, prefix: &str, name: &str) -> String {
        let id = format!("{prefix}_{}", self.m.nodes.len());
        self.m.nodes.push(FlowNode::new(&id, name, kind));
        id
    }

    fn edge(&mut self, from: &str, to: &str) -> usize {
        let id = format!("Flow_{}", self.m.edges.len());
        self.m.edges.push(SequenceFlow::new(&id, from, to));
        self.m.edges.len() - 1
    }

    fn gateway(&mut self, kind: GatewayKind) -> String {
        self.gateways += 1;
        self.node(NodeKind::Gateway(kind), "Gateway", "")
    }

    fn split(&mut self, branches: usize, loop_back: bool) -> String {
        let id = self.gateway(GatewayKind::Exclusive);
        self.splits += 1;
        let var = format!("g{}", self.splits);
        self.choices.insert(var.clone(), Choice { branches, loop_back });
        self.split_var.insert(id.clone(), var);
        id
    }

    /// Emits `b` after node `from`; returns the exit node.
    fn emit(&mut self, b: &Block, from: &str) -> String {
        match b {
            Block::Task => {
                self.tasks += 1;
                let name = format!("Task {}", self.tasks);
                let id = self.node(NodeKind::Task(TaskKind::User), "Task", &name);
                self.edge(from, &id);
                id
            }
            Block::Seq(parts) => {
                let mut cur = from.to_string();
                for p in parts {
                    cur = self.emit(p, &cur);
                }
                cur
            }
            Block::Xor(bs) | Block::And(bs) => {
                let split = match b {
                    Block::Xor(_) => self.split(bs.len(), false),
                    _ => self.gateway(GatewayKind::Parallel),
                };
                self.edge(from, &split);
                let exits: Vec<String> = bs.iter().map(|x| self.emit(x, &split)).collect();
                let join = self.gateway(if matches!(b, Block::Xor(_)) { GatewayKind::Exclusive } else { GatewayKind::Parallel });
                for e in exits {
                    self.edge(&e, &join);
                }
                join
            }
            Block::Loop(body) => {
                let join = self.gateway(GatewayKind::Exclusive);
                self.edge(from, &join);
                let exit = self.emit(body, &join);
                let split = self.split(2, true);
                self.edge(&exit, &split);
                self.edge(&split, &join);
                split
            }
        }
    }

    /// Conditions on split outgoing flows and task annotations.
    fn finish(mut self) -> Generated {
        for (split, var) in self.split_var.clone() {
            let outs: Vec<usize> = (0..self.m.edges.len()).filter(|i| self.m.edges[*i].source == split).collect();
            for (i, e) in outs.iter().enumerate() {
                if i + 1 == outs.len() {
                    self.m.edges[*e].is_default = true;
                } else {
                    self.m.edges[*e].condition = Some(parse_expr(&format!("{var} == {i}")).expect("generated condition"));
                }
            }
        }
        for var in self.choices.keys() {
            self.m.decls.vars.push(VariableDecl { name: var.clone(), ty: Type::Uint, init: None });
        }
        let task_ids: Vec<String> =
            self.m.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Task(_))).map(|n| n.id.clone()).collect();
        for id in task_ids {
            let vars = self.reachable_splits(&id);
            if vars.is_empty() {
                continue;
            }
            let import_params = vars.iter().map(|v| Param { ty: Type::Uint, name: v.clone() }).collect();
            let operations = vars
                .iter()
                .map(|v| Stmt::Assign { target: v.clone(), value: parse_expr(v).expect("variable reference") })
                .collect();
            let a = TaskAnnotation { export_params: vec![], import_params, operations };
            let n = self.m.nodes.iter_mut().find(|n| n.id == id).unwrap();
            n.annotation = Some(a);
        }
        Generated { model: self.m, choices: self.choices }
    }

    /// Split variables reachable from `task` through gateways only.
    fn reachable_splits(&self, task: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut stack: Vec<String> = self.m.outgoing(task).map(|e| e.target.clone()).collect();
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            let node = self.m.node(&n).unwrap();
            if !matches!(node.kind, NodeKind::Gateway(_)) {
                continue;
            }
            if let Some(v) = self.split_var.get(&n) {
                out.push(v.clone());
            }
            stack.extend(self.m.outgoing(&n).map(|e| e.target.clone()));
        }
        out.sort_by_key(|v| v[1..].parse::<usize>().unwrap_or(0));
        out
    }
}

fn emit_model(id: &str, name: &str, body: &Block) -> Generated {
    let mut e = Emitter {
        m: ProcessModel::new(id, name),
        tasks: 0,
        gateways: 0,
        splits: 0,
        choices: BTreeMap::new(),
        split_var: BTreeMap::new(),
    };
    let start = e.node(NodeKind::StartEvent(EventDef::none()), "Start", "start");
    let exit = e.emit(body, &start);
    let end = e.node(NodeKind::EndEvent(EventDef::none()), "End", "end");
    e.edge(&exit, &end);
    e.finish()
}

/// Model with exactly `tasks` user tasks and `gateways` (even) gateways,
/// starting with a task.
pub fn shaped_model<R: Rng>(rng: &mut R, name: &str, tasks_n: usize, gateways: usize) -> Generated {
    assert!(gateways.is_multiple_of(2), "gateways come in split/join pairs");
    let b = gateways / 2;
    assert!(tasks_n >= b + 2, "not enough tasks for {b} blocks");
    let body = Block::Seq(vec![Block::Task, gen(rng, tasks_n - 1, b, true)]);
    let id: String = name.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    emit_model(&id, name, &body)
}

pub fn dataset_model(shape: &Shape, seed: u64) -> Generated {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    shaped_model(&mut rng, shape.name, shape.tasks, shape.gateways)
}

/// Random flat model with at most `max_nodes` nodes (at least 4).
pub fn random_flat_model<R: Rng>(rng: &mut R, max_nodes: usize) -> Generated {
    // start + end + tasks + 2 per block
    let budget = max_nodes.max(4) - 2;
    let b = rng.gen_range(0..=(budget - 2) / 3);
    let t = rng.gen_range(b + 2..=budget - 2 * b);
    let loops = rng.gen_bool(0.5);
    let body = Block::Seq(vec![Block::Task, gen(rng, t - 1, b, loops)]);
    emit_model("Random", "Random model", &body)
}

/// Conforming trace drawn by running the model; loops are taken with
/// probability 1/4. `None` if it runs past `max_events`.
pub fn simulate_trace<R: Rng>(g: &Generated, game: &TokenGame, rng: &mut R, max_events: usize) -> Option<Trace> {
    let mut run = Run::new(game).ok()?;
    let mut events = Vec::new();
    while !run.is_final() {
        if events.len() >= max_events {
            return None;
        }
        let started = run.started();
        let (id, name) = started[rng.gen_range(0..started.len())];
        let mut inputs = Vec::new();
        let mut env = crate::guard::VarEnv::new();
        for p in run.imports(id) {
            let c = g.choices.get(&p.name).copied().unwrap_or(Choice { branches: 1, loop_back: false });
            let v = if c.loop_back {
                u64::from(!rng.gen_bool(0.25))
            } else {
                rng.gen_range(0..c.branches as u64)
            };
            env.set(&p.name, crate::value::Value::uint(v));
            inputs.push((p.name.clone(), v.to_string()));
        }
        run.complete(id, &env).ok()?;
        events.push(Event { name: name.to_string(), inputs });
    }
    Some(Trace { events })
}

/// `n` conforming traces (re-drawn when too long).
pub fn simulate_log<R: Rng>(g: &Generated, rng: &mut R, n: usize, max_events: usize) -> EventLog {
    let game = TokenGame::new(&g.model).expect("generated models are flat");
    let mut traces = Vec::new();
    while traces.len() < n {
        if let Some(t) = simulate_trace(g, &game, rng, max_events) {
            traces.push(t);
        }
    }
    EventLog { traces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, write_bpmn, parse_bpmn_str, Severity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn count(m: &ProcessModel) -> (usize, usize) {
        let t = m.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Task(_))).count();
        let g = m.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Gateway(_))).count();
        (t, g)
    }

    #[test]
    fn dataset_shapes_are_exact() {
        for (i, s) in DATASETS.iter().enumerate() {
            let g = dataset_model(s, i as u64);
            assert_eq!(count(&g.model), (s.tasks, s.gateways), "{}", s.name);
            let errs: Vec<_> = validate_model(&g.model).into_iter().filter(|d| d.severity == Severity::Error).collect();
            assert!(errs.is_empty(), "{errs:?}");
        }
    }

    #[test]
    fn random_models_fit_the_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = random_flat_model(&mut rng, 12);
            assert!(g.model.nodes.len() <= 12);
            assert!(TokenGame::new(&g.model).is_ok());
        }
    }

    #[test]
    fn xml_round_trip() {
        let g = dataset_model(&DATASETS[2], 7);
        let back = parse_bpmn_str(&write_bpmn(&g.model)).unwrap();
        assert_eq!(back.nodes, g.model.nodes);
        assert_eq!(back.edges, g.model.edges);
    }

    #[test]
    fn simulated_traces_conform() {
        let g = dataset_model(&DATASETS[3], 1);
        let game = TokenGame::new(&g.model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let log = simulate_log(&g, &mut rng, 20, 200);
        for t in &log.traces {
            assert!(game.completes(&t.names()));
        }
    }
}
