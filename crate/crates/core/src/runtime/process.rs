//! Process instance contract: the token game over `marking`, `started`
//! and `armed`, plus child-instance bookkeeping and event handling.

use crate::compiler::ir::*;
use crate::compiler::CompilationMode;
use crate::guard::{eval, exec_with_params, EnumTable, Param, Stmt, VarEnv};
use crate::ledger::{Host, Revert, Storage};
use crate::model::partition::Origin;
use crate::value::Value;
use crate::word::{Address, Bytes32, Word};

use super::{arg_bytes32, arg_u64, check_args, load_addr, revert, store_addr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Fresh = 0,
    Running = 1,
    Done = 2,
}

impl Status {
    fn from_word(w: Word) -> Status {
        match w.to_u64() {
            Some(1) => Status::Running,
            Some(2) => Status::Done,
            _ => Status::Fresh,
        }
    }
}

const MAX_SLOTS: u64 = 256;

/// Constructor storage: initial marking, wiring and declared initial values.
pub fn init_storage(c: &CompiledContract, parent: Address, worklist: Address, service: Address, registry: Address) -> Storage {
    let mut s = Storage::new();
    let mut put = |k: &str, w: Word| {
        if !w.is_zero() {
            s.insert(k.to_string(), w);
        }
    };
    put("marking", c.initial_marking);
    put("parent", parent.to_word());
    put("worklist", worklist.to_word());
    put("service", service.to_word());
    put("registry", registry.to_word());
    for d in &c.decls.vars {
        put(&format!("var.{}", d.name), c.decls.initial_value(d).to_word());
    }
    s
}

struct Exec<'a> {
    c: &'a CompiledContract,
    h: &'a mut dyn Host,
    enums: EnumTable,
    marking: Word,
    started: Word,
    armed: Word,
    saved: [Word; 3],
    status: Status,
    /// Kill indexes applied by the action being run.
    killed: Word,
}

pub fn execute(c: &CompiledContract, h: &mut dyn Host, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
    let mut x = Exec {
        c,
        h,
        enums: c.decls.enum_table(),
        marking: Word::ZERO,
        started: Word::ZERO,
        armed: Word::ZERO,
        saved: [Word::ZERO; 3],
        status: Status::Fresh,
        killed: Word::ZERO,
    };
    match op {
        "marking" => Ok(vec![Value::Uint(x.h.sload("marking")?)]),
        "startedActivities" => Ok(vec![Value::Uint(x.h.sload("started")?)]),
        "armed" => Ok(vec![Value::Uint(x.h.sload("armed")?)]),
        "status" => Ok(vec![Value::Uint(x.h.sload("status")?)]),
        "findWorklist" => Ok(vec![Value::Address(load_addr(x.h, "worklist")?)]),
        "findServiceBridge" => Ok(vec![Value::Address(load_addr(x.h, "service")?)]),
        "parent" => Ok(vec![Value::Address(load_addr(x.h, "parent")?)]),
        "instanceIndex" => Ok(vec![Value::Uint(x.h.sload("index")?)]),
        "findStartedInstances" => {
            let r = arg_u64(args, 0)?;
            x.started_children(Some(r as u32)).map(|v| v.into_iter().map(Value::Address).collect())
        }
        "subInstances" => {
            let n = x.slots()?;
            (0..n).map(|i| Ok(Value::Address(load_addr(x.h, &format!("sub.{i}"))?))).collect()
        }
        "variable" => {
            let name = arg_bytes32(args, 0)?;
            let d = c
                .decls
                .vars
                .iter()
                .find(|d| Bytes32::from_text(&d.name) == name)
                .ok_or_else(|| Revert::new("UnknownVariable"))?;
            Ok(vec![x.load_var(&d.name)?])
        }
        "variables" => x.all_vars(),
        "startExecution" => x.start_execution(args),
        "setInstanceIndex" => {
            x.only_parent()?;
            x.h.sstore("index", Word::from_u64(arg_u64(args, 0)?))?;
            Ok(vec![])
        }
        "handleEvent" if c.mode == CompilationMode::Full => x.handle_event(args),
        "terminate" if c.mode == CompilationMode::Full => x.terminate(),
        "broadcastSignal" if c.mode == CompilationMode::Full => {
            x.only_parent()?;
            x.load()?;
            if x.status != Status::Running {
                return Ok(vec![]);
            }
            x.broadcast(arg_bytes32(args, 0)?)?;
            x.step()?;
            Ok(vec![])
        }
        _ => match c.externals.iter().find(|b| b.complete_function() == op) {
            Some(b) => x.complete(b, args),
            None => revert(format!("UnknownOperation {op}")),
        },
    }
}

/// Basic mode: an append-only trace of event references.
pub fn recorder(h: &mut dyn Host, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
    match op {
        "record" => {
            let ev = arg_bytes32(args, 0)?;
            let n = h.sload("rec.len")?.to_u64().unwrap_or(0);
            h.sstore(&format!("rec.{n}"), ev.to_word())?;
            h.sstore("rec.len", Word::from_u64(n + 1))?;
            h.emit("Recorded", vec![Value::Bytes32(ev)])?;
            Ok(vec![])
        }
        "recordCount" => Ok(vec![Value::Uint(h.sload("rec.len")?)]),
        "recordAt" => {
            let i = arg_u64(args, 0)?;
            Ok(vec![Value::Bytes32(Bytes32::from_word(h.sload(&format!("rec.{i}"))?))])
        }
        _ => revert(format!("UnknownOperation {op}")),
    }
}

impl Exec<'_> {
    fn load(&mut self) -> Result<(), Revert> {
        self.marking = self.h.sload("marking")?;
        self.started = self.h.sload("started")?;
        self.armed = self.h.sload("armed")?;
        self.saved = [self.marking, self.started, self.armed];
        self.status = Status::from_word(self.h.sload("status")?);
        Ok(())
    }

    fn commit(&mut self) -> Result<(), Revert> {
        let cur = [self.marking, self.started, self.armed];
        for (i, key) in ["marking", "started", "armed"].iter().enumerate() {
            if cur[i] != self.saved[i] {
                self.h.sstore(key, cur[i])?;
            }
        }
        self.saved = cur;
        Ok(())
    }

    fn set_status(&mut self, s: Status) -> Result<(), Revert> {
        self.status = s;
        self.h.sstore("status", Word::from_u64(s as u64))
    }

    /// Cross-contract call; the callee may re-enter this instance.
    fn call_out(&mut self, target: Address, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
        if target.is_zero() {
            return revert(format!("MissingRegistryLink: no contract for {op}"));
        }
        self.commit()?;
        let out = self.h.call(target, op, args)?;
        self.load()?;
        Ok(out)
    }

    fn only_parent(&mut self) -> Result<Address, Revert> {
        let parent = load_addr(self.h, "parent")?;
        if parent.is_zero() || self.h.sender() != parent {
            return revert("Unauthorized: caller is not the parent instance");
        }
        Ok(parent)
    }

    // variables

    fn load_var(&mut self, name: &str) -> Result<Value, Revert> {
        let d = self.c.decls.var(name).ok_or_else(|| Revert(format!("UnknownVariable {name}")))?;
        let ty = d.ty.clone();
        Ok(Value::from_word(self.h.sload(&format!("var.{name}"))?, &ty))
    }

    fn all_vars(&mut self) -> Result<Vec<Value>, Revert> {
        let names: Vec<String> = self.c.decls.vars.iter().map(|d| d.name.clone()).collect();
        names.iter().map(|n| self.load_var(n)).collect()
    }

    fn env_for(&mut self, names: &[String]) -> Result<VarEnv, Revert> {
        let mut env = VarEnv::new();
        for n in names {
            if self.c.decls.var(n).is_some() {
                let v = self.load_var(n)?;
                env.set(n, v);
            }
        }
        Ok(env)
    }

    fn eval_bool(&mut self, e: &crate::guard::Expr) -> Result<bool, Revert> {
        let mut names = Vec::new();
        e.free_vars(&mut names);
        let env = self.env_for(&names)?;
        match eval(e, &env, &self.enums) {
            Ok(Value::Bool(b)) => Ok(b),
            Ok(v) => revert(format!("condition is {}, not bool", v.type_of())),
            Err(err) => revert(err.to_string()),
        }
    }

    fn eval_uint(&mut self, e: &crate::guard::Expr) -> Result<u64, Revert> {
        let mut names = Vec::new();
        e.free_vars(&mut names);
        let env = self.env_for(&names)?;
        match eval(e, &env, &self.enums) {
            Ok(Value::Uint(w)) => w.to_u64().ok_or_else(|| Revert::new("cardinality out of range")),
            Ok(v) => revert(format!("cardinality is {}, not uint", v.type_of())),
            Err(err) => revert(err.to_string()),
        }
    }

    fn run_stmts(&mut self, stmts: &[Stmt], params: &VarEnv) -> Result<(), Revert> {
        if stmts.is_empty() {
            return Ok(());
        }
        let mut names = Vec::new();
        for s in stmts {
            s.free_vars(&mut names);
            if let Stmt::Assign { target, .. } = s {
                if !names.contains(target) {
                    names.push(target.clone());
                }
            }
        }
        let env = self.env_for(&names)?;
        let out = exec_with_params(stmts, &env, params, &self.enums).map_err(|e| Revert(e.to_string()))?;
        for (k, v) in &out.values {
            if env.get(k) != Some(v) {
                self.h.sstore(&format!("var.{k}"), v.to_word())?;
            }
        }
        Ok(())
    }

    fn export_values(&mut self, params: &[Param]) -> Result<Vec<Value>, Revert> {
        params.iter().map(|p| self.load_var(&p.name)).collect()
    }

    // operations

    fn start_execution(&mut self, args: &[Value]) -> Result<Vec<Value>, Revert> {
        let status = Status::from_word(self.h.sload("status")?);
        if status != Status::Fresh {
            return revert("AlreadyStarted");
        }
        let parent = load_addr(self.h, "parent")?;
        if !parent.is_zero() && self.h.sender() != parent {
            return revert("Unauthorized: child instances are started by their parent");
        }
        if !args.is_empty() {
            let params: Vec<Param> =
                self.c.decls.vars.iter().map(|d| Param { ty: d.ty.clone(), name: d.name.clone() }).collect();
            check_args(&params, args, &self.c.decls)?;
            for (p, v) in params.iter().zip(args) {
                self.h.sstore(&format!("var.{}", p.name), v.to_word())?;
            }
        }
        self.set_status(Status::Running)?;
        self.load()?;
        self.step()?;
        Ok(vec![])
    }

    fn complete(&mut self, b: &ExternalBinding, args: &[Value]) -> Result<Vec<Value>, Revert> {
        let key = match b.resource {
            Resource::Worklist => Some("worklist"),
            Resource::Service => Some("service"),
            Resource::Direct => None,
        };
        if let Some(key) = key {
            if self.h.sender() != load_addr(self.h, key)? {
                return revert(format!("Unauthorized: only the {key} completes {}", b.function));
            }
        }
        self.load()?;
        if self.status != Status::Running {
            return revert("NotRunning");
        }
        let bit = Word::bit(b.index as usize);
        match b.trigger {
            Trigger::Task if !self.started.contains(bit) => return revert(format!("NotStarted: {}", b.function)),
            Trigger::Boundary { .. } if !self.armed.contains(bit) => return revert(format!("NotArmed: {}", b.function)),
            _ => {}
        }
        check_args(&b.imports, args, &self.c.decls)?;
        let mut params = VarEnv::new();
        for (p, v) in b.imports.iter().zip(args) {
            params.set(&p.name, v.clone());
        }
        self.run_stmts(&b.ops, &params)?;
        match b.trigger {
            Trigger::Task => {
                self.started &= !b.clear;
                self.armed &= !b.disarm;
                self.marking |= b.produce;
            }
            Trigger::Boundary { interrupting: true, host } => {
                self.armed &= !bit;
                self.kill(host)?;
                self.marking |= b.produce;
            }
            Trigger::Boundary { interrupting: false, .. } => {
                // fires once per activation of the host
                self.armed &= !bit;
                self.spawn(b.index)?;
            }
        }
        self.step()?;
        Ok(vec![])
    }

    fn terminate(&mut self) -> Result<Vec<Value>, Revert> {
        self.only_parent()?;
        self.load()?;
        if self.status == Status::Done {
            return Ok(vec![]);
        }
        self.kill(0)?;
        self.commit()?;
        self.set_status(Status::Done)?;
        Ok(vec![])
    }

    fn handle_event(&mut self, args: &[Value]) -> Result<Vec<Value>, Revert> {
        let kind = EventKind::from_u64(arg_u64(args, 0)?).ok_or_else(|| Revert::new("BadArguments: event kind"))?;
        let code = arg_bytes32(args, 1)?;
        let sender = self.h.sender();
        let slot = self.h.sload(&format!("child.{sender}"))?.to_u64().unwrap_or(0);
        if slot == 0 {
            return revert("UnknownChild");
        }
        let slot = slot - 1;
        let r = self.h.sload(&format!("sub.owner.{slot}"))?.to_u64().unwrap_or(0) as u32;
        let group = self.h.sload(&format!("substarted.{r}"))?;
        if r == 0 || !group.test_bit(slot as usize) {
            return revert("UnknownChild");
        }
        self.load()?;
        if self.status != Status::Running {
            return revert("NotRunning");
        }
        let b = self.c.reusable(r).ok_or_else(|| Revert::new("UnknownChild"))?;
        let clear_slot = |x: &mut Self| -> Result<(), Revert> {
            let g = x.h.sload(&format!("substarted.{r}"))?;
            x.h.sstore(&format!("substarted.{r}"), g & !Word::bit(slot as usize))
        };
        match kind {
            EventKind::Default => {
                clear_slot(self)?;
                self.child_finished(b)?;
            }
            EventKind::Terminate => {
                clear_slot(self)?;
                self.killed = Word::ZERO;
                self.terminate_scope(b.terminate_scope)?;
            }
            EventKind::Error | EventKind::Escalation => {
                if kind == EventKind::Error {
                    clear_slot(self)?;
                }
                self.killed = Word::ZERO;
                match b.catchers.iter().find(|c| c.matches(kind, code)).cloned() {
                    Some(c) => self.apply_catch(&c)?,
                    None => self.uncaught(kind, code)?,
                }
                if kind == EventKind::Error && self.status == Status::Running && !self.killed.test_bit(r as usize) {
                    // the failed child may have been the last one running
                    self.child_finished(b)?;
                }
            }
            EventKind::Signal => {
                let parent = load_addr(self.h, "parent")?;
                if parent.is_zero() {
                    self.broadcast(code)?;
                } else {
                    self.call_out(parent, "handleEvent", &[Value::uint(EventKind::Signal as u64), Value::Bytes32(code)])?;
                }
            }
        }
        if self.status == Status::Running {
            self.step()?;
        }
        Ok(vec![])
    }

    /// A child of `b` ended normally (or its slot was cleared).
    fn child_finished(&mut self, b: &ReusableBinding) -> Result<(), Revert> {
        let r = b.index;
        if b.multi == MiKind::Sequential {
            if let Some(slot) = self.reserved_slot(r)? {
                return self.create_into(b, slot);
            }
        }
        let group = self.h.sload(&format!("substarted.{r}"))?;
        if group.is_zero() && self.reserved_slot(r)?.is_none() && self.started.test_bit(r as usize) {
            self.started &= !Word::bit(r as usize);
            self.armed &= !b.disarm;
            self.marking |= b.produce;
            if b.produce.is_zero() {
                // handlers leave no token; their scope may be finished now
                self.killed = Word::ZERO;
                self.end_scope(b.terminate_scope)?;
            }
        }
        Ok(())
    }

    // step loop

    fn step(&mut self) -> Result<(), Revert> {
        let per_step = 10;
        loop {
            if self.status != Status::Running {
                break;
            }
            let mut fired = None;
            for t in &self.c.transitions {
                if self.marking.contains(t.guard) && (self.started & t.idle).is_zero() {
                    let ok = match &t.condition {
                        Some(e) => self.eval_bool(e)?,
                        None => true,
                    };
                    if ok {
                        fired = Some(t);
                        break;
                    }
                }
            }
            let Some(t) = fired else { break };
            self.h.charge(per_step)?;
            self.fire(t)?;
        }
        self.finish()
    }

    fn fire(&mut self, t: &Transition) -> Result<(), Revert> {
        self.killed = Word::ZERO;
        self.marking &= !t.consume;
        self.started |= t.start;
        let newly = t.arm & !self.armed;
        self.armed |= t.arm;
        for i in newly.bits().collect::<Vec<_>>() {
            let b = self.c.external(i as u32).ok_or_else(|| Revert::new("unbound boundary event"))?;
            self.start_external(b)?;
        }
        let early = matches!(t.action, Action::Throw { .. } | Action::Message { .. });
        if early {
            self.marking |= t.produce;
        }
        match &t.action {
            Action::None => {}
            Action::Script(stmts) => self.run_stmts(stmts, &VarEnv::new())?,
            Action::Start(list) => {
                for i in list {
                    let b = self.c.external(*i).ok_or_else(|| Revert::new("unbound external element"))?;
                    self.start_external(b)?;
                }
            }
            Action::Instantiate(r) => self.instantiate(*r)?,
            Action::EndScope(s) => self.end_scope(*s)?,
            Action::Terminate(s) => self.terminate_scope(*s)?,
            Action::Throw { kind, code, catchers, end_scope } => {
                match catchers.first() {
                    Some(c) => self.apply_catch(c)?,
                    None => self.uncaught(*kind, *code)?,
                }
                if let Some(s) = end_scope {
                    if self.status == Status::Running {
                        self.end_scope(*s)?;
                    }
                }
            }
            Action::Message { end_scope } => {
                self.h.emit("MessageThrown", vec![Value::uint(t.node as u64)])?;
                if let Some(s) = end_scope {
                    self.end_scope(*s)?;
                }
            }
            Action::Revert(msg) => return revert(msg.clone()),
        }
        if !early {
            self.marking |= t.produce;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), Revert> {
        self.commit()?;
        if self.status == Status::Running && self.marking.is_zero() && self.started.is_zero() {
            if !self.armed.is_zero() {
                self.armed = Word::ZERO;
                self.commit()?;
            }
            self.set_status(Status::Done)?;
            let parent = load_addr(self.h, "parent")?;
            if parent.is_zero() {
                self.h.emit("ProcessCompleted", vec![Value::Address(self.h.this())])?;
            } else {
                self.h.call(parent, "handleEvent", &[Value::uint(EventKind::Default as u64), Value::Bytes32(Bytes32::ZERO)])?;
            }
        }
        Ok(())
    }

    fn start_external(&mut self, b: &ExternalBinding) -> Result<(), Revert> {
        let key = match b.resource {
            Resource::Direct => return Ok(()),
            Resource::Worklist => "worklist",
            Resource::Service => "service",
        };
        let target = load_addr(self.h, key)?;
        let args = self.export_values(&b.exports)?;
        self.call_out(target, &b.start_function(), &args)?;
        Ok(())
    }

    fn end_scope(&mut self, s: u32) -> Result<(), Revert> {
        if s == 0 {
            return Ok(());
        }
        let info = self.c.scope_info(s).ok_or_else(|| Revert(format!("unknown scope {s}")))?;
        if self.killed.intersects(info.killed_by) {
            return Ok(());
        }
        let alive = self.marking.intersects(info.region.edges) || self.started.intersects(info.region.nodes);
        if alive {
            return Ok(());
        }
        if info.event_subprocess {
            return self.end_scope(info.parent);
        }
        self.marking |= info.produce;
        self.armed &= !info.disarm;
        Ok(())
    }

    fn terminate_scope(&mut self, s: u32) -> Result<(), Revert> {
        if s != 0 {
            let info = self.c.scope_info(s).ok_or_else(|| Revert(format!("unknown scope {s}")))?.clone();
            self.kill(s)?;
            self.marking |= info.produce;
            self.armed &= !info.disarm;
            return Ok(());
        }
        if self.c.origin == Origin::BoundaryHandler {
            // the handler's terminate ends the scope it was attached in
            self.kill(0)?;
            self.commit()?;
            self.set_status(Status::Done)?;
            let parent = load_addr(self.h, "parent")?;
            self.h.call(parent, "handleEvent", &[Value::uint(EventKind::Terminate as u64), Value::Bytes32(Bytes32::ZERO)])?;
            return Ok(());
        }
        self.kill(0)?;
        if load_addr(self.h, "parent")?.is_zero() {
            self.h.emit("ProcessTerminated", vec![Value::Address(self.h.this())])?;
        }
        Ok(())
    }

    fn uncaught(&mut self, kind: EventKind, code: Bytes32) -> Result<(), Revert> {
        let parent = load_addr(self.h, "parent")?;
        match kind {
            EventKind::Error => {
                self.kill(0)?;
                self.commit()?;
                self.set_status(Status::Done)?;
                if parent.is_zero() {
                    self.h.emit("ProcessTerminated", vec![Value::Address(self.h.this()), Value::Bytes32(code)])?;
                } else {
                    self.h.call(parent, "handleEvent", &[Value::uint(kind as u64), Value::Bytes32(code)])?;
                }
            }
            EventKind::Escalation | EventKind::Signal => {
                if !parent.is_zero() {
                    self.call_out(parent, "handleEvent", &[Value::uint(kind as u64), Value::Bytes32(code)])?;
                } else if kind == EventKind::Signal {
                    self.broadcast(code)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn apply_catch(&mut self, c: &Catcher) -> Result<(), Revert> {
        match &c.effect {
            CatchEffect::Interrupt { kill, produce } => {
                self.kill(*kill)?;
                self.marking |= *produce;
            }
            CatchEffect::Spawn { reusable } => self.spawn(*reusable)?,
            CatchEffect::Move { consume, produce } => {
                self.marking &= !*consume;
                self.marking |= *produce;
            }
        }
        Ok(())
    }

    fn broadcast(&mut self, code: Bytes32) -> Result<(), Revert> {
        for c in &self.c.signal_catchers {
            if !c.matches(EventKind::Signal, code) {
                continue;
            }
            let active = c.active.is_none_or(|r| self.marking.intersects(r.edges) || self.started.intersects(r.nodes));
            if active {
                self.killed = Word::ZERO;
                self.apply_catch(c)?;
            }
        }
        for child in self.started_children(None)? {
            self.call_out(child, "broadcastSignal", &[Value::Bytes32(code)])?;
        }
        Ok(())
    }

    fn kill(&mut self, k: u32) -> Result<(), Revert> {
        let e = self.c.kill_entry(k).ok_or_else(|| Revert(format!("no kill entry {k}")))?.clone();
        self.marking &= !e.region.edges;
        self.started &= !e.region.nodes;
        self.armed &= !e.armed;
        self.killed |= Word::bit(k as usize);
        for r in e.reusable {
            self.terminate_children(r)?;
        }
        Ok(())
    }

    // children

    fn slots(&mut self) -> Result<u64, Revert> {
        Ok(self.h.sload("sub.len")?.to_u64().unwrap_or(0))
    }

    fn started_children(&mut self, only: Option<u32>) -> Result<Vec<Address>, Revert> {
        let n = self.slots()?;
        let mut out = Vec::new();
        for i in 0..n {
            let owner = self.h.sload(&format!("sub.owner.{i}"))?.to_u64().unwrap_or(0) as u32;
            if owner == 0 || only.is_some_and(|o| o != owner) {
                continue;
            }
            if self.h.sload(&format!("substarted.{owner}"))?.test_bit(i as usize) {
                let a = load_addr(self.h, &format!("sub.{i}"))?;
                if !a.is_zero() {
                    out.push(a);
                }
            }
        }
        Ok(out)
    }

    fn reserved_slot(&mut self, r: u32) -> Result<Option<u64>, Revert> {
        let n = self.slots()?;
        for i in 0..n {
            let owner = self.h.sload(&format!("sub.owner.{i}"))?.to_u64().unwrap_or(0) as u32;
            if owner == r && load_addr(self.h, &format!("sub.{i}"))?.is_zero() {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    fn terminate_children(&mut self, r: u32) -> Result<(), Revert> {
        let n = self.slots()?;
        for i in 0..n {
            let owner = self.h.sload(&format!("sub.owner.{i}"))?.to_u64().unwrap_or(0) as u32;
            if owner != r {
                continue;
            }
            let a = load_addr(self.h, &format!("sub.{i}"))?;
            if a.is_zero() {
                // reserved for a sequential instance that will never run
                self.h.sstore(&format!("sub.owner.{i}"), Word::ZERO)?;
                continue;
            }
            let group = self.h.sload(&format!("substarted.{r}"))?;
            if group.test_bit(i as usize) {
                self.h.sstore(&format!("substarted.{r}"), group & !Word::bit(i as usize))?;
                self.call_out(a, "terminate", &[])?;
            }
        }
        Ok(())
    }

    fn child_args(&mut self, b: &ReusableBinding) -> Result<Vec<Value>, Revert> {
        if b.pass_vars {
            self.all_vars()
        } else {
            Ok(Vec::new())
        }
    }

    fn new_child(&mut self, r: u32) -> Result<Address, Revert> {
        let registry = load_addr(self.h, "registry")?;
        let this = self.h.this();
        let out = self.call_out(registry, "newInstanceFor", &[Value::uint(r as u64), Value::Address(this)])?;
        out.first().and_then(Value::as_address).ok_or_else(|| Revert::new("MissingRegistryLink"))
    }

    fn bind_slot(&mut self, r: u32, slot: u64, child: Address) -> Result<(), Revert> {
        store_addr(self.h, &format!("sub.{slot}"), child)?;
        self.h.sstore(&format!("sub.owner.{slot}"), Word::from_u64(r as u64))?;
        self.h.sstore(&format!("child.{child}"), Word::from_u64(slot + 1))?;
        let g = self.h.sload(&format!("substarted.{r}"))?;
        self.h.sstore(&format!("substarted.{r}"), g | Word::bit(slot as usize))?;
        self.call_out(child, "setInstanceIndex", &[Value::uint(slot)])?;
        Ok(())
    }

    fn create_into(&mut self, b: &ReusableBinding, slot: u64) -> Result<(), Revert> {
        let child = self.new_child(b.index)?;
        self.bind_slot(b.index, slot, child)?;
        let args = self.child_args(b)?;
        self.call_out(child, "startExecution", &args)?;
        Ok(())
    }

    fn spawn(&mut self, r: u32) -> Result<(), Revert> {
        self.started |= Word::bit(r as usize);
        self.instantiate(r)
    }

    fn instantiate(&mut self, r: u32) -> Result<(), Revert> {
        let b = self.c.reusable(r).ok_or_else(|| Revert(format!("MissingRegistryLink: element {r}")))?;
        let n = match (&b.multi, &b.cardinality) {
            (MiKind::Single, _) | (_, None) => 1,
            (_, Some(e)) => self.eval_uint(e)?,
        };
        if n == 0 {
            return revert(format!("ZeroCardinality: {}", b.id));
        }
        let len = self.slots()?;
        if len + n > MAX_SLOTS {
            return revert("TooManyInstances");
        }
        self.h.sstore("sub.len", Word::from_u64(len + n))?;
        if b.multi == MiKind::Sequential {
            for i in len..len + n {
                self.h.sstore(&format!("sub.owner.{i}"), Word::from_u64(r as u64))?;
            }
            return self.create_into(b, len);
        }
        // create every instance before starting any, so an instance that
        // finishes at once never sees an empty group
        let mut created = Vec::new();
        for i in len..len + n {
            let child = self.new_child(r)?;
            self.bind_slot(r, i, child)?;
            created.push(child);
        }
        let args = self.child_args(b)?;
        for child in created {
            self.call_out(child, "startExecution", &args)?;
        }
        Ok(())
    }
}

