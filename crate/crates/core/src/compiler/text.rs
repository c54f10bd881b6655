//! Human-readable rendering of a compiled contract.

use std::fmt::Write;

use crate::guard::{print_block, print_decls, print_expr, print_params};
use crate::word::Word;

use super::ir::*;
use super::CompilationMode;

fn mask(w: Word) -> String {
    format!("{} (0b{})", w, w.to_binary())
}

fn node_label(c: &CompiledContract, index: u32) -> String {
    match c.node_info(index) {
        Some(n) if !n.name.is_empty() => format!("{} `{}`", n.kind, n.name),
        Some(n) => format!("{} {}", n.kind, n.id),
        None => format!("#{index}"),
    }
}

fn catcher(c: &CompiledContract, k: &Catcher) -> String {
    let code = k.code.map_or("*".to_string(), |b| b.to_string());
    let effect = match &k.effect {
        CatchEffect::Interrupt { kill, produce } => format!("killProcess({kill}); marking |= {}", mask(*produce)),
        CatchEffect::Spawn { reusable } => format!("new handler instance for {reusable}"),
        CatchEffect::Move { consume, produce } => {
            format!("marking &= ~{}; marking |= {}", mask(*consume), mask(*produce))
        }
    };
    let active = k.active.map_or(String::new(), |r| format!(" while active({}, {})", mask(r.edges), mask(r.nodes)));
    format!("{:?} {code} at {}{active}: {effect}", k.kind, node_label(c, k.node))
}

/// Deterministic listing: header, bindings, then one block per transition.
pub fn emit_contract_text(c: &CompiledContract) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "contract {} // {} mode, origin {:?}", c.name, c.mode.as_str(), c.origin);
    let _ = writeln!(s, "  initial marking = {}", mask(c.initial_marking));
    if c.mode == CompilationMode::Basic {
        let _ = writeln!(s, "  operation record(bytes32 eventRef): appends eventRef to records");
        return s;
    }
    let decls = print_decls(&c.decls);
    if !decls.trim().is_empty() {
        let _ = writeln!(s, "  variables:");
        for line in decls.lines() {
            let _ = writeln!(s, "    {line}");
        }
    }
    for b in &c.externals {
        let _ = writeln!(
            s,
            "  function {}{} via {:?}: requires started & {}; {}; started &= ~{}; marking |= {}",
            b.complete_function(),
            print_params(&b.imports),
            b.resource,
            mask(Word::bit(b.index as usize)),
            print_block(&b.ops),
            mask(b.clear),
            mask(b.produce)
        );
    }
    for r in &c.reusables {
        let card = r.cardinality.as_ref().map_or(String::new(), |e| format!(" x {}", print_expr(e)));
        let _ = writeln!(s, "  reusable {} {:?}{card} -> child {}", node_label(c, r.index), r.multi, r.child);
        for k in &r.catchers {
            let _ = writeln!(s, "    on child event {}", catcher(c, k));
        }
    }
    for k in &c.kills {
        let _ = writeln!(
            s,
            "  killProcess({}): marking &= ~{}; started &= ~{}; terminate children of {:?}",
            k.index,
            mask(k.region.edges),
            mask(k.region.nodes),
            k.reusable
        );
    }
    for k in &c.signal_catchers {
        let _ = writeln!(s, "  on broadcast {}", catcher(c, k));
    }
    let _ = writeln!(s, "  step:");
    for (i, t) in c.transitions.iter().enumerate() {
        let _ = writeln!(s, "    [{i}] {}", node_label(c, t.node));
        let mut cond = format!("marking & {} == {}", mask(t.guard), t.guard);
        if !t.idle.is_zero() {
            let _ = write!(cond, " && started & {} == 0", mask(t.idle));
        }
        if let Some(e) = &t.condition {
            let _ = write!(cond, " && {}", print_expr(e));
        }
        let _ = writeln!(s, "      if {cond}:");
        let _ = writeln!(s, "        marking &= ~{}", mask(t.consume));
        if !t.start.is_zero() {
            let _ = writeln!(s, "        started |= {}", mask(t.start));
        }
        if !t.arm.is_zero() {
            let _ = writeln!(s, "        armed |= {}", mask(t.arm));
        }
        let action = match &t.action {
            Action::None => None,
            Action::Script(ops) => Some(format!("run {}", print_block(ops))),
            Action::Start(list) => Some(
                list.iter()
                    .map(|i| match c.external(*i) {
                        Some(b) if b.resource == Resource::Direct => format!("enable {}", b.function),
                        Some(b) => format!("{:?}.{}{}", b.resource, b.start_function(), print_params(&b.exports)),
                        None => format!("start {i}"),
                    })
                    .collect::<Vec<_>>()
                    .join("; "),
            ),
            Action::Instantiate(i) => Some(format!("registry.newInstanceFor({i}, this)")),
            Action::EndScope(0) => None,
            Action::EndScope(sc) => Some(format!("close scope {sc} when empty")),
            Action::Terminate(sc) => Some(format!("killProcess({sc})")),
            Action::Throw { kind, code, catchers, .. } => Some(match catchers.first() {
                Some(k) => format!("throw {kind:?} {code}: {}", catcher(c, k)),
                None => format!("propagateEvent({kind:?}, {code})"),
            }),
            Action::Message { .. } => Some("emit message".into()),
            Action::Revert(r) => Some(format!("revert {r}")),
        };
        if let Some(a) = action {
            let _ = writeln!(s, "        {a}");
        }
        if !t.produce.is_zero() {
            let _ = writeln!(s, "        marking |= {}", mask(t.produce));
        }
    }
    s
}
