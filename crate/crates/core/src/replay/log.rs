//! Event log text format.
//!
//! One trace per line, events separated by commas. An event is the task
//! name followed by optional `name=value` inputs, separated by spaces:
//!
//! ```text
//! # supply chain, two traces
//! Create order, Approve order decision=1, Ship goods
//! Create order, Approve order decision=0
//! ```
//!
//! Blank lines and lines starting with `#` are skipped, so a trace has at
//! least one event. Task names may not contain `,` or `=`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    /// Input values as written, in order.
    pub inputs: Vec<(String, String)>,
}

impl Event {
    pub fn new(name: &str) -> Self {
        Event { name: name.to_string(), inputs: Vec::new() }
    }

    pub fn input(&self, name: &str) -> Option<&str> {
        self.inputs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for (k, v) in &self.inputs {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<Event>,
}

impl Trace {
    pub fn names(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.name.as_str()).collect()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub traces: Vec<Trace>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct LogError {
    pub line: usize,
    pub message: String,
}

fn parse_event(text: &str, line: usize) -> Result<Event, LogError> {
    let mut name = Vec::new();
    let mut inputs = Vec::new();
    for tok in text.split_whitespace() {
        match tok.split_once('=') {
            Some((k, v)) => {
                if k.is_empty() || v.is_empty() {
                    return Err(LogError { line, message: format!("bad input `{tok}`") });
                }
                inputs.push((k.to_string(), v.to_string()));
            }
            None if inputs.is_empty() => name.push(tok),
            None => return Err(LogError { line, message: format!("`{tok}` after the inputs of `{}`", name.join(" ")) }),
        }
    }
    if name.is_empty() {
        return Err(LogError { line, message: "event without a task name".into() });
    }
    Ok(Event { name: name.join(" "), inputs })
}

impl EventLog {
    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut traces = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let events = l.split(',').map(|e| parse_event(e, i + 1)).collect::<Result<Vec<_>, _>>()?;
            traces.push(Trace { events });
        }
        Ok(EventLog { traces })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.traces {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

/// Distinct traces with their multiplicities, in order of first appearance.
pub fn dedupe(log: &EventLog) -> Vec<(Trace, usize)> {
    let mut pos: HashMap<&Trace, usize> = HashMap::new();
    let mut out: Vec<(Trace, usize)> = Vec::new();
    for t in &log.traces {
        match pos.get(t) {
            Some(&i) => out[i].1 += 1,
            None => {
                pos.insert(t, out.len());
                out.push((t.clone(), 1));
            }
        }
    }
    out
}
