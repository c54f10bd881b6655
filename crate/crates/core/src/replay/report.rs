//! Per-mode gas averages and the overhead of full mode over each baseline.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::compiler::CompilationMode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModeCost {
    pub mode: CompilationMode,
    /// Traces counted with multiplicity.
    pub traces: usize,
    /// Averages weighted by multiplicity, rounded to the nearest unit.
    pub instantiation: u64,
    pub execution: u64,
}

fn weighted_avg(total: u128, n: u128) -> u64 {
    if n == 0 {
        return 0;
    }
    ((total * 2 + n) / (2 * n)) as u64
}

impl ModeCost {
    /// From (instantiation gas, execution gas, multiplicity) per distinct trace.
    pub fn weighted(mode: CompilationMode, rows: &[(u64, u64, usize)]) -> Self {
        let n: u128 = rows.iter().map(|r| r.2 as u128).sum();
        let inst: u128 = rows.iter().map(|r| r.0 as u128 * r.2 as u128).sum();
        let exec: u128 = rows.iter().map(|r| r.1 as u128 * r.2 as u128).sum();
        ModeCost { mode, traces: n as usize, instantiation: weighted_avg(inst, n), execution: weighted_avg(exec, n) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostReport {
    pub process: String,
    pub tested_traces: usize,
    pub modes: Vec<ModeCost>,
}

/// `full / x` to two decimals; `None` when `x` is zero.
pub fn overhead(full: u64, x: u64) -> Option<f64> {
    (x != 0).then(|| (full as f64 / x as f64 * 100.0).round() / 100.0)
}

fn thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn title(m: CompilationMode) -> &'static str {
    match m {
        CompilationMode::Basic => "Basic",
        CompilationMode::Default => "Default",
        CompilationMode::Optimized => "Optimized",
        CompilationMode::Full => "Full",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportRow {
    pub process: String,
    pub tested_traces: usize,
    pub mode: CompilationMode,
    pub instantiation: u64,
    pub execution: u64,
    /// Full over this mode; absent for full mode itself.
    pub overhead_instantiation: Option<f64>,
    pub overhead_execution: Option<f64>,
}

impl CostReport {
    pub fn mode(&self, m: CompilationMode) -> Option<&ModeCost> {
        self.modes.iter().find(|c| c.mode == m)
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let full = self.mode(CompilationMode::Full);
        self.modes
            .iter()
            .map(|c| {
                let (oi, oe) = match full {
                    Some(f) if c.mode != CompilationMode::Full => {
                        (overhead(f.instantiation, c.instantiation), overhead(f.execution, c.execution))
                    }
                    _ => (None, None),
                };
                ReportRow {
                    process: self.process.clone(),
                    tested_traces: self.tested_traces,
                    mode: c.mode,
                    instantiation: c.instantiation,
                    execution: c.execution,
                    overhead_instantiation: oi,
                    overhead_execution: oe,
                }
            })
            .collect()
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.rows().iter().map(|r| serde_json::to_string(r).expect("row serializes") + "\n").collect()
    }

    pub fn to_table(&self) -> String {
        table(std::slice::from_ref(self))
    }
}

/// Text table over several processes, one line per mode.
pub fn table(reports: &[CostReport]) -> String {
    let mut out = String::new();
    let head = ["Process", "Tested traces", "Version", "Instant.", "Exec.", "Overhead instant.", "Overhead exec."];
    let mut lines: Vec<[String; 7]> = vec![head.map(String::from)];
    for r in reports {
        for row in r.rows() {
            let f = |o: Option<f64>| o.map_or("--".to_string(), |v| format!("{v:.2}"));
            lines.push([
                row.process.clone(),
                row.tested_traces.to_string(),
                title(row.mode).to_string(),
                thousands(row.instantiation),
                thousands(row.execution),
                f(row.overhead_instantiation),
                f(row.overhead_execution),
            ]);
        }
    }
    let widths: Vec<usize> = (0..7).map(|i| lines.iter().map(|l| l[i].len()).max().unwrap_or(0)).collect();
    for l in &lines {
        let cells: Vec<String> = (0..7)
            .map(|i| if i < 3 { format!("{:<w$}", l[i], w = widths[i]) } else { format!("{:>w$}", l[i], w = widths[i]) })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
