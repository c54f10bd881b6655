//! JSON export/import of the whole ledger state, for golden tests and replay checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountSnapshot {
    pub code: String,
    pub storage: Storage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReceiptSummary {
    pub status: TxStatus,
    pub gas_used: u64,
    pub block: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract_address: Option<Address>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub output: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub block: u64,
    pub schedule: GasSchedule,
    pub accounts: BTreeMap<Address, AccountSnapshot>,
    /// Code hash to hex-encoded image.
    pub codes: BTreeMap<String, String>,
    pub nonces: BTreeMap<Address, u64>,
    pub logs: Vec<LogEntry>,
    pub transactions: Vec<Transaction>,
    pub receipts: Vec<ReceiptSummary>,
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LedgerError> {
        serde_json::from_str(s).map_err(|e| LedgerError::BadSnapshot(e.to_string()))
    }

    pub fn total_gas(&self) -> u64 {
        self.receipts.iter().map(|r| r.gas_used).sum()
    }
}

impl<V: Vm> Ledger<V> {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            block: self.state.block,
            schedule: self.schedule,
            accounts: self
                .state
                .accounts
                .iter()
                .map(|(a, acc)| (*a, AccountSnapshot { code: acc.code.clone(), storage: acc.storage.clone() }))
                .collect(),
            codes: self.state.codes.iter().map(|(h, c)| (h.clone(), hex::encode(c))).collect(),
            nonces: self.state.nonces.clone(),
            logs: self.state.logs.clone(),
            transactions: self.history.iter().map(|(t, _)| t.clone()).collect(),
            receipts: self
                .history
                .iter()
                .map(|(_, r)| ReceiptSummary {
                    status: r.status.clone(),
                    gas_used: r.gas_used,
                    block: r.block,
                    contract_address: r.contract_address,
                    output: r.output.clone(),
                })
                .collect(),
        }
    }

    pub fn from_snapshot(vm: V, snap: &Snapshot) -> Result<Self, LedgerError> {
        snap.schedule.validate().map_err(LedgerError::BadSnapshot)?;
        if snap.transactions.len() != snap.receipts.len() {
            return Err(LedgerError::BadSnapshot("transaction and receipt counts differ".into()));
        }
        let mut codes = BTreeMap::new();
        for (h, c) in &snap.codes {
            let bytes = hex::decode(c).map_err(|e| LedgerError::BadSnapshot(e.to_string()))?;
            if &code_hash(&bytes) != h {
                return Err(LedgerError::BadSnapshot(format!("code {h} does not match its hash")));
            }
            codes.insert(h.clone(), bytes);
        }
        for (a, acc) in &snap.accounts {
            if !codes.contains_key(&acc.code) {
                return Err(LedgerError::BadSnapshot(format!("account {a} refers to missing code")));
            }
        }
        let mut l = Ledger::with_schedule(vm, snap.schedule);
        l.state = State {
            accounts: snap
                .accounts
                .iter()
                .map(|(a, acc)| (*a, Account { code: acc.code.clone(), storage: acc.storage.clone() }))
                .collect(),
            codes,
            nonces: snap.nonces.clone(),
            logs: snap.logs.clone(),
            block: snap.block,
        };
        l.history = snap
            .transactions
            .iter()
            .zip(&snap.receipts)
            .map(|(t, r)| {
                let logs = if r.status == TxStatus::Accepted {
                    snap.logs.iter().filter(|log| log.block == r.block).cloned().collect()
                } else {
                    Vec::new()
                };
                let receipt = Receipt {
                    status: r.status.clone(),
                    gas_used: r.gas_used,
                    logs,
                    block: r.block,
                    contract_address: r.contract_address,
                    output: r.output.clone(),
                };
                (t.clone(), receipt)
            })
            .collect();
        Ok(l)
    }
}
