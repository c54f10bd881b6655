//! Deterministic single-chain ledger: one transaction per block, atomic
//! accept/reject, gas metering and an append-only log. Contract code is
//! interpreted by a pluggable [`Vm`].

mod gas;
mod shared;
mod snapshot;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::value::Value;
use crate::word::{Address, Word};

pub use gas::GasSchedule;
pub use shared::SharedLedger;
pub use snapshot::{AccountSnapshot, Snapshot};

pub type Storage = BTreeMap<String, Word>;

/// Reason an operation aborted; the whole transaction is rolled back.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct Revert(pub String);

impl Revert {
    pub fn new(msg: impl Into<String>) -> Self {
        Revert(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("no contract at {0}")]
    UnknownTarget(Address),
    #[error("nonce gap for {sender}: expected {expected}, got {got}")]
    NonceGap { sender: Address, expected: u64, got: u64 },
    #[error("operation `{0}` changes state; submit a transaction instead")]
    NotReadOnly(String),
    #[error("call reverted: {0}")]
    Reverted(String),
    #[error("invalid contract image: {0}")]
    BadImage(String),
    #[error("invalid snapshot: {0}")]
    BadSnapshot(String),
}

/// Services a running operation gets from the ledger.
pub trait Host {
    fn this(&self) -> Address;
    fn sender(&self) -> Address;
    /// Account that signed the transaction.
    fn origin(&self) -> Address;
    fn block(&self) -> u64;
    fn sload(&mut self, key: &str) -> Result<Word, Revert>;
    fn sstore(&mut self, key: &str, value: Word) -> Result<(), Revert>;
    fn emit(&mut self, name: &str, payload: Vec<Value>) -> Result<(), Revert>;
    /// Nested call with `sender = this`. A revert anywhere aborts the transaction.
    fn call(&mut self, target: Address, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert>;
    fn create(&mut self, image: &[u8], init: Storage) -> Result<Address, Revert>;
    fn charge(&mut self, gas: u64) -> Result<(), Revert>;
}

/// Contract interpreter.
pub trait Vm: Send + Sync {
    type Program: Send + Sync;
    fn load(&self, image: &[u8]) -> Result<Self::Program, String>;
    fn is_read_only(&self, program: &Self::Program, op: &str) -> bool;
    fn execute(
        &self,
        program: &Self::Program,
        host: &mut dyn Host,
        op: &str,
        args: &[Value],
    ) -> Result<Vec<Value>, Revert>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TxKind {
    Deploy {
        #[serde(with = "hex_bytes")]
        image: Vec<u8>,
        #[serde(default)]
        init: Storage,
    },
    Call {
        target: Address,
        op: String,
        args: Vec<Value>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    pub nonce: u64,
    pub kind: TxKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TxStatus {
    Accepted,
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    pub emitter: Address,
    pub name: String,
    pub payload: Vec<Value>,
    pub block: u64,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Receipt {
    pub status: TxStatus,
    pub gas_used: u64,
    pub logs: Vec<LogEntry>,
    pub block: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract_address: Option<Address>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub output: Vec<Value>,
}

impl Receipt {
    pub fn accepted(&self) -> bool {
        self.status == TxStatus::Accepted
    }

    pub fn reason(&self) -> Option<&str> {
        match &self.status {
            TxStatus::Rejected(r) => Some(r),
            TxStatus::Accepted => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFilter {
    #[serde(default)]
    pub emitter: Option<Address>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub from_block: u64,
}

impl LogFilter {
    pub fn matches(&self, l: &LogEntry) -> bool {
        l.block >= self.from_block
            && self.emitter.is_none_or(|e| e == l.emitter)
            && self.name.as_deref().is_none_or(|n| n == l.name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Account {
    pub code: String,
    pub storage: Storage,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct State {
    pub accounts: BTreeMap<Address, Account>,
    pub codes: BTreeMap<String, Vec<u8>>,
    pub nonces: BTreeMap<Address, u64>,
    pub logs: Vec<LogEntry>,
    pub block: u64,
}

pub fn code_hash(image: &[u8]) -> String {
    hex::encode(Sha256::digest(image))
}

/// Deterministic contract address: low 20 bytes of sha256(creator || nonce).
pub fn derive_address(creator: Address, nonce: u64) -> Address {
    let mut h = Sha256::new();
    h.update(creator.0);
    h.update(nonce.to_be_bytes());
    let d = h.finalize();
    let mut a = [0u8; 20];
    a.copy_from_slice(&d[12..]);
    Address(a)
}

pub struct Ledger<V: Vm> {
    vm: V,
    schedule: GasSchedule,
    gas_limit: u64,
    state: State,
    programs: Mutex<HashMap<String, Arc<V::Program>>>,
    history: Vec<(Transaction, Receipt)>,
}

impl<V: Vm + Clone> Clone for Ledger<V> {
    fn clone(&self) -> Self {
        let programs = self.programs.lock().expect("program cache").clone();
        Ledger {
            vm: self.vm.clone(),
            schedule: self.schedule,
            gas_limit: self.gas_limit,
            state: self.state.clone(),
            programs: Mutex::new(programs),
            history: self.history.clone(),
        }
    }
}

/// Pending writes of one transaction.
#[derive(Default)]
struct Overlay {
    storage: BTreeMap<Address, BTreeMap<String, Word>>,
    accounts: BTreeMap<Address, String>,
    codes: BTreeMap<String, Vec<u8>>,
    nonces: BTreeMap<Address, u64>,
    logs: Vec<LogEntry>,
    gas: u64,
}

struct Frame<'a, V: Vm> {
    ledger: &'a Ledger<V>,
    tx: &'a mut Overlay,
    this: Address,
    sender: Address,
    origin: Address,
    read_only: bool,
    depth: usize,
}

const MAX_DEPTH: usize = 64;
pub const DEFAULT_GAS_LIMIT: u64 = 1_000_000_000;

impl<V: Vm> Ledger<V> {
    pub fn new(vm: V) -> Self {
        Self::with_schedule(vm, GasSchedule::default())
    }

    pub fn with_schedule(vm: V, schedule: GasSchedule) -> Self {
        schedule.validate().expect("gas schedule");
        Ledger {
            vm,
            schedule,
            gas_limit: DEFAULT_GAS_LIMIT,
            state: State::default(),
            programs: Mutex::new(HashMap::new()),
            history: Vec::new(),
        }
    }

    pub fn vm(&self) -> &V {
        &self.vm
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.schedule
    }

    pub fn set_gas_limit(&mut self, limit: u64) {
        self.gas_limit = limit;
    }

    pub fn block(&self) -> u64 {
        self.state.block
    }

    pub fn next_nonce(&self, sender: Address) -> u64 {
        self.state.nonces.get(&sender).copied().unwrap_or(0)
    }

    pub fn is_contract(&self, a: Address) -> bool {
        self.state.accounts.contains_key(&a)
    }

    pub fn code_hash_of(&self, a: Address) -> Option<&str> {
        self.state.accounts.get(&a).map(|acc| acc.code.as_str())
    }

    pub fn image_of(&self, a: Address) -> Option<&[u8]> {
        let h = self.code_hash_of(a)?;
        self.state.codes.get(h).map(Vec::as_slice)
    }

    /// Committed storage of a contract; empty for unknown addresses.
    pub fn storage(&self, a: Address) -> Storage {
        self.state.accounts.get(&a).map(|acc| acc.storage.clone()).unwrap_or_default()
    }

    pub fn storage_at(&self, a: Address, key: &str) -> Word {
        self.state.accounts.get(&a).and_then(|acc| acc.storage.get(key)).copied().unwrap_or(Word::ZERO)
    }

    pub fn logs(&self) -> &[LogEntry] {
        &self.state.logs
    }

    pub fn poll_logs(&self, filter: &LogFilter) -> Vec<LogEntry> {
        self.state.logs.iter().filter(|l| filter.matches(l)).cloned().collect()
    }

    /// Every submitted transaction with its receipt, in order.
    pub fn history(&self) -> &[(Transaction, Receipt)] {
        &self.history
    }

    pub fn contracts(&self) -> impl Iterator<Item = Address> + '_ {
        self.state.accounts.keys().copied()
    }

    fn program(&self, hash: &str) -> Result<Arc<V::Program>, String> {
        if let Some(p) = self.programs.lock().expect("program cache").get(hash) {
            return Ok(p.clone());
        }
        let image = self.state.codes.get(hash).ok_or_else(|| format!("missing code {hash}"))?;
        let p = Arc::new(self.vm.load(image)?);
        self.programs.lock().expect("program cache").insert(hash.to_string(), p.clone());
        Ok(p)
    }

    fn program_for_image(&self, hash: &str, image: &[u8]) -> Result<Arc<V::Program>, String> {
        if let Some(p) = self.programs.lock().expect("program cache").get(hash) {
            return Ok(p.clone());
        }
        let p = Arc::new(self.vm.load(image)?);
        self.programs.lock().expect("program cache").insert(hash.to_string(), p.clone());
        Ok(p)
    }

    /// Read-only invocation against committed state; free of charge.
    pub fn call(&self, target: Address, op: &str, args: &[Value]) -> Result<Vec<Value>, LedgerError> {
        let acc = self.state.accounts.get(&target).ok_or(LedgerError::UnknownTarget(target))?;
        let prog = self.program(&acc.code).map_err(LedgerError::BadImage)?;
        if !self.vm.is_read_only(&prog, op) {
            return Err(LedgerError::NotReadOnly(op.to_string()));
        }
        let mut tx = Overlay::default();
        let mut f = Frame {
            ledger: self,
            tx: &mut tx,
            this: target,
            sender: Address::ZERO,
            origin: Address::ZERO,
            read_only: true,
            depth: 0,
        };
        self.vm.execute(&prog, &mut f, op, args).map_err(|r| LedgerError::Reverted(r.0))
    }

    /// Deploys with the sender's next nonce.
    pub fn deploy(&mut self, sender: Address, image: Vec<u8>, init: Storage) -> Result<(Address, Receipt), LedgerError> {
        let nonce = self.next_nonce(sender);
        let r = self.submit(Transaction { sender, nonce, kind: TxKind::Deploy { image, init } })?;
        let addr = r.contract_address.unwrap_or(Address::ZERO);
        Ok((addr, r))
    }

    /// Calls with the sender's next nonce.
    pub fn send(&mut self, sender: Address, target: Address, op: &str, args: Vec<Value>) -> Result<Receipt, LedgerError> {
        let nonce = self.next_nonce(sender);
        self.submit(Transaction { sender, nonce, kind: TxKind::Call { target, op: op.to_string(), args } })
    }

    pub fn submit(&mut self, tx: Transaction) -> Result<Receipt, LedgerError> {
        let expected = self.next_nonce(tx.sender);
        if tx.nonce != expected {
            return Err(LedgerError::NonceGap { sender: tx.sender, expected, got: tx.nonce });
        }
        if let TxKind::Call { target, .. } = &tx.kind {
            if !self.is_contract(*target) {
                return Err(LedgerError::UnknownTarget(*target));
            }
        }
        let block = self.state.block + 1;
        let mut ov = Overlay::default();
        let (result, contract_address) = match &tx.kind {
            TxKind::Deploy { image, init } => {
                let addr = derive_address(tx.sender, tx.nonce);
                let r = deploy_into(self, &mut ov, image, init.clone(), addr);
                (r.map(|_| Vec::new()), Some(addr))
            }
            TxKind::Call { target, op, args } => {
                let r = charge(&mut ov, self.schedule.tx_base, self.gas_limit).and_then(|_| {
                    let code = self.state.accounts[target].code.clone();
                    let prog = self.program(&code).map_err(Revert)?;
                    let mut f = Frame {
                        ledger: &*self,
                        tx: &mut ov,
                        this: *target,
                        sender: tx.sender,
                        origin: tx.sender,
                        read_only: false,
                        depth: 0,
                    };
                    f.ledger.vm.execute(&prog, &mut f, op, args)
                });
                (r, None)
            }
        };
        self.state.block = block;
        self.state.nonces.insert(tx.sender, expected + 1);
        let receipt = match result {
            Ok(output) => {
                let Overlay { storage, accounts, codes, nonces, mut logs, gas } = ov;
                for (i, l) in logs.iter_mut().enumerate() {
                    l.block = block;
                    l.index = i as u64;
                }
                self.state.codes.extend(codes);
                for (a, code) in accounts {
                    self.state.accounts.insert(a, Account { code, storage: Storage::new() });
                }
                for (a, writes) in storage {
                    let acc = self.state.accounts.entry(a).or_default();
                    for (k, v) in writes {
                        if v.is_zero() {
                            acc.storage.remove(&k);
                        } else {
                            acc.storage.insert(k, v);
                        }
                    }
                }
                self.state.nonces.extend(nonces);
                self.state.logs.extend(logs.iter().cloned());
                Receipt { status: TxStatus::Accepted, gas_used: gas, logs, block, contract_address, output }
            }
            Err(Revert(reason)) => Receipt {
                status: TxStatus::Rejected(reason),
                gas_used: ov.gas,
                logs: Vec::new(),
                block,
                contract_address: None,
                output: Vec::new(),
            },
        };
        self.history.push((tx, receipt.clone()));
        Ok(receipt)
    }

    /// Re-executes recorded transactions on a fresh ledger.
    pub fn replay(vm: V, schedule: GasSchedule, txs: impl IntoIterator<Item = Transaction>) -> Result<Self, LedgerError> {
        let mut l = Ledger::with_schedule(vm, schedule);
        for tx in txs {
            l.submit(tx)?;
        }
        Ok(l)
    }
}

fn charge(ov: &mut Overlay, gas: u64, limit: u64) -> Result<(), Revert> {
    ov.gas = ov.gas.saturating_add(gas);
    if ov.gas > limit {
        Err(Revert::new("OutOfGas"))
    } else {
        Ok(())
    }
}

fn deploy_into<V: Vm>(
    ledger: &Ledger<V>,
    ov: &mut Overlay,
    image: &[u8],
    init: Storage,
    addr: Address,
) -> Result<(), Revert> {
    charge(ov, ledger.schedule.deploy(image.len()), ledger.gas_limit)?;
    let hash = code_hash(image);
    ledger.program_for_image(&hash, image).map_err(|e| Revert(format!("BadImage: {e}")))?;
    if ledger.state.accounts.contains_key(&addr) || ov.accounts.contains_key(&addr) {
        return Err(Revert::new("AddressCollision"));
    }
    if !ledger.state.codes.contains_key(&hash) {
        ov.codes.entry(hash.clone()).or_insert_with(|| image.to_vec());
    }
    ov.accounts.insert(addr, hash);
    // constructor initialisation is part of the deploy charge
    let slot = ov.storage.entry(addr).or_default();
    for (k, v) in init {
        slot.insert(k, v);
    }
    Ok(())
}

impl<V: Vm> Frame<'_, V> {
    fn current(&self, key: &str) -> Word {
        if let Some(v) = self.tx.storage.get(&self.this).and_then(|s| s.get(key)) {
            return *v;
        }
        self.ledger.storage_at(self.this, key)
    }

    fn code_of(&self, a: Address) -> Option<String> {
        self.tx.accounts.get(&a).cloned().or_else(|| self.ledger.state.accounts.get(&a).map(|acc| acc.code.clone()))
    }

    fn load(&self, hash: &str) -> Result<Arc<V::Program>, Revert> {
        if let Some(image) = self.tx.codes.get(hash) {
            return self.ledger.program_for_image(hash, image).map_err(Revert);
        }
        self.ledger.program(hash).map_err(Revert)
    }
}

impl<V: Vm> Host for Frame<'_, V> {
    fn this(&self) -> Address {
        self.this
    }

    fn sender(&self) -> Address {
        self.sender
    }

    fn origin(&self) -> Address {
        self.origin
    }

    fn block(&self) -> u64 {
        self.ledger.state.block + if self.read_only { 0 } else { 1 }
    }

    fn sload(&mut self, key: &str) -> Result<Word, Revert> {
        if !self.read_only {
            self.charge(self.ledger.schedule.storage_read)?;
        }
        Ok(self.current(key))
    }

    fn sstore(&mut self, key: &str, value: Word) -> Result<(), Revert> {
        if self.read_only {
            return Err(Revert::new("WriteInReadOnlyCall"));
        }
        let old = self.current(key);
        let s = &self.ledger.schedule;
        let cost = if old == value {
            // nothing to write; the comparison costs a read
            s.storage_read
        } else if old.is_zero() {
            s.storage_set
        } else {
            s.storage_update
        };
        self.charge(cost)?;
        if old != value {
            self.tx.storage.entry(self.this).or_default().insert(key.to_string(), value);
        }
        Ok(())
    }

    fn emit(&mut self, name: &str, payload: Vec<Value>) -> Result<(), Revert> {
        if self.read_only {
            return Err(Revert::new("LogInReadOnlyCall"));
        }
        self.charge(self.ledger.schedule.log(payload.len()))?;
        self.tx.logs.push(LogEntry { emitter: self.this, name: name.to_string(), payload, block: 0, index: 0 });
        Ok(())
    }

    fn call(&mut self, target: Address, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
        if self.depth + 1 > MAX_DEPTH {
            return Err(Revert::new("CallDepthExceeded"));
        }
        let code = self.code_of(target).ok_or_else(|| Revert(format!("UnknownTarget {target}")))?;
        let prog = self.load(&code)?;
        if self.read_only && !self.ledger.vm.is_read_only(&prog, op) {
            return Err(Revert(format!("NotReadOnly {op}")));
        }
        let mut f = Frame {
            ledger: self.ledger,
            tx: &mut *self.tx,
            this: target,
            sender: self.this,
            origin: self.origin,
            read_only: self.read_only,
            depth: self.depth + 1,
        };
        self.ledger.vm.execute(&prog, &mut f, op, args)
    }

    fn create(&mut self, image: &[u8], init: Storage) -> Result<Address, Revert> {
        if self.read_only {
            return Err(Revert::new("CreateInReadOnlyCall"));
        }
        let nonce = self.tx.nonces.get(&self.this).copied().unwrap_or_else(|| self.ledger.next_nonce(self.this));
        self.tx.nonces.insert(self.this, nonce + 1);
        let addr = derive_address(self.this, nonce);
        deploy_into(self.ledger, self.tx, image, init, addr)?;
        Ok(addr)
    }

    fn charge(&mut self, gas: u64) -> Result<(), Revert> {
        if self.read_only {
            return Ok(());
        }
        charge(self.tx, gas, self.ledger.gas_limit)
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}


#[cfg(test)]
mod tests;
