use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard};

use super::*;

/// Thread-safe handle. Submissions are serialized on one queue lock and
/// applied in the order they acquire it; reads see the last committed state.
pub struct SharedLedger<V: Vm> {
    inner: Arc<RwLock<Ledger<V>>>,
    queue: Arc<Mutex<()>>,
}

impl<V: Vm> Clone for SharedLedger<V> {
    fn clone(&self) -> Self {
        SharedLedger { inner: self.inner.clone(), queue: self.queue.clone() }
    }
}

impl<V: Vm> SharedLedger<V> {
    pub fn new(ledger: Ledger<V>) -> Self {
        SharedLedger { inner: Arc::new(RwLock::new(ledger)), queue: Arc::new(Mutex::new(())) }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Ledger<V>> {
        self.inner.read().expect("ledger lock")
    }

    /// Runs `f` with exclusive access; `f` may submit several transactions.
    pub fn write<T>(&self, f: impl FnOnce(&mut Ledger<V>) -> T) -> T {
        let _turn = self.queue.lock().expect("ledger queue");
        let mut l = self.inner.write().expect("ledger lock");
        f(&mut l)
    }

    pub fn submit(&self, tx: Transaction) -> Result<Receipt, LedgerError> {
        self.write(|l| l.submit(tx))
    }

    pub fn call(&self, target: Address, op: &str, args: &[Value]) -> Result<Vec<Value>, LedgerError> {
        self.read().call(target, op, args)
    }

    pub fn poll_logs(&self, filter: &LogFilter) -> Vec<LogEntry> {
        self.read().poll_logs(filter)
    }
}
