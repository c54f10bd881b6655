use proptest::prelude::*;

use super::*;

/// Tiny key-value contract used to exercise the ledger on its own.
struct KvVm;

fn key(args: &[Value], i: usize) -> String {
    format!("k{}", args[i].as_uint().unwrap())
}

impl Vm for KvVm {
    type Program = String;

    fn load(&self, image: &[u8]) -> Result<String, String> {
        let s = std::str::from_utf8(image).map_err(|e| e.to_string())?;
        if s.starts_with("kv") {
            Ok(s.to_string())
        } else {
            Err("not a kv image".into())
        }
    }

    fn is_read_only(&self, _: &String, op: &str) -> bool {
        op == "get"
    }

    fn execute(&self, _: &String, h: &mut dyn Host, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
        match op {
            "get" => Ok(vec![Value::Uint(h.sload(&key(args, 0))?)]),
            "set" => {
                h.sstore(&key(args, 0), args[1].as_uint().unwrap())?;
                Ok(vec![])
            }
            "setThenFail" => {
                h.sstore(&key(args, 0), args[1].as_uint().unwrap())?;
                h.emit("Set", vec![args[1].clone()])?;
                Err(Revert::new("require(false)"))
            }
            "emit" => {
                h.emit("Ping", args.to_vec())?;
                Ok(vec![])
            }
            "forward" => {
                let target = args[0].as_address().unwrap();
                h.call(target, "set", &args[1..])?;
                Ok(vec![])
            }
            "forwardFail" => {
                let target = args[0].as_address().unwrap();
                h.sstore("k0", Word::from_u64(9))?;
                h.call(target, "setThenFail", &args[1..])?;
                Ok(vec![])
            }
            "spawn" => {
                let a = h.create(b"kv-child", Storage::from([("k1".to_string(), Word::from_u64(5))]))?;
                Ok(vec![Value::Address(a)])
            }
            "whoami" => {
                h.sstore("k0", h.sender().to_word())?;
                Ok(vec![])
            }
            _ => Err(Revert(format!("unknown op {op}"))),
        }
    }
}

fn alice() -> Address {
    Address::from_label("alice")
}

fn fresh() -> (Ledger<KvVm>, Address) {
    let mut l = Ledger::new(KvVm);
    let (a, r) = l.deploy(alice(), b"kv".to_vec(), Storage::new()).unwrap();
    assert!(r.accepted());
    (l, a)
}

#[test]
fn deploy_gas_and_address() {
    let mut l = Ledger::new(KvVm);
    let (a, r) = l.deploy(alice(), b"kv".to_vec(), Storage::new()).unwrap();
    assert_eq!(r.gas_used, 32_000 + 200 * 2);
    assert_eq!(a, derive_address(alice(), 0));
    let (b, _) = l.deploy(alice(), b"kv".to_vec(), Storage::new()).unwrap();
    assert_ne!(a, b);
    assert_eq!(l.block(), 2);
}

#[test]
fn fresh_slot_write_costs() {
    let (mut l, a) = fresh();
    let r = l.send(alice(), a, "set", vec![Value::uint(1), Value::uint(7)]).unwrap();
    assert_eq!(r.gas_used, 21_000 + 20_000);
    let r = l.send(alice(), a, "set", vec![Value::uint(1), Value::uint(8)]).unwrap();
    assert_eq!(r.gas_used, 21_000 + 5_000);
    // same value again
    let r = l.send(alice(), a, "set", vec![Value::uint(1), Value::uint(8)]).unwrap();
    assert_eq!(r.gas_used, 21_000 + 200);
    assert_eq!(l.call(a, "get", &[Value::uint(1)]).unwrap(), vec![Value::uint(8)]);
}

#[test]
fn rejected_tx_leaves_no_trace() {
    let (mut l, a) = fresh();
    l.send(alice(), a, "set", vec![Value::uint(2), Value::uint(1)]).unwrap();
    let before = l.snapshot();
    let r = l.send(alice(), a, "setThenFail", vec![Value::uint(2), Value::uint(3)]).unwrap();
    assert_eq!(r.reason(), Some("require(false)"));
    assert!(r.logs.is_empty());
    // charged up to the revert: base, update, one log
    assert_eq!(r.gas_used, 21_000 + 5_000 + 375 + 8 * 32);
    let after = l.snapshot();
    assert_eq!(before.accounts, after.accounts);
    assert_eq!(before.logs, after.logs);
    assert_eq!(l.storage_at(a, "k2"), Word::from_u64(1));
}

#[test]
fn nested_revert_aborts_everything() {
    let (mut l, a) = fresh();
    let (b, _) = l.deploy(alice(), b"kv".to_vec(), Storage::new()).unwrap();
    let r = l
        .send(alice(), a, "forwardFail", vec![Value::Address(b), Value::uint(1), Value::uint(1)])
        .unwrap();
    assert!(!r.accepted());
    assert_eq!(l.storage_at(a, "k0"), Word::ZERO);
    assert_eq!(l.storage_at(b, "k1"), Word::ZERO);
    let r = l.send(alice(), a, "forward", vec![Value::Address(b), Value::uint(1), Value::uint(4)]).unwrap();
    assert!(r.accepted());
    assert_eq!(l.storage_at(b, "k1"), Word::from_u64(4));
}

#[test]
fn nested_sender_is_caller() {
    let (mut l, a) = fresh();
    l.send(alice(), a, "whoami", vec![]).unwrap();
    assert_eq!(l.storage_at(a, "k0"), alice().to_word());
}

#[test]
fn nested_create() {
    let (mut l, a) = fresh();
    let r = l.send(alice(), a, "spawn", vec![]).unwrap();
    let child = r.output[0].as_address().unwrap();
    assert_eq!(child, derive_address(a, 0));
    assert_eq!(l.storage_at(child, "k1"), Word::from_u64(5));
    // base, child deploy (init storage is free), no other writes
    assert_eq!(r.gas_used, 21_000 + 32_000 + 200 * 8);
    let r = l.send(alice(), a, "spawn", vec![]).unwrap();
    assert_eq!(r.output[0].as_address().unwrap(), derive_address(a, 1));
}

#[test]
fn read_only_calls() {
    let (l, a) = fresh();
    assert_eq!(l.call(a, "get", &[Value::uint(3)]).unwrap(), vec![Value::uint(0)]);
    assert_eq!(l.call(a, "set", &[Value::uint(3), Value::uint(1)]), Err(LedgerError::NotReadOnly("set".into())));
    let nobody = Address::from_label("nobody");
    assert_eq!(l.call(nobody, "get", &[]), Err(LedgerError::UnknownTarget(nobody)));
}

#[test]
fn nonce_and_target_errors() {
    let (mut l, a) = fresh();
    let tx = Transaction { sender: alice(), nonce: 5, kind: TxKind::Call { target: a, op: "emit".into(), args: vec![] } };
    assert!(matches!(l.submit(tx), Err(LedgerError::NonceGap { expected: 1, got: 5, .. })));
    let nobody = Address::from_label("nobody");
    assert_eq!(l.send(alice(), nobody, "set", vec![]), Err(LedgerError::UnknownTarget(nobody)));
    assert_eq!(l.history().len(), 1);
}

#[test]
fn logs_and_filters() {
    let (mut l, a) = fresh();
    assert!(Ledger::new(KvVm).poll_logs(&LogFilter::default()).is_empty());
    let r = l.send(alice(), a, "emit", vec![Value::uint(1), Value::uint(2)]).unwrap();
    assert_eq!(r.gas_used, 21_000 + 375 + 8 * 64);
    l.send(alice(), a, "emit", vec![]).unwrap();
    let all = l.poll_logs(&LogFilter { emitter: Some(a), ..Default::default() });
    assert_eq!(all.len(), 2);
    assert_eq!((all[0].block, all[0].index), (2, 0));
    let later = l.poll_logs(&LogFilter { from_block: 3, name: Some("Ping".into()), ..Default::default() });
    assert_eq!(later.len(), 1);
    assert!(l.poll_logs(&LogFilter { name: Some("Pong".into()), ..Default::default() }).is_empty());
}

#[test]
fn snapshot_round_trip() {
    let (mut l, a) = fresh();
    l.send(alice(), a, "set", vec![Value::uint(1), Value::uint(7)]).unwrap();
    l.send(alice(), a, "emit", vec![Value::uint(1)]).unwrap();
    let s = l.snapshot();
    let back = Ledger::from_snapshot(KvVm, &Snapshot::from_json(&s.to_json()).unwrap()).unwrap();
    assert_eq!(back.snapshot(), s);
    let mut bad = s.clone();
    bad.codes.values_mut().for_each(|c| c.push_str("00"));
    assert!(Ledger::from_snapshot(KvVm, &bad).is_err());
}

#[test]
fn shared_ledger_serializes_threads() {
    let (l, a) = fresh();
    let shared = SharedLedger::new(l);
    let handles: Vec<_> = (0..4)
        .map(|t| {
            let s = shared.clone();
            std::thread::spawn(move || {
                let sender = Address::from_label(&format!("t{t}"));
                for i in 0..10 {
                    s.write(|l| l.send(sender, a, "set", vec![Value::uint(t), Value::uint(i + 1)])).unwrap();
                    let _ = s.call(a, "get", &[Value::uint(t)]).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let l = shared.read();
    assert_eq!(l.block(), 41);
    for t in 0..4 {
        assert_eq!(l.storage_at(a, &format!("k{t}")), Word::from_u64(10));
    }
}

#[test]
fn schedule_constants_positive() {
    assert!(GasSchedule::default().validate().is_ok());
    let s = GasSchedule { log_byte: 0, ..GasSchedule::default() };
    assert!(s.validate().is_err());
}

#[derive(Debug, Clone)]
enum Op {
    Set(u64, u64),
    Fail(u64, u64),
    Emit(u8),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u64..4, 0u64..3).prop_map(|(k, v)| Op::Set(k, v)),
        (0u64..4, 1u64..3).prop_map(|(k, v)| Op::Fail(k, v)),
        (0u8..3).prop_map(Op::Emit),
    ]
}

fn run(ops: &[Op]) -> Ledger<KvVm> {
    let (mut l, a) = fresh();
    for o in ops {
        let (name, args) = match o {
            Op::Set(k, v) => ("set", vec![Value::uint(*k), Value::uint(*v)]),
            Op::Fail(k, v) => ("setThenFail", vec![Value::uint(*k), Value::uint(*v)]),
            Op::Emit(n) => ("emit", (0..*n as u64).map(Value::uint).collect()),
        };
        l.send(alice(), a, name, args).unwrap();
    }
    l
}

proptest! {
    #[test]
    fn atomicity_under_random_reverts(ops in proptest::collection::vec(op(), 0..30)) {
        let (mut l, a) = fresh();
        for o in &ops {
            let before = l.snapshot();
            let (name, args) = match o {
                Op::Set(k, v) => ("set", vec![Value::uint(*k), Value::uint(*v)]),
                Op::Fail(k, v) => ("setThenFail", vec![Value::uint(*k), Value::uint(*v)]),
                Op::Emit(n) => ("emit", (0..*n as u64).map(Value::uint).collect()),
            };
            let r = l.send(alice(), a, name, args).unwrap();
            let after = l.snapshot();
            if !r.accepted() {
                prop_assert_eq!(&before.accounts, &after.accounts);
                prop_assert_eq!(&before.logs, &after.logs);
            }
        }
    }

    #[test]
    fn identical_sequences_identical_ledgers(ops in proptest::collection::vec(op(), 0..30)) {
        let a = run(&ops).snapshot();
        let b = run(&ops).snapshot();
        prop_assert_eq!(&a, &b);
        let replayed = Ledger::replay(KvVm, a.schedule, a.transactions.clone()).unwrap().snapshot();
        prop_assert_eq!(a, replayed);
    }
}
