//! Worklist and service bridge contracts. A `<f>_Start` call from an instance
//! opens a workitem; the check-in `<f>(id, ...)` forwards to `<f>_Complete`.

use crate::ledger::{Host, Revert};
use crate::value::Value;
use crate::word::Word;

use super::{arg_address, arg_u64, check_args, hash_word, load_addr, revert, store_addr, ResourceCode};

pub fn execute(r: &ResourceCode, h: &mut dyn Host, op: &str, args: &[Value]) -> Result<Vec<Value>, Revert> {
    match op {
        "workitemCount" => Ok(vec![Value::Uint(h.sload("wi.len")?)]),
        "processHash" => Ok(vec![Value::Bytes32(hash_word(&r.process)?)]),
        "elementIndexFor" => {
            let id = existing(h, args)?;
            Ok(vec![Value::Uint(h.sload(&format!("wi.{id}.elem"))?)])
        }
        "instanceFor" => {
            let id = existing(h, args)?;
            Ok(vec![Value::Address(load_addr(h, &format!("wi.{id}.inst"))?)])
        }
        "workitemsFor" => {
            // open workitems of one element in one instance
            let elem = arg_u64(args, 0)?;
            let inst = arg_address(args, 1)?;
            let n = h.sload("wi.len")?.to_u64().unwrap_or(0);
            let mut out = Vec::new();
            for id in 0..n {
                if h.sload(&format!("wi.{id}.elem"))?.to_u64() == Some(elem)
                    && load_addr(h, &format!("wi.{id}.inst"))? == inst
                    && h.sload(&format!("wi.{id}.done"))?.is_zero()
                {
                    out.push(Value::uint(id));
                }
            }
            Ok(out)
        }
        _ => {
            if let Some(f) = op.strip_suffix("_Start").and_then(|f| r.function(f)) {
                check_args(&f.exports, args, &r.decls)?;
                let id = h.sload("wi.len")?.to_u64().unwrap_or(0);
                let sender = h.sender();
                store_addr(h, &format!("wi.{id}.inst"), sender)?;
                h.sstore(&format!("wi.{id}.elem"), Word::from_u64(f.element as u64))?;
                h.sstore("wi.len", Word::from_u64(id + 1))?;
                let mut payload = vec![Value::uint(id)];
                payload.extend(args.iter().cloned());
                h.emit(&format!("{}_Requested", f.function), payload)?;
                return Ok(vec![Value::uint(id)]);
            }
            let Some(f) = r.function(op) else {
                return revert(format!("UnknownOperation {op}"));
            };
            let id = existing(h, args)?;
            if h.sload(&format!("wi.{id}.elem"))?.to_u64() != Some(f.element as u64) {
                return revert(format!("WrongElement: workitem {id} is not for {}", f.function));
            }
            if !h.sload(&format!("wi.{id}.done"))?.is_zero() {
                return revert(format!("AlreadyCompleted: workitem {id}"));
            }
            check_args(&f.imports, &args[1..], &r.decls)?;
            h.sstore(&format!("wi.{id}.done"), Word::from_u64(1))?;
            let inst = load_addr(h, &format!("wi.{id}.inst"))?;
            h.call(inst, &format!("{}_Complete", f.function), &args[1..])?;
            h.emit("WorkitemCompleted", vec![Value::uint(id), Value::uint(f.element as u64)])?;
            Ok(vec![])
        }
    }
}

fn existing(h: &mut dyn Host, args: &[Value]) -> Result<u64, Revert> {
    let id = arg_u64(args, 0).map_err(|_| Revert::new("BadWorkitemId"))?;
    let n = h.sload("wi.len")?.to_u64().unwrap_or(0);
    if id >= n {
        return revert(format!("BadWorkitemId: {id}"));
    }
    Ok(id)
}
