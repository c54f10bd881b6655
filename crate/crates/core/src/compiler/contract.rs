//! Optimized-mode model rewriting: exclusive merges with a single outgoing
//! flow are folded into their successor, which then merges the flows itself.

use crate::model::{GatewayKind, NodeKind, ProcessModel};

pub fn contract_model(m: &ProcessModel) -> ProcessModel {
    let mut out = m.clone();
    loop {
        let Some((g, out_edge, target)) = out.nodes.iter().find_map(|n| {
            if n.kind != NodeKind::Gateway(GatewayKind::Exclusive) {
                return None;
            }
            let outs: Vec<_> = out.outgoing(&n.id).collect();
            if outs.len() != 1 || outs[0].condition.is_some() || out.incoming(&n.id).next().is_none() {
                return None;
            }
            let target = out.node(&outs[0].target)?;
            if matches!(target.kind, NodeKind::Gateway(GatewayKind::Parallel)) || target.id == n.id {
                return None;
            }
            Some((n.id.clone(), outs[0].id.clone(), target.id.clone()))
        }) else {
            return out;
        };
        out.edges.retain(|e| e.id != out_edge);
        for e in out.edges.iter_mut().filter(|e| e.target == g) {
            e.target = target.clone();
        }
        out.nodes.retain(|n| n.id != g);
    }
}
