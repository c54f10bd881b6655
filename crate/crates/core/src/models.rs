//! Example process models shipped with the crate.

pub const ORDER_TO_CASH: &str = include_str!("../models/order_to_cash.bpmn");

/// Error, escalation and signal propagation across a multi-instance
/// subprocess with nested subprocesses and a called process.
pub const NESTED_EVENTS: &str = include_str!("../models/nested_events.bpmn");
